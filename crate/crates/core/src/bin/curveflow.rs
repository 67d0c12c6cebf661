fn main() {
    curveflow::cli::init_logging();
    std::process::exit(curveflow::cli::main_with_args(std::env::args_os()));
}
