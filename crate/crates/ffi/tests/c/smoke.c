#include <stdio.h>
#include <string.h>
#include "curveflow.h"

static const char *CONFIG =
    "{\"problem\": {\"space\": {\"kind\": \"euclid\", \"annulus\": [0.5, 2.0]},"
    " \"function\": {\"family\": \"mean\", \"n\": 1}, \"mode\": \"contracting\","
    " \"data\": {\"family\": \"power_law\", \"q\": 3.0, \"phi\": {\"constant\": 1.0}}},"
    " \"numerics\": {\"grid\": 32, \"tol\": 1e-8}}";

int main(void) {
    CfProblem *problem = NULL;
    if (cf_problem_new(CONFIG, &problem) != CF_OK) {
        fprintf(stderr, "problem: %s\n", cf_last_error_message());
        return 1;
    }
    CfResult *result = NULL;
    if (cf_solve(problem, &result) != CF_OK) {
        fprintf(stderr, "solve: %s\n", cf_last_error_message());
        return 1;
    }
    int converged = 0;
    size_t len = 0;
    cf_result_converged(result, &converged);
    cf_result_profile_len(result, &len);
    double values[64];
    if (len > 64 || cf_result_profile_copy(result, values, 64) != CF_OK) return 1;
    double worst = 0.0;
    for (size_t i = 0; i < len; i++) {
        double d = values[i] > 1.0 ? values[i] - 1.0 : 1.0 - values[i];
        if (d > worst) worst = d;
    }
    if (cf_problem_new("{", &problem) != CF_CONFIG || strlen(cf_last_error_message()) == 0) return 1;
    cf_result_free(result);
    printf("converged=%d len=%zu worst=%g\n", converged, len, worst);
    return converged == 1 && len == 32 && worst < 1e-6 ? 0 : 1;
}
