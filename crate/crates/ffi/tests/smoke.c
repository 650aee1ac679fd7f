#include <math.h>
#include <stdio.h>
#include <string.h>

#include "fbs.h"

static int check(FbsStatus s, const char *what) {
    if (s != FBS_STATUS_OK) {
        fprintf(stderr, "%s: status %d: %s\n", what, (int)s, fbs_last_error_message());
        return 1;
    }
    return 0;
}

int main(void) {
    FbsModel model = {0.0, 1.0, INFINITY};
    FbsBelief prior = {0.0, 1e6};
    FbsEstimator *est = NULL;
    if (check(fbs_estimator_new(&prior, &model, 0, &est), "new")) return 1;

    for (int i = 0; i < 15; i++) {
        FbsProbe probe;
        if (check(fbs_estimator_next_probe(est, &probe), "next_probe")) return 1;
        if (check(fbs_estimator_observe(est, (i % 3) ? 1 : -1, NULL), "observe")) return 1;
    }
    FbsBelief b;
    if (check(fbs_estimator_belief(est, &b), "belief")) return 1;
    double expected = 1e6 * pow(1.0 - exp(-1.0), 7.5);
    if (fabs(b.sigma / expected - 1.0) > 1e-9 || fbs_estimator_steps(est) != 15) {
        fprintf(stderr, "sigma %.17g, expected %.17g\n", b.sigma, expected);
        return 1;
    }

    FbsStep step;
    if (fbs_estimator_step(est, 15, &step) != FBS_STATUS_INDEX_OUT_OF_RANGE) return 1;
    if (strlen(fbs_last_error_message()) == 0) return 1;
    fbs_estimator_free(est);

    FbsModel bad = {0.5, 0.9, 1e-5};
    if (fbs_estimator_new(&prior, &bad, 0, &est) != FBS_STATUS_INVALID_PARAMETER || est != NULL) return 1;

    printf("ok %s\n", fbs_version());
    return 0;
}
