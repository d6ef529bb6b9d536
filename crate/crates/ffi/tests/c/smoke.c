#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include "ksduo.h"

#define CHECK(cond)                                                   \
    do {                                                              \
        if (!(cond)) {                                                \
            fprintf(stderr, "line %d: %s (%s)\n", __LINE__, #cond,    \
                    ksduo_last_error());                              \
            return 1;                                                 \
        }                                                             \
    } while (0)

int main(void) {
    KsduoParams *p = ksduo_params_new();
    CHECK(p != NULL);
    double chi;
    CHECK(ksduo_chi_tilde(p, 1, &chi) == KSDUO_STATUS_OK);
    CHECK(fabs(chi - 61.0) < 0.05);

    CHECK(ksduo_params_set(p, "nope", 1.0) == KSDUO_STATUS_INVALID_ARGUMENT);
    CHECK(ksduo_params_set(p, "a1", 1.5) == KSDUO_STATUS_OK);
    CHECK(ksduo_params_validate(p) == KSDUO_STATUS_INVALID_PARAMS);
    CHECK(ksduo_params_set(p, "a1", 0.5) == KSDUO_STATUS_OK);

    CHECK(ksduo_params_set(p, "chi", 100.0) == KSDUO_STATUS_OK);
    KsduoSolverOptions opts = ksduo_solver_options_default();
    opts.t_end = 1.0;
    KsduoTrajectory *t = NULL;
    CHECK(ksduo_simulate(p, &opts, &t) == KSDUO_STATUS_OK);
    size_t n = ksduo_trajectory_cells(t);
    CHECK(n == 50);
    double *u = malloc(n * sizeof *u);
    size_t last = ksduo_trajectory_snapshots(t) - 1;
    CHECK(ksduo_trajectory_field(t, last, KSDUO_FIELD_U, u, n) == KSDUO_STATUS_OK);
    CHECK(u[0] > 0.0);
    free(u);
    ksduo_trajectory_free(t);
    ksduo_params_free(p);
    puts("ok");
    return 0;
}
