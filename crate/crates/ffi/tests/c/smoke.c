#include <math.h>
#include <stdio.h>
#include "shuffle_spectra.h"

int main(void) {
    double re = 0, im = 0;
    if (ss_solve_zeta(1, &re, &im) != SS_STATUS_OK) return 1;
    if (fabs(re - 2.0888430156) > 1e-8 || fabs(im - 7.4614892857) > 1e-8) return 2;

    SsStatistic *h = NULL;
    if (ss_statistic_new_branch(1024, 1, &h) != SS_STATUS_OK) return 3;
    double bound = -1;
    if (ss_statistic_tv_lower_bound(h, 0, &bound) != SS_STATUS_OK) return 4;
    if (!(bound > 0 && bound <= 1)) return 5;
    ss_statistic_free(h);

    if (ss_statistic_new_branch(4, 2, &h) == SS_STATUS_OK) return 6;
    if (ss_last_error() == NULL) return 7;

    double tv[3];
    uint64_t tau = 0;
    if (ss_exact_tv_curve(2, SS_RULE_STAR, 0.1, 2, tv, 3, &tau) != SS_STATUS_OK) return 8;
    if (tau != 1) return 9;
    printf("ok %s\n", ss_version());
    return 0;
}
