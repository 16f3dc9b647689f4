/* cc -Icrates/ffi/include crates/ffi/examples/decompose.c -Ltarget/release -lmmdecomp_ffi */
#include <stdio.h>

#include "mmdecomp.h"

int main(void) {
    MmMatrix *u = NULL, *back = NULL;
    MmPlan *plan = NULL;
    size_t n, m, count;
    double f;

    if (mm_matrix_haar_random(8, 42, &u) != MM_STATUS_OK ||
        mm_decompose(u, 3, -1.0, &plan) != MM_STATUS_OK ||
        mm_plan_reconstruct(plan, &back) != MM_STATUS_OK ||
        mm_fidelity(u, back, &f) != MM_STATUS_OK) {
        fprintf(stderr, "error: %s\n", mm_last_error_message());
        return 1;
    }
    mm_plan_info(plan, &n, &m, &count);
    printf("n=%zu m=%zu factors=%zu fidelity=%.15f\n", n, m, count, f);

    mm_matrix_free(back);
    mm_plan_free(plan);
    mm_matrix_free(u);
    return 0;
}
