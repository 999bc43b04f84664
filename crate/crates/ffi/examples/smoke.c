/* Minimal usage of the ppde C interface: build a path, query the hitting
 * index, run one lattice expectation, and evaluate the resolvent norm.
 *
 * Build (from the repository root, after `cargo build -p ppde-ffi --release`):
 *   cc crates/ffi/examples/smoke.c -Icrates/ffi/include \
 *      target/release/libppde_ffi.a -lpthread -ldl -lm -o smoke
 */
#include <stdio.h>
#include "ppde.h"

int main(void) {
    double flat[11] = {0};
    PpdePath *path = NULL;
    if (ppde_path_new(flat, 11, 1, 0.1, &path) != PpdeStatus_Ok) {
        fprintf(stderr, "path: %s\n", ppde_last_error());
        return 1;
    }

    size_t crossing = 0;
    ppde_hitting_index(path, 0.35, &crossing);
    printf("hitting index at level 0.35: %zu\n", crossing);

    double drift[3] = {-1.0, 0.0, 1.0};
    double var[2] = {0.0, 1.0};
    PpdeLattice lattice = {
        .l_bound = 1.0,
        .n_steps = 5,
        .dt = 0.1,
        .drift = drift,
        .drift_len = 3,
        .var = var,
        .var_len = 2,
        .max_nodes = 0,
    };
    double value = 0.0;
    char digest[65] = {0};
    if (ppde_expectation(&lattice, "time", 0.35, PpdeMode_Sup, &value, digest) != PpdeStatus_Ok) {
        fprintf(stderr, "expectation: %s\n", ppde_last_error());
        return 1;
    }
    printf("clipped-time optimum: %.6f (policy %s)\n", value, digest);

    double history[2049] = {0};
    double norm = 0.0;
    ppde_resolvent_norm(1.0, history, 2049, 1.0 / 2048.0, &norm);
    printf("resolvent norm of the pure head state: %.8f\n", norm);

    ppde_path_free(path);
    return 0;
}
