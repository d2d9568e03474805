#include <stdio.h>
#include <string.h>
#include "laxgrid.h"

int main(void) {
    LaxgridMap *map = NULL;
    if (laxgrid_map_parse("torus_linear:2,1,1,1", 2, &map) != LAXGRID_STATUS_OK) return 1;
    double p[2] = {0.1, 0.2}, y[2];
    if (laxgrid_map_eval(map, p, y) != LAXGRID_STATUS_OK) return 2;
    LaxgridPermutation *perm = NULL;
    double bound = -1.0;
    if (laxgrid_lax_approximate(map, 3, 8, LAXGRID_MODE_CYCLIC, &perm, &bound) != LAXGRID_STATUS_OK) return 3;
    if (laxgrid_permutation_len(perm) != 64 || laxgrid_permutation_cycle_count(perm) != 1) return 4;
    LaxgridMap *bad = NULL;
    if (laxgrid_map_parse("warp:1", 2, &bad) != LAXGRID_STATUS_CONFIG_ERROR) return 5;
    if (strstr(laxgrid_last_error(), "ConfigError") == NULL) return 6;
    printf("%.6f %.6f %.6f\n", y[0], y[1], bound);
    laxgrid_permutation_free(perm);
    laxgrid_map_free(map);
    return 0;
}
