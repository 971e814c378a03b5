/* Compiles the public header as C and exercises a handle round trip. */
#include <stdio.h>

#include "susbench/susbench.h"

int main(void) {
  sb_lsf* lsf = NULL;
  double u[2] = {0.0, 0.0};
  double g = 0.0;
  if (sb_lsf_create("product", NULL, NULL, 0, &lsf) != SB_OK) return 1;
  if (sb_lsf_evaluate(lsf, u, &g) != SB_OK) return 1;
  sb_lsf_destroy(lsf);
  if (g < 6.0 - 1e-12 || g > 6.0 + 1e-12) {
    fprintf(stderr, "unexpected value %g\n", g);
    return 1;
  }
  return 0;
}
