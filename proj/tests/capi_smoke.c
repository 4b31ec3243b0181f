#include "lcov.h"

#include <stdio.h>

int main(void) {
  lcov_bank *bank = NULL;
  lcov_measurements m;
  double px[64 * 64];
  lcov_image *img = NULL;
  lcov_covmap *cm = NULL;
  for (int i = 0; i < 64 * 64; ++i)
    px[i] = (double)((i * 7919) % 251);
  if (lcov_image_from_data(64, 64, px, &img) != LCOV_OK || lcov_bank_oriented(4, 9, 3.0, &bank) != LCOV_OK ||
      lcov_covmap_extract(img, bank, 8, 2, LCOV_WINDOW_GAUSSIAN, 0.0, &cm) != LCOV_OK ||
      lcov_covmap_measurements(cm, &m) != LCOV_OK) {
    fprintf(stderr, "%s\n", lcov_last_error());
    return 1;
  }
  lcov_covmap_free(cm);
  lcov_bank_free(bank);
  lcov_image_free(img);
  return m.total == 1024 * 10 ? 0 : 1;
}
