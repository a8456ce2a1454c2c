#pragma once

#include <string>

#include "dgr/types.hpp"

namespace dgr {

// Tile a batch of images (one column each, values in [0,1]) into a grid and
// write it as binary PGM (1 channel) or PPM (3 channels). Tiles fill
// row-major: image k lands at (k / grid_cols, k % grid_cols).
void write_image_grid(const std::string& path, const MatrixF& images,
                      const ImageShape& shape, int grid_rows, int grid_cols);

}  // namespace dgr
