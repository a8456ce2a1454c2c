#include "dgr/pnm.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <vector>

namespace dgr {

void write_image_grid(const std::string& path, const MatrixF& images,
                      const ImageShape& shape, int grid_rows, int grid_cols) {
  DGR_CHECK(shape.channels == 1 || shape.channels == 3,
            "image grid supports 1 or 3 channels");
  DGR_CHECK(images.rows() == Index(shape.size()), "image grid: shape mismatch");
  DGR_CHECK(images.cols() <= Index(grid_rows) * grid_cols, "image grid: too many tiles");

  const int H = shape.height, W = shape.width, C = shape.channels;
  const int out_h = grid_rows * H, out_w = grid_cols * W;
  std::vector<std::uint8_t> canvas(size_t(out_h) * out_w * C, 0);

  for (Index k = 0; k < images.cols(); ++k) {
    const int ty = int(k) / grid_cols, tx = int(k) % grid_cols;
    const float* img = images.col(k).data();
    for (int c = 0; c < C; ++c)
      for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
          float v = img[c * H * W + y * W + x];
          v = std::min(1.0f, std::max(0.0f, v));
          const size_t row = size_t(ty) * H + y, col = size_t(tx) * W + x;
          canvas[(row * out_w + col) * C + c] = std::uint8_t(std::lround(v * 255.0f));
        }
  }

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open image file for writing: " + path);
  f << (C == 1 ? "P5" : "P6") << "\n" << out_w << " " << out_h << "\n255\n";
  f.write(reinterpret_cast<const char*>(canvas.data()), std::streamsize(canvas.size()));
  if (!f) throw Error("image write failed: " + path);
}

}  // namespace dgr
