#pragma once

#include <vector>

#include "bcskit/linalg.hpp"

namespace bcskit {

// Grayscale image, row-major doubles. Nominal range is [0, 255] but values may
// leave it mid-pipeline; only PGM output clamps.
struct Image {
  int height = 0;
  int width = 0;
  std::vector<double> data;

  Image() = default;
  Image(int h, int w, double fill = 0.0)
      : height(h), width(w), data(static_cast<std::size_t>(h) * w, fill) {}

  double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

  std::size_t size() const { return data.size(); }
};

// Row-major tiling of an image into B x B blocks. The source dimensions are
// kept so reassemble can crop away the replication padding.
struct BlockGrid {
  int block_size = 0;
  int grid_rows = 0;
  int grid_cols = 0;
  int orig_height = 0;
  int orig_width = 0;
  std::vector<Image> blocks;
};

// Splits into B x B blocks, padding the right and bottom edges by replication
// when the dimensions are not multiples of B.
BlockGrid partition(const Image& img, int block_size);

// Inverse of partition: tiles the blocks and crops to the original size.
// Validates the block count and shapes.
Image reassemble(const BlockGrid& grid);

Matrix image_to_matrix(const Image& img);
Image matrix_to_image(const Matrix& m);

}  // namespace bcskit
