#include "bcskit/image.hpp"

#include <algorithm>
#include <stdexcept>

namespace bcskit {

BlockGrid partition(const Image& img, int block_size) {
  if (block_size <= 0)
    throw std::invalid_argument("partition: block size must be positive");
  if (img.height <= 0 || img.width <= 0)
    throw std::invalid_argument("partition: empty image");
  BlockGrid grid;
  grid.block_size = block_size;
  grid.orig_height = img.height;
  grid.orig_width = img.width;
  grid.grid_rows = (img.height + block_size - 1) / block_size;
  grid.grid_cols = (img.width + block_size - 1) / block_size;
  grid.blocks.reserve(static_cast<std::size_t>(grid.grid_rows) * grid.grid_cols);
  for (int br = 0; br < grid.grid_rows; ++br) {
    for (int bc = 0; bc < grid.grid_cols; ++bc) {
      Image block(block_size, block_size);
      for (int r = 0; r < block_size; ++r) {
        int sr = std::min(br * block_size + r, img.height - 1);
        for (int c = 0; c < block_size; ++c) {
          int sc = std::min(bc * block_size + c, img.width - 1);
          block.at(r, c) = img.at(sr, sc);
        }
      }
      grid.blocks.push_back(std::move(block));
    }
  }
  return grid;
}

Image reassemble(const BlockGrid& grid) {
  int b = grid.block_size;
  if (b <= 0 || grid.grid_rows <= 0 || grid.grid_cols <= 0)
    throw std::invalid_argument("reassemble: empty grid");
  if (static_cast<int>(grid.blocks.size()) != grid.grid_rows * grid.grid_cols)
    throw std::invalid_argument("reassemble: block count disagrees with grid");
  for (const auto& blk : grid.blocks)
    if (blk.height != b || blk.width != b)
      throw std::invalid_argument("reassemble: block shape disagrees");
  if (grid.orig_height <= 0 || grid.orig_height > grid.grid_rows * b ||
      grid.orig_width <= 0 || grid.orig_width > grid.grid_cols * b)
    throw std::invalid_argument("reassemble: original size out of range");
  Image out(grid.orig_height, grid.orig_width);
  for (int br = 0; br < grid.grid_rows; ++br) {
    int rmax = std::min(b, grid.orig_height - br * b);
    if (rmax <= 0) continue;
    for (int bc = 0; bc < grid.grid_cols; ++bc) {
      int cmax = std::min(b, grid.orig_width - bc * b);
      if (cmax <= 0) continue;
      const Image& blk = grid.blocks[static_cast<std::size_t>(br) * grid.grid_cols + bc];
      for (int r = 0; r < rmax; ++r)
        for (int c = 0; c < cmax; ++c)
          out.at(br * b + r, bc * b + c) = blk.at(r, c);
    }
  }
  return out;
}

Matrix image_to_matrix(const Image& img) {
  Matrix m(img.height, img.width);
  m.data = img.data;
  return m;
}

Image matrix_to_image(const Matrix& m) {
  Image img(m.rows, m.cols);
  img.data = m.data;
  return img;
}

}  // namespace bcskit
