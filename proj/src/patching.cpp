#include "sdn/patching.hpp"

#include <algorithm>
#include <stdexcept>

namespace sdn {

namespace {

void check_grid(const patch_grid& g) {
  if (g.patch_side <= 0 || g.stride <= 0) throw std::invalid_argument("patching: bad grid");
  if (g.patch_side > g.image_width || g.patch_side > g.image_height)
    throw std::invalid_argument("patching: patch larger than image");
}

// Smallest/largest patch positions (multiples of stride) covering coordinate c.
inline int first_pos(int c, int side, int stride) {
  const int lo = std::max(0, c - side + 1);
  return ((lo + stride - 1) / stride) * stride;
}
inline int last_pos(int c, int extent, int side, int stride) {
  const int hi = std::min(c, extent - side);
  return (hi / stride) * stride;
}

}  // namespace

patch_matrix extract_patches(const image& img, int patch_side, int stride, exec_policy policy) {
  patch_grid grid{patch_side, stride, img.width, img.height};
  check_grid(grid);
  const int pr = grid.rows_of_patches();
  const int pc = grid.cols_of_patches();
  const Eigen::Index m = static_cast<Eigen::Index>(patch_side) * patch_side;
  patch_matrix out;
  out.grid = grid;
  out.data.resize(m, static_cast<Eigen::Index>(pr) * pc);
  for_each_index(static_cast<std::int64_t>(pr) * pc, policy, [&](std::int64_t j) {
    const int py = static_cast<int>(j / pc) * stride;
    const int px = static_cast<int>(j % pc) * stride;
    double* col = out.data.col(j).data();
    for (int r = 0; r < patch_side; ++r)
      for (int c = 0; c < patch_side; ++c)
        col[r * patch_side + c] = img.at(px + c, py + r);
  });
  return out;
}

image reconstruct_from_patches(const patch_matrix& estimates, const patch_grid& grid,
                               const image* fallback, exec_policy policy) {
  check_grid(grid);
  if (estimates.data.rows() != static_cast<Eigen::Index>(grid.patch_side) * grid.patch_side ||
      estimates.data.cols() != grid.columns())
    throw std::invalid_argument("reconstruct_from_patches: grid/matrix mismatch");
  const int side = grid.patch_side;
  const int stride = grid.stride;
  const int pc = grid.cols_of_patches();
  image out(grid.image_width, grid.image_height);
  if (fallback && (fallback->width != grid.image_width || fallback->height != grid.image_height))
    throw std::invalid_argument("reconstruct_from_patches: fallback dimension mismatch");

  for_each_index(static_cast<std::int64_t>(grid.image_height), policy, [&](std::int64_t yy) {
    const int y = static_cast<int>(yy);
    const int py0 = first_pos(y, side, stride);
    const int py1 = last_pos(y, grid.image_height, side, stride);
    for (int x = 0; x < grid.image_width; ++x) {
      const int px0 = first_pos(x, side, stride);
      const int px1 = last_pos(x, grid.image_width, side, stride);
      double sum = 0.0;
      int count = 0;
      for (int py = py0; py <= py1; py += stride) {
        for (int px = px0; px <= px1; px += stride) {
          const Eigen::Index j =
              static_cast<Eigen::Index>(py / stride) * pc + (px / stride);
          sum += estimates.data((y - py) * side + (x - px), j);
          ++count;
        }
      }
      if (count == 0) {
        if (!fallback)
          throw std::invalid_argument(
              "reconstruct_from_patches: uncovered pixels require a fallback image");
        out.at(x, y) = std::clamp(fallback->at(x, y), 0.0, 255.0);
      } else {
        out.at(x, y) = std::clamp(sum / count, 0.0, 255.0);
      }
    }
  });
  return out;
}

std::vector<int> coverage_counts(const patch_grid& grid) {
  check_grid(grid);
  std::vector<int> counts(static_cast<std::size_t>(grid.image_width) * grid.image_height, 0);
  for (int y = 0; y < grid.image_height; ++y) {
    const int py0 = first_pos(y, grid.patch_side, grid.stride);
    const int py1 = last_pos(y, grid.image_height, grid.patch_side, grid.stride);
    for (int x = 0; x < grid.image_width; ++x) {
      const int px0 = first_pos(x, grid.patch_side, grid.stride);
      const int px1 = last_pos(x, grid.image_width, grid.patch_side, grid.stride);
      int n = 0;
      for (int py = py0; py <= py1; py += grid.stride)
        for (int px = px0; px <= px1; px += grid.stride) ++n;
      counts[static_cast<std::size_t>(y) * grid.image_width + x] = n;
    }
  }
  return counts;
}

}  // namespace sdn
