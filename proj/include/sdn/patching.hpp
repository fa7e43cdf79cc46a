#ifndef SDN_PATCHING_HPP
#define SDN_PATCHING_HPP

#include <Eigen/Core>

#include "sdn/exec.hpp"
#include "sdn/image.hpp"

namespace sdn {

// Layout of a sliding-window patch decomposition. Patch positions scan
// top-to-bottom, left-to-right: column index = row_pos * cols_per_row + col_pos.
struct patch_grid {
  int patch_side = 0;
  int stride = 1;
  int image_width = 0;
  int image_height = 0;

  int rows_of_patches() const { return (image_height - patch_side) / stride + 1; }
  int cols_of_patches() const { return (image_width - patch_side) / stride + 1; }
  Eigen::Index columns() const {
    return static_cast<Eigen::Index>(rows_of_patches()) * cols_of_patches();
  }
};

// M x N matrix of vectorized patches; column j is the row-major vectorization
// of patch j.
struct patch_matrix {
  Eigen::MatrixXd data;
  patch_grid grid;
};

patch_matrix extract_patches(const image& img, int patch_side, int stride,
                             exec_policy policy = exec_policy::serial);

// Each output pixel is the arithmetic mean of all patch-estimate values
// covering it (accumulated in patch scan order, so the result does not depend
// on the execution policy). Pixels covered by no patch are copied from
// `fallback`, which must be supplied when the grid leaves gaps. The result is
// clamped to [0, 255].
image reconstruct_from_patches(const patch_matrix& estimates, const patch_grid& grid,
                               const image* fallback = nullptr,
                               exec_policy policy = exec_policy::serial);

// Number of patches covering each pixel (same accumulation walk as the
// reconstruction).
std::vector<int> coverage_counts(const patch_grid& grid);

}  // namespace sdn

#endif
