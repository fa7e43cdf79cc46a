#ifndef SDN_SPARSE_CODING_HPP
#define SDN_SPARSE_CODING_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sdn/dictionary.hpp"
#include "sdn/exec.hpp"
#include "sdn/patching.hpp"

namespace sdn {

enum class coder_kind { omp, amp };

enum class termination_reason {
  epsilon,    // residual energy reached the goal
  max_atoms,  // sparsity cap hit
  stall       // no candidate atom, or selection failed to reduce the error
};

struct coding_config {
  double epsilon = 1e-9;       // residual-energy stopping goal (squared-norm units)
  int max_atoms = 16;          // hard sparsity cap, <= signal dimension
  double nn_threshold = 0.9;   // AMP acceptance ratio tau in (0, 1]
  bool nonnegative_coefficients = false;
};

// Sparse code of one column. `support` keeps selection order; coefficients
// align with it. `inner_products` counts atom-residual correlations evaluated
// during atom selection.
struct column_code {
  std::vector<Eigen::Index> support;
  Eigen::VectorXd coefficients;
  termination_reason reason = termination_reason::epsilon;
  double final_err = 0.0;  // squared residual norm at exit
  std::int64_t inner_products = 0;
  std::vector<double> err_trace;  // squared residual after init and each accepted atom
};

// K x N coefficient matrix stored column-sparse.
struct sparse_code {
  Eigen::Index atom_count = 0;
  std::vector<column_code> columns;

  Eigen::MatrixXd to_dense() const;
  std::int64_t total_inner_products() const;
};

// Greedy pursuit: repeatedly select the atom with the largest |d_i' r|
// (lowest index on ties), re-solve least squares on the selected set, update
// the residual. Nonnegative mode selects on raw positive correlation and
// re-solves with nonnegative least squares.
column_code omp_encode(const dictionary& d, const Eigen::VectorXd& y, const coding_config& cfg);

// Same loop, but selection accepts the first unselected atom whose
// correlation reaches nn_threshold times the residual norm (the Cauchy-Schwarz
// bound on any correlation, so an accepted atom is within tau of the best);
// a full scan without acceptance falls back to the exact argmax.
column_code amp_encode(const dictionary& d, const Eigen::VectorXd& y, const coding_config& cfg);

// Codes every column of y independently.
sparse_code encode_matrix(const dictionary& d, const patch_matrix& y, const coding_config& cfg,
                          coder_kind coder, exec_policy policy = exec_policy::serial);

// min ||y - a x||^2 subject to x >= 0, by Lawson-Hanson active-set iteration.
Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y);

}  // namespace sdn

#endif
