#ifndef SDN_DICT_UPDATE_HPP
#define SDN_DICT_UPDATE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "sdn/dictionary.hpp"
#include "sdn/exec.hpp"
#include "sdn/patching.hpp"
#include "sdn/sparse_coding.hpp"

namespace sdn {

struct factorization_state {
  dictionary dict;
  sparse_code code;
  double frobenius_error = 0.0;  // ||Y - D S||_F
};

struct update_report {
  bool trace_steps = false;                 // ksvd: also record the error after every atom
  std::vector<double> step_errors;          // Frobenius error after each step
  std::vector<Eigen::Index> skipped_atoms;  // atoms left unchanged (dead denominator)
  Eigen::Index atoms_replaced = 0;
};

double frobenius_error(const patch_matrix& y, const dictionary& d, const sparse_code& s,
                       exec_policy policy = exec_policy::serial);

factorization_state make_factorization_state(const patch_matrix& y, dictionary d, sparse_code s,
                                             exec_policy policy = exec_policy::serial);

// Lee-Seung multiplicative update of the dictionary factor with the codes
// fixed: D <- D .* (Y S') ./ (D S S' + delta), `inner_iters` times, then a
// norm-preserving rescale (columns back to unit norm, code rows scaled
// inversely). ||Y - DS||_F is non-increasing across the multiplicative steps.
// Atoms whose denominator column is entirely <= delta are left unchanged and
// reported. Requires Y, D, S >= 0 entrywise.
factorization_state nmf_update_dictionary(const patch_matrix& y, factorization_state state,
                                          int inner_iters, update_report* report = nullptr,
                                          exec_policy policy = exec_policy::serial);

// Per-atom rank-1 refit: for each atom in index order, the dominant singular
// pair of the restricted residual (by power iteration) replaces the atom and
// its coefficient row. Unused atoms are replaced by the worst-represented
// data column. Sequential over atoms by construction.
factorization_state ksvd_update_dictionary(const patch_matrix& y, factorization_state state,
                                           update_report* report = nullptr);

// Replaces under-used atoms (usage < usage_min) and near-duplicates
// (|d_i' d_j| > coherence_max against an earlier atom) with the
// worst-represented data column, normalized (and clamped to >= 0 in the
// nonnegative pipeline). Replaced atoms get a zeroed coefficient row.
factorization_state replace_dead_atoms(const patch_matrix& y, factorization_state state,
                                       int usage_min, double coherence_max,
                                       update_report* report = nullptr,
                                       exec_policy policy = exec_policy::serial);

// Dominant singular triple (sigma, u, v) of `e` by power iteration with a
// deterministic start (normalized first nonzero column). Exposed for testing
// against a dense oracle.
struct rank1_result {
  double sigma = 0.0;
  Eigen::VectorXd u;
  Eigen::VectorXd v;
};
rank1_result dominant_singular_pair(const Eigen::MatrixXd& e, double tol = 1e-10,
                                    int max_iters = 1000);

}  // namespace sdn

#endif
