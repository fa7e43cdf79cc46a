#include "sdn/dict_update.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sdn {

namespace {

constexpr double kDelta = 1e-12;  // denominator guard of the multiplicative rule

// Per-atom view of the column-sparse code: (column, position-in-support) pairs
// in ascending column order.
struct atom_usage {
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> entries;

  explicit atom_usage(const sparse_code& s) : entries(static_cast<std::size_t>(s.atom_count)) {
    for (std::size_t j = 0; j < s.columns.size(); ++j)
      for (std::size_t t = 0; t < s.columns[j].support.size(); ++t)
        entries[static_cast<std::size_t>(s.columns[j].support[t])].push_back({j, t});
  }
};

void check_nonnegative(const patch_matrix& y, const factorization_state& st) {
  if (y.data.minCoeff() < 0.0)
    throw std::invalid_argument("nmf_update_dictionary: negative entries in data matrix");
  if (st.dict.atoms.minCoeff() < 0.0)
    throw std::invalid_argument("nmf_update_dictionary: negative entries in dictionary");
  for (const auto& col : st.code.columns)
    for (Eigen::Index t = 0; t < col.coefficients.size(); ++t)
      if (col.coefficients[t] < 0.0)
        throw std::invalid_argument("nmf_update_dictionary: negative entries in code");
}

void check_conformable(const patch_matrix& y, const factorization_state& st) {
  if (y.data.rows() != st.dict.signal_dim() ||
      static_cast<std::size_t>(y.data.cols()) != st.code.columns.size())
    throw std::invalid_argument("dict_update: non-conformable dimensions");
}

// Y S' accumulated atom-by-atom from the sparse columns; deterministic
// regardless of policy (per-atom accumulation order is the column order).
Eigen::MatrixXd data_code_product(const patch_matrix& y, const sparse_code& s,
                                  const atom_usage& usage, exec_policy policy) {
  Eigen::MatrixXd yst = Eigen::MatrixXd::Zero(y.data.rows(), s.atom_count);
  for_each_index(s.atom_count, policy, [&](std::int64_t k) {
    auto col = yst.col(k);
    for (const auto& [j, t] : usage.entries[static_cast<std::size_t>(k)])
      col += s.columns[j].coefficients[static_cast<Eigen::Index>(t)] *
             y.data.col(static_cast<Eigen::Index>(j));
  });
  return yst;
}

// S S' row by row from the per-atom views.
Eigen::MatrixXd code_gram(const sparse_code& s, const atom_usage& usage, exec_policy policy) {
  Eigen::MatrixXd sst = Eigen::MatrixXd::Zero(s.atom_count, s.atom_count);
  for_each_index(s.atom_count, policy, [&](std::int64_t k) {
    for (const auto& [j, t] : usage.entries[static_cast<std::size_t>(k)]) {
      const double vk = s.columns[j].coefficients[static_cast<Eigen::Index>(t)];
      const auto& sup = s.columns[j].support;
      for (std::size_t q = 0; q < sup.size(); ++q)
        sst(k, sup[q]) += vk * s.columns[j].coefficients[static_cast<Eigen::Index>(q)];
    }
  });
  return sst;
}

// Squared residual of one column.
double column_residual_sq(const patch_matrix& y, const dictionary& d, const column_code& col,
                          Eigen::Index j) {
  Eigen::VectorXd r = y.data.col(j);
  for (std::size_t t = 0; t < col.support.size(); ++t)
    r -= col.coefficients[static_cast<Eigen::Index>(t)] * d.atoms.col(col.support[t]);
  return r.squaredNorm();
}

std::vector<double> all_column_residuals(const patch_matrix& y, const dictionary& d,
                                         const sparse_code& s, exec_policy policy) {
  std::vector<double> res(s.columns.size(), 0.0);
  for_each_index(static_cast<std::int64_t>(s.columns.size()), policy, [&](std::int64_t j) {
    res[static_cast<std::size_t>(j)] =
        column_residual_sq(y, d, s.columns[static_cast<std::size_t>(j)], static_cast<Eigen::Index>(j));
  });
  return res;
}

double frobenius_from_residuals(const std::vector<double>& res) {
  double acc = 0.0;
  for (double v : res) acc += v;  // fixed order, independent of policy
  return std::sqrt(acc);
}

// Index of the worst-represented column not yet claimed by another
// replacement this call.
Eigen::Index worst_column(const std::vector<double>& residuals, std::vector<char>& claimed) {
  Eigen::Index best = -1;
  double best_v = -1.0;
  for (std::size_t j = 0; j < residuals.size(); ++j) {
    if (claimed[j]) continue;
    if (residuals[j] > best_v) {
      best_v = residuals[j];
      best = static_cast<Eigen::Index>(j);
    }
  }
  return best;
}

void zero_code_row(sparse_code& s, const atom_usage& usage, Eigen::Index k) {
  for (const auto& [j, t] : usage.entries[static_cast<std::size_t>(k)])
    s.columns[j].coefficients[static_cast<Eigen::Index>(t)] = 0.0;
}

}  // namespace

double frobenius_error(const patch_matrix& y, const dictionary& d, const sparse_code& s,
                       exec_policy policy) {
  if (y.data.rows() != d.signal_dim() ||
      static_cast<std::size_t>(y.data.cols()) != s.columns.size())
    throw std::invalid_argument("frobenius_error: non-conformable dimensions");
  return frobenius_from_residuals(all_column_residuals(y, d, s, policy));
}

factorization_state make_factorization_state(const patch_matrix& y, dictionary d, sparse_code s,
                                             exec_policy policy) {
  factorization_state st{std::move(d), std::move(s), 0.0};
  st.frobenius_error = frobenius_error(y, st.dict, st.code, policy);
  return st;
}

factorization_state nmf_update_dictionary(const patch_matrix& y, factorization_state state,
                                          int inner_iters, update_report* report,
                                          exec_policy policy) {
  check_conformable(y, state);
  check_nonnegative(y, state);
  if (inner_iters < 1) throw std::invalid_argument("nmf_update_dictionary: inner_iters must be >= 1");

  const atom_usage usage(state.code);
  const Eigen::MatrixXd yst = data_code_product(y, state.code, usage, policy);
  const Eigen::MatrixXd sst = code_gram(state.code, usage, policy);
  const Eigen::Index k_atoms = state.dict.atom_count();

  std::vector<int> dead_count(static_cast<std::size_t>(k_atoms), 0);
  for (int it = 0; it < inner_iters; ++it) {
    Eigen::MatrixXd next = state.dict.atoms;
    for_each_index(k_atoms, policy, [&](std::int64_t k) {
      const Eigen::VectorXd denom = state.dict.atoms * sst.col(k);
      if (denom.maxCoeff() <= kDelta) {
        ++dead_count[static_cast<std::size_t>(k)];  // unused atom: leave unchanged
        return;
      }
      next.col(k) = state.dict.atoms.col(k).array() * yst.col(k).array() /
                    (denom.array() + kDelta);
    });
    state.dict.atoms = std::move(next);
    if (report != nullptr)
      report->step_errors.push_back(frobenius_error(y, state.dict, state.code, policy));
  }

  // Restore unit columns; compensate in the code rows so D S is unchanged.
  // Atoms skipped on every step were never touched and keep their bits.
  for (Eigen::Index k = 0; k < k_atoms; ++k) {
    if (dead_count[static_cast<std::size_t>(k)] == inner_iters) continue;
    const double norm = state.dict.atoms.col(k).norm();
    if (norm < 1e-15) continue;
    state.dict.atoms.col(k) /= norm;
    for (const auto& [j, t] : usage.entries[static_cast<std::size_t>(k)])
      state.code.columns[j].coefficients[static_cast<Eigen::Index>(t)] *= norm;
  }
  if (report != nullptr)
    for (Eigen::Index k = 0; k < k_atoms; ++k)
      if (dead_count[static_cast<std::size_t>(k)] > 0) report->skipped_atoms.push_back(k);

  state.frobenius_error = frobenius_error(y, state.dict, state.code, policy);
  return state;
}

rank1_result dominant_singular_pair(const Eigen::MatrixXd& e, double tol, int max_iters) {
  rank1_result out;
  out.u = Eigen::VectorXd::Zero(e.rows());
  out.v = Eigen::VectorXd::Zero(e.cols());
  Eigen::Index start = -1;
  for (Eigen::Index c = 0; c < e.cols(); ++c)
    if (e.col(c).norm() > 0.0) {
      start = c;
      break;
    }
  if (start < 0) return out;  // zero matrix
  Eigen::VectorXd u = e.col(start).normalized();
  double sigma_prev = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Eigen::VectorXd v = e.transpose() * u;
    const double vn = v.norm();
    if (vn == 0.0) break;
    v /= vn;
    Eigen::VectorXd eu = e * v;
    const double sigma = eu.norm();
    if (sigma == 0.0) break;
    u = eu / sigma;
    out.sigma = sigma;
    out.v = v;
    out.u = u;
    if (std::abs(sigma - sigma_prev) <= tol * std::max(1.0, sigma)) break;
    sigma_prev = sigma;
  }
  return out;
}

factorization_state ksvd_update_dictionary(const patch_matrix& y, factorization_state state,
                                           update_report* report) {
  check_conformable(y, state);
  const Eigen::Index k_atoms = state.dict.atom_count();
  const atom_usage usage(state.code);
  std::vector<char> claimed(state.code.columns.size(), 0);

  for (Eigen::Index k = 0; k < k_atoms; ++k) {
    const auto& active = usage.entries[static_cast<std::size_t>(k)];

    if (active.empty()) {
      const auto residuals = all_column_residuals(y, state.dict, state.code, exec_policy::serial);
      const Eigen::Index w = worst_column(residuals, claimed);
      if (w >= 0) {
        claimed[static_cast<std::size_t>(w)] = 1;
        const double norm = y.data.col(w).norm();
        if (norm > 0.0) {
          state.dict.atoms.col(k) = y.data.col(w) / norm;
          if (report != nullptr) ++report->atoms_replaced;
        }
      }
      continue;
    }

    // Restricted residual with atom k's contribution added back.
    Eigen::MatrixXd e(y.data.rows(), static_cast<Eigen::Index>(active.size()));
    for (std::size_t c = 0; c < active.size(); ++c) {
      const auto [j, t] = active[c];
      Eigen::VectorXd r = y.data.col(static_cast<Eigen::Index>(j));
      const auto& col = state.code.columns[j];
      for (std::size_t q = 0; q < col.support.size(); ++q)
        if (col.support[q] != k)
          r -= col.coefficients[static_cast<Eigen::Index>(q)] * state.dict.atoms.col(col.support[q]);
      e.col(static_cast<Eigen::Index>(c)) = r;
    }

    const rank1_result r1 = dominant_singular_pair(e);
    if (r1.sigma == 0.0) {
      // Perfectly represented without this atom: detach it from the code.
      for (const auto& [j, t] : active)
        state.code.columns[j].coefficients[static_cast<Eigen::Index>(t)] = 0.0;
      continue;
    }
    state.dict.atoms.col(k) = r1.u;
    for (std::size_t c = 0; c < active.size(); ++c) {
      const auto [j, t] = active[c];
      state.code.columns[j].coefficients[static_cast<Eigen::Index>(t)] =
          r1.sigma * r1.v[static_cast<Eigen::Index>(c)];
    }
    if (report != nullptr && report->trace_steps)
      report->step_errors.push_back(frobenius_error(y, state.dict, state.code, exec_policy::serial));
  }

  state.frobenius_error = frobenius_error(y, state.dict, state.code, exec_policy::serial);
  return state;
}

factorization_state replace_dead_atoms(const patch_matrix& y, factorization_state state,
                                       int usage_min, double coherence_max, update_report* report,
                                       exec_policy policy) {
  check_conformable(y, state);
  const Eigen::Index k_atoms = state.dict.atom_count();
  const atom_usage usage(state.code);

  std::vector<int> use_count(static_cast<std::size_t>(k_atoms), 0);
  for (Eigen::Index k = 0; k < k_atoms; ++k)
    for (const auto& [j, t] : usage.entries[static_cast<std::size_t>(k)])
      if (state.code.columns[j].coefficients[static_cast<Eigen::Index>(t)] != 0.0)
        ++use_count[static_cast<std::size_t>(k)];

  std::vector<char> replace(static_cast<std::size_t>(k_atoms), 0);
  for (Eigen::Index k = 0; k < k_atoms; ++k)
    if (use_count[static_cast<std::size_t>(k)] < usage_min) replace[static_cast<std::size_t>(k)] = 1;

  // Coherence against earlier surviving atoms.
  for (Eigen::Index i = 1; i < k_atoms; ++i) {
    if (replace[static_cast<std::size_t>(i)]) continue;
    for (Eigen::Index j = 0; j < i; ++j) {
      if (replace[static_cast<std::size_t>(j)]) continue;
      if (std::abs(state.dict.atoms.col(i).dot(state.dict.atoms.col(j))) > coherence_max) {
        replace[static_cast<std::size_t>(i)] = 1;
        break;
      }
    }
  }

  std::vector<char> claimed(state.code.columns.size(), 0);
  std::vector<double> residuals;
  Eigen::Index replaced = 0;
  for (Eigen::Index k = 0; k < k_atoms; ++k) {
    if (!replace[static_cast<std::size_t>(k)]) continue;
    if (residuals.empty()) residuals = all_column_residuals(y, state.dict, state.code, policy);
    const Eigen::Index w = worst_column(residuals, claimed);
    if (w < 0) break;
    claimed[static_cast<std::size_t>(w)] = 1;
    Eigen::VectorXd cand = y.data.col(w);
    if (state.dict.nonnegative) cand = cand.cwiseMax(0.0);
    const double norm = cand.norm();
    if (norm == 0.0) continue;
    state.dict.atoms.col(k) = cand / norm;
    zero_code_row(state.code, usage, k);
    ++replaced;
  }
  if (report != nullptr) report->atoms_replaced += replaced;
  state.frobenius_error = frobenius_error(y, state.dict, state.code, policy);
  return state;
}

}  // namespace sdn
