#include "sdn/sparse_coding.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <stdexcept>

namespace sdn {

namespace {

void check_config(const dictionary& d, const Eigen::VectorXd& y, const coding_config& cfg) {
  if (y.size() != d.signal_dim())
    throw std::invalid_argument("sparse coder: dimension mismatch");
  if (!(cfg.epsilon > 0.0)) throw std::invalid_argument("sparse coder: epsilon must be > 0");
  if (cfg.max_atoms < 1 || cfg.max_atoms > d.signal_dim())
    throw std::invalid_argument("sparse coder: max_atoms must lie in [1, M]");
  if (!(cfg.nn_threshold > 0.0 && cfg.nn_threshold <= 1.0))
    throw std::invalid_argument("sparse coder: nn_threshold must lie in (0, 1]");
}

// Unconstrained least squares on the selected atoms via the normal equations.
Eigen::VectorXd solve_ls(const Eigen::MatrixXd& cols, const Eigen::VectorXd& y) {
  const Eigen::MatrixXd gram = cols.transpose() * cols;
  const Eigen::VectorXd rhs = cols.transpose() * y;
  return gram.ldlt().solve(rhs);
}

// Atom selection shared by both coders. Returns the selected index or -1 when
// no candidate exists. `accept_ratio` < 0 disables early acceptance (OMP).
//
// Early acceptance takes the first atom whose correlation clears
// accept_ratio * ||r|| (the bound on any correlation for unit atoms, so an
// accepted atom is within the ratio of the best possible) while also leading
// the running best seen so far in the scan. A full scan without acceptance
// falls back to the exact argmax, lowest index on ties.
Eigen::Index select_atom(const dictionary& d, const Eigen::VectorXd& r, double r_norm,
                         const std::vector<char>& in_support, bool nonnegative,
                         double accept_ratio, std::int64_t& inner_products) {
  const Eigen::Index k = d.atom_count();
  Eigen::Index best = -1;
  double best_c = 0.0;
  const double accept_at = accept_ratio > 0.0 ? accept_ratio * r_norm : -1.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (in_support[static_cast<std::size_t>(i)]) continue;
    const double raw = d.atoms.col(i).dot(r);
    ++inner_products;
    const double c = nonnegative ? raw : std::abs(raw);
    if (c > best_c) {
      best_c = c;
      best = i;
    }
    if (accept_at >= 0.0 && c >= accept_at && best == i) return i;
  }
  return best;
}

column_code encode_column(const dictionary& d, const Eigen::VectorXd& y,
                          const coding_config& cfg, coder_kind kind) {
  check_config(d, y, cfg);
  const bool nonneg = cfg.nonnegative_coefficients;
  const double accept_ratio = (kind == coder_kind::amp) ? cfg.nn_threshold : -1.0;

  column_code out;
  std::vector<char> in_support(static_cast<std::size_t>(d.atom_count()), 0);
  std::vector<Eigen::Index> selected;
  Eigen::VectorXd coeffs;
  Eigen::VectorXd r = y;
  double err = r.squaredNorm();
  out.reason = termination_reason::epsilon;
  out.err_trace.push_back(err);

  while (err > cfg.epsilon) {
    if (static_cast<int>(selected.size()) == cfg.max_atoms) {
      out.reason = termination_reason::max_atoms;
      break;
    }
    const Eigen::Index pick = select_atom(d, r, std::sqrt(err), in_support, nonneg, accept_ratio,
                                          out.inner_products);
    if (pick < 0) {
      out.reason = termination_reason::stall;
      break;
    }
    selected.push_back(pick);
    in_support[static_cast<std::size_t>(pick)] = 1;

    Eigen::MatrixXd cols(d.signal_dim(), static_cast<Eigen::Index>(selected.size()));
    for (std::size_t t = 0; t < selected.size(); ++t) cols.col(t) = d.atoms.col(selected[t]);
    const Eigen::VectorXd trial =
        nonneg ? nonnegative_least_squares(cols, y) : solve_ls(cols, y);
    const Eigen::VectorXd r_trial = y - cols * trial;
    const double err_trial = r_trial.squaredNorm();
    if (err_trial > err * (1.0 - 1e-12)) {
      // The freshly selected atom failed to reduce the error; drop it and stop.
      selected.pop_back();
      out.reason = termination_reason::stall;
      break;
    }
    coeffs = trial;
    r = r_trial;
    err = err_trial;
    out.err_trace.push_back(err);
  }

  // Report only the atoms carrying nonzero weight (nonnegative re-solves can
  // park earlier picks at zero).
  out.support.reserve(selected.size());
  std::vector<double> vals;
  vals.reserve(selected.size());
  for (std::size_t t = 0; t < selected.size(); ++t) {
    if (coeffs.size() > static_cast<Eigen::Index>(t) && coeffs[static_cast<Eigen::Index>(t)] != 0.0) {
      out.support.push_back(selected[t]);
      vals.push_back(coeffs[static_cast<Eigen::Index>(t)]);
    }
  }
  out.coefficients.resize(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t t = 0; t < vals.size(); ++t)
    out.coefficients[static_cast<Eigen::Index>(t)] = vals[t];
  out.final_err = err;
  return out;
}

}  // namespace

Eigen::MatrixXd sparse_code::to_dense() const {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(atom_count, static_cast<Eigen::Index>(columns.size()));
  for (std::size_t j = 0; j < columns.size(); ++j)
    for (std::size_t t = 0; t < columns[j].support.size(); ++t)
      s(columns[j].support[t], static_cast<Eigen::Index>(j)) =
          columns[j].coefficients[static_cast<Eigen::Index>(t)];
  return s;
}

std::int64_t sparse_code::total_inner_products() const {
  std::int64_t n = 0;
  for (const auto& c : columns) n += c.inner_products;
  return n;
}

column_code omp_encode(const dictionary& d, const Eigen::VectorXd& y, const coding_config& cfg) {
  return encode_column(d, y, cfg, coder_kind::omp);
}

column_code amp_encode(const dictionary& d, const Eigen::VectorXd& y, const coding_config& cfg) {
  return encode_column(d, y, cfg, coder_kind::amp);
}

sparse_code encode_matrix(const dictionary& d, const patch_matrix& y, const coding_config& cfg,
                          coder_kind coder, exec_policy policy) {
  if (y.data.rows() != d.signal_dim())
    throw std::invalid_argument("encode_matrix: row count must equal the dictionary signal dimension");
  sparse_code code;
  code.atom_count = d.atom_count();
  code.columns.resize(static_cast<std::size_t>(y.data.cols()));
  std::string first_error;
  for_each_index_dynamic(y.data.cols(), policy, [&](std::int64_t j) {
    try {
      code.columns[static_cast<std::size_t>(j)] = encode_column(d, y.data.col(j), cfg, coder);
    } catch (const std::exception& e) {
      std::string msg = "column " + std::to_string(j) + ": " + e.what();
#pragma omp critical
      if (first_error.empty()) first_error = std::move(msg);
    }
  });
  if (!first_error.empty()) throw std::runtime_error("encode_matrix: " + first_error);
  return code;
}

Eigen::VectorXd nonnegative_least_squares(const Eigen::MatrixXd& a, const Eigen::VectorXd& y) {
  if (a.rows() != y.size()) throw std::invalid_argument("nnls: dimension mismatch");
  const Eigen::Index t = a.cols();
  const Eigen::MatrixXd gram = a.transpose() * a;
  const Eigen::VectorXd b = a.transpose() * y;

  Eigen::VectorXd x = Eigen::VectorXd::Zero(t);
  std::vector<char> passive(static_cast<std::size_t>(t), 0);
  const double tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());

  auto solve_passive = [&](Eigen::VectorXd& z) {
    std::vector<Eigen::Index> idx;
    for (Eigen::Index i = 0; i < t; ++i)
      if (passive[static_cast<std::size_t>(i)]) idx.push_back(i);
    Eigen::MatrixXd g(idx.size(), idx.size());
    Eigen::VectorXd rhs(idx.size());
    for (std::size_t p = 0; p < idx.size(); ++p) {
      rhs[static_cast<Eigen::Index>(p)] = b[idx[p]];
      for (std::size_t q = 0; q < idx.size(); ++q)
        g(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(q)) = gram(idx[p], idx[q]);
    }
    const Eigen::VectorXd sol = g.ldlt().solve(rhs);
    z.setZero(t);
    for (std::size_t p = 0; p < idx.size(); ++p) z[idx[p]] = sol[static_cast<Eigen::Index>(p)];
  };

  const int max_outer = 3 * static_cast<int>(t) + 10;
  for (int outer = 0; outer < max_outer; ++outer) {
    const Eigen::VectorXd w = b - gram * x;
    Eigen::Index enter = -1;
    double w_best = tol;
    for (Eigen::Index i = 0; i < t; ++i)
      if (!passive[static_cast<std::size_t>(i)] && w[i] > w_best) {
        w_best = w[i];
        enter = i;
      }
    if (enter < 0) break;
    passive[static_cast<std::size_t>(enter)] = 1;

    Eigen::VectorXd z(t);
    for (int inner = 0; inner < max_outer; ++inner) {
      solve_passive(z);
      bool feasible = true;
      double alpha = 1.0;
      for (Eigen::Index i = 0; i < t; ++i) {
        if (passive[static_cast<std::size_t>(i)] && z[i] <= 0.0) {
          feasible = false;
          const double denom = x[i] - z[i];
          if (denom > 0.0) alpha = std::min(alpha, x[i] / denom);
        }
      }
      if (feasible) {
        x = z;
        break;
      }
      x += alpha * (z - x);
      for (Eigen::Index i = 0; i < t; ++i)
        if (passive[static_cast<std::size_t>(i)] && x[i] <= tol) {
          x[i] = 0.0;
          passive[static_cast<std::size_t>(i)] = 0;
        }
    }
  }
  return x;
}

}  // namespace sdn
