#include <doctest.h>

#include <algorithm>

#include "sdn/dict_update.hpp"
#include "support/oracles.hpp"

using namespace sdn;
using sdn::testing::test_rng;

namespace {

// Column-sparse code with the given per-column support size, nonnegative values.
sparse_code random_nonneg_code(test_rng& rng, Eigen::Index k, Eigen::Index n, int per_col) {
  sparse_code s;
  s.atom_count = k;
  s.columns.resize(static_cast<std::size_t>(n));
  for (auto& col : s.columns) {
    col.support = rng.distinct_indices(k, per_col);
    col.coefficients.resize(per_col);
    for (int p = 0; p < per_col; ++p) col.coefficients[p] = rng.uniform(0.1, 2.0);
  }
  return s;
}

sparse_code dense_nonneg_code(test_rng& rng, Eigen::Index k, Eigen::Index n) {
  sparse_code s;
  s.atom_count = k;
  s.columns.resize(static_cast<std::size_t>(n));
  for (auto& col : s.columns) {
    col.support.resize(static_cast<std::size_t>(k));
    col.coefficients.resize(k);
    for (Eigen::Index p = 0; p < k; ++p) {
      col.support[static_cast<std::size_t>(p)] = p;
      col.coefficients[p] = rng.uniform(0.0, 1.0);
    }
  }
  return s;
}

dictionary random_nonneg_dictionary(test_rng& rng, Eigen::Index m, Eigen::Index k) {
  dictionary d;
  d.nonnegative = true;
  d.atoms.resize(m, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < m; ++i) d.atoms(i, j) = rng.uniform(0.0, 1.0);
    d.atoms.col(j).normalize();
  }
  return d;
}

patch_matrix wrap(Eigen::MatrixXd m) {
  patch_matrix y;
  y.data = std::move(m);
  return y;
}

double min_code_value(const sparse_code& s) {
  double lo = 0.0;
  for (const auto& col : s.columns)
    for (Eigen::Index p = 0; p < col.coefficients.size(); ++p)
      lo = std::min(lo, col.coefficients[p]);
  return lo;
}

}  // namespace

TEST_CASE("nmf update: exact factorization is a fixed point") {
  test_rng rng(11);
  dictionary d = random_nonneg_dictionary(rng, 16, 24);
  sparse_code s = random_nonneg_code(rng, 24, 30, 4);
  patch_matrix y = wrap(d.atoms * s.to_dense());

  factorization_state st = make_factorization_state(y, d, s);
  CHECK(st.frobenius_error <= 1e-9);
  update_report rep;
  const factorization_state out = nmf_update_dictionary(y, st, 1, &rep);
  CHECK(out.frobenius_error <= 1e-9);
  CHECK((out.dict.atoms - d.atoms).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("nmf update: monotone error, nonnegative factors, unit columns") {
  test_rng rng(12);
  dictionary d = random_nonneg_dictionary(rng, 32, 48);
  sparse_code s = random_nonneg_code(rng, 48, 80, 6);
  Eigen::MatrixXd ymat(32, 80);
  for (Eigen::Index j = 0; j < 80; ++j)
    for (Eigen::Index i = 0; i < 32; ++i) ymat(i, j) = rng.uniform(0.0, 255.0);
  patch_matrix y = wrap(std::move(ymat));

  factorization_state st = make_factorization_state(y, d, s);
  const double err0 = st.frobenius_error;
  update_report rep;
  const factorization_state out = nmf_update_dictionary(y, st, 8, &rep);

  REQUIRE(rep.step_errors.size() == 8);
  double prev = err0;
  for (double e : rep.step_errors) {
    CHECK(e <= prev * (1.0 + 1e-10));
    prev = e;
  }
  CHECK(out.dict.atoms.minCoeff() >= 0.0);
  CHECK(min_code_value(out.code) >= 0.0);
  for (Eigen::Index k = 0; k < out.dict.atoms.cols(); ++k)
    CHECK(out.dict.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-9));
  // the rescale leaves D S unchanged: stored error equals the last step error
  CHECK(out.frobenius_error == doctest::Approx(rep.step_errors.back()).epsilon(1e-9));
  // stored error matches a recomputation
  CHECK(out.frobenius_error ==
        doctest::Approx(frobenius_error(y, out.dict, out.code)).epsilon(1e-9));
}

TEST_CASE("nmf update: unused atom is left unchanged and reported") {
  test_rng rng(13);
  dictionary d = random_nonneg_dictionary(rng, 16, 24);
  // supports avoid atom 7 so it stays unused
  sparse_code s;
  s.atom_count = 24;
  s.columns.resize(40);
  for (auto& col : s.columns) {
    col.support.clear();
    while (col.support.size() < 4) {
      const Eigen::Index c = rng.index(24);
      if (c == 7) continue;
      if (std::find(col.support.begin(), col.support.end(), c) == col.support.end())
        col.support.push_back(c);
    }
    col.coefficients.resize(4);
    for (int p = 0; p < 4; ++p) col.coefficients[p] = rng.uniform(0.1, 2.0);
  }
  Eigen::MatrixXd ymat(16, 40);
  for (Eigen::Index j = 0; j < 40; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.uniform(0.0, 100.0);
  patch_matrix y = wrap(std::move(ymat));

  factorization_state st = make_factorization_state(y, d, s);
  update_report rep;
  const factorization_state out = nmf_update_dictionary(y, st, 3, &rep);
  CHECK(std::find(rep.skipped_atoms.begin(), rep.skipped_atoms.end(), 7) !=
        rep.skipped_atoms.end());
  CHECK((out.dict.atoms.col(7) - d.atoms.col(7)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("nmf update rejects negative inputs") {
  test_rng rng(14);
  dictionary d = random_nonneg_dictionary(rng, 8, 12);
  sparse_code s = random_nonneg_code(rng, 12, 10, 3);
  Eigen::MatrixXd ymat = Eigen::MatrixXd::Constant(8, 10, 1.0);
  ymat(3, 4) = -0.5;
  CHECK_THROWS_AS(
      nmf_update_dictionary(wrap(ymat), make_factorization_state(wrap(ymat), d, s), 1),
      std::invalid_argument);

  Eigen::MatrixXd ok = Eigen::MatrixXd::Constant(8, 10, 1.0);
  s.columns[0].coefficients[0] = -0.1;
  CHECK_THROWS_AS(nmf_update_dictionary(wrap(ok), make_factorization_state(wrap(ok), d, s), 1),
                  std::invalid_argument);
}

TEST_CASE("dense-support nmf update stays monotone (matrix-factorization regime)") {
  test_rng rng(15);
  dictionary d = random_nonneg_dictionary(rng, 16, 20);
  sparse_code s = dense_nonneg_code(rng, 20, 30);
  Eigen::MatrixXd ymat(16, 30);
  for (Eigen::Index j = 0; j < 30; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.uniform(0.0, 10.0);
  patch_matrix y = wrap(std::move(ymat));
  update_report rep;
  factorization_state st = make_factorization_state(y, d, s);
  const double err0 = st.frobenius_error;
  nmf_update_dictionary(y, std::move(st), 10, &rep);
  double prev = err0;
  for (double e : rep.step_errors) {
    CHECK(e <= prev * (1.0 + 1e-10));
    prev = e;
  }
  CHECK(rep.step_errors.back() < err0);
}

TEST_CASE("power iteration matches the dense oracle") {
  test_rng rng(16);
  for (int t = 0; t < 8; ++t) {
    const Eigen::MatrixXd e = rng.normal_matrix(64, 40);
    const rank1_result r = dominant_singular_pair(e);
    const double sigma_oracle = sdn::testing::dominant_sigma_oracle(e);
    CHECK(r.sigma == doctest::Approx(sigma_oracle).epsilon(1e-8));
    CHECK(r.u.norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.v.norm() == doctest::Approx(1.0).epsilon(1e-9));
    // (sigma, u, v) reproduce E v = sigma u
    CHECK((e * r.v - r.sigma * r.u).norm() <= 1e-6 * r.sigma);
  }
}

TEST_CASE("ksvd update: rank-1 data with one active atom converges") {
  test_rng rng(17);
  Eigen::VectorXd u(12), v(15);
  for (Eigen::Index i = 0; i < 12; ++i) u[i] = rng.normal();
  for (Eigen::Index i = 0; i < 15; ++i) v[i] = rng.uniform(0.5, 1.5);
  u.normalize();
  patch_matrix y = wrap(u * v.transpose());

  dictionary d;
  d.atoms = rng.unit_column_dictionary(12, 3);
  sparse_code s;
  s.atom_count = 3;
  s.columns.resize(15);
  for (auto& col : s.columns) {
    col.support = {0};
    col.coefficients.resize(1);
    col.coefficients[0] = 1.0;
  }
  factorization_state st = make_factorization_state(y, d, s);
  const factorization_state out = ksvd_update_dictionary(y, st);
  CHECK(std::abs(out.dict.atoms.col(0).dot(u)) == doctest::Approx(1.0).epsilon(1e-8));
  // remaining atoms are unused: replaced by (normalized) data columns
  Eigen::VectorXd r0 = y.data.col(0) - out.code.columns[0].coefficients[0] * out.dict.atoms.col(0);
  CHECK(r0.norm() <= 1e-8);
}

TEST_CASE("ksvd update: error non-increasing per atom on small instances") {
  test_rng rng(18);
  dictionary d;
  d.atoms = rng.unit_column_dictionary(16, 8);
  sparse_code s;
  s.atom_count = 8;
  s.columns.resize(30);
  for (auto& col : s.columns) {
    col.support = rng.distinct_indices(8, 3);
    col.coefficients.resize(3);
    for (int p = 0; p < 3; ++p) col.coefficients[p] = rng.normal();
  }
  Eigen::MatrixXd ymat(16, 30);
  for (Eigen::Index j = 0; j < 30; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.normal();
  patch_matrix y = wrap(std::move(ymat));

  factorization_state st = make_factorization_state(y, d, s);
  const double err0 = st.frobenius_error;
  update_report rep;
  rep.trace_steps = true;
  const factorization_state out = ksvd_update_dictionary(y, st, &rep);
  REQUIRE(rep.step_errors.size() == 8);
  double prev = err0;
  for (double e : rep.step_errors) {
    CHECK(e <= prev * (1.0 + 1e-9));
    prev = e;
  }
  CHECK(out.frobenius_error <= err0);
}

TEST_CASE("ksvd update: unused atom replaced by worst-represented column") {
  test_rng rng(19);
  dictionary d;
  d.atoms = rng.unit_column_dictionary(8, 4);
  sparse_code s;
  s.atom_count = 4;
  s.columns.resize(6);
  for (auto& col : s.columns) {
    col.support = {0};
    col.coefficients.resize(1);
    col.coefficients[0] = 0.5;
  }
  Eigen::MatrixXd ymat(8, 6);
  for (Eigen::Index j = 0; j < 6; ++j)
    for (Eigen::Index i = 0; i < 8; ++i) ymat(i, j) = rng.normal();
  patch_matrix y = wrap(std::move(ymat));
  factorization_state st = make_factorization_state(y, d, s);
  update_report rep;
  const factorization_state out = ksvd_update_dictionary(y, st, &rep);
  CHECK(rep.atoms_replaced == 3);  // atoms 1..3 are unused
  for (Eigen::Index k = 1; k < 4; ++k)
    CHECK(out.dict.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("replace_dead_atoms: healthy state untouched") {
  test_rng rng(20);
  dictionary d;
  d.atoms = rng.unit_column_dictionary(16, 10);
  sparse_code s = random_nonneg_code(rng, 10, 40, 3);
  Eigen::MatrixXd ymat(16, 40);
  for (Eigen::Index j = 0; j < 40; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.uniform(0.0, 1.0);
  patch_matrix y = wrap(std::move(ymat));
  factorization_state st = make_factorization_state(y, d, s);
  update_report rep;
  const factorization_state out = replace_dead_atoms(y, st, 1, 0.999, &rep);
  CHECK(rep.atoms_replaced == 0);
  CHECK(sdn::testing::bitwise_equal(out.dict.atoms, st.dict.atoms));
}

TEST_CASE("replace_dead_atoms: one of a duplicate pair is replaced") {
  test_rng rng(21);
  dictionary d;
  d.atoms = rng.unit_column_dictionary(16, 6);
  d.atoms.col(4) = d.atoms.col(1);  // exact duplicate, coherence 1
  sparse_code s = random_nonneg_code(rng, 6, 30, 2);
  Eigen::MatrixXd ymat(16, 30);
  for (Eigen::Index j = 0; j < 30; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.uniform(0.0, 1.0);
  patch_matrix y = wrap(std::move(ymat));
  factorization_state st = make_factorization_state(y, d, s);
  update_report rep;
  const factorization_state out = replace_dead_atoms(y, st, 0, 0.999, &rep);
  CHECK(rep.atoms_replaced == 1);
  CHECK(sdn::testing::bitwise_equal(out.dict.atoms.col(1), st.dict.atoms.col(1)));
  CHECK_FALSE(sdn::testing::bitwise_equal(out.dict.atoms.col(4), st.dict.atoms.col(4)));
}

TEST_CASE("replace_dead_atoms: unused atoms replaced by unit-norm columns") {
  test_rng rng(22);
  dictionary d;
  d.nonnegative = true;
  d.atoms = random_nonneg_dictionary(rng, 16, 8).atoms;
  // supports drawn only from {0,1,3,4,7}: atoms 2, 5, 6 are never used
  const Eigen::Index pool[5] = {0, 1, 3, 4, 7};
  sparse_code s;
  s.atom_count = 8;
  s.columns.resize(30);
  for (auto& col : s.columns) {
    const Eigen::Index a = pool[rng.index(5)];
    Eigen::Index b = pool[rng.index(5)];
    while (b == a) b = pool[rng.index(5)];
    col.support = {a, b};
    col.coefficients.resize(2);
    col.coefficients << rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0);
  }
  Eigen::MatrixXd ymat(16, 30);
  for (Eigen::Index j = 0; j < 30; ++j)
    for (Eigen::Index i = 0; i < 16; ++i) ymat(i, j) = rng.uniform(0.0, 255.0);
  patch_matrix y = wrap(std::move(ymat));
  factorization_state st = make_factorization_state(y, d, s);
  update_report rep;
  const factorization_state out = replace_dead_atoms(y, st, 1, 0.9999, &rep);
  CHECK(rep.atoms_replaced >= 3);
  for (Eigen::Index k : {2, 5, 6}) {
    CHECK(out.dict.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.dict.atoms.col(k).minCoeff() >= 0.0);  // nonnegative pipeline
  }
  CHECK(out.frobenius_error ==
        doctest::Approx(frobenius_error(y, out.dict, out.code)).epsilon(1e-9));
}
