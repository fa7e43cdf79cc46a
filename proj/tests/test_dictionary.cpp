#include <doctest.h>

#include <cstring>
#include <filesystem>

#include "sdn/dictionary.hpp"
#include "support/oracles.hpp"

using namespace sdn;

namespace {
std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("log-gabor bank: paper-scale dimensions and unit norms") {
  log_gabor_params p;  // 8x8 patches, 4 scales, 8 orientations, 8 phases
  const dictionary d = log_gabor_dictionary(p, 256);
  CHECK(d.atoms.rows() == 64);
  CHECK(d.atoms.cols() == 256);
  CHECK(d.nonnegative);
  for (Eigen::Index k = 0; k < d.atoms.cols(); ++k) {
    CHECK(d.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.atoms.col(k).minCoeff() >= 0.0);      // rectified variant
    CHECK(d.atoms.col(k).sum() >= 0.0);           // DC response after rectification
  }
}

TEST_CASE("log-gabor generation is deterministic") {
  log_gabor_params p;
  const dictionary a = log_gabor_dictionary(p, 256);
  const dictionary b = log_gabor_dictionary(p, 256);
  CHECK(std::memcmp(a.atoms.data(), b.atoms.data(), sizeof(double) * a.atoms.size()) == 0);
}

TEST_CASE("log-gabor transfer function is exactly zero at DC") {
  log_gabor_params p;
  for (int s = 0; s < p.scales; ++s)
    for (int o = 0; o < p.orientations; ++o) {
      const Eigen::MatrixXd g = log_gabor_transfer(p, s, o);
      CHECK(g(0, 0) == 0.0);
      CHECK(g.maxCoeff() > 0.0);
    }
}

TEST_CASE("signed log-gabor bank keeps both signs") {
  log_gabor_params p;
  p.signed_atoms = true;
  const dictionary d = log_gabor_dictionary(p, 256);
  CHECK_FALSE(d.nonnegative);
  CHECK(d.atoms.minCoeff() < 0.0);
  for (Eigen::Index k = 0; k < d.atoms.cols(); ++k)
    CHECK(d.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("log-gabor parameter validation") {
  log_gabor_params p;
  CHECK_THROWS_AS(log_gabor_dictionary(p, 257), std::invalid_argument);  // bank is 256
  p.sigma_on_f = 1.0;
  CHECK_THROWS_AS(log_gabor_dictionary(p, 64), std::invalid_argument);
  p.sigma_on_f = 0.65;
  p.scale_factor = 1.0;
  CHECK_THROWS_AS(log_gabor_dictionary(p, 64), std::invalid_argument);
}

TEST_CASE("overcomplete dct: dimensions, dc atom, coherence") {
  const dictionary d = overcomplete_dct_dictionary(8, 16);
  CHECK(d.atoms.rows() == 64);
  CHECK(d.atoms.cols() == 256);
  for (Eigen::Index k = 0; k < d.atoms.cols(); ++k)
    CHECK(d.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));

  // atom (0,0) is the constant atom 1/8
  for (Eigen::Index i = 0; i < 64; ++i) CHECK(d.atoms(i, 0) == doctest::Approx(0.125).epsilon(1e-12));

  double max_coh = 0.0;
  for (Eigen::Index i = 0; i < d.atoms.cols(); ++i)
    for (Eigen::Index j = i + 1; j < d.atoms.cols(); ++j)
      max_coh = std::max(max_coh, std::abs(d.atoms.col(i).dot(d.atoms.col(j))));
  CHECK(max_coh < 1.0);

  CHECK_THROWS_AS(overcomplete_dct_dictionary(8, 7), std::invalid_argument);
}

TEST_CASE("normalize_columns") {
  dictionary d;
  d.atoms = Eigen::MatrixXd::Zero(4, 2);
  d.atoms.col(0) << 3, 4, 0, 0;
  d.atoms.col(1) << 0, 0, 2, 0;
  const dictionary n = normalize_columns(d);
  CHECK(n.atoms(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n.atoms(1, 0) == doctest::Approx(0.8).epsilon(1e-15));

  // idempotence
  const dictionary n2 = normalize_columns(n);
  CHECK((n2.atoms - n.atoms).cwiseAbs().maxCoeff() < 1e-12);

  // random matrix property
  sdn::testing::test_rng rng(12);
  dictionary r;
  r.atoms = rng.normal_matrix(64, 256);
  const dictionary rn = normalize_columns(r);
  for (Eigen::Index k = 0; k < rn.atoms.cols(); ++k)
    CHECK(rn.atoms.col(k).norm() == doctest::Approx(1.0).epsilon(1e-12));

  dictionary z;
  z.atoms = Eigen::MatrixXd::Zero(4, 3);
  z.atoms.col(0) << 1, 0, 0, 0;
  z.atoms.col(2) << 0, 1, 0, 0;
  CHECK_THROWS_WITH_AS(normalize_columns(z), doctest::Contains("index 1"), std::invalid_argument);
}

TEST_CASE("dictionary file round-trip is bit-exact") {
  log_gabor_params p;
  const dictionary d = log_gabor_dictionary(p, 256);
  const auto path = temp_path("sdn_t_dict.sdic");
  save_dictionary(d, path);
  const dictionary back = load_dictionary(path);
  CHECK(back.nonnegative == d.nonnegative);
  REQUIRE(back.atoms.rows() == d.atoms.rows());
  REQUIRE(back.atoms.cols() == d.atoms.cols());
  CHECK(std::memcmp(back.atoms.data(), d.atoms.data(), sizeof(double) * d.atoms.size()) == 0);

  p.signed_atoms = true;
  const dictionary ds = log_gabor_dictionary(p, 64);
  save_dictionary(ds, path);
  CHECK_FALSE(load_dictionary(path).nonnegative);
}

TEST_CASE("atom mosaic writes a loadable pgm") {
  const dictionary d = overcomplete_dct_dictionary(8, 16);
  const auto path = temp_path("sdn_t_mosaic.pgm");
  save_atom_mosaic(d, 8, path);
  const image img = load_image(path);
  CHECK(img.width > 8);
  CHECK(img.height > 8);
}
