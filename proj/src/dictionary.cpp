#include "sdn/dictionary.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "sdn/image.hpp"

namespace sdn {

namespace {

constexpr double kPi = std::numbers::pi;

void check_params(const log_gabor_params& p) {
  if (p.patch_side <= 0 || p.scales <= 0 || p.orientations <= 0 || p.phases <= 0)
    throw std::invalid_argument("log_gabor: counts must be positive");
  if (!(p.sigma_on_f > 0.0 && p.sigma_on_f < 1.0))
    throw std::invalid_argument("log_gabor: sigma_on_f must lie in (0,1)");
  if (!(p.scale_factor > 1.0))
    throw std::invalid_argument("log_gabor: scale_factor must exceed 1");
  if (!(p.min_wavelength > 0.0))
    throw std::invalid_argument("log_gabor: min_wavelength must be positive");
}

// Signed DFT frequency index: 0..n/2-1 positive, the rest negative.
inline int signed_freq(int u, int n) { return u <= (n - 1) / 2 ? u : u - n; }

inline double wrap_angle(double a) {
  while (a > kPi) a -= 2.0 * kPi;
  while (a <= -kPi) a += 2.0 * kPi;
  return a;
}

struct spatial_pair {
  Eigen::MatrixXd even;  // cosine-phase kernel
  Eigen::MatrixXd odd;   // sine-phase kernel
};

// Inverse DFT of the (real, single-sided) transfer function, split into its
// exactly-even and exactly-odd frequency parts so each spatial component is a
// pure cosine/sine sum with no symmetry leakage. Kernels are centered at
// (n/2, n/2).
spatial_pair spatial_kernels(const Eigen::MatrixXd& transfer, int n) {
  Eigen::MatrixXd even_part(n, n), odd_part(n, n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const double g = transfer(u, v);
      const double gm = transfer((n - u) % n, (n - v) % n);
      even_part(u, v) = 0.5 * (g + gm);
      odd_part(u, v) = 0.5 * (g - gm);
    }
  }
  const int c0 = n / 2;
  spatial_pair out{Eigen::MatrixXd::Zero(n, n), Eigen::MatrixXd::Zero(n, n)};
  for (int r = 0; r < n; ++r) {
    for (int c = 0; c < n; ++c) {
      double se = 0.0, so = 0.0;
      for (int u = 0; u < n; ++u) {
        for (int v = 0; v < n; ++v) {
          const double ang = 2.0 * kPi * (u * (r - c0) + v * (c - c0)) / n;
          se += even_part(u, v) * std::cos(ang);
          so += odd_part(u, v) * std::sin(ang);
        }
      }
      out.even(r, c) = se / (n * n);
      out.odd(r, c) = so / (n * n);
    }
  }
  return out;
}

Eigen::VectorXd vectorize(const Eigen::MatrixXd& kernel, int n) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(n) * n);
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < n; ++c) v[r * n + c] = kernel(r, c);
  return v;
}

void write_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

Eigen::MatrixXd log_gabor_transfer(const log_gabor_params& params, int scale, int orientation) {
  check_params(params);
  const int n = params.patch_side;
  const double f0 = 1.0 / (params.min_wavelength * std::pow(params.scale_factor, scale));
  const double theta0 = orientation * kPi / params.orientations;
  const double sigma_theta = 0.5 * kPi / params.orientations;
  const double log_sigma = std::log(params.sigma_on_f);
  Eigen::MatrixXd g(n, n);
  for (int u = 0; u < n; ++u) {
    for (int v = 0; v < n; ++v) {
      const double fy = static_cast<double>(signed_freq(u, n)) / n;
      const double fx = static_cast<double>(signed_freq(v, n)) / n;
      const double f = std::hypot(fx, fy);
      if (f == 0.0) {
        g(u, v) = 0.0;  // zero DC response: log-Gabor defining property
        continue;
      }
      const double lr = std::log(f / f0);
      const double radial = std::exp(-(lr * lr) / (2.0 * log_sigma * log_sigma));
      const double dtheta = wrap_angle(std::atan2(fy, fx) - theta0);
      const double angular = std::exp(-(dtheta * dtheta) / (2.0 * sigma_theta * sigma_theta));
      g(u, v) = radial * angular;
    }
  }
  return g;
}

dictionary log_gabor_dictionary(const log_gabor_params& params, Eigen::Index k) {
  check_params(params);
  const Eigen::Index bank =
      static_cast<Eigen::Index>(params.scales) * params.orientations * params.phases;
  if (k <= 0 || k > bank)
    throw std::invalid_argument("log_gabor_dictionary: k exceeds bank size");
  const int n = params.patch_side;
  const Eigen::Index m = static_cast<Eigen::Index>(n) * n;

  std::vector<Eigen::VectorXd> signed_kernels;
  signed_kernels.reserve(bank);
  for (int s = 0; s < params.scales; ++s) {
    for (int o = 0; o < params.orientations; ++o) {
      const spatial_pair sp = spatial_kernels(log_gabor_transfer(params, s, o), n);
      const Eigen::VectorXd he = vectorize(sp.even, n);
      const Eigen::VectorXd ho = vectorize(sp.odd, n);
      for (int p = 0; p < params.phases; ++p) {
        const double phi = kPi * p / params.phases;
        signed_kernels.push_back(std::cos(phi) * he + std::sin(phi) * ho);
      }
    }
  }

  std::vector<Eigen::VectorXd> candidates;
  if (params.signed_atoms) {
    candidates = std::move(signed_kernels);
  } else {
    candidates.reserve(2 * signed_kernels.size());
    for (const auto& ker : signed_kernels) candidates.push_back(ker.cwiseMax(0.0));
    for (const auto& ker : signed_kernels) candidates.push_back((-ker).cwiseMax(0.0));
  }

  dictionary d;
  d.nonnegative = !params.signed_atoms;
  d.atoms.resize(m, k);
  Eigen::Index written = 0;
  for (const auto& cand : candidates) {
    if (written == k) break;
    const double norm = cand.norm();
    if (norm < 1e-12) continue;  // degenerate rectified half
    d.atoms.col(written++) = cand / norm;
  }
  if (written != k) throw std::invalid_argument("log_gabor_dictionary: k exceeds bank size");
  return d;
}

dictionary overcomplete_dct_dictionary(int patch_side, int atoms_per_axis) {
  if (patch_side <= 0) throw std::invalid_argument("dct: patch_side must be positive");
  if (atoms_per_axis < patch_side)
    throw std::invalid_argument("dct: atoms_per_axis must be >= patch_side");
  Eigen::MatrixXd c(patch_side, atoms_per_axis);
  for (int j = 0; j < atoms_per_axis; ++j) {
    for (int i = 0; i < patch_side; ++i)
      c(i, j) = std::cos(kPi * j * (i + 0.5) / atoms_per_axis);
    if (j > 0) c.col(j).array() -= c.col(j).mean();
    c.col(j) /= c.col(j).norm();
  }
  dictionary d;
  d.nonnegative = false;
  const Eigen::Index m = static_cast<Eigen::Index>(patch_side) * patch_side;
  d.atoms.resize(m, static_cast<Eigen::Index>(atoms_per_axis) * atoms_per_axis);
  for (int j1 = 0; j1 < atoms_per_axis; ++j1)
    for (int j2 = 0; j2 < atoms_per_axis; ++j2) {
      const Eigen::Index k = static_cast<Eigen::Index>(j1) * atoms_per_axis + j2;
      for (int r = 0; r < patch_side; ++r)
        for (int cc = 0; cc < patch_side; ++cc)
          d.atoms(r * patch_side + cc, k) = c(r, j1) * c(cc, j2);
    }
  return normalize_columns(std::move(d));
}

dictionary normalize_columns(dictionary d) {
  for (Eigen::Index k = 0; k < d.atoms.cols(); ++k) {
    const double norm = d.atoms.col(k).norm();
    if (norm == 0.0)
      throw std::invalid_argument("normalize_columns: zero column at index " + std::to_string(k));
    d.atoms.col(k) /= norm;
  }
  return d;
}

void save_dictionary(const dictionary& d, const std::string& path) {
  static_assert(std::endian::native == std::endian::little,
                "dictionary file writer assumes a little-endian host");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(path + ": unwritable path");
  out.write("SDIC", 4);
  write_u32(out, static_cast<std::uint32_t>(d.atoms.rows()));
  write_u32(out, static_cast<std::uint32_t>(d.atoms.cols()));
  const unsigned char flags = d.nonnegative ? 0x01 : 0x00;
  out.write(reinterpret_cast<const char*>(&flags), 1);
  out.write(reinterpret_cast<const char*>(d.atoms.data()),
            static_cast<std::streamsize>(sizeof(double) * d.atoms.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

dictionary load_dictionary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": unreadable file");
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "SDIC")
    throw std::runtime_error(path + ": not a dictionary file");
  const std::uint32_t m = read_u32(in);
  const std::uint32_t k = read_u32(in);
  unsigned char flags = 0;
  in.read(reinterpret_cast<char*>(&flags), 1);
  if (!in || m == 0 || k == 0) throw std::runtime_error(path + ": malformed header");
  dictionary d;
  d.nonnegative = (flags & 0x01) != 0;
  d.atoms.resize(m, k);
  in.read(reinterpret_cast<char*>(d.atoms.data()),
          static_cast<std::streamsize>(sizeof(double) * d.atoms.size()));
  if (static_cast<std::size_t>(in.gcount()) != sizeof(double) * d.atoms.size())
    throw std::runtime_error(path + ": truncated payload");
  return d;
}

void save_atom_mosaic(const dictionary& d, int patch_side, const std::string& path) {
  if (static_cast<Eigen::Index>(patch_side) * patch_side != d.atoms.rows())
    throw std::invalid_argument("save_atom_mosaic: patch_side mismatch");
  const int k = static_cast<int>(d.atoms.cols());
  const int tiles = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(k))));
  const int cell = patch_side + 1;
  image img(tiles * cell + 1, tiles * cell + 1, 0.0);
  for (int a = 0; a < k; ++a) {
    const auto col = d.atoms.col(a);
    const double lo = col.minCoeff();
    const double hi = col.maxCoeff();
    const double span = (hi > lo) ? hi - lo : 1.0;
    const int ty = (a / tiles) * cell + 1;
    const int tx = (a % tiles) * cell + 1;
    for (int r = 0; r < patch_side; ++r)
      for (int c = 0; c < patch_side; ++c)
        img.at(tx + c, ty + r) = 255.0 * (col[r * patch_side + c] - lo) / span;
  }
  save_image(img, path);
}

}  // namespace sdn
