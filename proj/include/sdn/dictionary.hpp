#ifndef SDN_DICTIONARY_HPP
#define SDN_DICTIONARY_HPP

#include <Eigen/Core>
#include <string>

namespace sdn {

// Over-complete dictionary: M x K, unit-norm columns, K > M.
struct dictionary {
  Eigen::MatrixXd atoms;
  bool nonnegative = false;

  Eigen::Index signal_dim() const { return atoms.rows(); }
  Eigen::Index atom_count() const { return atoms.cols(); }
};

struct log_gabor_params {
  int patch_side = 8;
  int scales = 4;
  int orientations = 8;
  int phases = 8;
  double min_wavelength = 3.0;
  double scale_factor = 1.6;   // wavelength multiplier between scales
  double sigma_on_f = 0.65;    // bandwidth ratio of the log-Gaussian radial filter
  bool signed_atoms = false;   // true: raw signed kernels; false: rectified nonnegative split
};

// Polar-frequency log-Gabor transfer function for one (scale, orientation) on
// the patch-sized DFT grid; exactly 0 at the DC bin. Exposed for testing.
Eigen::MatrixXd log_gabor_transfer(const log_gabor_params& params, int scale, int orientation);

// Spatial log-Gabor filter bank. Atom order is deterministic: scale-major,
// then orientation, then phase; the rectified (nonnegative) bank emits all
// positive parts in that order, then all negative parts.
dictionary log_gabor_dictionary(const log_gabor_params& params, Eigen::Index k);

// Separable over-complete DCT: K = atoms_per_axis^2 Kronecker products of 1-D
// over-complete DCT atoms (mean-subtracted for j > 0, then normalized).
dictionary overcomplete_dct_dictionary(int patch_side, int atoms_per_axis);

// Rescales every column to unit Euclidean norm. Throws on a zero column,
// identifying its index.
dictionary normalize_columns(dictionary d);

// Flat binary dictionary file: magic "SDIC", u32 M, u32 K, u8 flags
// (bit 0 set = nonnegative), then K columns of M little-endian f64.
void save_dictionary(const dictionary& d, const std::string& path);
dictionary load_dictionary(const std::string& path);

// PGM contact sheet of atoms (each tile rescaled to full range) for visual
// inspection.
void save_atom_mosaic(const dictionary& d, int patch_side, const std::string& path);

}  // namespace sdn

#endif
