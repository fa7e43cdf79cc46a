#ifndef SDN_PIPELINE_HPP
#define SDN_PIPELINE_HPP

#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "sdn/dict_update.hpp"
#include "sdn/dictionary.hpp"
#include "sdn/exec.hpp"
#include "sdn/image.hpp"
#include "sdn/sparse_coding.hpp"

namespace sdn {

enum class dict_kind { log_gabor, dct };
enum class updater_kind { nnmf, ksvd, none };

struct denoise_config {
  int patch_side = 8;
  int stride = 1;
  dict_kind dict = dict_kind::log_gabor;
  Eigen::Index dict_k = 256;
  coder_kind coder = coder_kind::amp;
  updater_kind updater = updater_kind::nnmf;
  int outer_iters = 10;
  double sigma = 0.0;             // assumed noise level, drives the error goal
  double epsilon_factor = 1.15;   // epsilon = (factor * sigma * patch_side)^2 per column
  double nn_threshold = 0.9;
  int max_atoms = 16;
  std::uint64_t seed = 0;
  int nmf_inner_iters = 5;
  exec_policy exec = exec_policy::parallel;

  // Per-column residual-energy goal; floored so a sigma of 0 still terminates.
  double column_epsilon() const;
};

struct denoise_report {
  double psnr_in = std::numeric_limits<double>::quiet_NaN();
  double psnr_out = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> outer_iteration_errors;  // ||Y - DS||_F after each update phase
  std::int64_t atoms_replaced = 0;
  double wall_time_seconds = 0.0;
  std::int64_t inner_product_count = 0;
  std::int64_t columns_epsilon = 0;    // per-column termination tallies (final pass)
  std::int64_t columns_max_atoms = 0;
  std::int64_t columns_stall = 0;
};

// Builds the initial dictionary for a config (rectified nonnegative log-Gabor
// bank for the NMF pipeline, signed atoms otherwise).
dictionary make_initial_dictionary(const denoise_config& cfg);

// Full denoising pass: extract patches, learn the dictionary by alternating
// sparse coding and dictionary updates, re-code, reconstruct by overlap
// averaging. Deterministic for fixed (noisy, cfg).
std::pair<image, denoise_report> denoise(const image& noisy, const denoise_config& cfg);

// Adds noise to `clean`, denoises, and fills in psnr_in / psnr_out against the
// clean reference. noise.sigma must equal cfg.sigma.
denoise_report denoise_with_reference(const image& clean, const denoise_config& cfg,
                                      const noise_spec& noise, image* denoised_out = nullptr,
                                      image* noisy_out = nullptr);

}  // namespace sdn

#endif
