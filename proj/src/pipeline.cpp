#include "sdn/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "sdn/patching.hpp"

namespace sdn {

namespace {

constexpr int kDeadAtomUsageMin = 1;
constexpr double kDeadAtomCoherenceMax = 0.999;

void validate(const image& noisy, const denoise_config& cfg) {
  if (cfg.patch_side < 1 || cfg.stride < 1)
    throw std::invalid_argument("denoise: patch_side and stride must be positive");
  if (noisy.width < cfg.patch_side || noisy.height < cfg.patch_side)
    throw std::invalid_argument("denoise: image smaller than patch");
  if (cfg.sigma < 0.0) throw std::invalid_argument("denoise: sigma must be >= 0");
  if (cfg.outer_iters < 1) throw std::invalid_argument("denoise: outer_iters must be >= 1");
  const Eigen::Index m = static_cast<Eigen::Index>(cfg.patch_side) * cfg.patch_side;
  if (cfg.dict_k <= m)
    throw std::invalid_argument("denoise: dict_k must exceed the patch area (over-complete)");
  if (cfg.max_atoms < 1 || cfg.max_atoms > m)
    throw std::invalid_argument("denoise: max_atoms must lie in [1, patch area]");
  if (cfg.updater == updater_kind::nnmf && cfg.dict != dict_kind::log_gabor)
    throw std::invalid_argument("denoise: the nnmf updater requires the nonnegative log_gabor dictionary");
}

coding_config coder_config(const denoise_config& cfg) {
  coding_config c;
  c.epsilon = cfg.column_epsilon();
  c.max_atoms = cfg.max_atoms;
  c.nn_threshold = cfg.nn_threshold;
  c.nonnegative_coefficients = (cfg.updater == updater_kind::nnmf);
  return c;
}

void tally(const sparse_code& code, denoise_report& rep) {
  rep.columns_epsilon = rep.columns_max_atoms = rep.columns_stall = 0;
  for (const auto& col : code.columns) {
    switch (col.reason) {
      case termination_reason::epsilon: ++rep.columns_epsilon; break;
      case termination_reason::max_atoms: ++rep.columns_max_atoms; break;
      case termination_reason::stall: ++rep.columns_stall; break;
    }
  }
}

double mean_column_residual(const sparse_code& code) {
  double acc = 0.0;
  for (const auto& col : code.columns) acc += col.final_err;
  return acc / static_cast<double>(code.columns.size());
}

}  // namespace

double denoise_config::column_epsilon() const {
  const double goal = epsilon_factor * sigma * patch_side;  // sqrt(M) = patch_side
  return std::max(goal * goal, 1e-9);
}

dictionary make_initial_dictionary(const denoise_config& cfg) {
  if (cfg.dict == dict_kind::dct) {
    const int per_axis = static_cast<int>(std::lround(std::sqrt(static_cast<double>(cfg.dict_k))));
    if (static_cast<Eigen::Index>(per_axis) * per_axis != cfg.dict_k)
      throw std::invalid_argument("denoise: dct dict_k must be a perfect square");
    return overcomplete_dct_dictionary(cfg.patch_side, per_axis);
  }
  log_gabor_params p;
  p.patch_side = cfg.patch_side;
  p.signed_atoms = (cfg.updater != updater_kind::nnmf);
  if (!p.signed_atoms) {
    // The rectified bank needs near-DC atoms for smooth patches: widen the
    // bank by one coarse scale, then drop the near-Nyquist scale.
    p.scales = 5;
    const Eigen::Index per_scale =
        static_cast<Eigen::Index>(p.orientations) * p.phases;
    const Eigen::Index want = cfg.dict_k + per_scale;
    if (want <= static_cast<Eigen::Index>(p.scales) * per_scale) {
      dictionary full = log_gabor_dictionary(p, want);
      dictionary d;
      d.nonnegative = full.nonnegative;
      d.atoms = full.atoms.rightCols(cfg.dict_k);
      return d;
    }
    p.scales = 4;
  }
  return log_gabor_dictionary(p, cfg.dict_k);
}

std::pair<image, denoise_report> denoise(const image& noisy, const denoise_config& cfg) {
  validate(noisy, cfg);
  const auto t0 = std::chrono::steady_clock::now();
  denoise_report rep;

  const patch_matrix y = extract_patches(noisy, cfg.patch_side, cfg.stride, cfg.exec);
  dictionary d = make_initial_dictionary(cfg);
  const coding_config ccfg = coder_config(cfg);

  if (cfg.updater != updater_kind::none) {
    for (int t = 0; t < cfg.outer_iters; ++t) {
      sparse_code s = encode_matrix(d, y, ccfg, cfg.coder, cfg.exec);
      rep.inner_product_count += s.total_inner_products();
      if (mean_column_residual(s) <= ccfg.epsilon) break;  // error goal met

      update_report urep;
      factorization_state st = make_factorization_state(y, std::move(d), std::move(s), cfg.exec);
      if (cfg.updater == updater_kind::nnmf)
        st = nmf_update_dictionary(y, std::move(st), cfg.nmf_inner_iters, &urep, cfg.exec);
      else
        st = ksvd_update_dictionary(y, std::move(st), &urep);
      st = replace_dead_atoms(y, std::move(st), kDeadAtomUsageMin, kDeadAtomCoherenceMax, &urep,
                              cfg.exec);
      rep.atoms_replaced += urep.atoms_replaced;
      rep.outer_iteration_errors.push_back(st.frobenius_error);
      d = std::move(st.dict);
    }
  }

  // Final coding with the learned dictionary, then patch re-assembly.
  sparse_code s = encode_matrix(d, y, ccfg, cfg.coder, cfg.exec);
  rep.inner_product_count += s.total_inner_products();
  tally(s, rep);

  patch_matrix estimates;
  estimates.grid = y.grid;
  estimates.data.resize(y.data.rows(), y.data.cols());
  for_each_index(y.data.cols(), cfg.exec, [&](std::int64_t j) {
    const auto& col = s.columns[static_cast<std::size_t>(j)];
    Eigen::VectorXd est = Eigen::VectorXd::Zero(y.data.rows());
    for (std::size_t t = 0; t < col.support.size(); ++t)
      est += col.coefficients[static_cast<Eigen::Index>(t)] * d.atoms.col(col.support[t]);
    estimates.data.col(j) = est;
  });
  image out = reconstruct_from_patches(estimates, y.grid, &noisy, cfg.exec);

  rep.wall_time_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return {std::move(out), std::move(rep)};
}

denoise_report denoise_with_reference(const image& clean, const denoise_config& cfg,
                                      const noise_spec& noise, image* denoised_out,
                                      image* noisy_out) {
  if (noise.sigma != cfg.sigma)
    throw std::invalid_argument("denoise_with_reference: noise.sigma must equal cfg.sigma");
  const image noisy = add_gaussian_noise(clean, noise);
  auto [out, rep] = denoise(noisy, cfg);
  rep.psnr_in = psnr(clean, noisy);
  rep.psnr_out = psnr(clean, out);
  if (denoised_out != nullptr) *denoised_out = std::move(out);
  if (noisy_out != nullptr) *noisy_out = noisy;
  return rep;
}

}  // namespace sdn
