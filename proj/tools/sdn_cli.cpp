#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <string>

#include "sdn/bench.hpp"
#include "sdn/dictionary.hpp"
#include "sdn/image.hpp"
#include "sdn/pipeline.hpp"

namespace {

int run(int argc, char** argv) {
  CLI::App app{"Sparse-dictionary grayscale image denoiser"};
  app.require_subcommand(1);

  // add-noise
  auto* noise_cmd = app.add_subcommand("add-noise", "Add seeded Gaussian noise to an image");
  std::string n_in, n_out;
  double n_sigma = 20.0;
  std::uint64_t n_seed = 1;
  noise_cmd->add_option("--in", n_in, "input image (PGM/PNG)")->required();
  noise_cmd->add_option("--out", n_out, "output PGM")->required();
  noise_cmd->add_option("--sigma", n_sigma, "noise standard deviation")->default_val(20.0);
  noise_cmd->add_option("--seed", n_seed, "RNG seed")->default_val(1);

  // denoise
  auto* den_cmd = app.add_subcommand("denoise", "Denoise an image");
  std::string d_in, d_out, d_ref;
  sdn::denoise_config cfg;
  bool d_serial = false;
  int d_threads = 0;
  std::string d_dict = "log_gabor", d_coder = "amp", d_updater = "nnmf";
  den_cmd->add_option("--in", d_in, "noisy input image (PGM/PNG)")->required();
  den_cmd->add_option("--out", d_out, "denoised output PGM")->required();
  den_cmd->add_option("--ref", d_ref, "clean reference image for PSNR reporting");
  den_cmd->add_option("--sigma", cfg.sigma, "assumed noise level")->default_val(20.0);
  den_cmd->add_option("--patch-side", cfg.patch_side, "patch side in pixels")->default_val(8);
  den_cmd->add_option("--stride", cfg.stride, "patch stride")->default_val(1);
  den_cmd->add_option("--dict", d_dict, "dictionary kind: log_gabor|dct")->default_val("log_gabor");
  den_cmd->add_option("--dict-k", cfg.dict_k, "atom count")->default_val(256);
  den_cmd->add_option("--coder", d_coder, "sparse coder: omp|amp")->default_val("amp");
  den_cmd->add_option("--updater", d_updater, "dictionary updater: nnmf|ksvd|none")
      ->default_val("nnmf");
  den_cmd->add_option("--outer-iters", cfg.outer_iters, "learning rounds")->default_val(10);
  den_cmd->add_option("--epsilon-factor", cfg.epsilon_factor,
                      "per-column error goal = (factor*sigma*patch_side)^2")
      ->default_val(1.15);
  den_cmd->add_option("--nn-threshold", cfg.nn_threshold, "AMP acceptance ratio")->default_val(0.9);
  den_cmd->add_option("--max-atoms", cfg.max_atoms, "sparsity cap per patch")->default_val(16);
  den_cmd->add_option("--nmf-inner-iters", cfg.nmf_inner_iters, "multiplicative steps per round")
      ->default_val(5);
  den_cmd->add_option("--seed", cfg.seed, "seed")->default_val(0);
  den_cmd->add_option("--threads", d_threads, "worker thread count (0 = all cores)")->default_val(0);
  den_cmd->add_flag("--serial", d_serial, "run the serial reference kernels");

  // gen-dict
  auto* gen_cmd = app.add_subcommand("gen-dict", "Generate a dictionary file");
  std::string g_kind = "log_gabor", g_out, g_mosaic;
  int g_patch_side = 8;
  long g_k = 256;
  bool g_signed = false;
  gen_cmd->add_option("--kind", g_kind, "log_gabor|dct")->default_val("log_gabor");
  gen_cmd->add_option("--k", g_k, "atom count")->default_val(256);
  gen_cmd->add_option("--patch-side", g_patch_side, "patch side")->default_val(8);
  gen_cmd->add_option("--out", g_out, "output dictionary file")->required();
  gen_cmd->add_option("--mosaic", g_mosaic, "also write a PGM atom mosaic");
  gen_cmd->add_flag("--signed", g_signed, "signed log-Gabor atoms (default: rectified nonnegative)");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run a PSNR benchmark from a spec file");
  std::string b_spec;
  bench_cmd->add_option("--spec", b_spec, "key=value spec file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 1;
  }

  try {
    if (*noise_cmd) {
      const sdn::image img = sdn::load_image(n_in);
      sdn::save_image(sdn::add_gaussian_noise(img, {n_sigma, n_seed}), n_out);
      std::cout << "wrote " << n_out << " (sigma=" << n_sigma << ", seed=" << n_seed << ")\n";
    } else if (*den_cmd) {
      if (d_dict == "log_gabor") cfg.dict = sdn::dict_kind::log_gabor;
      else if (d_dict == "dct") cfg.dict = sdn::dict_kind::dct;
      else throw CLI::ValidationError("--dict", "must be log_gabor or dct");
      if (d_coder == "omp") cfg.coder = sdn::coder_kind::omp;
      else if (d_coder == "amp") cfg.coder = sdn::coder_kind::amp;
      else throw CLI::ValidationError("--coder", "must be omp or amp");
      if (d_updater == "nnmf") cfg.updater = sdn::updater_kind::nnmf;
      else if (d_updater == "ksvd") cfg.updater = sdn::updater_kind::ksvd;
      else if (d_updater == "none") cfg.updater = sdn::updater_kind::none;
      else throw CLI::ValidationError("--updater", "must be nnmf, ksvd or none");
      cfg.exec = d_serial ? sdn::exec_policy::serial : sdn::exec_policy::parallel;
      sdn::set_threads(d_threads);

      const sdn::image noisy = sdn::load_image(d_in);
      auto [out, rep] = sdn::denoise(noisy, cfg);
      sdn::save_image(out, d_out);
      std::cout << "wrote " << d_out << "\n"
                << "  learning rounds: " << rep.outer_iteration_errors.size()
                << ", atoms replaced: " << rep.atoms_replaced << "\n"
                << "  selection inner products: " << rep.inner_product_count << "\n"
                << "  column stops: epsilon=" << rep.columns_epsilon
                << " max_atoms=" << rep.columns_max_atoms << " stall=" << rep.columns_stall << "\n"
                << "  wall time: " << rep.wall_time_seconds << " s\n";
      if (!d_ref.empty()) {
        const sdn::image ref = sdn::load_image(d_ref);
        std::cout << "  psnr vs reference: noisy " << sdn::psnr(ref, noisy) << " dB -> denoised "
                  << sdn::psnr(ref, out) << " dB\n";
      }
    } else if (*gen_cmd) {
      sdn::dictionary d;
      if (g_kind == "dct") {
        const int per_axis = static_cast<int>(std::lround(std::sqrt(static_cast<double>(g_k))));
        if (static_cast<long>(per_axis) * per_axis != g_k)
          throw CLI::ValidationError("--k", "dct atom count must be a perfect square");
        d = sdn::overcomplete_dct_dictionary(g_patch_side, per_axis);
      } else if (g_kind == "log_gabor") {
        sdn::log_gabor_params p;
        p.patch_side = g_patch_side;
        p.signed_atoms = g_signed;
        d = sdn::log_gabor_dictionary(p, g_k);
      } else {
        throw CLI::ValidationError("--kind", "must be log_gabor or dct");
      }
      sdn::save_dictionary(d, g_out);
      std::cout << "wrote " << g_out << " (" << d.atoms.rows() << "x" << d.atoms.cols()
                << (d.nonnegative ? ", nonnegative" : ", signed") << ")\n";
      if (!g_mosaic.empty()) {
        sdn::save_atom_mosaic(d, g_patch_side, g_mosaic);
        std::cout << "wrote " << g_mosaic << "\n";
      }
    } else if (*bench_cmd) {
      const sdn::bench_spec spec = sdn::parse_bench_spec(b_spec);
      sdn::set_threads(0);
      sdn::run_bench(spec, &std::cout);
      std::cout << "wrote " << spec.output << "\n";
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
