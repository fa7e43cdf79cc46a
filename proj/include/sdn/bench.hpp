#ifndef SDN_BENCH_HPP
#define SDN_BENCH_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "sdn/pipeline.hpp"

namespace sdn {

// One benchmarked method: dictionary, coder, updater. `label` is the token it
// was parsed from and is what the CSV's method column carries.
struct bench_method {
  dict_kind dict = dict_kind::dct;
  coder_kind coder = coder_kind::omp;
  updater_kind updater = updater_kind::none;
  std::string label;
};

struct bench_spec {
  std::vector<std::string> images;
  std::vector<double> sigmas;
  std::vector<bench_method> methods;
  std::vector<std::uint64_t> seeds;
  std::string output;
  denoise_config base;  // tunables applied to every cell (sigma/updater overwritten per cell)
};

// Accepts "dict+coder+updater" triples (e.g. "log_gabor+amp+nnmf") and the
// shorthands "dct" (dct+omp+none), "ksvd" (dct+omp+ksvd) and
// "nnmf"/"log-gabor+nnmf" (log_gabor+amp+nnmf).
bench_method parse_method(const std::string& token);

// Parses a key=value spec file (lists comma-separated). Required keys:
// images, sigmas, methods, seeds, output.
bench_spec parse_bench_spec(const std::string& path);

// Runs every (image, sigma, method, seed) cell and writes the CSV:
// image,sigma,method,seed,psnr_in,psnr_out,wall_time_s,inner_products,atoms_replaced,status
// plus mean/std aggregate rows per (image, sigma, method). Cell failures are
// recorded in the status column and the run continues. Byte-deterministic
// apart from the wall_time_s column.
void run_bench(const bench_spec& spec, std::ostream* human_log = nullptr);

}  // namespace sdn

#endif
