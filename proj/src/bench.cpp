#include "sdn/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace sdn {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::string fmt4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

std::string fmtg(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

std::string sanitize(std::string msg) {
  for (char& c : msg)
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  return msg;
}

struct cell_result {
  bool ok = false;
  denoise_report rep;
  std::string error;
};

struct agg {
  double mean = std::numeric_limits<double>::quiet_NaN();
  double stdev = std::numeric_limits<double>::quiet_NaN();
};

agg aggregate(const std::vector<double>& xs) {
  agg a;
  if (xs.empty()) return a;
  double m = 0.0;
  for (double x : xs) m += x;
  m /= static_cast<double>(xs.size());
  a.mean = m;
  if (xs.size() == 1) {
    a.stdev = 0.0;
    return a;
  }
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  a.stdev = std::sqrt(acc / static_cast<double>(xs.size() - 1));
  return a;
}

}  // namespace

bench_method parse_method(const std::string& token) {
  auto lower = token;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  std::replace(lower.begin(), lower.end(), '-', '_');

  bench_method m;
  m.label = token;
  std::vector<std::string> parts;
  std::stringstream ss(lower);
  std::string p;
  while (std::getline(ss, p, '+')) parts.push_back(p);

  auto parse_dict = [](const std::string& s) {
    if (s == "log_gabor") return dict_kind::log_gabor;
    if (s == "dct") return dict_kind::dct;
    throw std::invalid_argument("unknown dictionary kind: " + s);
  };
  auto parse_coder = [](const std::string& s) {
    if (s == "omp") return coder_kind::omp;
    if (s == "amp") return coder_kind::amp;
    throw std::invalid_argument("unknown coder: " + s);
  };
  auto parse_updater = [](const std::string& s) {
    if (s == "nnmf") return updater_kind::nnmf;
    if (s == "ksvd") return updater_kind::ksvd;
    if (s == "none") return updater_kind::none;
    throw std::invalid_argument("unknown updater: " + s);
  };

  if (parts.size() == 1) {
    if (parts[0] == "dct") {
      m.dict = dict_kind::dct; m.coder = coder_kind::omp; m.updater = updater_kind::none;
    } else if (parts[0] == "ksvd") {
      m.dict = dict_kind::dct; m.coder = coder_kind::omp; m.updater = updater_kind::ksvd;
    } else if (parts[0] == "nnmf" || parts[0] == "log_gabor") {
      m.dict = dict_kind::log_gabor; m.coder = coder_kind::amp; m.updater = updater_kind::nnmf;
    } else {
      throw std::invalid_argument("unknown method: " + token);
    }
  } else if (parts.size() == 2) {
    m.dict = parse_dict(parts[0]);
    m.updater = parse_updater(parts[1]);
    m.coder = (m.updater == updater_kind::nnmf) ? coder_kind::amp : coder_kind::omp;
  } else if (parts.size() == 3) {
    m.dict = parse_dict(parts[0]);
    m.coder = parse_coder(parts[1]);
    m.updater = parse_updater(parts[2]);
  } else {
    throw std::invalid_argument("unknown method: " + token);
  }
  if (m.updater == updater_kind::nnmf && m.dict != dict_kind::log_gabor)
    throw std::invalid_argument("method " + token + ": nnmf requires the log_gabor dictionary");
  return m;
}

bench_spec parse_bench_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument(path + ": unreadable spec file");
  bench_spec spec;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "images") {
      spec.images = split_list(value);
    } else if (key == "sigmas") {
      for (const auto& s : split_list(value)) spec.sigmas.push_back(std::stod(s));
    } else if (key == "methods") {
      for (const auto& s : split_list(value)) spec.methods.push_back(parse_method(s));
    } else if (key == "seeds") {
      for (const auto& s : split_list(value)) spec.seeds.push_back(std::stoull(s));
    } else if (key == "output") {
      spec.output = value;
    } else if (key == "patch_side") {
      spec.base.patch_side = std::stoi(value);
    } else if (key == "stride") {
      spec.base.stride = std::stoi(value);
    } else if (key == "dict_k") {
      spec.base.dict_k = std::stol(value);
    } else if (key == "outer_iters") {
      spec.base.outer_iters = std::stoi(value);
    } else if (key == "max_atoms") {
      spec.base.max_atoms = std::stoi(value);
    } else if (key == "nn_threshold") {
      spec.base.nn_threshold = std::stod(value);
    } else if (key == "epsilon_factor") {
      spec.base.epsilon_factor = std::stod(value);
    } else if (key == "nmf_inner_iters") {
      spec.base.nmf_inner_iters = std::stoi(value);
    } else if (key == "exec") {
      if (value == "serial") spec.base.exec = exec_policy::serial;
      else if (value == "parallel") spec.base.exec = exec_policy::parallel;
      else throw std::invalid_argument(path + ": exec must be serial or parallel");
    } else {
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": unknown key " + key);
    }
  }
  if (spec.images.empty() || spec.sigmas.empty() || spec.methods.empty() || spec.seeds.empty() ||
      spec.output.empty())
    throw std::invalid_argument(path + ": images, sigmas, methods, seeds and output are required");
  return spec;
}

void run_bench(const bench_spec& spec, std::ostream* human_log) {
  // Sorted copies so the CSV rows come out ordered by (image, sigma, method, seed).
  auto images = spec.images;
  std::sort(images.begin(), images.end());
  auto sigmas = spec.sigmas;
  std::sort(sigmas.begin(), sigmas.end());
  auto methods = spec.methods;
  std::sort(methods.begin(), methods.end(),
            [](const bench_method& a, const bench_method& b) { return a.label < b.label; });
  auto seeds = spec.seeds;
  std::sort(seeds.begin(), seeds.end());

  std::map<std::string, image> cache;
  for (const auto& path : images) cache.emplace(path, load_image(path));

  std::string csv = "image,sigma,method,seed,psnr_in,psnr_out,wall_time_s,inner_products,atoms_replaced,status\n";

  for (const auto& img_path : images) {
    const image& clean = cache.at(img_path);
    for (double sigma : sigmas) {
      for (const auto& method : methods) {
        std::vector<double> in_vals, out_vals, wall_vals, prod_vals, repl_vals;
        std::string first_error;
        for (std::uint64_t seed : seeds) {
          cell_result cell;
          denoise_config cfg = spec.base;
          cfg.sigma = sigma;
          cfg.dict = method.dict;
          cfg.coder = method.coder;
          cfg.updater = method.updater;
          cfg.seed = seed;
          try {
            cell.rep = denoise_with_reference(clean, cfg, noise_spec{sigma, seed});
            cell.ok = true;
          } catch (const std::exception& e) {
            cell.error = sanitize(e.what());
            if (first_error.empty()) first_error = cell.error;
          }
          const auto& r = cell.rep;
          csv += img_path + "," + fmtg(sigma) + "," + method.label + "," + std::to_string(seed) +
                 "," + fmt4(cell.ok ? r.psnr_in : std::numeric_limits<double>::quiet_NaN()) + "," +
                 fmt4(cell.ok ? r.psnr_out : std::numeric_limits<double>::quiet_NaN()) + "," +
                 fmt4(cell.ok ? r.wall_time_seconds : 0.0) + "," +
                 std::to_string(cell.ok ? r.inner_product_count : 0) + "," +
                 std::to_string(cell.ok ? r.atoms_replaced : 0) + "," +
                 (cell.ok ? "ok" : cell.error) + "\n";
          if (cell.ok) {
            in_vals.push_back(r.psnr_in);
            out_vals.push_back(r.psnr_out);
            wall_vals.push_back(r.wall_time_seconds);
            prod_vals.push_back(static_cast<double>(r.inner_product_count));
            repl_vals.push_back(static_cast<double>(r.atoms_replaced));
          }
          if (human_log != nullptr) {
            (*human_log) << img_path << " sigma=" << fmtg(sigma) << " " << method.label
                         << " seed=" << seed;
            if (cell.ok)
              (*human_log) << "  psnr " << fmt4(cell.rep.psnr_in) << " -> "
                           << fmt4(cell.rep.psnr_out) << " dB  (" << fmt4(cell.rep.wall_time_seconds)
                           << " s)\n";
            else
              (*human_log) << "  ERROR: " << cell.error << "\n";
          }
        }
        const std::string status =
            in_vals.empty() ? (first_error.empty() ? "no successful runs" : first_error) : "ok";
        const agg ain = aggregate(in_vals), aout = aggregate(out_vals), awall = aggregate(wall_vals),
                  aprod = aggregate(prod_vals), arepl = aggregate(repl_vals);
        csv += img_path + "," + fmtg(sigma) + "," + method.label + ",mean," + fmt4(ain.mean) + "," +
               fmt4(aout.mean) + "," + fmt4(awall.mean) + "," + fmt4(aprod.mean) + "," +
               fmt4(arepl.mean) + "," + status + "\n";
        if (seeds.size() >= 2)
          csv += img_path + "," + fmtg(sigma) + "," + method.label + ",std," + fmt4(ain.stdev) +
                 "," + fmt4(aout.stdev) + "," + fmt4(awall.stdev) + "," + fmt4(aprod.stdev) + "," +
                 fmt4(arepl.stdev) + "," + status + "\n";
      }
    }
  }

  std::ofstream out(spec.output, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error(spec.output + ": unwritable path");
  out << csv;
}

}  // namespace sdn
