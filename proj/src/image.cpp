#include "sdn/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <stdexcept>

namespace sdn {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

// Skips PGM whitespace and '#' comment lines, then parses one unsigned int.
int read_pnm_int(std::istream& in, const std::string& path) {
  int c = in.get();
  while (c != EOF) {
    if (c == '#') {
      while (c != EOF && c != '\n') c = in.get();
    } else if (!std::isspace(c)) {
      break;
    }
    c = in.get();
  }
  if (c == EOF || !std::isdigit(c)) fail(path, "malformed PGM header");
  long v = 0;
  while (c != EOF && std::isdigit(c)) {
    v = v * 10 + (c - '0');
    if (v > 1 << 30) fail(path, "malformed PGM header");
    c = in.get();
  }
  return static_cast<int>(v);
}

image load_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(path, "unreadable file");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (magic[0] != 'P' || magic[1] != '5') fail(path, "unsupported format (expected PGM P5)");
  const int w = read_pnm_int(in, path);
  const int h = read_pnm_int(in, path);
  const int maxval = read_pnm_int(in, path);
  if (w <= 0 || h <= 0) fail(path, "malformed PGM header");
  if (maxval > 255) fail(path, "unsupported bit depth");
  if (maxval <= 0) fail(path, "malformed PGM header");
  // The header terminator is the single whitespace byte just consumed.
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size())
    fail(path, "header/payload size mismatch");
  image img(w, h);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i];
  return img;
}

image load_png(const std::string& path) {
  std::FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(path, "unreadable file");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    if (png) png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "libpng init failed");
  }
  std::vector<png_bytep> rows;
  image img;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "corrupt PNG");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  const png_uint_32 w = png_get_image_width(png, info);
  const png_uint_32 h = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "unsupported format (expected 8-bit grayscale PNG)");
  }
  if (depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "unsupported bit depth");
  }
  img = image(static_cast<int>(w), static_cast<int>(h));
  std::vector<unsigned char> raw(static_cast<std::size_t>(w) * h);
  rows.resize(h);
  for (png_uint_32 y = 0; y < h; ++y) rows[y] = raw.data() + static_cast<std::size_t>(y) * w;
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  for (std::size_t i = 0; i < raw.size(); ++i) img.pixels[i] = raw[i];
  return img;
}

bool has_suffix(const std::string& s, const std::string& suf) {
  return s.size() >= suf.size() && s.compare(s.size() - suf.size(), suf.size(), suf) == 0;
}

bool looks_like_png(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  unsigned char sig[8] = {};
  in.read(reinterpret_cast<char*>(sig), 8);
  static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', 0x0d, 0x0a, 0x1a, 0x0a};
  return in.gcount() == 8 && std::equal(sig, sig + 8, png_sig);
}

}  // namespace

image load_image(const std::string& path) {
  if (has_suffix(path, ".png") || looks_like_png(path)) return load_png(path);
  return load_pgm(path);
}

void save_image(const image& img, const std::string& path) {
  if (img.width <= 0 || img.height <= 0 || img.pixels.size() != img.size())
    throw std::invalid_argument("save_image: invalid image");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(path, "unwritable path");
  out << "P5\n" << img.width << " " << img.height << "\n255\n";
  std::vector<unsigned char> raw(img.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const double v = std::clamp(img.pixels[i], 0.0, 255.0);
    raw[i] = static_cast<unsigned char>(std::lround(v));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) fail(path, "unwritable path");
}

image add_gaussian_noise(const image& img, const noise_spec& spec) {
  if (spec.sigma < 0.0) throw std::invalid_argument("add_gaussian_noise: sigma < 0");
  image out = img;
  if (spec.sigma == 0.0) {
    for (double& v : out.pixels) v = std::clamp(v, 0.0, 255.0);
    return out;
  }
  std::mt19937_64 gen(spec.seed);
  // Box-Muller over mt19937_64: fixed, portable sample sequence regardless of
  // the standard library's normal_distribution implementation.
  bool have_spare = false;
  double spare = 0.0;
  auto uniform01 = [&gen]() { return (gen() >> 11) * 0x1.0p-53; };
  auto gauss = [&]() {
    if (have_spare) {
      have_spare = false;
      return spare;
    }
    const double u1 = 1.0 - uniform01();  // (0, 1]
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare = r * std::sin(a);
    have_spare = true;
    return r * std::cos(a);
  };
  for (double& v : out.pixels) v = std::clamp(v + spec.sigma * gauss(), 0.0, 255.0);
  return out;
}

double mse(const image& a, const image& b) {
  if (a.width != b.width || a.height != b.height)
    throw std::invalid_argument("mse: dimension mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const double d = a.pixels[i] - b.pixels[i];
    acc += d * d;
  }
  return acc / static_cast<double>(a.pixels.size());
}

double psnr(const image& a, const image& b) {
  const double m = mse(a, b);
  if (m == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(255.0 * 255.0 / m);
}

}  // namespace sdn
