#ifndef SDN_IMAGE_HPP
#define SDN_IMAGE_HPP

#include <cstdint>
#include <string>
#include <vector>

namespace sdn {

// Grayscale image, row-major doubles, nominal range [0, 255].
struct image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  image() = default;
  image(int w, int h, double fill = 0.0)
      : width(w), height(h), pixels(static_cast<std::size_t>(w) * h, fill) {}

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

struct noise_spec {
  double sigma = 0.0;        // noise standard deviation, intensity units
  std::uint64_t seed = 0;
};

// Reads an 8-bit grayscale PGM (P5) or 8-bit grayscale PNG.
image load_image(const std::string& path);

// Writes binary PGM (P5, maxval 255). Values are clamped to [0,255] and
// rounded to nearest before writing.
void save_image(const image& img, const std::string& path);

// out[i] = clamp(img[i] + g_i, 0, 255), g_i ~ N(0, sigma^2) from mt19937_64
// seeded with spec.seed and a Box-Muller transform. Same (img, spec) always
// yields the same output.
image add_gaussian_noise(const image& img, const noise_spec& spec);

double mse(const image& a, const image& b);

// 10*log10(255^2 / mse); +infinity when the images are identical.
double psnr(const image& a, const image& b);

}  // namespace sdn

#endif
