#include "itm/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

namespace itm {

namespace {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  int integer(int lo, int hi_exclusive) {
    if (hi_exclusive <= lo) return lo;
    return std::uniform_int_distribution<int>(lo, hi_exclusive - 1)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

// Sum of oriented sinusoids, normalized to [-1, 1].
std::vector<double> texture(Rng& rng, int w, int h) {
  std::vector<double> n(static_cast<std::size_t>(w) * h, 0.0);
  const double extent = std::max(w, h);
  constexpr double kTwoPi = 2.0 * std::numbers::pi;
  for (int octave = 0; octave < 4; ++octave) {
    const double freq = std::pow(2.0, octave + 1);
    for (int k = 0; k < 3; ++k) {
      const double angle = rng.uniform(0.0, kTwoPi);
      const double phase = rng.uniform(0.0, kTwoPi);
      const double ca = std::cos(angle), sa = std::sin(angle);
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          n[static_cast<std::size_t>(y) * w + x] +=
              std::sin(kTwoPi * freq * (ca * x + sa * y) / extent + phase) / (octave + 1);
    }
  }
  double peak = 1e-12;
  for (double v : n) peak = std::max(peak, std::abs(v));
  for (double& v : n) v /= peak;
  return n;
}

}  // namespace

HdrImage synthetic_scene(std::uint64_t seed, int width, int height) {
  Rng rng(seed * 0x9E3779B97F4A7C15ull + 1);
  HdrImage img(width, height);
  auto set = [&](int x, int y, const std::array<double, 3>& rgb) {
    for (int c = 0; c < 3; ++c) img.at(x, y, c) = static_cast<float>(rgb[c]);
  };

  const int horizon = static_cast<int>(height * rng.uniform(0.35, 0.6));
  const double sky_level = rng.uniform(150.0, 600.0);
  const std::array<double, 3> sky{0.6 * sky_level, 0.8 * sky_level, 1.2 * sky_level};
  const auto noise = texture(rng, width, height);
  const double ground_level = rng.uniform(3.0, 40.0);
  const std::array<double, 3> ground{rng.uniform(0.4, 1.2) * ground_level,
                                     rng.uniform(0.4, 1.2) * ground_level,
                                     rng.uniform(0.4, 1.2) * ground_level};

  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double n = noise[static_cast<std::size_t>(y) * width + x];
      if (y < horizon) {
        const double t = 0.5 + 0.8 * static_cast<double>(y) / horizon;
        set(x, y, {sky[0] * t, sky[1] * t, sky[2] * t});
      } else {
        const double t = 1.0 + 0.5 * n;
        set(x, y, {ground[0] * t, ground[1] * t, ground[2] * t});
      }
    }
  }

  const int blocks = rng.integer(2, 5);
  for (int b = 0; b < blocks; ++b) {
    int x0 = rng.integer(0, width), x1 = rng.integer(0, width);
    if (x0 > x1) std::swap(x0, x1);
    x1 = std::min(width, x1 + 4);
    const int y0 = rng.integer(height / 5, horizon + 5);
    const int y1 = rng.integer(horizon, height);
    const double level = rng.uniform(0.3, 30.0);
    const std::array<double, 3> color{rng.uniform(0.3, 1.2) * level, rng.uniform(0.3, 1.2) * level,
                                      rng.uniform(0.3, 1.2) * level};
    for (int y = y0; y < y1; ++y)
      for (int x = x0; x < x1; ++x) {
        const double t = 1.0 + 0.3 * noise[static_cast<std::size_t>(y) * width + x];
        set(x, y, {color[0] * t, color[1] * t, color[2] * t});
      }
    const int windows = rng.integer(0, 4);
    for (int k = 0; k < windows; ++k) {
      const int wy = rng.integer(y0, std::max(y0 + 1, y1 - 3));
      const int wx = rng.integer(x0, std::max(x0 + 1, x1 - 3));
      const double lit = rng.uniform(100.0, 600.0);
      for (int y = wy; y < std::min(height, wy + 3); ++y)
        for (int x = wx; x < std::min(width, wx + 3); ++x) set(x, y, {lit, 0.85 * lit, 0.6 * lit});
    }
  }

  const double cy = rng.uniform(0.05, 0.3) * height;
  const double cx = rng.uniform(0.1, 0.9) * width;
  const double radius = rng.uniform(3.0, 7.0) * std::min(width, height) / 128.0;
  const double sun = rng.uniform(5e3, 3e4);
  const double halo = rng.uniform(50.0, 200.0);
  const std::array<double, 3> tint{1.0, 0.9, 0.7};
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const double d = std::hypot(y - cy, x - cx);
      const double disk = std::clamp(radius - d + 0.5, 0.0, 1.0);
      const double glow = std::exp(-std::pow(d / (6.0 * radius), 2.0));
      for (int c = 0; c < 3; ++c)
        img.at(x, y, c) += static_cast<float>(tint[c] * (sun * disk + halo * glow));
    }
  return img;
}

}  // namespace itm
