#include <doctest.h>

#include <cmath>
#include <random>

#include "itm/colorspace.hpp"
#include "itm/synthetic.hpp"

using namespace itm;

namespace {

const CodecProfile kProfile = CodecProfile::defaults();

double rel(double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-30); }

}  // namespace

TEST_CASE("rgb to xyz uses the srgb primaries") {
  const auto black = rgb_to_xyz({0, 0, 0});
  for (double v : black) CHECK(v == 0.0);
  const auto white = rgb_to_xyz({1, 1, 1});
  CHECK(white[0] == doctest::Approx(0.9505).epsilon(1e-4));
  CHECK(white[1] == doctest::Approx(1.0000).epsilon(1e-4));
  CHECK(white[2] == doctest::Approx(1.0890).epsilon(1e-4));
  const auto red = rgb_to_xyz({1, 0, 0});
  CHECK(red[0] == doctest::Approx(0.4124564));
  CHECK(red[1] == doctest::Approx(0.2126729));
  CHECK(red[2] == doctest::Approx(0.0193339));
  const auto g = rgb_to_xyz({0.3, 0.5, 0.2});
  CHECK(g[1] == doctest::Approx(0.2126 * 0.3 + 0.7152 * 0.5 + 0.0722 * 0.2).epsilon(1e-4));
}

TEST_CASE("xyz to rgb inverts the primaries matrix") {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int i = 0; i < 100; ++i) {
    const Vec3 rgb{u(rng), u(rng), u(rng)};
    const auto back = xyz_to_rgb(rgb_to_xyz(rgb));
    for (int c = 0; c < 3; ++c) CHECK(back[c] == doctest::Approx(rgb[c]).epsilon(1e-12));
  }
}

TEST_CASE("raw chroma matches the printed constants") {
  const Vec3 xyz{0.9505, 1.0, 1.089};
  const double d = 0.9505 + 15.0 + 3.0 * 1.089;
  const auto uv = chroma_forward(xyz);
  CHECK(uv[0] == doctest::Approx(2.48 * 0.9505 / (81.0 * d)).epsilon(1e-12));
  CHECK(uv[0] == doctest::Approx(1.514e-3).epsilon(1e-3));
  CHECK(uv[1] == doctest::Approx(0.62 * 1.0 / (9.0 * d)).epsilon(1e-12));
}

TEST_CASE("black maps to the origin both ways") {
  const auto luv = xyz_to_luv_norm({0, 0, 0}, kProfile);
  for (double v : luv) CHECK(v == 0.0);
  const auto xyz = luv_norm_to_xyz({0, 0, 0}, kProfile);
  for (double v : xyz) CHECK(v == 0.0);
}

TEST_CASE("luminance bounds map to the ends of L") {
  for (const Vec3 chroma : {Vec3{1, 1, 1}, Vec3{0.2, 0.5, 0.9}}) {
    const auto base = rgb_to_xyz(chroma);
    for (double target : {std::exp(kProfile.log_lum_min), std::exp(kProfile.log_lum_max)}) {
      const double k = target / base[1];
      const auto luv = xyz_to_luv_norm({base[0] * k, base[1] * k, base[2] * k}, kProfile);
      CHECK(luv[0] == doctest::Approx(target == std::exp(kProfile.log_lum_min) ? 0.0 : 1.0).epsilon(1e-9));
    }
  }
}

TEST_CASE("mid L restores the geometric mean of the bounds") {
  const auto neutral = xyz_to_luv_norm(rgb_to_xyz({1, 1, 1}), kProfile);
  const auto xyz = luv_norm_to_xyz({0.5, neutral[1], neutral[2]}, kProfile);
  const double geo = std::sqrt(std::exp(kProfile.log_lum_min) * std::exp(kProfile.log_lum_max));
  CHECK(xyz[1] == doctest::Approx(geo).epsilon(1e-12));
}

TEST_CASE("forward then inverse round trips random chromaticities") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> lum(-3.0, 4.0);
  std::uniform_real_distribution<double> chroma(0.01, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const Vec3 rgb{chroma(rng), chroma(rng), chroma(rng)};
    const auto base = rgb_to_xyz(rgb);
    const double k = std::pow(10.0, lum(rng)) / base[1];
    const Vec3 xyz{base[0] * k, base[1] * k, base[2] * k};
    const auto back = luv_norm_to_xyz(xyz_to_luv_norm(xyz, kProfile), kProfile);
    for (int c = 0; c < 3; ++c) worst = std::max(worst, rel(back[c], xyz[c]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("normalized values stay inside the unit cube") {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> e(-8.0, 8.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 20000; ++i) {
    const double s = std::pow(10.0, e(rng));
    const auto luv = xyz_to_luv_norm(rgb_to_xyz({u(rng) * s, u(rng) * s, u(rng) * s}), kProfile);
    for (double v : luv) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
  // Primaries set the rescale, so the extreme chroma reaches 1.
  CHECK(xyz_to_luv_norm(rgb_to_xyz({1, 0, 0}), kProfile)[1] == doctest::Approx(1.0));
  CHECK(xyz_to_luv_norm(rgb_to_xyz({0, 1, 0}), kProfile)[2] == doctest::Approx(1.0));
}

TEST_CASE("L increases strictly with luminance inside the bounds") {
  const auto base = rgb_to_xyz({0.4, 0.6, 0.3});
  double previous = -1.0;
  for (int i = 0; i <= 400; ++i) {
    const double y = std::pow(10.0, -3.9 + 8.8 * i / 400.0);
    const double k = y / base[1];
    const double l = xyz_to_luv_norm({base[0] * k, base[1] * k, base[2] * k}, kProfile)[0];
    CHECK(l > previous);
    previous = l;
  }
}

TEST_CASE("degenerate chroma decodes to black") {
  const auto xyz = luv_norm_to_xyz({0.7, 0.3, 0.0}, kProfile);
  for (double v : xyz) CHECK(v == 0.0);
}

TEST_CASE("image conversion round trips radiance") {
  const auto img = synthetic_scene(4, 48, 40);
  const auto luv = hdr_to_domain(img, kProfile);
  CHECK(luv.width == 48);
  CHECK(luv.bounds == DomainBounds::of(kProfile));
  for (float v : luv.pixels) {
    CHECK(v >= 0.0f);
    CHECK(v <= 1.0f);
  }
  const auto back = domain_to_hdr(luv, kProfile);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double peak = std::max({img.pixels[p * 3], img.pixels[p * 3 + 1], img.pixels[p * 3 + 2]});
    // Float storage of the normalized values limits precision.
    for (int c = 0; c < 3; ++c)
      CHECK(std::abs(back.pixels[p * 3 + c] - img.pixels[p * 3 + c]) <= 2e-4 * peak);
  }
}
