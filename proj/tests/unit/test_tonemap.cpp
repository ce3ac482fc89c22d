#include <doctest.h>

#include <cmath>
#include <limits>

#include "itm/errors.hpp"
#include "itm/synthetic.hpp"
#include "itm/tonemap.hpp"
#include "test_support.hpp"

using namespace itm;

namespace {

int byte_of(double display, double gamma = 2.2) {
  return static_cast<int>(std::floor(std::pow(display, 1.0 / gamma) * 255.0 + 0.5));
}

}  // namespace

TEST_CASE("reinhard on a constant image without white point") {
  const double inf = std::numeric_limits<double>::infinity();
  for (float level : {0.01f, 1.0f, 250.0f}) {
    const HdrImage img(16, 16, level);
    const auto out = reinhard_global(img, 0.18, inf);
    const double s = 0.18;  // Y equals its log-average up to the tiny delta
    for (auto v : out.pixels) CHECK(std::abs(int(v) - byte_of(s / (1 + s))) <= 1);
  }
}

TEST_CASE("reinhard keeps black black") {
  const auto out = reinhard_global(HdrImage(8, 8));
  for (auto v : out.pixels) CHECK(v == 0);
}

TEST_CASE("reinhard is monotone in luminance for fixed chromaticity") {
  HdrImage img(1000, 1);
  for (int x = 0; x < 1000; ++x) {
    const float y = static_cast<float>(std::pow(10.0, -2.0 + 6.0 * x / 999.0));
    img.at(x, 0, 0) = 0.8f * y;
    img.at(x, 0, 1) = 1.0f * y;
    img.at(x, 0, 2) = 1.3f * y;
  }
  const auto out = reinhard_global(img);
  for (int x = 1; x < 1000; ++x)
    for (int c = 0; c < 3; ++c) CHECK(out.at(x, 0, c) >= out.at(x - 1, 0, c));
}

TEST_CASE("reinhard ignores global exposure") {
  const auto img = synthetic_scene(9, 64, 64);
  const auto ref = reinhard_global(img);
  for (float k : {0.01f, 3.0f, 700.0f}) {
    auto scaled = img;
    for (auto& v : scaled.pixels) v *= k;
    const auto out = reinhard_global(scaled);
    for (std::size_t i = 0; i < out.pixels.size(); ++i)
      CHECK(std::abs(int(out.pixels[i]) - int(ref.pixels[i])) <= 1);
  }
}

TEST_CASE("reinhard rejects a non-positive key") {
  CHECK_THROWS_AS(reinhard_global(HdrImage(4, 4, 1.0f), 0.0), DomainError);
}

TEST_CASE("durand on a constant image is constant") {
  const auto out = durand_bilateral(HdrImage(20, 12, 3.5f));
  for (auto v : out.pixels) CHECK(v == out.pixels[0]);
}

TEST_CASE("durand compresses a two-region step to the target contrast") {
  // Regions differ by two decades. Far from the edge the filter sees one
  // region only, so the base equals the region's log luminance exactly.
  HdrImage img(64, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = x < 32 ? 1.0f : 100.0f;
  const double contrast = 50.0;
  const auto out = durand_bilateral(img, contrast, 2.0, 0.4);
  // Bright region sits at display 1, dark region at 1 / contrast.
  CHECK(int(out.at(60, 8, 1)) == 255);
  CHECK(int(out.at(3, 8, 1)) == byte_of(1.0 / contrast));
}

TEST_CASE("bilateral filter is exact on flat input") {
  std::vector<double> flat(30 * 20, -1.25);
  const auto base = bilateral_filter(flat, 30, 20, 3.0, 0.4);
  for (double v : base) CHECK(v == doctest::Approx(-1.25).epsilon(1e-15));
  CHECK_THROWS_AS(bilateral_filter(flat, 30, 20, 0.0, 0.4), DomainError);
}

TEST_CASE("built-in operators stay within eight bits") {
  const auto img = synthetic_scene(2, 64, 48);
  for (const auto& id : {"reinhard", "durand"}) {
    const auto out = render_target(StyleTarget::builtin(id), img);
    CHECK(out.width == 64);
    CHECK(out.height == 48);
  }
  CHECK_THROWS_AS(StyleTarget::builtin("aubry"), StyleError);
  CHECK_THROWS_AS(render_target(StyleTarget::external("li"), img), StyleError);
}

TEST_CASE("display gamma of one is the identity") {
  LdrImage img(4, 4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) img.pixels[i] = static_cast<std::uint8_t>(i * 5);
  CHECK(apply_display_gamma(img, 1.0) == img);
  const auto darker = apply_display_gamma(img, 1.4);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) CHECK(darker.pixels[i] <= img.pixels[i]);
}

TEST_CASE("external targets pair by position") {
  const auto dir = testing_dir("external_targets");
  write_hdr(HdrImage(8, 6, 1.0f), dir / "a.hdr");
  write_ldr(LdrImage(8, 6, 10), dir / "a.png");
  write_ldr(LdrImage(6, 8, 10), dir / "b.png");
  const auto style = StyleTarget::external("li");

  const std::vector<std::filesystem::path> hdrs{dir / "a.hdr"};
  const std::vector<std::filesystem::path> good{dir / "a.png"};
  const std::vector<std::filesystem::path> bad{dir / "b.png"};
  const auto set = load_external_targets(style, hdrs, good);
  CHECK(set.style_id == "li");
  REQUIRE(set.pairs.size() == 1);
  CHECK(set.find(dir / "a.hdr") != nullptr);
  CHECK_THROWS_AS(load_external_targets(style, hdrs, bad), PairingError);
  CHECK(load_external_targets(style, {}, {}).pairs.empty());
  const std::vector<std::filesystem::path> two{dir / "a.png", dir / "a.png"};
  CHECK_THROWS_AS(load_external_targets(style, hdrs, two), PairingError);
}
