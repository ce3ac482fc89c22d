#include "itm/tonemap.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "itm/colorspace.hpp"
#include "itm/errors.hpp"

namespace itm {

namespace {

constexpr double kGeoMeanDelta = 1e-6;

double luminance(const HdrImage& img, std::size_t pixel) {
  const std::size_t i = pixel * 3;
  return rgb_to_xyz({img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]})[1];
}

// Scales every pixel's RGB by display / Y and encodes for display.
LdrImage recolor(const HdrImage& img, const std::vector<double>& y,
                 const std::vector<double>& display, double gamma) {
  LdrImage out(img.width, img.height);
  for (std::size_t p = 0; p < img.pixel_count(); ++p) {
    const double s = y[p] > 0.0 ? display[p] / y[p] : 0.0;
    for (int c = 0; c < 3; ++c)
      out.pixels[p * 3 + c] = encode_display(img.pixels[p * 3 + c] * s, gamma);
  }
  return out;
}

}  // namespace

std::uint8_t encode_display(double value, double gamma) {
  const double v = std::clamp(std::isfinite(value) ? value : 1.0, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::floor(std::pow(v, 1.0 / gamma) * 255.0 + 0.5));
}

LdrImage apply_display_gamma(const LdrImage& img, double exponent) {
  LdrImage out = img;
  for (auto& v : out.pixels)
    v = static_cast<std::uint8_t>(std::floor(std::pow(v / 255.0, exponent) * 255.0 + 0.5));
  return out;
}

LdrImage reinhard_global(const HdrImage& img, double key, std::optional<double> white, double gamma) {
  if (!(key > 0.0)) throw DomainError("Reinhard key must be positive");
  img.validate();
  const std::size_t n = img.pixel_count();
  std::vector<double> y(n);
  double log_sum = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    y[p] = std::max(0.0, luminance(img, p));
    log_sum += std::log(kGeoMeanDelta + y[p]);
  }
  const double y_geo = std::exp(log_sum / static_cast<double>(n));

  std::vector<double> scaled(n);
  double max_scaled = 0.0;
  for (std::size_t p = 0; p < n; ++p) {
    scaled[p] = key * y[p] / y_geo;
    max_scaled = std::max(max_scaled, scaled[p]);
  }
  const double w = white.value_or(1.5 * max_scaled);
  const double inv_w2 = (w > 0.0 && std::isfinite(w)) ? 1.0 / (w * w) : 0.0;

  std::vector<double> display(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double l = scaled[p];
    display[p] = l * (1.0 + l * inv_w2) / (1.0 + l);
  }
  return recolor(img, y, display, gamma);
}

std::vector<double> bilateral_filter(std::span<const double> values, int width, int height,
                                     double sigma_s, double sigma_r) {
  if (!(sigma_s > 0.0) || !(sigma_r > 0.0)) throw DomainError("bilateral sigmas must be positive");
  const int radius = static_cast<int>(std::ceil(3.0 * sigma_s));
  const int span = 2 * radius + 1;
  std::vector<double> spatial(static_cast<std::size_t>(span) * span);
  for (int dy = -radius; dy <= radius; ++dy)
    for (int dx = -radius; dx <= radius; ++dx)
      spatial[static_cast<std::size_t>(dy + radius) * span + (dx + radius)] =
          std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_s * sigma_s));
  const double range_k = -1.0 / (2.0 * sigma_r * sigma_r);

  std::vector<double> out(values.size());
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const double center = values[static_cast<std::size_t>(y) * width + x];
      double num = 0.0;
      double den = 0.0;
      for (int qy = std::max(0, y - radius); qy <= std::min(height - 1, y + radius); ++qy) {
        const double* row = values.data() + static_cast<std::size_t>(qy) * width;
        const double* srow = spatial.data() + static_cast<std::size_t>(qy - y + radius) * span;
        for (int qx = std::max(0, x - radius); qx <= std::min(width - 1, x + radius); ++qx) {
          const double d = row[qx] - center;
          const double w = srow[qx - x + radius] * std::exp(range_k * d * d);
          num += w * row[qx];
          den += w;
        }
      }
      out[static_cast<std::size_t>(y) * width + x] = num / den;
    }
  }
  return out;
}

LdrImage durand_bilateral(const HdrImage& img, double contrast, std::optional<double> sigma_s,
                          double sigma_r, double gamma) {
  if (!(contrast > 1.0)) throw DomainError("Durand contrast must exceed 1");
  img.validate();
  const std::size_t n = img.pixel_count();
  std::vector<double> y(n);
  std::vector<double> log_y(n);
  for (std::size_t p = 0; p < n; ++p) {
    y[p] = std::max(0.0, luminance(img, p));
    log_y[p] = std::log10(std::max(y[p], 1e-10));
  }
  const double diag = std::hypot(static_cast<double>(img.width), static_cast<double>(img.height));
  const auto base = bilateral_filter(log_y, img.width, img.height, sigma_s.value_or(0.02 * diag),
                                     sigma_r);
  const auto [lo, hi] = std::minmax_element(base.begin(), base.end());
  const double spread = *hi - *lo;
  const double scale = spread > 1e-12 ? std::log10(contrast) / spread : 1.0;
  const double offset = *hi * scale;

  std::vector<double> display(n);
  for (std::size_t p = 0; p < n; ++p) {
    const double detail = log_y[p] - base[p];
    display[p] = std::pow(10.0, base[p] * scale + detail - offset);
  }
  return recolor(img, y, display, gamma);
}

StyleTarget StyleTarget::builtin(const std::string& style_id) {
  if (style_id == "reinhard")
    return {style_id, TargetSource::BuiltinOperator, "reinhard", {{"key", 0.18}}};
  if (style_id == "durand")
    return {style_id, TargetSource::BuiltinOperator, "durand", {{"contrast", 50.0}, {"sigma_r", 0.4}}};
  throw StyleError("no built-in operator for style '" + style_id + "'");
}

StyleTarget StyleTarget::external(const std::string& style_id) {
  return {style_id, TargetSource::ExternalFiles, "", {}};
}

LdrImage render_target(const StyleTarget& style, const HdrImage& img) {
  if (style.source != TargetSource::BuiltinOperator)
    throw StyleError("style '" + style.style_id + "' has no built-in operator");
  auto param = [&](const std::string& name, double fallback) {
    const auto it = style.params.find(name);
    return it == style.params.end() ? fallback : it->second;
  };
  auto optional_param = [&](const std::string& name) -> std::optional<double> {
    const auto it = style.params.find(name);
    if (it == style.params.end()) return std::nullopt;
    return it->second;
  };
  if (style.op == "reinhard")
    return reinhard_global(img, param("key", 0.18), optional_param("white"), param("gamma", 2.2));
  if (style.op == "durand")
    return durand_bilateral(img, param("contrast", 50.0), optional_param("sigma_s"),
                            param("sigma_r", 0.4), param("gamma", 2.2));
  throw StyleError("unknown tone-mapping operator '" + style.op + "'");
}

const TargetPair* PairedTargetSet::find(const std::filesystem::path& hdr_path) const {
  for (const auto& p : pairs)
    if (p.hdr_path == hdr_path) return &p;
  return nullptr;
}

PairedTargetSet load_external_targets(const StyleTarget& style,
                                      std::span<const std::filesystem::path> hdr_paths,
                                      std::span<const std::filesystem::path> ldr_paths) {
  if (hdr_paths.size() != ldr_paths.size())
    throw PairingError("HDR and target lists differ in length");
  PairedTargetSet set{style.style_id, {}};
  for (std::size_t i = 0; i < hdr_paths.size(); ++i) {
    HdrImage hdr = read_hdr(hdr_paths[i]);
    LdrImage ldr = read_ldr(ldr_paths[i]);
    if (hdr.width != ldr.width || hdr.height != ldr.height)
      throw PairingError("target " + ldr_paths[i].string() + " does not match " +
                         hdr_paths[i].string() + " in size");
    set.pairs.push_back({hdr_paths[i], std::move(hdr), std::move(ldr)});
  }
  return set;
}

}  // namespace itm
