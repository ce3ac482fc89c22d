#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "itm/hdr_io.hpp"

namespace itm {

/// Photographic global operator. `white` defaults to 1.5 * max(L_scaled);
/// pass +infinity for the plain L / (1 + L) curve.
LdrImage reinhard_global(const HdrImage& img, double key = 0.18,
                         std::optional<double> white = std::nullopt, double gamma = 2.2);

/// Base/detail decomposition with an exact bilateral filter on log10 Y.
/// `sigma_s` defaults to 2% of the image diagonal.
LdrImage durand_bilateral(const HdrImage& img, double contrast = 50.0,
                          std::optional<double> sigma_s = std::nullopt, double sigma_r = 0.4,
                          double gamma = 2.2);

/// Brute-force bilateral filter of a single-channel raster, kernel
/// truncated at 3 sigma_s.
std::vector<double> bilateral_filter(std::span<const double> values, int width, int height,
                                     double sigma_s, double sigma_r);

/// Luminance-preserving display encoding: clamp to [0,1], apply 1/gamma,
/// round half up to 8 bits.
std::uint8_t encode_display(double value, double gamma);

/// Raises every display value (in [0,1]) to `exponent`; used for
/// gamma-parameterized targets.
LdrImage apply_display_gamma(const LdrImage& img, double exponent);

enum class TargetSource { BuiltinOperator, ExternalFiles };

struct StyleTarget {
  std::string style_id;
  TargetSource source = TargetSource::BuiltinOperator;
  std::string op;  // "reinhard" or "durand" for built-in operators
  std::map<std::string, double> params;

  /// Built-in styles "reinhard" and "durand" with their default parameters.
  static StyleTarget builtin(const std::string& style_id);
  static StyleTarget external(const std::string& style_id);
};

/// Renders the target for a built-in operator. Throws StyleError for
/// externally supplied styles.
LdrImage render_target(const StyleTarget& style, const HdrImage& img);

struct TargetPair {
  std::filesystem::path hdr_path;
  HdrImage hdr;
  LdrImage target;
};

struct PairedTargetSet {
  std::string style_id;
  std::vector<TargetPair> pairs;

  const TargetPair* find(const std::filesystem::path& hdr_path) const;
};

/// Reads externally produced targets. Lists must have equal length and
/// each pair must agree in size, otherwise PairingError.
PairedTargetSet load_external_targets(const StyleTarget& style,
                                      std::span<const std::filesystem::path> hdr_paths,
                                      std::span<const std::filesystem::path> ldr_paths);

}  // namespace itm
