#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

namespace itm {

/// Weights of the combined objective lambda * L_inv + (1 - lambda) * L_sty.
struct LossWeights {
  double lambda = 0.5;       // invertibility vs. style balance, in (0, 1)
  double alpha = 0.1;        // gradient-domain term of the style loss
  double beta_perc = 1.0e-3; // perceptual term of the style loss
  double sigma_ssim = 5.0e-2;// SSIM term of the invertibility loss

  void validate() const;
  bool operator==(const LossWeights&) const = default;
};

/// Network hyperparameters. Every size in the backbone flows from here.
struct ArchConfig {
  int base_channels = 64;
  int num_res_blocks = 4;
  int global_pool_size = 32;
  int global_vec_dim = 128;
  int rdb_layers = 4;
  int rdb_growth = 32;
  int cbam_reduction = 16;
  bool use_global_branch = true;

  void validate() const;
  bool operator==(const ArchConfig&) const = default;
};

/// Constants both endpoints of the codec must agree on.
struct CodecProfile {
  double log_lum_min = -9.210340371976182;  // log(1e-4)
  double log_lum_max = 11.512925464970229;  // log(1e5)
  std::array<double, 2> uv_scale{};
  std::vector<std::string> style_registry{"reinhard"};
  LossWeights loss_weights;
  ArchConfig arch;
  bool jpeg_trained = false;
  int jpeg_quality = 80;

  /// Defaults with uv_scale derived from the sRGB chromaticity gamut.
  static CodecProfile defaults();

  void validate() const;
  bool has_style(const std::string& style_id) const;
  bool operator==(const CodecProfile&) const = default;
};

inline constexpr int kProfileFormatVersion = 1;

std::string serialize_profile(const CodecProfile& profile);
/// Throws CompatibilityError on a version mismatch or a corrupted document.
CodecProfile parse_profile(const std::string& text);

void save_profile(const CodecProfile& profile, const std::filesystem::path& path);
CodecProfile load_profile(const std::filesystem::path& path);

}  // namespace itm
