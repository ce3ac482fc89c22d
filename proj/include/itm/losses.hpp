#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include <torch/torch.h>

#include "itm/profile.hpp"

namespace itm {

/// Frozen feature map used by the perceptual term of the style loss.
class PerceptualExtractor {
 public:
  virtual ~PerceptualExtractor() = default;
  /// (N, 3, H, W) in [0, 1] to a feature map. Never updates its weights.
  virtual torch::Tensor features(const torch::Tensor& x) = 0;
  virtual std::string describe() const = 0;
};

/// Seeded random conv stack: `depth` stages of 3x3 conv, ReLU and 2x2
/// average pooling with widths 16, 32, 64, ... Depth 3 lands at 1/8
/// resolution.
class RandomConvExtractor : public PerceptualExtractor {
 public:
  explicit RandomConvExtractor(std::uint64_t seed = 0, int depth = 3);
  torch::Tensor features(const torch::Tensor& x) override;
  std::string describe() const override;

 private:
  std::uint64_t seed_;
  std::vector<torch::Tensor> weights_;
  std::vector<torch::Tensor> biases_;
};

/// TorchScript module taking (N, 3, H, W) in [0, 1] and returning the
/// feature map, e.g. a classification network truncated at a mid layer.
class ScriptedExtractor : public PerceptualExtractor {
 public:
  explicit ScriptedExtractor(const std::filesystem::path& path);
  ~ScriptedExtractor() override;
  torch::Tensor features(const torch::Tensor& x) override;
  std::string describe() const override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// "random", "random:<seed>" or a path to a TorchScript file.
std::unique_ptr<PerceptualExtractor> make_extractor(const std::string& spec);

/// Forward differences along x and y with replicate boundary, stacked on
/// the channel axis: (N, C, H, W) to (N, 2C, H, W).
torch::Tensor image_gradients(const torch::Tensor& x);

/// Largest odd SSIM window not exceeding 11 or the smaller side.
int loss_ssim_window(const torch::Tensor& x);

/// MSE + sigma_ssim * (1 - SSIM) on normalized LUV maps.
torch::Tensor invertibility_loss(const torch::Tensor& restored, const torch::Tensor& original,
                                 const LossWeights& w);

enum class StyleLossMode { Full, PixelOnly };

/// MSE + alpha * MSE of gradients + beta_perc * MSE of features. PixelOnly
/// keeps only the first term. `extractor` may be null in PixelOnly mode.
torch::Tensor style_loss(const torch::Tensor& generated, const torch::Tensor& target,
                         PerceptualExtractor* extractor, const LossWeights& w,
                         StyleLossMode mode = StyleLossMode::Full);

/// The gradient term of the style loss alone, without its weight.
torch::Tensor gradient_term(const torch::Tensor& generated, const torch::Tensor& target);

struct LossTerms {
  torch::Tensor inv;
  torch::Tensor sty;
  torch::Tensor total;
};

/// lambda * L_inv + (1 - lambda) * L_sty. The style term depends only on
/// the encoder output, so it never reaches decoder weights.
LossTerms total_loss(const torch::Tensor& restored, const torch::Tensor& original,
                     const torch::Tensor& generated, const torch::Tensor& target,
                     PerceptualExtractor* extractor, const LossWeights& w,
                     StyleLossMode mode = StyleLossMode::Full);

}  // namespace itm
