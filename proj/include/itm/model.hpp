#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "itm/profile.hpp"

namespace itm {

inline constexpr int kCheckpointVersion = 1;
inline constexpr int kParamHidden = 32;

/// Maps a display gamma drawn from U(0.5, 1.5) onto [-1, 1].
double normalize_gamma(double gamma);

// Differentiable degradations. Both pass gradients straight through.

/// floor(255 * clamp(x, 0, 1) + 0.5) / 255 forward, identity backward.
torch::Tensor quantize_layer(const torch::Tensor& x);

/// libjpeg's scaling of the standard luminance or chrominance table.
torch::Tensor jpeg_quant_table(int quality, bool chroma);
/// Orthonormal 8x8 DCT-II basis, rows indexed by frequency.
torch::Tensor dct_matrix();

/// Blockwise JPEG simulation without chroma subsampling or entropy coding:
/// YCbCr, 8x8 DCT, table quantization, inverse. Edges are padded by
/// replication and cropped afterwards. Input and output are (N, 3, H, W)
/// in [0, 1].
torch::Tensor jpeg_layer(const torch::Tensor& x, int quality, bool round_coefficients = true);

struct Degradation {
  enum class Kind { Quantize, Jpeg };
  Kind kind = Kind::Quantize;
  int quality = 80;

  static Degradation quantize() { return {}; }
  static Degradation jpeg(int q) { return {Kind::Jpeg, q}; }
  /// "quantize", "jpeg" or "jpeg:<q>".
  static Degradation parse(const std::string& text);
  std::string to_string() const;
  torch::Tensor apply(const torch::Tensor& x) const;
};

/// Adaptive max and mean pooling to a size x size grid, concatenated on
/// the channel axis (max first).
torch::Tensor global_pool(const torch::Tensor& features, int size);

// Per-style parameter bundle. The local path acts on the first encoder
// feature map, the global path on the global vector.
class StyleModulatorImpl : public torch::nn::Module {
 public:
  StyleModulatorImpl(int channels, int global_dim, bool parametric);

  /// `param` is (N,) normalized, or undefined for fixed styles.
  torch::Tensor modulate_local(const torch::Tensor& features, const torch::Tensor& param);
  torch::Tensor modulate_global(const torch::Tensor& vec, const torch::Tensor& param);

  bool parametric() const { return parametric_; }
  int channels() const { return channels_; }
  int global_dim() const { return global_dim_; }

 private:
  int channels_;
  int global_dim_;
  bool parametric_;
  torch::Tensor local_weight_, local_bias_, local_gamma_, local_beta_;
  torch::nn::Linear global_fc_{nullptr};
  torch::Tensor global_gamma_, global_beta_;
  torch::nn::Sequential local_param_net_{nullptr};
  torch::nn::Sequential global_param_net_{nullptr};
};
TORCH_MODULE(StyleModulator);

class ResidualBlockImpl : public torch::nn::Module {
 public:
  explicit ResidualBlockImpl(int channels);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::Conv2d conv1_{nullptr}, conv2_{nullptr};
};
TORCH_MODULE(ResidualBlock);

// Channel attention followed by spatial attention.
class CbamImpl : public torch::nn::Module {
 public:
  CbamImpl(int channels, int reduction);
  torch::Tensor forward(const torch::Tensor& x);
  /// Sigmoid gates: channel (N, C, 1, 1) and spatial (N, 1, H, W).
  std::pair<torch::Tensor, torch::Tensor> gates(const torch::Tensor& x);

 private:
  torch::nn::Sequential mlp_{nullptr};
  torch::nn::Conv2d spatial_{nullptr};
};
TORCH_MODULE(Cbam);

class ResidualDenseBlockImpl : public torch::nn::Module {
 public:
  ResidualDenseBlockImpl(int channels, int layers, int growth);
  torch::Tensor forward(const torch::Tensor& x);

 private:
  torch::nn::ModuleList layers_;
  torch::nn::Conv2d fuse_{nullptr};
};
TORCH_MODULE(ResidualDenseBlock);

// U-shaped network shared by both endpoints. The encoder instance accepts a
// modulator; the decoder instance carries CBAM after every residual block.
class BackboneImpl : public torch::nn::Module {
 public:
  BackboneImpl(const ArchConfig& arch, bool attention);

  torch::Tensor forward(const torch::Tensor& x, StyleModulatorImpl* modulator = nullptr,
                        const torch::Tensor& param = {});
  /// Global vector (N, global_vec_dim, 1, 1) from head features.
  torch::Tensor global_vector(const torch::Tensor& head_features);
  std::vector<Cbam>& attention_blocks() { return cbam_; }
  torch::Tensor head(const torch::Tensor& x);

 private:
  ArchConfig arch_;
  torch::nn::Conv2d head_{nullptr}, down1_{nullptr}, down2_{nullptr};
  torch::nn::Sequential global_convs_{nullptr};
  torch::nn::Conv2d global_out_{nullptr}, fuse_{nullptr};
  std::vector<ResidualBlock> res_;
  std::vector<Cbam> cbam_;
  torch::nn::Conv2d up1_{nullptr}, up2_{nullptr};
  ResidualDenseBlock rdb_{nullptr};
  torch::nn::Conv2d tail_{nullptr};
};
TORCH_MODULE(Backbone);

int64_t parameter_count(const torch::nn::Module& module);

// Encoder weights, decoder weights and per-style modulators.
class Codec {
 public:
  explicit Codec(const ArchConfig& arch);

  const ArchConfig& arch() const { return arch_; }
  Backbone& encoder() { return encoder_; }
  Backbone& decoder() { return decoder_; }

  StyleModulator& add_style(const std::string& style_id, bool parametric = false);
  bool has_style(const std::string& style_id) const;
  StyleModulator& modulator(const std::string& style_id);
  std::vector<std::string> styles() const;

  /// (N, 3, H, W) normalized LUV to a continuous LDR map in [0, 1].
  /// `param` is (N,) in normalized units and only valid for parametric
  /// styles; a parametric style without one uses 0.
  torch::Tensor encode(const torch::Tensor& luv, const std::string& style_id,
                       const torch::Tensor& param = {});
  /// (N, 3, H, W) LDR map to normalized LUV. Takes no style.
  torch::Tensor decode(const torch::Tensor& ldr);

  std::vector<torch::Tensor> encoder_parameters();
  std::vector<torch::Tensor> decoder_parameters();
  std::vector<torch::Tensor> modulator_parameters(const std::string& style_id);
  std::vector<torch::Tensor> all_parameters();

  int64_t backbone_parameter_count() const;
  int64_t modulator_parameter_count(const std::string& style_id) const;

  void train(bool on = true);
  void eval() { train(false); }

  void save(const std::filesystem::path& path) const;
  static Codec load(const std::filesystem::path& path);
  void save_modulator(const std::string& style_id, const std::filesystem::path& path) const;
  /// Inserts the stored modulator; replaces an existing one with the same id.
  std::string load_modulator(const std::filesystem::path& path);

  Codec clone() const;

 private:
  ArchConfig arch_;
  Backbone encoder_;
  Backbone decoder_;
  std::map<std::string, StyleModulator> modulators_;
};

void check_codec_extent(const torch::Tensor& x);

}  // namespace itm
