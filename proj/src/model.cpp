#include "itm/model.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "itm/errors.hpp"

namespace itm {

namespace {

namespace F = torch::nn::functional;
namespace nn = torch::nn;
using torch::autograd::AutogradContext;
using torch::autograd::variable_list;

constexpr int kMinExtent = 32;

constexpr int kLumaTable[64] = {16, 11, 10, 16, 24,  40,  51,  61,  12, 12, 14, 19, 26,  58,  60,  55,
                                14, 13, 16, 24, 40,  57,  69,  56,  14, 17, 22, 29, 51,  87,  80,  62,
                                18, 22, 37, 56, 68,  109, 103, 77,  24, 35, 55, 64, 81,  104, 113, 92,
                                49, 64, 78, 87, 103, 121, 120, 101, 72, 92, 95, 98, 112, 100, 103, 99};
constexpr int kChromaTable[64] = {17, 18, 24, 47, 99, 99, 99, 99, 18, 21, 26, 66, 99, 99, 99, 99,
                                  24, 26, 56, 99, 99, 99, 99, 99, 47, 66, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99,
                                  99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99, 99};

nn::Conv2d conv(int in, int out, int kernel, int stride = 1) {
  return nn::Conv2d(nn::Conv2dOptions(in, out, kernel).stride(stride).padding(kernel / 2));
}

torch::Tensor ycc_matrix() {
  return torch::tensor({0.299, 0.587, 0.114, -0.168736, -0.331264, 0.5, 0.5, -0.418688, -0.081312},
                       torch::kFloat64)
      .view({3, 3});
}

torch::Tensor mix_channels(const torch::Tensor& m, const torch::Tensor& x) {
  return torch::einsum("ij,njhw->nihw", {m, x});
}

torch::Tensor jpeg_forward(const torch::Tensor& x, int quality, bool round_coefficients) {
  const auto dtype = x.scalar_type();
  const auto h = x.size(2);
  const auto w = x.size(3);
  const auto level = torch::tensor({128.0, 0.0, 0.0}, torch::kFloat64).view({1, 3, 1, 1});

  // With rounding on, samples are held as 8-bit YCbCr on both sides of the
  // transform like a real codec.
  auto v = mix_channels(ycc_matrix(), x.to(torch::kFloat64) * 255);
  if (round_coefficients) v = torch::floor(v + 0.5);
  v = v - level;
  const auto ph = (8 - h % 8) % 8;
  const auto pw = (8 - w % 8) % 8;
  if (ph != 0 || pw != 0) v = F::pad(v, F::PadFuncOptions({0, pw, 0, ph}).mode(torch::kReplicate));
  const auto hb = v.size(2) / 8;
  const auto wb = v.size(3) / 8;
  auto blocks = v.reshape({v.size(0), 3, hb, 8, wb, 8}).permute({0, 1, 2, 4, 3, 5});

  const auto d = dct_matrix();
  const auto dt = d.t();
  auto coef = torch::matmul(torch::matmul(d, blocks), dt);
  const auto q = torch::stack({jpeg_quant_table(quality, false), jpeg_quant_table(quality, true),
                               jpeg_quant_table(quality, true)})
                     .view({1, 3, 1, 1, 8, 8});
  auto scaled = coef / q;
  if (round_coefficients) scaled = torch::sign(scaled) * torch::floor(scaled.abs() + 0.5);
  auto recon = torch::matmul(torch::matmul(dt, scaled * q), d);

  auto img = recon.permute({0, 1, 2, 4, 3, 5}).reshape({v.size(0), 3, hb * 8, wb * 8});
  img = img.slice(2, 0, h).slice(3, 0, w) + level;
  if (round_coefficients) {
    // Chroma is carried centred on zero here.
    const auto lo = torch::tensor({0.0, -128.0, -128.0}, torch::kFloat64).view({1, 3, 1, 1});
    img = torch::min(torch::max(torch::floor(img + 0.5), lo), lo + 255.0);
  }
  auto rgb = mix_channels(torch::linalg_inv(ycc_matrix()), img) / 255;
  return rgb.clamp(0.0, 1.0).to(dtype);
}

class QuantizeFunction : public torch::autograd::Function<QuantizeFunction> {
 public:
  static torch::Tensor forward(AutogradContext*, const torch::Tensor& x) {
    return torch::floor(x.clamp(0.0, 1.0) * 255 + 0.5) / 255;
  }
  static variable_list backward(AutogradContext*, variable_list grad) { return {grad[0]}; }
};

class JpegFunction : public torch::autograd::Function<JpegFunction> {
 public:
  static torch::Tensor forward(AutogradContext*, const torch::Tensor& x, int64_t quality,
                               bool round_coefficients) {
    return jpeg_forward(x, static_cast<int>(quality), round_coefficients);
  }
  static variable_list backward(AutogradContext*, variable_list grad) {
    return {grad[0], torch::Tensor(), torch::Tensor()};
  }
};

std::string archive_string(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isString())
    throw CompatibilityError("checkpoint entry '" + key + "' is missing");
  return v.toStringRef();
}

int64_t archive_int(torch::serialize::InputArchive& archive, const std::string& key) {
  c10::IValue v;
  if (!archive.try_read(key, v) || !v.isInt())
    throw CompatibilityError("checkpoint entry '" + key + "' is missing");
  return v.toInt();
}

void write_arch(torch::serialize::OutputArchive& out, const ArchConfig& a) {
  out.write("arch.base_channels", c10::IValue(static_cast<int64_t>(a.base_channels)));
  out.write("arch.num_res_blocks", c10::IValue(static_cast<int64_t>(a.num_res_blocks)));
  out.write("arch.global_pool_size", c10::IValue(static_cast<int64_t>(a.global_pool_size)));
  out.write("arch.global_vec_dim", c10::IValue(static_cast<int64_t>(a.global_vec_dim)));
  out.write("arch.rdb_layers", c10::IValue(static_cast<int64_t>(a.rdb_layers)));
  out.write("arch.rdb_growth", c10::IValue(static_cast<int64_t>(a.rdb_growth)));
  out.write("arch.cbam_reduction", c10::IValue(static_cast<int64_t>(a.cbam_reduction)));
  out.write("arch.use_global_branch", c10::IValue(static_cast<int64_t>(a.use_global_branch)));
}

ArchConfig read_arch(torch::serialize::InputArchive& in) {
  ArchConfig a;
  a.base_channels = static_cast<int>(archive_int(in, "arch.base_channels"));
  a.num_res_blocks = static_cast<int>(archive_int(in, "arch.num_res_blocks"));
  a.global_pool_size = static_cast<int>(archive_int(in, "arch.global_pool_size"));
  a.global_vec_dim = static_cast<int>(archive_int(in, "arch.global_vec_dim"));
  a.rdb_layers = static_cast<int>(archive_int(in, "arch.rdb_layers"));
  a.rdb_growth = static_cast<int>(archive_int(in, "arch.rdb_growth"));
  a.cbam_reduction = static_cast<int>(archive_int(in, "arch.cbam_reduction"));
  a.use_global_branch = archive_int(in, "arch.use_global_branch") != 0;
  a.validate();
  return a;
}

template <typename Fn>
auto translate_torch_errors(const std::string& what, Fn&& fn) {
  try {
    return fn();
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw CompatibilityError(what + ": " + e.what());
  }
}

void copy_parameters(torch::nn::Module& dst, const torch::nn::Module& src) {
  torch::NoGradGuard guard;
  const auto from = src.named_parameters();
  for (auto& p : dst.named_parameters()) p.value().copy_(from[p.key()]);
}

}  // namespace

double normalize_gamma(double gamma) { return (gamma - 1.0) / 0.5; }

torch::Tensor quantize_layer(const torch::Tensor& x) { return QuantizeFunction::apply(x); }

torch::Tensor jpeg_quant_table(int quality, bool chroma) {
  quality = std::clamp(quality, 1, 100);
  const int scale = quality < 50 ? 5000 / quality : 200 - 2 * quality;
  const int* base = chroma ? kChromaTable : kLumaTable;
  auto t = torch::empty({8, 8}, torch::kFloat64);
  auto acc = t.accessor<double, 2>();
  for (int i = 0; i < 64; ++i) {
    const long v = (static_cast<long>(base[i]) * scale + 50) / 100;
    acc[i / 8][i % 8] = static_cast<double>(std::clamp(v, 1L, 255L));
  }
  return t;
}

torch::Tensor dct_matrix() {
  auto d = torch::empty({8, 8}, torch::kFloat64);
  auto acc = d.accessor<double, 2>();
  for (int k = 0; k < 8; ++k)
    for (int n = 0; n < 8; ++n)
      acc[k][n] = (k == 0 ? std::sqrt(1.0 / 8) : 0.5) *
                  std::cos((2 * n + 1) * k * std::numbers::pi / 16.0);
  return d;
}

torch::Tensor jpeg_layer(const torch::Tensor& x, int quality, bool round_coefficients) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("jpeg_layer expects (N, 3, H, W)");
  if (quality < 1 || quality > 100) throw DomainError("JPEG quality must be in [1, 100]");
  return JpegFunction::apply(x, static_cast<int64_t>(quality), round_coefficients);
}

Degradation Degradation::parse(const std::string& text) {
  if (text == "quantize") return quantize();
  if (text == "jpeg") return jpeg(80);
  if (text.rfind("jpeg:", 0) == 0) {
    int q = 0;
    try {
      std::size_t used = 0;
      q = std::stoi(text.substr(5), &used);
      if (used != text.size() - 5) q = 0;
    } catch (const std::exception&) {
      q = 0;
    }
    if (q < 1 || q > 100) throw UsageError("bad JPEG quality in '" + text + "'");
    return jpeg(q);
  }
  throw UsageError("unknown degradation '" + text + "'");
}

std::string Degradation::to_string() const {
  return kind == Kind::Quantize ? "quantize" : "jpeg:" + std::to_string(quality);
}

torch::Tensor Degradation::apply(const torch::Tensor& x) const {
  if (kind == Kind::Quantize) return quantize_layer(x);
  return quantize_layer(jpeg_layer(quantize_layer(x), quality));
}

torch::Tensor global_pool(const torch::Tensor& features, int size) {
  return torch::cat({F::adaptive_max_pool2d(features, F::AdaptiveMaxPool2dFuncOptions(size)),
                     F::adaptive_avg_pool2d(features, F::AdaptiveAvgPool2dFuncOptions(size))},
                    1);
}

StyleModulatorImpl::StyleModulatorImpl(int channels, int global_dim, bool parametric)
    : channels_(channels), global_dim_(global_dim), parametric_(parametric) {
  local_weight_ = register_parameter("local_weight", torch::randn({channels, 1, 3, 3}) / 3.0);
  local_bias_ = register_parameter("local_bias", torch::zeros({channels}));
  local_gamma_ = register_parameter("local_gamma", torch::zeros({channels}));
  local_beta_ = register_parameter("local_beta", torch::zeros({channels}));
  global_fc_ = register_module("global_fc", nn::Linear(global_dim, global_dim));
  global_gamma_ = register_parameter("global_gamma", torch::zeros({global_dim}));
  global_beta_ = register_parameter("global_beta", torch::zeros({global_dim}));
  if (parametric) {
    local_param_net_ = register_module(
        "local_param_net", nn::Sequential(nn::Linear(1, kParamHidden), nn::ReLU(),
                                          nn::Linear(kParamHidden, channels * 9)));
    global_param_net_ = register_module(
        "global_param_net", nn::Sequential(nn::Linear(1, kParamHidden), nn::ReLU(),
                                           nn::Linear(kParamHidden, global_dim)));
    torch::NoGradGuard guard;
    for (auto* net : {&local_param_net_, &global_param_net_}) {
      auto last = (*net)->ptr(2)->as<nn::Linear>();
      last->weight.mul_(0.1);
      last->bias.zero_();
    }
  }
}

torch::Tensor StyleModulatorImpl::modulate_local(const torch::Tensor& features,
                                                 const torch::Tensor& param) {
  const auto n = features.size(0);
  const auto h = features.size(2);
  const auto w = features.size(3);
  torch::Tensor y;
  if (parametric_ && param.defined()) {
    // One depthwise filter bank per sample, run as a single grouped conv.
    const auto dyn = local_param_net_->forward(param.view({n, 1}).to(features.dtype()));
    const auto weight = (local_weight_.unsqueeze(0) + dyn.view({n, channels_, 1, 3, 3}))
                            .reshape({n * channels_, 1, 3, 3});
    y = F::conv2d(features.reshape({1, n * channels_, h, w}), weight,
                  F::Conv2dFuncOptions().padding(1).groups(n * channels_))
            .view({n, channels_, h, w});
    y = y + local_bias_.view({1, channels_, 1, 1});
  } else {
    y = F::conv2d(features, local_weight_,
                  F::Conv2dFuncOptions().bias(local_bias_).padding(1).groups(channels_));
  }
  y = F::instance_norm(y, F::InstanceNormFuncOptions().eps(1e-5));
  y = y * (1 + local_gamma_.view({1, channels_, 1, 1})) + local_beta_.view({1, channels_, 1, 1});
  return features + torch::relu(y);
}

torch::Tensor StyleModulatorImpl::modulate_global(const torch::Tensor& vec, const torch::Tensor& param) {
  auto y = global_fc_->forward(vec);
  if (parametric_ && param.defined())
    y = y * (1 + global_param_net_->forward(param.view({vec.size(0), 1}).to(vec.dtype())));
  y = y * (1 + global_gamma_) + global_beta_;
  return vec + torch::relu(y);
}

ResidualBlockImpl::ResidualBlockImpl(int channels)
    : conv1_(register_module("conv1", conv(channels, channels, 3))),
      conv2_(register_module("conv2", conv(channels, channels, 3))) {}

torch::Tensor ResidualBlockImpl::forward(const torch::Tensor& x) {
  return x + conv2_->forward(torch::relu(conv1_->forward(x)));
}

CbamImpl::CbamImpl(int channels, int reduction) {
  const int hidden = std::max(1, channels / reduction);
  mlp_ = register_module("mlp", nn::Sequential(nn::Conv2d(nn::Conv2dOptions(channels, hidden, 1)),
                                               nn::ReLU(),
                                               nn::Conv2d(nn::Conv2dOptions(hidden, channels, 1))));
  spatial_ = register_module("spatial", conv(2, 1, 7));
}

std::pair<torch::Tensor, torch::Tensor> CbamImpl::gates(const torch::Tensor& x) {
  const auto avg = x.mean({2, 3}, true);
  const auto mx = x.amax({2, 3}, true);
  const auto channel = torch::sigmoid(mlp_->forward(avg) + mlp_->forward(mx));
  const auto y = x * channel;
  const auto desc = torch::cat({y.mean(1, true), y.amax(1, true)}, 1);
  return {channel, torch::sigmoid(spatial_->forward(desc))};
}

torch::Tensor CbamImpl::forward(const torch::Tensor& x) {
  const auto [channel, spatial] = gates(x);
  return x * channel * spatial;
}

ResidualDenseBlockImpl::ResidualDenseBlockImpl(int channels, int layers, int growth) {
  for (int i = 0; i < layers; ++i) layers_->push_back(conv(channels + i * growth, growth, 3));
  register_module("layers", layers_);
  fuse_ = register_module("fuse", conv(channels + layers * growth, channels, 1));
}

torch::Tensor ResidualDenseBlockImpl::forward(const torch::Tensor& x) {
  std::vector<torch::Tensor> features{x};
  for (const auto& layer : *layers_)
    features.push_back(torch::relu(layer->as<nn::Conv2d>()->forward(torch::cat(features, 1))));
  return x + fuse_->forward(torch::cat(features, 1));
}

BackboneImpl::BackboneImpl(const ArchConfig& arch, bool attention) : arch_(arch) {
  arch.validate();
  const int c = arch.base_channels;
  const int gd = arch.global_vec_dim;
  head_ = register_module("head", conv(3, c, 3));
  down1_ = register_module("down1", conv(c, c, 3, 2));
  down2_ = register_module("down2", conv(c, c, 3, 2));
  if (arch.use_global_branch) {
    global_convs_ = register_module("global_convs", nn::Sequential());
    int in = 2 * c;
    for (int size = arch.global_pool_size; size > 4; size /= 2) {
      global_convs_->push_back(conv(in, gd, 3, 2));
      global_convs_->push_back(nn::ReLU());
      in = gd;
    }
    global_out_ = register_module("global_out", nn::Conv2d(nn::Conv2dOptions(in, gd, 4)));
    fuse_ = register_module("fuse", conv(c + gd, c, 1));
  }
  for (int i = 0; i < arch.num_res_blocks; ++i) {
    res_.push_back(register_module("res" + std::to_string(i), ResidualBlock(c)));
    if (attention) cbam_.push_back(register_module("cbam" + std::to_string(i), Cbam(c, arch.cbam_reduction)));
  }
  up1_ = register_module("up1", conv(2 * c, c, 3));
  up2_ = register_module("up2", conv(2 * c, c, 3));
  rdb_ = register_module("rdb", ResidualDenseBlock(c, arch.rdb_layers, arch.rdb_growth));
  tail_ = register_module("tail", conv(c, 3, 3));
}

torch::Tensor BackboneImpl::head(const torch::Tensor& x) { return torch::relu(head_->forward(x)); }

torch::Tensor BackboneImpl::global_vector(const torch::Tensor& head_features) {
  if (!arch_.use_global_branch) throw UsageError("global branch is disabled in this architecture");
  auto g = global_pool(head_features, arch_.global_pool_size);
  if (!global_convs_->is_empty()) g = global_convs_->forward(g);
  return global_out_->forward(g);
}

torch::Tensor BackboneImpl::forward(const torch::Tensor& x, StyleModulatorImpl* modulator,
                                    const torch::Tensor& param) {
  check_codec_extent(x);
  auto f0 = head(x);
  if (modulator != nullptr) f0 = modulator->modulate_local(f0, param);
  const auto f1 = torch::relu(down1_->forward(f0));
  auto f2 = torch::relu(down2_->forward(f1));
  if (arch_.use_global_branch) {
    auto g = global_vector(f0);
    if (modulator != nullptr)
      g = modulator->modulate_global(g.flatten(1), param).view({g.size(0), g.size(1), 1, 1});
    g = g.expand({-1, -1, f2.size(2), f2.size(3)});
    f2 = torch::relu(fuse_->forward(torch::cat({f2, g}, 1)));
  }
  for (std::size_t i = 0; i < res_.size(); ++i) {
    f2 = res_[i]->forward(f2);
    if (!cbam_.empty()) f2 = cbam_[i]->forward(f2);
  }
  auto up = [](const torch::Tensor& t, const torch::Tensor& like) {
    return F::interpolate(t, F::InterpolateFuncOptions()
                                 .size(std::vector<int64_t>{like.size(2), like.size(3)})
                                 .mode(torch::kNearest));
  };
  auto u1 = torch::relu(up1_->forward(torch::cat({up(f2, f1), f1}, 1)));
  auto u0 = torch::relu(up2_->forward(torch::cat({up(u1, f0), f0}, 1)));
  return torch::sigmoid(tail_->forward(rdb_->forward(u0)));
}

int64_t parameter_count(const torch::nn::Module& module) {
  int64_t n = 0;
  for (const auto& p : module.parameters()) n += p.numel();
  return n;
}

void check_codec_extent(const torch::Tensor& x) {
  if (x.dim() != 4 || x.size(1) != 3) throw ShapeError("codec input must be (N, 3, H, W)");
  if (x.size(2) < kMinExtent || x.size(3) < kMinExtent)
    throw SizeError("codec input is " + std::to_string(x.size(3)) + "x" + std::to_string(x.size(2)) +
                    ", both sides must be at least " + std::to_string(kMinExtent));
}

Codec::Codec(const ArchConfig& arch)
    : arch_(arch), encoder_(Backbone(arch, false)), decoder_(Backbone(arch, true)) {}

StyleModulator& Codec::add_style(const std::string& style_id, bool parametric) {
  if (style_id.empty()) throw StyleError("style id must not be empty");
  if (has_style(style_id)) throw StyleError("style '" + style_id + "' already exists");
  auto [it, ok] = modulators_.emplace(
      style_id, StyleModulator(arch_.base_channels, arch_.global_vec_dim, parametric));
  return it->second;
}

bool Codec::has_style(const std::string& style_id) const { return modulators_.count(style_id) != 0; }

StyleModulator& Codec::modulator(const std::string& style_id) {
  const auto it = modulators_.find(style_id);
  if (it == modulators_.end()) {
    std::string known;
    for (const auto& s : styles()) known += (known.empty() ? "" : ", ") + s;
    throw StyleError("unknown style '" + style_id + "' (registered: " + known + ")");
  }
  return it->second;
}

std::vector<std::string> Codec::styles() const {
  std::vector<std::string> ids;
  for (const auto& [id, m] : modulators_) ids.push_back(id);
  return ids;
}

torch::Tensor Codec::encode(const torch::Tensor& luv, const std::string& style_id,
                            const torch::Tensor& param) {
  auto& mod = modulator(style_id);
  if (param.defined() && !mod->parametric())
    throw StyleError("style '" + style_id + "' does not take a parameter");
  torch::Tensor p = param;
  if (mod->parametric() && !p.defined()) p = torch::zeros({luv.size(0)}, luv.options());
  return encoder_->forward(luv, mod.get(), p);
}

torch::Tensor Codec::decode(const torch::Tensor& ldr) { return decoder_->forward(ldr); }

std::vector<torch::Tensor> Codec::encoder_parameters() { return encoder_->parameters(); }
std::vector<torch::Tensor> Codec::decoder_parameters() { return decoder_->parameters(); }
std::vector<torch::Tensor> Codec::modulator_parameters(const std::string& style_id) {
  return modulator(style_id)->parameters();
}

std::vector<torch::Tensor> Codec::all_parameters() {
  auto out = encoder_parameters();
  const auto dec = decoder_parameters();
  out.insert(out.end(), dec.begin(), dec.end());
  for (auto& [id, m] : modulators_) {
    const auto p = m->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

int64_t Codec::backbone_parameter_count() const { return parameter_count(*encoder_); }

int64_t Codec::modulator_parameter_count(const std::string& style_id) const {
  const auto it = modulators_.find(style_id);
  if (it == modulators_.end()) throw StyleError("unknown style '" + style_id + "'");
  return parameter_count(*it->second);
}

void Codec::train(bool on) {
  encoder_->train(on);
  decoder_->train(on);
  for (auto& [id, m] : modulators_) m->train(on);
}

namespace {

void write_codec(const ArchConfig& arch, const Backbone& enc, const Backbone& dec,
                 const std::map<std::string, StyleModulator>& mods, std::ostream& stream) {
  torch::serialize::OutputArchive root;
  root.write("format", c10::IValue(std::string("itm-checkpoint")));
  root.write("format_version", c10::IValue(static_cast<int64_t>(kCheckpointVersion)));
  write_arch(root, arch);
  std::string index;
  torch::serialize::OutputArchive modules;
  for (const auto& [id, m] : mods) {
    index += id + (m->parametric() ? ":1\n" : ":0\n");
    torch::serialize::OutputArchive sub;
    m->save(sub);
    modules.write(id, sub);
  }
  root.write("styles", c10::IValue(index));
  torch::serialize::OutputArchive e, d;
  enc->save(e);
  dec->save(d);
  root.write("encoder", e);
  root.write("decoder", d);
  root.write("modulators", modules);
  root.save_to(stream);
}

Codec read_codec(std::istream& stream) {
  return translate_torch_errors("unreadable checkpoint", [&] {
    torch::serialize::InputArchive root;
    root.load_from(stream);
    if (archive_string(root, "format") != "itm-checkpoint")
      throw CompatibilityError("not a codec checkpoint");
    const auto version = archive_int(root, "format_version");
    if (version != kCheckpointVersion)
      throw CompatibilityError("checkpoint version " + std::to_string(version) + ", expected " +
                               std::to_string(kCheckpointVersion));
    Codec codec(read_arch(root));
    torch::serialize::InputArchive e, d, modules;
    root.read("encoder", e);
    root.read("decoder", d);
    root.read("modulators", modules);
    codec.encoder()->load(e);
    codec.decoder()->load(d);
    std::istringstream index(archive_string(root, "styles"));
    std::string line;
    while (std::getline(index, line)) {
      const auto colon = line.rfind(':');
      if (colon == std::string::npos) throw CompatibilityError("bad style index in checkpoint");
      auto& m = codec.add_style(line.substr(0, colon), line.substr(colon + 1) == "1");
      torch::serialize::InputArchive sub;
      modules.read(line.substr(0, colon), sub);
      m->load(sub);
    }
    return codec;
  });
}

}  // namespace

void Codec::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  write_codec(arch_, encoder_, decoder_, modulators_, out);
  if (!out) throw WriteError("failed writing " + path.string());
}

Codec Codec::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint " + path.string());
  return read_codec(in);
}

void Codec::save_modulator(const std::string& style_id, const std::filesystem::path& path) const {
  const auto it = modulators_.find(style_id);
  if (it == modulators_.end()) throw StyleError("unknown style '" + style_id + "'");
  torch::serialize::OutputArchive root;
  root.write("format", c10::IValue(std::string("itm-modulator")));
  root.write("format_version", c10::IValue(static_cast<int64_t>(kCheckpointVersion)));
  root.write("style_id", c10::IValue(style_id));
  root.write("parametric", c10::IValue(static_cast<int64_t>(it->second->parametric())));
  root.write("channels", c10::IValue(static_cast<int64_t>(it->second->channels())));
  root.write("global_dim", c10::IValue(static_cast<int64_t>(it->second->global_dim())));
  torch::serialize::OutputArchive sub;
  it->second->save(sub);
  root.write("modulator", sub);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  root.save_to(out);
  if (!out) throw WriteError("failed writing " + path.string());
}

std::string Codec::load_modulator(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open modulator " + path.string());
  return translate_torch_errors("unreadable modulator", [&] {
    torch::serialize::InputArchive root;
    root.load_from(in);
    if (archive_string(root, "format") != "itm-modulator")
      throw CompatibilityError("not a modulator file");
    if (archive_int(root, "format_version") != kCheckpointVersion)
      throw CompatibilityError("modulator version mismatch");
    if (archive_int(root, "channels") != arch_.base_channels ||
        archive_int(root, "global_dim") != arch_.global_vec_dim)
      throw CompatibilityError("modulator does not fit this architecture");
    const auto id = archive_string(root, "style_id");
    StyleModulator m(arch_.base_channels, arch_.global_vec_dim, archive_int(root, "parametric") != 0);
    torch::serialize::InputArchive sub;
    root.read("modulator", sub);
    m->load(sub);
    modulators_.insert_or_assign(id, m);
    return id;
  });
}

Codec Codec::clone() const {
  Codec copy(arch_);
  copy_parameters(*copy.encoder_, *encoder_);
  copy_parameters(*copy.decoder_, *decoder_);
  for (const auto& [id, m] : modulators_) {
    auto& dst = copy.add_style(id, m->parametric());
    copy_parameters(*dst, *m);
  }
  copy.train(encoder_->is_training());
  return copy;
}

}  // namespace itm
