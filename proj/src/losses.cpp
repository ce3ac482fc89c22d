#include "itm/losses.hpp"

#include <cmath>

#include <torch/script.h>

#include "itm/errors.hpp"
#include "itm/metrics.hpp"

namespace itm {

namespace {

namespace F = torch::nn::functional;

void check_same(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("loss inputs differ in shape");
}

}  // namespace

RandomConvExtractor::RandomConvExtractor(std::uint64_t seed, int depth) : seed_(seed) {
  if (depth < 1) throw DomainError("extractor depth must be positive");
  auto gen = at::detail::createCPUGenerator(seed);
  int in = 3;
  for (int i = 0; i < depth; ++i) {
    const int out = 16 << i;
    const double scale = std::sqrt(2.0 / (in * 9));
    weights_.push_back(torch::randn({out, in, 3, 3}, gen, torch::kFloat32) * scale);
    biases_.push_back(torch::randn({out}, gen, torch::kFloat32) * 0.01);
    in = out;
  }
}

torch::Tensor RandomConvExtractor::features(const torch::Tensor& x) {
  auto y = x;
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const auto w = weights_[i].to(x.options());
    const auto b = biases_[i].to(x.options());
    y = torch::relu(F::conv2d(y, w, F::Conv2dFuncOptions().bias(b).padding(1)));
    y = F::avg_pool2d(y, F::AvgPool2dFuncOptions(2));
  }
  return y;
}

std::string RandomConvExtractor::describe() const {
  return "random:" + std::to_string(seed_) + " depth " + std::to_string(weights_.size());
}

struct ScriptedExtractor::Impl {
  torch::jit::script::Module module;
  std::string path;
};

ScriptedExtractor::ScriptedExtractor(const std::filesystem::path& path) : impl_(std::make_unique<Impl>()) {
  try {
    impl_->module = torch::jit::load(path.string());
  } catch (const std::exception& e) {
    throw FormatError("cannot load feature extractor " + path.string() + ": " + e.what());
  }
  impl_->module.eval();
  for (auto p : impl_->module.parameters()) p.set_requires_grad(false);
  impl_->path = path.string();
}

ScriptedExtractor::~ScriptedExtractor() = default;

torch::Tensor ScriptedExtractor::features(const torch::Tensor& x) {
  return impl_->module.forward({x}).toTensor();
}

std::string ScriptedExtractor::describe() const { return "script:" + impl_->path; }

std::unique_ptr<PerceptualExtractor> make_extractor(const std::string& spec) {
  if (spec == "random") return std::make_unique<RandomConvExtractor>();
  if (spec.rfind("random:", 0) == 0) {
    try {
      return std::make_unique<RandomConvExtractor>(std::stoull(spec.substr(7)));
    } catch (const std::logic_error&) {
      throw UsageError("bad extractor seed in '" + spec + "'");
    }
  }
  return std::make_unique<ScriptedExtractor>(spec);
}

torch::Tensor image_gradients(const torch::Tensor& x) {
  const auto h = x.size(2);
  const auto w = x.size(3);
  // The replicated last column and row difference to zero.
  const auto dx = F::pad(x.slice(3, 1, w) - x.slice(3, 0, w - 1), F::PadFuncOptions({0, 1, 0, 0}));
  const auto dy = F::pad(x.slice(2, 1, h) - x.slice(2, 0, h - 1), F::PadFuncOptions({0, 0, 0, 1}));
  return torch::cat({dx, dy}, 1);
}

int loss_ssim_window(const torch::Tensor& x) {
  int w = static_cast<int>(std::min<int64_t>({kSsimWindow, x.size(-1), x.size(-2)}));
  if (w % 2 == 0) --w;
  return std::max(w, 1);
}

torch::Tensor invertibility_loss(const torch::Tensor& restored, const torch::Tensor& original,
                                 const LossWeights& w) {
  check_same(restored, original);
  const auto mse = F::mse_loss(restored, original);
  const auto s = ssim_tensor(restored, original, loss_ssim_window(restored));
  return mse + w.sigma_ssim * (1 - s);
}

torch::Tensor gradient_term(const torch::Tensor& generated, const torch::Tensor& target) {
  check_same(generated, target);
  return F::mse_loss(image_gradients(generated), image_gradients(target));
}

torch::Tensor style_loss(const torch::Tensor& generated, const torch::Tensor& target,
                         PerceptualExtractor* extractor, const LossWeights& w, StyleLossMode mode) {
  check_same(generated, target);
  auto loss = F::mse_loss(generated, target);
  if (mode == StyleLossMode::PixelOnly) return loss;
  loss = loss + w.alpha * gradient_term(generated, target);
  if (extractor != nullptr && w.beta_perc != 0.0) {
    torch::Tensor reference;
    {
      torch::NoGradGuard guard;
      reference = extractor->features(target);
    }
    loss = loss + w.beta_perc * F::mse_loss(extractor->features(generated), reference);
  }
  return loss;
}

LossTerms total_loss(const torch::Tensor& restored, const torch::Tensor& original,
                     const torch::Tensor& generated, const torch::Tensor& target,
                     PerceptualExtractor* extractor, const LossWeights& w, StyleLossMode mode) {
  LossTerms t;
  t.inv = invertibility_loss(restored, original, w);
  t.sty = style_loss(generated, target, extractor, w, mode);
  t.total = w.lambda * t.inv + (1 - w.lambda) * t.sty;
  return t;
}

}  // namespace itm
