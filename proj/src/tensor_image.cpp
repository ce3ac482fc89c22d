#include "itm/tensor_image.hpp"

#include "itm/errors.hpp"

namespace itm {

namespace {

template <typename T>
torch::Tensor planar(const std::vector<T>& interleaved, int width, int height, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<T*>(interleaved.data()), {height, width, 3}, dtype);
  return t.permute({2, 0, 1}).unsqueeze(0).contiguous();
}

torch::Tensor interleaved(const torch::Tensor& t) {
  if (t.dim() != 4 || t.size(0) != 1 || t.size(1) != 3)
    throw ShapeError("expected a (1, 3, H, W) tensor");
  return t.detach().to(torch::kCPU).squeeze(0).permute({1, 2, 0}).contiguous();
}

}  // namespace

torch::Tensor to_tensor(const NormalizedLuv& luv) {
  return planar(luv.pixels, luv.width, luv.height, torch::kFloat32);
}

torch::Tensor to_tensor(const HdrImage& img) {
  return planar(img.pixels, img.width, img.height, torch::kFloat32);
}

torch::Tensor to_tensor(const LdrImage& img) {
  return planar(img.pixels, img.width, img.height, torch::kUInt8).to(torch::kFloat32) / 255;
}

NormalizedLuv to_luv(const torch::Tensor& t, const DomainBounds& bounds) {
  const auto hwc = interleaved(t).to(torch::kFloat32).clamp(0.0, 1.0);
  NormalizedLuv out;
  out.height = static_cast<int>(hwc.size(0));
  out.width = static_cast<int>(hwc.size(1));
  out.bounds = bounds;
  const float* p = hwc.data_ptr<float>();
  out.pixels.assign(p, p + hwc.numel());
  return out;
}

HdrImage to_hdr(const torch::Tensor& t) {
  const auto hwc = interleaved(t).to(torch::kFloat32);
  HdrImage out(static_cast<int>(hwc.size(1)), static_cast<int>(hwc.size(0)));
  const float* p = hwc.data_ptr<float>();
  std::copy(p, p + hwc.numel(), out.pixels.begin());
  return out;
}

LdrImage to_ldr(const torch::Tensor& t) {
  const auto hwc = torch::floor(interleaved(t).to(torch::kFloat32).clamp(0.0, 1.0) * 255 + 0.5)
                       .to(torch::kUInt8)
                       .contiguous();
  LdrImage out(static_cast<int>(hwc.size(1)), static_cast<int>(hwc.size(0)));
  const auto* p = hwc.data_ptr<std::uint8_t>();
  std::copy(p, p + hwc.numel(), out.pixels.begin());
  return out;
}

torch::Tensor stack_batch(const std::vector<torch::Tensor>& images) {
  if (images.empty()) throw ShapeError("cannot stack an empty batch");
  return torch::cat(images, 0);
}

}  // namespace itm
