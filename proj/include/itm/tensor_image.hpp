#pragma once

#include <torch/torch.h>

#include "itm/colorspace.hpp"
#include "itm/hdr_io.hpp"

namespace itm {

// Conversions between rasters and (1, 3, H, W) float32 tensors.

torch::Tensor to_tensor(const NormalizedLuv& luv);
torch::Tensor to_tensor(const HdrImage& img);
/// Byte k becomes k / 255 in float32, the same value the quantization
/// layer produces for that level.
torch::Tensor to_tensor(const LdrImage& img);

NormalizedLuv to_luv(const torch::Tensor& t, const DomainBounds& bounds);
HdrImage to_hdr(const torch::Tensor& t);
/// Rounds 255 * x half up after clamping to [0, 1].
LdrImage to_ldr(const torch::Tensor& t);

/// Stacks single-image tensors along the batch dimension.
torch::Tensor stack_batch(const std::vector<torch::Tensor>& images);

}  // namespace itm
