#pragma once

#include <optional>
#include <string>

#include <torch/torch.h>

#include "itm/colorspace.hpp"
#include "itm/hdr_io.hpp"
#include "itm/model.hpp"
#include "itm/profile.hpp"

namespace itm {

// Image-level inference. All calls run without autograd in eval mode and
// restore the previous training flag afterwards.

/// Continuous encoder output (1, 3, H, W) in [0, 1].
torch::Tensor encode_continuous(Codec& codec, const CodecProfile& profile, const HdrImage& hdr,
                                const std::string& style_id, std::optional<double> gamma = {});

/// Quantized invertible LDR.
LdrImage encode_image(Codec& codec, const CodecProfile& profile, const HdrImage& hdr,
                      const std::string& style_id, std::optional<double> gamma = {});

/// Restores radiance from an LDR map already in [0, 1].
HdrImage decode_tensor(Codec& codec, const CodecProfile& profile, const torch::Tensor& ldr);
HdrImage decode_image(Codec& codec, const CodecProfile& profile, const LdrImage& ldr);

/// Checks that the codec's styles and architecture agree with the profile.
void check_compatible(const Codec& codec, const CodecProfile& profile);

}  // namespace itm
