#include "itm/pipeline.hpp"

#include "itm/errors.hpp"
#include "itm/tensor_image.hpp"

namespace itm {

namespace {

class EvalScope {
 public:
  explicit EvalScope(Codec& codec) : codec_(codec), was_training_(codec.encoder()->is_training()) {
    codec_.eval();
  }
  ~EvalScope() { codec_.train(was_training_); }
  EvalScope(const EvalScope&) = delete;
  EvalScope& operator=(const EvalScope&) = delete;

 private:
  Codec& codec_;
  bool was_training_;
  torch::NoGradGuard no_grad_;
};

}  // namespace

torch::Tensor encode_continuous(Codec& codec, const CodecProfile& profile, const HdrImage& hdr,
                                const std::string& style_id, std::optional<double> gamma) {
  EvalScope scope(codec);
  const auto luv = to_tensor(hdr_to_domain(hdr, profile));
  torch::Tensor param;
  if (gamma) param = torch::full({1}, normalize_gamma(*gamma));
  return codec.encode(luv, style_id, param);
}

LdrImage encode_image(Codec& codec, const CodecProfile& profile, const HdrImage& hdr,
                      const std::string& style_id, std::optional<double> gamma) {
  return to_ldr(quantize_layer(encode_continuous(codec, profile, hdr, style_id, gamma)));
}

HdrImage decode_tensor(Codec& codec, const CodecProfile& profile, const torch::Tensor& ldr) {
  EvalScope scope(codec);
  const auto luv = codec.decode(ldr);
  return domain_to_hdr(to_luv(luv, DomainBounds::of(profile)), profile);
}

HdrImage decode_image(Codec& codec, const CodecProfile& profile, const LdrImage& ldr) {
  return decode_tensor(codec, profile, to_tensor(ldr));
}

void check_compatible(const Codec& codec, const CodecProfile& profile) {
  if (!(codec.arch() == profile.arch))
    throw CompatibilityError("checkpoint architecture differs from the profile");
  for (const auto& id : profile.style_registry)
    if (!codec.has_style(id))
      throw CompatibilityError("profile style '" + id + "' has no modulator in the checkpoint");
}

}  // namespace itm
