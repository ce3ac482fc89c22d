#include "itm/colorspace.hpp"

#include <algorithm>
#include <cmath>

#include "itm/errors.hpp"

namespace itm {

namespace {

// sRGB primaries, D65 white.
constexpr double kRgbToXyz[3][3] = {
    {0.4124564, 0.3575761, 0.1804375},
    {0.2126729, 0.7151522, 0.0721750},
    {0.0193339, 0.1191920, 0.9503041},
};

struct Inverse3 {
  double m[3][3];
};

Inverse3 invert(const double (&a)[3][3]) {
  const double det = a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
                     a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
                     a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  Inverse3 r{};
  r.m[0][0] = (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det;
  r.m[0][1] = (a[0][2] * a[2][1] - a[0][1] * a[2][2]) / det;
  r.m[0][2] = (a[0][1] * a[1][2] - a[0][2] * a[1][1]) / det;
  r.m[1][0] = (a[1][2] * a[2][0] - a[1][0] * a[2][2]) / det;
  r.m[1][1] = (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det;
  r.m[1][2] = (a[0][2] * a[1][0] - a[0][0] * a[1][2]) / det;
  r.m[2][0] = (a[1][0] * a[2][1] - a[1][1] * a[2][0]) / det;
  r.m[2][1] = (a[0][1] * a[2][0] - a[0][0] * a[2][1]) / det;
  r.m[2][2] = (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det;
  return r;
}

const Inverse3& xyz_to_rgb_matrix() {
  static const Inverse3 inv = invert(kRgbToXyz);
  return inv;
}

void check_bounds(const NormalizedLuv& luv, const CodecProfile& profile) {
  const DomainBounds expected = DomainBounds::of(profile);
  if (luv.bounds != DomainBounds{} && luv.bounds != expected)
    throw CompatibilityError("normalized raster was produced with a different profile");
}

}  // namespace

Vec3 rgb_to_xyz(const Vec3& rgb) {
  Vec3 out{};
  for (int r = 0; r < 3; ++r)
    out[r] = kRgbToXyz[r][0] * rgb[0] + kRgbToXyz[r][1] * rgb[1] + kRgbToXyz[r][2] * rgb[2];
  return out;
}

Vec3 xyz_to_rgb(const Vec3& xyz) {
  const auto& m = xyz_to_rgb_matrix().m;
  Vec3 out{};
  for (int r = 0; r < 3; ++r) out[r] = m[r][0] * xyz[0] + m[r][1] * xyz[1] + m[r][2] * xyz[2];
  return out;
}

std::array<double, 2> chroma_forward(const Vec3& xyz) {
  const double d = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
  if (!(d > 0.0)) return {0.0, 0.0};
  return {2.48 * xyz[0] / (81.0 * d), 0.62 * xyz[1] / (9.0 * d)};
}

Vec3 chroma_inverse(double u_raw, double v_raw, double y) {
  if (v_raw <= kDegenerateV) return {0.0, 0.0, 0.0};
  const double d = 0.62 * y / (9.0 * v_raw);
  const double x = u_raw * 81.0 * d / 2.48;
  const double z = (d - x - 15.0 * y) / 3.0;
  return {x, y, z};
}

std::array<double, 2> default_uv_scale() {
  // Nonnegative RGB spans the triangle of the three primaries, so the
  // extremes of the raw chroma occur at the primaries themselves.
  double u_max = 0.0;
  double v_max = 0.0;
  for (int p = 0; p < 3; ++p) {
    Vec3 rgb{0.0, 0.0, 0.0};
    rgb[p] = 1.0;
    const auto uv = chroma_forward(rgb_to_xyz(rgb));
    u_max = std::max(u_max, uv[0]);
    v_max = std::max(v_max, uv[1]);
  }
  return {1.0 / u_max, 1.0 / v_max};
}

Vec3 xyz_to_luv_norm(const Vec3& xyz, const CodecProfile& profile) {
  const double d = xyz[0] + 15.0 * xyz[1] + 3.0 * xyz[2];
  if (!(d > 0.0)) return {0.0, 0.0, 0.0};
  const double range = profile.log_lum_max - profile.log_lum_min;
  const double l = xyz[1] > 0.0
                       ? std::clamp((std::log(xyz[1]) - profile.log_lum_min) / range, 0.0, 1.0)
                       : 0.0;
  const auto uv = chroma_forward(xyz);
  return {l, std::clamp(uv[0] * profile.uv_scale[0], 0.0, 1.0),
          std::clamp(uv[1] * profile.uv_scale[1], 0.0, 1.0)};
}

Vec3 luv_norm_to_xyz(const Vec3& luv, const CodecProfile& profile) {
  const double range = profile.log_lum_max - profile.log_lum_min;
  const double y = std::exp(luv[0] * range + profile.log_lum_min);
  return chroma_inverse(luv[1] / profile.uv_scale[0], luv[2] / profile.uv_scale[1], y);
}

NormalizedLuv hdr_to_domain(const HdrImage& img, const CodecProfile& profile) {
  NormalizedLuv out;
  out.width = img.width;
  out.height = img.height;
  out.bounds = DomainBounds::of(profile);
  out.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
    const Vec3 luv = xyz_to_luv_norm(
        rgb_to_xyz({img.pixels[i], img.pixels[i + 1], img.pixels[i + 2]}), profile);
    for (int c = 0; c < 3; ++c) out.pixels[i + c] = static_cast<float>(luv[c]);
  }
  return out;
}

HdrImage domain_to_hdr(const NormalizedLuv& luv, const CodecProfile& profile) {
  check_bounds(luv, profile);
  HdrImage out(luv.width, luv.height);
  for (std::size_t i = 0; i < luv.pixels.size(); i += 3) {
    const Vec3 rgb = xyz_to_rgb(luv_norm_to_xyz(
        {std::clamp<double>(luv.pixels[i], 0.0, 1.0), std::clamp<double>(luv.pixels[i + 1], 0.0, 1.0),
         std::clamp<double>(luv.pixels[i + 2], 0.0, 1.0)},
        profile));
    for (int c = 0; c < 3; ++c) out.pixels[i + c] = static_cast<float>(std::max(0.0, rgb[c]));
  }
  return out;
}

}  // namespace itm
