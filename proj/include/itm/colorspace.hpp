#pragma once

#include <array>
#include <vector>

#include "itm/hdr_io.hpp"
#include "itm/profile.hpp"

namespace itm {

using Vec3 = std::array<double, 3>;

/// Degenerate-chromaticity cutoff for the inverse transform.
inline constexpr double kDegenerateV = 1e-12;

/// Linear sRGB (D65) to CIE XYZ.
Vec3 rgb_to_xyz(const Vec3& rgb);
Vec3 xyz_to_rgb(const Vec3& xyz);

/// Raw chroma channels before the profile rescale:
///   U = 2.48 X / (81 D),  V = 0.62 Y / (9 D),  D = X + 15 Y + 3 Z.
/// Returns {0, 0} when D == 0. Every use of these constants goes through
/// this pair of functions.
std::array<double, 2> chroma_forward(const Vec3& xyz);
/// Recovers X and Z from the raw chroma and Y. Black when V_raw <= kDegenerateV.
Vec3 chroma_inverse(double u_raw, double v_raw, double y);

/// Scale factors mapping the largest raw U and V reachable by nonnegative
/// sRGB radiance onto 1.
std::array<double, 2> default_uv_scale();

/// Bounds a NormalizedLuv raster was produced with.
struct DomainBounds {
  double log_lum_min = 0.0;
  double log_lum_max = 0.0;
  std::array<double, 2> uv_scale{};

  static DomainBounds of(const CodecProfile& profile) {
    return {profile.log_lum_min, profile.log_lum_max, profile.uv_scale};
  }
  bool operator==(const DomainBounds&) const = default;
};

/// Normalized (L, U, V) raster, interleaved, every value in [0, 1].
struct NormalizedLuv {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;
  DomainBounds bounds;

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
};

Vec3 xyz_to_luv_norm(const Vec3& xyz, const CodecProfile& profile);
Vec3 luv_norm_to_xyz(const Vec3& luv, const CodecProfile& profile);

NormalizedLuv hdr_to_domain(const HdrImage& img, const CodecProfile& profile);
/// Negative RGB produced by the inverse primaries matrix is clamped to 0.
HdrImage domain_to_hdr(const NormalizedLuv& luv, const CodecProfile& profile);

}  // namespace itm
