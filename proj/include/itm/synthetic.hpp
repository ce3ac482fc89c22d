#pragma once

#include <cstdint>

#include "itm/hdr_io.hpp"

namespace itm {

/// Procedural outdoor-like HDR scene: graded sky, textured ground, a few
/// blocks with lit windows and a sun disk with halo. Spans roughly four
/// to five decades of radiance. Deterministic in `seed`.
HdrImage synthetic_scene(std::uint64_t seed, int width = 128, int height = 128);

}  // namespace itm
