#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace itm {

/// Linear-radiance RGB raster. Pixels are interleaved RGB, row-major.
///
/// Values are nonnegative and finite; there is no upper bound. The
/// codec itself requires at least 32x32 (see `kMinCodecExtent`), but
/// the I/O layer accepts any positive size.
struct HdrImage {
  int width = 0;
  int height = 0;
  std::vector<float> pixels;

  HdrImage() = default;
  HdrImage(int width, int height, float fill = 0.0f);

  float& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  float at(int x, int y, int c) const { return pixels[index(x, y, c)]; }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  /// Throws DataError when a component is negative or non-finite.
  void validate() const;

  bool operator==(const HdrImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
};

/// 8-bit per channel RGB bitmap, interleaved, row-major.
struct LdrImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  LdrImage() = default;
  LdrImage(int width, int height, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c) { return pixels[index(x, y, c)]; }
  std::uint8_t at(int x, int y, int c) const { return pixels[index(x, y, c)]; }

  std::size_t pixel_count() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }

  bool operator==(const LdrImage&) const = default;

 private:
  std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * width + x) * 3 + c;
  }
};

inline constexpr int kMinCodecExtent = 32;

// Radiance RGBE ------------------------------------------------------------

using Rgbe = std::array<std::uint8_t, 4>;

/// (m + 0.5) / 256 * 2^(e - 128) per channel; e == 0 decodes to black.
std::array<float, 3> rgbe_to_float(const Rgbe& rgbe);
Rgbe float_to_rgbe(const std::array<float, 3>& rgb);

HdrImage read_hdr(const std::filesystem::path& path);
HdrImage decode_hdr(std::span<const std::uint8_t> bytes);
void write_hdr(const HdrImage& img, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_hdr(const HdrImage& img);

// 8-bit bitmaps ------------------------------------------------------------

enum class LdrFormat { LosslessBitmap, Jpeg };

struct LdrEncoding {
  LdrFormat format = LdrFormat::LosslessBitmap;
  int jpeg_quality = 90;

  static LdrEncoding lossless() { return {}; }
  static LdrEncoding jpeg(int quality) { return {LdrFormat::Jpeg, quality}; }

  /// Accepts "png", "lossless", "jpeg" or "jpeg:<quality>".
  static LdrEncoding parse(std::string_view text);
};

/// PNG for the lossless path. JPEG is baseline, 4:4:4, float DCT.
std::vector<std::uint8_t> encode_ldr(const LdrImage& img, const LdrEncoding& encoding);
/// Detects PNG or JPEG from the leading bytes.
LdrImage decode_ldr(std::span<const std::uint8_t> bytes);

void write_ldr(const LdrImage& img, const std::filesystem::path& path,
               const LdrEncoding& encoding = LdrEncoding::lossless());
LdrImage read_ldr(const std::filesystem::path& path);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

}  // namespace itm
