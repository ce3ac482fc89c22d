#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "itm/dataset.hpp"
#include "itm/model.hpp"
#include "itm/profile.hpp"

namespace itm {

/// Quality 100 stands for the lossless bitmap path.
inline constexpr int kLosslessQuality = 100;

struct RDPoint {
  int jpeg_quality = 0;
  double bpp = 0.0;
  double pu_psnr = 0.0;
  double pu_ssim = 0.0;
  double pu_msssim = 0.0;
};

struct RDImageResult {
  std::string image_id;
  std::vector<RDPoint> points;
};

struct RDCurve {
  std::vector<RDImageResult> per_image;
  std::vector<RDPoint> aggregate;  // mean over images at each quality
  std::vector<std::string> skipped;

  /// Columns quality, bpp, pu_psnr, pu_ssim, pu_msssim.
  std::string to_table(char delimiter = ',') const;
};

struct RDOptions {
  std::string style_id = "reinhard";
  double display_peak = 4000.0;
  /// When set, every stored LDR is written here as <image>_q<quality>.<ext>
  /// and read back from disk; otherwise the byte stream stays in memory.
  std::filesystem::path work_dir;
};

/// Encodes each image once, stores the LDR at every quality, measures the
/// stored size in bits per pixel, decodes and scores the restored radiance.
/// Qualities must be ascending within [1, 100]. Failing images are skipped
/// and listed.
RDCurve rd_sweep(Codec& codec, const CodecProfile& profile, const std::vector<NamedHdr>& images,
                 const std::vector<int>& qualities, const RDOptions& options = {});

/// Static SVG plot of the aggregate PU-PSNR against bpp.
std::string rd_svg(const RDCurve& curve, const std::string& title);
void write_rd_svg(const RDCurve& curve, const std::filesystem::path& path, const std::string& title);

}  // namespace itm
