#pragma once

#include <array>
#include <iosfwd>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "itm/hdr_io.hpp"

namespace itm {

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;
inline constexpr std::array<double, 5> kMsSsimWeights{0.0448, 0.2856, 0.3001, 0.2363, 0.1333};
inline constexpr int kMsSsimMinExtent = 176;
inline constexpr double kDefaultDisplayPeak = 4000.0;

/// Normalized 2-D Gaussian kernel, shape (size, size), float64.
torch::Tensor gaussian_window(int size, double sigma);

/// Differentiable mean SSIM over all windows and channels of (N, C, H, W)
/// inputs. No size check beyond window <= min(H, W).
torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b, int window = kSsimWindow,
                          double sigma = kSsimSigma, double data_range = 1.0);

/// SSIM of equally shaped maps given as (H, W), (C, H, W) or (N, C, H, W).
/// Color inputs average the per-channel scores. Throws SizeError below 11.
double ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range = 1.0);

/// Five-scale MS-SSIM. Contrast-structure terms at every scale, luminance
/// at the coarsest; 2x2 average pooling between scales. Negative
/// per-scale terms are clamped to 0 before exponentiation.
double ms_ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range = 1.0);

/// +inf for identical inputs.
double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak = 1.0);

// Perceptually uniform luminance encoding backed by the shipped table.

struct PuCurve {
  std::string version;
  std::vector<double> log10_lum;  // strictly increasing
  std::vector<double> code;       // strictly increasing
};

const PuCurve& pu_curve();
PuCurve parse_pu_curve(const std::string& csv);

/// Piecewise linear in log10 luminance; end segments extend linearly.
/// Throws DomainError for non-positive or non-finite input.
double pu_encode(double luminance);
double pu_decode(double code);
torch::Tensor pu_encode(const torch::Tensor& luminance);

/// Maps the original's maximum component to display_peak cd/m2 and applies
/// the same linear factor to both images before PU encoding each channel.
/// Components below the table floor (1e-5) are raised to it.
torch::Tensor pu_codes(const HdrImage& img, double factor);
double pu_scale_factor(const HdrImage& original, double display_peak);

double pu_psnr(const HdrImage& restored, const HdrImage& original,
               double display_peak = kDefaultDisplayPeak);
double pu_ssim(const HdrImage& restored, const HdrImage& original,
               double display_peak = kDefaultDisplayPeak);
double pu_msssim(const HdrImage& restored, const HdrImage& original,
                 double display_peak = kDefaultDisplayPeak);

struct MetricRow {
  double ldr_psnr = std::numeric_limits<double>::quiet_NaN();
  double ldr_ssim = std::numeric_limits<double>::quiet_NaN();
  double pu_psnr = std::numeric_limits<double>::quiet_NaN();
  double pu_ssim = std::numeric_limits<double>::quiet_NaN();
  double pu_msssim = std::numeric_limits<double>::quiet_NaN();
};

class MetricReport {
 public:
  static constexpr std::array<const char*, 5> kColumns{"ldr_psnr", "ldr_ssim", "pu_psnr", "pu_ssim",
                                                       "pu_msssim"};

  void add(const std::string& image_id, const MetricRow& row);
  const std::vector<std::pair<std::string, MetricRow>>& rows() const { return rows_; }
  /// Column means over rows where the value is not NaN. Any +inf gives +inf.
  MetricRow aggregate() const;
  /// Header, one line per image, then a "mean" line.
  std::string to_table(char delimiter = ',') const;

 private:
  std::vector<std::pair<std::string, MetricRow>> rows_;
};

std::string format_metric(double v);

/// Fills the restoration columns of a row. The LDR columns are filled when
/// `ldr` and `target` are both non-null.
MetricRow evaluate_pair(const HdrImage& restored, const HdrImage& original, const LdrImage* ldr,
                        const LdrImage* target, double display_peak = kDefaultDisplayPeak);

}  // namespace itm
