#include "itm/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "itm/errors.hpp"
#include "itm/tensor_image.hpp"
#include "pu_curve_data.hpp"

namespace itm {

namespace {

namespace F = torch::nn::functional;

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kPuFloor = 1e-5;

torch::Tensor as_nchw(const torch::Tensor& t) {
  switch (t.dim()) {
    case 2: return t.unsqueeze(0).unsqueeze(0);
    case 3: return t.unsqueeze(0);
    case 4: return t;
    default: throw ShapeError("metric inputs must have 2 to 4 dimensions");
  }
}

void check_pair(const torch::Tensor& a, const torch::Tensor& b) {
  if (a.sizes() != b.sizes()) throw ShapeError("metric inputs differ in shape");
}

void check_extent(const torch::Tensor& nchw, int minimum) {
  if (nchw.size(2) < minimum || nchw.size(3) < minimum)
    throw SizeError("input is " + std::to_string(nchw.size(3)) + "x" + std::to_string(nchw.size(2)) +
                    ", needs at least " + std::to_string(minimum) + " per side");
}

struct SsimMaps {
  torch::Tensor ssim;  // full index map
  torch::Tensor cs;    // contrast-structure map
};

SsimMaps ssim_maps(const torch::Tensor& a, const torch::Tensor& b, int window, double sigma,
                   double data_range) {
  const auto channels = a.size(1);
  auto kernel = gaussian_window(window, sigma).to(a.scalar_type()).to(a.device());
  kernel = kernel.expand({channels, 1, window, window}).contiguous();
  auto blur = [&](const torch::Tensor& x) {
    return F::conv2d(x, kernel, F::Conv2dFuncOptions().groups(channels));
  };
  const double c1 = std::pow(kSsimK1 * data_range, 2);
  const double c2 = std::pow(kSsimK2 * data_range, 2);
  const auto mu_a = blur(a);
  const auto mu_b = blur(b);
  const auto mu_aa = mu_a * mu_a;
  const auto mu_bb = mu_b * mu_b;
  const auto mu_ab = mu_a * mu_b;
  const auto var_a = blur(a * a) - mu_aa;
  const auto var_b = blur(b * b) - mu_bb;
  const auto cov = blur(a * b) - mu_ab;
  auto cs = (2 * cov + c2) / (var_a + var_b + c2);
  auto lum = (2 * mu_ab + c1) / (mu_aa + mu_bb + c1);
  return {lum * cs, cs};
}

double parse_number(const std::string& s) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) throw FormatError("bad number '" + s + "' in PU table");
  return v;
}

double interpolate(const std::vector<double>& xs, const std::vector<double>& ys, double x) {
  std::size_t hi = std::upper_bound(xs.begin(), xs.end(), x) - xs.begin();
  hi = std::clamp<std::size_t>(hi, 1, xs.size() - 1);
  const std::size_t lo = hi - 1;
  const double t = (x - xs[lo]) / (xs[hi] - xs[lo]);
  return ys[lo] + t * (ys[hi] - ys[lo]);
}

}  // namespace

torch::Tensor gaussian_window(int size, double sigma) {
  if (size < 1 || size % 2 == 0) throw DomainError("window size must be a positive odd number");
  auto r = torch::arange(size, torch::kFloat64) - (size - 1) / 2;
  auto g = torch::exp(-(r * r) / (2 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b, int window, double sigma,
                          double data_range) {
  const auto x = as_nchw(a);
  const auto y = as_nchw(b);
  check_pair(x, y);
  check_extent(x, window);
  return ssim_maps(x, y, window, sigma, data_range).ssim.mean();
}

double ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range) {
  const auto x = as_nchw(a).to(torch::kFloat64);
  const auto y = as_nchw(b).to(torch::kFloat64);
  check_pair(x, y);
  check_extent(x, kSsimWindow);
  torch::NoGradGuard guard;
  return ssim_maps(x, y, kSsimWindow, kSsimSigma, data_range).ssim.mean().item<double>();
}

double ms_ssim(const torch::Tensor& a, const torch::Tensor& b, double data_range) {
  auto x = as_nchw(a).to(torch::kFloat64);
  auto y = as_nchw(b).to(torch::kFloat64);
  check_pair(x, y);
  check_extent(x, kMsSsimMinExtent);
  torch::NoGradGuard guard;
  const std::size_t levels = kMsSsimWeights.size();
  auto score = torch::ones({x.size(0), x.size(1)}, torch::kFloat64);
  for (std::size_t j = 0; j < levels; ++j) {
    const auto maps = ssim_maps(x, y, kSsimWindow, kSsimSigma, data_range);
    const auto& term = j + 1 == levels ? maps.ssim : maps.cs;
    score = score * torch::relu(term.mean({2, 3})).pow(kMsSsimWeights[j]);
    if (j + 1 < levels) {
      x = F::avg_pool2d(x, F::AvgPool2dFuncOptions(2));
      y = F::avg_pool2d(y, F::AvgPool2dFuncOptions(2));
    }
  }
  return score.mean().item<double>();
}

double psnr(const torch::Tensor& a, const torch::Tensor& b, double peak) {
  if (a.sizes() != b.sizes()) throw ShapeError("metric inputs differ in shape");
  const double mse = (a.to(torch::kFloat64) - b.to(torch::kFloat64)).pow(2).mean().item<double>();
  if (mse == 0.0) return kInf;
  return 10.0 * std::log10(peak * peak / mse);
}

PuCurve parse_pu_curve(const std::string& csv) {
  PuCurve curve;
  std::istringstream in(csv);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("version");
      if (pos != std::string::npos && curve.version.empty()) {
        auto v = line.substr(pos + 7);
        v.erase(0, v.find_first_not_of(" :="));
        curve.version = v;
      }
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("PU table row without a comma");
    const double x = parse_number(line.substr(0, comma));
    const double y = parse_number(line.substr(comma + 1));
    if (!curve.log10_lum.empty() && (x <= curve.log10_lum.back() || y <= curve.code.back()))
      throw FormatError("PU table is not strictly increasing");
    curve.log10_lum.push_back(x);
    curve.code.push_back(y);
  }
  if (curve.log10_lum.size() < 2) throw FormatError("PU table needs at least two rows");
  return curve;
}

const PuCurve& pu_curve() {
  static const PuCurve curve = parse_pu_curve(kPuCurveCsv);
  return curve;
}

double pu_encode(double luminance) {
  if (!(luminance > 0.0) || !std::isfinite(luminance))
    throw DomainError("PU encoding needs positive finite luminance");
  const auto& c = pu_curve();
  return interpolate(c.log10_lum, c.code, std::log10(luminance));
}

double pu_decode(double code) {
  const auto& c = pu_curve();
  return std::pow(10.0, interpolate(c.code, c.log10_lum, code));
}

torch::Tensor pu_encode(const torch::Tensor& luminance) {
  auto lum = luminance.detach().to(torch::kCPU, torch::kFloat64).contiguous();
  auto out = torch::empty_like(lum);
  const double* src = lum.data_ptr<double>();
  double* dst = out.data_ptr<double>();
  for (int64_t i = 0; i < lum.numel(); ++i) dst[i] = pu_encode(src[i]);
  return out;
}

double pu_scale_factor(const HdrImage& original, double display_peak) {
  if (!(display_peak > 0.0)) throw DomainError("display peak must be positive");
  const auto it = std::max_element(original.pixels.begin(), original.pixels.end());
  const double peak = it == original.pixels.end() ? 0.0 : *it;
  return peak > 0.0 ? display_peak / peak : 1.0;
}

torch::Tensor pu_codes(const HdrImage& img, double factor) {
  auto t = to_tensor(img).to(torch::kFloat64) * factor;
  return pu_encode(t.clamp_min(kPuFloor));
}

double pu_psnr(const HdrImage& restored, const HdrImage& original, double display_peak) {
  const double s = pu_scale_factor(original, display_peak);
  return psnr(pu_codes(restored, s), pu_codes(original, s), 255.0);
}

double pu_ssim(const HdrImage& restored, const HdrImage& original, double display_peak) {
  const double s = pu_scale_factor(original, display_peak);
  return ssim(pu_codes(restored, s) / 255.0, pu_codes(original, s) / 255.0);
}

double pu_msssim(const HdrImage& restored, const HdrImage& original, double display_peak) {
  const double s = pu_scale_factor(original, display_peak);
  return ms_ssim(pu_codes(restored, s) / 255.0, pu_codes(original, s) / 255.0);
}

void MetricReport::add(const std::string& image_id, const MetricRow& row) {
  rows_.emplace_back(image_id, row);
}

MetricRow MetricReport::aggregate() const {
  MetricRow out;
  auto column = [&](double MetricRow::*field) {
    double sum = 0.0;
    int n = 0;
    for (const auto& [id, row] : rows_) {
      const double v = row.*field;
      if (std::isnan(v)) continue;
      sum += v;
      ++n;
    }
    out.*field = n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / n;
  };
  column(&MetricRow::ldr_psnr);
  column(&MetricRow::ldr_ssim);
  column(&MetricRow::pu_psnr);
  column(&MetricRow::pu_ssim);
  column(&MetricRow::pu_msssim);
  return out;
}

std::string format_metric(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

std::string MetricReport::to_table(char delimiter) const {
  std::ostringstream out;
  out << "image";
  for (const char* c : kColumns) out << delimiter << c;
  out << '\n';
  auto emit = [&](const std::string& id, const MetricRow& r) {
    out << id << delimiter << format_metric(r.ldr_psnr) << delimiter << format_metric(r.ldr_ssim)
        << delimiter << format_metric(r.pu_psnr) << delimiter << format_metric(r.pu_ssim)
        << delimiter << format_metric(r.pu_msssim) << '\n';
  };
  for (const auto& [id, row] : rows_) emit(id, row);
  emit("mean", aggregate());
  return out.str();
}

MetricRow evaluate_pair(const HdrImage& restored, const HdrImage& original, const LdrImage* ldr,
                        const LdrImage* target, double display_peak) {
  MetricRow row;
  row.pu_psnr = pu_psnr(restored, original, display_peak);
  if (std::min(original.width, original.height) >= kSsimWindow)
    row.pu_ssim = pu_ssim(restored, original, display_peak);
  if (std::min(original.width, original.height) >= kMsSsimMinExtent)
    row.pu_msssim = pu_msssim(restored, original, display_peak);
  if (ldr != nullptr && target != nullptr) {
    const auto a = to_tensor(*ldr);
    const auto b = to_tensor(*target);
    row.ldr_psnr = psnr(a, b, 1.0);
    if (std::min(ldr->width, ldr->height) >= kSsimWindow) row.ldr_ssim = ssim(a, b);
  }
  return row;
}

}  // namespace itm
