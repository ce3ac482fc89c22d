#include "itm/rd_eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <sstream>

#include "itm/errors.hpp"
#include "itm/metrics.hpp"
#include "itm/pipeline.hpp"

namespace itm {

namespace {

LdrEncoding encoding_for(int quality) {
  return quality == kLosslessQuality ? LdrEncoding::lossless() : LdrEncoding::jpeg(quality);
}

RDPoint score_point(Codec& codec, const CodecProfile& profile, const NamedHdr& item,
                    const LdrImage& ldr, int quality, const RDOptions& options) {
  const auto encoding = encoding_for(quality);
  auto bytes = encode_ldr(ldr, encoding);
  if (!options.work_dir.empty()) {
    const auto stem = std::filesystem::path(item.name).stem().string();
    const auto path = options.work_dir / (stem + "_q" + std::to_string(quality) +
                                          (quality == kLosslessQuality ? ".png" : ".jpg"));
    write_file_bytes(path, bytes);
    bytes = read_file_bytes(path);
  }
  const auto stored = decode_ldr(bytes);
  const auto restored = decode_image(codec, profile, stored);
  RDPoint p;
  p.jpeg_quality = quality;
  p.bpp = static_cast<double>(bytes.size()) * 8.0 / static_cast<double>(ldr.pixel_count());
  p.pu_psnr = pu_psnr(restored, item.image, options.display_peak);
  p.pu_ssim = pu_ssim(restored, item.image, options.display_peak);
  p.pu_msssim = std::min(item.image.width, item.image.height) >= kMsSsimMinExtent
                    ? pu_msssim(restored, item.image, options.display_peak)
                    : std::numeric_limits<double>::quiet_NaN();
  return p;
}

}  // namespace

RDCurve rd_sweep(Codec& codec, const CodecProfile& profile, const std::vector<NamedHdr>& images,
                 const std::vector<int>& qualities, const RDOptions& options) {
  if (qualities.empty()) throw UsageError("rate-distortion sweep needs at least one quality");
  for (std::size_t i = 0; i < qualities.size(); ++i) {
    if (qualities[i] < 1 || qualities[i] > 100) throw UsageError("qualities must lie in [1, 100]");
    if (i > 0 && qualities[i] <= qualities[i - 1]) throw UsageError("qualities must be ascending");
  }
  if (!options.work_dir.empty()) std::filesystem::create_directories(options.work_dir);

  RDCurve curve;
  for (const auto& item : images) {
    try {
      const auto ldr = encode_image(codec, profile, item.image, options.style_id);
      RDImageResult r{item.name, {}};
      for (int q : qualities) r.points.push_back(score_point(codec, profile, item, ldr, q, options));
      curve.per_image.push_back(std::move(r));
    } catch (const Error& e) {
      std::cerr << "warning: rate-distortion sweep skipped " << item.name << ": " << e.what() << "\n";
      curve.skipped.push_back(item.name);
    }
  }
  for (std::size_t k = 0; k < qualities.size(); ++k) {
    RDPoint mean;
    mean.jpeg_quality = qualities[k];
    const double n = static_cast<double>(curve.per_image.size());
    for (const auto& r : curve.per_image) {
      mean.bpp += r.points[k].bpp / n;
      mean.pu_psnr += r.points[k].pu_psnr / n;
      mean.pu_ssim += r.points[k].pu_ssim / n;
      mean.pu_msssim += r.points[k].pu_msssim / n;
    }
    if (!curve.per_image.empty()) curve.aggregate.push_back(mean);
  }
  return curve;
}

std::string RDCurve::to_table(char delimiter) const {
  std::ostringstream out;
  out << "quality" << delimiter << "bpp" << delimiter << "pu_psnr" << delimiter << "pu_ssim"
      << delimiter << "pu_msssim\n";
  for (const auto& p : aggregate)
    out << p.jpeg_quality << delimiter << format_metric(p.bpp) << delimiter << format_metric(p.pu_psnr)
        << delimiter << format_metric(p.pu_ssim) << delimiter << format_metric(p.pu_msssim) << '\n';
  return out.str();
}

std::string rd_svg(const RDCurve& curve, const std::string& title) {
  constexpr double kW = 480, kH = 320, kMargin = 48;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!curve.aggregate.empty()) {
    x0 = x1 = curve.aggregate.front().bpp;
    y0 = y1 = curve.aggregate.front().pu_psnr;
    for (const auto& p : curve.aggregate) {
      x0 = std::min(x0, p.bpp);
      x1 = std::max(x1, p.bpp);
      if (std::isfinite(p.pu_psnr)) {
        y0 = std::min(y0, p.pu_psnr);
        y1 = std::max(y1, p.pu_psnr);
      }
    }
    if (x1 - x0 < 1e-9) x1 = x0 + 1;
    if (y1 - y0 < 1e-9) y1 = y0 + 1;
  }
  auto sx = [&](double v) { return kMargin + (v - x0) / (x1 - x0) * (kW - 2 * kMargin); };
  auto sy = [&](double v) { return kH - kMargin - (v - y0) / (y1 - y0) * (kH - 2 * kMargin); };
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">" << title
      << "</text>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kH - kMargin << "\" x2=\"" << kW - kMargin
      << "\" y2=\"" << kH - kMargin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << kMargin << "\" y1=\"" << kMargin << "\" x2=\"" << kMargin << "\" y2=\""
      << kH - kMargin << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << kW / 2 << "\" y=\"" << kH - 10 << "\" text-anchor=\"middle\" font-size=\"12\">bpp ("
      << format_metric(x0) << " to " << format_metric(x1) << ")</text>\n"
      << "<text x=\"14\" y=\"" << kH / 2 << "\" font-size=\"12\" transform=\"rotate(-90 14 " << kH / 2
      << ")\" text-anchor=\"middle\">PU-PSNR dB (" << format_metric(y0) << " to " << format_metric(y1)
      << ")</text>\n<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
  for (const auto& p : curve.aggregate)
    if (std::isfinite(p.pu_psnr)) svg << sx(p.bpp) << ',' << sy(p.pu_psnr) << ' ';
  svg << "\"/>\n";
  for (const auto& p : curve.aggregate)
    if (std::isfinite(p.pu_psnr))
      svg << "<circle cx=\"" << sx(p.bpp) << "\" cy=\"" << sy(p.pu_psnr)
          << "\" r=\"3\" fill=\"steelblue\"><title>q" << p.jpeg_quality << "</title></circle>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_rd_svg(const RDCurve& curve, const std::filesystem::path& path, const std::string& title) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path.string());
  out << rd_svg(curve, title);
}

}  // namespace itm
