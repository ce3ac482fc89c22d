#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <algorithm>
#include <cstring>
#include <optional>

#include "itm/dataset.hpp"
#include "itm/errors.hpp"
#include "itm/hdr_io.hpp"
#include "itm/metrics.hpp"
#include "itm/model.hpp"
#include "itm/pipeline.hpp"
#include "itm/profile.hpp"
#include "itm/rd_eval.hpp"
#include "itm/synthetic.hpp"
#include "itm/tonemap.hpp"
#include "itm/trainer.hpp"

namespace py = pybind11;
using namespace itm;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ByteArray = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

void require_rgb(const py::buffer_info& info) {
  if (info.ndim != 3 || info.shape[2] != 3) throw ShapeError("expected an (H, W, 3) array");
}

HdrImage hdr_from(const FloatArray& a) {
  const auto info = a.request();
  require_rgb(info);
  HdrImage img(static_cast<int>(info.shape[1]), static_cast<int>(info.shape[0]));
  std::memcpy(img.pixels.data(), info.ptr, img.pixels.size() * sizeof(float));
  return img;
}

LdrImage ldr_from(const ByteArray& a) {
  const auto info = a.request();
  require_rgb(info);
  LdrImage img(static_cast<int>(info.shape[1]), static_cast<int>(info.shape[0]));
  std::memcpy(img.pixels.data(), info.ptr, img.pixels.size());
  return img;
}

FloatArray to_array(const HdrImage& img) {
  FloatArray out({img.height, img.width, 3});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size() * sizeof(float));
  return out;
}

ByteArray to_array(const LdrImage& img) {
  ByteArray out({img.height, img.width, 3});
  std::memcpy(out.mutable_data(), img.pixels.data(), img.pixels.size());
  return out;
}

py::dict row_dict(const MetricRow& r) {
  py::dict d;
  d["ldr_psnr"] = r.ldr_psnr;
  d["ldr_ssim"] = r.ldr_ssim;
  d["pu_psnr"] = r.pu_psnr;
  d["pu_ssim"] = r.pu_ssim;
  d["pu_msssim"] = r.pu_msssim;
  return d;
}

// A codec together with the profile both endpoints share.
struct PyCodec {
  Codec codec;
  CodecProfile profile;

  static PyCodec load(const std::filesystem::path& weights, const std::filesystem::path& profile_path) {
    PyCodec c{Codec::load(weights), load_profile(profile_path)};
    check_compatible(c.codec, c.profile);
    return c;
  }

  void save(const std::filesystem::path& weights, const std::filesystem::path& profile_path) const {
    codec.save(weights);
    save_profile(profile, profile_path);
  }

  ByteArray encode(const FloatArray& hdr, const std::string& style, std::optional<double> gamma) {
    LdrImage ldr;
    {
      py::gil_scoped_release release;
      ldr = encode_image(codec, profile, hdr_from(hdr), style, gamma);
    }
    return to_array(ldr);
  }

  FloatArray decode(const ByteArray& ldr) {
    HdrImage hdr;
    {
      py::gil_scoped_release release;
      hdr = decode_image(codec, profile, ldr_from(ldr));
    }
    return to_array(hdr);
  }
};

PyCodec train_codec(const std::vector<FloatArray>& images, const std::vector<std::string>& styles, int epochs,
                    int batch_size, int patch_size, int patches_per_image, int base_channels, int res_blocks,
                    double lr_start, double lr_end, const std::string& degradation, std::uint64_t seed) {
  auto profile = CodecProfile::defaults();
  std::vector<NamedHdr> named;
  for (std::size_t i = 0; i < images.size(); ++i) named.push_back({"image_" + std::to_string(i), hdr_from(images[i])});

  CorpusConfig cc;
  cc.frame_size = patch_size;
  cc.patch_size = patch_size;
  cc.patches_per_image = patches_per_image;
  cc.seed = seed;
  for (const auto& s : styles) cc.styles.push_back(StyleTarget::builtin(s));

  ArchConfig arch;
  arch.base_channels = base_channels;
  arch.num_res_blocks = res_blocks;

  TrainConfig tc;
  tc.styles = styles;
  tc.epochs = epochs;
  tc.batch_size = batch_size;
  tc.lr_start = lr_start;
  tc.lr_end = lr_end;
  tc.degradation = Degradation::parse(degradation);
  tc.seed = seed;

  py::gil_scoped_release release;
  const auto corpus = prepare_corpus(named, cc, profile);
  auto codec = make_codec(arch, styles, seed);
  auto extractor = make_extractor("random:" + std::to_string(seed));
  train(codec, tc, corpus, extractor.get());
  profile.arch = codec.arch();
  profile.style_registry = codec.styles();
  profile.loss_weights = tc.weights;
  profile.jpeg_trained = tc.degradation.kind == Degradation::Kind::Jpeg;
  if (profile.jpeg_trained) profile.jpeg_quality = tc.degradation.quality;
  return {std::move(codec), std::move(profile)};
}

}  // namespace

PYBIND11_MODULE(_itm, m) {
  m.doc() = "Invertible tone mapping codec";

  static py::exception<Error> error(m, "ItmError");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, ("[" + std::string(to_string(e.kind())) + "] " + e.what()).c_str());
    }
  });

  m.def("read_hdr", [](const std::filesystem::path& p) { return to_array(read_hdr(p)); }, py::arg("path"));
  m.def("write_hdr", [](const FloatArray& a, const std::filesystem::path& p) { write_hdr(hdr_from(a), p); },
        py::arg("image"), py::arg("path"));
  m.def("read_ldr", [](const std::filesystem::path& p) { return to_array(read_ldr(p)); }, py::arg("path"));
  m.def(
      "write_ldr",
      [](const ByteArray& a, const std::filesystem::path& p, std::optional<int> quality) {
        write_ldr(ldr_from(a), p, quality ? LdrEncoding::jpeg(*quality) : LdrEncoding::lossless());
      },
      py::arg("image"), py::arg("path"), py::arg("jpeg_quality") = py::none(),
      "PNG by default, baseline JPEG when a quality is given.");
  m.def("synthetic_scene", [](std::uint64_t seed, int w, int h) { return to_array(synthetic_scene(seed, w, h)); },
        py::arg("seed"), py::arg("width") = 128, py::arg("height") = 128);

  m.def("reinhard", [](const FloatArray& a, double key) { return to_array(reinhard_global(hdr_from(a), key)); },
        py::arg("image"), py::arg("key") = 0.18);
  m.def("durand", [](const FloatArray& a, double contrast) { return to_array(durand_bilateral(hdr_from(a), contrast)); },
        py::arg("image"), py::arg("contrast") = 50.0);

  m.def(
      "ssim",
      [](const FloatArray& a, const FloatArray& b, double range) {
        if (a.ndim() != b.ndim() || !std::equal(a.shape(), a.shape() + a.ndim(), b.shape()))
          throw ShapeError("ssim inputs differ in shape");
        auto ta = torch::from_blob(const_cast<float*>(a.data()), {a.size()}, torch::kFloat32);
        auto tb = torch::from_blob(const_cast<float*>(b.data()), {b.size()}, torch::kFloat32);
        std::vector<int64_t> shape(a.shape(), a.shape() + a.ndim());
        if (a.ndim() == 3) {
          // (H, W, C) arrays to channel-first planes.
          ta = ta.view(shape).permute({2, 0, 1});
          tb = tb.view(shape).permute({2, 0, 1});
        } else {
          ta = ta.view(shape);
          tb = tb.view(shape);
        }
        return ssim(ta.to(torch::kFloat64), tb.to(torch::kFloat64), range);
      },
      py::arg("a"), py::arg("b"), py::arg("range") = 1.0);
  m.def("pu_psnr", [](const FloatArray& r, const FloatArray& o, double peak) { return pu_psnr(hdr_from(r), hdr_from(o), peak); },
        py::arg("restored"), py::arg("original"), py::arg("peak") = 4000.0);
  m.def(
      "evaluate",
      [](const FloatArray& restored, const FloatArray& original, std::optional<ByteArray> ldr,
         std::optional<ByteArray> target) {
        std::optional<LdrImage> l, t;
        if (ldr) l = ldr_from(*ldr);
        if (target) t = ldr_from(*target);
        return row_dict(evaluate_pair(hdr_from(restored), hdr_from(original), l ? &*l : nullptr,
                                      t ? &*t : nullptr, 4000.0));
      },
      py::arg("restored"), py::arg("original"), py::arg("ldr") = py::none(), py::arg("target") = py::none());

  py::class_<PyCodec>(m, "Codec")
      .def_static("load", &PyCodec::load, py::arg("weights"), py::arg("profile"))
      .def("save", &PyCodec::save, py::arg("weights"), py::arg("profile"))
      .def_property_readonly("styles", [](const PyCodec& c) { return c.codec.styles(); })
      .def("encode", &PyCodec::encode, py::arg("hdr"), py::arg("style"), py::arg("gamma") = py::none())
      .def("decode", &PyCodec::decode, py::arg("ldr"))
      .def(
          "rd_curve",
          [](PyCodec& c, const std::vector<FloatArray>& images, const std::vector<int>& qualities,
             const std::string& style) {
            std::vector<NamedHdr> named;
            for (std::size_t i = 0; i < images.size(); ++i)
              named.push_back({"image_" + std::to_string(i), hdr_from(images[i])});
            RDOptions options;
            options.style_id = style;
            py::list out;
            for (const auto& p : rd_sweep(c.codec, c.profile, named, qualities, options).aggregate)
              out.append(py::make_tuple(p.jpeg_quality, p.bpp, p.pu_psnr));
            return out;
          },
          py::arg("images"), py::arg("qualities"), py::arg("style") = "reinhard",
          "Returns (quality, bpp, pu_psnr) tuples averaged over the images.");

  m.def("train", &train_codec, py::arg("images"), py::arg("styles") = std::vector<std::string>{"reinhard"},
        py::arg("epochs") = 10, py::arg("batch_size") = 4, py::arg("patch_size") = 64,
        py::arg("patches_per_image") = 2, py::arg("base_channels") = 16, py::arg("res_blocks") = 1,
        py::arg("lr_start") = 1e-3, py::arg("lr_end") = 1e-5, py::arg("degradation") = "quantize",
        py::arg("seed") = 0);
}
