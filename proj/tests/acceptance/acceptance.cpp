// Acceptance run. Each criterion prints one PASS or FAIL line on stdout;
// progress goes to stderr. Exit status is nonzero if any criterion fails.

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "itm/colorspace.hpp"
#include "itm/dataset.hpp"
#include "itm/hdr_io.hpp"
#include "itm/losses.hpp"
#include "itm/metrics.hpp"
#include "itm/model.hpp"
#include "itm/pipeline.hpp"
#include "itm/rd_eval.hpp"
#include "itm/synthetic.hpp"
#include "itm/trainer.hpp"
#include "oracles.hpp"

using namespace itm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Options {
  int steps = 2000;
  std::set<int> only;
  fs::path work_dir = fs::temp_directory_path() / "itm_acceptance";
};

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int digits = 3) {
  std::ostringstream s;
  s.setf(std::ios::fixed);
  s.precision(digits);
  s << v;
  return s.str();
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  std::ostringstream s;
  s.setf(std::ios::scientific);
  s.precision(2);
  s << v;
  return s.str();
}

void note(const std::string& text) { std::cerr << "[acceptance] " << text << std::endl; }

// --- 1 ---------------------------------------------------------------------

Verdict color_round_trip() {
  const auto profile = CodecProfile::defaults();
  const double y_min = std::exp(profile.log_lum_min), y_max = std::exp(profile.log_lum_max);
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> chroma(0.0, 1.0);
  std::uniform_real_distribution<double> decade(-3.5, 4.5);
  const auto start = Clock::now();
  double worst = 0.0;
  int tested = 0, excluded = 0;
  for (int i = 0; i < 100000; ++i) {
    Vec3 rgb{chroma(rng), chroma(rng), chroma(rng)};
    const double scale = std::pow(10.0, decade(rng)) / std::max({rgb[0], rgb[1], rgb[2], 1e-12});
    for (auto& c : rgb) c *= scale;
    const auto xyz = rgb_to_xyz(rgb);
    // Luminance outside the domain is clamped; a vanishing chroma
    // denominator is degenerate.
    if (xyz[1] <= y_min || xyz[1] >= y_max || chroma_forward(xyz)[1] <= kDegenerateV) {
      ++excluded;
      continue;
    }
    const auto back = xyz_to_rgb(luv_norm_to_xyz(xyz_to_luv_norm(xyz, profile), profile));
    const double peak = std::max({rgb[0], rgb[1], rgb[2]});
    for (int c = 0; c < 3; ++c) worst = std::max(worst, std::abs(back[c] - rgb[c]) / peak);
    ++tested;
  }
  const double elapsed = seconds_since(start);
  return {worst < 1e-4 && elapsed < 10.0,
          "max relative error " + sci(worst) + " over " + std::to_string(tested) + " pixels (" +
              std::to_string(excluded) + " excluded), " + fmt(elapsed, 2) + " s"};
}

// --- 2 ---------------------------------------------------------------------

Verdict ssim_oracle() {
  double worst = 0.0, self = 0.0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    std::mt19937 rng(seed * 7919u);
    const auto a = oracle::random_plane(32, 32, rng);
    const auto b = oracle::noisy_copy(a, 0.1, rng);
    const auto ta = oracle::to_tensor(a), tb = oracle::to_tensor(b);
    worst = std::max(worst, std::abs(ssim(ta, tb) - oracle::ssim(a, b).ssim));
    self = std::max(self, std::abs(ssim(ta, ta) - 1.0));
  }
  return {worst <= 1e-6 && self <= 1e-9,
          "max |ssim - oracle| " + sci(worst) + ", max |ssim(x,x) - 1| " + sci(self)};
}

// --- 3 ---------------------------------------------------------------------

ArchConfig small_arch() {
  ArchConfig a;
  a.base_channels = 8;
  a.num_res_blocks = 1;
  a.global_pool_size = 8;
  a.global_vec_dim = 16;
  a.rdb_layers = 2;
  a.rdb_growth = 8;
  a.cbam_reduction = 4;
  return a;
}

Verdict gradient_integrity() {
  torch::manual_seed(3);
  const auto target = torch::rand({1, 3, 8, 8}, torch::kFloat64);
  const auto start = torch::rand({1, 3, 8, 8}, torch::kFloat64);
  RandomConvExtractor extractor(7, 2);
  LossWeights w;
  w.beta_perc = 0.5;
  const auto sty = oracle::check_gradient(
      [&](const torch::Tensor& x) { return style_loss(x, target, &extractor, w); }, start, 11);
  const auto inv = oracle::check_gradient(
      [&](const torch::Tensor& x) { return invertibility_loss(x, target, w); }, start, 12);

  const auto x = (torch::rand({2, 3, 16, 16}, torch::kFloat64) * 1.4 - 0.2).requires_grad_(true);
  const auto upstream = torch::randn({2, 3, 16, 16}, torch::kFloat64);
  quantize_layer(x).backward(upstream);
  const bool identity = torch::equal(x.grad(), upstream);

  Codec codec(small_arch());
  codec.add_style("reinhard");
  const auto luv = torch::rand({1, 3, 32, 32});
  const auto ldr = codec.encode(luv, "reinhard");
  style_loss(ldr, torch::rand({1, 3, 32, 32}), &extractor, LossWeights{}).backward();
  double decoder_grad = 0.0;
  for (auto& p : codec.decoder_parameters())
    if (p.grad().defined()) decoder_grad = std::max(decoder_grad, p.grad().abs().max().item<double>());

  const bool pass = sty.worst <= 1e-3 && inv.worst <= 1e-3 && identity && decoder_grad == 0.0;
  return {pass, "style rel " + sci(sty.worst) + ", inv rel " + sci(inv.worst) +
                    ", quantize backward identity " + (identity ? "yes" : "no") + ", max |dL_sty/dW_D| " +
                    sci(decoder_grad)};
}

// --- training runs ---------------------------------------------------------

ArchConfig desk_arch() {
  ArchConfig a;
  a.base_channels = 32;
  a.num_res_blocks = 2;
  a.global_pool_size = 32;
  a.global_vec_dim = 64;
  a.rdb_layers = 3;
  a.rdb_growth = 16;
  a.cbam_reduction = 8;
  return a;
}

std::vector<NamedHdr> scenes(std::uint64_t first, int count) {
  std::vector<NamedHdr> out;
  for (int i = 0; i < count; ++i)
    out.push_back({"scene_" + std::to_string(first + i), synthetic_scene(first + i, 128, 128)});
  return out;
}

Corpus desk_corpus(const std::vector<NamedHdr>& images, const CodecProfile& profile) {
  CorpusConfig c;
  c.frame_size = 128;
  c.patch_size = 128;
  c.patches_per_image = 1;
  c.seed = 1;
  c.styles = {StyleTarget::builtin("reinhard"), StyleTarget::builtin("durand")};
  return prepare_corpus(images, c, profile);
}

std::vector<NamedHdr> corpus_images(const Corpus& corpus) {
  std::vector<NamedHdr> out;
  for (const auto& s : corpus.samples) out.push_back({s.record.id, s.hdr});
  return out;
}

struct Run {
  Codec codec{desk_arch()};
  CodecProfile profile;
  TrainResult result;
  double seconds = 0.0;
};

class Desk {
 public:
  explicit Desk(const Options& options)
      : options_(options),
        base_profile_(CodecProfile::defaults()),
        train_(desk_corpus(scenes(0, 4), base_profile_)),
        held_out_(desk_corpus(scenes(100, 4), base_profile_)) {}

  const Corpus& train_corpus() const { return train_; }
  const Corpus& held_out() const { return held_out_; }

  // R1 Reinhard/quantize, R2 Reinhard/jpeg:80, R3 joint Reinhard+Durand,
  // R4 Durand added incrementally to R1, R5 no global branch, R6 pixel-only
  // style loss. Each run is trained once and shared between criteria.
  Run& get(const std::string& name) {
    auto it = runs_.find(name);
    if (it != runs_.end()) return it->second;
    Run run;
    TrainConfig tc = base_config();
    ArchConfig arch = desk_arch();
    if (name == "R2") tc.degradation = Degradation::jpeg(80);
    if (name == "R3") tc.styles = {"reinhard", "durand"};
    if (name == "R5") arch.use_global_branch = false;
    if (name == "R6") tc.style_mode = StyleLossMode::PixelOnly;
    if (name == "R4") {
      run.codec = get("R1").codec.clone();
      tc.scheme = Scheme::Incremental;
      tc.styles = {"durand"};
    } else {
      run.codec = make_codec(arch, tc.styles, 1);
    }
    tc.diagnostic_path = options_.work_dir / (name + ".diverged.pt");
    tc.log_path = options_.work_dir / (name + ".jsonl");
    tc.on_step = [&name, this](const StepReport& r) {
      if ((r.step + 1) % 100 == 0 || r.step == 0)
        note(name + " step " + std::to_string(r.step + 1) + "/" + std::to_string(options_.steps) + " l_inv " +
             fmt(r.l_inv, 5) + " l_sty " + fmt(r.l_sty, 5));
    };
    note("training " + name);
    const auto start = Clock::now();
    run.result = train(run.codec, tc, train_, &extractor_);
    run.seconds = seconds_since(start);
    note(name + " trained in " + fmt(run.seconds, 0) + " s");
    run.profile = base_profile_;
    run.profile.arch = run.codec.arch();
    run.profile.style_registry = run.codec.styles();
    run.profile.loss_weights = tc.weights;
    run.profile.jpeg_trained = tc.degradation.kind == Degradation::Kind::Jpeg;
    run.codec.save(options_.work_dir / (name + ".pt"));
    return runs_.emplace(name, std::move(run)).first->second;
  }

  RandomConvExtractor& extractor() { return extractor_; }

 private:
  TrainConfig base_config() const {
    TrainConfig tc;
    tc.batch_size = 4;
    // Four samples at batch 4 give one step per epoch.
    tc.epochs = options_.steps;
    tc.lr_start = 1e-3;
    tc.lr_end = 1e-5;
    tc.grad_clip = 5.0;
    tc.seed = 1;
    return tc;
  }

  Options options_;
  CodecProfile base_profile_;
  Corpus train_;
  Corpus held_out_;
  RandomConvExtractor extractor_{0};
  std::map<std::string, Run> runs_;
};

MetricRow scores(Run& run, const Corpus& corpus, const std::string& style) {
  return evaluate_corpus(run.codec, run.profile, corpus, style).aggregate();
}

// --- 4 to 9 ----------------------------------------------------------------

Verdict overfit(Desk& desk) {
  auto& r1 = desk.get("R1");
  const auto m = scores(r1, desk.train_corpus(), "reinhard");
  const bool pass = m.ldr_psnr >= 30.0 && m.pu_psnr >= 40.0 && r1.seconds <= 6 * 3600.0;
  return {pass, "LDR PSNR " + fmt(m.ldr_psnr, 2) + " dB, PU-PSNR " + fmt(m.pu_psnr, 2) + " dB, " +
                    std::to_string(r1.result.steps) + " steps in " + fmt(r1.seconds / 60, 1) + " min"};
}

Verdict multi_style(Desk& desk) {
  auto& r3 = desk.get("R3");
  const auto rh = scores(r3, desk.train_corpus(), "reinhard");
  const auto du = scores(r3, desk.train_corpus(), "durand");
  const bool pass = std::abs(rh.pu_psnr - du.pu_psnr) <= 2.0 && rh.pu_psnr >= 38.0 && du.pu_psnr >= 38.0;
  return {pass, "PU-PSNR reinhard " + fmt(rh.pu_psnr, 2) + " dB, durand " + fmt(du.pu_psnr, 2) + " dB"};
}

bool bitwise_equal(const std::vector<torch::Tensor>& a, const std::vector<torch::Tensor>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!torch::equal(a[i], b[i])) return false;
  return true;
}

std::vector<torch::Tensor> snapshot(const std::vector<torch::Tensor>& params) {
  std::vector<torch::Tensor> out;
  for (const auto& p : params) out.push_back(p.detach().clone());
  return out;
}

Verdict incremental(Desk& desk) {
  auto& r1 = desk.get("R1");
  const auto enc = snapshot(r1.codec.encoder_parameters());
  const auto dec = snapshot(r1.codec.decoder_parameters());
  const auto mod = snapshot(r1.codec.modulator_parameters("reinhard"));
  auto& r4 = desk.get("R4");
  const bool frozen = bitwise_equal(enc, r4.codec.encoder_parameters()) &&
                      bitwise_equal(dec, r4.codec.decoder_parameters()) &&
                      bitwise_equal(mod, r4.codec.modulator_parameters("reinhard"));
  const auto& losses = r4.result.step_losses;
  const std::size_t window = std::max<std::size_t>(1, losses.size() / 10);
  double head = 0.0, tail = 0.0;
  for (std::size_t i = 0; i < window; ++i) {
    head += losses[i];
    tail += losses[losses.size() - 1 - i];
  }
  head /= window;
  tail /= window;
  const bool converged = std::isfinite(tail) && tail < 0.5 * head;
  const double inc = scores(r4, desk.train_corpus(), "durand").ldr_psnr;
  const double joint = scores(desk.get("R3"), desk.train_corpus(), "durand").ldr_psnr;
  const bool pass = frozen && converged && std::abs(inc - joint) <= 3.0;
  return {pass, "Durand LDR PSNR incremental " + fmt(inc, 2) + " dB vs joint " + fmt(joint, 2) +
                    " dB, loss " + fmt(head, 5) + " -> " + fmt(tail, 5) + ", backbone bitwise frozen " +
                    (frozen ? "yes" : "no")};
}

Verdict jpeg_robustness(Desk& desk, const Options& options) {
  const auto images = corpus_images(desk.train_corpus());
  auto& r1 = desk.get("R1");
  auto& r2 = desk.get("R2");
  const double quantized = rd_sweep(r1.codec, r1.profile, images, {80}).aggregate.front().pu_psnr;
  const double jpeg_trained = rd_sweep(r2.codec, r2.profile, images, {80}).aggregate.front().pu_psnr;
  RDOptions rd;
  rd.work_dir = options.work_dir / "rd";
  const auto curve = rd_sweep(r2.codec, r2.profile, images, {50, 60, 70, 80, 90, 95}, rd);
  write_rd_svg(curve, options.work_dir / "rd.svg", "jpeg-trained codec");
  const auto& points = curve.aggregate;
  const double top_gain = points[5].pu_psnr - points[4].pu_psnr;
  const bool pass = jpeg_trained - quantized >= 3.0 && top_gain < 0.5;
  std::string curve_text;
  for (const auto& p : points) curve_text += " q" + std::to_string(p.jpeg_quality) + "=" + fmt(p.pu_psnr, 2);
  return {pass, "PU-PSNR at q80 jpeg-trained " + fmt(jpeg_trained, 2) + " dB vs quantize-trained " +
                    fmt(quantized, 2) + " dB, gain q90->q95 " + fmt(top_gain, 2) + " dB; curve" + curve_text};
}

Verdict ablation(Desk& desk) {
  auto& full = desk.get("R1");
  auto& no_global = desk.get("R5");
  auto& pixel_only = desk.get("R6");
  const double ssim_full = scores(full, desk.held_out(), "reinhard").ldr_ssim;
  const double ssim_no_global = scores(no_global, desk.held_out(), "reinhard").ldr_ssim;
  const double grad_full = mean_gradient_term(full.codec, full.profile, desk.held_out(), "reinhard");
  const double grad_pixel = mean_gradient_term(pixel_only.codec, pixel_only.profile, desk.held_out(), "reinhard");
  const bool pass = ssim_full >= ssim_no_global && grad_pixel > grad_full;
  return {pass, "held-out LDR SSIM full " + fmt(ssim_full, 4) + " vs no-global " + fmt(ssim_no_global, 4) +
                    ", gradient term pixel-only " + sci(grad_pixel) + " vs full " + sci(grad_full)};
}

Verdict bit_exact(Desk& desk, const Options& options) {
  auto& r1 = desk.get("R1");
  auto images = corpus_images(desk.train_corpus());
  for (auto& img : corpus_images(desk.held_out())) images.push_back(std::move(img));
  images.push_back({"odd", synthetic_scene(77, 75, 53)});
  int ldr_equal = 0, hdr_equal = 0;
  for (const auto& [name, hdr] : images) {
    const auto ldr = encode_image(r1.codec, r1.profile, hdr, "reinhard");
    const auto path = options.work_dir / ("bitexact_" + name + ".png");
    write_ldr(ldr, path);
    const auto read = read_ldr(path);
    ldr_equal += read.width == ldr.width && read.height == ldr.height && read.pixels == ldr.pixels;
    const auto from_file = decode_image(r1.codec, r1.profile, read);
    const auto in_memory = decode_tensor(
        r1.codec, r1.profile, quantize_layer(encode_continuous(r1.codec, r1.profile, hdr, "reinhard")));
    hdr_equal += from_file.pixels == in_memory.pixels;
  }
  const int n = static_cast<int>(images.size());
  return {ldr_equal == n && hdr_equal == n, "LDR bitwise equal " + std::to_string(ldr_equal) + "/" +
                                                std::to_string(n) + ", restored radiance bitwise equal " +
                                                std::to_string(hdr_equal) + "/" + std::to_string(n)};
}

}  // namespace

int main(int argc, char** argv) {
  Options options;
  std::vector<int> only;
  CLI::App app{"Runs the acceptance criteria"};
  app.add_option("--steps", options.steps, "Training steps per desk run")->check(CLI::PositiveNumber);
  app.add_option("--filter", only, "Criteria to run, comma separated")->delimiter(',');
  app.add_option("--work-dir", options.work_dir, "Scratch directory for checkpoints and files");
  CLI11_PARSE(app, argc, argv);
  options.only.insert(only.begin(), only.end());
  fs::create_directories(options.work_dir);
  torch::set_num_threads(std::max(1u, std::thread::hardware_concurrency()));

  std::unique_ptr<Desk> desk;
  auto lazy_desk = [&]() -> Desk& {
    if (!desk) desk = std::make_unique<Desk>(options);
    return *desk;
  };

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"color round trip", color_round_trip},
      {"ssim oracle", ssim_oracle},
      {"gradient integrity", gradient_integrity},
      {"desk overfit", [&] { return overfit(lazy_desk()); }},
      {"multi-style single decoder", [&] { return multi_style(lazy_desk()); }},
      {"incremental training", [&] { return incremental(lazy_desk()); }},
      {"jpeg robustness", [&] { return jpeg_robustness(lazy_desk(), options); }},
      {"ablation direction", [&] { return ablation(lazy_desk()); }},
      {"bit-exact pipeline", [&] { return bit_exact(lazy_desk(), options); }},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!options.only.empty() && !options.only.count(number)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("error: ") + e.what()};
    }
    failures += !v.pass;
    std::cout << "criterion " << number << " " << (v.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << v.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
