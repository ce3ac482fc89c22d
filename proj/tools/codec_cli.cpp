// itm_codec: command-line front end for training, coding and evaluation.

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "itm/dataset.hpp"
#include "itm/errors.hpp"
#include "itm/hdr_io.hpp"
#include "itm/losses.hpp"
#include "itm/metrics.hpp"
#include "itm/model.hpp"
#include "itm/pipeline.hpp"
#include "itm/profile.hpp"
#include "itm/rd_eval.hpp"
#include "itm/synthetic.hpp"
#include "itm/tensor_image.hpp"
#include "itm/tonemap.hpp"
#include "itm/trainer.hpp"

namespace fs = std::filesystem;
using namespace itm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitInternal = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::Style:
      return kExitUsage;
    case ErrorKind::Training:
      return kExitInternal;
    default:
      return kExitData;
  }
}

struct Common {
  std::uint64_t seed = 0;
  std::string weights;
  std::string profile;
};

struct ArchFlags {
  ArchConfig arch;
  bool no_global_branch = false;

  void add(CLI::App* app) {
    app->add_option("--base-channels", arch.base_channels, "Backbone width");
    app->add_option("--res-blocks", arch.num_res_blocks, "Residual blocks at the bottleneck");
    app->add_option("--global-pool", arch.global_pool_size, "Global branch pooling grid");
    app->add_option("--global-dim", arch.global_vec_dim, "Global vector length");
    app->add_option("--rdb-layers", arch.rdb_layers, "Residual dense block layers");
    app->add_option("--rdb-growth", arch.rdb_growth, "Residual dense block growth");
    app->add_option("--cbam-reduction", arch.cbam_reduction, "Channel attention reduction");
    app->add_flag("--no-global-branch", no_global_branch, "Drop the global branch");
  }
  ArchConfig resolve() const {
    ArchConfig a = arch;
    if (no_global_branch) a.use_global_branch = false;
    a.validate();
    return a;
  }
};

struct CorpusFlags {
  std::string data;
  int frame_size = 640;
  int patch_size = 512;
  int patches = 10;
  double exposure_range = 1.0;
  std::vector<std::string> targets;  // style=dir for external styles

  void add(CLI::App* app, bool required = true) {
    auto* d = app->add_option("--data", data, "Directory of .hdr training images")->check(CLI::ExistingDirectory);
    if (required) d->required();
    app->add_option("--frame-size", frame_size, "Images are resized to this square frame");
    app->add_option("--patch-size", patch_size, "Side of the random crops");
    app->add_option("--patches", patches, "Crops per image");
    app->add_option("--exposure-range", exposure_range, "Exposure shift range in stops");
    app->add_option("--target", targets, "External style targets as style=dir, one <stem>.png per image");
  }
};

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<fs::path> hdr_files(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".hdr") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<NamedHdr> read_images(const fs::path& dir) {
  std::vector<NamedHdr> images;
  for (const auto& p : hdr_files(dir)) {
    try {
      images.push_back({p.filename().string(), read_hdr(p)});
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << p.filename().string() << ": " << e.what() << "\n";
    }
  }
  if (images.empty()) throw CorpusError("no readable .hdr files in " + dir.string());
  return images;
}

std::map<std::string, fs::path> parse_target_dirs(const std::vector<std::string>& specs) {
  std::map<std::string, fs::path> out;
  for (const auto& s : specs) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
      throw UsageError("--target expects style=dir, got '" + s + "'");
    out[s.substr(0, eq)] = s.substr(eq + 1);
  }
  return out;
}

StyleTarget style_target(const std::string& id, const std::map<std::string, fs::path>& external) {
  if (external.count(id)) return StyleTarget::external(id);
  return StyleTarget::builtin(id);
}

// Loads <stem>.png for every image from each external target directory.
std::map<std::string, std::map<std::string, LdrImage>> load_targets(
    const std::vector<NamedHdr>& images, const std::map<std::string, fs::path>& external) {
  std::map<std::string, std::map<std::string, LdrImage>> out;
  for (const auto& [style, dir] : external) {
    for (const auto& img : images) {
      const auto path = dir / (fs::path(img.name).stem().string() + ".png");
      if (!fs::exists(path)) throw PairingError("style '" + style + "' has no target " + path.string());
      auto ldr = read_ldr(path);
      if (ldr.width != img.image.width || ldr.height != img.image.height)
        throw PairingError("target " + path.string() + " differs in size from " + img.name);
      out[style][img.name] = std::move(ldr);
    }
  }
  return out;
}

Corpus build_corpus(const CorpusFlags& flags, const std::vector<std::string>& styles, std::uint64_t seed,
                    const CodecProfile& profile) {
  const auto external = parse_target_dirs(flags.targets);
  CorpusConfig config;
  config.frame_size = flags.frame_size;
  config.patch_size = flags.patch_size;
  config.patches_per_image = flags.patches;
  config.exposure_range = flags.exposure_range;
  config.seed = seed;
  for (const auto& id : styles) config.styles.push_back(style_target(id, external));
  config.validate();
  const auto images = read_images(flags.data);
  config.external_targets = load_targets(images, external);
  return prepare_corpus(images, config, profile);
}

CodecProfile load_or_default(const std::string& path) {
  return path.empty() ? CodecProfile::defaults() : load_profile(path);
}

std::optional<double> optional_param(const CLI::Option* opt, double value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

void write_text(const std::string& text, const std::string& path) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path);
  out << text;
}

struct Loaded {
  CodecProfile profile;
  Codec codec;
};

Loaded load_codec(const Common& c) {
  auto profile = load_profile(c.profile);
  auto codec = Codec::load(c.weights);
  check_compatible(codec, profile);
  return {std::move(profile), std::move(codec)};
}

void add_model_flags(CLI::App* app, Common& c) {
  app->add_option("--weights", c.weights, "Codec checkpoint")->required()->check(CLI::ExistingFile);
  app->add_option("--profile", c.profile, "Codec profile")->required()->check(CLI::ExistingFile);
}

// Every long option can also come from ITM_<NAME> in the environment.
void bind_environment(CLI::App* app) {
  for (auto* opt : app->get_options()) {
    const auto& names = opt->get_lnames();
    if (names.empty() || names.front() == "help" || names.front() == "config") continue;
    std::string env = "ITM_" + names.front();
    for (auto& ch : env) ch = ch == '-' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    opt->envname(env);
  }
  for (auto* sub : app->get_subcommands({})) bind_environment(sub);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Invertible HDR to LDR codec"};
  app.require_subcommand(1);
  app.set_config("--config", "", "INI or TOML file; command line flags take precedence");

  Common common;

  // train
  auto* train_cmd = app.add_subcommand("train", "Train or extend a codec");
  CorpusFlags train_corpus;
  ArchFlags train_arch;
  std::string styles_text = "reinhard", scheme_text = "joint", degradation_text = "quantize";
  std::string init_checkpoint, out_weights, out_profile, log_path, extractor_spec = "random";
  TrainConfig tc;
  bool parametric = false;
  double gamma_low = 0.5, gamma_high = 1.5;
  train_corpus.add(train_cmd);
  train_arch.add(train_cmd);
  train_cmd->add_option("--styles", styles_text, "Comma separated style ids");
  train_cmd->add_option("--scheme", scheme_text, "joint, incremental or separate")
      ->check(CLI::IsMember({"joint", "incremental", "separate"}));
  train_cmd->add_option("--init-checkpoint", init_checkpoint, "Start from this codec")->check(CLI::ExistingFile);
  train_cmd->add_option("--profile", common.profile, "Profile with the domain constants to use");
  train_cmd->add_option("--epochs", tc.epochs);
  train_cmd->add_option("--batch-size", tc.batch_size);
  train_cmd->add_option("--lr-start", tc.lr_start);
  train_cmd->add_option("--lr-end", tc.lr_end);
  train_cmd->add_option("--grad-clip", tc.grad_clip);
  train_cmd->add_option("--lambda", tc.weights.lambda);
  train_cmd->add_option("--alpha", tc.weights.alpha);
  train_cmd->add_option("--beta-perc", tc.weights.beta_perc);
  train_cmd->add_option("--sigma-ssim", tc.weights.sigma_ssim);
  train_cmd->add_option("--degradation", degradation_text, "quantize or jpeg:<quality>");
  train_cmd->add_flag("--pixel-only", "Style loss without gradient and perceptual terms");
  train_cmd->add_flag("--parametric", parametric, "Train gamma-conditioned modulators");
  train_cmd->add_option("--gamma-low", gamma_low);
  train_cmd->add_option("--gamma-high", gamma_high);
  train_cmd->add_option("--extractor", extractor_spec, "random, random:<seed> or a TorchScript file");
  train_cmd->add_option("--seed", common.seed);
  train_cmd->add_option("--log", log_path, "JSONL log, one line per epoch");
  train_cmd->add_option("--output", out_weights, "Checkpoint to write")->required();
  train_cmd->add_option("--profile-out", out_profile, "Profile to write (default: <output>.profile)");

  // encode
  auto* encode_cmd = app.add_subcommand("encode", "HDR to invertible LDR");
  std::string enc_input, enc_style, enc_output, enc_target;
  double enc_param = 1.0;
  int enc_quality = kLosslessQuality;
  encode_cmd->add_option("--input", enc_input, "Radiance .hdr file")->required()->check(CLI::ExistingFile);
  encode_cmd->add_option("--style", enc_style)->required();
  auto* enc_param_opt = encode_cmd->add_option("--param", enc_param, "Display gamma for parametric styles");
  add_model_flags(encode_cmd, common);
  encode_cmd->add_option("--output", enc_output, "LDR bitmap to write")->required();
  encode_cmd->add_option("--jpeg-quality", enc_quality, "Store as JPEG at this quality; 100 is lossless")
      ->check(CLI::Range(1, 100));
  encode_cmd->add_option("--target", enc_target, "Reference LDR for style similarity")->check(CLI::ExistingFile);

  // decode
  auto* decode_cmd = app.add_subcommand("decode", "Invertible LDR back to HDR");
  std::string dec_input, dec_output, dec_truth;
  bool dec_report = false;
  decode_cmd->add_option("--input", dec_input)->required()->check(CLI::ExistingFile);
  add_model_flags(decode_cmd, common);
  decode_cmd->add_option("--output", dec_output, "Radiance .hdr file to write")->required();
  decode_cmd->add_flag("--report", dec_report, "Print restoration metrics");
  decode_cmd->add_option("--ground-truth", dec_truth, "Original HDR for --report")->check(CLI::ExistingFile);

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Score a codec on a directory of HDR images");
  std::string eval_data, eval_style, eval_output;
  std::vector<std::string> eval_targets;
  double eval_param = 1.0;
  eval_cmd->add_option("--data", eval_data)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--style", eval_style)->required();
  auto* eval_param_opt = eval_cmd->add_option("--param", eval_param);
  eval_cmd->add_option("--target", eval_targets, "External style targets as style=dir");
  add_model_flags(eval_cmd, common);
  eval_cmd->add_option("--output", eval_output, "Delimited table (default stdout)");

  // rd-curve
  auto* rd_cmd = app.add_subcommand("rd-curve", "Rate-distortion sweep under JPEG re-encoding");
  std::string rd_data, rd_style = "reinhard", rd_qualities = "50,60,70,80,90,95", rd_output, rd_svg_path,
                       rd_work;
  rd_cmd->add_option("--data", rd_data)->required()->check(CLI::ExistingDirectory);
  rd_cmd->add_option("--style", rd_style);
  rd_cmd->add_option("--qualities", rd_qualities, "Ascending comma separated JPEG qualities");
  add_model_flags(rd_cmd, common);
  rd_cmd->add_option("--output", rd_output, "Delimited table (default stdout)");
  rd_cmd->add_option("--svg", rd_svg_path, "Plot of PU-PSNR against bpp");
  rd_cmd->add_option("--work-dir", rd_work, "Keep the stored bitmaps here");

  // prepare-data
  auto* prep_cmd = app.add_subcommand("prepare-data", "Write the augmented training corpus to disk");
  CorpusFlags prep_corpus;
  std::string prep_styles = "reinhard", prep_output;
  prep_corpus.add(prep_cmd);
  prep_cmd->add_option("--styles", prep_styles);
  prep_cmd->add_option("--seed", common.seed);
  prep_cmd->add_option("--profile", common.profile);
  prep_cmd->add_option("--output", prep_output, "Output directory")->required();

  // ablate
  auto* ablate_cmd = app.add_subcommand("ablate", "Train and score the ablation variants");
  CorpusFlags ablate_corpus;
  ArchFlags ablate_arch;
  std::string held_out, ablate_base = "reinhard", ablate_eval = "durand", ablate_output;
  TrainConfig ablate_tc;
  ablate_corpus.add(ablate_cmd);
  ablate_arch.add(ablate_cmd);
  ablate_cmd->add_option("--held-out", held_out, "Directory of held-out .hdr images")
      ->required()
      ->check(CLI::ExistingDirectory);
  ablate_cmd->add_option("--base-style", ablate_base);
  ablate_cmd->add_option("--eval-style", ablate_eval);
  ablate_cmd->add_option("--epochs", ablate_tc.epochs);
  ablate_cmd->add_option("--batch-size", ablate_tc.batch_size);
  ablate_cmd->add_option("--lr-start", ablate_tc.lr_start);
  ablate_cmd->add_option("--lr-end", ablate_tc.lr_end);
  ablate_cmd->add_option("--seed", common.seed);
  ablate_cmd->add_option("--extractor", extractor_spec);
  ablate_cmd->add_option("--output", ablate_output);

  // make-scenes
  auto* scenes_cmd = app.add_subcommand("make-scenes", "Write synthetic HDR test scenes");
  std::string scenes_output;
  int scenes_count = 4, scenes_size = 128;
  scenes_cmd->add_option("--output", scenes_output)->required();
  scenes_cmd->add_option("--count", scenes_count)->check(CLI::PositiveNumber);
  scenes_cmd->add_option("--size", scenes_size)->check(CLI::Range(1, 8192));
  scenes_cmd->add_option("--seed", common.seed);

  bind_environment(&app);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train_cmd) {
      tc.scheme = parse_scheme(scheme_text);
      tc.styles = split_list(styles_text);
      tc.degradation = Degradation::parse(degradation_text);
      tc.seed = common.seed;
      tc.log_path = log_path;
      tc.diagnostic_path = out_weights + ".diverged";
      if (train_cmd->count("--pixel-only") > 0) tc.style_mode = StyleLossMode::PixelOnly;
      if (parametric) tc.parametric = ParametricConfig{"gamma", gamma_low, gamma_high};
      if (tc.scheme == Scheme::Incremental && init_checkpoint.empty())
        throw UsageError("--scheme incremental needs --init-checkpoint with a pretrained codec");
      tc.validate();
      auto profile = load_or_default(common.profile);
      auto extractor = make_extractor(extractor_spec);
      Codec codec = init_checkpoint.empty() ? make_codec(train_arch.resolve(), {}, common.seed)
                                            : Codec::load(init_checkpoint);
      const auto corpus = build_corpus(train_corpus, tc.styles, common.seed, profile);
      tc.on_step = [&](const StepReport& r) {
        if (r.step % 50 == 0)
          std::cerr << "step " << r.step << " epoch " << r.epoch << " style " << r.style_id << " L_inv "
                    << r.l_inv << " L_sty " << r.l_sty << " lr " << r.lr << "\n";
      };
      const auto result = parametric ? train_parametric(codec, tc, corpus, extractor.get())
                                     : train(codec, tc, corpus, extractor.get());
      codec.save(out_weights);
      profile.arch = codec.arch();
      profile.style_registry = codec.styles();
      profile.loss_weights = tc.weights;
      profile.jpeg_trained = tc.degradation.kind == Degradation::Kind::Jpeg;
      if (profile.jpeg_trained) profile.jpeg_quality = tc.degradation.quality;
      save_profile(profile, out_profile.empty() ? out_weights + ".profile" : out_profile);
      std::cerr << "trained " << result.steps << " steps\n";
    } else if (*encode_cmd) {
      auto [profile, codec] = load_codec(common);
      const auto hdr = read_hdr(enc_input);
      const auto ldr = encode_image(codec, profile, hdr, enc_style, optional_param(enc_param_opt, enc_param));
      const auto encoding = enc_quality == kLosslessQuality ? LdrEncoding::lossless() : LdrEncoding::jpeg(enc_quality);
      write_ldr(ldr, enc_output, encoding);
      if (!enc_target.empty()) {
        const auto target = read_ldr(enc_target);
        if (target.width != ldr.width || target.height != ldr.height)
          throw PairingError("target differs in size from the input");
        const auto a = to_tensor(ldr), b = to_tensor(target);
        std::cout << "ldr_psnr," << format_metric(psnr(a, b)) << "\nldr_ssim," << format_metric(ssim(a, b))
                  << "\n";
      }
    } else if (*decode_cmd) {
      if (dec_report && dec_truth.empty()) throw UsageError("--report needs --ground-truth");
      auto [profile, codec] = load_codec(common);
      const auto ldr = read_ldr(dec_input);
      const auto restored = decode_image(codec, profile, ldr);
      write_hdr(restored, dec_output);
      if (dec_report) {
        MetricReport report;
        report.add(fs::path(dec_input).filename().string(),
                   evaluate_pair(restored, read_hdr(dec_truth), nullptr, nullptr));
        std::cout << report.to_table(',');
      }
    } else if (*eval_cmd) {
      auto [profile, codec] = load_codec(common);
      const auto external = parse_target_dirs(eval_targets);
      const auto images = read_images(eval_data);
      const auto ext_targets = load_targets(images, external);
      const auto style = style_target(eval_style, external);
      const auto gamma = optional_param(eval_param_opt, eval_param);
      MetricReport report;
      for (const auto& item : images) {
        auto target = style.source == TargetSource::ExternalFiles ? ext_targets.at(eval_style).at(item.name)
                                                                   : render_target(style, item.image);
        if (gamma) target = apply_display_gamma(target, *gamma);
        const auto ldr = encode_image(codec, profile, item.image, eval_style, gamma);
        const auto restored = decode_image(codec, profile, ldr);
        report.add(item.name, evaluate_pair(restored, item.image, &ldr, &target));
      }
      write_text(report.to_table(','), eval_output);
    } else if (*rd_cmd) {
      std::vector<int> qualities;
      for (const auto& q : split_list(rd_qualities)) {
        try {
          qualities.push_back(std::stoi(q));
        } catch (const std::logic_error&) {
          throw UsageError("bad quality '" + q + "'");
        }
      }
      auto [profile, codec] = load_codec(common);
      RDOptions options;
      options.style_id = rd_style;
      options.work_dir = rd_work;
      const auto curve = rd_sweep(codec, profile, read_images(rd_data), qualities, options);
      if (curve.per_image.empty()) throw CorpusError("no image survived the sweep");
      write_text(curve.to_table(','), rd_output);
      if (!rd_svg_path.empty()) write_rd_svg(curve, rd_svg_path, "rate-distortion, style " + rd_style);
    } else if (*prep_cmd) {
      const auto profile = load_or_default(common.profile);
      const auto corpus = build_corpus(prep_corpus, split_list(prep_styles), common.seed, profile);
      write_corpus(corpus, prep_output);
      std::cerr << "wrote " << corpus.samples.size() << " samples to " << prep_output << "\n";
    } else if (*ablate_cmd) {
      AblationConfig config;
      config.arch = ablate_arch.resolve();
      config.base_style = ablate_base;
      config.eval_style = ablate_eval;
      config.init_seed = common.seed;
      config.train = ablate_tc;
      config.train.seed = common.seed;
      const auto profile = CodecProfile::defaults();
      const std::vector<std::string> both{ablate_base, ablate_eval};
      const auto corpus = build_corpus(ablate_corpus, both, common.seed, profile);
      CorpusFlags held = ablate_corpus;
      held.data = held_out;
      const auto held_corpus = build_corpus(held, both, common.seed + 1, profile);
      auto extractor = make_extractor(extractor_spec);
      const auto rows = ablation_suite(corpus, held_corpus, config, profile, extractor.get());
      write_text(ablation_table(rows, ','), ablate_output);
    } else if (*scenes_cmd) {
      fs::create_directories(scenes_output);
      for (int i = 0; i < scenes_count; ++i) {
        const auto name = "scene_" + std::to_string(i) + ".hdr";
        write_hdr(synthetic_scene(common.seed * 1000 + static_cast<std::uint64_t>(i) + 1, scenes_size, scenes_size),
                  fs::path(scenes_output) / name);
      }
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitOk;
}
