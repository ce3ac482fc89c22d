#include "itm/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "itm/errors.hpp"
#include "itm/pipeline.hpp"
#include "itm/tensor_image.hpp"

namespace itm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Disables gradients on frozen parameters for the lifetime of a run.
class FreezeScope {
 public:
  explicit FreezeScope(std::vector<torch::Tensor> frozen) : frozen_(std::move(frozen)) {
    for (auto& p : frozen_) p.set_requires_grad(false);
  }
  ~FreezeScope() {
    for (auto& p : frozen_) p.set_requires_grad(true);
  }
  FreezeScope(const FreezeScope&) = delete;
  FreezeScope& operator=(const FreezeScope&) = delete;

 private:
  std::vector<torch::Tensor> frozen_;
};

struct CorpusTensors {
  torch::Tensor luv;                              // (N, 3, H, W)
  std::map<std::string, torch::Tensor> targets;  // style -> (N, 3, H, W)
};

CorpusTensors stack_corpus(const Corpus& corpus, const std::vector<std::string>& styles) {
  std::vector<torch::Tensor> luv;
  std::map<std::string, std::vector<torch::Tensor>> targets;
  for (const auto& s : corpus.samples) {
    luv.push_back(to_tensor(s.luv));
    for (const auto& id : styles) targets[id].push_back(to_tensor(s.targets.at(id)));
  }
  CorpusTensors out{torch::cat(luv, 0), {}};
  for (auto& [id, list] : targets) out.targets[id] = torch::cat(list, 0);
  return out;
}

void append(std::vector<torch::Tensor>& dst, const std::vector<torch::Tensor>& src) {
  dst.insert(dst.end(), src.begin(), src.end());
}

void write_log_line(std::ofstream& out, const EpochRecord& r) {
  nlohmann::json j{{"epoch", r.epoch}, {"step", r.step}, {"L_inv", r.l_inv}, {"L_sty", r.l_sty}, {"lr", r.lr}};
  out << j.dump() << '\n';
  out.flush();
}

TrainResult run(Codec& codec, const TrainConfig& config, const Corpus& corpus,
                PerceptualExtractor* extractor) {
  config.validate();
  for (const auto& id : config.styles)
    if (!corpus.covers(id)) throw CorpusError("corpus has no targets for style '" + id + "'");
  const bool parametric = config.parametric.has_value();
  torch::manual_seed(config.seed);

  std::vector<std::string> active;
  std::vector<torch::Tensor> trainable;
  std::vector<torch::Tensor> frozen;
  if (config.scheme == Scheme::Incremental) {
    for (const auto& id : config.styles)
      if (!codec.has_style(id)) active.push_back(id);
    if (active.empty()) throw TrainingError("incremental training has no new style to add");
    if (codec.styles().empty())
      throw TrainingError("incremental training needs a pretrained codec");
    frozen = codec.all_parameters();
    for (const auto& id : active) append(trainable, codec.add_style(id, parametric)->parameters());
  } else {
    active = config.styles;
    for (const auto& id : active)
      if (!codec.has_style(id)) codec.add_style(id, parametric);
    append(trainable, codec.encoder_parameters());
    append(trainable, codec.decoder_parameters());
    for (const auto& id : active) append(trainable, codec.modulator_parameters(id));
    for (const auto& id : codec.styles())
      if (std::find(active.begin(), active.end(), id) == active.end())
        append(frozen, codec.modulator_parameters(id));
  }
  for (const auto& id : active)
    if (codec.modulator(id)->parametric() != parametric)
      throw StyleError("style '" + id + "' parametric flag does not match the training mode");
  FreezeScope freeze(frozen);

  const auto data = stack_corpus(corpus, active);
  BatchIterator batches(corpus.samples.size(), config.batch_size, config.seed);
  if (batches.batches_per_epoch() == 0)
    throw CorpusError("corpus is smaller than one batch");
  std::mt19937_64 rng(config.seed * kGolden + 7);
  std::uniform_int_distribution<std::size_t> pick_style(0, active.size() - 1);

  torch::optim::Adam optimizer(
      trainable, torch::optim::AdamOptions(config.lr_start).betas({config.adam_beta1, config.adam_beta2}));
  std::ofstream log;
  if (!config.log_path.empty()) {
    log.open(config.log_path);
    if (!log) throw WriteError("cannot write training log " + config.log_path.string());
  }

  codec.train();
  TrainResult result;
  const auto per_epoch = static_cast<double>(batches.batches_per_epoch());
  for (std::int64_t epoch = 0; epoch < config.epochs; ++epoch) {
    double sum_inv = 0.0, sum_sty = 0.0;
    const auto order = batches.epoch(epoch);
    for (std::size_t b = 0; b < order.size(); ++b) {
      const double lr = lr_at(config, static_cast<double>(epoch) + static_cast<double>(b) / per_epoch);
      for (auto& group : optimizer.param_groups())
        static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);

      const auto& style = active[pick_style(rng)];
      const auto index = torch::tensor(std::vector<int64_t>(order[b].begin(), order[b].end()));
      const auto luv = data.luv.index_select(0, index);
      auto target = data.targets.at(style).index_select(0, index);
      torch::Tensor param;
      if (parametric) {
        std::uniform_real_distribution<double> draw(config.parametric->low, config.parametric->high);
        std::vector<float> gammas;
        for (std::size_t k = 0; k < order[b].size(); ++k) gammas.push_back(static_cast<float>(draw(rng)));
        const auto g = torch::tensor(gammas);
        const double mid = 0.5 * (config.parametric->low + config.parametric->high);
        const double half = 0.5 * (config.parametric->high - config.parametric->low);
        param = (g - mid) / half;
        target = target.pow(g.view({-1, 1, 1, 1}));
      }

      const auto generated = codec.encode(luv, style, param);
      const auto restored = codec.decode(config.degradation.apply(generated));
      const auto terms = total_loss(restored, luv, generated, target, extractor, config.weights,
                                    config.style_mode);
      const double total = terms.total.item<double>();
      if (!std::isfinite(total)) {
        if (!config.diagnostic_path.empty()) codec.save(config.diagnostic_path);
        throw TrainingError("non-finite loss at step " + std::to_string(result.steps));
      }
      optimizer.zero_grad();
      terms.total.backward();
      torch::nn::utils::clip_grad_norm_(trainable, config.grad_clip);
      optimizer.step();

      StepReport report{result.steps, epoch, style, terms.inv.item<double>(), terms.sty.item<double>(),
                        total, lr};
      sum_inv += report.l_inv;
      sum_sty += report.l_sty;
      result.step_losses.push_back(total);
      ++result.steps;
      if (config.on_step) config.on_step(report);
    }
    EpochRecord record{epoch, result.steps, sum_inv / per_epoch, sum_sty / per_epoch,
                       lr_at(config, static_cast<double>(epoch))};
    result.log.push_back(record);
    if (log.is_open()) write_log_line(log, record);
  }
  codec.eval();
  return result;
}

}  // namespace

Scheme parse_scheme(const std::string& text) {
  if (text == "joint") return Scheme::Joint;
  if (text == "incremental") return Scheme::Incremental;
  if (text == "separate") return Scheme::Separate;
  throw UsageError("unknown training scheme '" + text + "'");
}

std::string to_string(Scheme scheme) {
  switch (scheme) {
    case Scheme::Joint: return "joint";
    case Scheme::Incremental: return "incremental";
    case Scheme::Separate: return "separate";
  }
  return "joint";
}

void TrainConfig::validate() const {
  if (styles.empty()) throw UsageError("training needs at least one style");
  if (std::set<std::string>(styles.begin(), styles.end()).size() != styles.size())
    throw UsageError("training styles must be unique");
  if (scheme == Scheme::Separate && styles.size() != 1)
    throw UsageError("separate training takes exactly one style");
  if (epochs <= 0 || batch_size <= 0) throw UsageError("epochs and batch size must be positive");
  if (!(lr_start > lr_end && lr_end > 0.0)) throw UsageError("need lr_start > lr_end > 0");
  if (!(grad_clip > 0.0)) throw UsageError("gradient clip must be positive");
  weights.validate();
  if (parametric && !(parametric->low < parametric->high))
    throw UsageError("parametric range must satisfy low < high");
}

double lr_at(const TrainConfig& config, double epoch) {
  return config.lr_start + (config.lr_end - config.lr_start) * (epoch / config.epochs);
}

Codec make_codec(const ArchConfig& arch, const std::vector<std::string>& styles, std::uint64_t seed,
                 bool parametric) {
  torch::manual_seed(seed);
  Codec codec(arch);
  for (const auto& id : styles) codec.add_style(id, parametric);
  return codec;
}

TrainResult train(Codec& codec, const TrainConfig& config, const Corpus& corpus,
                  PerceptualExtractor* extractor) {
  return run(codec, config, corpus, extractor);
}

TrainResult train_parametric(Codec& codec, const TrainConfig& config, const Corpus& corpus,
                             PerceptualExtractor* extractor) {
  if (!config.parametric) throw UsageError("parametric training needs a parameter range");
  return run(codec, config, corpus, extractor);
}

MetricReport evaluate_corpus(Codec& codec, const CodecProfile& profile, const Corpus& corpus,
                             const std::string& style_id, std::optional<double> gamma) {
  MetricReport report;
  for (const auto& s : corpus.samples) {
    const auto it = s.targets.find(style_id);
    if (it == s.targets.end()) throw CorpusError("sample " + s.record.id + " lacks style " + style_id);
    const auto ldr = encode_image(codec, profile, s.hdr, style_id, gamma);
    const auto target = gamma ? apply_display_gamma(it->second, *gamma) : it->second;
    const auto restored = decode_image(codec, profile, ldr);
    report.add(s.record.id, evaluate_pair(restored, s.hdr, &ldr, &target));
  }
  return report;
}

double mean_gradient_term(Codec& codec, const CodecProfile& profile, const Corpus& corpus,
                          const std::string& style_id) {
  if (corpus.samples.empty()) throw CorpusError("empty corpus");
  double sum = 0.0;
  for (const auto& s : corpus.samples) {
    const auto ldr = to_tensor(encode_image(codec, profile, s.hdr, style_id));
    sum += gradient_term(ldr, to_tensor(s.targets.at(style_id))).item<double>();
  }
  return sum / static_cast<double>(corpus.samples.size());
}

std::vector<AblationRow> ablation_suite(const Corpus& corpus, const Corpus& held_out,
                                        const AblationConfig& config, const CodecProfile& profile,
                                        PerceptualExtractor* extractor) {
  const std::vector<std::string> both{config.base_style, config.eval_style};
  std::vector<AblationRow> rows;
  auto score = [&](const std::string& name, Codec& codec) {
    AblationRow row{name, evaluate_corpus(codec, profile, corpus, config.eval_style).aggregate(),
                    mean_gradient_term(codec, profile, held_out, config.eval_style)};
    rows.push_back(row);
  };
  auto joint = [&](const ArchConfig& arch, StyleLossMode mode) {
    TrainConfig t = config.train;
    t.scheme = Scheme::Joint;
    t.styles = both;
    t.style_mode = mode;
    Codec codec = make_codec(arch, {}, config.init_seed);
    train(codec, t, corpus, extractor);
    return codec;
  };

  {
    Codec c = joint(config.arch, StyleLossMode::Full);
    score("full", c);
  }
  {
    ArchConfig arch = config.arch;
    arch.use_global_branch = false;
    Codec c = joint(arch, StyleLossMode::Full);
    score("no_global_branch", c);
  }
  {
    Codec c = joint(config.arch, StyleLossMode::PixelOnly);
    score("pixel_only_loss", c);
  }
  {
    TrainConfig t = config.train;
    t.scheme = Scheme::Separate;
    t.styles = {config.eval_style};
    Codec c = make_codec(config.arch, {}, config.init_seed);
    train(c, t, corpus, extractor);
    score("separate", c);
  }
  {
    TrainConfig t = config.train;
    t.scheme = Scheme::Joint;
    t.styles = {config.base_style};
    Codec c = make_codec(config.arch, {}, config.init_seed);
    train(c, t, corpus, extractor);
    t.scheme = Scheme::Incremental;
    t.styles = {config.eval_style};
    train(c, t, corpus, extractor);
    score("incremental", c);
  }
  return rows;
}

std::string ablation_table(const std::vector<AblationRow>& rows, char delimiter) {
  std::ostringstream out;
  out << "variant";
  for (const char* c : MetricReport::kColumns) out << delimiter << c;
  out << delimiter << "gradient_term\n";
  for (const auto& r : rows) {
    const auto& m = r.metrics;
    out << r.variant << delimiter << format_metric(m.ldr_psnr) << delimiter << format_metric(m.ldr_ssim)
        << delimiter << format_metric(m.pu_psnr) << delimiter << format_metric(m.pu_ssim) << delimiter
        << format_metric(m.pu_msssim) << delimiter << r.gradient_term << '\n';
  }
  return out.str();
}

}  // namespace itm
