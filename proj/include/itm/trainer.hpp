#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "itm/dataset.hpp"
#include "itm/losses.hpp"
#include "itm/metrics.hpp"
#include "itm/model.hpp"
#include "itm/profile.hpp"

namespace itm {

enum class Scheme { Joint, Incremental, Separate };

Scheme parse_scheme(const std::string& text);
std::string to_string(Scheme scheme);

struct ParametricConfig {
  std::string param_name = "gamma";
  double low = 0.5;
  double high = 1.5;
};

struct StepReport {
  std::int64_t step = 0;
  std::int64_t epoch = 0;
  std::string style_id;
  double l_inv = 0.0;
  double l_sty = 0.0;
  double total = 0.0;
  double lr = 0.0;
};

struct TrainConfig {
  Scheme scheme = Scheme::Joint;
  std::vector<std::string> styles{"reinhard"};
  int epochs = 300;
  int batch_size = 8;
  double lr_start = 2e-4;
  double lr_end = 2e-6;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double grad_clip = 5.0;
  Degradation degradation;
  LossWeights weights;
  StyleLossMode style_mode = StyleLossMode::Full;
  std::optional<ParametricConfig> parametric;
  std::uint64_t seed = 0;
  std::filesystem::path log_path;         // JSONL per epoch, optional
  std::filesystem::path diagnostic_path;  // written when the loss blows up
  std::function<void(const StepReport&)> on_step;

  void validate() const;
};

/// Exactly linear from lr_start at epoch 0 to lr_end at `epochs`;
/// `epoch` may be fractional.
double lr_at(const TrainConfig& config, double epoch);

struct EpochRecord {
  std::int64_t epoch = 0;
  std::int64_t step = 0;
  double l_inv = 0.0;
  double l_sty = 0.0;
  double lr = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::vector<double> step_losses;  // total loss per step
  std::int64_t steps = 0;
};

/// Constructs a codec with freshly seeded weights and one modulator per style.
Codec make_codec(const ArchConfig& arch, const std::vector<std::string>& styles, std::uint64_t seed,
                 bool parametric = false);

/// Joint and separate schemes train the backbone, the decoder and the
/// listed modulators, adding missing ones. Incremental trains only the
/// modulators of listed styles the codec lacks; everything else stays
/// bitwise unchanged. Throws TrainingError on a non-finite loss after
/// writing the diagnostic checkpoint.
TrainResult train(Codec& codec, const TrainConfig& config, const Corpus& corpus,
                  PerceptualExtractor* extractor);

/// Draws gamma per sample, raises the target to it in display space and
/// feeds the normalized gamma to a parametric modulator.
TrainResult train_parametric(Codec& codec, const TrainConfig& config, const Corpus& corpus,
                             PerceptualExtractor* extractor);

/// Scores encoder output against the style targets and the restored
/// radiance against the samples through the real 8-bit pipeline.
/// `gamma` selects the parametric setting when the style takes one.
MetricReport evaluate_corpus(Codec& codec, const CodecProfile& profile, const Corpus& corpus,
                             const std::string& style_id, std::optional<double> gamma = {});

/// Mean unweighted gradient term between the quantized encoder output and
/// the target over a corpus.
double mean_gradient_term(Codec& codec, const CodecProfile& profile, const Corpus& corpus,
                          const std::string& style_id);

struct AblationConfig {
  TrainConfig train;  // budget, seed and loss weights shared by all variants
  ArchConfig arch;
  std::string base_style = "reinhard";
  std::string eval_style = "durand";
  std::uint64_t init_seed = 0;
};

struct AblationRow {
  std::string variant;
  MetricRow metrics;
  double gradient_term = 0.0;  // on held-out samples
};

/// Trains full, no-global-branch, pixel-only, separate and incremental
/// variants at the same budget and scores them on `eval_style`.
std::vector<AblationRow> ablation_suite(const Corpus& corpus, const Corpus& held_out,
                                        const AblationConfig& config, const CodecProfile& profile,
                                        PerceptualExtractor* extractor);

std::string ablation_table(const std::vector<AblationRow>& rows, char delimiter = ',');

}  // namespace itm
