#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "itm/colorspace.hpp"
#include "itm/hdr_io.hpp"
#include "itm/tonemap.hpp"

namespace itm {

/// Everything needed to regenerate one sample from its source image.
struct SampleRecord {
  std::string id;
  std::string source;
  int crop_x = 0;
  int crop_y = 0;
  int size = 0;
  double exposure_shift = 0.0;  // stops; radiance is scaled by 2^shift
  bool flip = false;

  bool operator==(const SampleRecord&) const = default;
};

struct SamplePair {
  SampleRecord record;
  HdrImage hdr;         // shifted, cropped, flipped radiance
  NormalizedLuv luv;    // hdr in the codec domain
  std::map<std::string, LdrImage> targets;
};

struct CorpusConfig {
  int frame_size = 640;
  int patch_size = 512;
  int patches_per_image = 10;
  double exposure_range = 1.0;  // u ~ U(-range, range)
  double flip_probability = 0.5;
  std::uint64_t seed = 0;
  std::vector<StyleTarget> styles;
  /// Targets for external styles, keyed by style id then by source name.
  std::map<std::string, std::map<std::string, LdrImage>> external_targets;

  void validate() const;
};

struct Corpus {
  std::vector<SamplePair> samples;
  std::vector<std::string> skipped;

  std::vector<SampleRecord> manifest() const;
  bool covers(const std::string& style_id) const;
};

struct NamedHdr {
  std::string name;
  HdrImage image;
};

HdrImage resize_bilinear(const HdrImage& img, int width, int height);
LdrImage resize_bilinear(const LdrImage& img, int width, int height);

/// Builds one sample from a frame already resized to frame_size.
SamplePair make_sample(const HdrImage& frame, const SampleRecord& record, const CorpusConfig& config,
                       const CodecProfile& profile);

/// Resizes each image to the frame, then draws crops, exposure shifts and
/// flips from a generator seeded per image. Targets are rendered from the
/// shifted radiance. External styles keep shift 0 since their targets
/// cannot be re-rendered.
Corpus prepare_corpus(const std::vector<NamedHdr>& images, const CorpusConfig& config,
                      const CodecProfile& profile);

/// Reads every .hdr file in the directory, sorted by name. Unreadable files
/// are skipped with a warning; no usable file raises CorpusError.
Corpus prepare_corpus(const std::filesystem::path& hdr_dir, const CorpusConfig& config,
                      const CodecProfile& profile);

/// Rebuilds samples from a manifest and the source images.
Corpus regenerate_corpus(const std::vector<SampleRecord>& manifest,
                         const std::vector<NamedHdr>& images, const CorpusConfig& config,
                         const CodecProfile& profile);

/// Tab-separated: id, source, crop_x, crop_y, size, exposure_shift, flip.
void write_manifest(const std::vector<SampleRecord>& records, const std::filesystem::path& path);
std::vector<SampleRecord> read_manifest(const std::filesystem::path& path);

/// Writes <id>.hdr and <id>.<style>.png for every sample plus manifest.tsv.
void write_corpus(const Corpus& corpus, const std::filesystem::path& dir);

/// Epoch shuffling with per-epoch seeds; the trailing partial batch is
/// dropped.
class BatchIterator {
 public:
  BatchIterator(std::size_t sample_count, int batch_size, std::uint64_t seed);

  std::size_t batches_per_epoch() const { return sample_count_ / batch_size_; }
  std::vector<std::vector<std::size_t>> epoch(std::int64_t index) const;

 private:
  std::size_t sample_count_;
  std::size_t batch_size_;
  std::uint64_t seed_;
};

}  // namespace itm
