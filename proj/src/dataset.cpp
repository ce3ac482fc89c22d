#include "itm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>

#include "itm/errors.hpp"

namespace itm {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// Half-pixel-centered source coordinate and blend weight.
struct Tap {
  int lo;
  int hi;
  double t;
};

std::vector<Tap> taps(int src, int dst) {
  std::vector<Tap> out(dst);
  const double scale = static_cast<double>(src) / dst;
  for (int i = 0; i < dst; ++i) {
    const double s = std::clamp((i + 0.5) * scale - 0.5, 0.0, static_cast<double>(src - 1));
    const int lo = static_cast<int>(std::floor(s));
    out[i] = {lo, std::min(lo + 1, src - 1), s - lo};
  }
  return out;
}

template <typename Image, typename Convert>
Image resize_impl(const Image& img, int width, int height, Convert convert) {
  if (width <= 0 || height <= 0) throw DomainError("resize target must be positive");
  if (img.width == width && img.height == height) return img;
  const auto tx = taps(img.width, width);
  const auto ty = taps(img.height, height);
  Image out(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      for (int c = 0; c < 3; ++c) {
        const double top = img.at(tx[x].lo, ty[y].lo, c) * (1 - tx[x].t) + img.at(tx[x].hi, ty[y].lo, c) * tx[x].t;
        const double bot = img.at(tx[x].lo, ty[y].hi, c) * (1 - tx[x].t) + img.at(tx[x].hi, ty[y].hi, c) * tx[x].t;
        out.at(x, y, c) = convert(top * (1 - ty[y].t) + bot * ty[y].t);
      }
  return out;
}

template <typename Image>
Image crop_flip(const Image& img, int x0, int y0, int size, bool flip) {
  Image out(size, size);
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      const int sx = x0 + (flip ? size - 1 - x : x);
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(sx, y0 + y, c);
    }
  return out;
}

bool is_external(const StyleTarget& s) { return s.source == TargetSource::ExternalFiles; }

}  // namespace

void CorpusConfig::validate() const {
  if (frame_size <= 0 || patch_size <= 0 || patches_per_image <= 0)
    throw UsageError("corpus sizes must be positive");
  if (patch_size > frame_size) throw UsageError("patch size exceeds the resized frame");
  if (!(exposure_range >= 0.0)) throw UsageError("exposure range must be nonnegative");
  if (!(flip_probability >= 0.0 && flip_probability <= 1.0))
    throw UsageError("flip probability must be in [0, 1]");
  if (styles.empty()) throw UsageError("corpus needs at least one style");
}

std::vector<SampleRecord> Corpus::manifest() const {
  std::vector<SampleRecord> out;
  for (const auto& s : samples) out.push_back(s.record);
  return out;
}

bool Corpus::covers(const std::string& style_id) const {
  return !samples.empty() && std::all_of(samples.begin(), samples.end(), [&](const SamplePair& s) {
    return s.targets.count(style_id) != 0;
  });
}

HdrImage resize_bilinear(const HdrImage& img, int width, int height) {
  return resize_impl(img, width, height, [](double v) { return static_cast<float>(v); });
}

LdrImage resize_bilinear(const LdrImage& img, int width, int height) {
  return resize_impl(img, width, height, [](double v) {
    return static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  });
}

SamplePair make_sample(const HdrImage& frame, const SampleRecord& record, const CorpusConfig& config,
                       const CodecProfile& profile) {
  if (record.crop_x < 0 || record.crop_y < 0 || record.crop_x + record.size > frame.width ||
      record.crop_y + record.size > frame.height)
    throw CorpusError("crop of sample " + record.id + " leaves the frame");
  SamplePair s;
  s.record = record;
  s.hdr = crop_flip(frame, record.crop_x, record.crop_y, record.size, record.flip);
  const float gain = static_cast<float>(std::exp2(record.exposure_shift));
  for (auto& v : s.hdr.pixels) v *= gain;
  s.luv = hdr_to_domain(s.hdr, profile);
  for (const auto& style : config.styles) {
    if (!is_external(style)) {
      s.targets[style.style_id] = render_target(style, s.hdr);
      continue;
    }
    const auto by_style = config.external_targets.find(style.style_id);
    if (by_style == config.external_targets.end())
      throw PairingError("no targets supplied for style '" + style.style_id + "'");
    const auto it = by_style->second.find(record.source);
    if (it == by_style->second.end())
      throw PairingError("style '" + style.style_id + "' has no target for " + record.source);
    const auto resized = resize_bilinear(it->second, frame.width, frame.height);
    s.targets[style.style_id] = crop_flip(resized, record.crop_x, record.crop_y, record.size, record.flip);
  }
  return s;
}

Corpus prepare_corpus(const std::vector<NamedHdr>& images, const CorpusConfig& config,
                      const CodecProfile& profile) {
  config.validate();
  const bool any_external = std::any_of(config.styles.begin(), config.styles.end(), is_external);
  Corpus corpus;
  for (std::size_t i = 0; i < images.size(); ++i) {
    const auto& named = images[i];
    const auto frame = resize_bilinear(named.image, config.frame_size, config.frame_size);
    std::mt19937_64 rng(config.seed * kGolden + i + 1);
    std::uniform_int_distribution<int> pos(0, config.frame_size - config.patch_size);
    std::uniform_real_distribution<double> shift(-config.exposure_range, config.exposure_range);
    std::bernoulli_distribution flip(config.flip_probability);
    const auto stem = std::filesystem::path(named.name).stem().string();
    for (int k = 0; k < config.patches_per_image; ++k) {
      SampleRecord r;
      r.id = stem + "_p" + std::to_string(k);
      r.source = named.name;
      r.size = config.patch_size;
      r.crop_x = pos(rng);
      r.crop_y = pos(rng);
      r.exposure_shift = shift(rng);
      r.flip = flip(rng);
      if (any_external) r.exposure_shift = 0.0;
      corpus.samples.push_back(make_sample(frame, r, config, profile));
    }
  }
  return corpus;
}

Corpus prepare_corpus(const std::filesystem::path& hdr_dir, const CorpusConfig& config,
                      const CodecProfile& profile) {
  if (!std::filesystem::is_directory(hdr_dir))
    throw CorpusError(hdr_dir.string() + " is not a directory");
  std::vector<std::filesystem::path> paths;
  for (const auto& entry : std::filesystem::directory_iterator(hdr_dir))
    if (entry.is_regular_file() && entry.path().extension() == ".hdr") paths.push_back(entry.path());
  std::sort(paths.begin(), paths.end());
  std::vector<NamedHdr> images;
  std::vector<std::string> skipped;
  for (const auto& p : paths) {
    try {
      images.push_back({p.filename().string(), read_hdr(p)});
    } catch (const Error& e) {
      std::cerr << "warning: skipping " << p.string() << ": " << e.what() << "\n";
      skipped.push_back(p.filename().string());
    }
  }
  if (images.empty()) throw CorpusError("no usable HDR files in " + hdr_dir.string());
  auto corpus = prepare_corpus(images, config, profile);
  corpus.skipped = std::move(skipped);
  return corpus;
}

Corpus regenerate_corpus(const std::vector<SampleRecord>& manifest,
                         const std::vector<NamedHdr>& images, const CorpusConfig& config,
                         const CodecProfile& profile) {
  std::map<std::string, HdrImage> frames;
  for (const auto& named : images)
    frames[named.name] = resize_bilinear(named.image, config.frame_size, config.frame_size);
  Corpus corpus;
  for (const auto& r : manifest) {
    const auto it = frames.find(r.source);
    if (it == frames.end()) throw CorpusError("manifest source " + r.source + " is missing");
    corpus.samples.push_back(make_sample(it->second, r, config, profile));
  }
  return corpus;
}

void write_manifest(const std::vector<SampleRecord>& records, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw WriteError("cannot write " + path.string());
  out << "id\tsource\tcrop_x\tcrop_y\tsize\texposure_shift\tflip\n";
  out.precision(17);
  for (const auto& r : records)
    out << r.id << '\t' << r.source << '\t' << r.crop_x << '\t' << r.crop_y << '\t' << r.size << '\t'
        << r.exposure_shift << '\t' << (r.flip ? 1 : 0) << '\n';
  if (!out) throw WriteError("failed writing " + path.string());
}

std::vector<SampleRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot read manifest " + path.string());
  std::string line;
  std::getline(in, line);
  std::vector<SampleRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream fields(line);
    SampleRecord r;
    int flip = 0;
    std::getline(fields, r.id, '\t');
    std::getline(fields, r.source, '\t');
    if (!(fields >> r.crop_x >> r.crop_y >> r.size >> r.exposure_shift >> flip))
      throw DataError("malformed manifest line: " + line);
    r.flip = flip != 0;
    out.push_back(r);
  }
  return out;
}

void write_corpus(const Corpus& corpus, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& s : corpus.samples) {
    write_hdr(s.hdr, dir / (s.record.id + ".hdr"));
    for (const auto& [style, ldr] : s.targets) write_ldr(ldr, dir / (s.record.id + "." + style + ".png"));
  }
  write_manifest(corpus.manifest(), dir / "manifest.tsv");
}

BatchIterator::BatchIterator(std::size_t sample_count, int batch_size, std::uint64_t seed)
    : sample_count_(sample_count), batch_size_(static_cast<std::size_t>(batch_size)), seed_(seed) {
  if (batch_size <= 0) throw UsageError("batch size must be positive");
}

std::vector<std::vector<std::size_t>> BatchIterator::epoch(std::int64_t index) const {
  std::vector<std::size_t> order(sample_count_);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed_ * kGolden + static_cast<std::uint64_t>(index) + 1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b + batch_size_ <= sample_count_; b += batch_size_)
    batches.emplace_back(order.begin() + b, order.begin() + b + batch_size_);
  return batches;
}

}  // namespace itm
