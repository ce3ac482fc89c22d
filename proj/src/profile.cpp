#include "itm/profile.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "itm/colorspace.hpp"
#include "itm/errors.hpp"

namespace itm {

void LossWeights::validate() const {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw UsageError("lambda must lie in [0, 1]");
  if (alpha < 0.0 || beta_perc < 0.0 || sigma_ssim < 0.0)
    throw UsageError("loss weights must be nonnegative");
}

void ArchConfig::validate() const {
  if (base_channels <= 0 || num_res_blocks <= 0 || global_vec_dim <= 0 || rdb_layers <= 0 ||
      rdb_growth <= 0 || cbam_reduction <= 0)
    throw UsageError("architecture sizes must be positive");
  if (global_pool_size < 4 || (global_pool_size & (global_pool_size - 1)) != 0)
    throw UsageError("global_pool_size must be a power of two >= 4");
}

CodecProfile CodecProfile::defaults() {
  CodecProfile p;
  p.uv_scale = default_uv_scale();
  return p;
}

void CodecProfile::validate() const {
  if (!(log_lum_min < log_lum_max)) throw UsageError("log_lum_min must be below log_lum_max");
  if (!(uv_scale[0] > 0.0 && uv_scale[1] > 0.0)) throw UsageError("uv_scale must be positive");
  if (style_registry.empty()) throw UsageError("style registry is empty");
  std::set<std::string> seen;
  for (const auto& s : style_registry) {
    if (s.empty() || s.find_first_of(", \t\n=") != std::string::npos)
      throw UsageError("invalid style identifier '" + s + "'");
    if (!seen.insert(s).second) throw UsageError("duplicate style identifier '" + s + "'");
  }
  loss_weights.validate();
  if (loss_weights.lambda <= 0.0 || loss_weights.lambda >= 1.0)
    throw UsageError("profile lambda must lie strictly inside (0, 1)");
  arch.validate();
  if (jpeg_quality < 1 || jpeg_quality > 100) throw UsageError("jpeg_quality must be in [1, 100]");
}

bool CodecProfile::has_style(const std::string& style_id) const {
  return std::find(style_registry.begin(), style_registry.end(), style_id) != style_registry.end();
}

namespace {

double parse_double(const std::string& s, const std::string& key) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw CompatibilityError("profile key '" + key + "' is not a number");
  return v;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

class KeyValues {
 public:
  explicit KeyValues(std::map<std::string, std::string> values) : values_(std::move(values)) {}

  const std::string& raw(const std::string& key) const {
    const auto it = values_.find(key);
    if (it == values_.end()) throw CompatibilityError("profile is missing key '" + key + "'");
    return it->second;
  }

  double number(const std::string& key) const { return parse_double(raw(key), key); }

  int integer(const std::string& key) const {
    const std::string& s = raw(key);
    int v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
      throw CompatibilityError("profile key '" + key + "' is not an integer");
    return v;
  }

  bool boolean(const std::string& key) const {
    const std::string& s = raw(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw CompatibilityError("profile key '" + key + "' is not a boolean");
  }

  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::istringstream in(raw(key));
    std::string item;
    while (std::getline(in, item, ',')) {
      const auto b = item.find_first_not_of(' ');
      const auto e = item.find_last_not_of(' ');
      if (b == std::string::npos) throw CompatibilityError("empty entry in '" + key + "'");
      out.push_back(item.substr(b, e - b + 1));
    }
    return out;
  }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace

std::string serialize_profile(const CodecProfile& p) {
  std::ostringstream out;
  out << "# invertible tone-mapping codec profile\n";
  out << "format_version = " << kProfileFormatVersion << "\n";
  out << "log_lum_min = " << format_double(p.log_lum_min) << "\n";
  out << "log_lum_max = " << format_double(p.log_lum_max) << "\n";
  out << "uv_scale = " << format_double(p.uv_scale[0]) << ", " << format_double(p.uv_scale[1])
      << "\n";
  out << "style_registry = ";
  for (std::size_t i = 0; i < p.style_registry.size(); ++i)
    out << (i ? ", " : "") << p.style_registry[i];
  out << "\n";
  out << "loss.lambda = " << format_double(p.loss_weights.lambda) << "\n";
  out << "loss.alpha = " << format_double(p.loss_weights.alpha) << "\n";
  out << "loss.beta_perc = " << format_double(p.loss_weights.beta_perc) << "\n";
  out << "loss.sigma_ssim = " << format_double(p.loss_weights.sigma_ssim) << "\n";
  out << "arch.base_channels = " << p.arch.base_channels << "\n";
  out << "arch.num_res_blocks = " << p.arch.num_res_blocks << "\n";
  out << "arch.global_pool_size = " << p.arch.global_pool_size << "\n";
  out << "arch.global_vec_dim = " << p.arch.global_vec_dim << "\n";
  out << "arch.rdb_layers = " << p.arch.rdb_layers << "\n";
  out << "arch.rdb_growth = " << p.arch.rdb_growth << "\n";
  out << "arch.cbam_reduction = " << p.arch.cbam_reduction << "\n";
  out << "arch.use_global_branch = " << (p.arch.use_global_branch ? "true" : "false") << "\n";
  out << "jpeg_trained = " << (p.jpeg_trained ? "true" : "false") << "\n";
  out << "jpeg_quality = " << p.jpeg_quality << "\n";
  return out.str();
}

CodecProfile parse_profile(const std::string& text) {
  std::map<std::string, std::string> values;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CompatibilityError("malformed profile line: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  const KeyValues kv(std::move(values));
  const int version = kv.integer("format_version");
  if (version != kProfileFormatVersion)
    throw CompatibilityError("unsupported profile format version " + std::to_string(version));

  CodecProfile p;
  p.log_lum_min = kv.number("log_lum_min");
  p.log_lum_max = kv.number("log_lum_max");
  {
    const auto uv = kv.list("uv_scale");
    if (uv.size() != 2) throw CompatibilityError("uv_scale needs two entries");
    p.uv_scale = {parse_double(uv[0], "uv_scale"), parse_double(uv[1], "uv_scale")};
  }
  p.style_registry = kv.list("style_registry");
  p.loss_weights.lambda = kv.number("loss.lambda");
  p.loss_weights.alpha = kv.number("loss.alpha");
  p.loss_weights.beta_perc = kv.number("loss.beta_perc");
  p.loss_weights.sigma_ssim = kv.number("loss.sigma_ssim");
  p.arch.base_channels = kv.integer("arch.base_channels");
  p.arch.num_res_blocks = kv.integer("arch.num_res_blocks");
  p.arch.global_pool_size = kv.integer("arch.global_pool_size");
  p.arch.global_vec_dim = kv.integer("arch.global_vec_dim");
  p.arch.rdb_layers = kv.integer("arch.rdb_layers");
  p.arch.rdb_growth = kv.integer("arch.rdb_growth");
  p.arch.cbam_reduction = kv.integer("arch.cbam_reduction");
  p.arch.use_global_branch = kv.boolean("arch.use_global_branch");
  p.jpeg_trained = kv.boolean("jpeg_trained");
  p.jpeg_quality = kv.integer("jpeg_quality");
  try {
    p.validate();
  } catch (const UsageError& e) {
    throw CompatibilityError(std::string("profile content is invalid: ") + e.what());
  }
  return p;
}

void save_profile(const CodecProfile& profile, const std::filesystem::path& path) {
  profile.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw WriteError("cannot open " + path.string() + " for writing");
  out << serialize_profile(profile);
  if (!out) throw WriteError("short write to " + path.string());
}

CodecProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw CompatibilityError("cannot open profile " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_profile(text.str());
}

}  // namespace itm
