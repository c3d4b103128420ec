#include "causaug/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <initializer_list>
#include <set>

#include "causaug/error.hpp"
#include "causaug/npy.hpp"

namespace causaug {

using nlohmann::json;

void PipelineConfig::validate() const {
  preprocess.validate();
  conventional.validate();
  gin.validate();
  resolve_spacing(bspline, 1 << 20, 1 << 20);
  if (!(felz.k > 0.0)) throw InvalidArgument("config: map.felz.k must be > 0");
  if (felz.min_size < 1) throw InvalidArgument("config: map.felz.min_size must be >= 1");
  if (felz.sigma < 0.0) throw InvalidArgument("config: map.felz.sigma must be >= 0");
}

AugmentConfig PipelineConfig::augment_config() const {
  AugmentConfig a;
  a.gin = gin;
  a.map_kind = map_kind;
  a.bspline = bspline;
  a.felz = felz;
  a.ipa_enabled = ipa_enabled;
  a.max_resamples = max_resamples;
  return a;
}

namespace {

// Reads typed fields out of one JSON object and rejects anything it was not asked about.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw InvalidArgument("config: '" + path_ + "' must be an object");
  }

  template <typename T>
  void read(const char* key, T& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    try {
      out = it->template get<T>();
    } catch (const json::exception&) {
      throw InvalidArgument("config: '" + name(key) + "' has the wrong type");
    }
  }

  void read_count(const char* key, std::size_t& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number_unsigned()) throw InvalidArgument("config: '" + name(key) + "' must be a non-negative integer");
    out = it->get<std::size_t>();
  }

  void read_number(const char* key, double& out) {
    seen_.insert(key);
    const auto it = j_.find(key);
    if (it == j_.end()) return;
    if (!it->is_number()) throw InvalidArgument("config: '" + name(key) + "' must be a number");
    out = it->get<double>();
  }

  const json* child(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) throw InvalidArgument("config: unknown key '" + name(key) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void read_conventional(const json& j, ConventionalAugConfig& c) {
  Section s(j, "preprocess.augment");
  s.read_number("p_affine", c.p_affine);
  s.read_number("rotation_deg", c.rotation_deg);
  s.read_number("scale_min", c.scale_min);
  s.read_number("scale_max", c.scale_max);
  s.read_number("translate_frac", c.translate_frac);
  s.read_number("p_elastic", c.p_elastic);
  s.read_number("elastic_magnitude", c.elastic_magnitude);
  if (const json* sp = s.child("elastic_spacing"); sp && !sp->is_null()) {
    if (!sp->is_number_unsigned()) throw InvalidArgument("config: 'preprocess.augment.elastic_spacing' must be an integer");
    c.elastic_spacing = sp->get<std::size_t>();
  }
  s.read_number("p_brightness_contrast", c.p_brightness_contrast);
  s.read_number("contrast_min", c.contrast_min);
  s.read_number("contrast_max", c.contrast_max);
  s.read_number("brightness_range", c.brightness_range);
  s.read_number("p_gamma", c.p_gamma);
  s.read_number("gamma_min", c.gamma_min);
  s.read_number("gamma_max", c.gamma_max);
  s.read_number("p_noise", c.p_noise);
  s.read_number("noise_sigma", c.noise_sigma);
  s.finish();
}

void read_preprocess(const json& j, PipelineConfig& c) {
  Section s(j, "preprocess");
  if (const json* w = s.child("window")) {
    if (w->is_null()) {
      c.preprocess.window.reset();
    } else if (w->is_array() && w->size() == 2 && (*w)[0].is_number() && (*w)[1].is_number()) {
      c.preprocess.window = std::pair{(*w)[0].get<double>(), (*w)[1].get<double>()};
    } else {
      throw InvalidArgument("config: 'preprocess.window' must be null or [low, high]");
    }
  }
  s.read_number("clip_top_percent", c.preprocess.clip_top_percent);
  s.read("normalize", c.preprocess.normalize);
  if (const json* t = s.child("target_size")) {
    if (!(t->is_array() && t->size() == 2 && (*t)[0].is_number_unsigned() && (*t)[1].is_number_unsigned())) {
      throw InvalidArgument("config: 'preprocess.target_size' must be [height, width]");
    }
    c.preprocess.target_h = (*t)[0].get<std::size_t>();
    c.preprocess.target_w = (*t)[1].get<std::size_t>();
  }
  if (const json* a = s.child("augment")) read_conventional(*a, c.conventional);
  s.finish();
}

}  // namespace

PipelineConfig config_from_json(const json& j) {
  PipelineConfig c;
  Section root(j, "");
  if (const json* p = root.child("preprocess")) read_preprocess(*p, c);
  if (const json* g = root.child("gin")) {
    Section s(*g, "gin");
    s.read_count("n_layers", c.gin.n_layers);
    s.read_count("hidden_channels", c.gin.hidden_channels);
    s.read_count("kernel_size", c.gin.kernel_size);
    s.read_number("leaky_slope", c.gin.leaky_slope);
    s.finish();
  }
  if (const json* m = root.child("map")) {
    Section s(*m, "map");
    if (const json* kind = s.child("map_kind")) {
      if (!kind->is_string()) throw InvalidArgument("config: 'map.map_kind' must be a string");
      c.map_kind = map_kind_from_string(kind->get<std::string>());
    }
    if (const json* sp = s.child("spacing"); sp && !sp->is_null()) {
      if (!sp->is_number_unsigned()) throw InvalidArgument("config: 'map.spacing' must be null or an integer");
      c.bspline.spacing = sp->get<std::size_t>();
    }
    if (const json* f = s.child("felz")) {
      Section fs(*f, "map.felz");
      fs.read_number("k", c.felz.k);
      fs.read_count("min_size", c.felz.min_size);
      fs.read_number("sigma", c.felz.sigma);
      fs.finish();
    }
    s.finish();
  }
  root.read("ipa_enabled", c.ipa_enabled);
  root.read_count("max_resamples", c.max_resamples);
  if (const json* seed = root.child("seed")) {
    if (!seed->is_number_unsigned()) throw InvalidArgument("config: 'seed' must be a non-negative integer");
    c.seed = seed->get<std::uint64_t>();
  }
  root.finish();
  c.validate();
  return c;
}

PipelineConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: invalid JSON: ") + e.what(), e.byte);
  }
  return config_from_json(j);
}

PipelineConfig load_config(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  try {
    return parse_config(std::string(bytes.begin(), bytes.end()));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.offset());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

json to_json(const PipelineConfig& c) {
  const auto& v = c.conventional;
  json augment = {{"p_affine", v.p_affine},
                  {"rotation_deg", v.rotation_deg},
                  {"scale_min", v.scale_min},
                  {"scale_max", v.scale_max},
                  {"translate_frac", v.translate_frac},
                  {"p_elastic", v.p_elastic},
                  {"elastic_magnitude", v.elastic_magnitude},
                  {"elastic_spacing", v.elastic_spacing ? json(*v.elastic_spacing) : json(nullptr)},
                  {"p_brightness_contrast", v.p_brightness_contrast},
                  {"contrast_min", v.contrast_min},
                  {"contrast_max", v.contrast_max},
                  {"brightness_range", v.brightness_range},
                  {"p_gamma", v.p_gamma},
                  {"gamma_min", v.gamma_min},
                  {"gamma_max", v.gamma_max},
                  {"p_noise", v.p_noise},
                  {"noise_sigma", v.noise_sigma}};
  const auto& p = c.preprocess;
  json preprocess = {
      {"window", p.window ? json::array({p.window->first, p.window->second}) : json(nullptr)},
      {"clip_top_percent", p.clip_top_percent},
      {"normalize", p.normalize},
      {"target_size", json::array({p.target_h, p.target_w})},
      {"augment", augment}};
  return {{"preprocess", preprocess},
          {"gin",
           {{"n_layers", c.gin.n_layers},
            {"hidden_channels", c.gin.hidden_channels},
            {"kernel_size", c.gin.kernel_size},
            {"leaky_slope", c.gin.leaky_slope}}},
          {"map",
           {{"map_kind", to_string(c.map_kind)},
            {"spacing", c.bspline.spacing ? json(*c.bspline.spacing) : json(nullptr)},
            {"felz", {{"k", c.felz.k}, {"min_size", c.felz.min_size}, {"sigma", c.felz.sigma}}}}},
          {"ipa_enabled", c.ipa_enabled},
          {"max_resamples", c.max_resamples},
          {"seed", c.seed}};
}

std::string canonical_json(const json& j) { return j.dump(); }

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error("sha256: digest computation failed");
  }
  std::string hex;
  hex.reserve(2 * len);
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

std::string config_hash(const PipelineConfig& config) { return sha256_hex(canonical_json(to_json(config))); }

bool verify_sidecar(const json& sidecar) {
  if (!sidecar.is_object() || !sidecar.contains("config") || !sidecar.contains("config_hash")) return false;
  if (!sidecar["config_hash"].is_string()) return false;
  return sha256_hex(canonical_json(sidecar["config"])) == sidecar["config_hash"].get<std::string>();
}

}  // namespace causaug
