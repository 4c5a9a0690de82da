#include "sflick/config.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

namespace sflick {
namespace {

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& why) {
  throw Error(ErrorCode::config, "config key '" + key + "': invalid value '" + value + "' (" + why + ")");
}

template <typename T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end) bad_value(key, v, "expected an integer");
  return out;
}

double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto* end = v.data() + v.size();
  const auto [ptr, ec] = std::from_chars(v.data(), end, out);
  if (ec != std::errc{} || ptr != end || !std::isfinite(out)) bad_value(key, v, "expected a finite number");
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "expected true or false");
}

std::string real_str(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Entry {
  ConfigKey key;
  std::function<void(PipelineConfig&, const std::string&)> set;
  std::function<std::string(const PipelineConfig&)> get;
};

#define SFLICK_INT_KEY(NAME, RANGE, HELP, TYPE, FIELD, CHECK)                              \
  Entry {                                                                                  \
    {NAME, RANGE, HELP}, [](PipelineConfig& c, const std::string& v) {                     \
      const TYPE x = parse_integer<TYPE>(NAME, v);                                          \
      if (!(CHECK)) bad_value(NAME, v, "allowed range " RANGE);                            \
      c.FIELD = x;                                                                         \
    },                                                                                     \
        [](const PipelineConfig& c) { return std::to_string(c.FIELD); }                     \
  }

#define SFLICK_REAL_KEY(NAME, RANGE, HELP, FIELD, CHECK)                                   \
  Entry {                                                                                  \
    {NAME, RANGE, HELP}, [](PipelineConfig& c, const std::string& v) {                     \
      const double x = parse_real(NAME, v);                                                \
      if (!(CHECK)) bad_value(NAME, v, "allowed range " RANGE);                            \
      c.FIELD = x;                                                                         \
    },                                                                                     \
        [](const PipelineConfig& c) { return real_str(c.FIELD); }                           \
  }

#define SFLICK_BOOL_KEY(NAME, HELP, FIELD)                                                 \
  Entry {                                                                                  \
    {NAME, "true|false", HELP}, [](PipelineConfig& c, const std::string& v) {              \
      c.FIELD = parse_bool(NAME, v);                                                       \
    },                                                                                     \
        [](const PipelineConfig& c) { return std::string(c.FIELD ? "true" : "false"); }     \
  }

const std::vector<Entry>& entries() {
  static const std::vector<Entry> table = {
      SFLICK_INT_KEY("image_size", "[16, 8192]", "phantom and reconstruction grid, pixels per side", int,
                     geometry.image_size, x >= 16 && x <= 8192),
      SFLICK_REAL_KEY("pixel_spacing", "(0, inf)", "image pixel size in mm", geometry.pixel_spacing, x > 0.0),
      SFLICK_INT_KEY("n_views", "[2, 100000], even", "projection views over 360 degrees", int, geometry.n_views,
                     x >= 2 && x <= 100000 && x % 2 == 0),
      SFLICK_INT_KEY("n_dets", "[1, 100000]", "detector bins", int, geometry.n_dets, x >= 1 && x <= 100000),
      SFLICK_REAL_KEY("det_spacing", "(0, inf)", "detector bin width in mm", geometry.det_spacing, x > 0.0),
      SFLICK_REAL_KEY("mu_water", "(0, inf)", "water attenuation in 1/mm (sets 0 HU)", mu_water, x > 0.0),
      Entry{{"phantom_table", "path or empty", "ellipse table file; empty uses the built-in modified Shepp-Logan"},
            [](PipelineConfig& c, const std::string& v) { c.phantom_table = v; },
            [](const PipelineConfig& c) { return c.phantom_table; }},
      SFLICK_REAL_KEY("i0", "(0, inf)", "expected photons per ray", noise.i0, x > 0.0),
      SFLICK_REAL_KEY("count_floor", "[1, inf)", "photon count floor before the log", noise.count_floor, x >= 1.0),
      SFLICK_INT_KEY("noise_seed", "[0, 2^64)", "seed of the Poisson noise realization", std::uint64_t, noise.seed,
                     true),
      SFLICK_BOOL_KEY("noise_per_row_streams", "draw noise from one derived stream per view", noise.per_row_streams),
      SFLICK_INT_KEY("flick_draws", "[0, 2^64)", "conjugate-pair toggle draws per flicked copy", std::uint64_t,
                     denoise.flick_draws, true),
      SFLICK_INT_KEY("seed", "[0, 2^64)", "denoising seed (flick plans and network init)", std::uint64_t,
                     denoise.seed, true),
      SFLICK_INT_KEY("channels", "[1, 512]", "hidden channels of the denoiser", int, denoise.channels,
                     x >= 1 && x <= 512),
      SFLICK_REAL_KEY("alpha", "[0, inf)", "weight of the consistency loss term", denoise.loss.alpha, x >= 0.0),
      SFLICK_REAL_KEY("learning_rate", "(0, inf)", "Adam base learning rate", denoise.adam.lr, x > 0.0),
      SFLICK_INT_KEY("lr_halve_every", "[0, 2^31)", "halve the learning rate every n steps (0 = never)", int,
                     denoise.adam.halve_every, x >= 0),
      SFLICK_INT_KEY("train_steps", "[0, 2^31)", "full-sinogram Adam steps per pass", int, denoise.train_steps, x >= 0),
      SFLICK_INT_KEY("passes", "[1, 16]", "denoising passes, each on the previous output", int, denoise.passes,
                     x >= 1 && x <= 16),
      SFLICK_INT_KEY("reflick_every", "[0, 2^31)", "draw a new flick plan every n steps (0 = fixed pair)", int,
                     denoise.reflick_every, x >= 0),
      SFLICK_BOOL_KEY("independent_pair", "train on two flicked copies instead of (original, flicked)",
                      denoise.independent_pair),
      SFLICK_INT_KEY("sart_iterations", "[1, 10000]", "SART sweeps over all views", int, sart.iterations,
                     x >= 1 && x <= 10000),
      SFLICK_REAL_KEY("sart_relaxation", "(0, 2]", "SART relaxation factor", sart.relaxation, x > 0.0 && x <= 2.0),
      SFLICK_BOOL_KEY("sart_nonneg", "clamp the SART image at 0 after each view", sart.nonneg),
      SFLICK_REAL_KEY("sart_epsilon", "(0, inf)", "guard for SART normalization divisions", sart.epsilon, x > 0.0),
      Entry{{"output_dir", "path", "directory for artifacts, report and manifest"},
            [](PipelineConfig& c, const std::string& v) {
              if (v.empty()) bad_value("output_dir", v, "must not be empty");
              c.output_dir = v;
            },
            [](const PipelineConfig& c) { return c.output_dir.string(); }},
  };
  return table;
}

#undef SFLICK_INT_KEY
#undef SFLICK_REAL_KEY
#undef SFLICK_BOOL_KEY

const Entry& find(const std::string& key) {
  for (const auto& e : entries())
    if (e.key.name == key) return e;
  throw Error(ErrorCode::config, "unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

void set_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  find(key).set(cfg, value);
}

std::string get_config_value(const PipelineConfig& cfg, const std::string& key) { return find(key).get(cfg); }

PipelineConfig parse_config(std::istream& in, PipelineConfig base) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw Error(ErrorCode::config, "config line " + std::to_string(lineno) + ": expected 'key = value'");
    set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  try {
    base.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::config, e.what());
  }
  return base;
}

PipelineConfig load_config(const std::filesystem::path& path, PipelineConfig base) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::io, "cannot open config " + path.string());
  return parse_config(in, std::move(base));
}

std::string format_config(const PipelineConfig& cfg) {
  std::string s;
  for (const auto& e : entries()) s += e.key.name + " = " + e.get(cfg) + "\n";
  return s;
}

std::string config_help() {
  const PipelineConfig defaults;
  std::string s;
  for (const auto& e : entries()) {
    std::string shown = e.get(defaults);
    double v = 0.0;
    const auto* end = shown.data() + shown.size();
    if (const auto [ptr, ec] = std::from_chars(shown.data(), end, v); ec == std::errc{} && ptr == end) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.6g", v);
      shown = buf;
    }
    if (shown.empty()) shown = "\"\"";
    char line[256];
    std::snprintf(line, sizeof line, "  %-22s default %-12s range %-20s %s\n", e.key.name.c_str(), shown.c_str(),
                  e.key.range.c_str(), e.key.help.c_str());
    s += line;
  }
  return s;
}

}  // namespace sflick
