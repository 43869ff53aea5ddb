#include "vocalfit/config.hpp"

#include <fstream>
#include <nlohmann/json.hpp>

#include "vocalfit/error.hpp"

namespace vocalfit {

using nlohmann::json;

std::string_view version() noexcept { return VOCALFIT_VERSION_STRING; }

namespace {

json range_json(const FormantRange& r) {
  return {{"f1_min_hz", r.f1_min_hz},
          {"f1_max_hz", r.f1_max_hz},
          {"f2_min_hz", r.f2_min_hz},
          {"f2_max_hz", r.f2_max_hz}};
}

// Every key of `given` must exist in `schema` with a compatible type.
void check_keys(const json& given, const json& schema, const std::string& path) {
  if (!given.is_object()) throw Error(Errc::ConfigError, (path.empty() ? "config" : path) + " must be an object");
  for (const auto& [key, value] : given.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (path.empty() && key == "schema_version") continue;
    const auto it = schema.find(key);
    if (it == schema.end()) throw Error(Errc::ConfigError, "unknown key '" + where + "'");
    const json& expect = *it;
    bool ok;
    if (expect.is_object()) {
      check_keys(value, expect, where);
      ok = true;
    } else if (expect.is_boolean()) {
      ok = value.is_boolean();
    } else if (expect.is_number_integer() || expect.is_number_unsigned()) {
      ok = value.is_number_integer() || value.is_number_unsigned() ||
           (value.is_number_float() && value.get<double>() == static_cast<double>(value.get<long long>()));
    } else if (expect.is_number()) {
      ok = value.is_number();
    } else if (expect.is_string()) {
      ok = value.is_string();
    } else if (expect.is_array()) {
      ok = value.is_array() && std::all_of(value.begin(), value.end(), [](const json& e) { return e.is_string(); });
    } else {
      ok = false;
    }
    if (!ok) throw Error(Errc::ConfigError, "wrong type for '" + where + "'");
  }
}

void merge_into(json& base, const json& patch) {
  for (const auto& [key, value] : patch.items()) {
    if (value.is_object() && base.contains(key) && base[key].is_object()) {
      merge_into(base[key], value);
    } else {
      base[key] = value;
    }
  }
}

template <class T>
T get(const json& j, const char* section, const char* key) {
  try {
    return j.at(section).at(key).get<T>();
  } catch (const json::exception&) {
    throw Error(Errc::ConfigError, std::string("bad value for '") + section + "." + key + "'");
  }
}

std::string_view to_string(SamplingMode m) { return m == SamplingMode::Uniform ? "uniform" : "walk"; }
std::string_view to_string(Radiation r) { return r == Radiation::Ideal ? "ideal" : "baffle"; }
std::string_view to_string(LogBase b) { return b == LogBase::Ten ? "10" : "e"; }
std::string_view to_string(Comparison c) {
  return c == Comparison::Framewise ? "framewise" : "time_average";
}

}  // namespace

json to_json(const HarnessConfig& c) {
  const auto& t = c.tract;
  const auto& a = c.acoustics;
  const auto& s = c.synthesis;
  const auto& f = c.features;
  json pairs = json::array();
  for (const auto& p : c.mushra.pairs) pairs.push_back(p);
  return {
      {"schema_version", kConfigSchemaVersion},
      {"tract",
       {{"child_length_scale", t.child_length_scale},
        {"child_area_scale", t.child_area_scale},
        {"closure_threshold_cm2", t.closure_threshold_cm2},
        {"walk_sigma", t.walk_sigma},
        {"sampling", to_string(t.sampling)}}},
      {"acoustics",
       {{"sound_speed_cm_s", a.sound_speed_cm_s},
        {"air_density_g_cm3", a.air_density_g_cm3},
        {"wall_loss", a.wall_loss},
        {"wall_bandwidth_hz", a.wall_bandwidth_hz},
        {"radiation", to_string(a.radiation)},
        {"df_hz", a.df_hz},
        {"f_max_hz", a.f_max_hz},
        {"formant_search_max_hz", a.formant_search_max_hz},
        {"peak_prominence_db", a.peak_prominence_db},
        {"closure_threshold_cm2", a.closure_threshold_cm2}}},
      {"synthesis",
       {{"sample_rate_hz", s.sample_rate_hz},
        {"duration_s", s.duration_s},
        {"f0_adult_hz", s.f0_adult_hz},
        {"f0_child_hz", s.f0_child_hz},
        {"source_corner_hz", s.source_corner_hz},
        {"peak_level", s.peak_level},
        {"fir_length", s.fir_length}}},
      {"low_frequency", {{"cutoff_hz", c.low_frequency.cutoff_hz}, {"min_ratio", c.low_frequency.min_ratio}}},
      {"ranges", {{"adult", range_json(c.ranges.adult)}, {"child_scale", c.ranges.child_scale}}},
      {"campaign",
       {{"model", to_string(c.campaign.model)},
        {"runs", c.campaign.runs},
        {"steps", c.campaign.steps},
        {"seed", c.campaign.seed},
        {"write_shapes", c.campaign.write_shapes}}},
      {"features",
       {{"window", f.window},
        {"hop", f.hop},
        {"n_fft", f.n_fft},
        {"n_mels", f.n_mels},
        {"f_min_hz", f.f_min_hz},
        {"f_max_hz", f.f_max_hz},
        {"preemphasis", f.preemphasis},
        {"lifter", f.lifter},
        {"log_floor", f.log_floor},
        {"include_c0", f.include_c0},
        {"log_base", to_string(f.log_base)}}},
      {"comparison", to_string(c.comparison)},
      {"targets",
       {{"length_scale", c.targets.length_scale},
        {"renditions", c.targets.renditions},
        {"perturbation", c.targets.perturbation},
        {"seed", c.targets.seed},
        {"f0_hz", c.targets.f0_hz}}},
      {"surface", {{"bins", c.surface.bins}, {"lo", c.surface.lo}, {"hi", c.surface.hi}}},
      {"mushra", {{"seed", c.mushra.seed}, {"clip_upper", c.mushra.clip_upper}, {"pairs", pairs}}},
      {"jobs", c.jobs},
  };
}

HarnessConfig config_from_json(const json& given) {
  const json defaults = to_json(HarnessConfig{});
  check_keys(given, defaults, "");
  if (given.contains("schema_version") &&
      (!given["schema_version"].is_number_integer() || given["schema_version"].get<int>() != kConfigSchemaVersion)) {
    throw Error(Errc::ConfigError, "unsupported schema_version");
  }
  json j = defaults;
  merge_into(j, given);

  HarnessConfig c;
  auto& t = c.tract;
  t.child_length_scale = get<double>(j, "tract", "child_length_scale");
  t.child_area_scale = get<double>(j, "tract", "child_area_scale");
  t.closure_threshold_cm2 = get<double>(j, "tract", "closure_threshold_cm2");
  t.walk_sigma = get<double>(j, "tract", "walk_sigma");
  const auto sampling = get<std::string>(j, "tract", "sampling");
  if (sampling != "walk" && sampling != "uniform") {
    throw Error(Errc::ConfigError, "tract.sampling must be 'walk' or 'uniform'");
  }
  t.sampling = sampling == "uniform" ? SamplingMode::Uniform : SamplingMode::RandomWalk;

  auto& a = c.acoustics;
  a.sound_speed_cm_s = get<double>(j, "acoustics", "sound_speed_cm_s");
  a.air_density_g_cm3 = get<double>(j, "acoustics", "air_density_g_cm3");
  a.wall_loss = get<bool>(j, "acoustics", "wall_loss");
  a.wall_bandwidth_hz = get<double>(j, "acoustics", "wall_bandwidth_hz");
  const auto radiation = get<std::string>(j, "acoustics", "radiation");
  if (radiation != "baffle" && radiation != "ideal") {
    throw Error(Errc::ConfigError, "acoustics.radiation must be 'baffle' or 'ideal'");
  }
  a.radiation = radiation == "ideal" ? Radiation::Ideal : Radiation::Baffle;
  a.df_hz = get<double>(j, "acoustics", "df_hz");
  a.f_max_hz = get<double>(j, "acoustics", "f_max_hz");
  a.formant_search_max_hz = get<double>(j, "acoustics", "formant_search_max_hz");
  a.peak_prominence_db = get<double>(j, "acoustics", "peak_prominence_db");
  a.closure_threshold_cm2 = get<double>(j, "acoustics", "closure_threshold_cm2");

  auto& s = c.synthesis;
  s.sample_rate_hz = get<double>(j, "synthesis", "sample_rate_hz");
  s.duration_s = get<double>(j, "synthesis", "duration_s");
  s.f0_adult_hz = get<double>(j, "synthesis", "f0_adult_hz");
  s.f0_child_hz = get<double>(j, "synthesis", "f0_child_hz");
  s.source_corner_hz = get<double>(j, "synthesis", "source_corner_hz");
  s.peak_level = get<double>(j, "synthesis", "peak_level");
  s.fir_length = get<int>(j, "synthesis", "fir_length");

  c.low_frequency.cutoff_hz = get<double>(j, "low_frequency", "cutoff_hz");
  c.low_frequency.min_ratio = get<double>(j, "low_frequency", "min_ratio");

  const auto& adult = j.at("ranges").at("adult");
  c.ranges.adult = {adult.at("f1_min_hz").get<double>(), adult.at("f1_max_hz").get<double>(),
                    adult.at("f2_min_hz").get<double>(), adult.at("f2_max_hz").get<double>()};
  c.ranges.child_scale = get<double>(j, "ranges", "child_scale");

  try {
    c.campaign.model = model_from_string(get<std::string>(j, "campaign", "model"));
  } catch (const Error&) {
    throw Error(Errc::ConfigError, "campaign.model must be 'adult' or 'child'");
  }
  c.campaign.runs = get<int>(j, "campaign", "runs");
  c.campaign.steps = get<int>(j, "campaign", "steps");
  c.campaign.seed = get<std::uint64_t>(j, "campaign", "seed");
  c.campaign.write_shapes = get<bool>(j, "campaign", "write_shapes");

  auto& f = c.features;
  f.window = get<int>(j, "features", "window");
  f.hop = get<int>(j, "features", "hop");
  f.n_fft = get<int>(j, "features", "n_fft");
  f.n_mels = get<int>(j, "features", "n_mels");
  f.f_min_hz = get<double>(j, "features", "f_min_hz");
  f.f_max_hz = get<double>(j, "features", "f_max_hz");
  f.preemphasis = get<double>(j, "features", "preemphasis");
  f.lifter = get<double>(j, "features", "lifter");
  f.log_floor = get<double>(j, "features", "log_floor");
  f.include_c0 = get<bool>(j, "features", "include_c0");
  const auto base = get<std::string>(j, "features", "log_base");
  if (base != "e" && base != "10") throw Error(Errc::ConfigError, "features.log_base must be 'e' or '10'");
  f.log_base = base == "10" ? LogBase::Ten : LogBase::Natural;

  const auto comparison = j.at("comparison").get<std::string>();
  if (comparison != "time_average" && comparison != "framewise") {
    throw Error(Errc::ConfigError, "comparison must be 'time_average' or 'framewise'");
  }
  c.comparison = comparison == "framewise" ? Comparison::Framewise : Comparison::TimeAverage;

  c.targets.length_scale = get<double>(j, "targets", "length_scale");
  c.targets.renditions = get<int>(j, "targets", "renditions");
  c.targets.perturbation = get<double>(j, "targets", "perturbation");
  c.targets.seed = get<std::uint64_t>(j, "targets", "seed");
  c.targets.f0_hz = get<double>(j, "targets", "f0_hz");

  c.surface.bins = get<int>(j, "surface", "bins");
  c.surface.lo = get<double>(j, "surface", "lo");
  c.surface.hi = get<double>(j, "surface", "hi");

  c.mushra.seed = get<std::uint64_t>(j, "mushra", "seed");
  c.mushra.clip_upper = get<bool>(j, "mushra", "clip_upper");
  c.mushra.pairs = get<std::vector<std::string>>(j, "mushra", "pairs");

  if (!j.at("jobs").is_number_unsigned() && !(j.at("jobs").is_number_integer() && j.at("jobs").get<long long>() >= 0)) {
    throw Error(Errc::ConfigError, "jobs must be a non-negative integer");
  }
  c.jobs = j.at("jobs").get<unsigned>();
  validate(c);
  return c;
}

void validate(const HarnessConfig& c) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(Errc::ConfigError, what);
  };
  require(c.tract.child_length_scale > 0.0 && c.tract.child_area_scale > 0.0,
          "tract scales must be positive");
  require(c.tract.closure_threshold_cm2 >= 0.0, "tract.closure_threshold_cm2 must be >= 0");
  require(c.tract.walk_sigma > 0.0, "tract.walk_sigma must be positive");
  require(c.acoustics.sound_speed_cm_s > 0.0 && c.acoustics.air_density_g_cm3 > 0.0,
          "acoustic constants must be positive");
  require(c.acoustics.df_hz > 0.0, "acoustics.df_hz must be positive");
  require(c.acoustics.f_max_hz >= 5000.0, "acoustics.f_max_hz must be at least 5000");
  require(c.acoustics.formant_search_max_hz > 0.0 &&
              c.acoustics.formant_search_max_hz <= c.acoustics.f_max_hz,
          "acoustics.formant_search_max_hz must lie in (0, f_max_hz]");
  require(c.acoustics.peak_prominence_db >= 0.0, "acoustics.peak_prominence_db must be >= 0");
  require(c.acoustics.wall_bandwidth_hz >= 0.0, "acoustics.wall_bandwidth_hz must be >= 0");
  require(c.synthesis.sample_rate_hz >= 2.0 * c.features.f_max_hz,
          "synthesis.sample_rate_hz must be at least twice features.f_max_hz");
  require(c.synthesis.duration_s > 0.0, "synthesis.duration_s must be positive");
  require(c.synthesis.f0_adult_hz >= 50.0 && c.synthesis.f0_adult_hz <= 500.0 &&
              c.synthesis.f0_child_hz >= 50.0 && c.synthesis.f0_child_hz <= 500.0,
          "f0 values must lie in [50, 500] Hz");
  require(c.synthesis.fir_length >= 16 && c.synthesis.fir_length % 2 == 0,
          "synthesis.fir_length must be even and >= 16");
  require(c.synthesis.peak_level > 0.0 && c.synthesis.peak_level <= 1.0,
          "synthesis.peak_level must lie in (0, 1]");
  require(c.low_frequency.cutoff_hz > 0.0 && c.low_frequency.min_ratio >= 0.0,
          "low_frequency settings must be positive");
  require(c.ranges.adult.valid(), "formant range minimums must be below maximums");
  require(c.ranges.child_scale >= 1.0, "ranges.child_scale must be >= 1");
  require(c.campaign.runs >= 1, "campaign.runs must be >= 1");
  require(c.campaign.steps >= 0, "campaign.steps must be >= 0");
  require(c.features.window >= 2 && c.features.hop >= 1 && c.features.n_fft >= c.features.window,
          "features framing must satisfy window >= 2, hop >= 1, n_fft >= window");
  require(c.features.n_mels >= 23, "features.n_mels must be >= 23 to hold 22 cepstra");
  require(c.features.f_max_hz > c.features.f_min_hz && c.features.f_min_hz >= 0.0,
          "features frequency range is empty");
  require(c.features.log_floor > 0.0, "features.log_floor must be positive");
  require(c.features.lifter >= 0.0, "features.lifter must be >= 0");
  require(c.targets.length_scale > 0.0 && c.targets.perturbation >= 0.0,
          "target speaker settings must be positive");
  require(c.targets.renditions >= 10, "targets.renditions must be >= 10");
  require(c.targets.f0_hz >= 50.0 && c.targets.f0_hz <= 500.0, "targets.f0_hz must lie in [50, 500]");
  require(c.surface.bins >= 2 && c.surface.hi > c.surface.lo, "surface grid is empty");
  for (const auto& p : c.mushra.pairs) {
    try {
      PairId::parse(p);
    } catch (const Error&) {
      throw Error(Errc::ConfigError, "mushra.pairs: unknown pair '" + p + "'");
    }
  }
}

HarnessConfig load_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::ConfigError, "cannot open config " + path.string());
  try {
    return config_from_json(json::parse(f));
  } catch (const json::parse_error& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
}

void apply_override(HarnessConfig& config, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw Error(Errc::ConfigError, "override must look like key=value");
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json patch = value;
  std::string_view rest = key;
  std::vector<std::string> parts;
  while (!rest.empty()) {
    const auto dot = rest.find('.');
    parts.emplace_back(rest.substr(0, dot));
    if (dot == std::string_view::npos) break;
    rest.remove_prefix(dot + 1);
  }
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) {
    if (it->empty()) throw Error(Errc::ConfigError, "empty key segment in '" + key + "'");
    patch = json{{*it, patch}};
  }
  json merged = to_json(config);
  check_keys(patch, merged, "");
  merge_into(merged, patch);
  config = config_from_json(merged);
}

CampaignConfig campaign_config(const HarnessConfig& c, const std::filesystem::path& out_dir) {
  CampaignConfig cc;
  cc.model = c.campaign.model;
  cc.runs = c.campaign.runs;
  cc.steps = c.campaign.steps;
  cc.seed = c.campaign.seed;
  cc.write_shapes = c.campaign.write_shapes;
  cc.tract = c.tract;
  cc.acoustics = c.acoustics;
  cc.synthesis = c.synthesis;
  cc.low_frequency = c.low_frequency;
  cc.ranges = c.ranges;
  cc.out_dir = out_dir;
  cc.jobs = c.jobs;
  return cc;
}

EvaluationOptions evaluation_options(const HarnessConfig& c) {
  return {c.features, c.comparison, c.jobs};
}

void write_config_echo(const HarnessConfig& config, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream f(dir / "config.json", std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write config.json in " + dir.string());
  f << to_json(config).dump(2) << '\n';
}

}  // namespace vocalfit
