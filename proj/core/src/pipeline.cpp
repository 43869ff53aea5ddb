#include "vocalfit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>

#include "vocalfit/error.hpp"
#include "vocalfit/parallel.hpp"
#include "vocalfit/wav.hpp"

namespace vocalfit {

namespace fs = std::filesystem;

bool formant_postfilter(const FormantPoint& fp, const FormantRange& r) noexcept {
  return fp.f1_hz >= r.f1_min_hz && fp.f1_hz <= r.f1_max_hz && fp.f2_hz >= r.f2_min_hz &&
         fp.f2_hz <= r.f2_max_hz;
}

namespace {

nlohmann::json range_to_json(const FormantRange& r) {
  return {{"f1_min_hz", r.f1_min_hz},
          {"f1_max_hz", r.f1_max_hz},
          {"f2_min_hz", r.f2_min_hz},
          {"f2_max_hz", r.f2_max_hz}};
}

FormantRange range_from_json(const nlohmann::json& j) {
  return {j.at("f1_min_hz").get<double>(), j.at("f1_max_hz").get<double>(),
          j.at("f2_min_hz").get<double>(), j.at("f2_max_hz").get<double>()};
}

std::string wav_name(const VocalTractShape& s) {
  return "wav/r" + std::to_string(s.run_id) + "_s" + std::to_string(s.step_id) + ".wav";
}

void validate(const CampaignConfig& c) {
  if (c.runs < 1) throw Error(Errc::ConfigError, "runs must be at least 1");
  if (c.steps < 0) throw Error(Errc::ConfigError, "steps must be non-negative");
  if (!c.ranges.for_model(c.model).valid()) {
    throw Error(Errc::ConfigError, "formant range minimums must be below maximums");
  }
  if (!(c.ranges.child_scale >= 1.0)) {
    throw Error(Errc::ConfigError, "child range scale must be at least 1");
  }
  if (!(c.tract.closure_threshold_cm2 >= 0.0)) {
    throw Error(Errc::ConfigError, "closure threshold must be non-negative");
  }
  if (!(c.synthesis.sample_rate_hz >= 2.0 * 10000.0)) {
    throw Error(Errc::ConfigError, "sample rate must be at least 20 kHz");
  }
  if (c.out_dir.empty()) throw Error(Errc::ConfigError, "output directory is required");
}

}  // namespace

nlohmann::json to_json(const DatasetSummary& s) {
  return {{"model", to_string(s.model)},
          {"runs", s.runs},
          {"steps", s.steps},
          {"seed", s.seed},
          {"sample_rate_hz", s.sample_rate_hz},
          {"range", range_to_json(s.range)},
          {"attempted", s.attempted},
          {"pass_prefilter", s.pass_prefilter},
          {"pass_formant", s.pass_formant},
          {"retained", s.retained},
          {"retention_pct", s.retention_pct},
          {"failures",
           {{"transfer", s.failed_transfer},
            {"peaks", s.failed_peaks},
            {"range", s.failed_range},
            {"low_frequency", s.failed_low_frequency}}}};
}

DatasetSummary summary_from_json(const nlohmann::json& j) {
  try {
    DatasetSummary s;
    s.model = model_from_string(j.at("model").get<std::string>());
    s.runs = j.at("runs").get<int>();
    s.steps = j.at("steps").get<int>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.sample_rate_hz = j.at("sample_rate_hz").get<double>();
    s.range = range_from_json(j.at("range"));
    s.attempted = j.at("attempted").get<std::size_t>();
    s.pass_prefilter = j.at("pass_prefilter").get<std::size_t>();
    s.pass_formant = j.at("pass_formant").get<std::size_t>();
    s.retained = j.at("retained").get<std::size_t>();
    s.retention_pct = j.at("retention_pct").get<double>();
    if (auto it = j.find("failures"); it != j.end()) {
      s.failed_transfer = it->value("transfer", std::size_t{0});
      s.failed_peaks = it->value("peaks", std::size_t{0});
      s.failed_range = it->value("range", std::size_t{0});
      s.failed_low_frequency = it->value("low_frequency", std::size_t{0});
    }
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("summary.json: ") + e.what());
  }
}

CandidateRecord process_candidate(const VocalTractShape& shape, const CampaignConfig& config,
                                  std::vector<double>* audio) {
  CandidateRecord rec;
  rec.shape = shape;
  const AreaFunction area = shape_to_area(shape, config.tract);
  if (!prefilter_shape(area, config.tract)) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "prefilter: min area %.4g cm^2 at section %zu",
                  area.min_area_cm2(), area.min_area_index());
    rec.failure = msg;
    return rec;
  }
  rec.pass.prefilter = true;

  TransferFunction tf;
  try {
    tf = transfer_function(area, config.acoustics);
    rec.formants = pick_formants(tf, config.acoustics);
  } catch (const Error& e) {
    rec.failure = e.what();
    return rec;
  }
  rec.pass.formants = true;

  if (!formant_postfilter(*rec.formants, config.ranges.for_model(shape.model))) {
    char msg[96];
    std::snprintf(msg, sizeof msg, "range: F1 %.1f Hz, F2 %.1f Hz", rec.formants->f1_hz,
                  rec.formants->f2_hz);
    rec.failure = msg;
    return rec;
  }
  rec.pass.formant_range = true;

  const auto& syn = config.synthesis;
  std::vector<double> wave;
  try {
    wave = synthesize_vowel(tf, syn.f0_for(shape.model), syn.duration_s, syn.sample_rate_hz, syn);
  } catch (const Error& e) {
    rec.failure = std::string("synthesis: ") + e.what();
    return rec;
  }
  rec.pass.synthesized = true;
  rec.wav = wav_name(shape);

  if (!low_frequency_energy_ok(wave, syn.sample_rate_hz, config.low_frequency)) {
    rec.failure = "low_frequency: insufficient energy below cutoff";
  } else {
    rec.pass.low_frequency = true;
  }
  if (audio) *audio = std::move(wave);
  return rec;
}

DatasetSummary run_campaign(const CampaignConfig& config) {
  validate(config);
  std::error_code ec;
  fs::create_directories(config.out_dir / "wav", ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + config.out_dir.string() + ": " + ec.message());

  std::ofstream dataset(config.out_dir / "dataset.jsonl", std::ios::trunc);
  if (!dataset) throw Error(Errc::IoError, "cannot write dataset.jsonl");
  std::ofstream shapes_out;
  if (config.write_shapes) {
    shapes_out.open(config.out_dir / "shapes.jsonl", std::ios::trunc);
    if (!shapes_out) throw Error(Errc::IoError, "cannot write shapes.jsonl");
  }

  DatasetSummary s;
  s.model = config.model;
  s.runs = config.runs;
  s.steps = config.steps;
  s.seed = config.seed;
  s.sample_rate_hz = config.synthesis.sample_rate_hz;
  s.range = config.ranges.for_model(config.model);

  constexpr std::size_t kChunk = 512;
  for (int run = 0; run < config.runs; ++run) {
    const auto shapes = sample_run(config.model, run, config.steps, config.seed, config.tract);
    for (std::size_t begin = 0; begin < shapes.size(); begin += kChunk) {
      const std::size_t count = std::min(kChunk, shapes.size() - begin);
      std::vector<CandidateRecord> records(count);
      parallel_for(count, config.jobs, [&](std::size_t i) {
        std::vector<double> audio;
        records[i] = process_candidate(shapes[begin + i], config, &audio);
        if (records[i].pass.retained()) {
          write_wav(config.out_dir / records[i].wav, audio, config.synthesis.sample_rate_hz);
        }
      });

      for (const auto& rec : records) {
        ++s.attempted;
        if (config.write_shapes) shapes_out << shape_to_json(rec.shape).dump() << '\n';
        if (!rec.pass.prefilter) continue;
        ++s.pass_prefilter;
        if (!rec.pass.formants) {
          if (rec.failure.rfind("TooFewPeaks", 0) == 0) {
            ++s.failed_peaks;
          } else {
            ++s.failed_transfer;
          }
          continue;
        }
        if (!rec.pass.formant_range) {
          ++s.failed_range;
          continue;
        }
        ++s.pass_formant;
        if (!rec.pass.retained()) {
          ++s.failed_low_frequency;
          continue;
        }
        ++s.retained;
        DatasetRow row{rec.shape.run_id, rec.shape.step_id, rec.shape.params, *rec.formants,
                       rec.wav};
        dataset << to_json(row).dump() << '\n';
      }
    }
  }
  s.retention_pct = s.attempted == 0 ? 0.0 : 100.0 * s.retained / s.attempted;

  dataset.flush();
  if (!dataset) throw Error(Errc::IoError, "failed writing dataset.jsonl");
  if (config.write_shapes) {
    shapes_out.flush();
    if (!shapes_out) throw Error(Errc::IoError, "failed writing shapes.jsonl");
  }
  std::ofstream summary(config.out_dir / "summary.json", std::ios::trunc);
  summary << to_json(s).dump(2) << '\n';
  if (!summary) throw Error(Errc::IoError, "failed writing summary.json");
  return s;
}

nlohmann::json to_json(const DatasetRow& r) {
  return {{"run_id", r.run_id},   {"step_id", r.step_id}, {"params", r.params},
          {"f1_hz", r.formants.f1_hz}, {"f2_hz", r.formants.f2_hz}, {"wav", r.wav}};
}

DatasetRow dataset_row_from_json(const nlohmann::json& j) {
  try {
    DatasetRow r;
    r.run_id = j.at("run_id").get<int>();
    r.step_id = j.at("step_id").get<int>();
    const auto& p = j.at("params");
    if (!p.is_array() || p.size() != kNumParams) {
      throw Error(Errc::SchemaError, "params must hold 8 numbers");
    }
    for (std::size_t i = 0; i < kNumParams; ++i) r.params[i] = p[i].get<double>();
    r.formants = {j.at("f1_hz").get<double>(), j.at("f2_hz").get<double>()};
    r.wav = j.at("wav").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("dataset row: ") + e.what());
  }
}

Dataset load_dataset(const fs::path& dir) {
  Dataset d;
  d.dir = fs::absolute(dir);
  std::ifstream sf(dir / "summary.json");
  if (!sf) throw Error(Errc::IoError, "no summary.json in " + dir.string());
  try {
    d.summary = summary_from_json(nlohmann::json::parse(sf));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::SchemaError, std::string("summary.json: ") + e.what());
  }

  std::ifstream df(dir / "dataset.jsonl");
  if (!df) throw Error(Errc::IoError, "no dataset.jsonl in " + dir.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(df, line)) {
    ++lineno;
    if (line.empty()) continue;
    DatasetRow row;
    try {
      row = dataset_row_from_json(nlohmann::json::parse(line));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaError, "dataset.jsonl line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!formant_postfilter(row.formants, d.summary.range)) {
      throw Error(Errc::SchemaError, "dataset.jsonl line " + std::to_string(lineno) +
                                         ": formants outside the recorded range");
    }
    d.rows.push_back(std::move(row));
  }
  return d;
}

}  // namespace vocalfit
