#include "vocalfit/evaluation.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>

#include "vocalfit/error.hpp"
#include "vocalfit/parallel.hpp"
#include "vocalfit/wav.hpp"

namespace vocalfit {

namespace fs = std::filesystem;

std::string PairId::name() const { return variant.name() + "-" + std::string(to_string(metric)); }

PairId PairId::parse(std::string_view name) {
  const auto dash = name.rfind('-');
  if (dash == std::string_view::npos) {
    throw Error(Errc::InvalidArgument, "pair '" + std::string(name) + "' lacks a metric suffix");
  }
  return {FeatureVariant::parse(name.substr(0, dash)), metric_from_string(name.substr(dash + 1))};
}

std::vector<PairId> enumerate_pairs() {
  std::vector<PairId> out;
  for (const auto& v : enumerate_variants()) {
    for (Metric m : kAllMetrics) out.push_back({v, m});
  }
  return out;
}

nlohmann::json to_json(const OptimizationResult& r) {
  return {{"pair", r.pair.name()},
          {"variant", r.pair.variant.name()},
          {"metric", to_string(r.pair.metric)},
          {"model", to_string(r.model)},
          {"vowel", to_string(r.vowel)},
          {"run_id", r.run_id},
          {"best_step_id", r.best_step_id},
          {"best_wav", r.best_wav},
          {"f1_hz", r.best_formants.f1_hz},
          {"f2_hz", r.best_formants.f2_hz},
          {"feature_error", r.feature_error},
          {"candidate_z", {r.candidate_z.z1, r.candidate_z.z2}},
          {"target_z", {r.target_z.z1, r.target_z.z2}},
          {"formant_error_z", r.formant_error_z}};
}

OptimizationResult result_from_json(const nlohmann::json& j) {
  try {
    OptimizationResult r;
    r.pair = PairId::parse(j.at("pair").get<std::string>());
    r.model = model_from_string(j.at("model").get<std::string>());
    r.vowel = vowel_from_string(j.at("vowel").get<std::string>());
    r.run_id = j.at("run_id").get<int>();
    r.best_step_id = j.at("best_step_id").get<int>();
    r.best_wav = j.at("best_wav").get<std::string>();
    r.best_formants = {j.at("f1_hz").get<double>(), j.at("f2_hz").get<double>()};
    r.feature_error = j.at("feature_error").get<double>();
    const auto& cz = j.at("candidate_z");
    const auto& tz = j.at("target_z");
    r.candidate_z = {cz.at(0).get<double>(), cz.at(1).get<double>()};
    r.target_z = {tz.at(0).get<double>(), tz.at(1).get<double>()};
    r.formant_error_z = j.at("formant_error_z").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::SchemaError, std::string("result row: ") + e.what());
  }
}

void write_results_jsonl(const fs::path& path, std::span<const OptimizationResult> results) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
  for (const auto& r : results) f << to_json(r).dump() << '\n';
  if (!f) throw Error(Errc::IoError, "failed writing " + path.string());
}

std::vector<OptimizationResult> read_results_jsonl(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::vector<OptimizationResult> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      out.push_back(result_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(Errc::SchemaError, path.filename().string() + " line " +
                                         std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

namespace {

// Unnormalised features of one waveform for each requested variant. Log mel
// analysis is shared between variants with the same HF setting.
std::vector<FeatureMatrix> analyse(std::span<const double> audio, double sr,
                                   std::span<const FeatureVariant> variants,
                                   const FeatureOptions& fo) {
  std::optional<FeatureMatrix> lm[2];
  std::vector<FeatureMatrix> out;
  out.reserve(variants.size());
  for (const auto& v : variants) {
    auto& base = lm[v.hf_emphasis ? 1 : 0];
    if (!base) base = log_mel(audio, sr, v.hf_emphasis, fo);
    switch (v.base) {
      case BaseFeature::LogMel: out.push_back(*base); break;
      case BaseFeature::Mfcc12: out.push_back(mfcc_from_log_mel(*base, 12, fo)); break;
      case BaseFeature::Mfcc22: out.push_back(mfcc_from_log_mel(*base, 22, fo)); break;
    }
  }
  return out;
}

FeatureMatrix mean_frame(const FeatureMatrix& fm) {
  FeatureMatrix out;
  out.frames = 1;
  out.dims = fm.dims;
  out.values = reduce_static(fm);
  out.variant = fm.variant;
  return out;
}

}  // namespace

std::vector<FeatureBank> FeatureBank::build_many(const Dataset& dataset, const TargetSet& targets,
                                                 std::span<const FeatureVariant> variants,
                                                 const EvaluationOptions& options) {
  for (const auto& v : variants) {
    if (!v.valid()) throw Error(Errc::InvalidArgument, "invalid feature variant " + v.name());
  }
  const std::size_t nv = variants.size();
  const std::size_t nc = dataset.rows.size();
  const bool average = options.comparison == Comparison::TimeAverage;

  // Extraction never applies CMVN; the normalised variants are derived from
  // their plain counterparts once the pooled statistics are known.
  std::vector<FeatureVariant> raw(variants.begin(), variants.end());
  for (auto& v : raw) v.cmvn = false;

  std::vector<std::vector<FeatureMatrix>> cand(nc);
  std::vector<std::vector<CmvnAccumulator>> acc(nc);
  parallel_for(nc, options.jobs, [&](std::size_t i) {
    const auto wav = read_wav(dataset.audio_path(dataset.rows[i]));
    auto feats = analyse(wav.samples, wav.sample_rate_hz, raw, options.features);
    acc[i].resize(nv);
    for (std::size_t k = 0; k < nv; ++k) {
      if (variants[k].cmvn) acc[i][k].add(feats[k]);
      if (average) feats[k] = mean_frame(feats[k]);
    }
    cand[i] = std::move(feats);
  });

  std::vector<FeatureBank> banks(nv);
  for (std::size_t k = 0; k < nv; ++k) {
    auto& b = banks[k];
    b.variant_ = variants[k];
    b.comparison_ = options.comparison;
    if (variants[k].cmvn) {
      if (nc == 0) throw Error(Errc::EmptyCorpus, "CMVN needs a non-empty dataset");
      CmvnAccumulator total;
      for (std::size_t i = 0; i < nc; ++i) total.merge(acc[i][k]);
      b.cmvn_ = total.finish();
    }
    b.candidates_.reserve(nc);
    for (std::size_t i = 0; i < nc; ++i) {
      auto& fm = cand[i][k];
      b.candidates_.push_back(b.cmvn_ ? apply_cmvn(fm, *b.cmvn_) : std::move(fm));
    }
    b.targets_.resize(kAllVowels.size());
  }

  for (Vowel v : kAllVowels) {
    const auto& t = targets.get(v);
    auto feats = analyse(t.audio, t.sample_rate_hz, raw, options.features);
    for (std::size_t k = 0; k < nv; ++k) {
      auto fm = average ? mean_frame(feats[k]) : std::move(feats[k]);
      if (banks[k].cmvn_) fm = apply_cmvn(fm, *banks[k].cmvn_);
      banks[k].targets_[static_cast<std::size_t>(v)] = std::move(fm);
    }
  }
  return banks;
}

FeatureBank FeatureBank::build(const Dataset& dataset, const TargetSet& targets,
                               const FeatureVariant& variant, const EvaluationOptions& options) {
  return std::move(build_many(dataset, targets, std::span(&variant, 1), options).front());
}

double FeatureBank::error(std::size_t candidate, Vowel vowel, Metric metric) const {
  return compare(candidates_.at(candidate), targets_.at(static_cast<std::size_t>(vowel)), metric,
                 comparison_);
}

void FeatureBank::scale_targets(double factor) {
  for (auto& t : targets_) {
    for (double& v : t.values) v *= factor;
  }
}

SpeakerFormantStats dataset_formant_stats(const Dataset& dataset) {
  std::vector<FormantPoint> pts;
  pts.reserve(dataset.rows.size());
  for (const auto& r : dataset.rows) pts.push_back(r.formants);
  return SpeakerFormantStats::from_points(pts, StatsSource::ModelDataset);
}

std::vector<OptimizationResult> optimize_pair(const Dataset& dataset, const TargetSet& targets,
                                              const FeatureBank& bank, Metric metric,
                                              const SpeakerFormantStats& model_stats) {
  if (bank.size() != dataset.rows.size()) {
    throw Error(Errc::InvalidArgument, "feature bank was built for a different dataset");
  }
  const int runs = dataset.summary.runs;
  std::vector<std::vector<std::size_t>> split(static_cast<std::size_t>(std::max(runs, 0)));
  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const int r = dataset.rows[i].run_id;
    if (r < 0 || r >= runs) {
      throw Error(Errc::SchemaError, "row run_id " + std::to_string(r) + " outside summary runs");
    }
    split[static_cast<std::size_t>(r)].push_back(i);
  }
  for (int r = 0; r < runs; ++r) {
    auto& idx = split[static_cast<std::size_t>(r)];
    if (idx.empty()) throw Error(Errc::EmptyRun, "run " + std::to_string(r) + " has no candidates");
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      return dataset.rows[a].step_id < dataset.rows[b].step_id;
    });
  }
  if (runs < 1) throw Error(Errc::EmptyRun, "dataset has no runs");

  PairId pair{bank.variant(), metric};
  std::vector<OptimizationResult> out;
  out.reserve(kAllVowels.size() * static_cast<std::size_t>(runs));
  for (Vowel v : kAllVowels) {
    const auto& target = targets.get(v);
    const ZPoint tz = zscore_formants(target.formants, targets.stats);
    for (int r = 0; r < runs; ++r) {
      const auto& idx = split[static_cast<std::size_t>(r)];
      std::size_t best = idx.front();
      double best_err = bank.error(best, v, metric);
      for (std::size_t n = 1; n < idx.size(); ++n) {
        const double e = bank.error(idx[n], v, metric);
        if (e < best_err) {
          best_err = e;
          best = idx[n];
        }
      }
      const auto& row = dataset.rows[best];
      OptimizationResult res;
      res.pair = pair;
      res.model = dataset.summary.model;
      res.vowel = v;
      res.run_id = r;
      res.best_step_id = row.step_id;
      res.best_wav = dataset.audio_path(row).string();
      res.best_formants = row.formants;
      res.feature_error = best_err;
      res.candidate_z = zscore_formants(row.formants, model_stats);
      res.target_z = tz;
      res.formant_error_z = formant_error(res.candidate_z, tz);
      out.push_back(res);
    }
  }
  return out;
}

std::vector<OptimizationResult> optimize_pair(const Dataset& dataset, const TargetSet& targets,
                                              const FeatureVariant& variant, Metric metric,
                                              const EvaluationOptions& options) {
  const auto bank = FeatureBank::build(dataset, targets, variant, options);
  return optimize_pair(dataset, targets, bank, metric, dataset_formant_stats(dataset));
}

std::vector<OptimizationResult> evaluate_dataset(const Dataset& dataset, const TargetSet& targets,
                                                 std::span<const PairId> pairs,
                                                 const EvaluationOptions& options) {
  if (dataset.summary.runs < 1) throw Error(Errc::EmptyRun, "dataset has no runs");
  if (dataset.rows.empty()) throw Error(Errc::EmptyRun, "dataset has no retained candidates");
  for (Vowel v : kAllVowels) targets.get(v);

  std::vector<FeatureVariant> variants;
  for (const auto& p : pairs) {
    if (std::find(variants.begin(), variants.end(), p.variant) == variants.end()) {
      variants.push_back(p.variant);
    }
  }
  const auto banks = FeatureBank::build_many(dataset, targets, variants, options);
  const auto stats = dataset_formant_stats(dataset);

  std::vector<std::vector<OptimizationResult>> per_pair(pairs.size());
  parallel_for(pairs.size(), options.jobs, [&](std::size_t i) {
    const auto k = static_cast<std::size_t>(
        std::find(variants.begin(), variants.end(), pairs[i].variant) - variants.begin());
    per_pair[i] = optimize_pair(dataset, targets, banks[k], pairs[i].metric, stats);
  });
  std::vector<OptimizationResult> out;
  for (auto& v : per_pair) out.insert(out.end(), v.begin(), v.end());
  return out;
}

namespace {

struct Mean {
  double sum = 0.0;
  std::size_t n = 0;
  void add(double v) {
    sum += v;
    ++n;
  }
  double value() const { return n == 0 ? 0.0 : sum / static_cast<double>(n); }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  f << text;
  if (!f) throw Error(Errc::IoError, "failed writing " + path.string());
}

}  // namespace

ImpactReport aggregate_report(std::span<const OptimizationResult> results) {
  if (results.empty()) throw Error(Errc::IncompleteGrid, "no results; all 40 pairs missing");

  std::vector<Model> models;
  for (Model m : {Model::Adult, Model::Child}) {
    if (std::any_of(results.begin(), results.end(),
                    [m](const OptimizationResult& r) { return r.model == m; })) {
      models.push_back(m);
    }
  }

  std::string missing;
  for (Model m : models) {
    for (const auto& p : enumerate_pairs()) {
      const bool found = std::any_of(results.begin(), results.end(), [&](const OptimizationResult& r) {
        return r.model == m && r.pair == p;
      });
      if (!found) missing += (missing.empty() ? "" : ", ") + std::string(to_string(m)) + ":" + p.name();
    }
  }
  if (!missing.empty()) throw Error(Errc::IncompleteGrid, "missing pairs: " + missing);

  constexpr std::array<BaseFeature, 3> bases{BaseFeature::LogMel, BaseFeature::Mfcc12,
                                             BaseFeature::Mfcc22};
  ImpactReport report;
  for (Model m : models) {
    Mean hf_on_all, hf_off_all;
    for (BaseFeature b : bases) {
      Mean off, on;
      for (const auto& r : results) {
        if (r.model != m || r.pair.variant.base != b) continue;
        (r.pair.variant.hf_emphasis ? on : off).add(r.formant_error_z);
        (r.pair.variant.hf_emphasis ? hf_on_all : hf_off_all).add(r.formant_error_z);
      }
      report.hf_impact.push_back({m, b, off.value(), on.value(), off.n, on.n});
    }

    std::array<Mean, 4> per_metric;
    for (const auto& r : results) {
      if (r.model != m || r.pair.variant.hf_emphasis || r.pair.variant.cmvn) continue;
      per_metric[static_cast<std::size_t>(r.pair.metric)].add(r.formant_error_z);
    }
    for (Metric k : kAllMetrics) {
      const auto& mm = per_metric[static_cast<std::size_t>(k)];
      report.metric_impact.push_back({m, k, mm.value(), mm.n});
    }

    for (Vowel v : kAllVowels) {
      for (BaseFeature b : bases) {
        Mean mean;
        for (const auto& r : results) {
          if (r.model == m && r.vowel == v && r.pair.variant.base == b &&
              !r.pair.variant.hf_emphasis && !r.pair.variant.cmvn) {
            mean.add(r.formant_error_z);
          }
        }
        report.feature_impact.push_back({m, v, b, mean.value(), mean.n});
      }
    }

    const double mse = per_metric[static_cast<std::size_t>(Metric::Mse)].value();
    bool mse_smallest = true;
    for (Metric k : kAllMetrics) {
      if (k != Metric::Mse && per_metric[static_cast<std::size_t>(k)].value() < mse) {
        mse_smallest = false;
      }
    }
    report.annotations.push_back({m, hf_on_all.value() > hf_off_all.value(), mse_smallest});
  }
  return report;
}

nlohmann::json ImpactReport::to_json() const {
  nlohmann::json j;
  j["hf_impact"] = nlohmann::json::array();
  for (const auto& r : hf_impact) {
    j["hf_impact"].push_back({{"model", to_string(r.model)},
                              {"base", to_string(r.base)},
                              {"mean_hf_off", r.mean_hf_off},
                              {"mean_hf_on", r.mean_hf_on},
                              {"n_off", r.n_off},
                              {"n_on", r.n_on}});
  }
  j["metric_impact"] = nlohmann::json::array();
  for (const auto& r : metric_impact) {
    j["metric_impact"].push_back({{"model", to_string(r.model)},
                                  {"metric", to_string(r.metric)},
                                  {"mean_error", r.mean_error},
                                  {"n", r.n}});
  }
  j["feature_impact"] = nlohmann::json::array();
  for (const auto& r : feature_impact) {
    j["feature_impact"].push_back({{"model", to_string(r.model)},
                                   {"vowel", to_string(r.vowel)},
                                   {"base", to_string(r.base)},
                                   {"mean_error", r.mean_error},
                                   {"n", r.n}});
  }
  j["annotations"] = nlohmann::json::array();
  for (const auto& a : annotations) {
    j["annotations"].push_back({{"model", to_string(a.model)},
                                {"hf_increases_error", a.hf_increases_error},
                                {"mse_smallest", a.mse_smallest}});
  }
  return j;
}

void ImpactReport::write(const fs::path& dir) const {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoError, "cannot create " + dir.string());
  write_text(dir / "report.json", to_json().dump(2) + "\n");

  std::string hf = "model,base,mean_hf_off,mean_hf_on,n_off,n_on\n";
  for (const auto& r : hf_impact) {
    hf += std::string(to_string(r.model)) + "," + std::string(to_string(r.base)) + "," +
          fmt(r.mean_hf_off) + "," + fmt(r.mean_hf_on) + "," + std::to_string(r.n_off) + "," +
          std::to_string(r.n_on) + "\n";
  }
  write_text(dir / "hf_impact.csv", hf);

  std::string mt = "model,metric,mean_error,n\n";
  for (const auto& r : metric_impact) {
    mt += std::string(to_string(r.model)) + "," + std::string(to_string(r.metric)) + "," +
          fmt(r.mean_error) + "," + std::to_string(r.n) + "\n";
  }
  write_text(dir / "metric_impact.csv", mt);

  std::string ft = "model,vowel,base,mean_error,n\n";
  for (const auto& r : feature_impact) {
    ft += std::string(to_string(r.model)) + "," + std::string(to_string(r.vowel)) + "," +
          std::string(to_string(r.base)) + "," + fmt(r.mean_error) + "," + std::to_string(r.n) + "\n";
  }
  write_text(dir / "feature_impact.csv", ft);
}

}  // namespace vocalfit
