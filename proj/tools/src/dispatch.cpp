#include "vocalfit/cli/dispatch.hpp"

#include <algorithm>
#include <csignal>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "vocalfit/cli/server.hpp"
#include "vocalfit/config.hpp"
#include "vocalfit/error.hpp"
#include "vocalfit/evaluation.hpp"
#include "vocalfit/mushra.hpp"
#include "vocalfit/pipeline.hpp"
#include "vocalfit/surface.hpp"
#include "vocalfit/targets.hpp"

namespace vocalfit::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Written next to evaluation results so later commands can find their inputs.
constexpr const char* kEvaluationManifest = "evaluation.json";

struct GlobalOptions {
  std::string config_file;
  std::vector<std::string> overrides;
  int jobs = -1;
};

struct CampaignArgs {
  std::string model;
  int runs = 0;
  int steps = 0;
  std::uint64_t seed = 0;
  std::string out;
  bool uniform = false;
  bool no_shapes = false;
};

struct EvaluateArgs {
  std::string dataset;
  std::string targets;
  std::string out;
  std::string pairs = "all";
};

struct SurfaceArgs {
  std::string results;
  std::string pair;
  std::string vowel;
  std::string out;
};

struct ReportArgs {
  std::vector<std::string> datasets;
  std::vector<std::string> results;
  std::string targets;
  std::string out;
};

struct TargetsArgs {
  std::string out;
};

struct PrepArgs {
  std::vector<std::string> results;
  std::string targets;
  std::string out;
  std::string pairs;
  std::uint64_t seed = 0;
};

struct NormalizeArgs {
  std::string manifest;
  std::string scores;
  std::string out;
  bool clip_upper = false;
};

struct ServeArgs {
  std::string dir;
  std::string results;
  std::string host = "127.0.0.1";
  int port = 8080;
};

HarnessConfig resolve_config(const GlobalOptions& g) {
  HarnessConfig cfg = g.config_file.empty() ? HarnessConfig{} : load_config(g.config_file);
  for (const auto& o : g.overrides) apply_override(cfg, o);
  if (g.jobs >= 0) cfg.jobs = static_cast<unsigned>(g.jobs);
  validate(cfg);
  return cfg;
}

bool same_path(const fs::path& a, const fs::path& b) {
  std::error_code ec;
  return fs::weakly_canonical(a, ec) == fs::weakly_canonical(b, ec);
}

void require_separate(const fs::path& out, std::initializer_list<fs::path> inputs) {
  for (const auto& in : inputs) {
    if (!in.empty() && same_path(out, in)) {
      throw Error(Errc::ConfigError, "output directory " + out.string() + " is also an input");
    }
  }
}

std::vector<PairId> parse_pairs(const std::string& list) {
  if (list.empty() || list == "all") return enumerate_pairs();
  std::vector<PairId> pairs;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      pairs.push_back(PairId::parse(item));
    } catch (const Error& e) {
      throw Error(Errc::ConfigError, "unknown pair '" + item + "'");
    }
  }
  if (pairs.empty()) throw Error(Errc::ConfigError, "empty pair list");
  return pairs;
}

json read_json(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  try {
    return json::parse(f);
  } catch (const json::parse_error& e) {
    throw Error(Errc::SchemaError, path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream f(path, std::ios::trunc);
  if (!f) throw Error(Errc::IoError, "cannot write " + path.string());
  f << j.dump(2) << '\n';
}

// A JSON array, or JSON lines each holding one score set or an array of them.
json read_scores_document(const fs::path& path) {
  std::ifstream f(path);
  if (!f) throw Error(Errc::IoError, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << f.rdbuf();
  const std::string text = buffer.str();
  json whole = json::parse(text, nullptr, false);
  if (!whole.is_discarded()) return whole.is_object() ? json::array({whole}) : whole;

  json all = json::array();
  std::stringstream lines(text);
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      throw Error(Errc::SchemaError, path.string() + ":" + std::to_string(n) + ": not JSON");
    }
    if (j.is_array()) {
      for (auto& e : j) all.push_back(std::move(e));
    } else {
      all.push_back(std::move(j));
    }
  }
  return all;
}

struct EvaluationRun {
  fs::path dir;
  fs::path dataset;
  fs::path targets;
  std::vector<OptimizationResult> results;
};

EvaluationRun load_evaluation(const fs::path& dir) {
  const json m = read_json(dir / kEvaluationManifest);
  EvaluationRun run;
  run.dir = dir;
  try {
    run.dataset = m.at("dataset").get<std::string>();
    run.targets = m.at("targets").get<std::string>();
  } catch (const json::exception& e) {
    throw Error(Errc::SchemaError, (dir / kEvaluationManifest).string() + ": " + e.what());
  }
  run.results = read_results_jsonl(dir / "results.jsonl");
  return run;
}

std::vector<OptimizationResult> run_evaluation(const HarnessConfig& cfg, const fs::path& dataset_dir,
                                               const fs::path& targets_dir,
                                               const std::vector<PairId>& pairs,
                                               const fs::path& out, std::ostream& log) {
  const Dataset dataset = load_dataset(dataset_dir);
  const TargetSet targets = load_targets(targets_dir);
  log << "evaluating " << pairs.size() << " pairs over " << dataset.rows.size() << " "
      << to_string(dataset.summary.model) << " candidates\n";
  auto results = evaluate_dataset(dataset, targets, pairs, evaluation_options(cfg));

  fs::create_directories(out);
  write_results_jsonl(out / "results.jsonl", results);
  json names = json::array();
  for (const auto& p : pairs) names.push_back(p.name());
  write_json(out / kEvaluationManifest,
             {{"dataset", fs::absolute(dataset_dir).lexically_normal().string()},
              {"targets", fs::absolute(targets_dir).lexically_normal().string()},
              {"model", to_string(dataset.summary.model)},
              {"pairs", names},
              {"results", results.size()}});
  return results;
}

int cmd_campaign(const GlobalOptions& g, const CampaignArgs& a, const CLI::App& sub,
                 std::ostream& out) {
  HarnessConfig cfg = resolve_config(g);
  if (sub.count("--model")) cfg.campaign.model = model_from_string(a.model);
  if (sub.count("--runs")) cfg.campaign.runs = a.runs;
  if (sub.count("--steps")) cfg.campaign.steps = a.steps;
  if (sub.count("--seed")) cfg.campaign.seed = a.seed;
  if (a.uniform) cfg.tract.sampling = SamplingMode::Uniform;
  if (a.no_shapes) cfg.campaign.write_shapes = false;
  validate(cfg);

  const fs::path dir = a.out;
  const DatasetSummary summary = run_campaign(campaign_config(cfg, dir));
  write_config_echo(cfg, dir);
  out << "attempted " << summary.attempted << ", prefilter " << summary.pass_prefilter
      << ", formants " << summary.pass_formant << ", retained " << summary.retained << " ("
      << summary.retention_pct << "%)\n";
  return kExitOk;
}

int cmd_targets(const GlobalOptions& g, const TargetsArgs& a, std::ostream& out) {
  const HarnessConfig cfg = resolve_config(g);
  const fs::path dir = a.out;
  const TargetSet set = make_default_targets(dir, cfg.targets, cfg.acoustics, cfg.synthesis);
  write_config_echo(cfg, dir);
  for (const auto& v : set.vowels) {
    out << "/" << to_string(v.vowel) << "/ F1 " << v.formants.f1_hz << " Hz, F2 " << v.formants.f2_hz
        << " Hz\n";
  }
  return kExitOk;
}

int cmd_evaluate(const GlobalOptions& g, const EvaluateArgs& a, std::ostream& out) {
  const HarnessConfig cfg = resolve_config(g);
  const auto pairs = parse_pairs(a.pairs);
  require_separate(a.out, {a.dataset, a.targets});
  const auto results = run_evaluation(cfg, a.dataset, a.targets, pairs, a.out, out);
  write_config_echo(cfg, a.out);
  out << results.size() << " results written to " << (fs::path(a.out) / "results.jsonl").string()
      << "\n";
  return kExitOk;
}

int cmd_surface(const GlobalOptions& g, const SurfaceArgs& a, std::ostream& out) {
  const HarnessConfig cfg = resolve_config(g);
  const PairId pair = parse_pairs(a.pair).front();
  std::vector<Vowel> vowels;
  if (a.vowel == "all") {
    vowels.assign(kAllVowels.begin(), kAllVowels.end());
  } else {
    try {
      vowels.push_back(vowel_from_string(a.vowel));
    } catch (const Error&) {
      throw Error(Errc::ConfigError, "unknown vowel '" + a.vowel + "'");
    }
  }
  require_separate(a.out, {a.results});

  const EvaluationRun run = load_evaluation(a.results);
  const Dataset dataset = load_dataset(run.dataset);
  const TargetSet targets = load_targets(run.targets);
  const SpeakerFormantStats model_stats = dataset_formant_stats(dataset);
  const FeatureBank bank = FeatureBank::build(dataset, targets, pair.variant, evaluation_options(cfg));

  fs::create_directories(a.out);
  for (const Vowel v : vowels) {
    std::vector<SurfaceSample> samples;
    samples.reserve(dataset.rows.size());
    for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
      const ZPoint z = zscore_formants(dataset.rows[i].formants, model_stats);
      samples.push_back({z.z1, z.z2, bank.error(i, v, pair.metric)});
    }
    const SurfaceDescriptor desc{pair.variant.name(), std::string(to_string(pair.metric)),
                                 std::string(to_string(v)),
                                 std::string(to_string(dataset.summary.model))};
    const ZPoint target = zscore_formants(targets.get(v).formants, targets.stats);
    const ErrorSurfaceGrid grid = build_surface(samples, desc, target, cfg.surface);
    const std::string stem =
        "surface_" + desc.model + "_" + pair.name() + "_" + desc.vowel;
    export_surface(grid, a.out, stem);
    out << stem << ": " << grid.samples << " samples, " << grid.dropped << " outside the grid\n";
  }
  write_config_echo(cfg, a.out);
  return kExitOk;
}

int cmd_report(const GlobalOptions& g, const ReportArgs& a, std::ostream& out) {
  const HarnessConfig cfg = resolve_config(g);
  if (a.datasets.empty() == a.results.empty()) {
    throw Error(Errc::ConfigError, "report needs either --dataset or --results");
  }
  if (!a.datasets.empty() && a.targets.empty()) {
    throw Error(Errc::ConfigError, "report --dataset needs --targets");
  }
  std::vector<fs::path> inputs(a.datasets.begin(), a.datasets.end());
  inputs.insert(inputs.end(), a.results.begin(), a.results.end());
  for (const auto& in : inputs) require_separate(a.out, {in});
  if (!a.targets.empty()) require_separate(a.out, {a.targets});

  std::vector<OptimizationResult> all;
  const auto pairs = enumerate_pairs();
  for (const auto& d : a.datasets) {
    const Dataset probe = load_dataset(d);
    const fs::path sub = fs::path(a.out) / ("evaluation_" + std::string(to_string(probe.summary.model)));
    auto results = run_evaluation(cfg, d, a.targets, pairs, sub, out);
    write_config_echo(cfg, sub);
    all.insert(all.end(), results.begin(), results.end());
  }
  for (const auto& r : a.results) {
    auto run = load_evaluation(r);
    all.insert(all.end(), run.results.begin(), run.results.end());
  }

  const ImpactReport report = aggregate_report(all);
  report.write(a.out);
  write_config_echo(cfg, a.out);
  for (const auto& note : report.annotations) {
    out << to_string(note.model) << ": HF emphasis "
        << (note.hf_increases_error ? "increases" : "does not increase")
        << " the mean formant error; MSE " << (note.mse_smallest ? "has" : "does not have")
        << " the smallest mean error\n";
  }
  return kExitOk;
}

int cmd_mushra_prep(const GlobalOptions& g, const PrepArgs& a, const CLI::App& sub,
                    std::ostream& out) {
  HarnessConfig cfg = resolve_config(g);
  if (sub.count("--seed")) cfg.mushra.seed = a.seed;
  std::vector<PairId> pairs;
  if (!a.pairs.empty()) {
    pairs = parse_pairs(a.pairs);
  } else if (!cfg.mushra.pairs.empty()) {
    for (const auto& p : cfg.mushra.pairs) pairs.push_back(PairId::parse(p));
  } else {
    pairs = listening_test_pairs();
  }

  std::vector<OptimizationResult> all;
  fs::path targets_dir = a.targets;
  for (const auto& r : a.results) {
    require_separate(a.out, {r});
    auto run = load_evaluation(r);
    if (targets_dir.empty()) targets_dir = run.targets;
    all.insert(all.end(), run.results.begin(), run.results.end());
  }
  const TargetSet targets = load_targets(targets_dir);
  const auto screens = prepare_manifest(all, pairs, targets, cfg.mushra.seed);
  const auto bundled = write_manifest_bundle(a.out, screens);
  write_config_echo(cfg, a.out);
  out << bundled.size() << " screens written to " << (fs::path(a.out) / "manifest.json").string()
      << "\n";
  return kExitOk;
}

int cmd_mushra_normalize(const GlobalOptions& g, const NormalizeArgs& a, const CLI::App& sub,
                         std::ostream& out, std::ostream& err) {
  HarnessConfig cfg = resolve_config(g);
  if (sub.count("--clip-upper")) cfg.mushra.clip_upper = a.clip_upper;
  require_separate(a.out, {fs::path(a.manifest).parent_path()});

  const auto screens = manifest_from_json(read_json(a.manifest));
  const json doc = read_scores_document(a.scores);
  const ScoreValidation check = validate_scores(doc, screens);
  for (const auto& w : check.warnings) err << "warning: " << w << "\n";
  if (!check.ok()) {
    for (const auto& e : check.errors) err << "error: " << e << "\n";
    return kExitData;
  }
  const auto result =
      normalize_scores(scores_from_json(doc), screens, NormalizationOptions{cfg.mushra.clip_upper});
  for (const auto& w : result.warnings) err << "warning: " << w << "\n";

  fs::create_directories(a.out);
  write_json(fs::path(a.out) / "normalized.json", result.to_json());
  result.write_csv(fs::path(a.out) / "normalized.csv");
  write_config_echo(cfg, a.out);
  out << result.rows.size() << " normalized scores, " << result.excluded.size()
      << " screens excluded\n";
  return kExitOk;
}

StudyServer* g_running_server = nullptr;

extern "C" void stop_on_signal(int) {
  if (g_running_server) g_running_server->stop();
}

int cmd_mushra_serve(const ServeArgs& a, std::ostream& out) {
  ServeOptions o;
  o.root = a.dir;
  o.results_file = a.results;
  o.host = a.host;
  o.port = a.port;
  StudyServer server(o);
  const int port = server.bind();
  out << "serving " << o.root.string() << " on http://" << o.host << ":" << port << "/\n"
      << std::flush;
  g_running_server = &server;
  std::signal(SIGINT, stop_on_signal);
  std::signal(SIGTERM, stop_on_signal);
  server.serve();
  g_running_server = nullptr;
  return kExitOk;
}

int exit_code_for(Errc code) {
  switch (code) {
    case Errc::ConfigError:
    case Errc::InvalidArgument:
      return kExitUsage;
    default:
      return kExitData;
  }
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Feature-metric evaluation harness for articulatory vowel synthesis", "vocalfit"};
  app.require_subcommand(0, 1);

  GlobalOptions g;
  bool show_version = false;
  app.add_option("--config", g.config_file, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--set", g.overrides, "Override one config key, e.g. --set campaign.runs=3")
      ->allow_extra_args(false);
  app.add_option("--jobs", g.jobs, "Worker threads (default: all cores)")
      ->check(CLI::NonNegativeNumber);
  app.add_flag("--version", show_version, "Print version information");
  app.fallthrough();

  CampaignArgs campaign;
  auto* c = app.add_subcommand("campaign", "Sample tract shapes and build a vowel dataset");
  c->add_option("--model", campaign.model, "adult or child")
      ->check(CLI::IsMember({"adult", "child"}));
  c->add_option("--runs", campaign.runs, "Random-walk runs")->check(CLI::PositiveNumber);
  c->add_option("--steps", campaign.steps, "Steps per run")->check(CLI::NonNegativeNumber);
  c->add_option("--seed", campaign.seed, "Sampling seed");
  c->add_option("--out", campaign.out, "Output directory")->required();
  c->add_flag("--uniform", campaign.uniform, "Independent uniform draws instead of a walk");
  c->add_flag("--no-shapes", campaign.no_shapes, "Skip shapes.jsonl");

  TargetsArgs targets;
  auto* t = app.add_subcommand("targets", "Synthesise the default target-speaker vowels");
  t->add_option("--out", targets.out, "Output directory")->required();

  EvaluateArgs evaluate;
  auto* e = app.add_subcommand("evaluate", "Select per-run optima for feature-metric pairs");
  e->add_option("--dataset", evaluate.dataset, "Campaign directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--targets", evaluate.targets, "Targets directory")->required()->check(CLI::ExistingDirectory);
  e->add_option("--out", evaluate.out, "Output directory")->required();
  e->add_option("--pairs", evaluate.pairs, "all, or a comma-separated list such as mfcc12-mse");

  SurfaceArgs surface;
  auto* s = app.add_subcommand("surface", "Export a binned error surface");
  s->add_option("--results", surface.results, "Evaluation directory")->required()->check(CLI::ExistingDirectory);
  s->add_option("--pair", surface.pair, "Feature-metric pair")->required();
  s->add_option("--vowel", surface.vowel, "a, e, i, o, u or all")->required();
  s->add_option("--out", surface.out, "Output directory")->required();

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Evaluate all 40 pairs and aggregate the impact tables");
  r->add_option("--dataset", report.datasets, "Campaign directory (repeatable)")->check(CLI::ExistingDirectory);
  r->add_option("--results", report.results, "Existing evaluation directory (repeatable)")->check(CLI::ExistingDirectory);
  r->add_option("--targets", report.targets, "Targets directory")->check(CLI::ExistingDirectory);
  r->add_option("--out", report.out, "Output directory")->required();

  auto* m = app.add_subcommand("mushra", "Listening-test utilities");
  m->require_subcommand(1);
  PrepArgs prep;
  auto* mp = m->add_subcommand("prep", "Build a MUSHRA bundle from evaluation results");
  mp->add_option("--results", prep.results, "Evaluation directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  mp->add_option("--targets", prep.targets, "Targets directory (default: from the results)")->check(CLI::ExistingDirectory);
  mp->add_option("--out", prep.out, "Bundle directory")->required();
  mp->add_option("--pairs", prep.pairs, "Comma-separated pairs (default: the ten listening-test pairs)");
  mp->add_option("--seed", prep.seed, "Shuffle seed");
  NormalizeArgs norm;
  auto* mn = m->add_subcommand("normalize", "Normalise rater scores against anchor and reference");
  mn->add_option("--manifest", norm.manifest, "manifest.json")->required()->check(CLI::ExistingFile);
  mn->add_option("--scores", norm.scores, "Scores JSON array or JSON lines")->required()->check(CLI::ExistingFile);
  mn->add_option("--out", norm.out, "Output directory")->required();
  mn->add_flag("--clip-upper", norm.clip_upper, "Also clip scores above the reference to 1");
  ServeArgs serve;
  auto* ms = m->add_subcommand("serve", "Serve a bundle and collect uploaded scores");
  ms->add_option("--dir", serve.dir, "Bundle directory")->required()->check(CLI::ExistingDirectory);
  ms->add_option("--results", serve.results, "Upload log (default: <dir>/results.jsonl)");
  ms->add_option("--host", serve.host, "Listen address");
  ms->add_option("--port", serve.port, "Port (0 picks a free one)")->check(CLI::Range(0, 65535));

  auto* cfg_cmd = app.add_subcommand("config", "Print the resolved configuration");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& ex) {
    if (ex.get_exit_code() == 0) {
      out << app.help();
      if (!app.get_subcommands().empty()) out << app.get_subcommands().back()->help();
      return kExitOk;
    }
    err << "error: " << ex.what() << "\n";
    err << "run with --help for usage\n";
    return kExitUsage;
  }

  if (show_version) {
    out << "vocalfit " << version() << "\nconfig schema " << kConfigSchemaVersion << "\n";
    return kExitOk;
  }

  try {
    if (c->parsed()) return cmd_campaign(g, campaign, *c, out);
    if (t->parsed()) return cmd_targets(g, targets, out);
    if (e->parsed()) return cmd_evaluate(g, evaluate, out);
    if (s->parsed()) return cmd_surface(g, surface, out);
    if (r->parsed()) return cmd_report(g, report, out);
    if (mp->parsed()) return cmd_mushra_prep(g, prep, *mp, out);
    if (mn->parsed()) return cmd_mushra_normalize(g, norm, *mn, out, err);
    if (ms->parsed()) return cmd_mushra_serve(serve, out);
    if (cfg_cmd->parsed()) {
      out << to_json(resolve_config(g)).dump(2) << "\n";
      return kExitOk;
    }
  } catch (const Error& ex) {
    err << "error: " << ex.what() << "\n";
    if (ex.code() == Errc::ConfigError) {
      err << "configuration keys and defaults: vocalfit config\n";
    }
    return exit_code_for(ex.code());
  } catch (const std::exception& ex) {
    err << "error: " << ex.what() << "\n";
    return kExitData;
  }
  err << "error: a command is required\n" << app.help();
  return kExitUsage;
}

}  // namespace vocalfit::cli
