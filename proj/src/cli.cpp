#include "agri/cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <thread>

#include "agri/classifier.hpp"
#include "agri/csv.hpp"
#include "agri/error.hpp"
#include "agri/fuzzy.hpp"
#include "agri/metrics.hpp"
#include "agri/pipeline.hpp"

namespace agri {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

void require_file(const fs::path& p, const char* what) {
  if (!fs::is_regular_file(p)) throw Error(std::string(what) + " not found: " + p.string());
}

SimConfig scenario_config(const fs::path& scenario, const std::optional<std::uint64_t>& seed) {
  require_file(scenario, "scenario");
  SimConfig cfg = load_sim_config(scenario);
  if (seed) cfg.seed = *seed;
  return cfg;
}

std::vector<std::string> names(const std::vector<Technique>& ts) {
  std::vector<std::string> out;
  for (auto t : ts) out.emplace_back(to_string(t));
  return out;
}

}  // namespace

json to_json(const RunManifest& m) {
  return {{"command", m.command},         {"scenario", m.scenario},   {"seed", m.seed},
          {"out", m.out.generic_string()}, {"techniques", m.techniques}, {"timestamp", m.timestamp},
          {"version", m.version}};
}

void write_manifest(const RunManifest& m) {
  fs::create_directories(m.out);
  auto out = open_out(m.out / "manifest.json");
  out << to_json(m).dump(2) << '\n';
}

std::vector<Technique> parse_techniques(const std::string& text) {
  if (text == "both") return {Technique::Autonomic, Technique::Baseline};
  return {parse_technique(text)};
}

int worker_threads() {
  if (const char* env = std::getenv("AGRI_SIM_THREADS")) {
    const double v = parse_number(env, "AGRI_SIM_THREADS");
    if (v < 1 || v != static_cast<int>(v)) throw Error("AGRI_SIM_THREADS must be a positive integer");
    return static_cast<int>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

json cmd_train(const TrainOptions& opts) {
  require_file(opts.tid, "training data");
  require_file(opts.schema, "schema");
  if (opts.k < 1) throw Error("k must be at least 1");
  const auto schema = parse_feature_schema(load_json_file(opts.schema));
  const auto tid = load_tid_file(opts.tid, schema);
  FuzzyConfig fc;
  fc.s = opts.s;
  fc.mu = opts.mu;
  fc.validate();
  const auto model = train_productivity_model(tid, fc);
  json instances = json::array();
  for (const auto& inst : tid.instances) {
    instances.push_back({{"features", inst.features}, {"label", std::string(1, to_char(inst.label))}});
  }
  json doc = {{"format", "agri-model"},
              {"version", kToolVersion},
              {"fuzzy", to_json(model)},
              {"knn", {{"k", opts.k}, {"instances", instances}}}};
  if (!opts.out.empty()) {
    auto out = open_out(opts.out);
    out << doc.dump(2) << '\n';
  }
  return doc;
}

QueryAnswer cmd_query(const fs::path& model_path, const std::vector<std::string>& fields) {
  require_file(model_path, "model");
  const json doc = load_json_file(model_path);
  if (!doc.is_object() || doc.value("format", "") != "agri-model" || !doc.contains("fuzzy") || !doc.contains("knn")) {
    throw ParseError(model_path.string() + ": not an agri model file");
  }
  const auto model = productivity_model_from_json(doc.at("fuzzy"));
  const auto& schema = model.schema;
  if (fields.size() != schema.features.size()) {
    std::string expected;
    for (const auto& f : schema.features) expected += (expected.empty() ? "" : ", ") + f.name;
    throw Error("query needs " + std::to_string(schema.features.size()) + " fields (" + expected + "), got " +
                std::to_string(fields.size()));
  }
  const auto query = schema.encode(fields);

  TrainingInstanceDataset tid;
  tid.schema = schema;
  const auto& knn = doc.at("knn");
  try {
    for (const auto& inst : knn.at("instances")) {
      tid.instances.push_back({inst.at("features").get<FeatureVector>(), parse_level(inst.at("label").get<std::string>())});
    }
  } catch (const json::exception& e) {
    throw ParseError(model_path.string() + ": knn section: " + e.what());
  }
  QueryAnswer a;
  a.fuzzy = classify_productivity(model, query);
  a.knn = knn_classify(query, tid, knn.value("k", 3));
  return a;
}

void cmd_simulate(const SimulateOptions& opts) {
  const SimConfig base = scenario_config(opts.scenario, opts.seed);
  write_manifest({"simulate", opts.scenario.generic_string(), base.seed, opts.out, names(opts.techniques), utc_now()});
  for (auto t : opts.techniques) {
    SimConfig cfg = base;
    cfg.technique = t;
    const auto result = run(cfg);
    const fs::path dir = opts.out / to_string(t);
    save_trace(result.trace, dir);
    auto actions = open_out(dir / "actions.csv");
    write_action_log_csv(actions, result.actions);
    std::vector<MetricRow> rows;
    for (const auto& [metric, value] : report_metrics(result.trace, cfg.penalties)) {
      rows.push_back({"simulate", cfg.workload_count, to_string(t), metric, value});
    }
    auto metrics = open_out(dir / "metrics.csv");
    write_metrics_csv(metrics, rows);
  }
}

CompareReport cmd_compare(const CompareOptions& opts) {
  const SimConfig base = scenario_config(opts.scenario, opts.seed);
  if (opts.counts.empty()) throw Error("compare needs at least one workload count");
  write_manifest({"compare", opts.scenario.generic_string(), base.seed, opts.out, names(opts.techniques), utc_now()});
  auto report = compare(base, opts.counts, opts.techniques, opts.threads);
  auto metrics = open_out(opts.out / "metrics.csv");
  write_metrics_csv(metrics, report.rows);
  if (!report.deltas.empty()) {
    auto deltas = open_out(opts.out / "deltas.csv");
    write_delta_csv(deltas, report.deltas);
  }
  return report;
}

std::size_t cmd_pca(const PcaOptions& opts) {
  require_file(opts.dataset, "dataset");
  require_file(opts.schema, "schema");
  const auto schema = parse_data_schema(load_json_file(opts.schema));
  const auto loaded = load_dataset_file(opts.dataset, schema);
  const auto pre = preprocess(loaded.records, schema);
  const auto matrix = build_matrix(pre.records, schema);
  const auto pca = run_pca(matrix, opts.threshold);
  auto ev = open_out(opts.out / "eigenvalues.csv");
  write_csv_row(ev, {"component", "eigenvalue", "cumulative_percent"});
  for (std::size_t i = 0; i < pca.eigenvalues.size(); ++i) {
    write_csv_row(ev, {std::to_string(i + 1), format_number(pca.eigenvalues[i]),
                       format_number(explained_percent(pca.eigenvalues, i + 1))});
  }
  auto sc = open_out(opts.out / "scores.csv");
  std::vector<std::string> header{"component"};
  for (const auto& u : matrix.users) header.push_back(u);
  write_csv_row(sc, header);
  for (std::size_t r = 0; r < pca.scores.rows(); ++r) {
    std::vector<std::string> row{std::to_string(r + 1)};
    for (std::size_t c = 0; c < pca.scores.cols(); ++c) row.push_back(format_number(pca.scores(r, c)));
    write_csv_row(sc, row);
  }
  return pca.selected_count;
}

}  // namespace agri
