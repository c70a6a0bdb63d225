#include <iostream>

#include "CLI11.hpp"
#include "agri/cli.hpp"
#include "agri/error.hpp"

namespace {

std::optional<std::uint64_t> seed_of(const CLI::Option* opt, std::uint64_t value) {
  if (opt->count() == 0) return std::nullopt;
  return value;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace agri;
  CLI::App app{"Agriculture information service and cloud resource simulator"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  std::string technique;
  std::string sweep = "500:3000:500";

  auto* train = app.add_subcommand("train", "Train the productivity models from a TID file");
  TrainOptions topts;
  train->add_option("tid", topts.tid, "Training instance CSV")->required();
  train->add_option("schema", topts.schema, "Schema JSON")->required();
  train->add_option("-o,--out", topts.out, "Model JSON to write")->required();
  train->add_option("--s", topts.s, "Similarity shape parameter");
  train->add_option("--mu", topts.mu, "Output split threshold in [0,1]");
  train->add_option("-k", topts.k, "Neighbours for K-NN");

  auto* query = app.add_subcommand("query", "Answer a productivity query");
  std::string model;
  std::vector<std::string> fields;
  std::string method = "fuzzy";
  query->add_option("model", model, "Model JSON from train")->required();
  query->add_option("fields", fields, "One value per schema feature, in schema order")->required();
  query->add_option("--method", method, "fuzzy, knn or both")->check(CLI::IsMember({"fuzzy", "knn", "both"}));

  auto* simulate = app.add_subcommand("simulate", "Run one scenario");
  std::string scenario;
  simulate->add_option("scenario", scenario, "Scenario JSON");
  simulate->add_option("--config", config, "Scenario JSON (alternative to the positional)");
  auto* sim_seed = simulate->add_option("--seed", seed, "Override the scenario seed");
  simulate->add_option("--out", out, "Output directory")->required();
  simulate->add_option("--technique", technique, "autonomic, baseline or both")->default_str("autonomic");

  auto* cmp = app.add_subcommand("compare", "Sweep workload counts for both techniques");
  cmp->add_option("scenario", scenario, "Scenario JSON");
  cmp->add_option("--config", config, "Scenario JSON (alternative to the positional)");
  auto* cmp_seed = cmp->add_option("--seed", seed, "Override the scenario seed");
  cmp->add_option("--out", out, "Output directory")->required();
  cmp->add_option("--technique", technique, "autonomic, baseline or both")->default_str("both");
  cmp->add_option("--sweep", sweep, "Workload counts as a:b:step");

  auto* pca = app.add_subcommand("pca", "Reduce an agriculture dataset with PCA");
  PcaOptions popts;
  pca->add_option("dataset", popts.dataset, "Dataset CSV")->required();
  pca->add_option("schema", popts.schema, "Schema JSON")->required();
  pca->add_option("--threshold", popts.threshold, "Percent of variance to keep");
  pca->add_option("--out", popts.out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    const std::string scenario_path = config.empty() ? scenario : config;
    if ((simulate->parsed() || cmp->parsed()) && scenario_path.empty()) {
      throw Error("a scenario is required (positional or --config)");
    }
    if (train->parsed()) {
      cmd_train(topts);
      std::cout << "wrote " << topts.out.string() << '\n';
    } else if (query->parsed()) {
      const auto a = cmd_query(model, fields);
      if (method == "fuzzy") std::cout << to_char(a.fuzzy) << '\n';
      if (method == "knn") std::cout << to_char(a.knn) << '\n';
      if (method == "both") std::cout << "fuzzy " << to_char(a.fuzzy) << "\nknn " << to_char(a.knn) << '\n';
    } else if (simulate->parsed()) {
      SimulateOptions o;
      o.scenario = scenario_path;
      o.seed = seed_of(sim_seed, seed);
      o.techniques = parse_techniques(technique.empty() ? "autonomic" : technique);
      o.out = out;
      cmd_simulate(o);
      std::cout << "wrote " << out << '\n';
    } else if (cmp->parsed()) {
      CompareOptions o;
      o.scenario = scenario_path;
      o.seed = seed_of(cmp_seed, seed);
      o.techniques = parse_techniques(technique.empty() ? "both" : technique);
      o.counts = parse_sweep(sweep);
      o.out = out;
      o.threads = worker_threads();
      const auto rep = cmd_compare(o);
      std::cout << "wrote " << rep.rows.size() << " metric rows to " << out << '\n';
    } else if (pca->parsed()) {
      const auto r = cmd_pca(popts);
      std::cout << "kept " << r << " components\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "agri: error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
