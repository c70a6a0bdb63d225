#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "agri/features.hpp"
#include "agri/simkernel.hpp"
#include "json.hpp"

namespace agri {

inline constexpr const char* kToolVersion = "0.1.0";

struct RunManifest {
  std::string command;
  std::string scenario;
  std::uint64_t seed = 0;
  std::filesystem::path out;
  std::vector<std::string> techniques;
  std::string timestamp;  // UTC, ISO 8601
  std::string version = kToolVersion;
};

nlohmann::json to_json(const RunManifest& m);
/// Creates the directory and writes manifest.json into it.
void write_manifest(const RunManifest& m);

struct TrainOptions {
  std::filesystem::path tid;
  std::filesystem::path schema;
  std::filesystem::path out;
  double s = 1.0;
  double mu = 0.5;
  int k = 3;
};

/// Fuzzy model plus the K-NN training set, as one JSON document.
nlohmann::json cmd_train(const TrainOptions& opts);

struct QueryAnswer {
  ProductivityLevel fuzzy = ProductivityLevel::C;
  ProductivityLevel knn = ProductivityLevel::C;
};

/// `fields` holds one raw cell per schema feature, in schema order.
QueryAnswer cmd_query(const std::filesystem::path& model, const std::vector<std::string>& fields);

struct SimulateOptions {
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  std::vector<Technique> techniques{Technique::Autonomic};
  std::filesystem::path out;
};

/// Per technique: <out>/<technique>/{events,workloads,resources,actions,metrics}.csv.
void cmd_simulate(const SimulateOptions& opts);

struct CompareOptions {
  std::filesystem::path scenario;
  std::optional<std::uint64_t> seed;
  std::vector<Technique> techniques{Technique::Autonomic, Technique::Baseline};
  std::vector<int> counts;
  std::filesystem::path out;
  int threads = 1;
};

/// <out>/metrics.csv and, with both techniques, <out>/deltas.csv.
CompareReport cmd_compare(const CompareOptions& opts);

struct PcaOptions {
  std::filesystem::path dataset;
  std::filesystem::path schema;
  double threshold = 90.0;  // percent of variance to keep
  std::filesystem::path out;
};

/// <out>/eigenvalues.csv and <out>/scores.csv; returns the selected count.
std::size_t cmd_pca(const PcaOptions& opts);

std::vector<Technique> parse_techniques(const std::string& text);
/// AGRI_SIM_THREADS when set, else the hardware concurrency.
int worker_threads();

}  // namespace agri
