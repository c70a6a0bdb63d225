#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "agri/autonomic.hpp"
#include "agri/metrics.hpp"
#include "agri/qos_manager.hpp"
#include "agri/trace.hpp"
#include "json.hpp"

namespace agri {

enum class Technique { Autonomic, Baseline };

const char* to_string(Technique t);
Technique parse_technique(const std::string& text);

enum class ArrivalMode { Batch, Poisson };

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double mid() const { return 0.5 * (lo + hi); }
  bool operator==(const Range&) const = default;
};

/// Workload and resource parameters plus the knobs of both schedulers.
/// Sizes are base * (1 + inflation) with the base fixed at 10000 MB for
/// workloads and 300 MB for input and output files.
struct SimConfig {
  int resource_count = 100;
  int workload_count = 3000;
  Range bandwidth{100.0, 1500.0};  // B/s
  Range workload_inflation{0.10, 0.30};
  Range pe_rating{100.0, 4000.0};  // MIPS
  Range budget{3.0, 5.0};          // currency per workload
  Range memory{2048.0, 12576.0};   // MB
  Range file_inflation{0.15, 0.40};
  Range output_inflation{0.15, 0.50};
  int pes_per_machine = 1;
  double mi_per_mb = 1.0;
  Range price_per_mi{2.5 / 12000.0, 4.0 / 12000.0};  // resource cost_rate = capacity * 3600 * price

  std::uint64_t seed = 1;
  Technique technique = Technique::Autonomic;
  ArrivalMode arrival = ArrivalMode::Batch;
  double arrival_rate = 1.0;     // per second, Poisson mode
  Range deadline_slack{0.5, 1.5};  // times the fluid makespan of the whole batch
  double max_time = 0.0;           // 0 runs until every workload is resolved

  double breakdown_rate = 1e-4;  // per resource per second
  double repair_time = 50.0;
  double straggler_fraction = 0.1;
  double straggler_speed = 0.5;
  double restart_time = 5.0;
  double restart_fix_probability = 0.5;

  double reserve_fraction = 0.2;
  double monitor_interval = 10.0;
  double consumption_threshold = 1.5;
  double missed_fraction = 0.05;
  PenaltySchedule penalties{1.0, {{0, 0.05}, {1, 0.02}, {2, 0.0}}};
  QosPolicy qos;
  AllocConfig alloc;

  /// Throws agri::Error naming the first field out of range.
  void validate() const;
};

SimConfig sim_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SimConfig& cfg);
SimConfig load_sim_config(const std::filesystem::path& path);

struct Workload {
  UserRequest request;
  int tier = 0;
  double bandwidth = 0.0;  // B/s
  double file_mb = 0.0;
  double output_mb = 0.0;
  double bits = 0.0;
};

std::vector<Workload> generate_workloads(const SimConfig& cfg);

struct SimResource {
  Resource resource;
  double memory_mb = 0.0;
  double speed = 1.0;  // < 1 for stragglers
};

std::vector<SimResource> generate_resources(const SimConfig& cfg);

struct SimStats {
  long long arrivals = 0;
  long long completions = 0;
  long long drops = 0;
  long long still_queued = 0;
  long long deadline_reads = 0;  // scheduler decisions that looked at a deadline
  long long budget_reads = 0;
  long long allocations = 0;
  long long restarts = 0;
  long long dead = 0;
  long long activated = 0;
};

struct SimResult {
  SimTrace trace;
  std::vector<ActionLogEntry> actions;
  SimStats stats;
};

SimResult run(const SimConfig& cfg);

struct DeltaRow {
  long long workload_count = 0;
  std::string metric;
  double autonomic = 0.0;
  double baseline = 0.0;
  double delta = 0.0;  // autonomic - baseline
};

struct CompareReport {
  std::vector<MetricRow> rows;
  std::vector<DeltaRow> deltas;
};

/// Runs each technique at each workload count on the same seed. `threads`
/// caps the worker count; results do not depend on it.
CompareReport compare(const SimConfig& base, const std::vector<int>& counts, const std::vector<Technique>& techniques,
                      int threads = 1, const std::string& experiment = "sweep");

/// a:b:step, inclusive of b when it lands on the grid.
std::vector<int> parse_sweep(const std::string& text);

void write_delta_csv(std::ostream& out, const std::vector<DeltaRow>& rows);

}  // namespace agri
