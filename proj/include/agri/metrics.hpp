#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "agri/trace.hpp"

namespace agri {

double mtbf(double uptime, int breakdowns);
double mttr(double downtime, int breakdowns);
/// MTBF / (MTBF + MTTR); 1 when MTTR is 0.
double availability(double mtbf, double mttr);
/// Pool-wide availability; 1 when nothing broke down.
double availability(const SimTrace& trace);

/// Bits per second; 0 bits gives 0 whatever the duration.
double bandwidth(double bits, double seconds);
/// Bits of completed workloads over the trace horizon.
double bandwidth(const SimTrace& trace);

struct Satisfaction {
  double fraction = 0.0;
  std::string band;
  int confidence = 0;  // percent
  bool defined = true;  // false for an empty trace
};

Satisfaction satisfaction_band(double fraction);
/// Completed by the deadline and within budget, over all submitted.
Satisfaction satisfaction(const SimTrace& trace);

struct Latency {
  double sum = 0.0;
  double mean = 0.0;
  bool defined = true;  // false when nothing completed
};

Latency latency(const SimTrace& trace);

struct PenaltyLevel {
  int tier = 0;
  double rate = 0.0;  // currency per second late
};

struct PenaltySchedule {
  double penalty_minimum = 0.0;
  std::vector<PenaltyLevel> levels;
  void validate() const;
  double rate_for(int tier) const;
};

struct Cost {
  double resource = 0.0;
  double penalty = 0.0;
  double total = 0.0;
};

/// Per-workload delay: finish - deadline, or horizon - deadline when it never completed.
double delay(const WorkloadRecord& w, double horizon);
double penalty_cost(const WorkloadRecord& w, const PenaltySchedule& schedule, double horizon);
/// Resource cost from each resource's own hourly rate.
Cost average_cost(const SimTrace& trace, const PenaltySchedule& schedule);
/// Same with one hourly rate for every resource.
Cost average_cost(const SimTrace& trace, const PenaltySchedule& schedule, double resource_cost_rate);

struct ExecutionTime {
  double mean = 0.0;
  int excluded = 0;  // workloads that never completed
};

ExecutionTime execution_time(const SimTrace& trace);

struct Utilization {
  std::vector<double> per_resource;
  double sum = 0.0;
  double mean_percent = 0.0;
};

Utilization resource_utilization(const SimTrace& trace);

struct ComputingCapacity {
  double sum = 0.0;
  double mean = 0.0;
};

ComputingCapacity computing_capacity(const SimTrace& trace);

struct RequestCounts {
  long long executed_ok = 0;
  long long missed_deadline = 0;  // late or never completed
};

RequestCounts request_counts(const SimTrace& trace);

/// The ten reported metrics, in report order.
std::vector<std::pair<std::string, double>> report_metrics(const SimTrace& trace, const PenaltySchedule& schedule);

struct MetricRow {
  std::string experiment;
  long long workload_count = 0;
  std::string technique;
  std::string metric;
  double value = 0.0;
};

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows);

}  // namespace agri
