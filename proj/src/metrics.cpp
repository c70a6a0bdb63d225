#include "agri/metrics.hpp"

#include <algorithm>
#include <ostream>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

namespace {

void require_nonnegative(double v, const char* what) {
  if (!(v >= 0.0)) throw Error(std::string(what) + " must be nonnegative");
}

}  // namespace

double mtbf(double uptime, int breakdowns) {
  require_nonnegative(uptime, "uptime");
  if (breakdowns < 1) throw Error("mtbf: needs at least one breakdown");
  return uptime / breakdowns;
}

double mttr(double downtime, int breakdowns) {
  require_nonnegative(downtime, "downtime");
  if (breakdowns < 1) throw Error("mttr: needs at least one breakdown");
  return downtime / breakdowns;
}

double availability(double mtbf_value, double mttr_value) {
  require_nonnegative(mtbf_value, "mtbf");
  require_nonnegative(mttr_value, "mttr");
  if (mttr_value == 0.0) return 1.0;
  return mtbf_value / (mtbf_value + mttr_value);
}

double availability(const SimTrace& trace) {
  double up = 0.0, down = 0.0;
  int breakdowns = 0;
  for (const auto& r : trace.resources) {
    up += r.uptime;
    down += r.downtime;
    breakdowns += r.breakdown_count;
  }
  if (breakdowns == 0) return 1.0;
  return availability(mtbf(up, breakdowns), mttr(down, breakdowns));
}

double bandwidth(double bits, double seconds) {
  require_nonnegative(bits, "bits");
  if (bits == 0.0) return 0.0;
  if (!(seconds > 0.0)) throw Error("bandwidth: duration must be positive");
  return bits / seconds;
}

double bandwidth(const SimTrace& trace) {
  double bits = 0.0;
  for (const auto& w : trace.workloads)
    if (w.completed) bits += w.bits_transferred;
  return bandwidth(bits, trace.horizon);
}

Satisfaction satisfaction_band(double f) {
  if (!(f >= 0.0 && f <= 1.0)) throw Error("satisfaction fraction must lie in [0,1]");
  Satisfaction s;
  s.fraction = f;
  if (f >= 0.875) {
    s.band = "Very Satisfied";
    s.confidence = 100;
  } else if (f >= 0.625) {
    s.band = "Satisfied";
    s.confidence = 75;
  } else if (f >= 0.375) {
    s.band = "Neutral";
    s.confidence = 50;
  } else if (f >= 0.125) {
    s.band = "Dissatisfied";
    s.confidence = 25;
  } else {
    s.band = "Completely Dissatisfied";
    s.confidence = 0;
  }
  return s;
}

Satisfaction satisfaction(const SimTrace& trace) {
  if (trace.workloads.empty()) {
    auto s = satisfaction_band(0.0);
    s.defined = false;
    return s;
  }
  std::size_t ok = 0;
  for (const auto& w : trace.workloads)
    if (w.completed && w.finish_time <= w.deadline && w.within_budget) ++ok;
  return satisfaction_band(static_cast<double>(ok) / static_cast<double>(trace.workloads.size()));
}

Latency latency(const SimTrace& trace) {
  Latency l;
  std::size_t n = 0;
  for (const auto& w : trace.workloads) {
    if (!w.completed) continue;
    l.sum += w.finish_time - w.submit_time;
    ++n;
  }
  if (n == 0) {
    l.defined = false;
    return l;
  }
  l.mean = l.sum / static_cast<double>(n);
  return l;
}

void PenaltySchedule::validate() const {
  require_nonnegative(penalty_minimum, "penalty minimum");
  if (levels.empty()) throw Error("penalty schedule: no levels");
  for (const auto& l : levels) require_nonnegative(l.rate, "penalty rate");
}

double PenaltySchedule::rate_for(int tier) const {
  for (const auto& l : levels)
    if (l.tier == tier) return l.rate;
  throw Error("penalty schedule: no level for tier " + std::to_string(tier));
}

double delay(const WorkloadRecord& w, double horizon) {
  const double end = w.completed ? w.finish_time : std::max(horizon, w.deadline);
  return std::max(0.0, end - w.deadline);
}

double penalty_cost(const WorkloadRecord& w, const PenaltySchedule& schedule, double horizon) {
  const double d = delay(w, horizon);
  const bool missed = w.completed ? d > 0.0 : true;
  if (!missed) return 0.0;
  return schedule.penalty_minimum + schedule.rate_for(w.tier) * d;
}

namespace {

Cost cost_with(const SimTrace& trace, const PenaltySchedule& schedule, const double* single_rate) {
  schedule.validate();
  Cost c;
  for (const auto& r : trace.resources) {
    const double rate = single_rate ? *single_rate : r.cost_rate;
    c.resource += rate * r.busy_time / 3600.0;
  }
  for (const auto& w : trace.workloads) c.penalty += penalty_cost(w, schedule, trace.horizon);
  c.total = c.resource + c.penalty;
  return c;
}

}  // namespace

Cost average_cost(const SimTrace& trace, const PenaltySchedule& schedule) {
  return cost_with(trace, schedule, nullptr);
}

Cost average_cost(const SimTrace& trace, const PenaltySchedule& schedule, double resource_cost_rate) {
  require_nonnegative(resource_cost_rate, "resource cost rate");
  return cost_with(trace, schedule, &resource_cost_rate);
}

ExecutionTime execution_time(const SimTrace& trace) {
  ExecutionTime e;
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto& w : trace.workloads) {
    if (!w.completed) {
      ++e.excluded;
      continue;
    }
    sum += w.finish_time - w.start_time;
    ++n;
  }
  if (n > 0) e.mean = sum / static_cast<double>(n);
  return e;
}

Utilization resource_utilization(const SimTrace& trace) {
  Utilization u;
  for (const auto& r : trace.resources) {
    const double v = r.uptime > 0.0 ? std::min(1.0, r.busy_time / r.uptime) : 0.0;
    u.per_resource.push_back(v);
    u.sum += v;
  }
  if (!u.per_resource.empty()) u.mean_percent = 100.0 * u.sum / static_cast<double>(u.per_resource.size());
  return u;
}

ComputingCapacity computing_capacity(const SimTrace& trace) {
  ComputingCapacity c;
  std::size_t n = 0;
  for (const auto& r : trace.resources) {
    if (!(r.expected_usage_time > 0.0)) continue;
    c.sum += r.actual_usage_time / r.expected_usage_time;
    ++n;
  }
  if (n > 0) c.mean = c.sum / static_cast<double>(n);
  return c;
}

RequestCounts request_counts(const SimTrace& trace) {
  RequestCounts c;
  for (const auto& w : trace.workloads) {
    if (w.completed && w.finish_time <= w.deadline) {
      ++c.executed_ok;
    } else {
      ++c.missed_deadline;
    }
  }
  return c;
}

std::vector<std::pair<std::string, double>> report_metrics(const SimTrace& trace, const PenaltySchedule& schedule) {
  const auto counts = request_counts(trace);
  return {
      {"availability", availability(trace)},
      {"network_bandwidth", bandwidth(trace)},
      {"customer_satisfaction", satisfaction(trace).fraction},
      {"requests_missed", static_cast<double>(counts.executed_ok - counts.missed_deadline)},
      {"missed_deadline", static_cast<double>(counts.missed_deadline)},
      {"latency", latency(trace).mean},
      {"average_cost", average_cost(trace, schedule).total},
      {"execution_time", execution_time(trace).mean},
      {"resource_utilization", resource_utilization(trace).mean_percent},
      {"computing_capacity", computing_capacity(trace).sum},
  };
}

void write_metrics_csv(std::ostream& out, const std::vector<MetricRow>& rows) {
  write_csv_row(out, {"experiment", "workload_count", "technique", "metric", "value"});
  for (const auto& r : rows) {
    write_csv_row(out, {r.experiment, std::to_string(r.workload_count), r.technique, r.metric, format_number(r.value)});
  }
}

}  // namespace agri
