#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "agri/cuckoo_alloc.hpp"

namespace agri {

/// actual / predicted; throws when predicted is not positive.
double resource_consumption(double actual, double predicted);

/// Literal executed-successfully minus missed-deadline difference.
long long requests_balance(long long executed_ok, long long missed_deadline);

struct ResourceUsage {
  int resource = 0;
  ResourceState state = ResourceState::Active;
  double actual = 0.0;     // seconds of work observed in the window
  double predicted = 0.0;  // seconds the same work was expected to take
  int missed = 0;          // misses attributed to this resource in the window
};

struct MonitorSample {
  double time = 0.0;
  std::vector<ResourceUsage> usage;
  long long executed_ok = 0;
  long long missed_deadline = 0;
  long long window_requests = 0;
  int provided_resources = 0;
  int required_resources = 0;
  int spare_resources = 0;

  long long missed_count() const { return missed_deadline; }
  long long balance() const { return requests_balance(executed_ok, missed_deadline); }
};

enum class ActionKind { Continue, AllocateNew, Restart, Reallocate, DeclareDead, Alert };

const char* to_string(ActionKind k);

struct PlanStep {
  ActionKind kind = ActionKind::Continue;
  int resource = -1;  // -1 when the step is not about one resource
  int count = 0;      // AllocateNew only
  std::string reason;
  bool capacity = false;  // raised by the resource requirement check
};

struct Plan {
  std::vector<PlanStep> steps;
  bool is_continue() const { return steps.size() == 1 && steps[0].kind == ActionKind::Continue; }
};

struct ActionLogEntry {
  double time = 0.0;
  int resource = -1;
  ActionKind action = ActionKind::Continue;
  std::string reason;
};

struct KnowledgeBase {
  double consumption_threshold = 1.5;
  double missed_fraction = 0.05;  // of the window's requests
  std::map<int, int> offenses;    // resource -> breaches since it was last healthy
  bool capacity_alert = false;    // an unmet capacity alert is outstanding
  std::vector<ActionLogEntry> log;

  int offense_count(int resource) const;
  /// Healthy resources in the sample start over; the capacity alert clears
  /// once the pool covers the requirement.
  void absorb(const MonitorSample& sample);
  void validate() const;
};

/// Alg. 3 checks in order: capacity, consumption, missed deadlines. One plan
/// per tick.
Plan analyze_plan(const MonitorSample& sample, const KnowledgeBase& kb);

/// Resources in service plus the idle reserve.
struct ResourcePool {
  std::vector<Resource> resources;
  std::vector<Resource> spares;

  Resource* find(int id);
  const Resource* find(int id) const;
  int active_count() const;
  double active_capacity() const;
  /// Moves up to `count` spares (lowest id first) into service.
  std::vector<int> activate(int count, double now);
};

struct Effect {
  std::vector<ActionLogEntry> entries;
  std::vector<int> restarted;
  std::vector<int> reallocated;
  std::vector<int> dead;
  std::vector<int> activated;
  std::optional<Assignment> assignment;  // set when pending work was re-planned
};

/// Applies the plan to the pool, records offenses and the action log, and
/// re-plans `pending` after AllocateNew or Reallocate.
Effect execute(const Plan& plan, ResourcePool& pool, KnowledgeBase& kb, double now,
               const std::vector<UserRequest>& pending, const AllocConfig& cfg, std::uint64_t seed);

void write_action_log_csv(std::ostream& out, const std::vector<ActionLogEntry>& log);

}  // namespace agri
