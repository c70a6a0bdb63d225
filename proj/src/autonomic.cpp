#include "agri/autonomic.hpp"

#include <algorithm>
#include <ostream>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

double resource_consumption(double actual, double predicted) {
  if (!(predicted > 0.0)) throw Error("resource_consumption: predicted usage must be positive");
  return actual / predicted;
}

long long requests_balance(long long executed_ok, long long missed_deadline) { return executed_ok - missed_deadline; }

const char* to_string(ActionKind k) {
  switch (k) {
    case ActionKind::Continue: return "Continue";
    case ActionKind::AllocateNew: return "AllocateNew";
    case ActionKind::Restart: return "Restart";
    case ActionKind::Reallocate: return "Reallocate";
    case ActionKind::DeclareDead: return "DeclareDead";
    case ActionKind::Alert: return "Alert";
  }
  return "?";
}

int KnowledgeBase::offense_count(int resource) const {
  auto it = offenses.find(resource);
  return it == offenses.end() ? 0 : it->second;
}

void KnowledgeBase::absorb(const MonitorSample& sample) {
  for (const auto& u : sample.usage) {
    if (u.state != ResourceState::Active || !(u.predicted > 0.0)) continue;
    if (resource_consumption(u.actual, u.predicted) <= consumption_threshold && u.missed == 0) {
      offenses.erase(u.resource);
    }
  }
  if (sample.provided_resources >= sample.required_resources) capacity_alert = false;
}

void KnowledgeBase::validate() const {
  if (!(consumption_threshold > 0.0)) throw Error("knowledge base: consumption threshold must be positive");
  if (!(missed_fraction >= 0.0 && missed_fraction <= 1.0)) {
    throw Error("knowledge base: missed fraction must lie in [0,1]");
  }
}

namespace {

Plan escalate(int resource, const KnowledgeBase& kb, const MonitorSample& sample, const std::string& why) {
  Plan p;
  switch (kb.offense_count(resource)) {
    case 0:
      p.steps.push_back({ActionKind::Restart, resource, 0, why});
      break;
    case 1:
      p.steps.push_back({ActionKind::Reallocate, resource, 0, why});
      break;
    default:
      if (sample.spare_resources > 0) {
        p.steps.push_back({ActionKind::DeclareDead, resource, 0, why});
        p.steps.push_back({ActionKind::AllocateNew, resource, 1, "replace resource " + std::to_string(resource)});
      } else {
        p.steps.push_back({ActionKind::Alert, resource, 0, why + "; no spare to replace it"});
      }
  }
  return p;
}

}  // namespace

Plan analyze_plan(const MonitorSample& sample, const KnowledgeBase& kb) {
  // Resource requirement.
  if (sample.provided_resources < sample.required_resources) {
    const int deficit = sample.required_resources - sample.provided_resources;
    const std::string why = "provided " + std::to_string(sample.provided_resources) + " < required " +
                            std::to_string(sample.required_resources);
    if (sample.spare_resources > 0) {
      return Plan{{{ActionKind::AllocateNew, -1, std::min(deficit, sample.spare_resources), why}}};
    }
    if (!kb.capacity_alert) return Plan{{{ActionKind::Alert, -1, 0, why + "; reserve exhausted", true}}};
  }

  // Resource consumption.
  const ResourceUsage* worst = nullptr;
  double worst_c = kb.consumption_threshold;
  for (const auto& u : sample.usage) {
    if (u.state != ResourceState::Active || !(u.predicted > 0.0)) continue;
    const double c = resource_consumption(u.actual, u.predicted);
    if (c > worst_c || (worst && c == worst_c && u.resource < worst->resource)) {
      worst = &u;
      worst_c = c;
    }
  }
  if (worst) {
    return escalate(worst->resource, kb, sample,
                    "consumption " + format_number(worst_c) + " > " + format_number(kb.consumption_threshold));
  }

  // Requests missed.
  if (static_cast<double>(sample.missed_count()) > kb.missed_fraction * static_cast<double>(sample.window_requests)) {
    const std::string why = "missed " + std::to_string(sample.missed_count()) + " of " +
                            std::to_string(sample.window_requests);
    const ResourceUsage* blame = nullptr;
    for (const auto& u : sample.usage) {
      if (u.state != ResourceState::Active || u.missed == 0) continue;
      if (!blame || u.missed > blame->missed || (u.missed == blame->missed && u.resource < blame->resource)) {
        blame = &u;
      }
    }
    if (blame) return escalate(blame->resource, kb, sample, why);
    return Plan{{{ActionKind::Alert, -1, 0, why + "; no resource to blame"}}};
  }
  return Plan{{{ActionKind::Continue, -1, 0, ""}}};
}

Resource* ResourcePool::find(int id) {
  for (auto& r : resources)
    if (r.id == id) return &r;
  return nullptr;
}

const Resource* ResourcePool::find(int id) const {
  for (const auto& r : resources)
    if (r.id == id) return &r;
  return nullptr;
}

int ResourcePool::active_count() const {
  return static_cast<int>(std::count_if(resources.begin(), resources.end(),
                                        [](const Resource& r) { return r.state == ResourceState::Active; }));
}

double ResourcePool::active_capacity() const {
  double c = 0.0;
  for (const auto& r : resources)
    if (r.state == ResourceState::Active) c += r.capacity;
  return c;
}

std::vector<int> ResourcePool::activate(int count, double now) {
  std::sort(spares.begin(), spares.end(), [](const Resource& a, const Resource& b) { return a.id < b.id; });
  std::vector<int> ids;
  while (count-- > 0 && !spares.empty()) {
    Resource r = spares.front();
    spares.erase(spares.begin());
    r.state = ResourceState::Active;
    r.ready_at = std::max(r.ready_at, now);
    ids.push_back(r.id);
    resources.push_back(r);
  }
  return ids;
}

Effect execute(const Plan& plan, ResourcePool& pool, KnowledgeBase& kb, double now,
               const std::vector<UserRequest>& pending, const AllocConfig& cfg, std::uint64_t seed) {
  Effect fx;
  bool replan = false;
  auto log = [&](int resource, ActionKind kind, const std::string& reason) {
    fx.entries.push_back({now, resource, kind, reason});
    kb.log.push_back(fx.entries.back());
  };
  for (const auto& step : plan.steps) {
    switch (step.kind) {
      case ActionKind::Continue:
        break;
      case ActionKind::Restart: {
        Resource* r = pool.find(step.resource);
        if (!r) throw Error("execute: unknown resource " + std::to_string(step.resource));
        if (r->state == ResourceState::Dead) {
          throw Error("execute: cannot restart dead resource " + std::to_string(step.resource));
        }
        r->state = ResourceState::Restarting;
        ++kb.offenses[step.resource];
        fx.restarted.push_back(step.resource);
        log(step.resource, step.kind, step.reason);
        break;
      }
      case ActionKind::Reallocate: {
        const Resource* r = pool.find(step.resource);
        if (!r || r->state == ResourceState::Dead) {
          throw Error("execute: cannot reallocate from resource " + std::to_string(step.resource));
        }
        ++kb.offenses[step.resource];
        fx.reallocated.push_back(step.resource);
        replan = true;
        log(step.resource, step.kind, step.reason);
        break;
      }
      case ActionKind::DeclareDead: {
        Resource* r = pool.find(step.resource);
        if (!r) throw Error("execute: unknown resource " + std::to_string(step.resource));
        r->state = ResourceState::Dead;
        kb.offenses.erase(step.resource);
        fx.dead.push_back(step.resource);
        log(step.resource, step.kind, step.reason);
        break;
      }
      case ActionKind::AllocateNew: {
        const auto ids = pool.activate(step.count, now);
        if (ids.empty()) {
          log(-1, ActionKind::Alert, step.reason + "; reserve exhausted");
          break;
        }
        for (int id : ids) {
          fx.activated.push_back(id);
          log(id, step.kind, step.reason);
        }
        replan = true;
        break;
      }
      case ActionKind::Alert:
        if (step.capacity) kb.capacity_alert = true;
        log(step.resource, step.kind, step.reason);
        break;
    }
  }
  if (replan && !pending.empty()) fx.assignment = allocate(pending, pool.resources, now, cfg, seed);
  return fx;
}

void write_action_log_csv(std::ostream& out, const std::vector<ActionLogEntry>& log) {
  write_csv_row(out, {"time", "resource", "action", "reason"});
  for (const auto& e : log) {
    write_csv_row(out, {format_number(e.time), e.resource < 0 ? "" : std::to_string(e.resource),
                        to_string(e.action), e.reason});
  }
}

}  // namespace agri
