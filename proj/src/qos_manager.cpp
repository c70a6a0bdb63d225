#include "agri/qos_manager.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "agri/error.hpp"

namespace agri {

void UserRequest::validate() const {
  const std::string who = "request " + std::to_string(id);
  if (!(deadline > submit_time)) throw Error(who + ": deadline must be after submit time");
  if (!(size > 0.0)) throw Error(who + ": size must be positive");
  if (!(budget >= 0.0)) throw Error(who + ": budget must be non-negative");
  if (!(penalty_rate >= 0.0) || !(penalty_min >= 0.0)) throw Error(who + ": penalties must be non-negative");
}

QosClass classify_request(const UserRequest& r, const QosPolicy& policy) {
  if (r.penalty_rate > 0.0) return QosClass::QoS;
  const double slack = r.deadline - r.submit_time;
  const double horizon = policy.horizon_seconds
                             ? *policy.horizon_seconds
                             : policy.horizon_factor * r.size / policy.reference_capacity;
  return slack < horizon ? QosClass::QoS : QosClass::NonQoS;
}

int priority_for(double penalty_rate, const std::vector<double>& tier_rates) {
  int rank = 0;
  std::vector<double> seen;
  for (double t : tier_rates) {
    if (t > penalty_rate && std::find(seen.begin(), seen.end(), t) == seen.end()) {
      seen.push_back(t);
      ++rank;
    }
  }
  return rank;
}

Assessment assess(const UserRequest& r, double now, double free_capacity, const ReserveStock& reserve) {
  if (free_capacity < 0.0) throw Error("assess: negative free capacity");
  Assessment a;
  if (r.size == 0.0) {
    a.estimated_completion = now;
    a.verdict = Verdict::AdmitNow;
    return a;
  }
  a.estimated_completion =
      free_capacity > 0.0 ? now + r.size / free_capacity : std::numeric_limits<double>::infinity();
  if (a.estimated_completion <= r.deadline) {
    a.verdict = Verdict::AdmitNow;
    return a;
  }
  const double window = r.deadline - now;
  if (window <= 0.0 || reserve.count <= 0 || !(reserve.unit_capacity > 0.0)) {
    a.verdict = Verdict::Defer;
    return a;
  }
  const double extra_capacity = r.size / window - free_capacity;
  const double k = std::ceil(extra_capacity / reserve.unit_capacity);
  if (k <= static_cast<double>(reserve.count)) {
    a.verdict = Verdict::NeedExtra;
    a.extra = std::max(1, static_cast<int>(k));
  } else {
    a.verdict = Verdict::Defer;
  }
  return a;
}

void QosQueues::enqueue(UserRequest r) {
  const std::uint64_t s = seq_++;
  if (r.qos_class == QosClass::QoS) {
    critical_.emplace(std::make_tuple(r.priority, r.deadline, s), std::move(r));
  } else {
    non_critical_.push_back(std::move(r));
  }
}

// GCC 11 reports a spurious -Wuninitialized when moving the optional query vector.
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic push
#pragma GCC diagnostic ignored "-Wuninitialized"
#pragma GCC diagnostic ignored "-Wmaybe-uninitialized"
#endif
std::optional<UserRequest> QosQueues::next() {
  if (!critical_.empty()) {
    auto node = critical_.extract(critical_.begin());
    return std::move(node.mapped());
  }
  if (!non_critical_.empty()) {
    UserRequest r = std::move(non_critical_.front());
    non_critical_.pop_front();
    return r;
  }
  return std::nullopt;
}
#if defined(__GNUC__) && !defined(__clang__)
#pragma GCC diagnostic pop
#endif

std::vector<UserRequest> QosQueues::snapshot() const {
  std::vector<UserRequest> out;
  for (const auto& [key, r] : critical_) out.push_back(r);
  out.insert(out.end(), non_critical_.begin(), non_critical_.end());
  return out;
}

}  // namespace agri
