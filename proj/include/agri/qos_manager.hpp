#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <tuple>
#include <vector>

#include "agri/features.hpp"

namespace agri {

enum class QosClass { QoS, NonQoS };

struct UserRequest {
  std::uint64_t id = 0;
  double submit_time = 0.0;
  double size = 0.0;  // million instructions
  double deadline = 0.0;
  double budget = 0.0;
  double penalty_rate = 0.0;  // currency per second late
  double penalty_min = 0.0;   // flat charge once late
  QosClass qos_class = QosClass::NonQoS;
  int priority = 0;  // lower is more urgent
  std::optional<FeatureVector> agri_query;

  /// Throws agri::Error when an invariant is broken.
  void validate() const;
};

struct QosPolicy {
  double horizon_factor = 2.0;              // slack < factor x estimated service time
  std::optional<double> horizon_seconds;    // overrides the factor when set
  double reference_capacity = 1000.0;       // MIPS used for the service estimate
};

/// QoS when the deadline slack is tighter than the horizon or a penalty applies.
QosClass classify_request(const UserRequest& r, const QosPolicy& policy);

/// Rank of the request's penalty rate among the tier rates, highest rate = 0.
int priority_for(double penalty_rate, const std::vector<double>& tier_rates);

enum class Verdict { AdmitNow, NeedExtra, Defer };

struct Assessment {
  double estimated_completion = 0.0;
  Verdict verdict = Verdict::Defer;
  int extra = 0;  // reserve units when verdict is NeedExtra
};

struct ReserveStock {
  int count = 0;               // idle reserve resources
  double unit_capacity = 0.0;  // MIPS of one reserve resource
};

Assessment assess(const UserRequest& r, double now, double free_capacity, const ReserveStock& reserve);

/// Critical requests ordered by (priority, deadline, arrival); the rest FIFO.
class QosQueues {
 public:
  void enqueue(UserRequest r);
  /// Critical first; nullopt when both queues are empty.
  std::optional<UserRequest> next();

  std::size_t critical_size() const { return critical_.size(); }
  std::size_t non_critical_size() const { return non_critical_.size(); }
  bool empty() const { return critical_.empty() && non_critical_.empty(); }
  std::size_t size() const { return critical_.size() + non_critical_.size(); }

  /// Current contents in next() order.
  std::vector<UserRequest> snapshot() const;

  /// Removes every request for which pred holds, in next() order.
  template <typename Pred>
  std::vector<UserRequest> remove_if(Pred pred) {
    std::vector<UserRequest> out;
    for (auto it = critical_.begin(); it != critical_.end();) {
      if (pred(it->second)) {
        out.push_back(it->second);
        it = critical_.erase(it);
      } else {
        ++it;
      }
    }
    for (auto it = non_critical_.begin(); it != non_critical_.end();) {
      if (pred(*it)) {
        out.push_back(*it);
        it = non_critical_.erase(it);
      } else {
        ++it;
      }
    }
    return out;
  }

 private:
  std::map<std::tuple<int, double, std::uint64_t>, UserRequest> critical_;
  std::deque<UserRequest> non_critical_;
  std::uint64_t seq_ = 0;
};

}  // namespace agri
