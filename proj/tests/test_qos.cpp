#include <algorithm>

#include "agri/error.hpp"
#include "agri/qos_manager.hpp"
#include "agri/random.hpp"
#include "doctest.h"

using namespace agri;

namespace {

UserRequest req(std::uint64_t id, double deadline, double size = 1000.0) {
  UserRequest r;
  r.id = id;
  r.deadline = deadline;
  r.size = size;
  return r;
}

}  // namespace

TEST_CASE("classify_request") {
  QosPolicy policy;
  policy.horizon_seconds = 10.0;
  CHECK(classify_request(req(1, 10.0), policy) == QosClass::NonQoS);
  CHECK(classify_request(req(1, 9.5), policy) == QosClass::QoS);
  auto r = req(1, 1000.0);
  r.penalty_rate = 0.02;
  CHECK(classify_request(r, policy) == QosClass::QoS);

  QosPolicy factor;  // 2 x size / 1000 MIPS
  CHECK(classify_request(req(2, 100.0, 1000.0), factor) == QosClass::NonQoS);
  CHECK(classify_request(req(2, 2.0, 1000.0), factor) == QosClass::NonQoS);
  CHECK(classify_request(req(2, 1.9, 1000.0), factor) == QosClass::QoS);
}

TEST_CASE("priority ranks penalty tiers") {
  const std::vector<double> tiers = {0.05, 0.02, 0.0};
  CHECK(priority_for(0.05, tiers) == 0);
  CHECK(priority_for(0.02, tiers) == 1);
  CHECK(priority_for(0.0, tiers) == 2);
}

TEST_CASE("assess") {
  auto r = req(1, 2.0, 100.0);
  auto a = assess(r, 0.0, 100.0, {});
  CHECK(a.verdict == Verdict::AdmitNow);
  CHECK(a.estimated_completion == 1.0);

  // 1000 MI by t=2 needs 500 MIPS; 100 free, reserve units of 150 -> ceil(400/150) = 3
  r = req(2, 2.0, 1000.0);
  a = assess(r, 0.0, 100.0, {5, 150.0});
  CHECK(a.verdict == Verdict::NeedExtra);
  CHECK(a.extra == 3);
  CHECK(assess(r, 0.0, 100.0, {2, 150.0}).verdict == Verdict::Defer);
  CHECK(assess(r, 0.0, 0.0, {}).verdict == Verdict::Defer);
  CHECK(assess(r, 3.0, 100.0, {5, 150.0}).verdict == Verdict::Defer);

  UserRequest zero = req(3, 5.0, 0.0);
  a = assess(zero, 1.0, 0.0, {});
  CHECK(a.verdict == Verdict::AdmitNow);
  CHECK(a.estimated_completion == 1.0);
  CHECK_THROWS_AS(assess(r, 0.0, -1.0, {}), Error);

  Rng rng(2);
  for (int t = 0; t < 500; ++t) {
    auto q = req(9, rng.uniform(1.0, 20.0), rng.uniform(10.0, 5000.0));
    const double c1 = rng.uniform(0.0, 1000.0), c2 = c1 + rng.uniform(0.0, 1000.0);
    if (assess(q, 0.0, c1, {3, 200.0}).verdict == Verdict::AdmitNow) {
      CHECK(assess(q, 0.0, c2, {3, 200.0}).verdict == Verdict::AdmitNow);
    }
  }
}

TEST_CASE("queues") {
  QosQueues q;
  CHECK_FALSE(q.next().has_value());
  q.enqueue(req(1, 5.0));
  CHECK(q.next()->id == 1);

  auto a = req(1, 50.0), b = req(2, 60.0);
  a.qos_class = b.qos_class = QosClass::QoS;
  a.priority = 2;
  b.priority = 1;
  q.enqueue(a);
  q.enqueue(b);
  CHECK(q.next()->id == 2);
  CHECK(q.next()->id == 1);

  // Mixed set against a stable sort on (critical, priority, deadline, arrival).
  Rng rng(6);
  for (int t = 0; t < 50; ++t) {
    std::vector<UserRequest> reqs;
    QosQueues qq;
    for (std::uint64_t i = 0; i < 5; ++i) {
      auto r = req(i, static_cast<double>(rng.uniform_int(1, 3)));
      r.qos_class = rng.uniform() < 0.5 ? QosClass::QoS : QosClass::NonQoS;
      r.priority = static_cast<int>(rng.uniform_int(0, 2));
      reqs.push_back(r);
      qq.enqueue(r);
    }
    auto oracle = reqs;
    std::stable_sort(oracle.begin(), oracle.end(), [](const UserRequest& x, const UserRequest& y) {
      const bool cx = x.qos_class == QosClass::QoS, cy = y.qos_class == QosClass::QoS;
      if (cx != cy) return cx;
      if (!cx) return false;
      if (x.priority != y.priority) return x.priority < y.priority;
      return x.deadline < y.deadline;
    });
    CHECK(qq.snapshot().size() == 5);
    for (const auto& o : oracle) CHECK(qq.next()->id == o.id);
    CHECK(qq.empty());
  }

  // Every non-critical request comes out once critical arrivals stop.
  QosQueues drain;
  for (std::uint64_t i = 0; i < 20; ++i) {
    auto r = req(i, 1.0);
    r.qos_class = i % 3 == 0 ? QosClass::NonQoS : QosClass::QoS;
    drain.enqueue(r);
  }
  int seen = 0;
  while (drain.next()) ++seen;
  CHECK(seen == 20);

  QosQueues rm;
  for (std::uint64_t i = 0; i < 6; ++i) rm.enqueue(req(i, static_cast<double>(i)));
  const auto gone = rm.remove_if([](const UserRequest& r) { return r.deadline < 3.0; });
  CHECK(gone.size() == 3);
  CHECK(rm.size() == 3);
}

TEST_CASE("request validation") {
  auto r = req(1, 5.0);
  CHECK_NOTHROW(r.validate());
  r.deadline = 0.0;
  CHECK_THROWS_AS(r.validate(), Error);
  r = req(1, 5.0, 0.0);
  CHECK_THROWS_AS(r.validate(), Error);
}
