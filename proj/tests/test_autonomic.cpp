#include <sstream>

#include "agri/autonomic.hpp"
#include "agri/error.hpp"
#include "doctest.h"

using namespace agri;

namespace {

ResourcePool small_pool(int in_service, int spares) {
  ResourcePool pool;
  for (int i = 0; i < in_service + spares; ++i) {
    Resource r;
    r.id = i;
    r.capacity = 1000.0 + 250.0 * i;
    r.cost_rate = 0.1 * (i + 1);
    (i < in_service ? pool.resources : pool.spares).push_back(r);
  }
  return pool;
}

MonitorSample healthy(const ResourcePool& pool, double t = 10.0) {
  MonitorSample s;
  s.time = t;
  for (const auto& r : pool.resources) s.usage.push_back({r.id, r.state, 10.0, 10.0, 0});
  s.executed_ok = 40;
  s.window_requests = 40;
  s.provided_resources = pool.active_count();
  s.required_resources = pool.active_count();
  s.spare_resources = static_cast<int>(pool.spares.size());
  return s;
}

enum class Breach { Consumption, Missed };

MonitorSample breach(const ResourcePool& pool, int resource, Breach kind) {
  MonitorSample s = healthy(pool);
  for (auto& u : s.usage) {
    if (u.resource != resource) continue;
    if (kind == Breach::Consumption) {
      u.actual = 16.0;
    } else {
      u.missed = 3;
    }
  }
  if (kind == Breach::Missed) {
    s.missed_deadline = 3;
    s.executed_ok = 37;
  }
  return s;
}

UserRequest work(std::uint64_t id, double size) {
  UserRequest r;
  r.id = id;
  r.size = size;
  r.deadline = 1e6;
  r.budget = 5.0;
  return r;
}

}  // namespace

TEST_CASE("resource_consumption and requests_balance") {
  CHECK(resource_consumption(10.0, 10.0) == 1.0);
  CHECK(resource_consumption(0.0, 10.0) == 0.0);
  CHECK(resource_consumption(15.0, 10.0) == 1.5);
  CHECK_THROWS_AS(resource_consumption(1.0, 0.0), Error);
  CHECK(requests_balance(10, 0) == 10);
  CHECK(requests_balance(0, 0) == 0);
  CHECK(requests_balance(7, 3) == 4);
  MonitorSample s;
  s.executed_ok = 7;
  s.missed_deadline = 3;
  CHECK(s.missed_count() == 3);
  CHECK(s.balance() == 4);
}

TEST_CASE("analyze_plan: quiet tick continues") {
  const auto pool = small_pool(3, 1);
  KnowledgeBase kb;
  CHECK(analyze_plan(healthy(pool), kb).is_continue());
}

TEST_CASE("analyze_plan: capacity check comes first") {
  const auto pool = small_pool(3, 2);
  KnowledgeBase kb;
  auto s = breach(pool, 1, Breach::Consumption);
  s.required_resources = 6;
  auto p = analyze_plan(s, kb);
  REQUIRE(p.steps.size() == 1);
  CHECK(p.steps[0].kind == ActionKind::AllocateNew);
  CHECK(p.steps[0].count == 2);

  s.spare_resources = 0;
  p = analyze_plan(s, kb);
  CHECK(p.steps[0].kind == ActionKind::Alert);
  kb.capacity_alert = true;
  p = analyze_plan(s, kb);
  CHECK(p.steps[0].kind == ActionKind::Restart);
  CHECK(p.steps[0].resource == 1);
}

TEST_CASE("analyze_plan: consumption 1.6 on first offense restarts") {
  const auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  auto s = healthy(pool);
  s.usage[0].actual = 16.0;
  const auto p = analyze_plan(s, kb);
  REQUIRE(p.steps.size() == 1);
  CHECK(p.steps[0].kind == ActionKind::Restart);
  CHECK(p.steps[0].resource == 0);
  s.usage[0].actual = 15.0;
  CHECK(analyze_plan(s, kb).is_continue());
}

TEST_CASE("analyze_plan is pure") {
  const auto pool = small_pool(3, 1);
  KnowledgeBase kb;
  kb.offenses[2] = 1;
  const auto s = breach(pool, 2, Breach::Missed);
  const auto a = analyze_plan(s, kb);
  const auto b = analyze_plan(s, kb);
  REQUIRE(a.steps.size() == b.steps.size());
  for (std::size_t i = 0; i < a.steps.size(); ++i) {
    CHECK(a.steps[i].kind == b.steps[i].kind);
    CHECK(a.steps[i].resource == b.steps[i].resource);
    CHECK(a.steps[i].reason == b.steps[i].reason);
  }
  CHECK(kb.offense_count(2) == 1);
}

TEST_CASE("missed threshold uses the raw count") {
  const auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  auto s = healthy(pool);
  s.window_requests = 100;
  s.missed_deadline = 5;
  s.usage[1].missed = 5;
  CHECK(analyze_plan(s, kb).is_continue());
  s.missed_deadline = 6;
  s.usage[1].missed = 6;
  const auto p = analyze_plan(s, kb);
  CHECK(p.steps[0].kind == ActionKind::Restart);
  CHECK(p.steps[0].resource == 1);
  s.usage[1].missed = 0;
  CHECK(analyze_plan(s, kb).steps[0].kind == ActionKind::Alert);
}

TEST_CASE("escalation ladder over every 3-breach sequence") {
  for (int mask = 0; mask < 8; ++mask) {
    CAPTURE(mask);
    auto pool = small_pool(3, 1);
    KnowledgeBase kb;
    const ActionKind expect[3] = {ActionKind::Restart, ActionKind::Reallocate, ActionKind::DeclareDead};
    for (int tick = 0; tick < 3; ++tick) {
      const Breach kind = (mask >> tick) & 1 ? Breach::Missed : Breach::Consumption;
      const auto plan = analyze_plan(breach(pool, 1, kind), kb);
      CHECK(plan.steps[0].kind == expect[tick]);
      CHECK(plan.steps[0].resource == 1);
      if (tick == 2) {
        REQUIRE(plan.steps.size() == 2);
        CHECK(plan.steps[1].kind == ActionKind::AllocateNew);
      }
      CHECK(kb.offense_count(1) <= 2);
      execute(plan, pool, kb, 10.0 * tick, {}, AllocConfig{}, 1);
      if (pool.find(1)->state == ResourceState::Restarting) pool.find(1)->state = ResourceState::Active;
    }
    CHECK(pool.find(1)->state == ResourceState::Dead);
    CHECK(pool.find(3) != nullptr);
    CHECK(pool.spares.empty());
    CHECK(kb.log.size() == 4);
  }
}

TEST_CASE("a healthy tick resets the ladder") {
  auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  execute(analyze_plan(breach(pool, 0, Breach::Consumption), kb), pool, kb, 0.0, {}, AllocConfig{}, 1);
  pool.find(0)->state = ResourceState::Active;
  CHECK(kb.offense_count(0) == 1);
  kb.absorb(healthy(pool));
  CHECK(kb.offense_count(0) == 0);
  CHECK(analyze_plan(breach(pool, 0, Breach::Consumption), kb).steps[0].kind == ActionKind::Restart);
}

TEST_CASE("third offense without a spare alerts") {
  auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  kb.offenses[0] = 2;
  const auto plan = analyze_plan(breach(pool, 0, Breach::Consumption), kb);
  REQUIRE(plan.steps.size() == 1);
  CHECK(plan.steps[0].kind == ActionKind::Alert);
  const auto before = pool.resources;
  execute(plan, pool, kb, 5.0, {}, AllocConfig{}, 1);
  CHECK(pool.resources == before);
  CHECK(kb.log.size() == 1);
}

TEST_CASE("execute: continue leaves the pool unchanged") {
  auto pool = small_pool(3, 2);
  const auto before = pool.resources;
  const auto spares = pool.spares;
  KnowledgeBase kb;
  const auto fx = execute(analyze_plan(healthy(pool), kb), pool, kb, 10.0, {work(1, 5000.0)}, AllocConfig{}, 1);
  CHECK(pool.resources == before);
  CHECK(pool.spares == spares);
  CHECK(fx.entries.empty());
  CHECK(!fx.assignment);
  CHECK(kb.log.empty());
}

TEST_CASE("execute: restart and dead errors") {
  auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  Plan restart{{{ActionKind::Restart, 1, 0, "test"}}};
  execute(restart, pool, kb, 0.0, {}, AllocConfig{}, 1);
  CHECK(pool.find(1)->state == ResourceState::Restarting);
  CHECK(kb.offense_count(1) == 1);
  pool.find(1)->state = ResourceState::Dead;
  CHECK_THROWS_AS(execute(restart, pool, kb, 0.0, {}, AllocConfig{}, 1), Error);
}

TEST_CASE("dead resources receive no further work") {
  auto pool = small_pool(3, 1);
  KnowledgeBase kb;
  kb.offenses[0] = 2;
  std::vector<UserRequest> pending;
  for (std::uint64_t i = 1; i <= 12; ++i) pending.push_back(work(i, 2000.0 + 300.0 * i));
  const auto plan = analyze_plan(breach(pool, 0, Breach::Consumption), kb);
  const auto fx = execute(plan, pool, kb, 20.0, pending, AllocConfig{}, 3);
  REQUIRE(fx.assignment);
  CHECK(fx.assignment->placed.size() == pending.size());
  for (const auto& e : fx.assignment->placed) CHECK(e.resource != 0);
  CHECK(fx.activated == std::vector<int>{3});
}

TEST_CASE("action log csv") {
  auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  execute(Plan{{{ActionKind::Alert, -1, 0, "reserve exhausted, 2 short"}}}, pool, kb, 12.5, {}, AllocConfig{}, 1);
  execute(Plan{{{ActionKind::Restart, 1, 0, "consumption 1.6 > 1.5"}}}, pool, kb, 20.0, {}, AllocConfig{}, 1);
  std::ostringstream out;
  write_action_log_csv(out, kb.log);
  CHECK(out.str() ==
        "time,resource,action,reason\n"
        "12.5,,Alert,\"reserve exhausted, 2 short\"\n"
        "20,1,Restart,consumption 1.6 > 1.5\n");
}

TEST_CASE("capacity alert fires once until the pool recovers") {
  auto pool = small_pool(2, 0);
  KnowledgeBase kb;
  auto s = healthy(pool);
  s.required_resources = 3;
  auto plan = analyze_plan(s, kb);
  CHECK(plan.steps[0].kind == ActionKind::Alert);
  execute(plan, pool, kb, 0.0, {}, AllocConfig{}, 1);
  CHECK(kb.capacity_alert);
  CHECK(analyze_plan(s, kb).is_continue());
  kb.absorb(healthy(pool));
  CHECK(!kb.capacity_alert);
}
