#include <algorithm>
#include <sstream>

#include "agri/error.hpp"
#include "agri/simkernel.hpp"
#include "doctest.h"

using namespace agri;

namespace {

SimConfig small(int workloads, int resources, Technique t = Technique::Autonomic) {
  SimConfig c;
  c.workload_count = workloads;
  c.resource_count = resources;
  c.technique = t;
  c.seed = 42;
  return c;
}

// Pearson statistic over 10 equal-width bins.
double chi_square(const std::vector<double>& xs, double lo, double hi) {
  std::vector<double> bins(10, 0.0);
  for (double x : xs) bins[std::min<std::size_t>(9, static_cast<std::size_t>((x - lo) / (hi - lo) * 10.0))] += 1.0;
  const double e = static_cast<double>(xs.size()) / 10.0;
  double chi = 0.0;
  for (double b : bins) chi += (b - e) * (b - e) / e;
  return chi;
}

}  // namespace

TEST_CASE("generate_workloads: empty and deterministic") {
  CHECK(generate_workloads(small(0, 10)).empty());
  const auto a = generate_workloads(small(200, 10));
  const auto b = generate_workloads(small(200, 10));
  REQUIRE(a.size() == 200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].request.size == b[i].request.size);
    CHECK(a[i].request.deadline == b[i].request.deadline);
    CHECK(a[i].bits == b[i].bits);
  }
}

TEST_CASE("generate_workloads: ranges and uniformity") {
  const auto cfg = small(1000, 50);
  const auto ws = generate_workloads(cfg);
  std::vector<double> size, budget, bw, file, out;
  for (const auto& w : ws) {
    CHECK(w.request.size >= 11000.0);
    CHECK(w.request.size <= 13000.0);
    CHECK(w.request.budget >= 3.0);
    CHECK(w.request.budget <= 5.0);
    CHECK(w.bandwidth >= 100.0);
    CHECK(w.bandwidth <= 1500.0);
    CHECK(w.file_mb >= 345.0);
    CHECK(w.file_mb <= 420.0);
    CHECK(w.output_mb >= 345.0);
    CHECK(w.output_mb <= 450.0);
    CHECK(w.request.submit_time == 0.0);
    CHECK(w.request.deadline > w.request.submit_time);
    size.push_back(w.request.size);
    budget.push_back(w.request.budget);
    bw.push_back(w.bandwidth);
    file.push_back(w.file_mb);
    out.push_back(w.output_mb);
  }
  // 9 degrees of freedom, p = 0.01.
  const double crit = 21.666;
  CHECK(chi_square(size, 11000.0, 13000.0) < crit);
  CHECK(chi_square(budget, 3.0, 5.0) < crit);
  CHECK(chi_square(bw, 100.0, 1500.0) < crit);
  CHECK(chi_square(file, 345.0, 420.0) < crit);
  CHECK(chi_square(out, 345.0, 450.0) < crit);
}

TEST_CASE("generate_resources: ranges") {
  const auto rs = generate_resources(small(0, 250));
  for (const auto& r : rs) {
    CHECK(r.resource.capacity >= 100.0);
    CHECK(r.resource.capacity <= 4000.0);
    CHECK(r.memory_mb >= 2048.0);
    CHECK(r.memory_mb <= 12576.0);
    CHECK((r.speed == 1.0 || r.speed == 0.5));
  }
}

TEST_CASE("config validation") {
  auto c = small(10, 10);
  c.resource_count = 251;
  CHECK_THROWS_AS(c.validate(), Error);
  c = small(3001, 10);
  CHECK_THROWS_AS(c.validate(), Error);
  c = small(10, 10);
  c.pe_rating = {50.0, 4000.0};
  CHECK_THROWS_AS(run(c), Error);
  c = small(10, 10);
  c.budget = {3.0, 6.0};
  CHECK_THROWS_AS(c.validate(), Error);
  CHECK_NOTHROW(small(10, 10).validate());
}

TEST_CASE("config json round trip and strictness") {
  auto c = small(700, 60);
  c.arrival = ArrivalMode::Poisson;
  c.alloc.generations = 20;
  c.qos.horizon_seconds = 30.0;
  const auto back = sim_config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  CHECK_THROWS_AS(sim_config_from_json(nlohmann::json{{"resource_cnt", 5}}), ParseError);
  CHECK_THROWS_AS(sim_config_from_json(nlohmann::json{{"bandwidth", 5}}), ParseError);
  CHECK_THROWS_AS(sim_config_from_json(nlohmann::json{{"technique", "magic"}}), ParseError);
}

TEST_CASE("run: no workloads") {
  for (auto t : {Technique::Autonomic, Technique::Baseline}) {
    const auto r = run(small(0, 5, t));
    CHECK(r.trace.workloads.empty());
    CHECK(std::all_of(r.trace.events.begin(), r.trace.events.end(),
                      [](const EventRecord& e) { return e.kind == EventKind::MonitorTick; }));
  }
}

TEST_CASE("run: single server baseline matches hand arithmetic") {
  auto c = small(1, 1, Technique::Baseline);
  c.breakdown_rate = 0.0;
  c.straggler_fraction = 0.0;
  const auto w = generate_workloads(c)[0];
  const auto res = generate_resources(c)[0];
  const auto r = run(c);
  REQUIRE(r.trace.workloads.size() == 1);
  const auto& rec = r.trace.workloads[0];
  CHECK(rec.completed);
  CHECK(rec.start_time == 0.0);
  CHECK(rec.finish_time == w.request.size / res.resource.capacity);
  REQUIRE(r.trace.resources.size() == 1);
  CHECK(r.trace.resources[0].busy_time == rec.finish_time);
  CHECK(r.trace.horizon == rec.finish_time);
}

TEST_CASE("run: deterministic, ordered, conserving") {
  for (auto t : {Technique::Autonomic, Technique::Baseline}) {
    CAPTURE(to_string(t));
    const auto c = small(400, 30, t);
    const auto a = run(c);
    const auto b = run(c);
    CHECK(a.trace == b.trace);
    for (std::size_t i = 1; i < a.trace.events.size(); ++i) CHECK(a.trace.events[i - 1].time <= a.trace.events[i].time);
    CHECK(a.stats.arrivals == 400);
    CHECK(a.stats.arrivals == a.stats.completions + a.stats.drops + a.stats.still_queued);
    CHECK(a.stats.still_queued == 0);
    for (const auto& w : a.trace.workloads) {
      if (!w.completed) continue;
      CHECK(w.start_time >= w.submit_time);
      CHECK(w.finish_time >= w.start_time);
    }
  }
}

TEST_CASE("run: a time cap leaves work queued and still conserves") {
  auto c = small(600, 20);
  c.max_time = 100.0;
  const auto r = run(c);
  CHECK(r.stats.still_queued > 0);
  CHECK(r.stats.arrivals == r.stats.completions + r.stats.drops + r.stats.still_queued);
}

TEST_CASE("run: poisson arrivals") {
  auto c = small(300, 20);
  c.arrival = ArrivalMode::Poisson;
  c.arrival_rate = 0.5;
  const auto r = run(c);
  CHECK(r.stats.arrivals == r.stats.completions + r.stats.drops);
  double prev = 0.0;
  for (const auto& w : r.trace.workloads) {
    CHECK(w.submit_time >= prev);
    prev = w.submit_time;
  }
}

TEST_CASE("baseline never looks at deadlines or budgets") {
  const auto r = run(small(500, 40, Technique::Baseline));
  CHECK(r.stats.deadline_reads == 0);
  CHECK(r.stats.budget_reads == 0);
  CHECK(r.actions.empty());
  const auto a = run(small(500, 40, Technique::Autonomic));
  CHECK(a.stats.deadline_reads > 0);
}

TEST_CASE("dead resources get no work afterwards") {
  auto c = small(1500, 40);
  c.straggler_fraction = 0.5;
  c.restart_fix_probability = 0.0;
  const auto r = run(c);
  int deaths = 0;
  for (const auto& a : r.actions) {
    if (a.action != ActionKind::DeclareDead) continue;
    ++deaths;
    for (const auto& e : r.trace.events) {
      if (e.kind == EventKind::Start && e.resource == a.resource) CHECK(e.time < a.time);
    }
  }
  CHECK(deaths > 0);
  // Each death follows a restart and a reallocation of the same resource.
  for (const auto& a : r.actions) {
    if (a.action != ActionKind::DeclareDead) continue;
    int restarts = 0, reallocs = 0;
    for (const auto& b : r.actions) {
      if (b.resource != a.resource || b.time >= a.time) continue;
      restarts += b.action == ActionKind::Restart;
      reallocs += b.action == ActionKind::Reallocate;
    }
    CHECK(restarts >= 1);
    CHECK(reallocs >= 1);
  }
}

TEST_CASE("compare: row counts and worker independence") {
  auto c = small(0, 30);
  const auto one = compare(c, {200}, {Technique::Autonomic, Technique::Baseline});
  CHECK(one.rows.size() == 2 * 10);
  CHECK(one.deltas.size() == 10);
  const auto counts = parse_sweep("100:600:100");
  const auto serial = compare(c, counts, {Technique::Autonomic, Technique::Baseline}, 1);
  const auto parallel = compare(c, counts, {Technique::Autonomic, Technique::Baseline}, 4);
  CHECK(serial.rows.size() == counts.size() * 2 * 10);
  std::ostringstream a, b;
  write_metrics_csv(a, serial.rows);
  write_metrics_csv(b, parallel.rows);
  CHECK(a.str() == b.str());
}

TEST_CASE("parse_sweep") {
  CHECK(parse_sweep("500:3000:500") == std::vector<int>{500, 1000, 1500, 2000, 2500, 3000});
  CHECK(parse_sweep("5:5:1") == std::vector<int>{5});
  CHECK(parse_sweep("0:10:4") == std::vector<int>{0, 4, 8});
  CHECK_THROWS_AS(parse_sweep("500:3000"), ParseError);
  CHECK_THROWS_AS(parse_sweep("10:5:1"), ParseError);
  CHECK_THROWS_AS(parse_sweep("1:5:0"), ParseError);
  CHECK_THROWS_AS(parse_sweep("a:5:1"), ParseError);
}
