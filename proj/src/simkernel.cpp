#include "agri/simkernel.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <optional>
#include <ostream>
#include <queue>
#include <thread>

#include "agri/csv.hpp"
#include "agri/error.hpp"
#include "agri/random.hpp"

namespace agri {

using nlohmann::json;

const char* to_string(Technique t) { return t == Technique::Autonomic ? "autonomic" : "baseline"; }

Technique parse_technique(const std::string& text) {
  if (text == "autonomic") return Technique::Autonomic;
  if (text == "baseline") return Technique::Baseline;
  throw ParseError("unknown technique '" + text + "' (expected autonomic or baseline)");
}

namespace {

constexpr double kWorkloadBaseMb = 10000.0;
constexpr double kFileBaseMb = 300.0;
constexpr double kOutputBaseMb = 300.0;

void check_range(const Range& r, const Range& allowed, const char* name) {
  if (!(r.lo <= r.hi) || r.lo < allowed.lo || r.hi > allowed.hi) {
    throw Error(std::string("config: ") + name + " [" + format_number(r.lo) + ", " + format_number(r.hi) +
                "] must lie within [" + format_number(allowed.lo) + ", " + format_number(allowed.hi) + "]");
  }
}

void check(bool ok, const std::string& what) {
  if (!ok) throw Error("config: " + what);
}

}  // namespace

void SimConfig::validate() const {
  check(resource_count >= 1 && resource_count <= 250, "resource_count must lie in [1, 250]");
  check(workload_count >= 0 && workload_count <= 3000, "workload_count must lie in [0, 3000]");
  check_range(bandwidth, {100.0, 1500.0}, "bandwidth");
  check_range(workload_inflation, {0.10, 0.30}, "workload_inflation");
  check_range(pe_rating, {100.0, 4000.0}, "pe_rating");
  check_range(budget, {3.0, 5.0}, "budget");
  check_range(memory, {2048.0, 12576.0}, "memory");
  check_range(file_inflation, {0.15, 0.40}, "file_inflation");
  check_range(output_inflation, {0.15, 0.50}, "output_inflation");
  check(pes_per_machine == 1, "pes_per_machine must be 1");
  check(mi_per_mb > 0.0, "mi_per_mb must be positive");
  check(price_per_mi.lo > 0.0 && price_per_mi.lo <= price_per_mi.hi, "price_per_mi must be a positive range");
  check(arrival_rate > 0.0, "arrival_rate must be positive");
  check(deadline_slack.lo >= 0.0 && deadline_slack.lo <= deadline_slack.hi, "deadline_slack must be a nonnegative range");
  check(max_time >= 0.0, "max_time must be nonnegative");
  check(breakdown_rate >= 0.0, "breakdown_rate must be nonnegative");
  check(repair_time >= 0.0, "repair_time must be nonnegative");
  check(straggler_fraction >= 0.0 && straggler_fraction <= 1.0, "straggler_fraction must lie in [0, 1]");
  check(straggler_speed > 0.0 && straggler_speed <= 1.0, "straggler_speed must lie in (0, 1]");
  check(restart_time >= 0.0, "restart_time must be nonnegative");
  check(restart_fix_probability >= 0.0 && restart_fix_probability <= 1.0,
        "restart_fix_probability must lie in [0, 1]");
  check(reserve_fraction >= 0.0 && reserve_fraction < 1.0, "reserve_fraction must lie in [0, 1)");
  check(monitor_interval > 0.0, "monitor_interval must be positive");
  check(consumption_threshold > 0.0, "consumption_threshold must be positive");
  check(missed_fraction >= 0.0 && missed_fraction <= 1.0, "missed_fraction must lie in [0, 1]");
  check(qos.horizon_factor > 0.0 && qos.reference_capacity > 0.0, "qos policy values must be positive");
  penalties.validate();
  alloc.validate();
}

namespace {

Range range_from(const json& j, const char* name) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number()) {
    throw ParseError(std::string("config: ") + name + " must be a [lo, hi] pair");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

template <class T>
T number_from(const json& j, const char* name) {
  if (!j.is_number()) throw ParseError(std::string("config: ") + name + " must be a number");
  if constexpr (std::is_integral_v<T>) {
    if (!j.is_number_integer()) throw ParseError(std::string("config: ") + name + " must be an integer");
  }
  return j.get<T>();
}

}  // namespace

SimConfig sim_config_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  SimConfig c;
  for (const auto& [key, v] : j.items()) {
    const char* k = key.c_str();
    if (key == "resource_count") c.resource_count = number_from<int>(v, k);
    else if (key == "workload_count") c.workload_count = number_from<int>(v, k);
    else if (key == "bandwidth") c.bandwidth = range_from(v, k);
    else if (key == "workload_inflation") c.workload_inflation = range_from(v, k);
    else if (key == "pe_rating") c.pe_rating = range_from(v, k);
    else if (key == "budget") c.budget = range_from(v, k);
    else if (key == "memory") c.memory = range_from(v, k);
    else if (key == "file_inflation") c.file_inflation = range_from(v, k);
    else if (key == "output_inflation") c.output_inflation = range_from(v, k);
    else if (key == "pes_per_machine") c.pes_per_machine = number_from<int>(v, k);
    else if (key == "mi_per_mb") c.mi_per_mb = number_from<double>(v, k);
    else if (key == "price_per_mi") c.price_per_mi = range_from(v, k);
    else if (key == "seed") c.seed = number_from<std::uint64_t>(v, k);
    else if (key == "technique") {
      if (!v.is_string()) throw ParseError("config: technique must be a string");
      c.technique = parse_technique(v.get<std::string>());
    } else if (key == "arrival") {
      const auto s = v.is_string() ? v.get<std::string>() : std::string();
      if (s == "batch") c.arrival = ArrivalMode::Batch;
      else if (s == "poisson") c.arrival = ArrivalMode::Poisson;
      else throw ParseError("config: arrival must be \"batch\" or \"poisson\"");
    } else if (key == "arrival_rate") c.arrival_rate = number_from<double>(v, k);
    else if (key == "deadline_slack") c.deadline_slack = range_from(v, k);
    else if (key == "max_time") c.max_time = number_from<double>(v, k);
    else if (key == "breakdown_rate") c.breakdown_rate = number_from<double>(v, k);
    else if (key == "repair_time") c.repair_time = number_from<double>(v, k);
    else if (key == "straggler_fraction") c.straggler_fraction = number_from<double>(v, k);
    else if (key == "straggler_speed") c.straggler_speed = number_from<double>(v, k);
    else if (key == "restart_time") c.restart_time = number_from<double>(v, k);
    else if (key == "restart_fix_probability") c.restart_fix_probability = number_from<double>(v, k);
    else if (key == "reserve_fraction") c.reserve_fraction = number_from<double>(v, k);
    else if (key == "monitor_interval") c.monitor_interval = number_from<double>(v, k);
    else if (key == "consumption_threshold") c.consumption_threshold = number_from<double>(v, k);
    else if (key == "missed_fraction") c.missed_fraction = number_from<double>(v, k);
    else if (key == "penalty_minimum") c.penalties.penalty_minimum = number_from<double>(v, k);
    else if (key == "penalty_rates") {
      if (!v.is_array()) throw ParseError("config: penalty_rates must be an array");
      c.penalties.levels.clear();
      int tier = 0;
      for (const auto& r : v) c.penalties.levels.push_back({tier++, number_from<double>(r, k)});
    } else if (key == "qos_horizon_factor") c.qos.horizon_factor = number_from<double>(v, k);
    else if (key == "qos_horizon_seconds") c.qos.horizon_seconds = number_from<double>(v, k);
    else if (key == "qos_reference_capacity") c.qos.reference_capacity = number_from<double>(v, k);
    else if (key == "alloc") {
      if (!v.is_object()) throw ParseError("config: alloc must be an object");
      for (const auto& [ak, av] : v.items()) {
        const char* n = ak.c_str();
        if (ak == "population") c.alloc.population = number_from<int>(av, n);
        else if (ak == "generations") c.alloc.generations = number_from<int>(av, n);
        else if (ak == "stall_generations") c.alloc.stall_generations = number_from<int>(av, n);
        else if (ak == "min_eggs") c.alloc.min_eggs = number_from<int>(av, n);
        else if (ak == "max_eggs") c.alloc.max_eggs = number_from<int>(av, n);
        else if (ak == "gamma") c.alloc.gamma = number_from<int>(av, n);
        else if (ak == "lambda") c.alloc.lambda = number_from<double>(av, n);
        else if (ak == "consumption_threshold") c.alloc.consumption_threshold = number_from<double>(av, n);
        else if (ak == "kmeans_k") c.alloc.kmeans_k = number_from<int>(av, n);
        else if (ak == "mode") {
          const auto s = av.is_string() ? av.get<std::string>() : std::string();
          if (s == "utilization") c.alloc.mode = ProfitMode::Utilization;
          else if (s == "negcost") c.alloc.mode = ProfitMode::NegCost;
          else throw ParseError("config: alloc.mode must be \"utilization\" or \"negcost\"");
        } else throw ParseError("config: unknown field alloc." + ak);
      }
    } else throw ParseError("config: unknown field " + key);
  }
  return c;
}

json to_json(const SimConfig& c) {
  json rates = json::array();
  for (const auto& l : c.penalties.levels) rates.push_back(l.rate);
  json j = {
      {"resource_count", c.resource_count},
      {"workload_count", c.workload_count},
      {"bandwidth", range_json(c.bandwidth)},
      {"workload_inflation", range_json(c.workload_inflation)},
      {"pe_rating", range_json(c.pe_rating)},
      {"budget", range_json(c.budget)},
      {"memory", range_json(c.memory)},
      {"file_inflation", range_json(c.file_inflation)},
      {"output_inflation", range_json(c.output_inflation)},
      {"pes_per_machine", c.pes_per_machine},
      {"mi_per_mb", c.mi_per_mb},
      {"price_per_mi", range_json(c.price_per_mi)},
      {"seed", c.seed},
      {"technique", to_string(c.technique)},
      {"arrival", c.arrival == ArrivalMode::Batch ? "batch" : "poisson"},
      {"arrival_rate", c.arrival_rate},
      {"deadline_slack", range_json(c.deadline_slack)},
      {"max_time", c.max_time},
      {"breakdown_rate", c.breakdown_rate},
      {"repair_time", c.repair_time},
      {"straggler_fraction", c.straggler_fraction},
      {"straggler_speed", c.straggler_speed},
      {"restart_time", c.restart_time},
      {"restart_fix_probability", c.restart_fix_probability},
      {"reserve_fraction", c.reserve_fraction},
      {"monitor_interval", c.monitor_interval},
      {"consumption_threshold", c.consumption_threshold},
      {"missed_fraction", c.missed_fraction},
      {"penalty_minimum", c.penalties.penalty_minimum},
      {"penalty_rates", rates},
      {"qos_horizon_factor", c.qos.horizon_factor},
      {"qos_reference_capacity", c.qos.reference_capacity},
      {"alloc",
       {{"population", c.alloc.population},
        {"generations", c.alloc.generations},
        {"stall_generations", c.alloc.stall_generations},
        {"min_eggs", c.alloc.min_eggs},
        {"max_eggs", c.alloc.max_eggs},
        {"gamma", c.alloc.gamma},
        {"lambda", c.alloc.lambda},
        {"consumption_threshold", c.alloc.consumption_threshold},
        {"kmeans_k", c.alloc.kmeans_k},
        {"mode", c.alloc.mode == ProfitMode::Utilization ? "utilization" : "negcost"}}},
  };
  if (c.qos.horizon_seconds) j["qos_horizon_seconds"] = *c.qos.horizon_seconds;
  return j;
}

SimConfig load_sim_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  try {
    auto cfg = sim_config_from_json(j);
    cfg.validate();
    return cfg;
  } catch (const Error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

namespace {

enum Stream : std::uint64_t { kWorkloads = 1, kResources = 2, kAlloc = 3, kBreakdown = 1000, kRestart = 200000 };

double fluid_makespan(const SimConfig& cfg) {
  const double mean_mi = kWorkloadBaseMb * (1.0 + cfg.workload_inflation.mid()) * cfg.mi_per_mb;
  return cfg.workload_count * mean_mi / (cfg.resource_count * cfg.pe_rating.mid());
}

}  // namespace

std::vector<Workload> generate_workloads(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, kWorkloads));
  const double fluid = fluid_makespan(cfg);
  std::vector<Workload> out;
  out.reserve(static_cast<std::size_t>(cfg.workload_count));
  double clock = 0.0;
  for (int i = 0; i < cfg.workload_count; ++i) {
    Workload w;
    auto& r = w.request;
    r.id = static_cast<std::uint64_t>(i + 1);
    if (cfg.arrival == ArrivalMode::Poisson) {
      clock += rng.exponential(cfg.arrival_rate);
      r.submit_time = clock;
    }
    const double mb = kWorkloadBaseMb * (1.0 + rng.uniform(cfg.workload_inflation.lo, cfg.workload_inflation.hi));
    r.size = mb * cfg.mi_per_mb;
    r.budget = rng.uniform(cfg.budget.lo, cfg.budget.hi);
    w.bandwidth = rng.uniform(cfg.bandwidth.lo, cfg.bandwidth.hi);
    w.file_mb = kFileBaseMb * (1.0 + rng.uniform(cfg.file_inflation.lo, cfg.file_inflation.hi));
    w.output_mb = kOutputBaseMb * (1.0 + rng.uniform(cfg.output_inflation.lo, cfg.output_inflation.hi));
    w.bits = (w.file_mb + w.output_mb) * 8e6;
    w.tier = static_cast<int>(rng.uniform_int(0, cfg.penalties.levels.size() - 1));
    r.penalty_rate = cfg.penalties.levels[static_cast<std::size_t>(w.tier)].rate;
    r.penalty_min = cfg.penalties.penalty_minimum;
    r.deadline = r.submit_time + r.size / cfg.pe_rating.mid() +
                 rng.uniform(cfg.deadline_slack.lo, cfg.deadline_slack.hi) * fluid;
    out.push_back(std::move(w));
  }
  return out;
}

std::vector<SimResource> generate_resources(const SimConfig& cfg) {
  cfg.validate();
  Rng rng(mix_seed(cfg.seed, kResources));
  std::vector<SimResource> out;
  for (int i = 0; i < cfg.resource_count; ++i) {
    SimResource s;
    s.resource.id = i;
    s.resource.capacity = std::min(cfg.pe_rating.hi, std::floor(rng.uniform(cfg.pe_rating.lo, cfg.pe_rating.hi + 1.0)));
    s.resource.cost_rate = s.resource.capacity * 3600.0 * rng.uniform(cfg.price_per_mi.lo, cfg.price_per_mi.hi);
    s.memory_mb = rng.uniform(cfg.memory.lo, cfg.memory.hi);
    s.speed = rng.uniform() < cfg.straggler_fraction ? cfg.straggler_speed : 1.0;
    out.push_back(s);
  }
  return out;
}

namespace {

// Internal kinds; RestartDone is not part of the exported trace.
enum class Ev { Repair, RestartDone, Finish, Breakdown, Arrival, MonitorTick };

struct Event {
  double time;
  Ev kind;
  std::uint64_t id;
  std::uint64_t token;
  std::uint64_t seq;
};

struct Later {
  bool operator()(const Event& a, const Event& b) const {
    if (a.time != b.time) return a.time > b.time;
    if (a.kind != b.kind) return a.kind > b.kind;
    if (a.id != b.id) return a.id > b.id;
    return a.seq > b.seq;
  }
};

struct Running {
  std::size_t w;
  double remaining;  // MI
  double since;      // last time progress was accounted
};

struct Machine {
  SimResource spec;
  bool in_service = false;
  bool dead = false;
  bool broken = false;
  bool restarting = false;
  double activated_at = 0.0;
  double died_at = 0.0;
  double broken_since = 0.0;
  std::deque<std::size_t> queue;
  double queued_mi = 0.0;
  std::optional<Running> job;
  std::uint64_t token = 0;
  Rng breakdown_rng{0};
  Rng restart_rng{0};
  // totals
  double busy = 0.0;
  double downtime = 0.0;
  double expected = 0.0;
  int breakdowns = 0;
  // monitor window
  double win_actual = 0.0;
  double win_predicted = 0.0;
  int win_missed = 0;
  double observed = 1.0;  // last observed consumption

  double rate() const { return spec.resource.capacity * spec.speed; }
  bool can_run() const { return in_service && !dead && !broken && !restarting; }
};

struct WorkState {
  double planned_finish = 0.0;
  double service = 0.0;  // seconds actually spent running
  bool resolved = false;
};

class Engine {
 public:
  explicit Engine(const SimConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    work_ = generate_workloads(cfg_);
    state_.resize(work_.size());
    const auto specs = generate_resources(cfg_);
    const int reserve = cfg_.technique == Technique::Autonomic
                            ? static_cast<int>(std::floor(cfg_.reserve_fraction * cfg_.resource_count))
                            : 0;
    const int serving = std::max(1, cfg_.resource_count - reserve);
    for (const auto& s : specs) {
      Machine m;
      m.spec = s;
      m.breakdown_rng = Rng(mix_seed(cfg_.seed, kBreakdown + static_cast<std::uint64_t>(s.resource.id)));
      m.restart_rng = Rng(mix_seed(cfg_.seed, kRestart + static_cast<std::uint64_t>(s.resource.id)));
      machines_.push_back(std::move(m));
      if (s.resource.id < serving) {
        pool_.resources.push_back(s.resource);
      } else {
        pool_.spares.push_back(s.resource);
      }
    }
    kb_.consumption_threshold = cfg_.consumption_threshold;
    kb_.missed_fraction = cfg_.missed_fraction;
    for (const auto& l : cfg_.penalties.levels) tier_rates_.push_back(l.rate);
  }

  SimResult run() {
    for (std::size_t i = 0; i < work_.size(); ++i) push(work_[i].request.submit_time, Ev::Arrival, i);
    for (const auto& r : pool_.resources) bring_into_service(static_cast<std::size_t>(r.id), 0.0);
    if (cfg_.technique == Technique::Autonomic && !work_.empty()) push(cfg_.monitor_interval, Ev::MonitorTick, 1);
    outstanding_ = static_cast<long long>(work_.size());

    while (!events_.empty() && outstanding_ > 0) {
      const double t = events_.top().time;
      if (cfg_.max_time > 0.0 && t > cfg_.max_time) break;
      bool dispatch = false;
      while (!events_.empty() && events_.top().time == t && outstanding_ > 0) {
        const Event e = events_.top();
        events_.pop();
        dispatch = handle(e) || dispatch;
      }
      if (dispatch && outstanding_ > 0) this->dispatch(t);
      start_idle(t);
    }
    return finish();
  }

 private:
  SimConfig cfg_;
  std::vector<Workload> work_;
  std::vector<WorkState> state_;
  std::vector<Machine> machines_;
  ResourcePool pool_;
  KnowledgeBase kb_;
  QosQueues queues_;
  std::vector<std::size_t> waiting_;  // awaiting the optimiser
  std::vector<double> tier_rates_;
  std::priority_queue<Event, std::vector<Event>, Later> events_;
  std::uint64_t seq_ = 0;
  long long outstanding_ = 0;
  std::size_t rr_ = 0;
  std::uint64_t alloc_calls_ = 0;
  double horizon_ = 0.0;
  // monitor window totals
  long long win_ok_ = 0, win_missed_ = 0, win_done_ = 0;
  SimResult out_;

  void push(double time, Ev kind, std::uint64_t id, std::uint64_t token = 0) {
    events_.push(Event{time, kind, id, token, seq_++});
  }

  void log_event(double time, EventKind kind, std::uint64_t id, int resource) {
    out_.trace.events.push_back({time, kind, id, resource});
  }

  Machine& machine(int id) { return machines_[static_cast<std::size_t>(id)]; }

  void bring_into_service(std::size_t m, double now) {
    auto& mc = machines_[m];
    mc.in_service = true;
    mc.activated_at = now;
    if (cfg_.breakdown_rate > 0.0) push(now + mc.breakdown_rng.exponential(cfg_.breakdown_rate), Ev::Breakdown, m);
  }

  // Accrue progress of the running job up to `now`.
  void accrue(Machine& m, double now) {
    if (!m.job || !m.can_run()) return;
    const double dt = now - m.job->since;
    m.job->remaining = std::max(0.0, m.job->remaining - dt * m.rate());
    m.busy += dt;
    state_[m.job->w].service += dt;
    m.job->since = now;
  }

  void schedule_finish(Machine& m, double now) {
    ++m.token;
    if (!m.job || !m.can_run()) return;
    m.job->since = now;
    push(now + m.job->remaining / m.rate(), Ev::Finish, static_cast<std::uint64_t>(m.spec.resource.id), m.token);
  }

  double ready_at(const Machine& m, double now) const {
    double t = now;
    if (m.job) t += m.job->remaining / m.spec.resource.capacity;
    if (m.broken) t += cfg_.repair_time;
    return t + m.queued_mi / m.spec.resource.capacity;
  }

  void enqueue_on(Machine& m, std::size_t w, double now) {
    const double size = work_[w].request.size;
    state_[w].planned_finish = ready_at(m, now) + size / m.spec.resource.capacity;
    m.queue.push_back(w);
    m.queued_mi += size;
  }

  void resolve(std::size_t w, double now) {
    state_[w].resolved = true;
    --outstanding_;
    horizon_ = std::max(horizon_, now);
  }

  bool handle(const Event& e) {
    switch (e.kind) {
      case Ev::Arrival: {
        const auto& r = work_[e.id].request;
        ++out_.stats.arrivals;
        log_event(e.time, EventKind::Arrival, r.id, -1);
        if (cfg_.technique == Technique::Baseline) {
          // FCFS admission, round-robin placement.
          const std::size_t n = pool_.resources.size();
          enqueue_on(machine(pool_.resources[rr_ % n].id), e.id, e.time);
          ++rr_;
          return false;
        }
        UserRequest q = r;
        q.qos_class = classify_request(q, cfg_.qos);
        q.priority = priority_for(q.penalty_rate, tier_rates_);
        ++out_.stats.deadline_reads;
        queues_.enqueue(std::move(q));
        return true;
      }
      case Ev::Finish: {
        auto& m = machine(static_cast<int>(e.id));
        if (e.token != m.token || !m.job) return false;
        accrue(m, e.time);
        const std::size_t w = m.job->w;
        m.job.reset();
        complete(m, w, e.time);
        return false;
      }
      case Ev::Breakdown: {
        auto& m = machine(static_cast<int>(e.id));
        if (!m.in_service || m.dead) return false;
        accrue(m, e.time);
        m.broken = true;
        m.broken_since = e.time;
        ++m.breakdowns;
        ++m.token;
        log_event(e.time, EventKind::Breakdown, e.id, static_cast<int>(e.id));
        push(e.time + cfg_.repair_time, Ev::Repair, e.id);
        return false;
      }
      case Ev::Repair: {
        auto& m = machine(static_cast<int>(e.id));
        if (!m.broken) return false;
        m.broken = false;
        m.downtime += e.time - m.broken_since;
        log_event(e.time, EventKind::Repair, e.id, static_cast<int>(e.id));
        if (m.dead) return false;
        schedule_finish(m, e.time);
        if (cfg_.breakdown_rate > 0.0) {
          push(e.time + m.breakdown_rng.exponential(cfg_.breakdown_rate), Ev::Breakdown, e.id);
        }
        return false;
      }
      case Ev::RestartDone: {
        auto& m = machine(static_cast<int>(e.id));
        if (!m.restarting) return false;
        m.restarting = false;
        if (auto* r = pool_.find(static_cast<int>(e.id)); r && r->state == ResourceState::Restarting) {
          r->state = ResourceState::Active;
        }
        if (m.spec.speed < 1.0 && m.restart_rng.uniform() < cfg_.restart_fix_probability) m.spec.speed = 1.0;
        schedule_finish(m, e.time);
        return true;
      }
      case Ev::MonitorTick:
        log_event(e.time, EventKind::MonitorTick, e.id, -1);
        monitor(e.time);
        push(e.time + cfg_.monitor_interval, Ev::MonitorTick, e.id + 1);
        return true;
    }
    return false;
  }

  void complete(Machine& m, std::size_t w, double now) {
    const auto& r = work_[w].request;
    auto& st = state_[w];
    const double predicted = r.size / m.spec.resource.capacity;
    m.expected += predicted;
    m.win_actual += st.service;
    m.win_predicted += predicted;
    ++win_done_;
    if (now <= r.deadline) {
      ++win_ok_;
    } else if (st.planned_finish <= r.deadline) {
      ++m.win_missed;
      ++win_missed_;
    }
    auto& rec = out_.trace.workloads[w];
    rec.finish_time = now;
    rec.completed = true;
    rec.resource = m.spec.resource.id;
    rec.cost = m.spec.resource.cost_rate * st.service / 3600.0;
    rec.within_budget = rec.cost <= r.budget;
    ++out_.stats.completions;
    log_event(now, EventKind::Finish, r.id, m.spec.resource.id);
    resolve(w, now);
  }

  void start_idle(double now) {
    for (auto& m : machines_) {
      while (m.can_run() && !m.job && !m.queue.empty()) {
        const std::size_t w = m.queue.front();
        m.queue.pop_front();
        m.queued_mi -= work_[w].request.size;
        if (m.queue.empty()) m.queued_mi = 0.0;
        if (cfg_.technique == Technique::Autonomic) {
          ++out_.stats.deadline_reads;
          if (now > work_[w].request.deadline) {
            ++out_.stats.drops;
            ++win_done_;
            resolve(w, now);
            continue;
          }
        }
        auto& rec = out_.trace.workloads[w];
        rec.start_time = now;
        rec.resource = m.spec.resource.id;
        m.job = Running{w, work_[w].request.size, now};
        log_event(now, EventKind::Start, work_[w].request.id, m.spec.resource.id);
        schedule_finish(m, now);
      }
    }
  }

  void sync_pool(double now) {
    for (auto& r : pool_.resources) {
      const auto& m = machine(r.id);
      r.ready_at = ready_at(m, now);
      r.consumption = m.observed;
    }
  }

  void activate_spares(int count, double now, const std::string& reason) {
    const auto ids = pool_.activate(count, now);
    for (int id : ids) {
      bring_into_service(static_cast<std::size_t>(id), now);
      kb_.log.push_back({now, id, ActionKind::AllocateNew, reason});
      ++out_.stats.activated;
    }
  }

  void place(const Assignment& a, double now) {
    ++out_.stats.allocations;
    auto placed = a.placed;
    std::stable_sort(placed.begin(), placed.end(),
                     [](const PlacementEntry& x, const PlacementEntry& y) { return x.start < y.start; });
    std::vector<std::size_t> by_id(work_.size() + 1);
    for (std::size_t i = 0; i < work_.size(); ++i) by_id[work_[i].request.id] = i;
    for (const auto& p : placed) enqueue_on(machine(p.resource), by_id[p.request], now);
    for (auto id : a.unassigned) waiting_.push_back(by_id[id]);
  }

  std::vector<UserRequest> requests_of(const std::vector<std::size_t>& ws) const {
    std::vector<UserRequest> out;
    for (auto w : ws) {
      UserRequest r = work_[w].request;
      r.qos_class = classify_request(r, cfg_.qos);
      r.priority = priority_for(r.penalty_rate, tier_rates_);
      out.push_back(std::move(r));
    }
    return out;
  }

  void optimise(const std::vector<std::size_t>& batch, double now) {
    if (batch.empty()) return;
    sync_pool(now);
    out_.stats.deadline_reads += static_cast<long long>(batch.size());
    out_.stats.budget_reads += static_cast<long long>(batch.size());
    const auto a = allocate(requests_of(batch), pool_.resources, now, cfg_.alloc,
                            mix_seed(cfg_.seed, kAlloc + 7919 * alloc_calls_++));
    place(a, now);
  }

  void dispatch(double now) {
    std::vector<std::size_t> batch;
    batch.swap(waiting_);
    std::vector<std::size_t> by_id(work_.size() + 1);
    for (std::size_t i = 0; i < work_.size(); ++i) by_id[work_[i].request.id] = i;
    while (auto r = queues_.next()) {
      const std::size_t w = by_id[r->id];
      if (r->qos_class != QosClass::QoS) {
        batch.push_back(w);
        continue;
      }
      // Earliest completion among running resources; that throughput is the
      // free capacity the request sees.
      Machine* best = nullptr;
      double best_finish = std::numeric_limits<double>::infinity();
      for (const auto& pr : pool_.resources) {
        auto& m = machine(pr.id);
        if (pr.state != ResourceState::Active || m.dead) continue;
        const double f = ready_at(m, now) + r->size / m.spec.resource.capacity;
        if (f < best_finish) {
          best_finish = f;
          best = &m;
        }
      }
      const double free = best ? r->size / (best_finish - now) : 0.0;
      ReserveStock reserve{static_cast<int>(pool_.spares.size()), 0.0};
      if (!pool_.spares.empty()) {
        double cap = 0.0;
        for (const auto& s : pool_.spares) cap += s.capacity;
        reserve.unit_capacity = cap / static_cast<double>(pool_.spares.size());
      }
      ++out_.stats.deadline_reads;
      const auto verdict = assess(*r, now, free, reserve);
      if (verdict.verdict == Verdict::AdmitNow && best) {
        enqueue_on(*best, w, now);
      } else if (verdict.verdict == Verdict::NeedExtra) {
        const std::size_t before = pool_.resources.size();
        activate_spares(verdict.extra, now, "reserve for request " + std::to_string(r->id));
        Machine* target = best;
        double tf = best_finish;
        for (std::size_t i = before; i < pool_.resources.size(); ++i) {
          auto& m = machine(pool_.resources[i].id);
          const double f = ready_at(m, now) + r->size / m.spec.resource.capacity;
          if (f < tf) {
            tf = f;
            target = &m;
          }
        }
        if (target) {
          enqueue_on(*target, w, now);
        } else {
          batch.push_back(w);
        }
      } else {
        batch.push_back(w);
      }
    }
    optimise(batch, now);
  }

  int required_resources(double now) const {
    std::vector<std::pair<double, double>> demand;  // deadline, MI
    for (const auto& m : machines_) {
      if (m.job) demand.emplace_back(work_[m.job->w].request.deadline, m.job->remaining);
      for (auto w : m.queue) demand.emplace_back(work_[w].request.deadline, work_[w].request.size);
    }
    for (auto w : waiting_) demand.emplace_back(work_[w].request.deadline, work_[w].request.size);
    std::sort(demand.begin(), demand.end());
    const double mean_cap = pool_.active_count() > 0 ? pool_.active_capacity() / pool_.active_count()
                                                     : cfg_.pe_rating.mid();
    double need = 0.0, cum = 0.0;
    for (const auto& [deadline, mi] : demand) {
      cum += mi;
      if (deadline <= now) continue;
      need = std::max(need, cum / ((deadline - now) * mean_cap));
    }
    const int total = static_cast<int>(pool_.resources.size() + pool_.spares.size());
    return std::min(total, static_cast<int>(std::ceil(need - 1e-9)));
  }

  void monitor(double now) {
    MonitorSample s;
    s.time = now;
    for (const auto& pr : pool_.resources) {
      auto& m = machine(pr.id);
      accrue(m, now);
      if (m.win_predicted > 0.0) {
        s.usage.push_back({pr.id, pr.state, m.win_actual, m.win_predicted, m.win_missed});
        m.observed = m.win_actual / m.win_predicted;
      }
    }
    s.executed_ok = win_ok_;
    s.missed_deadline = win_missed_;
    s.window_requests = win_done_;
    s.provided_resources = pool_.active_count();
    s.required_resources = required_resources(now);
    s.spare_resources = static_cast<int>(pool_.spares.size());
    for (auto& m : machines_) {
      m.win_actual = m.win_predicted = 0.0;
      m.win_missed = 0;
    }
    win_ok_ = win_missed_ = win_done_ = 0;
    // Progress was accrued above; finish events stay valid because the rate did not change.
    for (auto& m : machines_)
      if (m.job && m.can_run()) m.job->since = now;

    kb_.absorb(s);
    const Plan plan = analyze_plan(s, kb_);
    if (plan.is_continue()) return;

    std::vector<std::size_t> pending;
    auto drain = [&](Machine& m, bool with_running) {
      for (auto w : m.queue) pending.push_back(w);
      m.queue.clear();
      m.queued_mi = 0.0;
      if (with_running && m.job) {
        accrue(m, now);
        pending.push_back(m.job->w);
        m.job.reset();
        ++m.token;
      }
    };
    for (const auto& step : plan.steps) {
      if (step.kind == ActionKind::Reallocate) drain(machine(step.resource), false);
      if (step.kind == ActionKind::DeclareDead) drain(machine(step.resource), true);
      if (step.kind == ActionKind::AllocateNew && step.resource < 0) {
        for (auto& m : machines_) drain(m, false);
      }
    }
    std::sort(pending.begin(), pending.end());
    sync_pool(now);
    AllocConfig acfg = cfg_.alloc;
    const auto fx = execute(plan, pool_, kb_, now, requests_of(pending), acfg,
                            mix_seed(cfg_.seed, kAlloc + 7919 * alloc_calls_++));
    if (!pending.empty()) {
      out_.stats.deadline_reads += static_cast<long long>(pending.size());
      out_.stats.budget_reads += static_cast<long long>(pending.size());
    }
    for (int id : fx.activated) {
      bring_into_service(static_cast<std::size_t>(id), now);
      ++out_.stats.activated;
    }
    for (int id : fx.restarted) {
      auto& m = machine(id);
      accrue(m, now);
      m.restarting = true;
      ++m.token;
      ++out_.stats.restarts;
      push(now + cfg_.restart_time, Ev::RestartDone, static_cast<std::uint64_t>(id));
    }
    for (int id : fx.dead) {
      auto& m = machine(id);
      m.dead = true;
      m.died_at = now;
      ++out_.stats.dead;
    }
    if (fx.assignment) {
      place(*fx.assignment, now);
    } else {
      waiting_.insert(waiting_.end(), pending.begin(), pending.end());
    }
  }

  SimResult finish() {
    auto& t = out_.trace;
    out_.stats.still_queued = outstanding_;
    t.horizon = horizon_;
    for (const auto& m : machines_) {
      if (!m.in_service) continue;
      const double end = m.dead ? m.died_at : horizon_;
      double down = m.downtime;
      if (m.broken) down += std::max(0.0, end - m.broken_since);
      ResourceRecord r;
      r.id = m.spec.resource.id;
      r.capacity = m.spec.resource.capacity;
      r.cost_rate = m.spec.resource.cost_rate;
      r.downtime = down;
      r.uptime = std::max(0.0, end - m.activated_at - down);
      r.busy_time = m.busy;
      r.actual_usage_time = m.busy;
      r.expected_usage_time = m.expected;
      r.breakdown_count = m.breakdowns;
      t.resources.push_back(r);
    }
    out_.actions = kb_.log;
    return std::move(out_);
  }

 public:
  void init_records() {
    out_.trace.workloads.clear();
    for (const auto& w : work_) {
      WorkloadRecord rec;
      rec.id = w.request.id;
      rec.submit_time = w.request.submit_time;
      rec.deadline = w.request.deadline;
      rec.budget = w.request.budget;
      rec.bits_transferred = w.bits;
      rec.tier = w.tier;
      out_.trace.workloads.push_back(rec);
    }
  }
};

}  // namespace

SimResult run(const SimConfig& cfg) {
  Engine e(cfg);
  e.init_records();
  return e.run();
}

std::vector<int> parse_sweep(const std::string& text) {
  std::vector<double> parts;
  std::size_t pos = 0;
  while (true) {
    const auto colon = text.find(':', pos);
    parts.push_back(parse_number(text.substr(pos, colon - pos), "sweep"));
    if (colon == std::string::npos) break;
    pos = colon + 1;
  }
  if (parts.size() != 3) throw ParseError("sweep must look like a:b:step");
  const double a = parts[0], b = parts[1], step = parts[2];
  for (double v : parts) {
    if (v != std::floor(v) || v < 0) throw ParseError("sweep values must be nonnegative integers");
  }
  if (step <= 0 || b < a) throw ParseError("sweep needs a <= b and a positive step");
  std::vector<int> out;
  for (double v = a; v <= b; v += step) out.push_back(static_cast<int>(v));
  return out;
}

CompareReport compare(const SimConfig& base, const std::vector<int>& counts, const std::vector<Technique>& techniques,
                      int threads, const std::string& experiment) {
  base.validate();
  struct Job {
    int count;
    Technique technique;
    std::vector<std::pair<std::string, double>> metrics;
  };
  std::vector<Job> jobs;
  for (int c : counts)
    for (auto t : techniques) jobs.push_back({c, t, {}});
  for (const auto& j : jobs) {
    SimConfig cfg = base;
    cfg.workload_count = j.count;
    cfg.validate();
  }

  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(jobs.size());
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        SimConfig cfg = base;
        cfg.workload_count = jobs[i].count;
        cfg.technique = jobs[i].technique;
        jobs[i].metrics = report_metrics(run(cfg).trace, cfg.penalties);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(jobs.size())));
  std::vector<std::thread> pool;
  for (int i = 1; i < n; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  CompareReport rep;
  for (const auto& j : jobs)
    for (const auto& [metric, value] : j.metrics) rep.rows.push_back({experiment, j.count, to_string(j.technique), metric, value});
  for (int c : counts) {
    const Job* a = nullptr;
    const Job* b = nullptr;
    for (const auto& j : jobs) {
      if (j.count != c) continue;
      if (j.technique == Technique::Autonomic) a = &j;
      if (j.technique == Technique::Baseline) b = &j;
    }
    if (!a || !b) continue;
    for (std::size_t k = 0; k < a->metrics.size(); ++k) {
      rep.deltas.push_back({c, a->metrics[k].first, a->metrics[k].second, b->metrics[k].second,
                            a->metrics[k].second - b->metrics[k].second});
    }
  }
  return rep;
}

void write_delta_csv(std::ostream& out, const std::vector<DeltaRow>& rows) {
  write_csv_row(out, {"workload_count", "metric", "autonomic", "baseline", "delta"});
  for (const auto& r : rows) {
    write_csv_row(out, {std::to_string(r.workload_count), r.metric, format_number(r.autonomic),
                        format_number(r.baseline), format_number(r.delta)});
  }
}

}  // namespace agri
