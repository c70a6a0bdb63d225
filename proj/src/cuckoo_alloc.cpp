#include "agri/cuckoo_alloc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

const char* to_string(ResourceState s) {
  switch (s) {
    case ResourceState::Active: return "Active";
    case ResourceState::Restarting: return "Restarting";
    case ResourceState::Dead: return "Dead";
  }
  return "?";
}

double utilization(const ResourceSet& set) {
  double sum = 0.0;
  for (const auto& r : set.resources) {
    if (!(r.uptime > 0.0)) throw Error("utilization: resource " + std::to_string(r.id) + " has zero uptime");
    sum += r.busy_time / r.uptime;
  }
  return sum;
}

double mean_utilization(const ResourceSet& set) {
  if (set.resources.empty()) return 0.0;
  return utilization(set) / static_cast<double>(set.resources.size());
}

double elr(int executed, int total, int gamma, double i_u, double i_l) {
  if (total <= 0) throw Error("elr: total must be positive");
  if (gamma < 1) throw Error("elr: gamma must be at least 1");
  if (i_u < i_l) throw Error("elr: i_u below i_l");
  return gamma * (static_cast<double>(executed) / total) * (i_u - i_l);
}

double profit(const ResourceSet& set, ProfitMode mode, double lambda) {
  if (mode == ProfitMode::NegCost) {
    double cost = 0.0;
    for (const auto& r : set.resources) cost += r.cost_rate * r.busy_time / 3600.0;
    return -cost;
  }
  bool has_uptime = !set.resources.empty();
  for (const auto& r : set.resources) has_uptime = has_uptime && r.uptime > 0.0;
  const double u = has_uptime ? mean_utilization(set) : 0.0;
  return u - lambda * set.missed;
}

void AllocConfig::validate() const {
  if (population < 1) throw Error("alloc: population must be at least 1");
  if (generations < 0) throw Error("alloc: generations must be non-negative");
  if (stall_generations < 1) throw Error("alloc: stall_generations must be at least 1");
  if (min_eggs < 1 || max_eggs < min_eggs) throw Error("alloc: egg range is invalid");
  if (gamma < 1) throw Error("alloc: gamma must be at least 1");
  if (!(consumption_threshold > 0.0)) throw Error("alloc: consumption threshold must be positive");
  if (kmeans_k < 1) throw Error("alloc: kmeans_k must be at least 1");
}

std::vector<UserRequest> decode_order(std::vector<UserRequest> batch) {
  std::stable_sort(batch.begin(), batch.end(), [](const UserRequest& a, const UserRequest& b) {
    const bool ca = a.qos_class == QosClass::QoS, cb = b.qos_class == QosClass::QoS;
    if (ca != cb) return ca;
    if (a.deadline != b.deadline) return a.deadline < b.deadline;
    return a.id < b.id;
  });
  return batch;
}

Placement::Placement(std::vector<UserRequest> batch, std::vector<Resource> pool, double now)
    : requests_(decode_order(std::move(batch))), now_(now) {
  std::sort(pool.begin(), pool.end(), [](const Resource& a, const Resource& b) { return a.id < b.id; });
  for (auto& r : pool) {
    if (r.state == ResourceState::Active) eligible_.push_back(r);
  }
  if (eligible_.empty()) return;
  for (const auto& r : eligible_) group_caps_.push_back(r.capacity);
  std::sort(group_caps_.begin(), group_caps_.end());
  group_caps_.erase(std::unique(group_caps_.begin(), group_caps_.end()), group_caps_.end());
  groups_.resize(group_caps_.size());
  for (std::size_t j = 0; j < eligible_.size(); ++j) {
    const auto g = std::lower_bound(group_caps_.begin(), group_caps_.end(), eligible_[j].capacity);
    groups_[static_cast<std::size_t>(g - group_caps_.begin())].push_back(j);
  }
  i_l_ = group_caps_.front();
  i_u_ = group_caps_.back();
}

std::size_t Placement::group_of(double x) const {
  auto it = std::lower_bound(group_caps_.begin(), group_caps_.end(), x);
  if (it == group_caps_.end()) return group_caps_.size() - 1;
  const auto hi = static_cast<std::size_t>(it - group_caps_.begin());
  if (hi == 0) return 0;
  return (x - group_caps_[hi - 1] <= group_caps_[hi] - x) ? hi - 1 : hi;
}

Placement::Plan Placement::decode(const std::vector<double>& position) const {
  if (position.size() != requests_.size()) throw Error("decode: position has the wrong length");
  if (eligible_.empty() && !requests_.empty()) throw Error("decode: no eligible resources");
  using Slot = std::pair<double, std::size_t>;  // (available at, eligible index)
  std::vector<std::priority_queue<Slot, std::vector<Slot>, std::greater<>>> heaps(groups_.size());
  Plan plan;
  plan.busy.assign(eligible_.size(), 0.0);
  plan.assigned.assign(eligible_.size(), 0.0);
  plan.makespan = now_;
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    for (auto j : groups_[g]) {
      const double avail = std::max(now_, eligible_[j].ready_at);
      plan.busy[j] = avail - now_;
      plan.makespan = std::max(plan.makespan, avail);
      heaps[g].push({avail, j});
    }
  }
  plan.resource.resize(requests_.size());
  plan.start.resize(requests_.size());
  plan.finish.resize(requests_.size());
  for (std::size_t i = 0; i < requests_.size(); ++i) {
    auto& heap = heaps[group_of(position[i])];
    const auto [avail, j] = heap.top();
    heap.pop();
    const double service = requests_[i].size / eligible_[j].capacity;
    const double finish = avail + service;
    plan.resource[i] = j;
    plan.start[i] = avail;
    plan.finish[i] = finish;
    plan.busy[j] += service;
    plan.assigned[j] += service;
    plan.makespan = std::max(plan.makespan, finish);
    if (finish > requests_[i].deadline) ++plan.missed;
    heap.push({finish, j});
  }
  for (std::size_t j = 0; j < eligible_.size(); ++j) plan.cost += eligible_[j].cost_rate * plan.busy[j] / 3600.0;
  return plan;
}

Instance Placement::evaluate(std::vector<double> position, const AllocConfig& cfg) const {
  const Plan plan = decode(position);
  Instance egg;
  egg.position = std::move(position);
  egg.missed = plan.missed;
  const double uptime = plan.makespan - now_;
  if (uptime > 0.0 && !eligible_.empty()) {
    double raw = 0.0;
    for (double b : plan.busy) raw += b / uptime;
    egg.utilization = raw / static_cast<double>(eligible_.size());
  }
  double predicted = 0.0, actual = 0.0;
  for (std::size_t j = 0; j < eligible_.size(); ++j) {
    predicted += plan.assigned[j];
    actual += plan.assigned[j] * eligible_[j].consumption;
  }
  egg.consumption = predicted > 0.0 ? actual / predicted : 1.0;
  egg.profit = cfg.mode == ProfitMode::NegCost ? -plan.cost : egg.utilization - cfg.lambda * plan.missed;
  return egg;
}

void Placement::score(ResourceSet& set, const AllocConfig& cfg) const {
  const Plan plan = decode(set.position);
  const Instance egg = evaluate(set.position, cfg);
  set.resources = eligible_;
  for (std::size_t j = 0; j < eligible_.size(); ++j) {
    set.resources[j].busy_time = plan.busy[j];
    set.resources[j].uptime = plan.makespan - now_;
  }
  set.utilization = egg.utilization;
  set.consumption = egg.consumption;
  set.profit = egg.profit;
  set.missed = egg.missed;
  set.cost = plan.cost;
}

ResourceSet Placement::adopt(const Instance& egg, int id) const {
  ResourceSet set;
  set.id = id;
  set.position = egg.position;
  set.utilization = egg.utilization;
  set.consumption = egg.consumption;
  set.profit = egg.profit;
  set.missed = egg.missed;
  return set;
}

ResourceSet lay_instances(ResourceSet set, const Placement& p, const AllocConfig& cfg, Rng& rng) {
  const std::size_t m = set.position.size();
  const auto count = rng.uniform_int(static_cast<std::uint64_t>(cfg.min_eggs), static_cast<std::uint64_t>(cfg.max_eggs));
  const std::uint64_t kmax =
      std::min<std::uint64_t>(std::max<std::uint64_t>(2, static_cast<std::uint64_t>(std::ceil(std::sqrt(m)))), m);
  set.instances.clear();
  for (std::uint64_t e = 0; e < count; ++e) {
    std::vector<double> pos = set.position;
    if (m > 0) {
      const auto k = rng.uniform_int(1, std::max<std::uint64_t>(1, kmax));
      std::vector<std::uint64_t> picked;
      while (picked.size() < k) {
        const auto idx = rng.uniform_int(0, m - 1);
        if (std::find(picked.begin(), picked.end(), idx) != picked.end()) continue;
        picked.push_back(idx);
        const double step = set.elr > 0.0 ? rng.uniform(-set.elr, set.elr) : 0.0;
        pos[idx] = std::clamp(pos[idx] + step, p.i_l(), p.i_u());
      }
    }
    set.instances.push_back(p.evaluate(std::move(pos), cfg));
  }
  return set;
}

ResourceSet cull_instances(ResourceSet set, double consumption_threshold) {
  std::erase_if(set.instances, [&](const Instance& e) { return e.consumption > consumption_threshold; });
  set.replace = set.instances.empty();
  return set;
}

KMeansResult kmeans(const std::vector<std::pair<double, double>>& raw, int k, std::uint64_t seed) {
  if (k <= 0) throw Error("kmeans: k must be positive");
  const std::size_t n = raw.size();
  if (static_cast<std::size_t>(k) > n) throw Error("kmeans: k exceeds the number of points");
  auto lo_x = raw[0].first, hi_x = raw[0].first, lo_y = raw[0].second, hi_y = raw[0].second;
  for (const auto& [x, y] : raw) {
    lo_x = std::min(lo_x, x);
    hi_x = std::max(hi_x, x);
    lo_y = std::min(lo_y, y);
    hi_y = std::max(hi_y, y);
  }
  std::vector<std::pair<double, double>> pts;
  for (const auto& [x, y] : raw) {
    pts.push_back({hi_x > lo_x ? (x - lo_x) / (hi_x - lo_x) : 0.0, hi_y > lo_y ? (y - lo_y) / (hi_y - lo_y) : 0.0});
  }
  auto d2 = [](const std::pair<double, double>& a, const std::pair<double, double>& b) {
    const double dx = a.first - b.first, dy = a.second - b.second;
    return dx * dx + dy * dy;
  };

  KMeansResult out;
  Rng rng(seed);
  std::vector<std::size_t> chosen = {static_cast<std::size_t>(rng.uniform_int(0, n - 1))};
  out.centroids.push_back(pts[chosen[0]]);
  while (out.centroids.size() < static_cast<std::size_t>(k)) {
    std::size_t far = 0;
    double far_d = -1.0;
    for (std::size_t i = 0; i < n; ++i) {
      double nearest = std::numeric_limits<double>::infinity();
      for (const auto& c : out.centroids) nearest = std::min(nearest, d2(pts[i], c));
      if (nearest > far_d) {
        far_d = nearest;
        far = i;
      }
    }
    out.centroids.push_back(pts[far]);
  }

  out.labels.assign(n, -1);
  for (out.iterations = 0; out.iterations < 100; ++out.iterations) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      int best = 0;
      for (int c = 1; c < k; ++c) {
        if (d2(pts[i], out.centroids[static_cast<std::size_t>(c)]) <
            d2(pts[i], out.centroids[static_cast<std::size_t>(best)])) {
          best = c;
        }
      }
      if (out.labels[i] != best) {
        out.labels[i] = best;
        changed = true;
      }
    }
    if (!changed) break;
    std::vector<std::pair<double, double>> sum(static_cast<std::size_t>(k), {0.0, 0.0});
    std::vector<int> count(static_cast<std::size_t>(k), 0);
    for (std::size_t i = 0; i < n; ++i) {
      auto c = static_cast<std::size_t>(out.labels[i]);
      sum[c].first += pts[i].first;
      sum[c].second += pts[i].second;
      ++count[c];
    }
    for (std::size_t c = 0; c < sum.size(); ++c) {
      if (count[c] > 0) out.centroids[c] = {sum[c].first / count[c], sum[c].second / count[c]};
    }
  }
  return out;
}

KMeansResult kmeans_resources(const std::vector<Resource>& resources, int k, std::uint64_t seed) {
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : resources) pts.push_back({r.capacity, r.cost_rate});
  return kmeans(pts, k, seed);
}

namespace {

/// Renumbers labels so that cluster 0 has the smallest mean of `key`.
std::vector<int> rank_labels(const KMeansResult& km, const std::vector<double>& key, int k) {
  std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
  std::vector<int> count(static_cast<std::size_t>(k), 0);
  for (std::size_t i = 0; i < km.labels.size(); ++i) {
    sum[static_cast<std::size_t>(km.labels[i])] += key[i];
    ++count[static_cast<std::size_t>(km.labels[i])];
  }
  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  auto mean = [&](int c) {
    const auto u = static_cast<std::size_t>(c);
    return count[u] > 0 ? sum[u] / count[u] : std::numeric_limits<double>::infinity();
  };
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return mean(a) < mean(b); });
  std::vector<int> rank(static_cast<std::size_t>(k));
  for (int r = 0; r < k; ++r) rank[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])] = r;
  std::vector<int> out;
  for (int l : km.labels) out.push_back(rank[static_cast<std::size_t>(l)]);
  return out;
}

std::vector<int> request_groups(const std::vector<UserRequest>& reqs, int k, std::uint64_t seed) {
  if (reqs.empty()) return {};
  k = std::min<int>(k, static_cast<int>(reqs.size()));
  std::vector<std::pair<double, double>> pts;
  std::vector<double> sizes;
  for (const auto& r : reqs) {
    pts.push_back({r.size, r.budget});
    sizes.push_back(r.size);
  }
  return rank_labels(kmeans(pts, k, seed), sizes, k);
}

bool better_target(const ResourceSet& a, const ResourceSet& b) {
  if (a.missed != b.missed) return a.missed < b.missed;
  if (a.profit != b.profit) return a.profit > b.profit;
  return a.id < b.id;
}

}  // namespace

Target select_target(const std::vector<ResourceSet>& sets, const std::vector<UserRequest>& batch, int k,
                     std::uint64_t seed) {
  if (sets.empty()) throw Error("select_target: no resource sets");
  const ResourceSet* best = &sets.front();
  for (const auto& s : sets) {
    if (better_target(s, *best)) best = &s;
  }
  Target t;
  t.set_id = best->id;
  t.ordered_batch = decode_order(batch);
  const auto groups = request_groups(t.ordered_batch, k, seed);
  std::vector<std::size_t> idx(t.ordered_batch.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return groups[a] < groups[b]; });
  std::vector<UserRequest> ordered;
  for (auto i : idx) ordered.push_back(t.ordered_batch[i]);
  t.ordered_batch = std::move(ordered);
  return t;
}

std::vector<ResourceSet> remove_dead(std::vector<ResourceSet> sets, int max_population) {
  std::erase_if(sets, [](const ResourceSet& s) {
    return !s.resources.empty() && std::all_of(s.resources.begin(), s.resources.end(), [](const Resource& r) {
      return r.state == ResourceState::Dead;
    });
  });
  std::stable_sort(sets.begin(), sets.end(), [](const ResourceSet& a, const ResourceSet& b) {
    if (a.profit != b.profit) return a.profit > b.profit;
    if (a.missed != b.missed) return a.missed < b.missed;
    return a.id < b.id;
  });
  if (sets.size() > static_cast<std::size_t>(std::max(0, max_population))) {
    sets.resize(static_cast<std::size_t>(std::max(0, max_population)));
  }
  std::stable_sort(sets.begin(), sets.end(),
                   [](const ResourceSet& a, const ResourceSet& b) { return a.utilization > b.utilization; });
  return sets;
}

namespace {

/// Earliest-finish choice among `candidates` given current availability.
std::size_t earliest_finish(const Placement& p, const std::vector<double>& avail, double size,
                            const std::vector<std::size_t>& candidates) {
  std::size_t best = candidates.front();
  double best_f = std::numeric_limits<double>::infinity();
  for (auto j : candidates) {
    const double f = avail[j] + size / p.eligible()[j].capacity;
    if (f < best_f) {
      best_f = f;
      best = j;
    }
  }
  return best;
}

std::vector<double> initial_avail(const Placement& p) {
  std::vector<double> avail;
  for (const auto& r : p.eligible()) avail.push_back(std::max(p.now(), r.ready_at));
  return avail;
}

std::vector<double> greedy_position(const Placement& p) {
  std::vector<std::size_t> all(p.eligible().size());
  std::iota(all.begin(), all.end(), 0);
  auto avail = initial_avail(p);
  std::vector<double> pos;
  for (const auto& q : p.requests()) {
    const auto j = earliest_finish(p, avail, q.size, all);
    avail[j] += q.size / p.eligible()[j].capacity;
    pos.push_back(p.coordinate_of(j));
  }
  return pos;
}

std::vector<double> routed_position(const Placement& p, int k, std::uint64_t seed) {
  const int kr = std::min<int>(k, static_cast<int>(p.eligible().size()));
  const int kq = std::min<int>(kr, static_cast<int>(p.requests().size()));
  std::vector<double> caps;
  for (const auto& r : p.eligible()) caps.push_back(r.capacity);
  const auto res_rank = rank_labels(kmeans_resources(p.eligible(), kr, seed), caps, kr);
  const auto req_rank = request_groups(p.requests(), kq, seed + 1);
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(kr));
  for (std::size_t j = 0; j < res_rank.size(); ++j) members[static_cast<std::size_t>(res_rank[j])].push_back(j);
  auto avail = initial_avail(p);
  std::vector<double> pos;
  for (std::size_t i = 0; i < p.requests().size(); ++i) {
    // Spread request groups over resource groups by rank.
    const int g = kq > 1 ? req_rank[i] * (kr - 1) / (kq - 1) : kr - 1;
    auto& cand = members[static_cast<std::size_t>(g)];
    const auto j = earliest_finish(p, avail, p.requests()[i].size, cand.empty() ? members.back() : cand);
    avail[j] += p.requests()[i].size / p.eligible()[j].capacity;
    pos.push_back(p.coordinate_of(j));
  }
  return pos;
}

}  // namespace

Assignment allocate(const std::vector<UserRequest>& batch, const std::vector<Resource>& pool, double now,
                    const AllocConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Assignment out;
  Placement p(batch, pool, now);
  if (p.requests().empty()) return out;
  if (p.eligible().empty()) {
    for (const auto& q : p.requests()) out.unassigned.push_back(q.id);
    return out;
  }
  Rng rng(mix_seed(seed, 0xC0C0));
  const std::size_t m = p.requests().size();
  int next_id = 0;

  std::vector<ResourceSet> population;
  for (int h = 0; h < cfg.population; ++h) {
    ResourceSet s;
    s.id = next_id++;
    if (h == 0) {
      s.position = greedy_position(p);
    } else if (h == 1) {
      s.position = routed_position(p, cfg.kmeans_k, mix_seed(seed, 0xAB));
    } else {
      for (std::size_t i = 0; i < m; ++i) s.position.push_back(rng.uniform(p.i_l(), p.i_u()));
    }
    population.push_back(p.adopt(p.evaluate(s.position, cfg), s.id));
  }
  population = remove_dead(std::move(population), cfg.population);

  auto best_of = [](const std::vector<ResourceSet>& sets) {
    const ResourceSet* b = &sets.front();
    for (const auto& s : sets) {
      if (s.profit > b->profit || (s.profit == b->profit && s.id < b->id)) b = &s;
    }
    return b;
  };
  double best_profit = best_of(population)->profit;
  int stall = 0;
  for (int gen = 1; gen <= cfg.generations; ++gen) {
    std::vector<ResourceSet> offspring;
    for (auto& s : population) {
      s.elr = elr(static_cast<int>(m) - s.missed, static_cast<int>(m), cfg.gamma, p.i_u(), p.i_l());
      s = cull_instances(lay_instances(std::move(s), p, cfg, rng), cfg.consumption_threshold);
      for (const auto& egg : s.instances) offspring.push_back(p.adopt(egg, next_id++));
      s.instances.clear();
    }
    for (auto& o : offspring) population.push_back(std::move(o));
    population = remove_dead(std::move(population), cfg.population);

    const ResourceSet* b = best_of(population);
    out.generations.push_back({gen, b->profit, b->utilization, b->missed});
    if (b->profit > best_profit) {
      best_profit = b->profit;
      stall = 0;
    } else {
      ++stall;
    }
    if (b->missed == 0 && stall >= cfg.stall_generations) break;
  }

  const Target target = select_target(population, batch, cfg.kmeans_k, seed);
  auto chosen = std::find_if(population.begin(), population.end(),
                             [&](const ResourceSet& s) { return s.id == target.set_id; });
  p.score(*chosen, cfg);
  const auto plan = p.decode(chosen->position);
  out.set_id = chosen->id;
  out.utilization = chosen->utilization;
  out.profit = chosen->profit;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& q = p.requests()[i];
    out.placed.push_back({q.id, p.eligible()[plan.resource[i]].id, plan.start[i], plan.finish[i]});
    if (plan.finish[i] > q.deadline) out.late.push_back(q.id);
  }
  return out;
}

void write_generation_csv(std::ostream& out, const std::vector<GenerationStats>& stats) {
  write_csv_row(out, {"generation", "best_profit", "mean_utilization", "missed"});
  for (const auto& s : stats) {
    write_csv_row(out, {std::to_string(s.generation), format_number(s.best_profit),
                        format_number(s.mean_utilization), std::to_string(s.missed)});
  }
}

}  // namespace agri
