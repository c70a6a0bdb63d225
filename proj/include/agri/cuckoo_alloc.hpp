#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <vector>

#include "agri/qos_manager.hpp"
#include "agri/random.hpp"

namespace agri {

enum class ResourceState { Active, Restarting, Dead };

const char* to_string(ResourceState s);

struct Resource {
  int id = 0;
  double capacity = 0.0;   // MIPS
  double cost_rate = 0.0;  // currency per hour
  double uptime = 0.0;
  double busy_time = 0.0;
  ResourceState state = ResourceState::Active;
  double ready_at = 0.0;  // when already committed work finishes
  double consumption = 1.0;  // observed actual/predicted usage, from monitoring
  bool operator==(const Resource&) const = default;
};

/// One egg: a candidate placement laid around its parent habitat.
struct Instance {
  std::vector<double> position;  // one capacity-space coordinate per request
  double consumption = 1.0;      // planned-usage weighted resource consumption
  double utilization = 0.0;      // mean form
  double profit = 0.0;
  int missed = 0;
};

/// A habitat: the resources as seen by one candidate plan.
struct ResourceSet {
  int id = 0;
  std::vector<Resource> resources;
  std::vector<Instance> instances;
  std::vector<double> position;
  double utilization = 0.0;  // mean form, in [0,1]
  double consumption = 0.0;
  double elr = 0.0;
  double profit = 0.0;
  double cost = 0.0;
  int missed = 0;
  bool replace = false;  // every egg was culled
};

/// Sum over resources of busy/uptime.
double utilization(const ResourceSet& set);
/// utilization / resource count.
double mean_utilization(const ResourceSet& set);

/// gamma * executed/total * (i_u - i_l).
double elr(int executed, int total, int gamma, double i_u, double i_l);

enum class ProfitMode { Utilization, NegCost };

double profit(const ResourceSet& set, ProfitMode mode, double lambda = 1.0);

struct AllocConfig {
  int population = 10;  // i_nu
  int generations = 50;
  int stall_generations = 10;
  int min_eggs = 5;
  int max_eggs = 15;
  int gamma = 1;
  double lambda = 1.0;
  double consumption_threshold = 1.5;
  ProfitMode mode = ProfitMode::Utilization;
  int kmeans_k = 3;
  void validate() const;
};

/// Requests in decode order: critical first, then deadline, then id.
std::vector<UserRequest> decode_order(std::vector<UserRequest> batch);

/// Problem view shared by the operators: requests in decode order and the
/// eligible resources with their current backlog.
class Placement {
 public:
  Placement(std::vector<UserRequest> batch, std::vector<Resource> pool, double now);

  const std::vector<UserRequest>& requests() const { return requests_; }
  const std::vector<Resource>& eligible() const { return eligible_; }
  double now() const { return now_; }
  double i_l() const { return i_l_; }
  double i_u() const { return i_u_; }

  struct Plan {
    std::vector<std::size_t> resource;  // index into eligible(), per request
    std::vector<double> start;
    std::vector<double> finish;
    std::vector<double> busy;  // per eligible resource, backlog included
    std::vector<double> assigned;  // per eligible resource, this batch only
    double makespan = 0.0;
    double cost = 0.0;
    int missed = 0;
  };

  Plan decode(const std::vector<double>& position) const;
  /// Scores a position into an instance (utilization, consumption, profit).
  Instance evaluate(std::vector<double> position, const AllocConfig& cfg) const;
  /// Fills a habitat's resources, utilization and profit from its position.
  void score(ResourceSet& set, const AllocConfig& cfg) const;
  /// A habitat grown from an already evaluated egg; resources stay empty
  /// until score() is called.
  ResourceSet adopt(const Instance& egg, int id) const;
  /// Coordinate that decodes to the group containing eligible resource j.
  double coordinate_of(std::size_t j) const { return eligible_[j].capacity; }

 private:
  std::vector<UserRequest> requests_;
  std::vector<Resource> eligible_;
  std::vector<double> group_caps_;                  // distinct capacities, ascending
  std::vector<std::vector<std::size_t>> groups_;    // eligible indices per group
  double now_ = 0.0;
  double i_l_ = 0.0, i_u_ = 0.0;

  std::size_t group_of(double x) const;
};

/// Lays a uniform count of eggs in [min_eggs, max_eggs]; each perturbs a few
/// distinct coordinates by at most ELR and is clamped to [i_l, i_u].
ResourceSet lay_instances(ResourceSet set, const Placement& p, const AllocConfig& cfg, Rng& rng);

/// Keeps instances with consumption <= threshold; flags the set when none survive.
ResourceSet cull_instances(ResourceSet set, double consumption_threshold);

struct KMeansResult {
  std::vector<int> labels;
  std::vector<std::pair<double, double>> centroids;  // normalised space
  int iterations = 0;
};

/// Lloyd's algorithm on min-max normalised 2-D points; maximin seeding from a
/// seeded first centre.
KMeansResult kmeans(const std::vector<std::pair<double, double>>& points, int k, std::uint64_t seed);
KMeansResult kmeans_resources(const std::vector<Resource>& resources, int k, std::uint64_t seed);

struct Target {
  int set_id = 0;
  std::vector<UserRequest> ordered_batch;
};

/// Fewest missed, then higher profit, then lower id. The batch is grouped by
/// k-means over (size, budget), smaller-size groups first.
Target select_target(const std::vector<ResourceSet>& sets, const std::vector<UserRequest>& batch,
                     int k = 3, std::uint64_t seed = 0);

/// Drops sets whose resources are all Dead, then keeps the max_population most
/// profitable, and sorts by utilization descending.
std::vector<ResourceSet> remove_dead(std::vector<ResourceSet> sets, int max_population);

struct GenerationStats {
  int generation = 0;
  double best_profit = 0.0;
  double mean_utilization = 0.0;
  int missed = 0;
};

struct PlacementEntry {
  std::uint64_t request = 0;
  int resource = 0;
  double start = 0.0;
  double finish = 0.0;
};

struct Assignment {
  int set_id = -1;
  std::vector<PlacementEntry> placed;  // decode order
  std::vector<std::uint64_t> unassigned;
  std::vector<std::uint64_t> late;  // placed but projected past the deadline
  std::vector<GenerationStats> generations;
  double utilization = 0.0;
  double profit = 0.0;
};

Assignment allocate(const std::vector<UserRequest>& batch, const std::vector<Resource>& pool, double now,
                    const AllocConfig& cfg, std::uint64_t seed);

void write_generation_csv(std::ostream& out, const std::vector<GenerationStats>& stats);

}  // namespace agri
