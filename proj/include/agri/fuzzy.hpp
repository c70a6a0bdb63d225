#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "agri/error.hpp"
#include "agri/features.hpp"
#include "json.hpp"

namespace agri {

/// No rule fires for the query; distinct from a class answer.
class NoMatchingRule : public Error {
 public:
  using Error::Error;
};

struct FuzzyConfig {
  double s = 1.0;   // shape control of the similarity transform
  double mu = 0.5;  // split threshold, in [0,1]
  void validate() const;
};

struct SimilaritySeries {
  std::vector<double> sorted_outputs;
  std::vector<std::size_t> order;  // order[m] = index of sorted_outputs[m] in the input
  std::vector<double> diffs;
  std::vector<double> sims;
  double s = 1.0;
  double sd_r = 0.0;  // population standard deviation of diffs
};

SimilaritySeries similarity_series(const std::vector<double>& outputs, double s);

struct OutputCluster {
  int id = 0;             // 1-based
  std::size_t first = 0;  // inclusive range into sorted_outputs
  std::size_t last = 0;
  std::vector<double> memberships;  // one per member, in sorted order

  std::size_t size() const { return last - first + 1; }
  bool operator==(const OutputCluster&) const = default;
};

/// Splits adjacent sorted outputs wherever sims[m] <= mu. Memberships are
/// left empty; see output_memberships.
std::vector<OutputCluster> cluster_outputs(const SimilaritySeries& series, double mu);

/// Boundary members take the smallest similarity inside the cluster, interior
/// members and singletons take 1.
OutputCluster output_memberships(OutputCluster cluster, const SimilaritySeries& series);

/// Trapezoid (a, b, c, d); a triangle has b == c.
struct LinguisticTerm {
  double a = 0.0, b = 0.0, c = 0.0, d = 0.0;

  double membership(double x) const;
  bool operator==(const LinguisticTerm&) const = default;
};

struct TriangularMf {
  double j = 0.0, k = 0.0, l = 0.0;

  double membership(double x) const;
  LinguisticTerm term() const { return {j, k, k, l}; }
  bool operator==(const TriangularMf&) const = default;
};

/// One triangle per distinct value, half-width equal to the smallest gap.
std::vector<TriangularMf> init_input_mfs(const std::vector<double>& values);
/// Same, with an explicit half-width.
std::vector<TriangularMf> init_input_mfs(const std::vector<double>& values, double unit);

struct Slot {
  int cluster = 0;
  double membership = 0.0;
  bool operator==(const Slot&) const = default;
};

using Position = std::vector<std::size_t>;

struct DecisionTable {
  std::vector<std::vector<LinguisticTerm>> terms;  // per dimension, ordered by centre
  std::map<Position, Slot> slots;                  // absent key = empty slot

  bool operator==(const DecisionTable&) const = default;
};

/// Per-instance output assignment after clustering.
struct OutputFuzzy {
  int cluster = 0;
  double membership = 0.0;
};

/// Index of the term with the largest membership (first on ties).
std::size_t best_term(const std::vector<LinguisticTerm>& terms, double x);

DecisionTable build_decision_table(const std::vector<std::vector<double>>& inputs,
                                   const std::vector<std::vector<TriangularMf>>& input_mfs,
                                   const std::vector<OutputFuzzy>& outputs);

struct MergeStep {
  std::size_t dimension = 0;
  std::size_t line = 0;  // lines `line` and `line + 1` merged
  char rule = 'a';
};

/// Repeatedly merges adjacent lines (identical first, then non-conflicting)
/// until neither rule applies.
DecisionTable simplify_table(DecisionTable table, std::vector<MergeStep>* steps = nullptr);

struct FuzzyRule {
  Position antecedents;  // term index per dimension
  int consequent = 0;
  bool operator==(const FuzzyRule&) const = default;
};

std::vector<FuzzyRule> derive_rules(const DecisionTable& table);

struct Inference {
  int cluster = 0;
  double strength = 0.0;
  std::size_t rule = 0;
};

/// Min-AND over antecedents, strongest rule wins, ties to the lowest cluster id.
Inference infer(const std::vector<FuzzyRule>& rules, const std::vector<std::vector<LinguisticTerm>>& terms,
                const std::vector<double>& query);

struct ClusterInfo {
  int id = 0;
  std::vector<double> outputs;
  std::vector<double> memberships;
  double representative = 0.0;  // mean of the members holding the largest membership
};

/// A trained model over generic numeric inputs and outputs.
struct FuzzyModel {
  FuzzyConfig config;
  SimilaritySeries series;
  std::vector<ClusterInfo> clusters;
  std::vector<OutputFuzzy> instance_outputs;  // in input order
  DecisionTable initial_table;
  DecisionTable table;
  std::vector<FuzzyRule> rules;

  double representative(int cluster) const;
};

/// Input half-widths: units[d] > 0 forces the unit of dimension d, otherwise
/// the smallest gap is used.
FuzzyModel induce(const std::vector<std::vector<double>>& inputs, const std::vector<double>& outputs,
                  const FuzzyConfig& config, const std::vector<double>& units = {});

struct ProductivityModel {
  FeatureSchema schema;
  FuzzyModel model;
};

ProductivityModel train_productivity_model(const TrainingInstanceDataset& tid, const FuzzyConfig& config);
ProductivityLevel classify_productivity(const ProductivityModel& m, const FeatureVector& query);

nlohmann::json to_json(const ProductivityModel& m);
ProductivityModel productivity_model_from_json(const nlohmann::json& j);

}  // namespace agri
