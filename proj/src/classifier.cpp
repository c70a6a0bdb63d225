#include "agri/classifier.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "agri/error.hpp"

namespace agri {

double distance(const FeatureVector& a, const FeatureVector& b, const FeatureSchema& schema) {
  if (a.size() != b.size() || a.size() != schema.features.size()) {
    throw Error("distance: arity mismatch (" + std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                ", schema " + std::to_string(schema.features.size()) + ")");
  }
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& f = schema.features[i];
    if (f.kind == FeatureKind::Categorical) {
      d += a[i] == b[i] ? 0.0 : 1.0;
    } else {
      const double span = f.max - f.min;
      if (span > 0.0) {
        d += std::abs(a[i] - b[i]) / span;
      } else {
        d += a[i] == b[i] ? 0.0 : 1.0;
      }
    }
  }
  return d;
}

ProductivityLevel knn_classify(const FeatureVector& query, const TrainingInstanceDataset& tid, int k) {
  if (tid.instances.empty()) throw Error("knn_classify: empty training set");
  if (k <= 0) throw Error("knn_classify: k must be positive");
  if (static_cast<std::size_t>(k) > tid.instances.size()) {
    throw Error("knn_classify: k exceeds the training set size");
  }
  std::vector<double> dist;
  dist.reserve(tid.instances.size());
  for (const auto& inst : tid.instances) dist.push_back(distance(query, inst.features, tid.schema));

  std::vector<double> sorted = dist;
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  const double kth = sorted[static_cast<std::size_t>(k - 1)];

  std::array<int, 5> votes{};
  std::array<double, 5> nearest;
  nearest.fill(std::numeric_limits<double>::infinity());
  for (std::size_t i = 0; i < dist.size(); ++i) {
    if (dist[i] > kth) continue;
    const auto label = static_cast<std::size_t>(tid.instances[i].label);
    ++votes[label];
    nearest[label] = std::min(nearest[label], dist[i]);
  }
  std::size_t best = 0;
  for (std::size_t l = 1; l < votes.size(); ++l) {
    if (votes[l] > votes[best] || (votes[l] == votes[best] && nearest[l] < nearest[best])) best = l;
  }
  return static_cast<ProductivityLevel>(best);
}

}  // namespace agri
