#pragma once

// Brute-force K-NN used as a reference: sort every instance, widen the
// neighbourhood over ties at the k-th distance, then vote.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "agri/features.hpp"
#include "agri/random.hpp"

namespace agri::test {

inline double oracle_distance(const FeatureVector& a, const FeatureVector& b, const FeatureSchema& s) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto& f = s.features[i];
    if (f.kind == FeatureKind::Categorical) {
      if (a[i] != b[i]) d += 1.0;
    } else {
      d += std::abs(a[i] - b[i]) / (f.max - f.min);
    }
  }
  return d;
}

inline ProductivityLevel knn_oracle(const FeatureVector& q, const TrainingInstanceDataset& tid, int k) {
  std::vector<std::pair<double, ProductivityLevel>> all;
  for (const auto& inst : tid.instances) all.push_back({oracle_distance(q, inst.features, tid.schema), inst.label});
  std::sort(all.begin(), all.end());
  const double kth = all[static_cast<std::size_t>(k - 1)].first;
  std::map<char, std::pair<int, double>> tally;  // letter -> (votes, closest)
  for (const auto& [d, label] : all) {
    if (d > kth) break;
    auto& t = tally.try_emplace(to_char(label), 0, d).first->second;
    ++t.first;
  }
  char best = 0;
  std::pair<int, double> best_t{-1, 0.0};
  for (const auto& [letter, t] : tally) {  // ascending letters, so strict comparisons keep the earliest
    if (t.first > best_t.first || (t.first == best_t.first && t.second < best_t.second)) {
      best = letter;
      best_t = t;
    }
  }
  return parse_level(std::string(1, best));
}

/// Small value ranges so that distance ties are common.
inline TrainingInstanceDataset random_tid(Rng& rng, const FeatureSchema& schema, std::size_t n) {
  TrainingInstanceDataset tid{schema, {}};
  for (std::size_t i = 0; i < n; ++i) {
    FeatureVector f;
    for (const auto& spec : schema.features) {
      if (spec.kind == FeatureKind::Categorical) {
        f.push_back(static_cast<double>(rng.uniform_int(0, std::min<std::size_t>(spec.tokens.size(), 2) - 1)));
      } else {
        f.push_back(spec.min + 10.0 * static_cast<double>(rng.uniform_int(0, 2)));
      }
    }
    tid.instances.push_back({f, static_cast<ProductivityLevel>(rng.uniform_int(0, 4))});
  }
  return tid;
}

inline FeatureVector random_query(Rng& rng, const FeatureSchema& schema) {
  return random_tid(rng, schema, 1).instances.front().features;
}

}  // namespace agri::test
