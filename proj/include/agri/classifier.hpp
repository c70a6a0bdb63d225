#pragma once

#include "agri/features.hpp"

namespace agri {

/// Range-normalised L1 over numerics plus 0/1 mismatch over categoricals.
double distance(const FeatureVector& a, const FeatureVector& b, const FeatureSchema& schema);

/// Majority vote among the k nearest instances. Instances tied with the k-th
/// distance all vote. A tied vote goes to the label whose closest member is
/// nearest, then to the earlier letter.
ProductivityLevel knn_classify(const FeatureVector& query, const TrainingInstanceDataset& tid, int k);

}  // namespace agri
