#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace agri {

/// Productivity scale; A is the highest.
enum class ProductivityLevel { A, B, C, D, E };

char to_char(ProductivityLevel level);
ProductivityLevel parse_level(std::string_view text);
/// Numeric score used when a level has to be treated as an output value: A=5 .. E=1.
double level_score(ProductivityLevel level);
/// Nearest level to a score (half-way rounds up), clamped to [E, A].
ProductivityLevel level_from_score(double score);

enum class FeatureKind { Numeric, Categorical };

struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  double min = 0.0;  // numeric only
  double max = 0.0;
  std::string unit;
  std::vector<std::string> tokens;  // categorical only, declared order

  /// Position of `token` in the declared order; throws when absent.
  std::size_t token_index(std::string_view token) const;
};

/// Parses a numeric cell. Ranges such as "21-27 °C" map to their midpoint;
/// a trailing unit is ignored.
double parse_numeric_value(std::string_view text);

using FeatureVector = std::vector<double>;

struct FeatureSchema {
  std::vector<FeatureSpec> features;
  std::string label = "Productivity";

  /// Encodes raw cells: numerics via parse_numeric_value, categoricals as
  /// their token index.
  FeatureVector encode(const std::vector<std::string>& raw) const;
  std::string decode(std::size_t feature, double value) const;
};

FeatureSpec parse_feature_spec(const nlohmann::json& j);
nlohmann::json to_json(const FeatureSpec& spec);

/// Reads the "tid" section of a schema document.
FeatureSchema parse_feature_schema(const nlohmann::json& doc);
nlohmann::json to_json(const FeatureSchema& schema);

struct TrainingInstance {
  FeatureVector features;
  ProductivityLevel label = ProductivityLevel::C;
};

/// Labelled training data together with the schema that encodes it.
struct TrainingInstanceDataset {
  FeatureSchema schema;
  std::vector<TrainingInstance> instances;
};

/// CSV with one column per schema feature (by name) plus the label column.
TrainingInstanceDataset load_tid(std::istream& in, const FeatureSchema& schema,
                                 const std::string& source);
TrainingInstanceDataset load_tid_file(const std::filesystem::path& path,
                                      const FeatureSchema& schema);

nlohmann::json load_json_file(const std::filesystem::path& path);

}  // namespace agri
