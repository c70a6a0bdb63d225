#include "agri/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

char to_char(ProductivityLevel level) { return static_cast<char>('A' + static_cast<int>(level)); }

ProductivityLevel parse_level(std::string_view text) {
  const auto t = trim(text);
  if (t.size() == 1 && t[0] >= 'A' && t[0] <= 'E') {
    return static_cast<ProductivityLevel>(t[0] - 'A');
  }
  throw ParseError("productivity level must be one of A-E, got '" + std::string(text) + "'");
}

double level_score(ProductivityLevel level) { return 5.0 - static_cast<int>(level); }

ProductivityLevel level_from_score(double score) {
  const double rounded = std::floor(score + 0.5);
  const int idx = 5 - static_cast<int>(std::clamp(rounded, 1.0, 5.0));
  return static_cast<ProductivityLevel>(idx);
}

std::size_t FeatureSpec::token_index(std::string_view token) const {
  const auto t = trim(token);
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (tokens[i] == t) return i;
  }
  throw ParseError("feature '" + name + "': unknown token '" + std::string(t) + "'");
}

double parse_numeric_value(std::string_view text) {
  // Collect up to two leading numbers separated by a dash (ASCII or en dash).
  const auto t = trim(text);
  std::vector<double> numbers;
  std::size_t i = 0;
  auto skip_spaces = [&] {
    while (i < t.size() && (t[i] == ' ' || t[i] == '\t')) ++i;
  };
  auto read_number = [&]() -> bool {
    skip_spaces();
    std::size_t start = i;
    if (i < t.size() && (t[i] == '-' || t[i] == '+') && numbers.empty()) ++i;
    bool digits = false;
    while (i < t.size() && (std::isdigit(static_cast<unsigned char>(t[i])) || t[i] == '.')) {
      digits = true;
      ++i;
    }
    if (!digits) {
      i = start;
      return false;
    }
    numbers.push_back(parse_number(t.substr(start, i - start), "numeric value"));
    return true;
  };
  if (!read_number()) {
    throw ParseError("not a numeric value: '" + std::string(text) + "'");
  }
  skip_spaces();
  if (i < t.size()) {
    if (t[i] == '-') {
      ++i;
      read_number();
    } else if (t.substr(i).rfind("\xE2\x80\x93", 0) == 0) {  // en dash
      i += 3;
      read_number();
    }
  }
  if (numbers.size() == 2) return 0.5 * (numbers[0] + numbers[1]);
  return numbers[0];
}

FeatureVector FeatureSchema::encode(const std::vector<std::string>& raw) const {
  if (raw.size() != features.size()) {
    throw Error("expected " + std::to_string(features.size()) + " feature values, got " +
                std::to_string(raw.size()));
  }
  FeatureVector out(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const auto& spec = features[i];
    if (spec.kind == FeatureKind::Categorical) {
      out[i] = static_cast<double>(spec.token_index(raw[i]));
    } else {
      try {
        out[i] = parse_numeric_value(raw[i]);
      } catch (const ParseError& e) {
        throw ParseError("feature '" + spec.name + "': " + e.what());
      }
    }
  }
  return out;
}

std::string FeatureSchema::decode(std::size_t feature, double value) const {
  const auto& spec = features.at(feature);
  if (spec.kind == FeatureKind::Categorical) {
    const auto idx = static_cast<std::size_t>(std::llround(value));
    if (idx < spec.tokens.size() && static_cast<double>(idx) == value) return spec.tokens[idx];
  }
  return format_number(value);
}

FeatureSpec parse_feature_spec(const nlohmann::json& j) {
  FeatureSpec spec;
  if (!j.contains("name") || !j.at("name").is_string()) {
    throw ParseError("attribute entry without a string 'name'");
  }
  spec.name = j.at("name").get<std::string>();
  const std::string type = j.value("type", "numeric");
  if (type == "categorical") {
    spec.kind = FeatureKind::Categorical;
    if (!j.contains("tokens") || !j.at("tokens").is_array() || j.at("tokens").empty()) {
      throw ParseError("attribute '" + spec.name + "': categorical needs a non-empty 'tokens' list");
    }
    spec.tokens = j.at("tokens").get<std::vector<std::string>>();
  } else if (type == "numeric") {
    spec.kind = FeatureKind::Numeric;
    if (!j.contains("min") || !j.contains("max")) {
      throw ParseError("attribute '" + spec.name + "': numeric needs 'min' and 'max'");
    }
    spec.min = j.at("min").get<double>();
    spec.max = j.at("max").get<double>();
    if (spec.max < spec.min) {
      throw ParseError("attribute '" + spec.name + "': max < min");
    }
    spec.unit = j.value("unit", "");
  } else {
    throw ParseError("attribute '" + spec.name + "': unknown type '" + type + "'");
  }
  return spec;
}

nlohmann::json to_json(const FeatureSpec& spec) {
  nlohmann::json j;
  j["name"] = spec.name;
  if (spec.kind == FeatureKind::Categorical) {
    j["type"] = "categorical";
    j["tokens"] = spec.tokens;
  } else {
    j["type"] = "numeric";
    j["min"] = spec.min;
    j["max"] = spec.max;
    if (!spec.unit.empty()) j["unit"] = spec.unit;
  }
  return j;
}

FeatureSchema parse_feature_schema(const nlohmann::json& doc) {
  if (!doc.contains("tid")) throw ParseError("schema: missing 'tid' section");
  const auto& tid = doc.at("tid");
  FeatureSchema schema;
  schema.label = tid.value("label", "Productivity");
  if (!tid.contains("features") || !tid.at("features").is_array() || tid.at("features").empty()) {
    throw ParseError("schema: 'tid.features' must be a non-empty list");
  }
  for (const auto& f : tid.at("features")) schema.features.push_back(parse_feature_spec(f));
  return schema;
}

nlohmann::json to_json(const FeatureSchema& schema) {
  nlohmann::json features = nlohmann::json::array();
  for (const auto& f : schema.features) features.push_back(to_json(f));
  return {{"tid", {{"label", schema.label}, {"features", features}}}};
}

TrainingInstanceDataset load_tid(std::istream& in, const FeatureSchema& schema,
                                 const std::string& source) {
  const CsvTable table = read_csv(in, source);
  std::vector<std::size_t> cols;
  for (const auto& f : schema.features) {
    const auto c = table.column(f.name);
    if (c == std::string::npos) throw ParseError(source + ":1: missing column '" + f.name + "'");
    cols.push_back(c);
  }
  const auto label_col = table.column(schema.label);
  if (label_col == std::string::npos) {
    throw ParseError(source + ":1: missing label column '" + schema.label + "'");
  }
  TrainingInstanceDataset tid;
  tid.schema = schema;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    std::vector<std::string> raw;
    for (auto c : cols) raw.push_back(row[c]);
    try {
      tid.instances.push_back({schema.encode(raw), parse_level(row[label_col])});
    } catch (const Error& e) {
      throw ParseError(source + ":" + std::to_string(table.lines[r]) + ": " + e.what());
    }
  }
  if (tid.instances.empty()) throw ParseError(source + ": no training instances");
  return tid;
}

TrainingInstanceDataset load_tid_file(const std::filesystem::path& path,
                                      const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  return load_tid(in, schema, path.string());
}

nlohmann::json load_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

}  // namespace agri
