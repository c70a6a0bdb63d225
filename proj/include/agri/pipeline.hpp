#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "agri/features.hpp"
#include "agri/matrix.hpp"
#include "json.hpp"

namespace agri {

enum class Domain {
  Crop,
  Weather,
  Soil,
  Pest,
  Fertilizer,
  Productivity,
  Irrigation,
  Cattle,
  Equipment
};

inline constexpr std::array<Domain, 9> kAllDomains = {
    Domain::Crop,         Domain::Weather,    Domain::Soil,   Domain::Pest,     Domain::Fertilizer,
    Domain::Productivity, Domain::Irrigation, Domain::Cattle, Domain::Equipment};

std::string_view to_string(Domain d);
std::optional<Domain> parse_domain(std::string_view text);

/// A missing cell is std::monostate.
using AttributeValue = std::variant<std::monostate, double, std::string>;

struct AgriRecord {
  std::string user_id;
  Domain domain = Domain::Crop;
  std::vector<std::pair<std::string, AttributeValue>> attributes;

  bool operator==(const AgriRecord&) const = default;
};

/// Attribute declarations per domain, in declared order.
struct DataSchema {
  std::map<Domain, std::vector<FeatureSpec>> domains;

  const FeatureSpec* find(Domain d, std::string_view attribute) const;
};

DataSchema parse_data_schema(const nlohmann::json& doc);

struct PreprocessFlag {
  std::size_t record = 0;  // index into the output records
  std::string attribute;
  std::string reason;
};

struct RejectedRecord {
  std::size_t input_index = 0;
  std::string message;
};

struct PreprocessResult {
  std::vector<AgriRecord> records;
  std::vector<PreprocessFlag> flags;
  std::vector<RejectedRecord> rejected;
};

/// Cleans records: rejects records the schema cannot describe, drops
/// duplicate (user, domain, attribute-set) records, clamps out-of-range
/// numerics, and fills missing values from the neighbouring records of the
/// same domain.
PreprocessResult preprocess(const std::vector<AgriRecord>& records, const DataSchema& schema);

/// Rows are (domain, attribute) slots, columns are users in order of first
/// appearance.
struct DataMatrix {
  std::vector<std::string> users;
  std::size_t domain_count = 0;
  std::vector<std::string> slots;  // "domain.attribute"
  Matrix values;
};

/// Categorical tokens are encoded by their index in the schema token list.
DataMatrix build_matrix(const std::vector<AgriRecord>& records, const DataSchema& schema);

/// Min-max scales each row to [0,1], then shifts each row to zero mean.
DataMatrix normalize_zero_mean(const DataMatrix& m);
/// Only the zero-mean shift.
Matrix center_rows(const Matrix& m);

/// (1/(z-1)) * M * M^T for a zero-mean M.
Matrix covariance(const Matrix& m);

struct EigenDecomposition {
  std::vector<double> values;  // descending
  Matrix vectors;              // column i pairs with values[i]
  int sweeps = 0;
};

/// Cyclic Jacobi on a symmetric matrix.
EigenDecomposition symmetric_eigen(const Matrix& a);

struct PcaResult {
  std::vector<double> eigenvalues;
  Matrix eigenvectors;
  std::size_t selected_count = 0;
  double explained_fraction = 0.0;  // percent
  Matrix scores;                    // selected_count x users
};

/// Percentage of the spectrum carried by the first r eigenvalues.
double explained_percent(const std::vector<double>& eigenvalues, std::size_t r);

PcaResult select_components(PcaResult p, double v_threshold);

Matrix project(const Matrix& centered, const PcaResult& p);

/// normalize, covariance, eigendecomposition, selection and projection.
PcaResult run_pca(const DataMatrix& m, double v_threshold);

struct LoadedDataset {
  std::vector<AgriRecord> records;
  std::vector<RejectedRecord> rejected;
};

/// CSV with columns user, domain and one column per attribute name. Cells of
/// attributes outside the row's domain must be empty; an empty cell inside the
/// domain is a missing value.
LoadedDataset load_dataset(std::istream& in, const DataSchema& schema, const std::string& source);
LoadedDataset load_dataset_file(const std::filesystem::path& path, const DataSchema& schema);

}  // namespace agri
