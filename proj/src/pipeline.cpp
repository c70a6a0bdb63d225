#include "agri/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>

#include "agri/csv.hpp"
#include "agri/error.hpp"

namespace agri {

namespace {

constexpr std::array<std::string_view, 9> kDomainNames = {
    "crop", "weather", "soil", "pest", "fertilizer", "productivity", "irrigation", "cattle", "equipment"};

bool is_missing(const AttributeValue& v) { return std::holds_alternative<std::monostate>(v); }

std::vector<std::string> attribute_names(const AgriRecord& r) {
  std::vector<std::string> names;
  for (const auto& [name, value] : r.attributes) names.push_back(name);
  return names;
}

}  // namespace

std::string_view to_string(Domain d) { return kDomainNames[static_cast<std::size_t>(d)]; }

std::optional<Domain> parse_domain(std::string_view text) {
  std::string lower;
  for (char c : trim(text)) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (lower.size() > 5 && lower.ends_with(" info")) lower.resize(lower.size() - 5);
  for (std::size_t i = 0; i < kDomainNames.size(); ++i) {
    if (kDomainNames[i] == lower) return static_cast<Domain>(i);
  }
  return std::nullopt;
}

const FeatureSpec* DataSchema::find(Domain d, std::string_view attribute) const {
  auto it = domains.find(d);
  if (it == domains.end()) return nullptr;
  for (const auto& spec : it->second) {
    if (spec.name == attribute) return &spec;
  }
  return nullptr;
}

DataSchema parse_data_schema(const nlohmann::json& doc) {
  if (!doc.contains("domains") || !doc.at("domains").is_object()) {
    throw ParseError("schema: missing 'domains' object");
  }
  DataSchema schema;
  for (const auto& [key, attrs] : doc.at("domains").items()) {
    auto d = parse_domain(key);
    if (!d) throw ParseError("schema: unknown domain '" + key + "'");
    if (!attrs.is_array() || attrs.empty()) {
      throw ParseError("schema: domain '" + key + "' needs a non-empty attribute list");
    }
    auto& list = schema.domains[*d];
    std::set<std::string> seen;
    for (const auto& a : attrs) {
      auto spec = parse_feature_spec(a);
      if (!seen.insert(spec.name).second) {
        throw ParseError("schema: domain '" + key + "' repeats attribute '" + spec.name + "'");
      }
      list.push_back(std::move(spec));
    }
  }
  return schema;
}

PreprocessResult preprocess(const std::vector<AgriRecord>& records, const DataSchema& schema) {
  PreprocessResult out;
  std::set<std::tuple<std::string, Domain, std::vector<std::string>>> seen;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    auto dom = schema.domains.find(r.domain);
    if (dom == schema.domains.end()) {
      out.rejected.push_back({i, "domain '" + std::string(to_string(r.domain)) + "' is not in the schema"});
      continue;
    }
    std::string problem;
    for (const auto& [name, value] : r.attributes) {
      const FeatureSpec* spec = schema.find(r.domain, name);
      if (!spec) {
        problem = "attribute '" + name + "' is not declared for domain '" +
                  std::string(to_string(r.domain)) + "'";
        break;
      }
      if (spec->kind == FeatureKind::Numeric && std::holds_alternative<std::string>(value)) {
        problem = "attribute '" + name + "' expects a number";
        break;
      }
      if (spec->kind == FeatureKind::Categorical) {
        if (std::holds_alternative<double>(value)) {
          problem = "attribute '" + name + "' expects a token";
          break;
        }
        if (const auto* s = std::get_if<std::string>(&value)) {
          if (std::find(spec->tokens.begin(), spec->tokens.end(), *s) == spec->tokens.end()) {
            problem = "attribute '" + name + "': unknown token '" + *s + "'";
            break;
          }
        }
      }
    }
    if (!problem.empty()) {
      out.rejected.push_back({i, problem});
      continue;
    }
    auto names = attribute_names(r);
    std::sort(names.begin(), names.end());
    if (!seen.insert({r.user_id, r.domain, names}).second) continue;
    out.records.push_back(r);
  }

  // Clamp.
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    for (auto& [name, value] : r.attributes) {
      auto* x = std::get_if<double>(&value);
      if (!x) continue;
      const FeatureSpec* spec = schema.find(r.domain, name);
      if (*x < spec->min || *x > spec->max) {
        out.flags.push_back({i, name, "clamped " + format_number(*x) + " to [" +
                                          format_number(spec->min) + "," + format_number(spec->max) + "]"});
        *x = std::clamp(*x, spec->min, spec->max);
      }
    }
  }

  // Fill missing values from the sequence of the same (domain, attribute).
  std::map<std::pair<Domain, std::string>, std::vector<std::pair<std::size_t, std::size_t>>> sequences;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    const auto& r = out.records[i];
    for (std::size_t k = 0; k < r.attributes.size(); ++k) {
      sequences[{r.domain, r.attributes[k].first}].push_back({i, k});
    }
  }
  for (const auto& [key, seq] : sequences) {
    const FeatureSpec* spec = schema.find(key.first, key.second);
    auto value_at = [&](std::size_t pos) -> const AttributeValue& {
      return out.records[seq[pos].first].attributes[seq[pos].second].second;
    };
    std::vector<AttributeValue> original;
    for (std::size_t p = 0; p < seq.size(); ++p) original.push_back(value_at(p));

    for (std::size_t p = 0; p < seq.size(); ++p) {
      if (!is_missing(original[p])) continue;
      std::optional<std::size_t> before, after;
      for (std::size_t q = p; q-- > 0;) {
        if (!is_missing(original[q])) {
          before = q;
          break;
        }
      }
      for (std::size_t q = p + 1; q < seq.size(); ++q) {
        if (!is_missing(original[q])) {
          after = q;
          break;
        }
      }
      AttributeValue fill;
      std::string reason;
      if (spec->kind == FeatureKind::Numeric) {
        if (before && after) {
          fill = 0.5 * (std::get<double>(original[*before]) + std::get<double>(original[*after]));
          reason = "filled from adjacent values";
        } else if (before || after) {
          fill = original[before ? *before : *after];
          reason = "filled from single neighbour";
        } else {
          fill = 0.5 * (spec->min + spec->max);
          reason = "no values present; filled with range midpoint";
        }
      } else {
        if (before || after) {
          fill = original[before ? *before : *after];
          reason = "filled from neighbouring token";
        } else {
          fill = spec->tokens.front();
          reason = "no values present; filled with first token";
        }
      }
      out.records[seq[p].first].attributes[seq[p].second].second = fill;
      out.flags.push_back({seq[p].first, key.second, reason});
    }
  }
  return out;
}

DataMatrix build_matrix(const std::vector<AgriRecord>& records, const DataSchema& schema) {
  if (records.empty()) throw Error("build_matrix: no records");
  std::vector<std::string> users;
  std::map<std::string, std::map<Domain, const AgriRecord*>> by_user;
  for (const auto& r : records) {
    auto [it, inserted] = by_user.try_emplace(r.user_id);
    if (inserted) users.push_back(r.user_id);
    if (!it->second.emplace(r.domain, &r).second) {
      throw Error("build_matrix: user '" + r.user_id + "' has more than one '" +
                  std::string(to_string(r.domain)) + "' record");
    }
  }

  auto grid = [&](const std::string& user, std::vector<std::string>& slots, std::vector<double>& values) {
    for (const auto& [domain, rec] : by_user.at(user)) {
      auto dom = schema.domains.find(domain);
      if (dom == schema.domains.end()) {
        throw Error("build_matrix: user '" + user + "': domain '" + std::string(to_string(domain)) +
                    "' is not in the schema");
      }
      for (const auto& spec : dom->second) {
        auto it = std::find_if(rec->attributes.begin(), rec->attributes.end(),
                               [&](const auto& a) { return a.first == spec.name; });
        if (it == rec->attributes.end()) continue;
        slots.push_back(std::string(to_string(domain)) + "." + spec.name);
        if (const auto* x = std::get_if<double>(&it->second)) {
          values.push_back(*x);
        } else if (const auto* s = std::get_if<std::string>(&it->second)) {
          values.push_back(static_cast<double>(spec.token_index(*s)));
        } else {
          throw Error("build_matrix: user '" + user + "': missing value for '" + slots.back() + "'");
        }
      }
    }
  };

  DataMatrix m;
  m.users = users;
  std::vector<std::vector<double>> columns;
  for (const auto& user : users) {
    std::vector<std::string> slots;
    std::vector<double> values;
    grid(user, slots, values);
    if (columns.empty()) {
      m.slots = slots;
    } else if (slots != m.slots) {
      throw Error("build_matrix: user '" + user + "' supplies different attribute slots than user '" +
                  users.front() + "'");
    }
    columns.push_back(std::move(values));
  }
  m.domain_count = by_user.at(users.front()).size();
  m.values = Matrix(m.slots.size(), users.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    for (std::size_t r = 0; r < m.slots.size(); ++r) m.values(r, c) = columns[c][r];
  }
  return m;
}

Matrix center_rows(const Matrix& m) {
  Matrix out = m;
  const double z = static_cast<double>(m.cols());
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += m(r, c);
    const double mean = sum / z;
    for (std::size_t c = 0; c < m.cols(); ++c) out(r, c) = m(r, c) - mean;
  }
  return out;
}

DataMatrix normalize_zero_mean(const DataMatrix& m) {
  if (m.values.cols() < 2) throw Error("normalize_zero_mean: need at least 2 users");
  DataMatrix out = m;
  Matrix& v = out.values;
  for (std::size_t r = 0; r < v.rows(); ++r) {
    double lo = v(r, 0), hi = v(r, 0);
    for (std::size_t c = 1; c < v.cols(); ++c) {
      lo = std::min(lo, v(r, c));
      hi = std::max(hi, v(r, c));
    }
    for (std::size_t c = 0; c < v.cols(); ++c) v(r, c) = hi > lo ? (v(r, c) - lo) / (hi - lo) : 0.0;
  }
  v = center_rows(v);
  return out;
}

Matrix covariance(const Matrix& m) {
  if (m.cols() < 2) throw Error("covariance: need at least 2 columns");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) sum += m(r, c);
    if (std::abs(sum) > 1e-9) {
      throw Error("covariance: row " + std::to_string(r) + " is not zero-mean (sum " + format_number(sum) + ")");
    }
  }
  const std::size_t n = m.rows();
  const double scale = 1.0 / static_cast<double>(m.cols() - 1);
  Matrix cov(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < m.cols(); ++k) s += m(i, k) * m(j, k);
      cov(i, j) = s * scale;
      cov(j, i) = cov(i, j);
    }
  }
  return cov;
}

EigenDecomposition symmetric_eigen(const Matrix& input) {
  const std::size_t n = input.rows();
  if (input.cols() != n) throw Error("symmetric_eigen: matrix is not square");
  Matrix a = input;
  Matrix v = Matrix::identity(n);
  constexpr double kTol = 1e-10;
  constexpr int kMaxSweeps = 100;

  auto max_off = [&] {
    double worst = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) worst = std::max(worst, std::abs(a(i, j)));
    return worst;
  };

  int sweeps = 0;
  while (sweeps < kMaxSweeps && max_off() >= kTol) {
    ++sweeps;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });

  EigenDecomposition out;
  out.sweeps = sweeps;
  out.vectors = Matrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = order[i];
    out.values.push_back(a(src, src));
    // Largest-magnitude component positive, so the sign is reproducible.
    std::size_t big = 0;
    for (std::size_t k = 1; k < n; ++k)
      if (std::abs(v(k, src)) > std::abs(v(big, src)) + 1e-12) big = k;
    const double sign = v(big, src) < 0 ? -1.0 : 1.0;
    for (std::size_t k = 0; k < n; ++k) out.vectors(k, i) = sign * v(k, src);
  }
  return out;
}

double explained_percent(const std::vector<double>& eigenvalues, std::size_t r) {
  double total = 0.0;
  for (double e : eigenvalues) total += e;
  if (total <= 0.0) return 100.0;
  double partial = 0.0;
  for (std::size_t i = 0; i < r && i < eigenvalues.size(); ++i) partial += eigenvalues[i];
  return 100.0 * partial / total;
}

PcaResult select_components(PcaResult p, double v_threshold) {
  if (p.eigenvalues.empty()) throw Error("select_components: no eigenvalues");
  if (!(v_threshold >= 0.0 && v_threshold <= 100.0)) {
    throw Error("select_components: threshold must lie in [0,100]");
  }
  for (std::size_t i = 0; i < p.eigenvalues.size(); ++i) {
    double& e = p.eigenvalues[i];
    if (e < -1e-10) throw Error("select_components: negative eigenvalue " + format_number(e));
    if (e < 0.0) e = 0.0;
    if (i > 0 && e > p.eigenvalues[i - 1]) throw Error("select_components: eigenvalues not descending");
  }
  const std::size_t n = p.eigenvalues.size();
  std::size_t r = 1;
  while (r < n && explained_percent(p.eigenvalues, r) < v_threshold) ++r;
  p.selected_count = r;
  p.explained_fraction = explained_percent(p.eigenvalues, r);
  return p;
}

Matrix project(const Matrix& centered, const PcaResult& p) {
  const std::size_t r = p.selected_count;
  if (r == 0) throw Error("project: no components selected");
  if (p.eigenvectors.rows() != centered.rows() || r > p.eigenvectors.cols()) {
    throw Error("project: data has " + std::to_string(centered.rows()) + " rows but eigenvectors have " +
                std::to_string(p.eigenvectors.rows()));
  }
  Matrix scores(r, centered.cols());
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t a = 0; a < centered.cols(); ++a) {
      double s = 0.0;
      for (std::size_t k = 0; k < centered.rows(); ++k) s += p.eigenvectors(k, i) * centered(k, a);
      scores(i, a) = s;
    }
  }
  return scores;
}

PcaResult run_pca(const DataMatrix& m, double v_threshold) {
  const DataMatrix centered = normalize_zero_mean(m);
  const EigenDecomposition eig = symmetric_eigen(covariance(centered.values));
  PcaResult p;
  p.eigenvalues = eig.values;
  p.eigenvectors = eig.vectors;
  p = select_components(std::move(p), v_threshold);
  p.scores = project(centered.values, p);
  return p;
}

LoadedDataset load_dataset(std::istream& in, const DataSchema& schema, const std::string& source) {
  const CsvTable table = read_csv(in, source);
  const auto user_col = table.column("user");
  const auto domain_col = table.column("domain");
  if (user_col == std::string::npos || domain_col == std::string::npos) {
    throw ParseError(source + ":1: header needs 'user' and 'domain' columns");
  }
  LoadedDataset out;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const std::string where = source + ":" + std::to_string(table.lines[r]) + ": ";
    auto domain = parse_domain(row[domain_col]);
    if (!domain) {
      out.rejected.push_back({r, where + "unknown domain '" + row[domain_col] + "'"});
      continue;
    }
    auto dom = schema.domains.find(*domain);
    if (dom == schema.domains.end()) {
      out.rejected.push_back({r, where + "domain '" + row[domain_col] + "' is not in the schema"});
      continue;
    }
    AgriRecord rec;
    rec.user_id = std::string(trim(row[user_col]));
    rec.domain = *domain;
    std::string problem;
    for (std::size_t c = 0; c < table.header.size() && problem.empty(); ++c) {
      if (c == user_col || c == domain_col) continue;
      const auto cell = trim(row[c]);
      const FeatureSpec* spec = schema.find(*domain, table.header[c]);
      if (!spec) {
        if (!cell.empty()) problem = "column '" + table.header[c] + "' does not belong to this domain";
        continue;
      }
      AttributeValue value;
      if (!cell.empty()) {
        if (spec->kind == FeatureKind::Numeric) {
          try {
            value = parse_numeric_value(cell);
          } catch (const ParseError& e) {
            problem = "column '" + spec->name + "': " + e.what();
          }
        } else {
          value = std::string(cell);
        }
      }
      rec.attributes.emplace_back(spec->name, std::move(value));
    }
    if (!problem.empty()) {
      out.rejected.push_back({r, where + problem});
      continue;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

LoadedDataset load_dataset_file(const std::filesystem::path& path, const DataSchema& schema) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string() + ": cannot open file");
  return load_dataset(in, schema, path.string());
}

}  // namespace agri
