#include "agri/fuzzy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "agri/csv.hpp"

namespace agri {

void FuzzyConfig::validate() const {
  if (!(s > 0.0) || !std::isfinite(s)) throw Error("fuzzy: s must be a positive number");
  if (!(mu >= 0.0 && mu <= 1.0)) throw Error("fuzzy: mu must lie in [0,1]");
}

SimilaritySeries similarity_series(const std::vector<double>& outputs, double s) {
  if (outputs.size() < 2) throw Error("similarity_series: need at least 2 outputs");
  if (!(s > 0.0)) throw Error("similarity_series: s must be positive");
  SimilaritySeries out;
  out.s = s;
  out.order.resize(outputs.size());
  std::iota(out.order.begin(), out.order.end(), 0);
  std::stable_sort(out.order.begin(), out.order.end(),
                   [&](std::size_t x, std::size_t y) { return outputs[x] < outputs[y]; });
  for (auto i : out.order) out.sorted_outputs.push_back(outputs[i]);
  for (std::size_t m = 0; m + 1 < out.sorted_outputs.size(); ++m) {
    out.diffs.push_back(out.sorted_outputs[m + 1] - out.sorted_outputs[m]);
  }
  const double n = static_cast<double>(out.diffs.size());
  const double mean = std::accumulate(out.diffs.begin(), out.diffs.end(), 0.0) / n;
  double ss = 0.0;
  for (double d : out.diffs) ss += (d - mean) * (d - mean);
  out.sd_r = std::sqrt(ss / n);
  const double scale = s * out.sd_r;
  for (double d : out.diffs) {
    if (scale == 0.0) {
      out.sims.push_back(d == 0.0 ? 1.0 : 0.0);
    } else {
      out.sims.push_back(d <= scale ? 1.0 - d / scale : 0.0);
    }
  }
  return out;
}

std::vector<OutputCluster> cluster_outputs(const SimilaritySeries& series, double mu) {
  std::vector<OutputCluster> clusters;
  OutputCluster cur;
  cur.id = 1;
  for (std::size_t m = 0; m < series.sims.size(); ++m) {
    if (series.sims[m] <= mu) {
      cur.last = m;
      clusters.push_back(cur);
      cur = OutputCluster{};
      cur.id = static_cast<int>(clusters.size()) + 1;
      cur.first = m + 1;
    }
  }
  cur.last = series.sorted_outputs.size() - 1;
  clusters.push_back(cur);
  return clusters;
}

OutputCluster output_memberships(OutputCluster cluster, const SimilaritySeries& series) {
  const std::size_t n = cluster.size();
  cluster.memberships.assign(n, 1.0);
  if (n >= 2) {
    double rho = 1.0;
    for (std::size_t m = cluster.first; m < cluster.last; ++m) rho = std::min(rho, series.sims[m]);
    cluster.memberships.front() = rho;
    cluster.memberships.back() = rho;
  }
  return cluster;
}

double LinguisticTerm::membership(double x) const {
  if (x >= b && x <= c) return 1.0;
  if (x > a && x < b) return (x - a) / (b - a);
  if (x > c && x < d) return (d - x) / (d - c);
  return 0.0;
}

double TriangularMf::membership(double x) const { return term().membership(x); }

std::vector<TriangularMf> init_input_mfs(const std::vector<double>& values, double unit) {
  if (!(unit > 0.0)) throw Error("init_input_mfs: unit must be positive");
  std::set<double> distinct(values.begin(), values.end());
  std::vector<TriangularMf> mfs;
  for (double v : distinct) mfs.push_back({v - unit, v, v + unit});
  return mfs;
}

std::vector<TriangularMf> init_input_mfs(const std::vector<double>& values) {
  std::set<double> distinct(values.begin(), values.end());
  if (distinct.size() < 2) throw Error("init_input_mfs: need at least 2 distinct values to derive a unit");
  double unit = std::numeric_limits<double>::infinity();
  for (auto it = std::next(distinct.begin()); it != distinct.end(); ++it) {
    unit = std::min(unit, *it - *std::prev(it));
  }
  return init_input_mfs(values, unit);
}

std::size_t best_term(const std::vector<LinguisticTerm>& terms, double x) {
  std::size_t best = 0;
  double best_mu = -1.0;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    const double mu = terms[i].membership(x);
    if (mu > best_mu) {
      best_mu = mu;
      best = i;
    }
  }
  return best;
}

namespace {

void put_slot(std::map<Position, Slot>& slots, const Position& pos, Slot slot) {
  auto [it, inserted] = slots.emplace(pos, slot);
  if (inserted) return;
  Slot& cur = it->second;
  if (slot.membership > cur.membership || (slot.membership == cur.membership && slot.cluster < cur.cluster)) {
    cur = slot;
  }
}

using Line = std::map<Position, int>;  // remaining coordinates -> cluster

Line line_of(const DecisionTable& t, std::size_t dim, std::size_t index) {
  Line line;
  for (const auto& [pos, slot] : t.slots) {
    if (pos[dim] != index) continue;
    Position rest = pos;
    rest.erase(rest.begin() + static_cast<std::ptrdiff_t>(dim));
    line.emplace(std::move(rest), slot.cluster);
  }
  return line;
}

bool non_conflicting(const Line& x, const Line& y) {
  for (const auto& [key, cluster] : x) {
    auto it = y.find(key);
    if (it != y.end() && it->second != cluster) return false;
  }
  return true;
}

void merge_lines(DecisionTable& t, std::size_t dim, std::size_t i) {
  auto& terms = t.terms[dim];
  const LinguisticTerm lo = terms[i], hi = terms[i + 1];
  terms[i] = {lo.a, lo.b, hi.c, hi.d};
  terms.erase(terms.begin() + static_cast<std::ptrdiff_t>(i + 1));
  std::map<Position, Slot> next;
  for (const auto& [key, slot] : t.slots) {
    Position pos = key;
    if (pos[dim] > i) --pos[dim];
    put_slot(next, pos, slot);
  }
  t.slots = std::move(next);
}

}  // namespace

DecisionTable build_decision_table(const std::vector<std::vector<double>>& inputs,
                                   const std::vector<std::vector<TriangularMf>>& input_mfs,
                                   const std::vector<OutputFuzzy>& outputs) {
  if (inputs.size() != outputs.size()) throw Error("build_decision_table: inputs and outputs differ in length");
  DecisionTable t;
  for (const auto& mfs : input_mfs) {
    std::vector<LinguisticTerm> terms;
    for (const auto& mf : mfs) terms.push_back(mf.term());
    t.terms.push_back(std::move(terms));
  }
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i].size() != t.terms.size()) throw Error("build_decision_table: instance arity mismatch");
    Position pos;
    for (std::size_t d = 0; d < t.terms.size(); ++d) pos.push_back(best_term(t.terms[d], inputs[i][d]));
    put_slot(t.slots, pos, {outputs[i].cluster, outputs[i].membership});
  }
  return t;
}

DecisionTable simplify_table(DecisionTable table, std::vector<MergeStep>* steps) {
  for (;;) {
    bool merged = false;
    for (char rule : {'a', 'b'}) {
      for (std::size_t dim = 0; dim < table.terms.size() && !merged; ++dim) {
        for (std::size_t i = 0; i + 1 < table.terms[dim].size() && !merged; ++i) {
          const Line x = line_of(table, dim, i);
          const Line y = line_of(table, dim, i + 1);
          const bool ok = rule == 'a' ? x == y : (!x.empty() && !y.empty() && non_conflicting(x, y));
          if (!ok) continue;
          merge_lines(table, dim, i);
          if (steps) steps->push_back({dim, i, rule});
          merged = true;
        }
      }
      if (merged) break;
    }
    if (!merged) return table;
  }
}

std::vector<FuzzyRule> derive_rules(const DecisionTable& table) {
  std::vector<FuzzyRule> rules;
  for (const auto& [pos, slot] : table.slots) rules.push_back({pos, slot.cluster});
  return rules;
}

Inference infer(const std::vector<FuzzyRule>& rules, const std::vector<std::vector<LinguisticTerm>>& terms,
                const std::vector<double>& query) {
  if (rules.empty()) throw Error("infer: no rules");
  if (query.size() != terms.size()) throw Error("infer: query arity mismatch");
  Inference best;
  bool found = false;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    double strength = 1.0;
    for (std::size_t d = 0; d < terms.size() && strength > 0.0; ++d) {
      strength = std::min(strength, terms[d].at(rules[r].antecedents[d]).membership(query[d]));
    }
    if (strength <= 0.0) continue;
    if (!found || strength > best.strength ||
        (strength == best.strength && rules[r].consequent < best.cluster)) {
      best = {rules[r].consequent, strength, r};
      found = true;
    }
  }
  if (!found) throw NoMatchingRule("no rule matches the query");
  return best;
}

double FuzzyModel::representative(int cluster) const {
  for (const auto& c : clusters) {
    if (c.id == cluster) return c.representative;
  }
  throw Error("unknown cluster " + std::to_string(cluster));
}

FuzzyModel induce(const std::vector<std::vector<double>>& inputs, const std::vector<double>& outputs,
                  const FuzzyConfig& config, const std::vector<double>& units) {
  config.validate();
  if (inputs.size() != outputs.size()) throw Error("induce: inputs and outputs differ in length");
  if (inputs.empty()) throw Error("induce: no training instances");
  const std::size_t dims = inputs.front().size();
  if (!units.empty() && units.size() != dims) throw Error("induce: units arity mismatch");

  FuzzyModel m;
  m.config = config;
  m.series = similarity_series(outputs, config.s);
  m.instance_outputs.resize(outputs.size());
  for (auto cluster : cluster_outputs(m.series, config.mu)) {
    cluster = output_memberships(cluster, m.series);
    ClusterInfo info;
    info.id = cluster.id;
    double top = 0.0;
    for (std::size_t k = 0; k < cluster.size(); ++k) top = std::max(top, cluster.memberships[k]);
    double sum = 0.0;
    int count = 0;
    for (std::size_t k = 0; k < cluster.size(); ++k) {
      const std::size_t sorted_index = cluster.first + k;
      const double value = m.series.sorted_outputs[sorted_index];
      info.outputs.push_back(value);
      info.memberships.push_back(cluster.memberships[k]);
      m.instance_outputs[m.series.order[sorted_index]] = {cluster.id, cluster.memberships[k]};
      if (cluster.memberships[k] == top) {
        sum += value;
        ++count;
      }
    }
    info.representative = sum / count;
    m.clusters.push_back(std::move(info));
  }

  std::vector<std::vector<TriangularMf>> mfs;
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> column;
    for (const auto& row : inputs) {
      if (row.size() != dims) throw Error("induce: instance arity mismatch");
      column.push_back(row[d]);
    }
    try {
      mfs.push_back(!units.empty() && units[d] > 0.0 ? init_input_mfs(column, units[d]) : init_input_mfs(column));
    } catch (const Error& e) {
      throw Error("induce: attribute " + std::to_string(d) + ": " + e.what());
    }
  }
  m.initial_table = build_decision_table(inputs, mfs, m.instance_outputs);
  m.table = simplify_table(m.initial_table);
  m.rules = derive_rules(m.table);
  return m;
}

ProductivityModel train_productivity_model(const TrainingInstanceDataset& tid, const FuzzyConfig& config) {
  if (tid.instances.size() < 2) throw Error("train: need at least 2 training instances");
  std::vector<std::vector<double>> inputs;
  std::vector<double> outputs;
  for (const auto& inst : tid.instances) {
    inputs.push_back(inst.features);
    outputs.push_back(level_score(inst.label));
  }
  std::vector<double> units;
  for (std::size_t d = 0; d < tid.schema.features.size(); ++d) {
    const auto& f = tid.schema.features[d];
    if (f.kind == FeatureKind::Categorical) {
      units.push_back(1.0);
      continue;
    }
    std::set<double> distinct;
    for (const auto& row : inputs) distinct.insert(row[d]);
    const double span = f.max - f.min;
    units.push_back(distinct.size() < 2 ? (span > 0.0 ? span : 1.0) : 0.0);
  }
  return {tid.schema, induce(inputs, outputs, config, units)};
}

ProductivityLevel classify_productivity(const ProductivityModel& m, const FeatureVector& query) {
  const Inference hit = infer(m.model.rules, m.model.table.terms, query);
  return level_from_score(m.model.representative(hit.cluster));
}

namespace {

nlohmann::json term_json(const LinguisticTerm& t) { return nlohmann::json::array({t.a, t.b, t.c, t.d}); }

LinguisticTerm term_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 4) throw ParseError("model: a term needs 4 numbers");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

std::string term_label(const FeatureSpec& spec, const LinguisticTerm& t) {
  auto name = [&](double v) {
    if (spec.kind == FeatureKind::Categorical) {
      const auto idx = static_cast<std::size_t>(std::llround(v));
      if (idx < spec.tokens.size()) return spec.tokens[idx];
    }
    return format_number(v);
  };
  if (t.b == t.c) return name(t.b);
  if (spec.kind == FeatureKind::Categorical) {
    std::string out;
    for (auto i = static_cast<long long>(std::ceil(t.b)); i <= static_cast<long long>(std::floor(t.c)); ++i) {
      if (!out.empty()) out += "|";
      out += name(static_cast<double>(i));
    }
    return out;
  }
  return name(t.b) + ".." + name(t.c);
}

}  // namespace

nlohmann::json to_json(const ProductivityModel& m) {
  const auto& fm = m.model;
  nlohmann::json clusters = nlohmann::json::array();
  for (const auto& c : fm.clusters) {
    clusters.push_back({{"id", c.id},
                        {"outputs", c.outputs},
                        {"memberships", c.memberships},
                        {"representative", c.representative},
                        {"level", std::string(1, to_char(level_from_score(c.representative)))}});
  }
  nlohmann::json inputs = nlohmann::json::array();
  for (std::size_t d = 0; d < fm.table.terms.size(); ++d) {
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& t : fm.table.terms[d]) {
      terms.push_back({{"label", term_label(m.schema.features.at(d), t)}, {"trapezoid", term_json(t)}});
    }
    inputs.push_back({{"attribute", m.schema.features.at(d).name}, {"terms", terms}});
  }
  nlohmann::json slots = nlohmann::json::array();
  for (const auto& [pos, slot] : fm.table.slots) {
    slots.push_back({{"position", pos}, {"cluster", slot.cluster}, {"membership", slot.membership}});
  }
  nlohmann::json rules = nlohmann::json::array();
  for (const auto& r : fm.rules) {
    nlohmann::json text = nlohmann::json::array();
    for (std::size_t d = 0; d < r.antecedents.size(); ++d) {
      text.push_back(m.schema.features.at(d).name + " is " +
                     term_label(m.schema.features.at(d), fm.table.terms[d].at(r.antecedents[d])));
    }
    rules.push_back({{"if", r.antecedents}, {"then", r.consequent}, {"text", text}});
  }
  nlohmann::json j = to_json(m.schema);
  j["config"] = {{"s", fm.config.s}, {"mu", fm.config.mu}};
  j["clusters"] = clusters;
  j["inputs"] = inputs;
  j["table"] = slots;
  j["rules"] = rules;
  return j;
}

ProductivityModel productivity_model_from_json(const nlohmann::json& j) {
  try {
    ProductivityModel m;
    m.schema = parse_feature_schema(j);
    m.model.config.s = j.at("config").at("s").get<double>();
    m.model.config.mu = j.at("config").at("mu").get<double>();
    m.model.config.validate();
    for (const auto& c : j.at("clusters")) {
      ClusterInfo info;
      info.id = c.at("id").get<int>();
      info.outputs = c.at("outputs").get<std::vector<double>>();
      info.memberships = c.at("memberships").get<std::vector<double>>();
      info.representative = c.at("representative").get<double>();
      m.model.clusters.push_back(std::move(info));
    }
    for (const auto& in : j.at("inputs")) {
      std::vector<LinguisticTerm> terms;
      for (const auto& t : in.at("terms")) terms.push_back(term_from_json(t.at("trapezoid")));
      m.model.table.terms.push_back(std::move(terms));
    }
    if (m.model.table.terms.size() != m.schema.features.size()) {
      throw ParseError("model: input count does not match the schema");
    }
    for (const auto& s : j.at("table")) {
      m.model.table.slots[s.at("position").get<Position>()] = {s.at("cluster").get<int>(),
                                                               s.at("membership").get<double>()};
    }
    for (const auto& r : j.at("rules")) {
      FuzzyRule rule{r.at("if").get<Position>(), r.at("then").get<int>()};
      if (rule.antecedents.size() != m.model.table.terms.size()) throw ParseError("model: rule arity mismatch");
      for (std::size_t d = 0; d < rule.antecedents.size(); ++d) {
        if (rule.antecedents[d] >= m.model.table.terms[d].size()) throw ParseError("model: rule term out of range");
      }
      m.model.rules.push_back(std::move(rule));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("model: ") + e.what());
  }
}

}  // namespace agri
