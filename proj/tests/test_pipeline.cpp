#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "agri/error.hpp"
#include "agri/pipeline.hpp"
#include "agri/random.hpp"
#include "doctest.h"

using namespace agri;

namespace {

FeatureSpec num(std::string name, double lo, double hi) {
  FeatureSpec f;
  f.name = std::move(name);
  f.min = lo;
  f.max = hi;
  return f;
}

FeatureSpec cat(std::string name, std::vector<std::string> tokens) {
  FeatureSpec f;
  f.name = std::move(name);
  f.kind = FeatureKind::Categorical;
  f.tokens = std::move(tokens);
  return f;
}

DataSchema small_schema() {
  DataSchema s;
  s.domains[Domain::Weather] = {num("Humidity", 0, 100), num("Rainfall", 0, 500)};
  s.domains[Domain::Soil] = {num("Water", 0, 100), cat("Color", {"Black", "Red", "Brown"})};
  return s;
}

AgriRecord rec(std::string user, Domain d, std::vector<std::pair<std::string, AttributeValue>> attrs) {
  return {std::move(user), d, std::move(attrs)};
}

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < c; ++j) m(i, j) = rng.uniform(-5.0, 5.0);
  return m;
}

}  // namespace

TEST_CASE("preprocess leaves clean records alone") {
  std::vector<AgriRecord> in = {rec("u1", Domain::Weather, {{"Humidity", 50.0}, {"Rainfall", 10.0}})};
  const auto out = preprocess(in, small_schema());
  CHECK(out.records == in);
  CHECK(out.flags.empty());
  CHECK(out.rejected.empty());
}

TEST_CASE("preprocess fills from adjacent values") {
  std::vector<AgriRecord> in = {rec("u1", Domain::Weather, {{"Humidity", 10.0}}),
                                rec("u2", Domain::Weather, {{"Humidity", std::monostate{}}}),
                                rec("u3", Domain::Weather, {{"Humidity", 20.0}})};
  const auto out = preprocess(in, small_schema());
  CHECK(std::get<double>(out.records[1].attributes[0].second) == 15.0);
  REQUIRE(out.flags.size() == 1);
  CHECK(out.flags[0].record == 1);
}

TEST_CASE("preprocess uses the single neighbour at a boundary") {
  std::vector<AgriRecord> in = {rec("u1", Domain::Weather, {{"Humidity", std::monostate{}}}),
                                rec("u2", Domain::Weather, {{"Humidity", 30.0}}),
                                rec("u3", Domain::Soil, {{"Color", std::monostate{}}}),
                                rec("u4", Domain::Soil, {{"Color", std::string("Red")}})};
  const auto out = preprocess(in, small_schema());
  CHECK(std::get<double>(out.records[0].attributes[0].second) == 30.0);
  CHECK(std::get<std::string>(out.records[2].attributes[0].second) == "Red");
}

TEST_CASE("preprocess clamps and flags out-of-range values") {
  std::vector<AgriRecord> in = {rec("u1", Domain::Weather, {{"Humidity", 150.0}})};
  const auto out = preprocess(in, small_schema());
  CHECK(std::get<double>(out.records[0].attributes[0].second) == 100.0);
  REQUIRE(out.flags.size() == 1);
  CHECK(out.flags[0].attribute == "Humidity");
}

TEST_CASE("preprocess rejects per record and deduplicates") {
  std::vector<AgriRecord> in = {rec("u1", Domain::Weather, {{"Humidity", 1.0}}),
                                rec("u1", Domain::Cattle, {{"Type", std::string("Cow")}}),
                                rec("u1", Domain::Weather, {{"Humidity", 2.0}}),
                                rec("u2", Domain::Weather, {{"Nope", 1.0}})};
  const auto out = preprocess(in, small_schema());
  REQUIRE(out.records.size() == 1);
  CHECK(std::get<double>(out.records[0].attributes[0].second) == 1.0);
  REQUIRE(out.rejected.size() == 2);
  CHECK(out.rejected[0].input_index == 1);
  CHECK(out.rejected[1].input_index == 3);
}

TEST_CASE("build_matrix flattens user grids into columns") {
  const auto schema = small_schema();
  SUBCASE("single user") {
    auto m = build_matrix({rec("u1", Domain::Weather, {{"Humidity", 3.0}, {"Rainfall", 7.0}})}, schema);
    REQUIRE(m.values.rows() == 2);
    REQUIRE(m.values.cols() == 1);
    CHECK(m.values(0, 0) == 3.0);
    CHECK(m.values(1, 0) == 7.0);
  }
  SUBCASE("three users, two domains, oracle flatten") {
    std::vector<AgriRecord> records;
    const double grid[3][2][2] = {{{1, 2}, {3, 2}}, {{4, 5}, {6, 0}}, {{7, 8}, {9, 1}}};
    const char* colors[] = {"Black", "Red", "Brown"};
    for (int u = 0; u < 3; ++u) {
      const std::string id = "u" + std::to_string(u);
      // Soil first and attributes shuffled: slot order must still follow the schema.
      records.push_back(rec(id, Domain::Soil, {{"Color", std::string(colors[static_cast<int>(grid[u][1][1])])},
                                               {"Water", grid[u][1][0]}}));
      records.push_back(rec(id, Domain::Weather, {{"Humidity", grid[u][0][0]}, {"Rainfall", grid[u][0][1]}}));
    }
    const auto m = build_matrix(records, schema);
    REQUIRE(m.values.rows() == 4);
    REQUIRE(m.values.cols() == 3);
    CHECK(m.domain_count == 2);
    for (int u = 0; u < 3; ++u)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) CHECK(m.values(static_cast<std::size_t>(b * 2 + c), static_cast<std::size_t>(u)) == grid[u][b][c]);
  }
  SUBCASE("ragged input names the user") {
    std::vector<AgriRecord> records = {rec("u1", Domain::Weather, {{"Humidity", 1.0}, {"Rainfall", 2.0}}),
                                       rec("u2", Domain::Weather, {{"Humidity", 1.0}})};
    try {
      build_matrix(records, schema);
      FAIL("expected error");
    } catch (const Error& e) {
      CHECK(std::string(e.what()).find("'u2'") != std::string::npos);
    }
  }
}

TEST_CASE("normalize_zero_mean") {
  DataMatrix m;
  m.values = Matrix(2, 3);
  m.values(0, 0) = 0;
  m.values(0, 1) = 10;
  m.values(0, 2) = 5;
  m.values(1, 0) = 5;
  m.values(1, 1) = 5;
  m.values(1, 2) = 5;
  const auto n = normalize_zero_mean(m);
  CHECK(n.values(0, 0) == doctest::Approx(-0.5));
  CHECK(n.values(0, 1) == doctest::Approx(0.5));
  CHECK(n.values(0, 2) == doctest::Approx(0.0));
  for (std::size_t c = 0; c < 3; ++c) CHECK(n.values(1, c) == 0.0);

  DataMatrix one;
  one.values = Matrix(2, 1);
  CHECK_THROWS_AS(normalize_zero_mean(one), Error);

  Rng rng(11);
  DataMatrix r;
  r.values = random_matrix(rng, 4, 3);
  const auto z = normalize_zero_mean(r);
  for (std::size_t i = 0; i < 4; ++i) {
    double sum = 0.0;
    for (std::size_t c = 0; c < 3; ++c) sum += z.values(i, c);
    CHECK(std::abs(sum) <= 1e-9);
  }
  const Matrix again = center_rows(z.values);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t c = 0; c < 3; ++c) CHECK(again(i, c) == doctest::Approx(z.values(i, c)).epsilon(1e-12));
}

TEST_CASE("covariance") {
  Matrix two(2, 2);
  two(0, 0) = -1;
  two(0, 1) = 1;
  two(1, 0) = -1;
  two(1, 1) = 1;
  const auto c = covariance(two);
  CHECK(c(0, 0) == 2.0);
  CHECK(c(0, 1) == 2.0);
  CHECK(c(1, 0) == 2.0);
  CHECK(c(1, 1) == 2.0);

  const auto zero = covariance(Matrix(3, 4));
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j) CHECK(zero(i, j) == 0.0);

  Matrix off(1, 2);
  off(0, 0) = 1;
  off(0, 1) = 2;
  CHECK_THROWS_AS(covariance(off), Error);

  Rng rng(3);
  const Matrix x = center_rows(random_matrix(rng, 5, 4));
  const auto cov = covariance(x);
  for (std::size_t i = 0; i < 5; ++i) {
    for (std::size_t j = 0; j < 5; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < 4; ++k) s += x(i, k) * x(j, k);
      CHECK(std::abs(cov(i, j) - s / 3.0) <= 1e-10);
      CHECK(cov(i, j) == cov(j, i));
    }
  }
}

TEST_CASE("jacobi agrees with Eigen's solver") {
  Rng rng(99);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + static_cast<std::size_t>(rng.uniform_int(0, 6));
    const Matrix x = center_rows(random_matrix(rng, n, n + 2));
    const Matrix c = covariance(x);
    const auto eig = symmetric_eigen(c);
    Eigen::MatrixXd e(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    double trace = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      trace += c(i, i);
      for (std::size_t j = 0; j < n; ++j) e(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c(i, j);
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(e);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double ref = solver.eigenvalues()(static_cast<Eigen::Index>(n - 1 - i));
      CHECK(eig.values[i] == doctest::Approx(ref).epsilon(1e-8).scale(1.0));
      sum += eig.values[i];
      if (i > 0) CHECK(eig.values[i] <= eig.values[i - 1]);
    }
    CHECK(std::abs(sum - trace) <= 1e-8);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        double dot = 0.0;
        for (std::size_t k = 0; k < n; ++k) dot += eig.vectors(k, i) * eig.vectors(k, j);
        CHECK(std::abs(dot - (i == j ? 1.0 : 0.0)) <= 1e-8);
      }
    }
  }
}

TEST_CASE("select_components") {
  PcaResult p;
  p.eigenvalues = {4, 1};
  auto s = select_components(p, 80.0);
  CHECK(s.selected_count == 1);
  CHECK(s.explained_fraction == 80.0);

  p.eigenvalues = {1, 1, 1, 1};
  CHECK(select_components(p, 100.0).selected_count == 4);

  p.eigenvalues = {0, 0, 0};
  s = select_components(p, 90.0);
  CHECK(s.selected_count == 1);
  CHECK(s.explained_fraction == 100.0);

  p.eigenvalues = {2, 1, -1e-12};
  s = select_components(p, 100.0);
  CHECK(s.eigenvalues[2] == 0.0);
  CHECK(s.selected_count == 2);

  p.eigenvalues = {2, -1};
  CHECK_THROWS_AS(select_components(p, 50.0), Error);

  Rng rng(5);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> ev;
    for (int i = 0; i < 6; ++i) ev.push_back(rng.uniform(0.0, 10.0));
    std::sort(ev.rbegin(), ev.rend());
    p.eigenvalues = ev;
    double total = 0.0;
    for (double e : ev) total += e;
    std::size_t r = 0;
    double partial = 0.0;
    double prev_v = 0.0;
    while (r < ev.size()) {
      partial += ev[r++];
      const double v = 100.0 * partial / total;
      CHECK(v >= prev_v);
      prev_v = v;
      if (v >= 90.0) break;
    }
    CHECK(select_components(p, 90.0).selected_count == r);
  }
}

TEST_CASE("project") {
  Rng rng(8);
  const Matrix x = center_rows(random_matrix(rng, 3, 5));
  PcaResult id;
  id.eigenvalues = {1, 1, 1};
  id.eigenvectors = Matrix::identity(3);
  id.selected_count = 3;
  CHECK(project(x, id) == x);

  Matrix two = center_rows(random_matrix(rng, 2, 4));
  PcaResult axis;
  axis.eigenvectors = Matrix::identity(2);
  axis.selected_count = 1;
  const auto s = project(two, axis);
  REQUIRE(s.rows() == 1);
  for (std::size_t a = 0; a < 4; ++a) CHECK(s(0, a) == two(0, a));

  PcaResult bad;
  bad.eigenvectors = Matrix::identity(4);
  bad.selected_count = 1;
  CHECK_THROWS_AS(project(x, bad), Error);
}

TEST_CASE("rank-r reconstruction error equals dropped eigenvalues times (z-1)") {
  Rng rng(21);
  for (int t = 0; t < 10; ++t) {
    const std::size_t n = 5, z = 7;
    const Matrix x = center_rows(random_matrix(rng, n, z));
    const auto eig = symmetric_eigen(covariance(x));
    for (std::size_t r = 1; r <= n; ++r) {
      PcaResult p;
      p.eigenvalues = eig.values;
      p.eigenvectors = eig.vectors;
      p.selected_count = r;
      const Matrix scores = project(x, p);
      double err = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t a = 0; a < z; ++a) {
          double rec = 0.0;
          for (std::size_t k = 0; k < r; ++k) rec += eig.vectors(i, k) * scores(k, a);
          err += (x(i, a) - rec) * (x(i, a) - rec);
        }
      }
      double dropped = 0.0;
      for (std::size_t k = r; k < n; ++k) dropped += eig.values[k];
      CHECK(std::abs(err - dropped * static_cast<double>(z - 1)) <= 1e-6);
      if (r == n) CHECK(err <= 1e-12);
    }
  }
}

TEST_CASE("dataset file loads, cleans and reduces") {
  const auto doc = load_json_file(AGRI_DATA_DIR "/schema.json");
  const auto schema = parse_data_schema(doc);
  const auto loaded = load_dataset_file(AGRI_DATA_DIR "/dataset.csv", schema);
  REQUIRE(loaded.rejected.size() == 1);
  CHECK(loaded.rejected[0].message.find("orchard") != std::string::npos);
  const auto clean = preprocess(loaded.records, schema);
  CHECK(clean.records.size() == 24);
  const auto m = build_matrix(clean.records, schema);
  CHECK(m.values.cols() == 8);
  CHECK(m.values.rows() == 18);
  const auto pca = run_pca(m, 90.0);
  CHECK(pca.selected_count >= 1);
  CHECK(pca.explained_fraction >= 90.0);
  CHECK(pca.scores.rows() == pca.selected_count);
}

TEST_CASE("domain names parse with or without the Info suffix") {
  CHECK(parse_domain("Weather Info") == Domain::Weather);
  CHECK(parse_domain("cattle") == Domain::Cattle);
  CHECK_FALSE(parse_domain("orchard").has_value());
  std::istringstream in("user,domain,Humidity\nu1,weather,abc\n");
  const auto loaded = load_dataset(in, small_schema(), "d.csv");
  REQUIRE(loaded.rejected.size() == 1);
  CHECK(loaded.rejected[0].message.find("d.csv:2") != std::string::npos);
}
