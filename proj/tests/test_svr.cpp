#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "support/fixtures.hpp"
#include "support/qp_oracle.hpp"
#include "teta/error.hpp"
#include "teta/scalability.hpp"
#include "teta/svr.hpp"

using namespace teta;
using namespace teta::svr;
using teta::testing::svr_fixture;

TEST(Rbf, Examples) {
  const double a[] = {0.0}, b[] = {1.0};
  EXPECT_EQ(rbf_kernel(a, a, 3.0), 1.0);
  EXPECT_NEAR(rbf_kernel(a, b, 1.0), 0.36787944117144233, 1e-15);
  EXPECT_LT(rbf_kernel(a, b, 800.0), 1e-300);
  const double c[] = {0.0, 1.0};
  EXPECT_THROW(rbf_kernel(a, c, 1.0), DimensionError);
  EXPECT_THROW(rbf_kernel(a, b, 0.0), DomainError);
}

class OracleAgreement : public ::testing::TestWithParam<int> {};

TEST_P(OracleAgreement, SmoMatchesDenseQp) {
  auto f = svr_fixture(GetParam());
  auto model = fit_svr(f.x, f.y, f.cfg);
  ASSERT_EQ(model.status, FitStatus::converged);
  auto oracle = teta::testing::solve_svr_dual(f.x, f.y, f.cfg.C, f.cfg.epsilon, f.cfg.gamma);

  // Predictions on the training points and on fresh points.
  std::mt19937_64 rng(77 + GetParam());
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  double se = 0.0;
  std::size_t count = 0;
  std::vector<double> q(f.x.cols());
  for (std::size_t i = 0; i < f.x.rows() + 50; ++i) {
    if (i < f.x.rows()) {
      std::copy(f.x.row(i).begin(), f.x.row(i).end(), q.begin());
    } else {
      for (auto& v : q) v = u(rng);
    }
    const double d = predict_svr(model, q) - oracle.predict(q);
    se += d * d;
    ++count;
  }
  EXPECT_LE(std::sqrt(se / static_cast<double>(count)), 1e-3);

  EXPECT_LE(teta::testing::kkt_violation(model, f.x, f.y, f.cfg.C, f.cfg.epsilon),
            f.cfg.tol);
  EXPECT_LE(model.max_kkt_violation, f.cfg.tol);
  double sum = 0.0;
  for (double c : model.coefficients) {
    EXPECT_LE(std::abs(c), f.cfg.C);
    EXPECT_NE(c, 0.0);
    sum += c;
  }
  EXPECT_NEAR(sum, 0.0, f.cfg.tol);
  EXPECT_NEAR(model.coefficient_sum, sum, 1e-12);
  ASSERT_EQ(model.support_indices.size(), model.support_count());
  for (std::size_t k = 0; k < model.support_count(); ++k) {
    for (std::size_t c = 0; c < f.x.cols(); ++c) {
      EXPECT_EQ(model.support_vectors(k, c), f.x(model.support_indices[k], c));
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Fixtures, OracleAgreement, ::testing::Range(0, 10));

TEST(Svr, ConstantTargetsPredictTheConstant) {
  auto f = svr_fixture(4);
  std::vector<double> y(f.x.rows(), 42.5);
  auto m = fit_svr(f.x, y, f.cfg);
  EXPECT_EQ(m.status, FitStatus::converged);
  for (std::size_t i = 0; i < f.x.rows(); ++i) {
    EXPECT_NEAR(predict_svr(m, f.x.row(i)), 42.5, f.cfg.tol);
  }
}

TEST(Svr, TargetsInsideTheTubeNeedNoSupportVectors) {
  auto f = svr_fixture(6);
  SvrConfig cfg = f.cfg;
  cfg.epsilon = 0.5;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-0.45, 0.45);
  std::vector<double> y(f.x.rows());
  for (auto& v : y) v = 10.0 + u(rng);
  auto m = fit_svr(f.x, y, cfg);
  EXPECT_EQ(m.support_count(), 0u);
  const double b = predict_svr(m, f.x.row(0));
  EXPECT_EQ(b, m.bias);
  for (double v : y) EXPECT_LE(std::abs(v - b), cfg.epsilon + 1e-12);
}

TEST(Svr, PredictWithZeroAndOneSupportVector) {
  SvrModel m;
  m.bias = 2.5;
  m.gamma = 0.7;
  m.support_vectors = Matrix(0, 3);
  const double x[] = {1, 2, 3};
  EXPECT_EQ(predict_svr(m, x), 2.5);

  m.support_vectors = Matrix(1, 3);
  for (std::size_t c = 0; c < 3; ++c) m.support_vectors(0, c) = x[c];
  m.coefficients = {1.0};
  EXPECT_EQ(predict_svr(m, x), 3.5);
  const double y[] = {1, 2};
  EXPECT_THROW(predict_svr(m, y), DimensionError);
}

TEST(Svr, KernelMatrixIsPositiveSemidefinite) {
  for (int k = 0; k < 10; ++k) {
    auto f = svr_fixture(k);
    auto K = teta::testing::dense_rbf(f.x, f.cfg.gamma);
    for (std::size_t i = 0; i < K.rows(); ++i) {
      for (std::size_t j = 0; j < K.cols(); ++j) EXPECT_EQ(K(i, j), K(j, i));
    }
    EXPECT_TRUE(teta::testing::cholesky_ok(K, 1e-10)) << "fixture " << k;
  }
}

TEST(Svr, IterationCapAndTimeBudget) {
  auto f = svr_fixture(9);
  SvrConfig cfg = f.cfg;
  cfg.max_iterations = 1;
  auto m = fit_svr(f.x, f.y, cfg);
  EXPECT_EQ(m.status, FitStatus::max_iterations);
  EXPECT_STREQ(to_string(m.status), "NOT_CONVERGED");
  EXPECT_GT(m.max_kkt_violation, cfg.tol);

  cfg = f.cfg;
  cfg.time_budget_seconds = 0.0;
  auto t = fit_svr(f.x, f.y, cfg);
  EXPECT_EQ(t.status, FitStatus::timeout);
  EXPECT_STREQ(to_string(t.status), "TIMEOUT");
  EXPECT_STREQ(to_string(FitStatus::converged), "ok");
}

TEST(Svr, CacheSizeDoesNotChangeTheResult) {
  auto f = svr_fixture(9);
  SvrConfig small = f.cfg;
  small.cache_rows = 2;
  auto a = fit_svr(f.x, f.y, small);
  auto b = fit_svr(f.x, f.y, f.cfg);
  EXPECT_EQ(a.coefficients, b.coefficients);
  EXPECT_EQ(a.support_indices, b.support_indices);
  EXPECT_EQ(a.bias, b.bias);
  EXPECT_EQ(a.iterations, b.iterations);
}

TEST(Svr, RejectsBadInput) {
  Matrix one(1, 2);
  std::vector<double> y1{1.0};
  EXPECT_THROW(fit_svr(one, y1, SvrConfig{}), DomainError);
  Matrix two(2, 2);
  EXPECT_THROW(fit_svr(two, y1, SvrConfig{}), DimensionError);
  SvrConfig bad;
  bad.C = 0;
  std::vector<double> y2{1.0, 2.0};
  EXPECT_THROW(fit_svr(two, y2, bad), DomainError);
}

TEST(Scalability, TableStructureOnFiveThousandSamples) {
  synth::SynthConfig sc;
  sc.num_lines = 5;
  sc.records_per_line = 1000;
  sc.seed = 21;
  auto records = clean(synth::generate(sc)).records;
  ASSERT_EQ(records.size(), 5000u);

  ScalabilityConfig cfg;
  cfg.line_counts = {1, 3, 5};
  cfg.fcnn.epochs = 1;
  cfg.svr.time_budget_seconds = 3.0;
  auto rows = scalability_experiment(records, cfg);
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    EXPECT_EQ(r.line_count, cfg.line_counts[i / 2]);
    EXPECT_EQ(r.model, i % 2 == 0 ? "fcnn" : "svr");
    EXPECT_GE(r.wall_seconds, 0.0);
    EXPECT_EQ(r.train_samples, static_cast<std::size_t>(std::llround(0.8 * 1000 * r.line_count)));
    if (r.status == "TIMEOUT") {
      EXPECT_EQ(r.model, "svr");
      EXPECT_TRUE(std::isnan(r.rmse_seconds));
    } else {
      EXPECT_TRUE(r.status == "ok" || r.status == "NOT_CONVERGED") << r.status;
      EXPECT_TRUE(std::isfinite(r.rmse_seconds));
      EXPECT_GT(r.rmse_seconds, 0.0);
    }
  }

  std::ostringstream csv;
  write_comparison_csv(csv, rows);
  std::istringstream lines(csv.str());
  std::string line;
  std::getline(lines, line);
  EXPECT_EQ(line, "line_count,model,rmse_seconds,wall_seconds,status");
  std::size_t n = 0;
  while (std::getline(lines, line)) {
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 4);
    ++n;
  }
  EXPECT_EQ(n, rows.size());

  auto j = nlohmann::json::parse(comparison_json(rows));
  ASSERT_TRUE(j.is_array());
  ASSERT_EQ(j.size(), rows.size());
  for (const auto& e : j) {
    for (const char* k : {"line_count", "model", "rmse_seconds", "wall_seconds", "status"}) {
      EXPECT_TRUE(e.contains(k)) << k;
    }
  }

  cfg.line_counts = {6};
  EXPECT_THROW(scalability_experiment(records, cfg), DomainError);
}

TEST(Scalability, TimeoutRowHasEmptyRmseCell) {
  std::vector<ComparisonRow> rows{{10, "svr", std::nan(""), 1.5, "TIMEOUT", 100},
                                  {10, "fcnn", 20.25, 2.0, "ok", 100}};
  std::ostringstream csv;
  write_comparison_csv(csv, rows);
  EXPECT_EQ(csv.str(),
            "line_count,model,rmse_seconds,wall_seconds,status\n"
            "10,svr,,1.5,TIMEOUT\n"
            "10,fcnn,20.25,2,ok\n");
  auto j = nlohmann::json::parse(comparison_json(rows));
  EXPECT_TRUE(j[0]["rmse_seconds"].is_null());
}
