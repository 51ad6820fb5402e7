#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "calibdiag/dgp.hpp"
#include "calibdiag/errors.hpp"
#include "calibdiag/estimators.hpp"
#include "calibdiag/experiments.hpp"
#include "calibdiag/rng.hpp"

using namespace calibdiag;

TEST(DriftEta, Shapes) {
  EXPECT_DOUBLE_EQ(drift_eta(DriftShape::worst_case, 0.1, 0.7), 0.1);
  EXPECT_DOUBLE_EQ(drift_eta(DriftShape::worst_case, 0.1, 0.3), -0.1);
  EXPECT_DOUBLE_EQ(drift_eta(DriftShape::worst_case, 0.1, 0.5), 0.0);
  EXPECT_NEAR(drift_eta(DriftShape::linear, 0.2, 0.75), 0.1, 1e-15);
  EXPECT_NEAR(drift_eta(DriftShape::symmetric, 0.2, 0.5), 0.2, 1e-15);
  EXPECT_DOUBLE_EQ(drift_eta(DriftShape::none, 0.2, 0.9), 0.0);
  for (double p = 0.0; p <= 1.0; p += 0.05) {
    for (auto s : {DriftShape::worst_case, DriftShape::linear, DriftShape::symmetric}) {
      EXPECT_LE(std::abs(drift_eta(s, 0.15, p)), 0.15 + 1e-15);
    }
  }
}

TEST(DriftShape, StringRoundTrip) {
  for (auto s : {DriftShape::none, DriftShape::worst_case, DriftShape::linear, DriftShape::symmetric}) {
    EXPECT_EQ(drift_shape_from_string(to_string(s)), s);
  }
}

TEST(Dgp, ParamsValidate) {
  DgpParams p;
  EXPECT_NEAR(p.kappa0(), (1.0 - 0.09) / 0.09, 1e-12);
  p.sigma_u = 0.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
  p.sigma_u = 1.0;
  EXPECT_THROW(p.validate(), InvalidArgument);
}

TEST(Dgp, MomentsAtLargeN) {
  DgpParams params;
  params.n = 100000;
  const auto s = sample_dgp(params, DriftSpec{}, 2024);
  const double n = 100000.0;
  EXPECT_NEAR((s.p - s.r).mean(), 0.0, 0.003);
  const double target = params.sigma_u * params.sigma_u * (s.r.array() * (1.0 - s.r.array())).mean();
  EXPECT_NEAR(residual_variance(s.p, s.r) / target, 1.0, 0.03);
  EXPECT_NEAR((s.g - s.p).mean(), 0.0, 0.005);
  // Regressing Y on [1, G, X] recovers tau and beta_m.
  Matrix d(s.x.rows(), 5);
  d << Vector::Ones(s.x.rows()), s.g, s.x;
  const Vector b = d.colPivHouseholderQr().solve(s.y);
  EXPECT_NEAR(b[1], params.tau, 0.03);
  EXPECT_NEAR(b[2], params.beta_m[0], 0.02);
  EXPECT_NEAR(b[3], params.beta_m[1], 0.02);
  EXPECT_NEAR(b[4], params.beta_m[2], 0.02);
  EXPECT_NEAR(((s.y - d * b).squaredNorm() / n), 1.0, 0.03);
}

TEST(Dgp, ZeroDriftLeavesStreamUnchanged) {
  DgpParams params;
  params.n = 500;
  const auto base = sample_dgp(params, DriftSpec{}, 9);
  for (auto shape : {DriftShape::worst_case, DriftShape::linear, DriftShape::symmetric}) {
    const auto s = sample_dgp(params, DriftSpec{shape, 0.0}, 9);
    EXPECT_EQ(s.x, base.x);
    EXPECT_EQ(s.p, base.p);
    EXPECT_EQ(s.g, base.g);
    EXPECT_EQ(s.y, base.y);
  }
  const auto drifted = sample_dgp(params, DriftSpec{DriftShape::worst_case, 0.2}, 9);
  EXPECT_EQ(drifted.p, base.p);
  EXPECT_NE(drifted.g, base.g);
}

TEST(Dgp, SeedDeterminism) {
  DgpParams params;
  params.n = 200;
  EXPECT_EQ(sample_dgp(params, DriftSpec{}, 1).y, sample_dgp(params, DriftSpec{}, 1).y);
  EXPECT_NE(sample_dgp(params, DriftSpec{}, 1).y, sample_dgp(params, DriftSpec{}, 2).y);
}

TEST(PopulationKappa, RefusesSmallOracleDraw) {
  DgpParams params;
  EXPECT_THROW(population_kappa(params, 0.5, 1000, 1), InvalidArgument);
  EXPECT_NO_THROW(population_kappa(params, 0.5, 1000, 1, true));
}

TEST(StreamSeed, DistinctPerCellAndReplication) {
  EXPECT_EQ(stream_seed(1, 2, 3), stream_seed(1, 2, 3));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 2, 4));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(1, 3, 3));
  EXPECT_NE(stream_seed(1, 2, 3), stream_seed(2, 2, 3));
}

TEST(McAggregate, TwoPointExample) {
  const std::vector<TauEstimate> est{TauEstimate::make(1.0, 0.5, 10, Method::soft),
                                     TauEstimate::make(3.0, 0.5, 10, Method::soft)};
  const auto m = mc_aggregate(est, 2.0);
  EXPECT_DOUBLE_EQ(m.mean_estimate, 2.0);
  EXPECT_DOUBLE_EQ(m.mc_variance, 1.0);
  EXPECT_DOUBLE_EQ(m.bias, 0.0);
  EXPECT_DOUBLE_EQ(m.mse, 1.0);
  EXPECT_DOUBLE_EQ(m.coverage_95, 0.0);
  EXPECT_EQ(m.replications, 2u);
}

TEST(McAggregate, MseIsBiasSquaredPlusVariance) {
  std::mt19937_64 eng(3);
  std::normal_distribution<double> z(0.3, 2.0);
  std::vector<TauEstimate> est;
  for (int i = 0; i < 57; ++i) est.push_back(TauEstimate::make(z(eng), 1.0, 10, Method::soft));
  const auto m = mc_aggregate(est, -0.4);
  EXPECT_NEAR(m.mse, m.bias * m.bias + m.mc_variance, 1e-12);
}

TEST(McAggregate, NominalCoverageForExactNormals) {
  std::mt19937_64 eng(4);
  std::normal_distribution<double> z;
  std::vector<TauEstimate> est;
  for (int i = 0; i < 10000; ++i) est.push_back(TauEstimate::make(z(eng), 1.0, 10, Method::soft));
  EXPECT_NEAR(mc_aggregate(est, 0.0).coverage_95, 0.95, 0.0066);
}

TEST(McAggregate, EmptyThrows) { EXPECT_THROW(mc_aggregate(std::vector<TauEstimate>{}, 0.0), EmptyInput); }

TEST(Bonferroni, Examples) {
  const std::vector<double> obs{1.173, 0.087};
  const std::vector<double> pred{1.0, 0.0};
  const std::vector<double> se{0.1, 0.1};
  const auto b = bonferroni_ztest(obs, pred, se, 0.05);
  EXPECT_NEAR(b.z[0], 1.73, 1e-12);
  EXPECT_NEAR(b.p_value[0], 0.0836, 5e-4);
  EXPECT_NEAR(b.p_value[1], 0.3843, 5e-4);
  EXPECT_DOUBLE_EQ(b.level, 0.025);
  EXPECT_FALSE(b.family_reject);
  const std::vector<double> far{1.5, 0.0};
  EXPECT_TRUE(bonferroni_ztest(far, pred, se, 0.05).family_reject);
  const std::vector<double> bad_se{0.1, 0.0};
  EXPECT_THROW(bonferroni_ztest(obs, pred, bad_se, 0.05), InvalidArgument);
}

TEST(Experiments, DefaultReplications) {
  EXPECT_EQ(default_replications(ExperimentId::p1, false), 200u);
  EXPECT_EQ(default_replications(ExperimentId::p2, true), 1000u);
  EXPECT_EQ(experiment_from_string("p4"), ExperimentId::p4);
  EXPECT_THROW(experiment_from_string("p9"), InvalidArgument);
}

namespace {

ExperimentConfig small_config(std::size_t threads) {
  ExperimentConfig cfg;
  cfg.replications = 6;
  cfg.threads = threads;
  cfg.n_u = 1200;
  cfg.n_oracle = 100000;
  return cfg;
}

}  // namespace

TEST(Experiments, IdenticalAcrossThreadCounts) {
  for (auto id : {ExperimentId::p1, ExperimentId::p3, ExperimentId::p4}) {
    const Table a = run_experiment(id, small_config(1), 11);
    const Table b = run_experiment(id, small_config(3), 11);
    EXPECT_EQ(a.columns, b.columns);
    EXPECT_EQ(a.rows, b.rows) << to_string(id);
  }
}

TEST(Experiments, P3MseDecomposes) {
  const auto r = run_p3(small_config(1), 5);
  ASSERT_FALSE(r.rows.empty());
  for (const auto& row : r.rows) {
    if (row.replications == 0) continue;
    EXPECT_NEAR(row.mse, row.bias2 + row.variance, 1e-12 * std::max(1.0, row.mse));
  }
}

TEST(Experiments, P2HeaderAndShape) {
  const auto rows = run_p2(small_config(1), 3, {0.2, 0.4});
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_LT(rows[0].v_star, rows[1].v_star);
  const Table t = to_table(rows);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"sigma_u", "v_star", "sandwich_var", "mc_var", "coverage_95",
                                                 "mse_ratio"}));
}
