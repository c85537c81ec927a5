/*
 * Copyright 2026 The dagcausal Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "dagcausal/errors.h"
#include "dagcausal/estimators.h"
#include "dagcausal/simulate.h"

namespace dagcausal {
namespace {

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

TEST(GFormula, HandTable) {
  const std::vector<double> mu0 = {1, 2}, mu1 = {3, 5};
  const auto r = gformula_from_nuisances(mu0, mu1);
  EXPECT_EQ(*r.ate, 2.5);
  EXPECT_EQ(*r.cate, (std::vector<double>{2, 3}));
}

TEST(GFormula, ZeroEffectModelGivesZeroAte) {
  LinearScmSpec spec;
  const auto data = simulate_linear_scm(200, spec, 1);
  ModelConfig c;
  c.embedding_dim = 8;
  c.feedforward_dim = 16;
  c.mlp_width = 16;
  c.alpha = 0.0;
  auto m = DagTransformer::for_dataset(c, linear_scm_dag(spec), Method::kGFormula, data);
  m.fit_standardizer(m.design_matrix(data));
  const auto& parents = m.head_parents(0);
  const std::size_t a_pos = m.input_position(m.dag().index_of("A"));
  for (const auto& p : m.parameters()) {
    if (p->name != "head.Y.0.w") continue;
    for (std::size_t slot = 0; slot < parents.size(); ++slot) {
      if (parents[slot] != a_pos) continue;
      for (std::size_t col = 0; col < p->value.cols(); ++col)
        p->value.at(c.embedding_dim + slot, col) = 0.0;
    }
  }
  const auto r = estimate_gformula(m, data);
  EXPECT_EQ(*r.ate, 0.0);
  EXPECT_EQ(r.cate->size(), data.rows());
}

TEST(GFormula, MissingOutcomeHead) {
  LinearScmSpec spec;
  const auto data = simulate_linear_scm(50, spec, 1);
  auto m = DagTransformer::for_dataset(ModelConfig{}, linear_scm_dag(spec), Method::kIpw, data);
  m.fit_standardizer(m.design_matrix(data));
  EXPECT_THROW(estimate_gformula(m, data), ConfigError);
  auto g = DagTransformer::for_dataset(ModelConfig{}, linear_scm_dag(spec), Method::kGFormula, data);
  g.fit_standardizer(g.design_matrix(data));
  EXPECT_THROW(estimate_iptw(g, data), ConfigError);
}

TEST(Iptw, HandExample) {
  const std::vector<double> a = {1, 0}, y = {2, 1}, p = {0.5, 0.5};
  const auto r = iptw_from_nuisances(a, y, p);
  EXPECT_EQ(*r.ate, 1.0);
  EXPECT_FALSE(r.cate.has_value());
}

TEST(Iptw, ClampCounter) {
  const std::vector<double> a = {1, 0, 1}, y = {1, 1, 1}, p = {0.001, 0.5, 0.7};
  const auto r = iptw_from_nuisances(a, y, p);
  EXPECT_EQ(r.nuisances.propensity[0], 0.01);
  EXPECT_EQ(r.diagnostics->clamped, 1u);
  EXPECT_EQ(r.diagnostics->propensity_min, 0.001);
  EXPECT_EQ(r.diagnostics->positivity_flags, 1u);
  for (double v : r.nuisances.propensity) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Iptw, ConstantPropensityIdentity) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 5 + rng.below(100);
    const double pc = rng.uniform(0.05, 0.95);
    std::vector<double> a(n), y(n), p(n, pc);
    double t1 = 0, t0 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.bernoulli(0.5);
      y[i] = rng.normal(1.0, 2.0);
      t1 += a[i] * y[i];
      t0 += (1 - a[i]) * y[i];
    }
    const double nd = static_cast<double>(n);
    const double oracle = (t1 / nd) / pc - (t0 / nd) / (1 - pc);
    EXPECT_NEAR(*iptw_from_nuisances(a, y, p).ate, oracle, 1e-12);
  }
}

TEST(Iptw, RandomizedNullOutcomeNearZero) {
  Rng rng(4);
  const std::size_t n = 20000;
  std::vector<double> a(n), y(n), p(n, 0.5);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.bernoulli(0.5);
    y[i] = rng.normal(3.0, 1.0);
  }
  // Per-unit terms 2ay - 2(1-a)y have variance 4 E[y^2] = 40.
  const double se = std::sqrt(4.0 * 10.0 / static_cast<double>(n));
  EXPECT_LT(std::abs(*iptw_from_nuisances(a, y, p).ate), 3.0 * se);
}

TEST(Aipw, HandExample) {
  const std::vector<double> a = {1}, y = {2}, mu0 = {0}, mu1 = {1}, p = {0.5};
  EXPECT_EQ(*aipw_from_nuisances(a, y, mu0, mu1, p).ate, 3.0);
}

TEST(Aipw, ZeroResidualsReduceToGFormula) {
  Rng rng(5);
  const std::size_t n = 30;
  std::vector<double> a(n), y(n), mu0(n), mu1(n), p(n);
  for (std::size_t i = 0; i < n; ++i) {
    a[i] = rng.bernoulli(0.4);
    mu0[i] = rng.normal();
    mu1[i] = rng.normal();
    y[i] = a[i] == 1.0 ? mu1[i] : mu0[i];
    p[i] = rng.uniform(0.1, 0.9);
  }
  const auto aipw = aipw_from_nuisances(a, y, mu0, mu1, p);
  const auto gf = gformula_from_nuisances(mu0, mu1);
  EXPECT_EQ(*aipw.ate, *gf.ate);
  EXPECT_EQ(*aipw.cate, *gf.cate);
}

TEST(Aipw, MatchesPseudoOutcomeOracle) {
  Rng rng(6);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 1 + rng.below(40);
    std::vector<double> a(n), y(n), mu0(n), mu1(n), p(n);
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = rng.bernoulli(0.5);
      y[i] = rng.normal();
      mu0[i] = rng.normal();
      mu1[i] = rng.normal();
      p[i] = rng.uniform(0.05, 0.95);
      total += (mu1[i] + a[i] * (y[i] - mu1[i]) / p[i]) -
               (mu0[i] + (1 - a[i]) * (y[i] - mu0[i]) / (1 - p[i]));
    }
    const auto r = aipw_from_nuisances(a, y, mu0, mu1, p);
    EXPECT_NEAR(*r.ate, total / static_cast<double>(n), 1e-12);
    EXPECT_NEAR(mean(*r.cate), *r.ate, 1e-10);
  }
}

TEST(Aipw, TruePropensityRescuesWrongOutcomeModel) {
  LinearScmSpec spec;
  spec.randomized = true;
  const std::size_t n = 5000;
  const auto data = simulate_linear_scm(n, spec, 7);
  const auto& a = data.column("A").values;
  const auto& y = data.column("Y").values;
  const std::vector<double> zero(n, 0.0), half(n, 0.5);
  const auto r = aipw_from_nuisances(a, y, zero, zero, half);
  // With mu = 0 this is IPW at pi = 1/2; its sampling SE bounds the error.
  std::vector<double> terms(n);
  for (std::size_t i = 0; i < n; ++i) terms[i] = 2 * a[i] * y[i] - 2 * (1 - a[i]) * y[i];
  const double m = mean(terms);
  double ss = 0;
  for (double t : terms) ss += (t - m) * (t - m);
  const double se = std::sqrt(ss / (n - 1.0) / n);
  EXPECT_LT(std::abs(*r.ate - spec.tau), 4.0 * se);
}

TEST(Proximal, BridgeExamples) {
  const std::vector<double> grid = {0, 1, 5};
  const auto constant = estimate_proximal([](double) { return std::vector<double>{4, 4, 4}; }, grid);
  for (const auto& [a, v] : constant.potential_outcomes) EXPECT_EQ(v, 4.0);
  const std::vector<double> w = {0, 2};
  const auto lin = estimate_proximal(
      [&](double a) { return std::vector<double>{a + w[0], a + w[1]}; }, grid);
  ASSERT_EQ(lin.potential_outcomes.size(), 3u);
  for (const auto& [a, v] : lin.potential_outcomes) EXPECT_EQ(v, a + 1.0);
  EXPECT_FALSE(lin.ate.has_value());
  const std::vector<double> binary = {0, 1};
  EXPECT_EQ(*estimate_proximal([&](double a) { return std::vector<double>{a + w[0], a + w[1]}; },
                               binary).ate, 1.0);
  EXPECT_THROW(estimate_proximal([](double) { return std::vector<double>{1}; },
                                 std::span<const double>{}), ContractError);
  EXPECT_THROW(estimate_proximal([](double) { return std::vector<double>{}; }, grid),
               ContractError);
}

TEST(Proximal, DemandCurveFromModel) {
  const auto heldout = demand_dataset(simulate_demand(kDemandHeldoutDraws, 2));
  ModelConfig c;
  c.embedding_dim = 8;
  c.feedforward_dim = 16;
  c.mlp_width = 16;
  auto m = DagTransformer::for_dataset(c, demand_dag(), Method::kProximal, heldout);
  m.fit_standardizer(m.design_matrix(heldout));
  const auto grid = demand_price_grid();
  const auto r = estimate_proximal(m, heldout, grid);
  ASSERT_EQ(r.potential_outcomes.size(), kDemandGridSize);
  for (std::size_t i = 0; i < grid.size(); ++i) {
    EXPECT_EQ(r.potential_outcomes[i].first, grid[i]);
    EXPECT_TRUE(std::isfinite(r.potential_outcomes[i].second));
  }
}

TEST(CateByGroup, Examples) {
  EstimateReport r = gformula_from_nuisances(std::vector<double>{0, 0, 0, 0},
                                             std::vector<double>{1, 1, 3, 3});
  const std::vector<double> one(4, 7.0);
  EXPECT_EQ(cate_by_group(r, one).at(7.0), *r.ate);
  const std::vector<double> two = {0, 0, 1, 1};
  const auto g = cate_by_group(r, two);
  EXPECT_EQ(g.at(0.0), 1.0);
  EXPECT_EQ(g.at(1.0), 3.0);
  EstimateReport ipw = iptw_from_nuisances(std::vector<double>{1, 0}, std::vector<double>{1, 1},
                                           std::vector<double>{0.5, 0.5});
  EXPECT_THROW(cate_by_group(ipw, std::vector<double>{0, 1}), ContractError);
}

TEST(CateByGroup, HeterogeneousSimulatorTruth) {
  LinearScmSpec spec;
  spec.binary_covariates = 1;
  spec.tau = 0.0;
  spec.tau_weights = {0.0, 0.0, 1.0};
  const auto data = simulate_linear_scm(4000, spec, 8);
  const auto& truth = *data.ground_truth();
  const auto r = gformula_from_nuisances(truth.mu0, truth.mu1);
  const auto g = cate_by_group(r, data.column("x3").values);
  EXPECT_NEAR(g.at(0.0), 0.0, 0.1);
  EXPECT_NEAR(g.at(1.0), 1.0, 0.1);
}

TEST(EstimateReport, CsvAndJson) {
  const auto r = gformula_from_nuisances(std::vector<double>{1, 2}, std::vector<double>{3, 5});
  EXPECT_EQ(r.cate_csv(), "unit,cate\n0,2\n1,3\n");
  const auto j = r.to_json(true);
  EXPECT_EQ(j.at("ate").get<double>(), 2.5);
  EXPECT_EQ(j.at("method").get<std::string>(), "gformula");
}

}  // namespace
}  // namespace dagcausal
