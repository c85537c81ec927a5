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
#include <string>

#include <gtest/gtest.h>

#include "dagcausal/dataset.h"
#include "dagcausal/errors.h"
#include "dagcausal/simulate.h"

namespace dagcausal {
namespace {

Schema toy_schema() {
  Schema s;
  s.columns = {{"age", ColumnKind::kContinuous, "age"},
               {"treat", ColumnKind::kBinary, "A"},
               {"y", ColumnKind::kContinuous, "Y"}};
  s.treatment = "treat";
  s.outcome = "y";
  return s;
}

double corr(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

TEST(Csv, ToyTable) {
  const auto d = parse_csv("age,treat,y\n30,1,2.5\n41,0,\"3\"\n25,1,-1e2\n", toy_schema());
  EXPECT_EQ(d.rows(), 3u);
  EXPECT_EQ(d.column("y").values, (std::vector<double>{2.5, 3.0, -100.0}));
  EXPECT_EQ(*d.treatment_column(), "treat");
  EXPECT_EQ(d.column_for_node("A")->name, "treat");
  EXPECT_FALSE(d.ground_truth().has_value());
}

TEST(Csv, ExtraColumnsIgnoredAndReorderedHeader) {
  const auto d = parse_csv("y,junk,treat,age\n1,x,0,3\n", toy_schema());
  EXPECT_EQ(d.columns().size(), 3u);
  EXPECT_EQ(d.column("age").values[0], 3.0);
}

TEST(Csv, ErrorsNameTheProblem) {
  try {
    parse_csv("age,treat,y\n30,1,2\n31,2,3\n", toy_schema());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 2"), std::string::npos) << e.what();
  }
  try {
    parse_csv("age,treat,y\n30,1,abc\n", toy_schema());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos) << e.what();
  }
  try {
    parse_csv("age,y\n30,1\n", toy_schema());
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("treat"), std::string::npos) << e.what();
  }
  EXPECT_THROW(parse_csv("", toy_schema()), DataError);
  EXPECT_THROW(parse_csv("age,treat,y\n", toy_schema()), DataError);
  EXPECT_THROW(parse_csv("age,treat,y\n1,0\n", toy_schema()), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", toy_schema()), DataError);
}

TEST(Csv, LalondeSchemaRoles) {
  const Schema s = lalonde_schema();
  std::vector<std::string> names;
  for (const auto& c : s.columns) names.push_back(c.name);
  EXPECT_EQ(names, (std::vector<std::string>{"age", "education", "black", "hispanic", "married",
                                             "re74", "re75", "treat", "re78"}));
  EXPECT_EQ(*s.treatment, "treat");
  EXPECT_EQ(*s.outcome, "re78");
  EXPECT_EQ(kLalondeTrueAte, 1794.34);
  EXPECT_EQ(kLalondeCpsControls, 15992u);
  EXPECT_EQ(kLalondePsidControls, 2490u);
  EXPECT_EQ(kLalondeTreated, 185u);
  EXPECT_EQ(Schema::from_json(s.to_json()).to_json(), s.to_json());
}

TEST(Csv, RoundTripThroughText) {
  LinearScmSpec spec;
  const auto d = simulate_linear_scm(20, spec, 1);
  const auto back = parse_csv(d.to_csv(), Schema::from_json(d.schema_json()));
  for (const auto& c : d.columns()) EXPECT_EQ(back.column(c.name).values, c.values);
}

TEST(Bootstrap, DeterministicAndSized) {
  LinearScmSpec spec;
  const auto d = simulate_linear_scm(50, spec, 2);
  const auto b1 = bootstrap(d, 9), b2 = bootstrap(d, 9), b3 = bootstrap(d, 10);
  EXPECT_EQ(b1.to_csv(), b2.to_csv());
  EXPECT_NE(b1.to_csv(), b3.to_csv());
  EXPECT_EQ(b1.rows(), d.rows());
  EXPECT_EQ(b1.schema_json(), d.schema_json());
}

TEST(Bootstrap, SingleRow) {
  const auto d = parse_csv("age,treat,y\n30,1,2\n", toy_schema());
  const auto b = bootstrap(d, 3);
  EXPECT_EQ(b.to_csv(), d.to_csv());
}

TEST(Bootstrap, UniformRowFrequency) {
  std::vector<double> count(5, 0.0);
  for (std::uint64_t s = 0; s < 10000; ++s)
    for (std::size_t i : bootstrap_indices(5, s)) count[i] += 1.0;
  for (double c : count) EXPECT_NEAR(c / 50000.0, 0.2, 0.02);
}

TEST(Split, SeventyThirtyPartition) {
  LinearScmSpec spec;
  const auto d = simulate_linear_scm(1000, spec, 3);
  const auto [tr, va] = split_train_validation(d, 0.7, 4);
  EXPECT_EQ(tr.rows(), 700u);
  EXPECT_EQ(va.rows(), 300u);
  std::vector<double> all = tr.column("Y").values;
  all.insert(all.end(), va.column("Y").values.begin(), va.column("Y").values.end());
  std::vector<double> orig = d.column("Y").values;
  std::sort(all.begin(), all.end());
  std::sort(orig.begin(), orig.end());
  EXPECT_EQ(all, orig);
  EXPECT_EQ(split_train_validation(d, 0.7, 4).first.to_csv(), tr.to_csv());
}

TEST(LinearScm, NullEffect) {
  LinearScmSpec spec;
  spec.tau = 0.0;
  const auto d = simulate_linear_scm(100, spec, 1);
  EXPECT_EQ(*d.ground_truth()->true_ate, 0.0);
  for (double c : d.ground_truth()->cate) EXPECT_EQ(c, 0.0);
}

TEST(LinearScm, RandomizedDifferenceInMeans) {
  LinearScmSpec spec;
  spec.randomized = true;
  const auto d = simulate_linear_scm(5000, spec, 5);
  const auto& a = d.column("A").values;
  const auto& y = d.column("Y").values;
  double s1 = 0, s0 = 0, q1 = 0, q0 = 0, n1 = 0, n0 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == 1.0) {
      s1 += y[i];
      q1 += y[i] * y[i];
      n1 += 1;
    } else {
      s0 += y[i];
      q0 += y[i] * y[i];
      n0 += 1;
    }
  }
  const double m1 = s1 / n1, m0 = s0 / n0;
  const double se = std::sqrt((q1 / n1 - m1 * m1) / n1 + (q0 / n0 - m0 * m0) / n0);
  EXPECT_NEAR(m1 - m0, 2.0, 0.1);
  EXPECT_NEAR(m1 - m0, *d.ground_truth()->true_ate, 3.0 * se);
}

TEST(LinearScm, HeterogeneousCateMean) {
  LinearScmSpec spec;
  spec.tau = 0.0;
  spec.tau_weights = {1.0, 0.0, 0.0};
  const auto d = simulate_linear_scm(5000, spec, 6);
  const auto& cate = d.ground_truth()->cate;
  EXPECT_NEAR(std::accumulate(cate.begin(), cate.end(), 0.0) / 5000.0, 0.0, 0.05);
  for (std::size_t i = 0; i < 5; ++i) EXPECT_EQ(cate[i], d.column("x1").values[i]);
}

TEST(LinearScm, RejectsNonFiniteCoefficients) {
  LinearScmSpec spec;
  spec.tau = std::nan("");
  EXPECT_THROW(simulate_linear_scm(10, spec, 1), ContractError);
  spec.tau = 1.0;
  spec.outcome_weights[0] = INFINITY;
  EXPECT_THROW(simulate_linear_scm(10, spec, 1), ContractError);
}

TEST(LinearScm, BinaryAndRoles) {
  LinearScmSpec spec;
  spec.binary_covariates = 1;
  const auto d = simulate_linear_scm(200, spec, 7);
  EXPECT_EQ(d.column("x3").kind, ColumnKind::kBinary);
  for (double v : d.column("A").values) EXPECT_TRUE(v == 0.0 || v == 1.0);
  EXPECT_EQ(*d.outcome_column(), "Y");
  const auto dag = linear_scm_dag(spec);
  for (const auto& node : dag.nodes()) EXPECT_NE(d.column_for_node(node.name), nullptr);
}

TEST(Demand, EdgesCarryAssociation) {
  const auto s = simulate_demand(50000, 1);
  EXPECT_GT(std::abs(corr(s.a, s.y)), 0.01);
  EXPECT_GT(std::abs(corr(s.u, s.a)), 0.01);
  EXPECT_GT(std::abs(corr(s.u, s.y)), 0.01);
  EXPECT_GT(std::abs(corr(s.u, s.z)), 0.01);
  EXPECT_GT(std::abs(corr(s.u, s.w)), 0.01);
  EXPECT_GT(std::abs(corr(s.z, s.a)), 0.01);
  EXPECT_GT(std::abs(corr(s.w, s.y)), 0.01);
  for (double u : s.u) {
    EXPECT_GE(u, 0.0);
    EXPECT_LE(u, 10.0);
  }
}

TEST(Demand, DeterministicAndHidesU) {
  const auto s1 = simulate_demand(100, 3), s2 = simulate_demand(100, 3);
  EXPECT_EQ(s1.y, s2.y);
  EXPECT_EQ(s1.u, s2.u);
  EXPECT_NE(simulate_demand(100, 4).y, s1.y);
  const auto d = demand_dataset(s1);
  EXPECT_FALSE(d.has_column("U"));
  EXPECT_EQ(d.column_for_node("U"), nullptr);
  EXPECT_EQ(d.columns().size(), 4u);
  EXPECT_EQ(d.column_for_node("A")->values, s1.a);
}

TEST(Demand, DagEdges) {
  const auto dag = demand_dag();
  auto has = [&](const char* a, const char* b) {
    return dag.has_edge(dag.index_of(a), dag.index_of(b));
  };
  EXPECT_TRUE(has("A", "Y"));
  for (const char* c : {"A", "Y", "Z", "W"}) EXPECT_TRUE(has("U", c));
  EXPECT_TRUE(has("Z", "A"));
  EXPECT_TRUE(has("W", "Y"));
  EXPECT_FALSE(has("Z", "Y"));
  EXPECT_FALSE(has("W", "A"));
}

TEST(Demand, ProtocolConstants) {
  const auto grid = demand_price_grid();
  ASSERT_EQ(grid.size(), 10u);
  EXPECT_EQ(grid.front(), 10.0);
  EXPECT_EQ(grid.back(), 30.0);
  for (std::size_t i = 1; i < grid.size(); ++i) EXPECT_NEAR(grid[i] - grid[i - 1], 20.0 / 9.0, 1e-12);
  EXPECT_EQ(kDemandHeldoutDraws, 1000u);
  EXPECT_EQ(kDemandSampleSizes, (std::array<std::size_t, 4>{1000, 5000, 10000, 50000}));
}

TEST(Demand, TruePotentialOutcomeLinearInPrice) {
  const double epsi = demand_expected_psi();
  for (double a : demand_price_grid()) {
    EXPECT_TRUE(std::isfinite(demand_true_potential_outcome(a)));
    EXPECT_NEAR(demand_true_potential_outcome(a) - demand_true_potential_outcome(10.0),
                (a - 10.0) * (epsi - 2.0), 1e-9);
  }
}

TEST(Demand, MonteCarloMomentConverges) {
  const auto m6 = demand_psi_moment(1000000, 1);
  const auto m7 = demand_psi_moment(10000000, 2);
  EXPECT_EQ(m6.draws, 1000000u);
  const double combined = std::hypot(m6.standard_error, m7.standard_error);
  EXPECT_LT(std::abs(m6.mean - m7.mean), 3.0 * combined);
  EXPECT_NEAR(demand_expected_psi(), m7.mean, 3.0 * combined);
}

TEST(Demand, TrueCurveMatchesLargeSimulation) {
  // Intervening on A: average the structural outcome over fresh U, W draws.
  const auto s = simulate_demand(200000, 8);
  const double a = 20.0;
  double total = 0;
  for (std::size_t i = 0; i < s.size(); ++i)
    total += 100 + (10 + a) * demand_psi(s.u[i]) - 2 * a + 0.1 * (s.w[i] - 45);
  EXPECT_NEAR(total / s.size(), demand_true_potential_outcome(a), 0.1);
}

}  // namespace
}  // namespace dagcausal
