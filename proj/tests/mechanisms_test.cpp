//
// Copyright 2026 The ldpcrowd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "ldpcrowd/mechanisms.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ldpcrowd/core.hpp"
#include "ldpcrowd/random.hpp"

namespace ldpcrowd {
namespace {

const AnswerDomain kDomain{0.0, 9.0};

void ExpectMatricesEqual(const AnswerMatrix& a, const AnswerMatrix& b) {
  ASSERT_EQ(a.workers(), b.workers());
  ASSERT_EQ(a.tasks(), b.tasks());
  for (int32_t i = 0; i < a.workers(); ++i) {
    const auto ra = a.row(i);
    const auto rb = b.row(i);
    ASSERT_EQ(ra.size(), rb.size()) << "worker " << i;
    for (size_t k = 0; k < ra.size(); ++k) {
      EXPECT_EQ(ra[k].task, rb[k].task) << "worker " << i;
      EXPECT_EQ(ra[k].value, rb[k].value) << "worker " << i;
    }
  }
}

// --- LP ----------------------------------------------------------------------

TEST(LpTest, ZeroNoiseConstantReplacement) {
  // Row [5, NULL] with g() = Constant(0): NULL becomes 0, present value kept.
  RandomSource rng(1);
  const std::vector<AnswerEntry> row = {{0, 5.0}};
  const auto out = lp_perturb_row(row, 2, kDomain, 1.0, ReplacementStrategy::constant_value(0.0),
                                  rng, NoiseMode::kZero);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0], 5.0);
  EXPECT_EQ(out[1], 0.0);
}

TEST(LpTest, ZeroNoiseUniformReplacementDrawsFromDomain) {
  RandomSource rng(2);
  const std::vector<AnswerEntry> row = {{1, 3.0}};
  for (int rep = 0; rep < 200; ++rep) {
    const auto out =
        lp_perturb_row(row, 4, kDomain, 1.0, ReplacementStrategy::uniform(), rng, NoiseMode::kZero);
    ASSERT_EQ(out.size(), 4u);
    EXPECT_EQ(out[1], 3.0);
    for (int32_t j : {0, 2, 3}) {
      EXPECT_TRUE(kDomain.contains(out[static_cast<size_t>(j)]));
      EXPECT_EQ(std::floor(out[static_cast<size_t>(j)]), out[static_cast<size_t>(j)]);
    }
  }
}

TEST(LpTest, OutputIsDense) {
  RandomSource rng(3);
  const std::vector<AnswerEntry> row = {{2, 4.0}};
  const auto out = lp_perturb_row(row, 50, kDomain, 1.0, ReplacementStrategy::uniform(), rng);
  ASSERT_EQ(out.size(), 50u);
  for (double v : out) EXPECT_TRUE(std::isfinite(v));
}

TEST(LpTest, OutputIsUnclamped) {
  // Laplace(|Gamma|/eps) noise with eps = 0.5 strays far outside [0, 9].
  RandomSource rng(4);
  const std::vector<AnswerEntry> row = {{0, 5.0}};
  bool below = false;
  bool above = false;
  for (int rep = 0; rep < 200; ++rep) {
    const auto out = lp_perturb_row(row, 1, kDomain, 0.5, ReplacementStrategy::uniform(), rng);
    below |= out[0] < kDomain.min;
    above |= out[0] > kDomain.max;
  }
  EXPECT_TRUE(below);
  EXPECT_TRUE(above);
}

TEST(LpTest, NoiseMeanIsZero) {
  // Empty row + Constant(0) replacement releases pure Laplace(10) noise.
  RandomSource rng(5);
  const int32_t n = 100000;
  const auto out = lp_perturb_row({}, n, kDomain, 1.0, ReplacementStrategy::constant_value(0.0), rng);
  double sum = 0.0;
  for (double v : out) sum += v;
  const double se = 10.0 * std::sqrt(2.0 / n);  // sd of Laplace(b) is b sqrt(2)
  EXPECT_NEAR(sum / n, 0.0, 5.0 * se);
}

TEST(LpTest, RejectsBadArguments) {
  RandomSource rng(6);
  EXPECT_THROW(lp_perturb_row({}, 1, kDomain, 0.0, ReplacementStrategy::uniform(), rng),
               std::invalid_argument);
  EXPECT_THROW(
      lp_perturb_row({}, 1, kDomain, 1.0, ReplacementStrategy::constant_value(11.0), rng),
      std::invalid_argument);
}

// --- RR ----------------------------------------------------------------------

TEST(RrTest, KeepProbability) {
  // e^eps / (|Gamma| + e^eps); 0.21373 at eps = 1 over ten options.
  const RrTransition t(kDomain, 1.0);
  EXPECT_NEAR(t.keep_probability(), 0.21373, 1e-5);
  EXPECT_DOUBLE_EQ(t.keep_probability(), std::exp(1.0) / (10.0 + std::exp(1.0)));
  EXPECT_EQ(t.option_count(), 11);
}

TEST(RrTest, TransitionIsRowStochastic) {
  for (double eps : {0.1, 1.0, 5.0}) {
    const RrTransition t(kDomain, eps);
    for (int32_t from = 0; from < t.option_count(); ++from) {
      double total = 0.0;
      for (int32_t to = 0; to < t.option_count(); ++to) total += t.probability(from, to);
      EXPECT_NEAR(total, 1.0, 1e-12) << "eps " << eps << " from " << from;
    }
    // Keep beats any single switch by exactly e^eps.
    EXPECT_NEAR(t.keep_probability() / t.switch_probability(), std::exp(eps), 1e-9);
  }
}

TEST(RrTest, HighEpsilonKeepsInput) {
  RandomSource rng(7);
  for (int rep = 0; rep < 2000; ++rep) {
    EXPECT_EQ(rr_perturb_value(4.0, kDomain, 30.0, rng), std::optional<double>(4.0));
    EXPECT_EQ(rr_perturb_value(std::nullopt, kDomain, 30.0, rng), std::nullopt);
  }
}

TEST(RrTest, LowEpsilonIsNearUniform) {
  RandomSource rng(8);
  const int64_t trials = 110000;
  std::map<int64_t, int64_t> counts;  // -1 keys NULL
  for (int64_t i = 0; i < trials; ++i) {
    const auto out = rr_perturb_value(3.0, kDomain, 1e-6, rng);
    ++counts[out ? static_cast<int64_t>(*out) : -1];
  }
  ASSERT_EQ(counts.size(), 11u);
  for (const auto& [key, count] : counts) {
    EXPECT_NEAR(static_cast<double>(count) / trials, 1.0 / 11.0, 0.005) << "option " << key;
  }
}

TEST(RrTest, BothNullTransitionsOccur) {
  RandomSource rng(9);
  int64_t null_to_value = 0;
  int64_t value_to_null = 0;
  for (int rep = 0; rep < 2000; ++rep) {
    if (rr_perturb_value(std::nullopt, kDomain, 0.5, rng)) ++null_to_value;
    if (!rr_perturb_value(2.0, kDomain, 0.5, rng)) ++value_to_null;
  }
  EXPECT_GT(null_to_value, 0);
  EXPECT_GT(value_to_null, 0);
}

TEST(RrTest, OutputsStayInAugmentedDomain) {
  RandomSource rng(10);
  const std::vector<AnswerEntry> row = {{0, 0.0}, {3, 9.0}, {7, 5.0}};
  const auto out = rr_perturb_row(row, 10, kDomain, 1.0, rng);
  EXPECT_LE(out.size(), 10u);
  for (const auto& e : out) {
    EXPECT_TRUE(kDomain.contains(e.value));
    EXPECT_EQ(std::floor(e.value), e.value);
  }
}

TEST(RrTest, RejectsInvalidInputs) {
  RandomSource rng(11);
  EXPECT_THROW(rr_perturb_value(4.5, kDomain, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(rr_perturb_value(12.0, kDomain, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(rr_perturb_value(4.0, AnswerDomain{0.0, 9.5}, 1.0, rng), std::invalid_argument);
  EXPECT_THROW(rr_perturb_value(4.0, kDomain, 0.0, rng), std::invalid_argument);
}

// --- RR+LP -------------------------------------------------------------------

TEST(RrlpTest, ClassStageStayFrequency) {
  // stay = e^{eps1} / (1 + e^{eps1}) =~ 0.52498 at eps1 = 0.1.
  RandomSource rng(12);
  const double eps1 = 0.1;
  const int64_t trials = 200000;
  int64_t stayed = 0;
  for (int64_t i = 0; i < trials; ++i) {
    if (rrlp_class_stage(true, eps1, rng)) ++stayed;
  }
  const double expected = std::exp(eps1) / (1.0 + std::exp(eps1));
  EXPECT_NEAR(static_cast<double>(stayed) / trials, expected, 0.006);
}

TEST(RrlpTest, ClassStageSymmetric) {
  // The 2x2 design treats value and NULL the same way.
  RandomSource rng(13);
  const int64_t trials = 200000;
  int64_t null_became_value = 0;
  for (int64_t i = 0; i < trials; ++i) {
    if (rrlp_class_stage(false, 1.0, rng)) ++null_became_value;
  }
  const double flip = 1.0 / (1.0 + std::exp(1.0));
  EXPECT_NEAR(static_cast<double>(null_became_value) / trials, flip, 0.006);
}

TEST(RrlpTest, ValueStageZeroNoisePassThrough) {
  // Non-NULL input 4 with the class stage forced to "value": exactly 4.
  RandomSource rng(14);
  EXPECT_EQ(rrlp_value_stage(4.0, kDomain, 0.9, rng, NoiseMode::kZero), 4.0);
}

TEST(RrlpTest, ValueStageZeroNoiseNullGetsUniformDraw) {
  RandomSource rng(15);
  for (int rep = 0; rep < 200; ++rep) {
    const double v = rrlp_value_stage(std::nullopt, kDomain, 0.9, rng, NoiseMode::kZero);
    EXPECT_TRUE(kDomain.contains(v));
    EXPECT_EQ(std::floor(v), v);
  }
}

TEST(RrlpTest, RowCompositionZeroNoise) {
  // With zero value noise, surviving present cells keep their exact value.
  RandomSource rng(16);
  const std::vector<AnswerEntry> row = {{0, 2.0}, {2, 8.0}};
  int kept_exact = 0;
  for (int rep = 0; rep < 200; ++rep) {
    const auto out = rrlp_perturb_row(row, 4, kDomain, 0.1, 0.9, rng, NoiseMode::kZero);
    for (const auto& e : out) {
      EXPECT_TRUE(kDomain.contains(e.value));
      if (e.task == 0 && e.value == 2.0) ++kept_exact;
    }
  }
  EXPECT_GT(kept_exact, 0);
}

TEST(RrlpTest, RejectsBadBudgets) {
  RandomSource rng(17);
  EXPECT_THROW(rrlp_class_stage(true, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(rrlp_value_stage(4.0, kDomain, 0.0, rng), std::invalid_argument);
}

// --- MF ----------------------------------------------------------------------

TEST(MfTest, TaskProfileColumnsHaveUnitNorm) {
  RandomSource rng(18);
  const auto profile = mf_generate_task_profile(5, 40, rng);
  EXPECT_EQ(profile.d(), 5);
  EXPECT_EQ(profile.n(), 40);
  for (int32_t j = 0; j < profile.n(); ++j) {
    double sum = 0.0;
    for (double v : profile.column(j)) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
      sum += v;
    }
    EXPECT_NEAR(sum, 1.0, 1e-12) << "column " << j;
  }
}

TEST(MfTest, ConstantProfilePredictsConstant) {
  // Column 1-norms are 1, so u = c * ones predicts c for every task.
  RandomSource rng(19);
  const auto profile = mf_generate_task_profile(4, 20, rng);
  const std::vector<double> u(4, 3.25);
  for (double pred : mf_predict(u, profile)) EXPECT_NEAR(pred, 3.25, 1e-12);
}

TEST(MfTest, SingleTaskSingleDim) {
  // d = 1, n = 1: the only column normalizes to exactly [1], so the fit must
  // reproduce the answer itself (up to the 1e-6 ridge).
  const TaskProfileMatrix profile(1, 1, {1.0});
  const std::vector<AnswerEntry> row = {{0, 7.0}};
  const std::vector<double> eta = {0.0};
  MfConfig config;
  const auto closed = mf_closed_form_profile(row, profile, eta, config.lambda);
  EXPECT_NEAR(closed.u[0], 7.0, 1e-4);
  const auto fit = mf_minimize(row, profile, eta, config, {0.5});
  EXPECT_TRUE(fit.converged);
  EXPECT_NEAR(fit.u[0], closed.u[0], 1e-6);
}

TEST(MfTest, GradientMatchesCentralDifferences) {
  RandomSource rng(20);
  const auto profile = mf_generate_task_profile(3, 8, rng);
  std::vector<AnswerEntry> row;
  for (int32_t j = 0; j < 8; j += 2) row.push_back({j, static_cast<double>(j % 5)});
  const std::vector<double> eta = {0.3, -1.2, 0.7};
  const std::vector<double> u = {1.5, -0.5, 2.0};
  const double lambda = 1e-6;
  const auto g = mf_gradient(row, profile, eta, lambda, u);
  const double h = 1e-6;
  for (size_t k = 0; k < u.size(); ++k) {
    auto up = u;
    auto down = u;
    up[k] += h;
    down[k] -= h;
    const double fd = (mf_objective(row, profile, eta, lambda, up) -
                       mf_objective(row, profile, eta, lambda, down)) /
                      (2.0 * h);
    EXPECT_NEAR(g[k], fd, 1e-5) << "component " << k;
  }
}

TEST(MfTest, ObjectiveNeverIncreasesAlongDescent) {
  RandomSource rng(21);
  const auto profile = mf_generate_task_profile(4, 15, rng);
  std::vector<AnswerEntry> row;
  for (int32_t j = 0; j < 15; j += 3) row.push_back({j, rng.uniform(0.0, 9.0)});
  std::vector<double> eta(4);
  for (auto& v : eta) v = rng.laplace(2.0);
  std::vector<double> u0(4);
  for (auto& v : u0) v = rng.uniform();
  MfConfig config;
  const double start = mf_objective(row, profile, eta, config.lambda, u0);
  const auto fit = mf_minimize(row, profile, eta, config, u0);
  EXPECT_LE(mf_objective(row, profile, eta, config.lambda, fit.u), start);
}

TEST(MfTest, GradientDescentMatchesClosedForm) {
  RandomSource rng(22);
  MfConfig config;
  for (int instance = 0; instance < 10; ++instance) {
    const int32_t d = 2 + static_cast<int32_t>(rng.uniform_int(0, 2));
    const int32_t n = 6 + static_cast<int32_t>(rng.uniform_int(0, 6));
    const auto profile = mf_generate_task_profile(d, n, rng);
    std::vector<AnswerEntry> row;
    for (int32_t j = 0; j < n; ++j) {
      if (static_cast<int32_t>(row.size()) < d || rng.uniform() < 0.6) {
        row.push_back({j, static_cast<double>(rng.uniform_int(0, 9))});
      }
    }
    std::vector<double> eta(static_cast<size_t>(d));
    for (auto& v : eta) v = rng.laplace(10.0);
    std::vector<double> u0(static_cast<size_t>(d));
    for (auto& v : u0) v = rng.uniform();

    const auto fit = mf_minimize(row, profile, eta, config, u0);
    const auto closed = mf_closed_form_profile(row, profile, eta, config.lambda);
    ASSERT_TRUE(fit.converged) << "instance " << instance;
    EXPECT_FALSE(closed.singular);
    for (int32_t k = 0; k < d; ++k) {
      EXPECT_NEAR(fit.u[static_cast<size_t>(k)], closed.u[static_cast<size_t>(k)], 1e-4)
          << "instance " << instance << " component " << k;
    }
  }
}

TEST(MfTest, SingularSystemFlaggedAndStillFits) {
  // One observation cannot pin down three dimensions: lambda = 0 leaves a
  // rank-1 system. The min-norm solution still reproduces the observed task.
  RandomSource rng(23);
  const auto profile = mf_generate_task_profile(3, 5, rng);
  const std::vector<AnswerEntry> row = {{2, 6.0}};
  const std::vector<double> eta = {0.0, 0.0, 0.0};
  const auto closed = mf_closed_form_profile(row, profile, eta, 0.0);
  EXPECT_TRUE(closed.singular);
  EXPECT_NEAR(mf_predict(closed.u, profile)[2], 6.0, 1e-8);

  MfConfig config;
  config.lambda = 0.0;
  const auto fit = mf_minimize(row, profile, eta, config, {0.1, 0.2, 0.3});
  EXPECT_NEAR(mf_predict(fit.u, profile)[2], 6.0, 1e-6);
}

TEST(MfTest, FitIsDeterministicGivenSeed) {
  RandomSource curator(24);
  const auto profile = mf_generate_task_profile(3, 12, curator);
  const std::vector<AnswerEntry> row = {{0, 4.0}, {5, 7.0}, {9, 1.0}};
  MfConfig config;
  RandomSource a(99);
  RandomSource b(99);
  const auto fit_a = mf_fit_worker_profile(row, profile, kDomain, 1.0, config, a);
  const auto fit_b = mf_fit_worker_profile(row, profile, kDomain, 1.0, config, b);
  ASSERT_EQ(fit_a.u.size(), fit_b.u.size());
  for (size_t k = 0; k < fit_a.u.size(); ++k) EXPECT_EQ(fit_a.u[k], fit_b.u[k]);
}

TEST(MfTest, EmptyRowRejected) {
  RandomSource rng(25);
  const auto profile = mf_generate_task_profile(2, 5, rng);
  MfConfig config;
  EXPECT_THROW(mf_fit_worker_profile({}, profile, kDomain, 1.0, config, rng),
               std::invalid_argument);
}

// --- matrix level --------------------------------------------------------------

AnswerMatrix SmallMatrix() {
  return AnswerMatrix(6, {{{0, 1.0}, {2, 5.0}, {4, 9.0}},
                          {{1, 3.0}, {3, 3.0}},
                          {{0, 2.0}, {1, 4.0}, {2, 6.0}, {5, 8.0}}});
}

TEST(PerturbMatrixTest, DeterministicForSeed) {
  const AnswerMatrix input = SmallMatrix();
  for (MechanismKind kind : {MechanismKind::kLp, MechanismKind::kRr, MechanismKind::kRrlp,
                             MechanismKind::kMf}) {
    MechanismConfig config;
    config.kind = kind;
    config.epsilon = 1.0;
    config.seed = 77;
    const auto a = perturb_matrix(input, kDomain, config);
    const auto b = perturb_matrix(input, kDomain, config);
    ExpectMatricesEqual(a.matrix, b.matrix);
  }
}

TEST(PerturbMatrixTest, WorkerStreamsAreIndependent) {
  // Changing worker 0's answers must not move any other worker's output.
  const AnswerMatrix input = SmallMatrix();
  AnswerMatrix changed(6, {{{1, 8.0}},
                           {{1, 3.0}, {3, 3.0}},
                           {{0, 2.0}, {1, 4.0}, {2, 6.0}, {5, 8.0}}});
  MechanismConfig config;
  config.kind = MechanismKind::kLp;
  config.epsilon = 1.0;
  config.seed = 5;
  const auto a = perturb_matrix(input, kDomain, config);
  const auto b = perturb_matrix(changed, kDomain, config);
  for (int32_t i = 1; i < input.workers(); ++i) {
    const auto ra = a.matrix.row(i);
    const auto rb = b.matrix.row(i);
    ASSERT_EQ(ra.size(), rb.size());
    for (size_t k = 0; k < ra.size(); ++k) EXPECT_EQ(ra[k].value, rb[k].value);
  }
}

TEST(PerturbMatrixTest, NonePassesThrough) {
  const AnswerMatrix input = SmallMatrix();
  MechanismConfig config;
  const auto out = perturb_matrix(input, kDomain, config);
  ExpectMatricesEqual(input, out.matrix);
}

TEST(PerturbMatrixTest, LpDensifies) {
  const AnswerMatrix input = SmallMatrix();
  MechanismConfig config;
  config.kind = MechanismKind::kLp;
  config.epsilon = 1.0;
  const auto out = perturb_matrix(input, kDomain, config);
  EXPECT_EQ(out.matrix.entry_count(), static_cast<size_t>(input.workers() * input.tasks()));
}

TEST(PerturbMatrixTest, RrStaysIntegralAndSparse) {
  const AnswerMatrix input = SmallMatrix();
  MechanismConfig config;
  config.kind = MechanismKind::kRr;
  config.epsilon = 1.0;
  config.seed = 3;
  const auto out = perturb_matrix(input, kDomain, config);
  for (int32_t i = 0; i < out.matrix.workers(); ++i) {
    for (const auto& e : out.matrix.row(i)) {
      EXPECT_TRUE(kDomain.contains(e.value));
      EXPECT_EQ(std::floor(e.value), e.value);
    }
  }
}

TEST(PerturbMatrixTest, MfDensifiesButSkipsEmptyRows) {
  AnswerMatrix input(6, {{{0, 1.0}, {3, 5.0}}, {}, {{2, 7.0}}});
  MechanismConfig config;
  config.kind = MechanismKind::kMf;
  config.epsilon = 1.0;
  const auto out = perturb_matrix(input, kDomain, config);
  EXPECT_EQ(out.matrix.row(0).size(), 6u);
  EXPECT_EQ(out.matrix.row(1).size(), 0u);
  EXPECT_EQ(out.matrix.row(2).size(), 6u);
  EXPECT_TRUE(out.nonconverged_workers.empty());
}

TEST(PerturbMatrixTest, MfFlagsNonconvergedWorker) {
  // One answer against four factors leaves the normal system near-singular
  // (floor lambda = 1e-6), so descent cannot reach tol within max_iter. The
  // worker is reported but its last iterate is still released densely.
  AnswerMatrix input(5, {{{0, 4.0}}});
  MechanismConfig config;
  config.kind = MechanismKind::kMf;
  config.epsilon = 1.0;
  config.seed = 21;
  config.mf.d = 4;
  const auto out = perturb_matrix(input, kDomain, config);
  ASSERT_EQ(out.nonconverged_workers.size(), 1u);
  EXPECT_EQ(out.nonconverged_workers[0], 0);
  EXPECT_EQ(out.matrix.row(0).size(), 5u);
}

TEST(PerturbMatrixTest, ClampKeepsOutputsInDomain) {
  const AnswerMatrix input = SmallMatrix();
  MechanismConfig config;
  config.kind = MechanismKind::kLp;
  config.epsilon = 0.2;  // wild noise
  config.clamp = true;
  config.seed = 11;
  const auto out = perturb_matrix(input, kDomain, config);
  for (int32_t i = 0; i < out.matrix.workers(); ++i) {
    for (const auto& e : out.matrix.row(i)) EXPECT_TRUE(kDomain.contains(e.value));
  }
}

TEST(PerturbMatrixTest, IdsCarryThrough) {
  AnswerMatrix input(2, {{{0, 1.0}, {1, 2.0}}}, {"alice"}, {"t-a", "t-b"});
  MechanismConfig config;
  config.kind = MechanismKind::kLp;
  config.epsilon = 1.0;
  const auto out = perturb_matrix(input, kDomain, config);
  ASSERT_EQ(out.matrix.worker_ids().size(), 1u);
  EXPECT_EQ(out.matrix.worker_ids()[0], "alice");
  ASSERT_EQ(out.matrix.task_ids().size(), 2u);
  EXPECT_EQ(out.matrix.task_ids()[1], "t-b");
}

}  // namespace
}  // namespace ldpcrowd
