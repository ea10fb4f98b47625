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

#include "ldpcrowd/inference.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "ldpcrowd/core.hpp"
#include "ldpcrowd/random.hpp"
#include "reference_impls.hpp"

namespace ldpcrowd {
namespace {

// Random matrix where worker 0 answers everything, so no task is empty.
AnswerMatrix RandomMatrix(uint64_t seed, int32_t workers = 5, int32_t tasks = 8) {
  RandomSource rng(seed);
  std::vector<std::vector<AnswerEntry>> rows(static_cast<size_t>(workers));
  for (int32_t i = 0; i < workers; ++i) {
    for (int32_t j = 0; j < tasks; ++j) {
      if (i == 0 || rng.uniform() < 0.7) {
        rows[static_cast<size_t>(i)].push_back({j, rng.uniform(0.0, 9.0)});
      }
    }
  }
  return AnswerMatrix(tasks, std::move(rows));
}

TEST(InferTruthTest, SingleWorkerReproducesAnswers) {
  const AnswerMatrix m(2, {{{0, 3.0}, {1, 7.0}}});
  const auto result = infer_truth(m);
  ASSERT_EQ(result.truths.size(), 2u);
  EXPECT_EQ(result.truths[0], 3.0);
  EXPECT_EQ(result.truths[1], 7.0);
  ASSERT_EQ(result.qualities.size(), 1u);
  EXPECT_DOUBLE_EQ(result.qualities[0], 1.0);
  EXPECT_TRUE(result.converged);
}

TEST(InferTruthTest, MatchesNaiveFixedPointIteration) {
  for (uint64_t seed = 1; seed <= 10; ++seed) {
    const AnswerMatrix m = RandomMatrix(seed);
    InferenceOptions opts;
    opts.tol = 1e-13;
    opts.max_iter = 2000;
    const auto engine = infer_truth(m, opts);
    const auto naive = ldpcrowd_test::naive_infer(m);
    for (size_t j = 0; j < naive.truths.size(); ++j) {
      EXPECT_NEAR(engine.truths[j], naive.truths[j], 1e-8) << "seed " << seed << " task " << j;
    }
    for (size_t i = 0; i < naive.qualities.size(); ++i) {
      EXPECT_NEAR(engine.qualities[i], naive.qualities[i], 1e-8)
          << "seed " << seed << " worker " << i;
    }
  }
}

TEST(InferTruthTest, NoiselessAnswersGiveExactlyZeroError) {
  // Non-dyadic truths exercise the floating-point path: the estimate must
  // still return the answers bit for bit.
  const GroundTruth truth = {0.1, 4.7, 1.0 / 3.0, 8.3};
  std::vector<std::vector<AnswerEntry>> rows(3);
  for (int32_t j = 0; j < 4; ++j) {
    rows[0].push_back({j, truth[static_cast<size_t>(j)]});
    if (j != 1) rows[1].push_back({j, truth[static_cast<size_t>(j)]});
    if (j != 2) rows[2].push_back({j, truth[static_cast<size_t>(j)]});
  }
  const auto result = infer_truth(AnswerMatrix(4, std::move(rows)));
  EXPECT_EQ(mean_absolute_error(result.truths, truth), 0.0);
  EXPECT_TRUE(result.converged);
}

TEST(InferTruthTest, ZeroAnswerWorkerExcluded) {
  const AnswerMatrix m(2, {{{0, 3.0}, {1, 5.0}}, {}});
  const auto result = infer_truth(m);
  ASSERT_EQ(result.excluded_workers.size(), 1u);
  EXPECT_EQ(result.excluded_workers[0], 1);
  EXPECT_EQ(result.qualities[1], 0.0);
  EXPECT_DOUBLE_EQ(result.qualities[0], 1.0);
}

TEST(InferTruthTest, AllWorkersEmptyRejected) {
  const AnswerMatrix m(2, {{}, {}});
  EXPECT_THROW(infer_truth(m), std::invalid_argument);
}

TEST(InferTruthTest, EmptyTaskGetsFallbackAndFlag) {
  const AnswerMatrix m(3, {{{0, 2.0}, {2, 6.0}}});
  InferenceOptions opts;
  opts.empty_task_truth = 4.5;
  const auto result = infer_truth(m, opts);
  EXPECT_EQ(result.truths[1], 4.5);
  ASSERT_EQ(result.empty_tasks.size(), 1u);
  EXPECT_EQ(result.empty_tasks[0], 1);
}

TEST(InferTruthTest, EmptyTaskWithoutFallbackRejected) {
  const AnswerMatrix m(3, {{{0, 2.0}, {2, 6.0}}});
  EXPECT_THROW(infer_truth(m), std::invalid_argument);
}

TEST(InferTruthTest, IterationCapRespected) {
  const AnswerMatrix m = RandomMatrix(3);
  InferenceOptions opts;
  opts.max_iter = 1;
  const auto result = infer_truth(m, opts);
  EXPECT_EQ(result.iterations, 1);
  EXPECT_FALSE(result.converged);
}

TEST(InferTruthTest, ConvergesWellInsideDefaultCap) {
  const auto result = infer_truth(RandomMatrix(4));
  EXPECT_TRUE(result.converged);
  EXPECT_LT(result.iterations, 50);
}

TEST(InferTruthTest, QualitiesOfIncludedWorkersSumToOne) {
  const auto result = infer_truth(RandomMatrix(5));
  double sum = 0.0;
  for (double q : result.qualities) sum += q;
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(InferTruthTest, AccurateWorkerDominates) {
  // Worker 0 repeats the truth, workers 1 and 2 are noisy; quality weighting
  // must rank worker 0 first and beat the unweighted average of the answers.
  const GroundTruth truth = {1.0, 5.0, 8.0, 3.0, 6.0};
  RandomSource rng(6);
  std::vector<std::vector<AnswerEntry>> rows(3);
  std::vector<double> plain_mean(5, 0.0);
  for (int32_t j = 0; j < 5; ++j) {
    rows[0].push_back({j, truth[static_cast<size_t>(j)]});
    rows[1].push_back({j, truth[static_cast<size_t>(j)] + rng.gaussian(0.0, 2.0)});
    rows[2].push_back({j, truth[static_cast<size_t>(j)] + rng.gaussian(0.0, 2.0)});
    for (const auto& row : rows) {
      plain_mean[static_cast<size_t>(j)] += row.back().value / 3.0;
    }
  }
  const auto result = infer_truth(AnswerMatrix(5, std::move(rows)));
  EXPECT_GT(result.qualities[0], result.qualities[1]);
  EXPECT_GT(result.qualities[0], result.qualities[2]);
  EXPECT_LT(mean_absolute_error(result.truths, truth), mean_absolute_error(plain_mean, truth));
}

TEST(InferTruthTest, RejectsBadOptions) {
  const AnswerMatrix m(1, {{{0, 1.0}}});
  InferenceOptions opts;
  opts.tol = 0.0;
  EXPECT_THROW(infer_truth(m, opts), std::invalid_argument);
  opts.tol = 1e-6;
  opts.max_iter = 0;
  EXPECT_THROW(infer_truth(m, opts), std::invalid_argument);
}

TEST(AnchoredMeanTest, ExactForIdenticalValues) {
  detail::AnchoredMean mean;
  const double v = 1.0 / 3.0;
  for (int i = 0; i < 1000; ++i) mean.add(0.1 + 0.001 * i, v);
  EXPECT_EQ(mean.value(), v);
}

TEST(AnchoredMeanTest, MatchesPlainWeightedMean) {
  detail::AnchoredMean mean;
  mean.add(1.0, 2.0);
  mean.add(3.0, 6.0);
  EXPECT_NEAR(mean.value(), (1.0 * 2.0 + 3.0 * 6.0) / 4.0, 1e-12);
}

TEST(MeanAbsoluteErrorTest, HandValues) {
  EXPECT_DOUBLE_EQ(mean_absolute_error({1.0, 2.0, 3.0}, {1.0, 4.0, 0.0}), (0.0 + 2.0 + 3.0) / 3.0);
  EXPECT_THROW(mean_absolute_error({1.0}, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(mean_absolute_error({}, {}), std::invalid_argument);
}

TEST(EvaluateMaeChangeTest, IdenticalMatricesGiveZeroChange) {
  const AnswerMatrix m = RandomMatrix(7);
  const GroundTruth truth(8, 4.0);
  const auto report = evaluate_mae_change(m, m, truth);
  EXPECT_EQ(report.mae_change, 0.0);
  EXPECT_EQ(report.mae_original, report.mae_perturbed);
}

TEST(EvaluateMaeChangeTest, ShapeMismatchRejected) {
  const AnswerMatrix a(2, {{{0, 1.0}}});
  const AnswerMatrix b(3, {{{0, 1.0}}});
  EXPECT_THROW(evaluate_mae_change(a, b, {1.0, 2.0}), std::invalid_argument);
  EXPECT_THROW(evaluate_mae_change(a, a, {1.0}), std::invalid_argument);
}

TEST(EvaluateMaeChangeTest, PerturbationShiftsError) {
  // Shifting every answer by +2 moves every truth estimate by +2.
  const GroundTruth truth = {1.0, 5.0, 8.0};
  std::vector<std::vector<AnswerEntry>> orig(2);
  std::vector<std::vector<AnswerEntry>> shifted(2);
  for (int32_t i = 0; i < 2; ++i) {
    for (int32_t j = 0; j < 3; ++j) {
      orig[static_cast<size_t>(i)].push_back({j, truth[static_cast<size_t>(j)]});
      shifted[static_cast<size_t>(i)].push_back({j, truth[static_cast<size_t>(j)] + 2.0});
    }
  }
  const auto report = evaluate_mae_change(AnswerMatrix(3, std::move(orig)),
                                          AnswerMatrix(3, std::move(shifted)), truth);
  EXPECT_EQ(report.mae_original, 0.0);
  EXPECT_NEAR(report.mae_perturbed, 2.0, 1e-12);
  EXPECT_NEAR(report.mae_change, 2.0, 1e-12);
}

}  // namespace
}  // namespace ldpcrowd
