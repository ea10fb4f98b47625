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
//
// Iterative truth inference: alternate quality-weighted truth estimates and
// deviation-based worker qualities until the truths stop moving.

#ifndef LDPCROWD_INFERENCE_HPP_
#define LDPCROWD_INFERENCE_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ldpcrowd/core.hpp"

namespace ldpcrowd {

struct InferenceOptions {
  double tol = 1e-6;        // converged when max_j |truth change| < tol
  int32_t max_iter = 100;
  double sigma_floor = 1e-9;  // deviation floor applied before inversion
  // Truth assigned to tasks that end up with no answers from any included
  // worker (typically the domain midpoint). Unset + such a task -> error.
  std::optional<double> empty_task_truth;
};

struct InferenceResult {
  std::vector<double> truths;     // n estimated truths
  std::vector<double> qualities;  // m weights; included workers sum to 1
  int32_t iterations = 0;
  bool converged = false;
  std::vector<int32_t> excluded_workers;  // workers with zero answers
  std::vector<int32_t> empty_tasks;       // tasks that received the fallback
};

// Weighted mean anchored at the first value. Algebraically equal to
// sum(w*v)/sum(w) but returns v exactly when all values coincide, which keeps
// noiseless data at MAE 0 in floating point.
namespace detail {
struct AnchoredMean {
  double anchor = 0.0;
  double num = 0.0;
  double den = 0.0;
  bool empty = true;

  void add(double w, double v) {
    if (empty) {
      anchor = v;
      empty = false;
    }
    num += w * (v - anchor);
    den += w;
  }
  double value() const { return anchor + num / den; }
};
}  // namespace detail

inline InferenceResult infer_truth(const AnswerMatrix& answers,
                                   const InferenceOptions& options = {}) {
  if (!(options.tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (options.max_iter <= 0) throw std::invalid_argument("max_iter must be positive");
  const int32_t m = answers.workers();
  const int32_t n = answers.tasks();

  InferenceResult result;
  result.truths.assign(static_cast<size_t>(n), 0.0);
  result.qualities.assign(static_cast<size_t>(m), 0.0);

  std::vector<int32_t> included;
  included.reserve(static_cast<size_t>(m));
  for (int32_t i = 0; i < m; ++i) {
    if (answers.row(i).empty()) {
      result.excluded_workers.push_back(i);
    } else {
      included.push_back(i);
    }
  }
  if (included.empty()) {
    throw std::invalid_argument("cannot infer truths: every worker has zero answers");
  }

  // Column view over included workers only.
  struct WorkerValue {
    int32_t worker;
    double value;
  };
  std::vector<std::vector<WorkerValue>> by_task(static_cast<size_t>(n));
  for (int32_t i : included) {
    for (const auto& e : answers.row(i)) {
      by_task[static_cast<size_t>(e.task)].push_back({i, e.value});
    }
  }
  for (int32_t j = 0; j < n; ++j) {
    if (by_task[static_cast<size_t>(j)].empty()) {
      if (!options.empty_task_truth) {
        throw std::invalid_argument("task " + std::to_string(j) +
                                    " has no answers and no fallback truth was provided");
      }
      result.empty_tasks.push_back(j);
    }
  }

  for (int32_t i : included) {
    result.qualities[static_cast<size_t>(i)] = 1.0 / static_cast<double>(included.size());
  }

  std::vector<double> truths(static_cast<size_t>(n), 0.0);
  for (int32_t iter = 1; iter <= options.max_iter; ++iter) {
    // Truth step: quality-weighted mean of the answers each task received.
    double delta = iter == 1 ? std::numeric_limits<double>::infinity() : 0.0;
    for (int32_t j = 0; j < n; ++j) {
      const auto& cell = by_task[static_cast<size_t>(j)];
      double t;
      if (cell.empty()) {
        t = *options.empty_task_truth;
      } else {
        detail::AnchoredMean mean;
        for (const auto& e : cell) {
          mean.add(result.qualities[static_cast<size_t>(e.worker)], e.value);
        }
        t = mean.value();
      }
      if (iter > 1) delta = std::max(delta, std::abs(t - truths[static_cast<size_t>(j)]));
      truths[static_cast<size_t>(j)] = t;
    }

    // Quality step: inverse root-mean-square deviation, floored, normalized.
    double qsum = 0.0;
    for (int32_t i : included) {
      double sq = 0.0;
      const auto row = answers.row(i);
      for (const auto& e : row) {
        const double r = e.value - truths[static_cast<size_t>(e.task)];
        sq += r * r;
      }
      const double dev = std::sqrt(sq / static_cast<double>(row.size()));
      const double q = 1.0 / std::max(dev, options.sigma_floor);
      result.qualities[static_cast<size_t>(i)] = q;
      qsum += q;
    }
    for (int32_t i : included) result.qualities[static_cast<size_t>(i)] /= qsum;

    result.iterations = iter;
    if (delta < options.tol) {
      result.converged = true;
      break;
    }
  }
  result.truths = std::move(truths);
  return result;
}

inline double mean_absolute_error(const std::vector<double>& estimate, const GroundTruth& truth) {
  if (estimate.size() != truth.size() || estimate.empty()) {
    throw std::invalid_argument("MAE requires two equal-length nonempty vectors");
  }
  double s = 0.0;
  for (size_t j = 0; j < estimate.size(); ++j) s += std::abs(estimate[j] - truth[j]);
  return s / static_cast<double>(estimate.size());
}

struct EvaluationReport {
  double mae_original = 0.0;
  double mae_perturbed = 0.0;
  double mae_change = 0.0;  // perturbed - original; negative means improvement
  InferenceResult original;
  InferenceResult perturbed;
};

// MAE change of truth inference caused by a perturbation: run inference on
// both matrices against the same ground truth and report the difference.
inline EvaluationReport evaluate_mae_change(const AnswerMatrix& original,
                                            const AnswerMatrix& perturbed,
                                            const GroundTruth& truth,
                                            const InferenceOptions& options = {}) {
  if (original.tasks() != perturbed.tasks() || original.workers() != perturbed.workers()) {
    throw std::invalid_argument("original and perturbed matrices must have equal shape");
  }
  if (static_cast<size_t>(original.tasks()) != truth.size()) {
    throw std::invalid_argument("ground truth length must equal the task count");
  }
  EvaluationReport report;
  report.original = infer_truth(original, options);
  report.perturbed = infer_truth(perturbed, options);
  report.mae_original = mean_absolute_error(report.original.truths, truth);
  report.mae_perturbed = mean_absolute_error(report.perturbed.truths, truth);
  report.mae_change = report.mae_perturbed - report.mae_original;
  return report;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_INFERENCE_HPP_
