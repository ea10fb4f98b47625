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
// Closed-form upper bounds on the expected MAE of quality-weighted truth
// estimation, per mechanism. These take worker qualities, noise levels and
// non-NULL fractions as *inputs* (known parameters or uniform defaults); they
// never estimate anything from data.

#ifndef LDPCROWD_BOUNDS_HPP_
#define LDPCROWD_BOUNDS_HPP_

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ldpcrowd/core.hpp"

namespace ldpcrowd {

struct BoundInputs {
  std::vector<double> qualities;           // q_i, must sum to 1
  std::vector<double> sigmas;              // per-worker answer noise sigma_i
  std::vector<double> non_null_fractions;  // s_i in [0, 1]
  std::vector<double> truths;              // mu_j, within the domain
  AnswerDomain domain;
  // Workers answering each task. Empty -> every worker answers every task,
  // the ex-ante reading used before any data exists.
  std::vector<std::vector<int32_t>> task_workers;

  size_t worker_count() const { return qualities.size(); }
  size_t task_count() const { return truths.size(); }

  static BoundInputs uniform(size_t workers, size_t tasks, double sigma, double non_null,
                             double mu, const AnswerDomain& domain) {
    BoundInputs in;
    in.qualities.assign(workers, 1.0 / static_cast<double>(workers));
    in.sigmas.assign(workers, sigma);
    in.non_null_fractions.assign(workers, non_null);
    in.truths.assign(tasks, mu);
    in.domain = domain;
    return in;
  }

  void validate() const {
    domain.validate();
    const size_t m = worker_count();
    if (m == 0 || task_count() == 0) {
      throw std::invalid_argument("bound inputs need at least one worker and one task");
    }
    if (sigmas.size() != m || non_null_fractions.size() != m) {
      throw std::invalid_argument("per-worker input vectors must have equal length");
    }
    double qsum = 0.0;
    for (double q : qualities) {
      if (q < 0.0) throw std::invalid_argument("qualities must be nonnegative");
      qsum += q;
    }
    if (std::abs(qsum - 1.0) > 1e-9) {
      throw std::invalid_argument("qualities must sum to 1 (got " + std::to_string(qsum) + ")");
    }
    for (double s : sigmas) {
      if (s < 0.0) throw std::invalid_argument("sigma must be nonnegative");
    }
    for (double s : non_null_fractions) {
      if (s < 0.0 || s > 1.0) throw std::invalid_argument("non-NULL fractions must lie in [0, 1]");
    }
    for (double mu : truths) {
      if (!domain.contains(mu)) {
        throw std::invalid_argument("true value " + std::to_string(mu) +
                                    " lies outside the answer domain");
      }
    }
    if (!task_workers.empty()) {
      if (task_workers.size() != task_count()) {
        throw std::invalid_argument("task worker lists must cover every task");
      }
      for (const auto& lst : task_workers) {
        if (lst.empty()) throw std::invalid_argument("every task needs at least one worker");
        for (int32_t i : lst) {
          if (i < 0 || static_cast<size_t>(i) >= m) {
            throw std::invalid_argument("task worker index out of range");
          }
        }
      }
    }
  }
};

struct BoundReport {
  MechanismKind mechanism = MechanismKind::kNone;
  double bound = 0.0;
  std::vector<double> per_task;  // per-task expected-error contribution
  // Optional per-(worker, task) term dump, row-major m x n; filled on request.
  std::vector<double> terms;
};

namespace detail {

inline constexpr double kSqrt2OverPi = 0.7978845608028654;  // sqrt(2/pi)

// phi(mu) = ((max-mu)^2 + (mu-min)^2) / (2 (max-min)): expected |mu - r| for
// a replacement r uniform on [min, max]; also reused as psi in the two-stage
// mechanism's bound.
inline double uniform_replacement_error(const AnswerDomain& d, double mu) {
  const double a = d.max - mu;
  const double b = mu - d.min;
  return (a * a + b * b) / (2.0 * d.width());
}

// Weighted per-task aggregation: bound = (1/n) sum_j weighted-mean_i e_ij,
// where the weighted mean runs over the workers answering task j (all
// workers when no per-task list is given).
template <typename TermFn>
inline BoundReport aggregate_weighted(const BoundInputs& in, MechanismKind kind, TermFn&& e_term,
                                      bool collect_terms) {
  const size_t m = in.worker_count();
  const size_t n = in.task_count();
  BoundReport report;
  report.mechanism = kind;
  report.per_task.resize(n);
  if (collect_terms) report.terms.assign(m * n, 0.0);
  double total = 0.0;
  for (size_t j = 0; j < n; ++j) {
    double num = 0.0;
    double den = 0.0;
    auto accumulate = [&](size_t i) {
      const double e = e_term(i, j);
      if (collect_terms) report.terms[i * n + j] = e;
      num += in.qualities[i] * e;
      den += in.qualities[i];
    };
    if (in.task_workers.empty()) {
      for (size_t i = 0; i < m; ++i) accumulate(i);
    } else {
      for (int32_t i : in.task_workers[j]) accumulate(static_cast<size_t>(i));
    }
    if (den == 0.0) throw std::invalid_argument("task has zero total quality weight");
    report.per_task[j] = num / den;
    total += report.per_task[j];
  }
  report.bound = total / static_cast<double>(n);
  return report;
}

// Discrete Gaussian weights over the integer domain, normalized to sum 1.
// Computed via a log-space shift so the sigma -> 0 limit degrades gracefully
// to a point mass on the domain value(s) closest to mu.
inline std::vector<double> discrete_gaussian(const AnswerDomain& d, double mu, double sigma) {
  const auto values = d.values();
  std::vector<double> w(values.size());
  if (sigma <= 0.0) {
    double best = std::abs(values[0] - mu);
    for (double v : values) best = std::min(best, std::abs(v - mu));
    double count = 0.0;
    for (size_t k = 0; k < values.size(); ++k) {
      w[k] = std::abs(values[k] - mu) == best ? 1.0 : 0.0;
      count += w[k];
    }
    for (auto& x : w) x /= count;
    return w;
  }
  double max_log = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < values.size(); ++k) {
    const double z = (values[k] - mu) / sigma;
    w[k] = -0.5 * z * z;
    max_log = std::max(max_log, w[k]);
  }
  double sum = 0.0;
  for (auto& x : w) {
    x = std::exp(x - max_log);
    sum += x;
  }
  for (auto& x : w) x /= sum;
  return w;
}

}  // namespace detail

// No-privacy reference: expected MAE of the weighted average of unbiased
// sigma_i-noisy answers, sqrt(2/pi)/n * sum_j weighted-mean sigma.
inline BoundReport baseline_bound(const BoundInputs& in) {
  in.validate();
  return detail::aggregate_weighted(
      in, MechanismKind::kNone,
      [&](size_t i, size_t) { return in.sigmas[i] * detail::kSqrt2OverPi; }, false);
}

// e_ij = (1-s_i)(phi_j + |Gamma|/eps) + s_i (sigma_i sqrt(2/pi) + |Gamma|/eps).
// The mechanism densifies the matrix, so every worker contributes to every
// task and the aggregation runs over all workers.
inline BoundReport lp_bound(const BoundInputs& in, double epsilon, bool collect_terms = false) {
  in.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double noise = in.domain.size() / epsilon;
  BoundInputs all = in;
  all.task_workers.clear();  // densified: W_j is all workers by construction
  return detail::aggregate_weighted(
      all, MechanismKind::kLp,
      [&](size_t i, size_t j) {
        const double phi = detail::uniform_replacement_error(in.domain, in.truths[j]);
        return (1.0 - in.non_null_fractions[i]) * (phi + noise) +
               in.non_null_fractions[i] * (in.sigmas[i] * detail::kSqrt2OverPi + noise);
      },
      collect_terms);
}

// e_ij = (1-s_i) |mu_j - sum_y y/(e^eps+|Gamma|)|
//        + s_i sum_x N(x; mu_j, sigma_i) |mu_j - (x p + (S - x) w)|
// with p = e^eps/(e^eps+|Gamma|) the keep probability, w the switch
// probability, S the sum over the domain, and N a normalized discrete
// Gaussian modeling which answer the worker held before perturbation. The
// y-sums run over the domain only: a NULL outcome contributes no value.
inline BoundReport rr_bound(const BoundInputs& in, double epsilon, bool collect_terms = false) {
  in.validate();
  if (!in.domain.is_integral()) {
    throw std::invalid_argument("randomized response bound requires an integral domain");
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double e = std::exp(epsilon);
  const double gamma = in.domain.size();
  const double p_keep = e / (e + gamma);
  const double p_switch = 1.0 / (e + gamma);
  const auto values = in.domain.values();
  double domain_sum = 0.0;
  for (double v : values) domain_sum += v;
  const double null_term_mean = domain_sum * p_switch;  // E[y | input NULL]

  // Cache the per-(sigma, mu) inner sums per task on the fly; m*n*|Gamma| is
  // small enough to evaluate directly.
  return detail::aggregate_weighted(
      in, MechanismKind::kRr,
      [&](size_t i, size_t j) {
        const double mu = in.truths[j];
        const double s = in.non_null_fractions[i];
        double term = (1.0 - s) * std::abs(mu - null_term_mean);
        const auto weights = detail::discrete_gaussian(in.domain, mu, in.sigmas[i]);
        for (size_t k = 0; k < values.size(); ++k) {
          const double expected = values[k] * p_keep + (domain_sum - values[k]) * p_switch;
          term += s * weights[k] * std::abs(mu - expected);
        }
        return term;
      },
      collect_terms);
}

// e_ij = [s_i psi_j + s_i |Gamma|/eps2 + e^{eps1} (1-s_i)(sigma_i sqrt(2/pi)
//         + |Gamma|/eps2)] / [s_i + e^{eps1} (1-s_i)]
inline BoundReport rrlp_bound(const BoundInputs& in, double eps1, double eps2,
                              bool collect_terms = false) {
  in.validate();
  if (!(eps1 > 0.0) || !(eps2 > 0.0)) throw std::invalid_argument("eps1 and eps2 must be positive");
  const double noise = in.domain.size() / eps2;
  const double e1 = std::exp(eps1);
  return detail::aggregate_weighted(
      in, MechanismKind::kRrlp,
      [&](size_t i, size_t j) {
        const double psi = detail::uniform_replacement_error(in.domain, in.truths[j]);
        const double s = in.non_null_fractions[i];
        const double num =
            s * psi + s * noise + e1 * (1.0 - s) * (in.sigmas[i] * detail::kSqrt2OverPi + noise);
        const double den = s + e1 * (1.0 - s);
        return num / den;
      },
      collect_terms);
}

// bound = q~ m (sqrt(2/pi) + d |Gamma| / (n eps)), q~ = max_i q_i. Constant in
// the non-NULL fractions: the released row always covers every task.
inline BoundReport mf_bound(const BoundInputs& in, double epsilon, int32_t d) {
  in.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (d <= 0) throw std::invalid_argument("latent dimension must be positive");
  double q_max = 0.0;
  for (double q : in.qualities) q_max = std::max(q_max, q);
  const double n = static_cast<double>(in.task_count());
  BoundReport report;
  report.mechanism = MechanismKind::kMf;
  report.bound = q_max * static_cast<double>(in.worker_count()) *
                 (detail::kSqrt2OverPi + static_cast<double>(d) * in.domain.size() / (n * epsilon));
  report.per_task.assign(in.task_count(), report.bound);
  return report;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_BOUNDS_HPP_
