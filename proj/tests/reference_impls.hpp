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
// Test-only reference implementations. Written as plain direct loops with no
// shared code beyond the core types, so they can serve as independent oracles
// for the library's production paths.

#ifndef LDPCROWD_TESTS_REFERENCE_IMPLS_HPP_
#define LDPCROWD_TESTS_REFERENCE_IMPLS_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "ldpcrowd/core.hpp"

namespace ldpcrowd_test {

struct NaiveInferenceResult {
  std::vector<double> truths;
  std::vector<double> qualities;
};

// Fixed-iteration alternating estimate: plain weighted means, no anchoring,
// no convergence check. 200 rounds is far past the fixed point for the small
// matrices used in tests.
inline NaiveInferenceResult naive_infer(const ldpcrowd::AnswerMatrix& m, int rounds = 200) {
  const int32_t workers = m.workers();
  const int32_t tasks = m.tasks();
  NaiveInferenceResult r;
  r.truths.assign(static_cast<size_t>(tasks), 0.0);
  r.qualities.assign(static_cast<size_t>(workers), 0.0);

  int32_t active = 0;
  for (int32_t i = 0; i < workers; ++i) {
    if (!m.row(i).empty()) ++active;
  }
  for (int32_t i = 0; i < workers; ++i) {
    if (!m.row(i).empty()) r.qualities[static_cast<size_t>(i)] = 1.0 / active;
  }

  for (int round = 0; round < rounds; ++round) {
    for (int32_t j = 0; j < tasks; ++j) {
      double num = 0.0;
      double den = 0.0;
      for (int32_t i = 0; i < workers; ++i) {
        if (auto v = m.at(i, j)) {
          num += r.qualities[static_cast<size_t>(i)] * *v;
          den += r.qualities[static_cast<size_t>(i)];
        }
      }
      r.truths[static_cast<size_t>(j)] = num / den;
    }
    double qsum = 0.0;
    for (int32_t i = 0; i < workers; ++i) {
      if (m.row(i).empty()) continue;
      double sq = 0.0;
      for (const auto& e : m.row(i)) {
        const double d = e.value - r.truths[static_cast<size_t>(e.task)];
        sq += d * d;
      }
      const double dev = std::sqrt(sq / static_cast<double>(m.row(i).size()));
      r.qualities[static_cast<size_t>(i)] = 1.0 / std::max(dev, 1e-9);
      qsum += r.qualities[static_cast<size_t>(i)];
    }
    for (int32_t i = 0; i < workers; ++i) r.qualities[static_cast<size_t>(i)] /= qsum;
  }
  return r;
}

// --- straight-line bound formulas -------------------------------------------

inline double ref_phi(const ldpcrowd::AnswerDomain& d, double mu) {
  return ((d.max - mu) * (d.max - mu) + (mu - d.min) * (mu - d.min)) / (2.0 * (d.max - d.min));
}

inline double ref_lp_term(const ldpcrowd::AnswerDomain& d, double eps, double s, double sigma,
                          double mu) {
  const double noise = d.size() / eps;
  return (1.0 - s) * (ref_phi(d, mu) + noise) +
         s * (sigma * std::sqrt(2.0 / M_PI) + noise);
}

inline double ref_rr_term(const ldpcrowd::AnswerDomain& d, double eps, double s, double sigma,
                          double mu) {
  const double e = std::exp(eps);
  const double g = d.size();
  const double p = e / (e + g);
  const double w = 1.0 / (e + g);
  double domain_sum = 0.0;
  for (double v = d.min; v <= d.max; v += 1.0) domain_sum += v;

  double term = (1.0 - s) * std::abs(mu - domain_sum * w);

  // Discrete Gaussian weights, plain exp space (test sigmas are moderate).
  std::vector<double> weights;
  double wsum = 0.0;
  for (double v = d.min; v <= d.max; v += 1.0) {
    const double z = (v - mu) / sigma;
    weights.push_back(std::exp(-0.5 * z * z));
    wsum += weights.back();
  }
  size_t k = 0;
  for (double v = d.min; v <= d.max; v += 1.0, ++k) {
    const double expected = v * p + (domain_sum - v) * w;
    term += s * (weights[k] / wsum) * std::abs(mu - expected);
  }
  return term;
}

inline double ref_rrlp_term(const ldpcrowd::AnswerDomain& d, double eps1, double eps2, double s,
                            double sigma, double mu) {
  const double noise = d.size() / eps2;
  const double e1 = std::exp(eps1);
  const double num = s * ref_phi(d, mu) + s * noise +
                     e1 * (1.0 - s) * (sigma * std::sqrt(2.0 / M_PI) + noise);
  return num / (s + e1 * (1.0 - s));
}

inline double ref_mf_bound(double q_max, size_t m, size_t n, const ldpcrowd::AnswerDomain& d,
                           double eps, int32_t dim) {
  return q_max * static_cast<double>(m) *
         (std::sqrt(2.0 / M_PI) + static_cast<double>(dim) * d.size() / (static_cast<double>(n) * eps));
}

// Pearson statistic: sum (observed - expected)^2 / expected.
inline double chi_square_statistic(const std::vector<int64_t>& observed,
                                   const std::vector<double>& probabilities, int64_t trials) {
  double stat = 0.0;
  for (size_t k = 0; k < observed.size(); ++k) {
    const double expected = probabilities[k] * static_cast<double>(trials);
    const double diff = static_cast<double>(observed[k]) - expected;
    stat += diff * diff / expected;
  }
  return stat;
}

}  // namespace ldpcrowd_test

#endif  // LDPCROWD_TESTS_REFERENCE_IMPLS_HPP_
