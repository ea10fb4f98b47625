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
// Monte Carlo privacy audit: estimate the worst-case likelihood ratio of a
// mechanism's single-cell output distribution over all pairs of inputs. The
// ratio over bucketed events lower-bounds the pointwise ratio, so the audit
// can expose budget violations but can never prove tightness.

#ifndef LDPCROWD_AUDIT_HPP_
#define LDPCROWD_AUDIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ldpcrowd/core.hpp"
#include "ldpcrowd/mechanisms.hpp"
#include "ldpcrowd/random.hpp"

namespace ldpcrowd {

struct PrivacyAuditReport {
  MechanismKind mechanism = MechanismKind::kLp;
  double epsilon_budget = 0.0;  // total budget the ratio is measured against
  int64_t trials = 0;
  int64_t min_count = 0;  // buckets below this count were not compared

  double max_ratio = 0.0;        // worst observed frequency ratio
  double max_ratio_upper = 0.0;  // Wilson 99.9% conservative upper ratio there
  // Inputs achieving the max; unset optional means NULL.
  std::optional<double> input_num;
  std::optional<double> input_den;
  bool bucket_is_null = false;
  int64_t bucket = 0;  // unit bucket index floor(value) when not NULL

  // Worst ratio restricted to the NULL output event (NaN when the mechanism
  // never outputs NULL). For the two-stage mechanism this event is governed
  // by the class budget eps1 alone.
  double null_bucket_ratio = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Wilson score interval bounds for a binomial proportion, z for 99.9%.
inline std::pair<double, double> wilson_interval(int64_t count, int64_t trials) {
  const double z = 3.2905;  // two-sided 99.9%
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(count) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = p + z2 / (2.0 * n);
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n));
  return {(center - half) / denom, (center + half) / denom};
}

}  // namespace detail

// Samples the mechanism `trials` times per input over the augmented single
// cell inputs Gamma U {NULL}; outputs are binned into unit-width buckets plus
// a NULL bucket and the maximum pairwise frequency ratio is reported. Buckets
// observed fewer than max(20, trials/500) times on either side are skipped:
// their ratio estimates carry more sampling noise than signal.
inline PrivacyAuditReport empirical_privacy_ratio(const MechanismConfig& config,
                                                  const AnswerDomain& domain, int64_t trials,
                                                  uint64_t seed) {
  domain.validate();
  config.validate();
  if (trials < 100000) {
    throw std::invalid_argument("privacy audit needs at least 1e5 trials per input");
  }
  if (config.kind != MechanismKind::kLp && config.kind != MechanismKind::kRr &&
      config.kind != MechanismKind::kRrlp) {
    throw std::invalid_argument(
        "empirical audit covers lp, rr and rrlp; the factorization mechanism's noise "
        "is audited analytically");
  }
  if (!domain.is_integral()) {
    throw std::invalid_argument("audit enumerates integer domain inputs");
  }

  // Augmented input list; nullopt is NULL.
  std::vector<std::optional<double>> inputs;
  for (double v : domain.values()) inputs.push_back(v);
  inputs.push_back(std::nullopt);

  constexpr int64_t kNullBucket = std::numeric_limits<int64_t>::min();
  std::vector<std::map<int64_t, int64_t>> counts(inputs.size());

  for (size_t ui = 0; ui < inputs.size(); ++ui) {
    RandomSource rng(mix_seed({seed, static_cast<uint64_t>(ui)}));
    std::vector<AnswerEntry> row;
    if (inputs[ui]) row.push_back({0, *inputs[ui]});
    auto& bucket_counts = counts[ui];
    for (int64_t t = 0; t < trials; ++t) {
      std::optional<double> out;
      switch (config.kind) {
        case MechanismKind::kLp: {
          out = lp_perturb_row(row, 1, domain, config.epsilon, config.replacement, rng)[0];
          break;
        }
        case MechanismKind::kRr: {
          std::optional<double> in = inputs[ui];
          out = rr_perturb_value(in, domain, config.epsilon, rng);
          break;
        }
        case MechanismKind::kRrlp: {
          std::optional<double> in = inputs[ui];
          if (rrlp_class_stage(in.has_value(), config.eps1(), rng)) {
            out = rrlp_value_stage(in, domain, config.eps2(), rng);
          }
          break;
        }
        default:
          break;
      }
      const int64_t key = out ? static_cast<int64_t>(std::floor(*out)) : kNullBucket;
      ++bucket_counts[key];
    }
  }

  PrivacyAuditReport report;
  report.mechanism = config.kind;
  report.epsilon_budget = config.epsilon;
  report.trials = trials;
  report.min_count = std::max<int64_t>(20, trials / 500);

  for (size_t a = 0; a < inputs.size(); ++a) {
    for (size_t b = 0; b < inputs.size(); ++b) {
      if (a == b) continue;
      for (const auto& [key, count_a] : counts[a]) {
        const auto it = counts[b].find(key);
        if (it == counts[b].end()) continue;
        const int64_t count_b = it->second;
        if (key == kNullBucket) {
          if (count_b > 0) {
            const double r = static_cast<double>(count_a) / static_cast<double>(count_b);
            if (std::isnan(report.null_bucket_ratio) || r > report.null_bucket_ratio) {
              report.null_bucket_ratio = r;
            }
          }
        }
        if (count_a < report.min_count || count_b < report.min_count) continue;
        const double r = static_cast<double>(count_a) / static_cast<double>(count_b);
        if (r > report.max_ratio) {
          report.max_ratio = r;
          const auto [lo_a, hi_a] = detail::wilson_interval(count_a, trials);
          const auto [lo_b, hi_b] = detail::wilson_interval(count_b, trials);
          report.max_ratio_upper = lo_b > 0.0 ? hi_a / lo_b : std::numeric_limits<double>::infinity();
          report.input_num = inputs[a];
          report.input_den = inputs[b];
          report.bucket_is_null = key == kNullBucket;
          report.bucket = key == kNullBucket ? 0 : key;
        }
      }
    }
  }
  return report;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_AUDIT_HPP_
