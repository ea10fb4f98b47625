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
// JSON views of the result types, used by the command line tool.

#ifndef LDPCROWD_JSON_IO_HPP_
#define LDPCROWD_JSON_IO_HPP_

#include <json.hpp>

#include "ldpcrowd/audit.hpp"
#include "ldpcrowd/bounds.hpp"
#include "ldpcrowd/inference.hpp"

namespace ldpcrowd {

inline nlohmann::json to_json(const InferenceResult& r) {
  return nlohmann::json{{"truths", r.truths},
                        {"qualities", r.qualities},
                        {"iterations", r.iterations},
                        {"converged", r.converged},
                        {"excludedWorkers", r.excluded_workers},
                        {"emptyTasks", r.empty_tasks}};
}

inline nlohmann::json to_json(const EvaluationReport& r) {
  return nlohmann::json{{"maeOriginal", r.mae_original},
                        {"maePerturbed", r.mae_perturbed},
                        {"maeChange", r.mae_change},
                        {"original", to_json(r.original)},
                        {"perturbed", to_json(r.perturbed)}};
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json j{{"mechanism", to_string(r.mechanism)},
                   {"bound", r.bound},
                   {"perTask", r.per_task}};
  if (!r.terms.empty()) j["terms"] = r.terms;
  return j;
}

inline nlohmann::json to_json(const PrivacyAuditReport& r) {
  nlohmann::json j{{"mechanism", to_string(r.mechanism)},
                   {"epsilonBudget", r.epsilon_budget},
                   {"trials", r.trials},
                   {"minBucketCount", r.min_count},
                   {"maxRatio", r.max_ratio},
                   {"maxRatioUpper", r.max_ratio_upper},
                   {"bucketIsNull", r.bucket_is_null},
                   {"bucket", r.bucket}};
  j["inputNum"] = r.input_num ? nlohmann::json(*r.input_num) : nlohmann::json(nullptr);
  j["inputDen"] = r.input_den ? nlohmann::json(*r.input_den) : nlohmann::json(nullptr);
  j["nullBucketRatio"] = std::isnan(r.null_bucket_ratio)
                             ? nlohmann::json(nullptr)
                             : nlohmann::json(r.null_bucket_ratio);
  return j;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_JSON_IO_HPP_
