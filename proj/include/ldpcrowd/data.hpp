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
// Synthetic crowdsourcing data and on-disk dataset bundles
// (answers.csv + truth.csv + meta.json in one directory).

#ifndef LDPCROWD_DATA_HPP_
#define LDPCROWD_DATA_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ldpcrowd/core.hpp"
#include "ldpcrowd/csv.hpp"
#include "ldpcrowd/random.hpp"

namespace ldpcrowd {

struct WorkerMixComponent {
  double fraction = 0.0;
  double sigma = 0.0;
};

struct SyntheticSpec {
  int32_t workers = 0;
  int32_t tasks = 0;
  AnswerDomain domain;        // default [0, 9]
  double truth_center = 0.0;  // truths = round(clamp(N(center, 1)))
  std::vector<WorkerMixComponent> worker_mix = {{0.5, 1.0}, {0.5, 5.0}};
  double sparsity = 0.5;  // rho: probability a cell stays NULL
  // Optional per-worker rho overriding the global one (heterogeneous effort).
  std::vector<double> per_worker_sparsity;
  uint64_t seed = 0;

  void validate() const {
    domain.validate();
    if (workers <= 0 || tasks <= 0) {
      throw std::invalid_argument("worker and task counts must be positive");
    }
    if (worker_mix.empty()) throw std::invalid_argument("worker mix must be nonempty");
    double total = 0.0;
    for (const auto& c : worker_mix) {
      if (c.fraction < 0.0) throw std::invalid_argument("mix fractions must be nonnegative");
      if (c.sigma < 0.0) throw std::invalid_argument("mix sigmas must be nonnegative");
      total += c.fraction;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw std::invalid_argument("worker mix fractions must sum to 1");
    }
    if (sparsity < 0.0 || sparsity >= 1.0) {
      throw std::invalid_argument("sparsity must lie in [0, 1)");
    }
    if (!per_worker_sparsity.empty()) {
      if (per_worker_sparsity.size() != static_cast<size_t>(workers)) {
        throw std::invalid_argument("per-worker sparsity must have one entry per worker");
      }
      for (double r : per_worker_sparsity) {
        if (r < 0.0 || r >= 1.0) throw std::invalid_argument("sparsity must lie in [0, 1)");
      }
    }
  }
};

struct Dataset {
  AnswerMatrix answers;
  GroundTruth truths;
  std::vector<double> sigmas;  // per worker, as generated (or as recorded)
  SyntheticSpec spec;          // provenance echo for bundles
};

// Deterministic given the spec (including its seed): truths, then worker
// sigma assignment, then cell-by-cell answers in (worker, task) order.
inline Dataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  RandomSource rng(spec.seed);
  const int32_t m = spec.workers;
  const int32_t n = spec.tasks;

  GroundTruth truths(static_cast<size_t>(n));
  for (auto& t : truths) {
    const double draw = rng.gaussian(spec.truth_center, 1.0);
    t = std::clamp(static_cast<double>(std::llround(draw)), spec.domain.min, spec.domain.max);
  }

  // Exact mix counts (largest-remainder on the cumulative sums), shuffled.
  std::vector<double> sigmas;
  sigmas.reserve(static_cast<size_t>(m));
  double cumulative = 0.0;
  size_t assigned = 0;
  for (const auto& c : spec.worker_mix) {
    cumulative += c.fraction;
    const size_t upto = static_cast<size_t>(std::llround(cumulative * m));
    for (; assigned < upto; ++assigned) sigmas.push_back(c.sigma);
  }
  while (sigmas.size() < static_cast<size_t>(m)) sigmas.push_back(spec.worker_mix.back().sigma);
  for (size_t i = sigmas.size(); i > 1; --i) {  // Fisher-Yates on the seeded stream
    const size_t j = static_cast<size_t>(rng.uniform_int(0, static_cast<int64_t>(i) - 1));
    std::swap(sigmas[i - 1], sigmas[j]);
  }

  const auto draw_answer = [&](int32_t i, int32_t j) {
    const double noisy = truths[static_cast<size_t>(j)] + rng.gaussian(0.0, sigmas[static_cast<size_t>(i)]);
    return std::clamp(static_cast<double>(std::llround(noisy)), spec.domain.min, spec.domain.max);
  };

  std::vector<std::vector<AnswerEntry>> rows(static_cast<size_t>(m));
  size_t kept = 0;
  for (int32_t i = 0; i < m; ++i) {
    const double rho = spec.per_worker_sparsity.empty()
                           ? spec.sparsity
                           : spec.per_worker_sparsity[static_cast<size_t>(i)];
    for (int32_t j = 0; j < n; ++j) {
      if (rng.uniform() < rho) continue;
      rows[static_cast<size_t>(i)].push_back({j, draw_answer(i, j)});
      ++kept;
    }
    if (rows[static_cast<size_t>(i)].empty()) {
      // Keep every worker observable: force one random answer.
      const int32_t j = static_cast<int32_t>(rng.uniform_int(0, n - 1));
      rows[static_cast<size_t>(i)].push_back({j, draw_answer(i, j)});
      ++kept;
    }
  }

  double expected_rho = 0.0;
  if (spec.per_worker_sparsity.empty()) {
    expected_rho = spec.sparsity;
  } else {
    for (double r : spec.per_worker_sparsity) expected_rho += r;
    expected_rho /= static_cast<double>(m);
  }
  const double realized_rho =
      1.0 - static_cast<double>(kept) / (static_cast<double>(m) * static_cast<double>(n));
  if (std::abs(realized_rho - expected_rho) > 0.05) {
    throw std::runtime_error("realized sparsity " + std::to_string(realized_rho) +
                             " deviates from requested " + std::to_string(expected_rho) +
                             " by more than 0.05");
  }

  Dataset ds{AnswerMatrix(n, std::move(rows)), std::move(truths), std::move(sigmas), spec};
  return ds;
}

namespace detail {

inline nlohmann::json spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json mix = nlohmann::json::array();
  for (const auto& c : spec.worker_mix) {
    mix.push_back({{"fraction", c.fraction}, {"sigma", c.sigma}});
  }
  nlohmann::json j{{"workers", spec.workers},
                   {"tasks", spec.tasks},
                   {"domain", {{"min", spec.domain.min}, {"max", spec.domain.max}}},
                   {"truthCenter", spec.truth_center},
                   {"workerMix", mix},
                   {"sparsity", spec.sparsity},
                   {"seed", spec.seed}};
  if (!spec.per_worker_sparsity.empty()) j["perWorkerSparsity"] = spec.per_worker_sparsity;
  return j;
}

inline SyntheticSpec spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.workers = j.at("workers").get<int32_t>();
  spec.tasks = j.at("tasks").get<int32_t>();
  spec.domain.min = j.at("domain").at("min").get<double>();
  spec.domain.max = j.at("domain").at("max").get<double>();
  spec.truth_center = j.at("truthCenter").get<double>();
  spec.worker_mix.clear();
  for (const auto& c : j.at("workerMix")) {
    spec.worker_mix.push_back({c.at("fraction").get<double>(), c.at("sigma").get<double>()});
  }
  spec.sparsity = j.at("sparsity").get<double>();
  spec.seed = j.at("seed").get<uint64_t>();
  if (j.contains("perWorkerSparsity")) {
    spec.per_worker_sparsity = j.at("perWorkerSparsity").get<std::vector<double>>();
  }
  return spec;
}

}  // namespace detail

// Writes answers.csv, truth.csv and meta.json into a directory (created if
// absent). meta.json records the generation parameters and per-worker sigmas
// so bound calculators can be fed the generator values later.
inline void save_dataset(const Dataset& ds, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  save_answers_csv(ds.answers, (fs::path(dir) / "answers.csv").string());
  save_truth_csv(ds.truths, ds.answers, (fs::path(dir) / "truth.csv").string());
  nlohmann::json meta = detail::spec_to_json(ds.spec);
  meta["sigmas"] = ds.sigmas;
  std::ofstream out(fs::path(dir) / "meta.json", std::ios::binary);
  if (!out) throw std::runtime_error("cannot write meta.json in " + dir);
  out << meta.dump(2) << '\n';
}

inline Dataset load_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const auto answers_path = fs::path(dir) / "answers.csv";
  const auto truth_path = fs::path(dir) / "truth.csv";
  const auto meta_path = fs::path(dir) / "meta.json";
  std::ifstream meta_in(meta_path);
  if (!meta_in) throw std::runtime_error("cannot open " + meta_path.string());
  nlohmann::json meta = nlohmann::json::parse(meta_in);

  Dataset ds;
  ds.spec = detail::spec_from_json(meta);
  ds.answers = load_answers_csv(answers_path.string(), ds.spec.domain);
  ds.truths = load_truth_csv(truth_path.string(), ds.answers);
  ds.sigmas = meta.at("sigmas").get<std::vector<double>>();
  if (ds.sigmas.size() != static_cast<size_t>(ds.answers.workers())) {
    throw std::runtime_error(meta_path.string() + ": sigma list does not match worker count");
  }
  return ds;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_DATA_HPP_
