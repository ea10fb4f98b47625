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
// Experiment sweeps: mechanisms x epsilon x sparsity x repetitions, each
// repetition on an independently derived seed, every row carrying empirical
// MAEs plus the matching analytic bound.

#ifndef LDPCROWD_EXPERIMENT_HPP_
#define LDPCROWD_EXPERIMENT_HPP_

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ldpcrowd/bounds.hpp"
#include "ldpcrowd/core.hpp"
#include "ldpcrowd/csv.hpp"
#include "ldpcrowd/data.hpp"
#include "ldpcrowd/inference.hpp"
#include "ldpcrowd/mechanisms.hpp"
#include "ldpcrowd/random.hpp"

namespace ldpcrowd {

struct ExperimentConfig {
  // Synthetic base (sparsity comes from the grid); used when dataset is unset.
  SyntheticSpec base;
  // Pre-existing dataset. The sparsity grid must then hold the single value
  // realized by that dataset (reported in the rows as-is).
  std::optional<Dataset> dataset;

  std::vector<MechanismKind> mechanisms = {MechanismKind::kLp, MechanismKind::kRr,
                                           MechanismKind::kRrlp, MechanismKind::kMf};
  std::vector<double> epsilons = {0.1, 1.0, 5.0};
  std::vector<double> sparsities = {0.1, 0.5, 0.9};
  int32_t repetitions = 10;
  uint64_t seed = 0;

  double eps1_fraction = 0.1;
  ReplacementStrategy replacement;
  bool clamp = false;
  MfConfig mf;
  InferenceOptions inference;
  int32_t jobs = 1;

  void validate() const {
    if (mechanisms.empty() || epsilons.empty() || sparsities.empty()) {
      throw std::invalid_argument("experiment grid must be nonempty");
    }
    for (double e : epsilons) {
      if (!(e > 0.0)) throw std::invalid_argument("epsilon must be positive");
    }
    if (repetitions <= 0) throw std::invalid_argument("repetitions must be positive");
    if (jobs <= 0) throw std::invalid_argument("jobs must be positive");
    if (!dataset && sparsities.size() > 1) {
      // fine: synthetic mode regenerates per sparsity
    }
    if (dataset && sparsities.size() != 1) {
      throw std::invalid_argument("a fixed dataset admits exactly one sparsity grid value");
    }
  }
};

struct SweepRow {
  MechanismKind mechanism = MechanismKind::kNone;
  double epsilon = 0.0;
  double sparsity = 0.0;
  int32_t rep = 0;
  double mae_original = 0.0;
  double mae_perturbed = 0.0;
  double mae_change = 0.0;
  double analytic_bound = 0.0;
  int32_t iterations = 0;  // perturbed-side inference iterations
  double wall_ms = 0.0;
  bool ok = true;
  std::string error;
};

struct ExperimentResult {
  std::vector<SweepRow> rows;
};

namespace detail {

inline uint64_t row_seed(uint64_t master, MechanismKind mech, size_t eps_index, size_t sp_index,
                         int32_t rep) {
  // Coordinates, not values: adding grid points must not shift the
  // randomness of existing rows.
  return mix_seed({master, 0x6D656368ULL + static_cast<uint64_t>(mech),
                   0x65707349ULL + eps_index, 0x73704964ULL + sp_index,
                   0x72657030ULL + static_cast<uint64_t>(rep)});
}

inline double analytic_bound_for(MechanismKind mech, const BoundInputs& inputs, double epsilon,
                                 double eps1_fraction, int32_t d) {
  switch (mech) {
    case MechanismKind::kNone:
      return baseline_bound(inputs).bound;
    case MechanismKind::kLp:
      return lp_bound(inputs, epsilon).bound;
    case MechanismKind::kRr:
      return rr_bound(inputs, epsilon).bound;
    case MechanismKind::kRrlp:
      return rrlp_bound(inputs, eps1_fraction * epsilon, (1.0 - eps1_fraction) * epsilon).bound;
    case MechanismKind::kMf:
      return mf_bound(inputs, epsilon, d).bound;
  }
  throw std::logic_error("unknown mechanism kind");
}

}  // namespace detail

// Runs the full grid. Deterministic for a given config+seed independent of
// the job count: every row derives its own seed and datasets are generated
// once per sparsity grid point from (master seed, sparsity index).
inline ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();

  // Materialize one dataset per sparsity grid point plus its original-side
  // inference results, shared read-only by all rows.
  struct GridDataset {
    Dataset data;
    double mae_original = 0.0;
    BoundInputs bound_inputs;
    double midpoint = 0.0;
  };
  std::vector<GridDataset> datasets;
  datasets.reserve(config.sparsities.size());
  for (size_t sp = 0; sp < config.sparsities.size(); ++sp) {
    GridDataset g;
    if (config.dataset) {
      g.data = *config.dataset;
    } else {
      SyntheticSpec spec = config.base;
      spec.sparsity = config.sparsities[sp];
      spec.seed = mix_seed({config.seed, 0x64617461ULL, static_cast<uint64_t>(sp)});
      g.data = generate_synthetic(spec);
    }
    g.midpoint = g.data.spec.domain.midpoint();
    InferenceOptions opts = config.inference;
    opts.empty_task_truth = g.midpoint;
    g.mae_original = mean_absolute_error(infer_truth(g.data.answers, opts).truths, g.data.truths);

    g.bound_inputs.qualities.assign(static_cast<size_t>(g.data.answers.workers()),
                                    1.0 / g.data.answers.workers());
    g.bound_inputs.sigmas = g.data.sigmas;
    g.bound_inputs.non_null_fractions = sparsity_profile(g.data.answers).per_worker;
    g.bound_inputs.truths = g.data.truths;
    g.bound_inputs.domain = g.data.spec.domain;
    datasets.push_back(std::move(g));
  }

  struct Cell {
    size_t mech_index, eps_index, sp_index;
    int32_t rep;
  };
  std::vector<Cell> cells;
  for (size_t mi = 0; mi < config.mechanisms.size(); ++mi) {
    for (size_t ei = 0; ei < config.epsilons.size(); ++ei) {
      for (size_t si = 0; si < config.sparsities.size(); ++si) {
        for (int32_t r = 0; r < config.repetitions; ++r) cells.push_back({mi, ei, si, r});
      }
    }
  }

  ExperimentResult result;
  result.rows.resize(cells.size());

  const auto run_cell = [&](size_t index) {
    const Cell& cell = cells[index];
    const MechanismKind mech = config.mechanisms[cell.mech_index];
    const double epsilon = config.epsilons[cell.eps_index];
    const GridDataset& g = datasets[cell.sp_index];

    SweepRow row;
    row.mechanism = mech;
    row.epsilon = epsilon;
    row.sparsity = config.sparsities[cell.sp_index];
    row.rep = cell.rep;
    const auto start = std::chrono::steady_clock::now();
    try {
      MechanismConfig mc;
      mc.kind = mech;
      mc.epsilon = epsilon;
      mc.eps1_fraction = config.eps1_fraction;
      mc.replacement = config.replacement;
      mc.clamp = config.clamp;
      mc.mf = config.mf;
      mc.seed = detail::row_seed(config.seed, mech, cell.eps_index, cell.sp_index, cell.rep);

      const PerturbResult perturbed = perturb_matrix(g.data.answers, g.data.spec.domain, mc);
      InferenceOptions opts = config.inference;
      opts.empty_task_truth = g.midpoint;
      const InferenceResult inferred = infer_truth(perturbed.matrix, opts);

      row.mae_original = g.mae_original;
      row.mae_perturbed = mean_absolute_error(inferred.truths, g.data.truths);
      row.mae_change = row.mae_perturbed - row.mae_original;
      row.iterations = inferred.iterations;
      row.analytic_bound = detail::analytic_bound_for(
          mech, g.bound_inputs, epsilon, config.eps1_fraction,
          config.mf.resolve_d(g.data.answers.tasks()));
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
      row.mae_original = row.mae_perturbed = row.mae_change = row.analytic_bound =
          std::numeric_limits<double>::quiet_NaN();
    }
    row.wall_ms = std::chrono::duration<double, std::milli>(
                      std::chrono::steady_clock::now() - start).count();
    result.rows[index] = std::move(row);
  };

  const int32_t jobs = std::min<int32_t>(config.jobs, static_cast<int32_t>(cells.size()));
  if (jobs <= 1) {
    for (size_t i = 0; i < cells.size(); ++i) run_cell(i);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(jobs));
    for (int32_t t = 0; t < jobs; ++t) {
      pool.emplace_back([&] {
        for (size_t i = next.fetch_add(1); i < cells.size(); i = next.fetch_add(1)) {
          run_cell(i);
        }
      });
    }
    for (auto& th : pool) th.join();
  }
  return result;
}

// Column order is part of the interface. wall_ms is informational: it is the
// one column exempt from the byte-identical determinism guarantee.
inline void write_sweep_csv(const ExperimentResult& result, std::ostream& out) {
  out << "mechanism,epsilon,sparsity,rep,mae_original,mae_perturbed,mae_change,"
         "analytic_bound,iterations,wall_ms\n";
  for (const auto& r : result.rows) {
    out << to_string(r.mechanism) << ',' << detail::format_double(r.epsilon) << ','
        << detail::format_double(r.sparsity) << ',' << r.rep << ','
        << detail::format_double(r.mae_original) << ',' << detail::format_double(r.mae_perturbed)
        << ',' << detail::format_double(r.mae_change) << ','
        << detail::format_double(r.analytic_bound) << ',' << r.iterations << ','
        << detail::format_double(r.wall_ms) << '\n';
  }
}

// Per-(mechanism, epsilon, sparsity) means and standard deviations of the
// MAE change, plus the list of failed rows.
inline nlohmann::json summarize_experiment(const ExperimentResult& result) {
  struct Key {
    MechanismKind mech;
    double eps, sp;
    bool operator<(const Key& o) const {
      if (mech != o.mech) return mech < o.mech;
      if (eps != o.eps) return eps < o.eps;
      return sp < o.sp;
    }
  };
  std::map<Key, std::vector<double>> groups;
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& r : result.rows) {
    if (!r.ok) {
      failures.push_back({{"mechanism", to_string(r.mechanism)},
                          {"epsilon", r.epsilon},
                          {"sparsity", r.sparsity},
                          {"rep", r.rep},
                          {"error", r.error}});
      continue;
    }
    groups[{r.mechanism, r.epsilon, r.sparsity}].push_back(r.mae_change);
  }
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [key, values] : groups) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var = values.size() > 1 ? var / static_cast<double>(values.size() - 1) : 0.0;
    cells.push_back({{"mechanism", to_string(key.mech)},
                     {"epsilon", key.eps},
                     {"sparsity", key.sp},
                     {"repetitions", values.size()},
                     {"maeChangeMean", mean},
                     {"maeChangeStddev", std::sqrt(var)}});
  }
  return nlohmann::json{{"cells", cells}, {"failures", failures}};
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_EXPERIMENT_HPP_
