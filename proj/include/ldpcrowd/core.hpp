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

#ifndef LDPCROWD_CORE_HPP_
#define LDPCROWD_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace ldpcrowd {

// Closed integer answer domain [min, max]. Absent answers (NULL) are not part
// of the domain; they are represented by absent matrix entries.
struct AnswerDomain {
  double min = 0.0;
  double max = 9.0;

  // |Gamma|: number of integer answer options, max - min + 1.
  // This is the cardinality, not the width; the Laplace scale and the
  // randomized-response switch probabilities are all defined in terms of it.
  double size() const { return max - min + 1.0; }
  double width() const { return max - min; }
  double midpoint() const { return 0.5 * (min + max); }
  bool contains(double v) const { return v >= min && v <= max; }

  bool is_integral() const {
    return std::floor(min) == min && std::floor(max) == max;
  }

  // Enumerates the integer options. Only meaningful for integral domains.
  std::vector<double> values() const {
    std::vector<double> out;
    out.reserve(static_cast<size_t>(size()));
    for (double v = min; v <= max; v += 1.0) out.push_back(v);
    return out;
  }

  void validate() const {
    if (!(max > min)) {
      throw std::invalid_argument("answer domain is degenerate: max <= min");
    }
    if (!std::isfinite(min) || !std::isfinite(max)) {
      throw std::invalid_argument("answer domain bounds must be finite");
    }
  }
};

// One observed (task, value) cell of a worker's row.
struct AnswerEntry {
  int32_t task = 0;
  double value = 0.0;

  friend bool operator==(const AnswerEntry&, const AnswerEntry&) = default;
};

// Sparse m x n worker/task answer matrix. A missing entry is a NULL answer.
// Immutable after construction; concurrent reads are safe.
class AnswerMatrix {
 public:
  AnswerMatrix() = default;

  // Takes one entry list per worker. Entries are sorted by task; duplicate
  // (worker, task) pairs and out-of-range task indices are rejected.
  AnswerMatrix(int32_t tasks, std::vector<std::vector<AnswerEntry>> rows,
               std::vector<std::string> worker_ids = {},
               std::vector<std::string> task_ids = {})
      : tasks_(tasks),
        rows_(std::move(rows)),
        worker_ids_(std::move(worker_ids)),
        task_ids_(std::move(task_ids)) {
    if (tasks_ <= 0) throw std::invalid_argument("task count must be positive");
    if (rows_.empty()) throw std::invalid_argument("worker count must be positive");
    if (!worker_ids_.empty() && worker_ids_.size() != rows_.size()) {
      throw std::invalid_argument("worker id list does not match worker count");
    }
    if (!task_ids_.empty() && task_ids_.size() != static_cast<size_t>(tasks_)) {
      throw std::invalid_argument("task id list does not match task count");
    }
    for (auto& row : rows_) {
      std::sort(row.begin(), row.end(),
                [](const AnswerEntry& a, const AnswerEntry& b) { return a.task < b.task; });
      int32_t prev = -1;
      for (const auto& e : row) {
        if (e.task < 0 || e.task >= tasks_) {
          throw std::invalid_argument("answer entry references task " +
                                      std::to_string(e.task) + " outside [0, " +
                                      std::to_string(tasks_) + ")");
        }
        if (e.task == prev) {
          throw std::invalid_argument("duplicate answer for task " + std::to_string(e.task));
        }
        if (!std::isfinite(e.value)) {
          throw std::invalid_argument("answer value must be finite");
        }
        prev = e.task;
      }
    }
  }

  int32_t workers() const { return static_cast<int32_t>(rows_.size()); }
  int32_t tasks() const { return tasks_; }

  std::span<const AnswerEntry> row(int32_t worker) const {
    return rows_[static_cast<size_t>(worker)];
  }

  std::optional<double> at(int32_t worker, int32_t task) const {
    auto r = row(worker);
    auto it = std::lower_bound(r.begin(), r.end(), task,
                               [](const AnswerEntry& e, int32_t t) { return e.task < t; });
    if (it != r.end() && it->task == task) return it->value;
    return std::nullopt;
  }

  size_t entry_count() const {
    size_t c = 0;
    for (const auto& r : rows_) c += r.size();
    return c;
  }

  // Ingestion ids in first-seen order; empty when the matrix was built
  // programmatically (serialization then synthesizes w<i> / t<j>).
  const std::vector<std::string>& worker_ids() const { return worker_ids_; }
  const std::vector<std::string>& task_ids() const { return task_ids_; }

 private:
  int32_t tasks_ = 0;
  std::vector<std::vector<AnswerEntry>> rows_;
  std::vector<std::string> worker_ids_;
  std::vector<std::string> task_ids_;
};

// Per-task true values, aligned with the matrix task indexing.
using GroundTruth = std::vector<double>;

struct SparsityProfile {
  std::vector<double> per_worker;  // s_i: non-NULL fraction of worker i's row
  double overall = 0.0;            // non-NULL fraction over all m*n cells
};

inline SparsityProfile sparsity_profile(const AnswerMatrix& m) {
  SparsityProfile p;
  p.per_worker.resize(static_cast<size_t>(m.workers()));
  size_t total = 0;
  for (int32_t i = 0; i < m.workers(); ++i) {
    const size_t k = m.row(i).size();
    p.per_worker[static_cast<size_t>(i)] = static_cast<double>(k) / m.tasks();
    total += k;
  }
  p.overall = static_cast<double>(total) /
              (static_cast<double>(m.workers()) * static_cast<double>(m.tasks()));
  return p;
}

enum class MechanismKind { kNone, kLp, kRr, kRrlp, kMf };

inline std::string to_string(MechanismKind k) {
  switch (k) {
    case MechanismKind::kNone: return "none";
    case MechanismKind::kLp: return "lp";
    case MechanismKind::kRr: return "rr";
    case MechanismKind::kRrlp: return "rrlp";
    case MechanismKind::kMf: return "mf";
  }
  throw std::logic_error("unknown mechanism kind");
}

inline MechanismKind mechanism_from_string(const std::string& s) {
  if (s == "none") return MechanismKind::kNone;
  if (s == "lp") return MechanismKind::kLp;
  if (s == "rr") return MechanismKind::kRr;
  if (s == "rrlp") return MechanismKind::kRrlp;
  if (s == "mf") return MechanismKind::kMf;
  throw std::invalid_argument("unknown mechanism: " + s);
}

// How the LP mechanism converts a NULL answer into a numeric one before
// adding noise. The conversion must not depend on other answers.
struct ReplacementStrategy {
  enum class Kind { kUniformOverDomain, kConstant };
  Kind kind = Kind::kUniformOverDomain;
  double constant = 0.0;

  static ReplacementStrategy uniform() { return {}; }
  static ReplacementStrategy constant_value(double c) {
    return {Kind::kConstant, c};
  }
};

struct MfConfig {
  int32_t d = 0;          // latent dimension; 0 -> max(1, ceil(n / 10))
  double gamma = 0.0;     // step size; 0 -> 1 / (2 * lambda_max(Hessian))
  double lambda = 1e-6;   // ridge term keeping the objective bounded below
  double tol = 1e-8;      // stop when the gradient 2-norm falls below this
  int32_t max_iter = 10000;

  int32_t resolve_d(int32_t tasks) const {
    if (d > 0) return d;
    return std::max<int32_t>(1, static_cast<int32_t>((tasks + 9) / 10));
  }
};

struct MechanismConfig {
  MechanismKind kind = MechanismKind::kNone;
  double epsilon = 1.0;
  // RR+LP budget split: eps1 = eps1_fraction * epsilon for the class stage,
  // the rest feeds the Laplace stage.
  double eps1_fraction = 0.1;
  ReplacementStrategy replacement;
  bool clamp = false;  // clamp real-valued outputs back into the domain
  MfConfig mf;
  uint64_t seed = 0;

  double eps1() const { return eps1_fraction * epsilon; }
  double eps2() const { return epsilon - eps1(); }

  void validate() const {
    if (kind != MechanismKind::kNone && !(epsilon > 0.0)) {
      throw std::invalid_argument("epsilon must be positive");
    }
    if (kind == MechanismKind::kRrlp &&
        !(eps1_fraction > 0.0 && eps1_fraction < 1.0)) {
      throw std::invalid_argument("eps1 fraction must lie in (0, 1)");
    }
    if (kind == MechanismKind::kMf) {
      if (mf.d < 0) throw std::invalid_argument("mf dimension must be nonnegative");
      if (mf.lambda < 0.0) throw std::invalid_argument("mf lambda must be nonnegative");
      if (mf.gamma < 0.0) throw std::invalid_argument("mf gamma must be nonnegative");
      if (mf.max_iter <= 0) throw std::invalid_argument("mf max_iter must be positive");
    }
  }
};

}  // namespace ldpcrowd

#endif  // LDPCROWD_CORE_HPP_
