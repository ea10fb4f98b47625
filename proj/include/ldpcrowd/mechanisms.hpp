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
// Local perturbation mechanisms. Each worker's row is perturbed on its own
// seeded stream; a whole row (including which cells are NULL) is the protected
// object, and each mechanism guarantees eps-indistinguishability per cell.

#ifndef LDPCROWD_MECHANISMS_HPP_
#define LDPCROWD_MECHANISMS_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "ldpcrowd/core.hpp"
#include "ldpcrowd/random.hpp"

namespace ldpcrowd {

// ---------------------------------------------------------------------------
// LP: NULL replacement + Laplace noise on every cell.
// ---------------------------------------------------------------------------

inline double replace_null(const ReplacementStrategy& strategy,
                           const AnswerDomain& domain, RandomSource& rng) {
  switch (strategy.kind) {
    case ReplacementStrategy::Kind::kConstant:
      if (!domain.contains(strategy.constant)) {
        throw std::invalid_argument("replacement constant lies outside the answer domain");
      }
      return strategy.constant;
    case ReplacementStrategy::Kind::kUniformOverDomain:
      return static_cast<double>(
          rng.uniform_int(static_cast<int64_t>(domain.min), static_cast<int64_t>(domain.max)));
  }
  throw std::logic_error("unknown replacement strategy");
}

// Returns a dense length-n row: every NULL is first converted via the
// replacement strategy, then i.i.d. Laplace(|Gamma|/eps) noise is added to
// every element. Outputs are intentionally unclamped reals.
inline std::vector<double> lp_perturb_row(std::span<const AnswerEntry> row, int32_t tasks,
                                          const AnswerDomain& domain, double epsilon,
                                          const ReplacementStrategy& strategy, RandomSource& rng,
                                          NoiseMode noise = NoiseMode::kLaplace) {
  domain.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  const double scale = domain.size() / epsilon;
  std::vector<double> out(static_cast<size_t>(tasks));
  size_t next = 0;
  for (int32_t j = 0; j < tasks; ++j) {
    double base;
    if (next < row.size() && row[next].task == j) {
      base = row[next].value;
      ++next;
    } else {
      base = replace_null(strategy, domain, rng);
    }
    out[static_cast<size_t>(j)] = base + draw_noise(noise, scale, rng);
  }
  return out;
}

// ---------------------------------------------------------------------------
// RR: randomized response over the augmented domain Gamma U {NULL}.
// ---------------------------------------------------------------------------

// Row-stochastic transition over the |Gamma|+1 augmented options: stay with
// probability e^eps / (|Gamma| + e^eps), otherwise switch uniformly to one of
// the |Gamma| other options. NULL is an ordinary option, so absence is
// protected exactly like any value.
class RrTransition {
 public:
  RrTransition(const AnswerDomain& domain, double epsilon)
      : domain_(domain), epsilon_(epsilon) {
    domain.validate();
    if (!domain.is_integral()) {
      throw std::invalid_argument("randomized response requires an integral domain");
    }
    if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
    const double e = std::exp(epsilon);
    keep_ = e / (domain.size() + e);
    switch_ = 1.0 / (domain.size() + e);
  }

  double keep_probability() const { return keep_; }
  double switch_probability() const { return switch_; }  // per non-self option
  int32_t option_count() const { return static_cast<int32_t>(domain_.size()) + 1; }

  // from/to index the augmented options: 0..|Gamma|-1 are the domain values in
  // ascending order, |Gamma| is NULL.
  double probability(int32_t from, int32_t to) const {
    return from == to ? keep_ : switch_;
  }

 private:
  AnswerDomain domain_;
  double epsilon_;
  double keep_;
  double switch_;
};

// Perturbs one cell. nullopt plays the role of NULL on both sides.
inline std::optional<double> rr_perturb_value(std::optional<double> value,
                                              const AnswerDomain& domain, double epsilon,
                                              RandomSource& rng) {
  RrTransition t(domain, epsilon);
  if (value) {
    if (std::floor(*value) != *value || !domain.contains(*value)) {
      throw std::invalid_argument("randomized response requires integer in-domain answers");
    }
  }
  if (rng.uniform() < t.keep_probability()) return value;
  // Uniform over the |Gamma| options other than the input. Enumerate the
  // augmented domain (values ascending, then NULL) and skip the input.
  const auto gamma = static_cast<int64_t>(domain.size());
  int64_t pick = rng.uniform_int(0, gamma - 1);
  const int64_t self = value ? static_cast<int64_t>(*value - domain.min) : gamma;
  if (pick >= self) ++pick;
  if (pick == gamma) return std::nullopt;
  return domain.min + static_cast<double>(pick);
}

// Applies RR to all n cells of a row (present and NULL alike); NULL outputs
// stay absent, so the result is again sparse.
inline std::vector<AnswerEntry> rr_perturb_row(std::span<const AnswerEntry> row, int32_t tasks,
                                               const AnswerDomain& domain, double epsilon,
                                               RandomSource& rng) {
  std::vector<AnswerEntry> out;
  out.reserve(row.size());
  size_t next = 0;
  for (int32_t j = 0; j < tasks; ++j) {
    std::optional<double> in;
    if (next < row.size() && row[next].task == j) {
      in = row[next].value;
      ++next;
    }
    if (auto v = rr_perturb_value(in, domain, epsilon, rng)) {
      out.push_back({j, *v});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// RR+LP: binary class perturbation, then value perturbation.
// ---------------------------------------------------------------------------

// Stage 1. Decides whether the output is a value or NULL. The 2x2 class
// design keeps the input class with probability e^eps1 / (1 + e^eps1).
inline bool rrlp_class_stage(bool input_is_value, double eps1, RandomSource& rng) {
  if (!(eps1 > 0.0)) throw std::invalid_argument("eps1 must be positive");
  const double stay = std::exp(eps1) / (1.0 + std::exp(eps1));
  const bool keep = rng.uniform() < stay;
  return keep ? input_is_value : !input_is_value;
}

// Stage 2. Runs only when the class stage produced "value": a NULL input is
// given a uniform domain draw, then Laplace(|Gamma|/eps2) noise is added.
inline double rrlp_value_stage(std::optional<double> value, const AnswerDomain& domain,
                               double eps2, RandomSource& rng,
                               NoiseMode noise = NoiseMode::kLaplace) {
  domain.validate();
  if (!(eps2 > 0.0)) throw std::invalid_argument("eps2 must be positive");
  const double base =
      value ? *value
            : static_cast<double>(rng.uniform_int(static_cast<int64_t>(domain.min),
                                                  static_cast<int64_t>(domain.max)));
  return base + draw_noise(noise, domain.size() / eps2, rng);
}

// Whole-row composition; satisfies (eps1 + eps2)-privacy per cell.
inline std::vector<AnswerEntry> rrlp_perturb_row(std::span<const AnswerEntry> row, int32_t tasks,
                                                 const AnswerDomain& domain, double eps1,
                                                 double eps2, RandomSource& rng,
                                                 NoiseMode noise = NoiseMode::kLaplace) {
  std::vector<AnswerEntry> out;
  out.reserve(static_cast<size_t>(tasks));
  size_t next = 0;
  for (int32_t j = 0; j < tasks; ++j) {
    std::optional<double> in;
    if (next < row.size() && row[next].task == j) {
      in = row[next].value;
      ++next;
    }
    if (rrlp_class_stage(in.has_value(), eps1, rng)) {
      out.push_back({j, rrlp_value_stage(in, domain, eps2, rng, noise)});
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// MF: objective-perturbed matrix factorization.
// ---------------------------------------------------------------------------

// Curator-published d x n task profile matrix. Entries start uniform on
// [0, 1) and every column is scaled to 1-norm 1, so u = c * ones predicts the
// constant c for every task.
class TaskProfileMatrix {
 public:
  TaskProfileMatrix(int32_t d, int32_t n, std::vector<double> column_major)
      : d_(d), n_(n), values_(std::move(column_major)) {
    if (d <= 0 || n <= 0) throw std::invalid_argument("task profile dimensions must be positive");
    if (values_.size() != static_cast<size_t>(d) * static_cast<size_t>(n)) {
      throw std::invalid_argument("task profile value count does not match d*n");
    }
  }

  int32_t d() const { return d_; }
  int32_t n() const { return n_; }
  std::span<const double> column(int32_t j) const {
    return {values_.data() + static_cast<size_t>(j) * d_, static_cast<size_t>(d_)};
  }
  double at(int32_t k, int32_t j) const {
    return values_[static_cast<size_t>(j) * d_ + static_cast<size_t>(k)];
  }

 private:
  int32_t d_;
  int32_t n_;
  std::vector<double> values_;  // column-major, columns are per-task profiles
};

inline TaskProfileMatrix mf_generate_task_profile(int32_t d, int32_t n, RandomSource& rng) {
  if (d <= 0 || n <= 0) throw std::invalid_argument("task profile dimensions must be positive");
  std::vector<double> values(static_cast<size_t>(d) * static_cast<size_t>(n));
  for (int32_t j = 0; j < n; ++j) {
    double* col = values.data() + static_cast<size_t>(j) * d;
    double sum = 0.0;
    do {
      sum = 0.0;
      for (int32_t k = 0; k < d; ++k) {
        col[k] = rng.uniform();
        sum += col[k];
      }
    } while (sum == 0.0);  // all-zero columns cannot be normalized
    for (int32_t k = 0; k < d; ++k) col[k] /= sum;
  }
  return TaskProfileMatrix(d, n, std::move(values));
}

struct WorkerProfileFit {
  std::vector<double> u;  // d-dimensional worker profile
  int32_t iterations = 0;
  bool converged = false;
  double gradient_norm = 0.0;
  bool singular = false;  // closed-form route only: rank-deficient system
};

// Objective for one worker, observed cells T:
//   L(u) = sum_{j in T} (a_j - u.v_j)^2 + 2 u.eta + lambda ||u||^2
// eta is the privacy noise; lambda is a tiny ridge keeping L bounded below
// when the profiles of the observed tasks do not span R^d.
inline double mf_objective(std::span<const AnswerEntry> row, const TaskProfileMatrix& profile,
                           std::span<const double> eta, double lambda,
                           std::span<const double> u) {
  const int32_t d = profile.d();
  double loss = 0.0;
  for (const auto& e : row) {
    auto col = profile.column(e.task);
    double pred = 0.0;
    for (int32_t k = 0; k < d; ++k) pred += u[static_cast<size_t>(k)] * col[static_cast<size_t>(k)];
    const double r = e.value - pred;
    loss += r * r;
  }
  for (int32_t k = 0; k < d; ++k) {
    loss += 2.0 * u[static_cast<size_t>(k)] * eta[static_cast<size_t>(k)] +
            lambda * u[static_cast<size_t>(k)] * u[static_cast<size_t>(k)];
  }
  return loss;
}

// grad L = 2 eta - 2 sum_j v_j (a_j - u.v_j) + 2 lambda u
inline std::vector<double> mf_gradient(std::span<const AnswerEntry> row,
                                       const TaskProfileMatrix& profile,
                                       std::span<const double> eta, double lambda,
                                       std::span<const double> u) {
  const int32_t d = profile.d();
  std::vector<double> g(static_cast<size_t>(d));
  for (int32_t k = 0; k < d; ++k) {
    g[static_cast<size_t>(k)] = 2.0 * (eta[static_cast<size_t>(k)] +
                                       lambda * u[static_cast<size_t>(k)]);
  }
  for (const auto& e : row) {
    auto col = profile.column(e.task);
    double pred = 0.0;
    for (int32_t k = 0; k < d; ++k) pred += u[static_cast<size_t>(k)] * col[static_cast<size_t>(k)];
    const double r = e.value - pred;
    for (int32_t k = 0; k < d; ++k) g[static_cast<size_t>(k)] -= 2.0 * col[static_cast<size_t>(k)] * r;
  }
  return g;
}

namespace detail {

inline Eigen::MatrixXd mf_normal_matrix(std::span<const AnswerEntry> row,
                                        const TaskProfileMatrix& profile, double lambda) {
  const int32_t d = profile.d();
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(d, d);
  for (const auto& e : row) {
    auto col = profile.column(e.task);
    Eigen::Map<const Eigen::VectorXd> v(col.data(), d);
    h.noalias() += v * v.transpose();
  }
  h.diagonal().array() += lambda;
  return h;
}

inline Eigen::VectorXd mf_rhs(std::span<const AnswerEntry> row, const TaskProfileMatrix& profile,
                              std::span<const double> eta) {
  const int32_t d = profile.d();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  for (const auto& e : row) {
    auto col = profile.column(e.task);
    Eigen::Map<const Eigen::VectorXd> v(col.data(), d);
    b.noalias() += e.value * v;
  }
  b -= Eigen::Map<const Eigen::VectorXd>(eta.data(), d);
  return b;
}

// Largest Hessian eigenvalue via fixed-count power iteration. The Hessian is
// 2 * (sum v v^T + lambda I); its top eigenvector is entrywise nonnegative, so
// the all-ones start never sits orthogonal to it.
inline double mf_lipschitz_estimate(const Eigen::MatrixXd& normal) {
  Eigen::VectorXd x = Eigen::VectorXd::Ones(normal.rows());
  x.normalize();
  double lam = 1.0;
  for (int it = 0; it < 20; ++it) {
    Eigen::VectorXd y = normal * x;
    lam = y.norm();
    if (lam == 0.0) return 2.0 * normal.trace() + 1.0;
    x = y / lam;
  }
  return 2.0 * lam;  // Hessian = 2 * normal
}

}  // namespace detail

// Gradient descent on L from an explicit start point with explicit noise;
// deterministic given its arguments. Building block for mf_fit_worker_profile
// and for direct cross-checks against the closed-form route.
inline WorkerProfileFit mf_minimize(std::span<const AnswerEntry> row,
                                    const TaskProfileMatrix& profile,
                                    std::span<const double> eta, const MfConfig& config,
                                    std::vector<double> u0) {
  const int32_t d = profile.d();
  if (static_cast<int32_t>(eta.size()) != d || static_cast<int32_t>(u0.size()) != d) {
    throw std::invalid_argument("eta and start point must be d-dimensional");
  }
  const Eigen::MatrixXd normal = detail::mf_normal_matrix(row, profile, config.lambda);
  double gamma = config.gamma;
  if (gamma <= 0.0) {
    const double lipschitz = detail::mf_lipschitz_estimate(normal);
    gamma = 1.0 / (2.0 * lipschitz);
  }

  WorkerProfileFit fit;
  fit.u = std::move(u0);
  for (int32_t it = 0; it < config.max_iter; ++it) {
    std::vector<double> g = mf_gradient(row, profile, eta, config.lambda, fit.u);
    double norm2 = 0.0;
    for (double v : g) norm2 += v * v;
    fit.gradient_norm = std::sqrt(norm2);
    fit.iterations = it;
    if (fit.gradient_norm <= config.tol) {
      fit.converged = true;
      return fit;
    }
    for (int32_t k = 0; k < d; ++k) fit.u[static_cast<size_t>(k)] -= gamma * g[static_cast<size_t>(k)];
  }
  fit.iterations = config.max_iter;
  // Report the gradient at the final iterate.
  std::vector<double> g = mf_gradient(row, profile, eta, config.lambda, fit.u);
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  fit.gradient_norm = std::sqrt(norm2);
  fit.converged = fit.gradient_norm <= config.tol;
  return fit;
}

// Independent second route to the same minimizer: solves the stationarity
// system (sum v v^T + lambda I) u = sum a_j v_j - eta directly. With
// lambda = 0 and a rank-deficient system it returns the minimum-norm
// least-squares solution and flags the singularity.
inline WorkerProfileFit mf_closed_form_profile(std::span<const AnswerEntry> row,
                                               const TaskProfileMatrix& profile,
                                               std::span<const double> eta, double lambda) {
  const int32_t d = profile.d();
  if (static_cast<int32_t>(eta.size()) != d) {
    throw std::invalid_argument("eta must be d-dimensional");
  }
  const Eigen::MatrixXd normal = detail::mf_normal_matrix(row, profile, lambda);
  const Eigen::VectorXd rhs = detail::mf_rhs(row, profile, eta);

  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(normal);
  cod.setThreshold(1e-12);
  WorkerProfileFit fit;
  fit.singular = cod.rank() < d;
  Eigen::VectorXd u = cod.solve(rhs);
  fit.u.assign(u.data(), u.data() + d);
  fit.converged = !fit.singular;
  std::vector<double> g = mf_gradient(row, profile, eta, lambda, fit.u);
  double norm2 = 0.0;
  for (double v : g) norm2 += v * v;
  fit.gradient_norm = std::sqrt(norm2);
  return fit;
}

// Worker-side entry point: draws eta (i.i.d. Laplace(|Gamma|/eps) per
// dimension), starts from a uniform [0,1)^d profile, runs gradient descent.
inline WorkerProfileFit mf_fit_worker_profile(std::span<const AnswerEntry> row,
                                              const TaskProfileMatrix& profile,
                                              const AnswerDomain& domain, double epsilon,
                                              const MfConfig& config, RandomSource& rng,
                                              NoiseMode noise = NoiseMode::kLaplace) {
  domain.validate();
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (row.empty()) throw std::invalid_argument("cannot fit a profile for a worker with no answers");
  const int32_t d = profile.d();
  const double scale = domain.size() / epsilon;
  std::vector<double> eta(static_cast<size_t>(d));
  for (auto& v : eta) v = draw_noise(noise, scale, rng);
  std::vector<double> u0(static_cast<size_t>(d));
  for (auto& v : u0) v = rng.uniform();
  return mf_minimize(row, profile, eta, config, std::move(u0));
}

// Released row: a_i = u V, a prediction for every task.
inline std::vector<double> mf_predict(std::span<const double> u, const TaskProfileMatrix& profile) {
  const int32_t d = profile.d();
  if (static_cast<int32_t>(u.size()) != d) throw std::invalid_argument("profile dimension mismatch");
  std::vector<double> out(static_cast<size_t>(profile.n()));
  for (int32_t j = 0; j < profile.n(); ++j) {
    auto col = profile.column(j);
    double pred = 0.0;
    for (int32_t k = 0; k < d; ++k) pred += u[static_cast<size_t>(k)] * col[static_cast<size_t>(k)];
    out[static_cast<size_t>(j)] = pred;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Matrix-level application.
// ---------------------------------------------------------------------------

struct PerturbResult {
  AnswerMatrix matrix;
  // MF only: workers whose gradient descent hit the iteration cap.
  std::vector<int32_t> nonconverged_workers;
};

// Applies the configured mechanism row by row. Worker i runs on its own
// stream seeded with config.seed XOR i, so rows can be perturbed in any order
// (or concurrently) with identical results. Real noise only; the zero-noise
// hook exists solely on the row-level functions.
inline PerturbResult perturb_matrix(const AnswerMatrix& input, const AnswerDomain& domain,
                                    const MechanismConfig& config) {
  domain.validate();
  config.validate();
  const int32_t m = input.workers();
  const int32_t n = input.tasks();
  const auto clamp_row = [&](std::vector<AnswerEntry>& row) {
    if (!config.clamp) return;
    for (auto& e : row) e.value = std::clamp(e.value, domain.min, domain.max);
  };

  std::vector<std::vector<AnswerEntry>> rows(static_cast<size_t>(m));
  PerturbResult result;

  std::optional<TaskProfileMatrix> profile;
  if (config.kind == MechanismKind::kMf) {
    RandomSource curator(splitmix64(config.seed + 0x632BE59BD9B4E019ULL));
    profile.emplace(mf_generate_task_profile(config.mf.resolve_d(n), n, curator));
  }

  for (int32_t i = 0; i < m; ++i) {
    RandomSource rng(config.seed ^ static_cast<uint64_t>(i));
    auto row = input.row(i);
    std::vector<AnswerEntry>& out = rows[static_cast<size_t>(i)];
    switch (config.kind) {
      case MechanismKind::kNone:
        out.assign(row.begin(), row.end());
        break;
      case MechanismKind::kLp: {
        std::vector<double> dense =
            lp_perturb_row(row, n, domain, config.epsilon, config.replacement, rng);
        out.reserve(static_cast<size_t>(n));
        for (int32_t j = 0; j < n; ++j) out.push_back({j, dense[static_cast<size_t>(j)]});
        clamp_row(out);
        break;
      }
      case MechanismKind::kRr:
        out = rr_perturb_row(row, n, domain, config.epsilon, rng);
        break;
      case MechanismKind::kRrlp:
        out = rrlp_perturb_row(row, n, domain, config.eps1(), config.eps2(), rng);
        clamp_row(out);
        break;
      case MechanismKind::kMf: {
        if (row.empty()) break;  // no answers, nothing to fit or release
        WorkerProfileFit fit = mf_fit_worker_profile(row, *profile, domain, config.epsilon,
                                                     config.mf, rng);
        if (!fit.converged) result.nonconverged_workers.push_back(i);
        std::vector<double> dense = mf_predict(fit.u, *profile);
        out.reserve(static_cast<size_t>(n));
        for (int32_t j = 0; j < n; ++j) out.push_back({j, dense[static_cast<size_t>(j)]});
        clamp_row(out);
        break;
      }
    }
  }
  result.matrix = AnswerMatrix(n, std::move(rows), input.worker_ids(), input.task_ids());
  return result;
}

}  // namespace ldpcrowd

#endif  // LDPCROWD_MECHANISMS_HPP_
