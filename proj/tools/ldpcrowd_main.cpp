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
// ldpcrowd: simulate privacy-preserving crowdsourced answer collection.
//
// Subcommands: generate | perturb | infer | evaluate | bound | audit |
// experiment. Exit codes: 0 success, 1 operation failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "ldpcrowd/ldpcrowd.hpp"

namespace {

using namespace ldpcrowd;

struct CommonOptions {
  uint64_t seed = 0;
  double domain_min = 0.0;
  double domain_max = 9.0;
  double epsilon = 1.0;
  double eps1_frac = 0.1;
  int32_t mf_d = 0;
  double mf_gamma = 0.0;
  double mf_lambda = 1e-6;
  std::string lp_replacement = "uniform";
  bool clamp = false;
  std::string out;
  std::string format = "json";

  AnswerDomain domain() const { return {domain_min, domain_max}; }

  ReplacementStrategy replacement() const {
    if (lp_replacement == "uniform") return ReplacementStrategy::uniform();
    const std::string prefix = "constant:";
    if (lp_replacement.rfind(prefix, 0) == 0) {
      return ReplacementStrategy::constant_value(std::stod(lp_replacement.substr(prefix.size())));
    }
    throw CLI::ValidationError("--lp-replacement",
                               "expected 'uniform' or 'constant:<value>', got '" +
                                   lp_replacement + "'");
  }

  MechanismConfig mechanism_config(MechanismKind kind) const {
    MechanismConfig mc;
    mc.kind = kind;
    mc.epsilon = epsilon;
    mc.eps1_fraction = eps1_frac;
    mc.replacement = replacement();
    mc.clamp = clamp;
    mc.mf.d = mf_d;
    mc.mf.gamma = mf_gamma;
    mc.mf.lambda = mf_lambda;
    mc.seed = seed;
    return mc;
  }
};

// Every subcommand takes the full common set; flags irrelevant to a
// subcommand are accepted and ignored so sweep scripts can share argument
// lists.
void add_common(CLI::App* cmd, CommonOptions* o) {
  cmd->add_option("--seed", o->seed, "Master seed (env LDPCROWD_SEED)")
      ->envname("LDPCROWD_SEED");
  cmd->add_option("--domain-min", o->domain_min, "Smallest answer option");
  cmd->add_option("--domain-max", o->domain_max, "Largest answer option");
  cmd->add_option("--epsilon", o->epsilon, "Privacy budget per cell");
  cmd->add_option("--eps1-frac", o->eps1_frac,
                  "Fraction of the budget spent on the rr+lp class stage");
  cmd->add_option("--mf-d", o->mf_d, "Latent dimension (0: tasks/10)");
  cmd->add_option("--mf-gamma", o->mf_gamma, "Gradient step size (0: 1/(2L))");
  cmd->add_option("--mf-lambda", o->mf_lambda, "Ridge term of the factorization objective");
  cmd->add_option("--lp-replacement", o->lp_replacement,
                  "NULL conversion: uniform | constant:<value>");
  cmd->add_flag("--clamp", o->clamp, "Clamp real-valued outputs into the domain");
  cmd->add_option("--out", o->out, "Output file or directory");
  cmd->add_option("--format", o->format, "Output format: json | csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

std::vector<WorkerMixComponent> parse_worker_mix(const std::string& text) {
  // fraction:sigma pairs, comma separated, e.g. 0.5:1,0.5:5
  std::vector<WorkerMixComponent> mix;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw CLI::ValidationError("--worker-mix", "expected fraction:sigma pairs");
    }
    mix.push_back({std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1))});
  }
  if (mix.empty()) throw CLI::ValidationError("--worker-mix", "must be nonempty");
  return mix;
}

std::vector<double> parse_double_list(const std::string& text, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw CLI::ValidationError(flag, "must be nonempty");
  return out;
}

void write_text(const std::string& out_path, const std::string& text) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + out_path);
  out << text;
}

void emit(const CommonOptions& o, const nlohmann::json& j, const std::string& csv) {
  write_text(o.out, o.format == "csv" ? csv : j.dump(2) + "\n");
}

InferenceOptions inference_options(const CommonOptions& o, double tol, int32_t max_iter) {
  InferenceOptions opts;
  opts.tol = tol;
  opts.max_iter = max_iter;
  opts.empty_task_truth = o.domain().midpoint();
  return opts;
}

int run(int argc, char** argv) {
  CLI::App app{"Privacy-preserving crowdsourced answer collection simulator"};
  app.require_subcommand(1);

  // generate ---------------------------------------------------------------
  CommonOptions gen_opts;
  int32_t gen_workers = 200;
  int32_t gen_tasks = 50;
  double gen_sparsity = 0.5;
  double gen_truth_center = 0.0;
  std::string gen_mix = "0.5:1,0.5:5";
  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset bundle");
  add_common(gen, &gen_opts);
  gen->add_option("--workers,-m", gen_workers, "Worker count");
  gen->add_option("--tasks,-n", gen_tasks, "Task count");
  gen->add_option("--sparsity", gen_sparsity, "Probability a cell stays NULL");
  gen->add_option("--truth-center", gen_truth_center, "Center of the truth distribution");
  gen->add_option("--worker-mix", gen_mix, "fraction:sigma pairs, e.g. 0.5:1,0.5:5");
  gen->callback([&] {
    if (gen_opts.out.empty()) throw CLI::RequiredError("--out");
    SyntheticSpec spec;
    spec.workers = gen_workers;
    spec.tasks = gen_tasks;
    spec.domain = gen_opts.domain();
    spec.truth_center = gen_truth_center;
    spec.worker_mix = parse_worker_mix(gen_mix);
    spec.sparsity = gen_sparsity;
    spec.seed = gen_opts.seed;
    save_dataset(generate_synthetic(spec), gen_opts.out);
    std::cout << "wrote dataset bundle to " << gen_opts.out << "\n";
  });

  // perturb ----------------------------------------------------------------
  CommonOptions pert_opts;
  std::string pert_answers;
  std::string pert_mechanism;
  auto* pert = app.add_subcommand("perturb", "Perturb an answer matrix with a mechanism");
  add_common(pert, &pert_opts);
  pert->add_option("--answers", pert_answers, "Input answers.csv")->required();
  pert->add_option("--mechanism", pert_mechanism, "none | lp | rr | rrlp | mf")->required();
  pert->callback([&] {
    if (pert_opts.out.empty()) throw CLI::RequiredError("--out");
    const MechanismKind kind = mechanism_from_string(pert_mechanism);
    const AnswerMatrix input = load_answers_csv(pert_answers, pert_opts.domain());
    const PerturbResult result =
        perturb_matrix(input, pert_opts.domain(), pert_opts.mechanism_config(kind));
    save_answers_csv(result.matrix, pert_opts.out);
    if (!result.nonconverged_workers.empty()) {
      std::cerr << "warning: " << result.nonconverged_workers.size()
                << " worker fits hit the iteration cap\n";
    }
  });

  // infer ------------------------------------------------------------------
  CommonOptions inf_opts;
  std::string inf_answers;
  double inf_tol = 1e-6;
  int32_t inf_max_iter = 100;
  auto* inf = app.add_subcommand("infer", "Infer task truths from an answer matrix");
  add_common(inf, &inf_opts);
  inf->add_option("--answers", inf_answers, "Input answers.csv")->required();
  inf->add_option("--tol", inf_tol, "Convergence tolerance on truth movement");
  inf->add_option("--max-iter", inf_max_iter, "Iteration cap");
  inf->callback([&] {
    const AnswerMatrix input = load_answers_csv(inf_answers);
    const InferenceResult result =
        infer_truth(input, inference_options(inf_opts, inf_tol, inf_max_iter));
    std::ostringstream csv;
    csv << "task_id,truth\n";
    for (int32_t j = 0; j < input.tasks(); ++j) {
      const std::string id = input.task_ids().empty()
                                 ? "t" + std::to_string(j)
                                 : input.task_ids()[static_cast<size_t>(j)];
      csv << id << ',' << detail::format_double(result.truths[static_cast<size_t>(j)]) << '\n';
    }
    emit(inf_opts, to_json(result), csv.str());
  });

  // evaluate ---------------------------------------------------------------
  CommonOptions ev_opts;
  std::string ev_answers, ev_perturbed, ev_truth;
  double ev_tol = 1e-6;
  int32_t ev_max_iter = 100;
  auto* ev = app.add_subcommand("evaluate", "MAE change between original and perturbed matrices");
  add_common(ev, &ev_opts);
  ev->add_option("--answers", ev_answers, "Original answers.csv")->required();
  ev->add_option("--perturbed", ev_perturbed, "Perturbed answers.csv")->required();
  ev->add_option("--truth", ev_truth, "Ground truth.csv")->required();
  ev->add_option("--tol", ev_tol, "Convergence tolerance on truth movement");
  ev->add_option("--max-iter", ev_max_iter, "Iteration cap");
  ev->callback([&] {
    const AnswerMatrix original = load_answers_csv(ev_answers);
    const AnswerMatrix perturbed = load_answers_csv(ev_perturbed);
    const GroundTruth truth = load_truth_csv(ev_truth, original);
    const EvaluationReport report = evaluate_mae_change(
        original, perturbed, truth, inference_options(ev_opts, ev_tol, ev_max_iter));
    std::ostringstream csv;
    csv << "mae_original,mae_perturbed,mae_change\n"
        << detail::format_double(report.mae_original) << ','
        << detail::format_double(report.mae_perturbed) << ','
        << detail::format_double(report.mae_change) << '\n';
    emit(ev_opts, to_json(report), csv.str());
  });

  // bound ------------------------------------------------------------------
  CommonOptions bd_opts;
  std::string bd_mechanism;
  std::string bd_data;
  int32_t bd_workers = 1;
  int32_t bd_tasks = 1;
  double bd_sigma = 1.0;
  double bd_s = 1.0;
  double bd_mu = 0.0;
  std::string bd_dump_terms;
  auto* bd = app.add_subcommand("bound", "Analytic expected-MAE bound for a mechanism");
  add_common(bd, &bd_opts);
  bd->add_option("--mechanism", bd_mechanism, "none | lp | rr | rrlp | mf (none: no-privacy baseline)")
      ->required();
  bd->add_option("--data", bd_data,
                 "Dataset bundle directory; replaces the scalar worker/task parameters");
  bd->add_option("--workers,-m", bd_workers, "Worker count (scalar mode)");
  bd->add_option("--tasks,-n", bd_tasks, "Task count (scalar mode)");
  bd->add_option("--sigma", bd_sigma, "Per-worker answer noise (scalar mode)");
  bd->add_option("--s", bd_s, "Per-worker non-NULL fraction (scalar mode)");
  bd->add_option("--mu", bd_mu, "True value for every task (scalar mode)");
  bd->add_option("--dump-terms", bd_dump_terms, "Write the per-(worker,task) terms to this CSV");
  bd->callback([&] {
    const MechanismKind kind = mechanism_from_string(bd_mechanism);
    BoundInputs inputs;
    if (!bd_data.empty()) {
      const Dataset ds = load_dataset(bd_data);
      inputs.qualities.assign(static_cast<size_t>(ds.answers.workers()),
                              1.0 / ds.answers.workers());
      inputs.sigmas = ds.sigmas;
      inputs.non_null_fractions = sparsity_profile(ds.answers).per_worker;
      inputs.truths = ds.truths;
      inputs.domain = ds.spec.domain;
    } else {
      inputs = BoundInputs::uniform(static_cast<size_t>(bd_workers),
                                    static_cast<size_t>(bd_tasks), bd_sigma, bd_s, bd_mu,
                                    bd_opts.domain());
    }
    const bool dump = !bd_dump_terms.empty();
    BoundReport report;
    switch (kind) {
      case MechanismKind::kNone:
        report = baseline_bound(inputs);
        break;
      case MechanismKind::kLp:
        report = lp_bound(inputs, bd_opts.epsilon, dump);
        break;
      case MechanismKind::kRr:
        report = rr_bound(inputs, bd_opts.epsilon, dump);
        break;
      case MechanismKind::kRrlp:
        report = rrlp_bound(inputs, bd_opts.eps1_frac * bd_opts.epsilon,
                            (1.0 - bd_opts.eps1_frac) * bd_opts.epsilon, dump);
        break;
      case MechanismKind::kMf: {
        const int32_t n = static_cast<int32_t>(inputs.task_count());
        MfConfig mf;
        mf.d = bd_opts.mf_d;
        report = mf_bound(inputs, bd_opts.epsilon, mf.resolve_d(n));
        break;
      }
    }
    if (dump && !report.terms.empty()) {
      std::ofstream terms(bd_dump_terms, std::ios::binary);
      if (!terms) throw std::runtime_error("cannot write " + bd_dump_terms);
      terms << "worker,task,term\n";
      const size_t n = inputs.task_count();
      for (size_t i = 0; i < inputs.worker_count(); ++i) {
        for (size_t j = 0; j < n; ++j) {
          terms << i << ',' << j << ',' << detail::format_double(report.terms[i * n + j]) << '\n';
        }
      }
    }
    std::ostringstream csv;
    csv << "mechanism,bound\n" << to_string(kind) << ',' << detail::format_double(report.bound)
        << '\n';
    nlohmann::json j = to_json(report);
    if (!report.terms.empty()) j.erase("terms");  // dumped separately
    emit(bd_opts, j, csv.str());
  });

  // audit ------------------------------------------------------------------
  CommonOptions au_opts;
  std::string au_mechanism;
  int64_t au_trials = 1000000;
  auto* au = app.add_subcommand("audit", "Empirical privacy-ratio audit of a mechanism");
  add_common(au, &au_opts);
  au->add_option("--mechanism", au_mechanism, "lp | rr | rrlp")->required();
  au->add_option("--trials", au_trials, "Trials per input value (>= 1e5)");
  au->callback([&] {
    const MechanismKind kind = mechanism_from_string(au_mechanism);
    const PrivacyAuditReport report = empirical_privacy_ratio(
        au_opts.mechanism_config(kind), au_opts.domain(), au_trials, au_opts.seed);
    std::ostringstream csv;
    csv << "mechanism,epsilon,max_ratio,max_ratio_upper,null_bucket_ratio\n"
        << to_string(kind) << ',' << detail::format_double(report.epsilon_budget) << ','
        << detail::format_double(report.max_ratio) << ','
        << detail::format_double(report.max_ratio_upper) << ','
        << detail::format_double(report.null_bucket_ratio) << '\n';
    emit(au_opts, to_json(report), csv.str());
  });

  // experiment ---------------------------------------------------------------
  CommonOptions ex_opts;
  std::string ex_mechanisms = "lp,rr,rrlp,mf";
  std::string ex_epsilons = "0.1,1,5";
  std::string ex_sparsities = "0.1,0.5,0.9";
  int32_t ex_reps = 10;
  int32_t ex_workers = 200;
  int32_t ex_tasks = 50;
  double ex_truth_center = 0.0;
  std::string ex_mix = "0.5:1,0.5:5";
  std::string ex_data;
  int32_t ex_jobs = 1;
  auto* ex = app.add_subcommand("experiment", "Sweep mechanisms x epsilon x sparsity x reps");
  add_common(ex, &ex_opts);
  ex->add_option("--mechanisms", ex_mechanisms, "Comma list of none,lp,rr,rrlp,mf");
  ex->add_option("--epsilons", ex_epsilons, "Comma list of budgets");
  ex->add_option("--sparsities", ex_sparsities, "Comma list of NULL probabilities");
  ex->add_option("--reps", ex_reps, "Repetitions per grid point");
  ex->add_option("--workers,-m", ex_workers, "Synthetic worker count");
  ex->add_option("--tasks,-n", ex_tasks, "Synthetic task count");
  ex->add_option("--truth-center", ex_truth_center, "Synthetic truth center");
  ex->add_option("--worker-mix", ex_mix, "Synthetic fraction:sigma pairs");
  ex->add_option("--data", ex_data, "Run on a dataset bundle instead of synthetic data");
  ex->add_option("--jobs", ex_jobs, "Parallel repetitions");
  ex->callback([&] {
    if (ex_opts.out.empty()) throw CLI::RequiredError("--out");
    ExperimentConfig config;
    config.base.workers = ex_workers;
    config.base.tasks = ex_tasks;
    config.base.domain = ex_opts.domain();
    config.base.truth_center = ex_truth_center;
    config.base.worker_mix = parse_worker_mix(ex_mix);
    std::stringstream ss(ex_mechanisms);
    std::string item;
    config.mechanisms.clear();
    while (std::getline(ss, item, ',')) config.mechanisms.push_back(mechanism_from_string(item));
    config.epsilons = parse_double_list(ex_epsilons, "--epsilons");
    config.repetitions = ex_reps;
    config.seed = ex_opts.seed;
    config.eps1_fraction = ex_opts.eps1_frac;
    config.replacement = ex_opts.replacement();
    config.clamp = ex_opts.clamp;
    config.mf.d = ex_opts.mf_d;
    config.mf.gamma = ex_opts.mf_gamma;
    config.mf.lambda = ex_opts.mf_lambda;
    config.jobs = ex_jobs;
    if (!ex_data.empty()) {
      config.dataset = load_dataset(ex_data);
      config.sparsities = {1.0 - sparsity_profile(config.dataset->answers).overall};
    } else {
      config.sparsities = parse_double_list(ex_sparsities, "--sparsities");
    }

    const ExperimentResult result = run_experiment(config);
    namespace fs = std::filesystem;
    fs::create_directories(ex_opts.out);
    {
      std::ofstream csv(fs::path(ex_opts.out) / "sweep.csv", std::ios::binary);
      if (!csv) throw std::runtime_error("cannot write sweep.csv");
      write_sweep_csv(result, csv);
    }
    {
      std::ofstream summary(fs::path(ex_opts.out) / "summary.json", std::ios::binary);
      if (!summary) throw std::runtime_error("cannot write summary.json");
      summary << summarize_experiment(result).dump(2) << '\n';
    }
    size_t failed = 0;
    for (const auto& r : result.rows) {
      if (!r.ok) ++failed;
    }
    std::cout << result.rows.size() << " rows written to " << ex_opts.out;
    if (failed > 0) std::cout << " (" << failed << " failed)";
    std::cout << "\n";
    if (failed > 0) throw std::runtime_error(std::to_string(failed) + " repetitions failed");
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
