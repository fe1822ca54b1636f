// Command-line pipeline for the crowdsourced rating models: simulate data,
// fit a variant, run posterior predictive checks and PSIS-LOO, compare
// variants, and replicate the probabilistic-training experiment. Every
// command takes --seed and writes byte-identical artifacts on reruns.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>

#include "crowdrate/crowdrate.hpp"
#include "crowdrate/trainlab.hpp"

namespace fs = std::filesystem;
using namespace crowdrate;

namespace {

// stable string hash (FNV-1a) so per-model seeds do not depend on the
// standard library
std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

void add_sampler_options(CLI::App* cmd, SamplerConfig& cfg) {
  cmd->add_option("--chains", cfg.chains, "number of chains")->capture_default_str();
  cmd->add_option("--warmup", cfg.warmup_iters, "warmup iterations per chain")
      ->capture_default_str();
  cmd->add_option("--samples", cfg.sampling_iters, "sampling iterations per chain")
      ->capture_default_str();
  cmd->add_option("--target-accept", cfg.target_accept, "dual-averaging target")
      ->capture_default_str();
  cmd->add_option("--max-depth", cfg.max_tree_depth, "maximum trajectory doublings")
      ->capture_default_str();
  cmd->add_option("--init-radius", cfg.init_radius, "diffuse initialization radius")
      ->capture_default_str();
  cmd->add_option_function<std::string>(
         "--algorithm",
         [&cfg](const std::string& v) {
           cfg.algorithm = v == "static" ? SamplerConfig::Algorithm::static_hmc
                                         : SamplerConfig::Algorithm::nuts;
         },
         "nuts (default) or static")
      ->check(CLI::IsMember({"nuts", "static"}));
}

struct SimulateArgs {
  std::string model = "Full";
  int items = 100;
  int raters = 5;
  double pi = -1.0;  // negative: draw from the prior
  int ratings_per_rater = -1;
  int spam = 0;
  bool allow_adversarial = false;
  std::uint64_t seed = 1;
  std::string out = "sim";
};

void run_simulate(const SimulateArgs& a) {
  auto parsed = parse_model_name(a.model);
  if (parsed.redirected) {
    std::cerr << "note: " << parsed.requested << " is a redundant parameterization; using "
              << parsed.spec.name << "\n";
  }
  ModelSpec spec = parsed.spec;
  spec.allow_adversarial = a.allow_adversarial;
  PopulationSpec pop;
  pop.num_items = a.items;
  pop.num_raters = a.raters;
  if (a.pi >= 0.0) pop.pi = a.pi;
  pop.ratings_per_rater = a.ratings_per_rater;
  const PopulationSpec final_pop = a.spam > 0 ? inject_spam(pop, a.spam, a.seed) : pop;
  const auto sim = simulate_dataset(spec, final_pop, a.seed);

  fs::create_directories(a.out);
  io::write_ratings_csv(fs::path(a.out) / "ratings.csv", sim.data);
  io::write_truth_z(fs::path(a.out) / "truth_z.csv", sim.data, sim.z);
  io::write_truth_params(fs::path(a.out) / "truth_params.json", spec, sim.truth);
  std::cout << "wrote " << sim.data.num_ratings() << " ratings for " << sim.data.num_items
            << " items x " << sim.data.num_raters << " raters to " << a.out << "\n";
}

struct FitArgs {
  std::string model = "Full";
  std::string data;
  std::string out = "fit";
  bool allow_adversarial = false;
  SamplerConfig sampler;
};

FitResult run_fit(const FitArgs& a, bool quiet = false) {
  RunConfig cfg;
  cfg.model = a.model;
  cfg.sampler = a.sampler;
  cfg.data_path = a.data;
  cfg.out_dir = a.out;
  cfg.allow_adversarial = a.allow_adversarial;
  const auto data = io::load_ratings_csv(a.data);
  const auto result = cli_fit(cfg, data);
  if (!quiet) {
    std::cout << "fit " << a.model << ": " << result.draws.chains << " chains x "
              << result.draws.iters << " draws, max split-Rhat "
              << result.diagnostics.max_split_rhat << ", " << result.diagnostics.divergences
              << " divergences\n";
    for (const auto& w : result.diagnostics.warnings) std::cout << "warning: " << w << "\n";
  }
  return result;
}

struct PpcArgs {
  std::string fit_dir;
  std::string data;
  std::string out;  // default: fit_dir
  std::uint64_t seed = 1;
};

PpcReport run_ppc(const PpcArgs& a, bool quiet = false) {
  const auto art = io::load_fit(a.fit_dir);
  const auto data = io::load_ratings_csv(a.data);
  if (data.num_items != art.num_items || data.num_raters != art.num_raters)
    throw DataError("data shape does not match the fit artifacts");
  const auto rep = ppc_report(art.spec, art.draws, data, a.seed);
  const fs::path out = a.out.empty() ? fs::path(a.fit_dir) : fs::path(a.out);
  fs::create_directories(out);
  io::atomic_write(out / "ppc.json", io::ppc_report_json(rep).dump(2) + "\n");
  io::atomic_write(out / "vote_histogram.csv", io::histogram_csv_text(rep.histogram));
  if (!quiet) {
    std::cout << "rater p-value " << rep.rater_p_value << ", ratings p-value "
              << rep.ratings_p_value << "\n";
  }
  return rep;
}

struct LooArgs {
  std::string fit_dir;
  std::string data;
  std::string out;
  std::string unit = "rating";
  std::uint64_t seed = 1;  // accepted for interface uniformity; LOO is deterministic
};

LooReport run_loo(const LooArgs& a, bool quiet = false) {
  const auto art = io::load_fit(a.fit_dir);
  const auto data = io::load_ratings_csv(a.data);
  if (data.num_items != art.num_items || data.num_raters != art.num_raters)
    throw DataError("data shape does not match the fit artifacts");
  const LooUnit unit = a.unit == "item" ? LooUnit::item : LooUnit::rating;
  const auto rep = elpd_loo(art.spec, art.draws, data, unit);
  const fs::path out = a.out.empty() ? fs::path(a.fit_dir) : fs::path(a.out);
  fs::create_directories(out);
  io::atomic_write(out / "loo.json", io::loo_report_json(rep).dump(2) + "\n");
  if (!quiet) {
    std::cout << "elpd_loo " << rep.elpd_loo << " (" << rep.n_high_k
              << " units with Pareto k > 0.7)\n";
  }
  return rep;
}

struct CompareArgs {
  std::string models = "all";
  std::string data;
  std::string out = "compare";
  bool allow_adversarial = false;
  std::uint64_t seed = 1;
  SamplerConfig sampler;
};

void run_compare(const CompareArgs& a) {
  std::vector<std::string> names;
  if (a.models == "all") {
    for (const auto& s : enumerate_variants()) names.push_back(s.name);
  } else {
    std::string cur;
    for (char ch : a.models + ",") {
      if (ch == ',') {
        if (!cur.empty()) names.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
  }
  fs::create_directories(a.out);
  std::vector<io::ComparisonRow> rows;
  for (const auto& name : names) {
    io::ComparisonRow row;
    row.model = name;
    try {
      FitArgs fa;
      fa.model = name;
      fa.data = a.data;
      fa.out = (fs::path(a.out) / name).string();
      fa.allow_adversarial = a.allow_adversarial;
      fa.sampler = a.sampler;
      fa.sampler.seed = splitmix64(a.seed) ^ fnv1a(name);
      const auto fit_result = run_fit(fa, /*quiet=*/true);

      PpcArgs pa;
      pa.fit_dir = fa.out;
      pa.data = a.data;
      pa.seed = a.seed;
      const auto ppc = run_ppc(pa, /*quiet=*/true);

      LooArgs la;
      la.fit_dir = fa.out;
      la.data = a.data;
      const auto loo = run_loo(la, /*quiet=*/true);

      row.rater_p_value = ppc.rater_p_value;
      row.ratings_p_value = ppc.ratings_p_value;
      row.elpd_loo = loo.elpd_loo;
      row.divergences = fit_result.diagnostics.divergences;
      row.max_split_rhat = fit_result.diagnostics.max_split_rhat;
      std::cout << name << ": rater p " << ppc.rater_p_value << ", ratings p "
                << ppc.ratings_p_value << ", elpd_loo " << loo.elpd_loo << "\n";
    } catch (const Error& e) {
      row.failed = true;
      row.error = e.what();
      std::cerr << name << " failed: " << e.what() << "\n";
    }
    rows.push_back(row);
  }
  io::atomic_write(fs::path(a.out) / "comparison.csv", io::comparison_csv_text(rows));
  io::atomic_write(fs::path(a.out) / "comparison.json",
                   io::comparison_json(rows).dump(2) + "\n");
}

struct TrainArgs {
  int trials = 32;
  int dims = 32;
  int rows = 1024;
  double rho = 0.9;
  std::uint64_t seed = 1;
  std::string out = "train";
  SamplerConfig sampler;
};

void run_train(const TrainArgs& a) {
  ExperimentConfig cfg;
  cfg.trials = a.trials;
  cfg.dims = a.dims;
  cfg.rows = a.rows;
  cfg.rho = a.rho;
  cfg.seed = a.seed;
  cfg.sampler = a.sampler;
  const auto results = run_experiment(cfg);
  const auto summary = summarize_experiment(results);
  fs::create_directories(a.out);
  io::atomic_write(fs::path(a.out) / "train_results.csv", io::train_results_csv_text(results));
  io::atomic_write(fs::path(a.out) / "train_summary.json",
                   io::train_summary_json(summary).dump(2) + "\n");
  for (const auto& s : summary) {
    std::cout << strategy_name(s.strategy) << " / " << estimator_name(s.estimator)
              << ": median L2 " << s.median << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bayesian crowdsourced rating models: fit, check, compare"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* csim = app.add_subcommand("simulate", "simulate a rating dataset from a variant");
  csim->add_option("--model", sim.model, "variant name (Full, A..ABCDE)")->capture_default_str();
  csim->add_option("--items", sim.items, "number of items")->capture_default_str();
  csim->add_option("--raters", sim.raters, "number of raters")->capture_default_str();
  csim->add_option("--pi", sim.pi, "fixed prevalence (default: drawn from the prior)");
  csim->add_option("--ratings-per-rater", sim.ratings_per_rater,
                   "per-rater budget (default: complete design)");
  csim->add_option("--spam", sim.spam, "number of spam raters to inject")->capture_default_str();
  csim->add_flag("--allow-adversarial", sim.allow_adversarial,
                 "draw rater abilities without the cooperative constraint");
  csim->add_option("--seed", sim.seed, "random seed")->capture_default_str();
  csim->add_option("--out", sim.out, "output directory")->capture_default_str();
  csim->callback([&] { run_simulate(sim); });

  FitArgs fit_args;
  auto* cfit = app.add_subcommand("fit", "fit a variant and persist draws and diagnostics");
  cfit->add_option("--model", fit_args.model, "variant name")->capture_default_str();
  cfit->add_option("--data", fit_args.data, "ratings CSV (item,rater,rating)")->required();
  cfit->add_option("--out", fit_args.out, "output directory")->capture_default_str();
  cfit->add_flag("--allow-adversarial", fit_args.allow_adversarial,
                 "lift the cooperative constraint");
  cfit->add_option("--seed", fit_args.sampler.seed, "random seed")->capture_default_str();
  add_sampler_options(cfit, fit_args.sampler);
  cfit->callback([&] { run_fit(fit_args); });

  PpcArgs ppc_args;
  auto* cppc = app.add_subcommand("ppc", "posterior predictive checks from fit artifacts");
  cppc->add_option("--fit", ppc_args.fit_dir, "fit output directory")->required();
  cppc->add_option("--data", ppc_args.data, "the ratings CSV used for the fit")->required();
  cppc->add_option("--out", ppc_args.out, "output directory (default: the fit directory)");
  cppc->add_option("--seed", ppc_args.seed, "random seed")->capture_default_str();
  cppc->callback([&] { run_ppc(ppc_args); });

  LooArgs loo_args;
  auto* cloo = app.add_subcommand("loo", "PSIS-LOO expected log predictive density");
  cloo->add_option("--fit", loo_args.fit_dir, "fit output directory")->required();
  cloo->add_option("--data", loo_args.data, "the ratings CSV used for the fit")->required();
  cloo->add_option("--out", loo_args.out, "output directory (default: the fit directory)");
  cloo->add_option("--unit", loo_args.unit, "leave-one-out unit: rating or item")
      ->check(CLI::IsMember({"rating", "item"}))
      ->capture_default_str();
  cloo->add_option("--seed", loo_args.seed, "accepted for uniformity; LOO is deterministic");
  cloo->callback([&] { run_loo(loo_args); });

  CompareArgs cmp;
  auto* ccmp = app.add_subcommand("compare", "fit + ppc + loo across variants");
  ccmp->add_option("--models", cmp.models, "comma list of variants, or `all`")
      ->capture_default_str();
  ccmp->add_option("--data", cmp.data, "ratings CSV")->required();
  ccmp->add_option("--out", cmp.out, "output directory")->capture_default_str();
  ccmp->add_flag("--allow-adversarial", cmp.allow_adversarial,
                 "lift the cooperative constraint");
  ccmp->add_option("--seed", cmp.seed, "random seed")->capture_default_str();
  add_sampler_options(ccmp, cmp.sampler);
  ccmp->callback([&] { run_compare(cmp); });

  TrainArgs train;
  auto* ctr = app.add_subcommand("train-experiment",
                                 "training-target strategies on synthetic regressions");
  ctr->add_option("--trials", train.trials, "number of trials")->capture_default_str();
  ctr->add_option("--dims", train.dims, "regression dimension")->capture_default_str();
  ctr->add_option("--rows", train.rows, "training rows")->capture_default_str();
  ctr->add_option("--rho", train.rho, "adjacent-predictor correlation")->capture_default_str();
  ctr->add_option("--seed", train.seed, "random seed")->capture_default_str();
  ctr->add_option("--out", train.out, "output directory")->capture_default_str();
  add_sampler_options(ctr, train.sampler);
  ctr->callback([&] { run_train(train); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
