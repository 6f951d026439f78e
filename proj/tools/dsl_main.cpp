// dsl: command-line driver for the distillation scaling laboratory.
//
// Subcommands: theory, simulate, compare, distill, difficulty.  Every
// command writes its numeric outputs plus a manifest.json carrying the
// resolved configuration, the master seed, and per-file checksums.
// DSL_LOG={quiet,info,debug} controls stderr verbosity.

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dsl/difficulty/difficulty.hpp"
#include "dsl/distill/distill.hpp"
#include "dsl/math/special.hpp"
#include "dsl/report/csv.hpp"
#include "dsl/report/manifest.hpp"
#include "dsl/sim/perceptron.hpp"
#include "dsl/sim/rng.hpp"
#include "dsl/theory/saddle.hpp"
#include "dsl/version.hpp"

namespace {

using dsl::report::format_double;
using dsl::report::Table;

int log_level() {  // 0 quiet, 1 info, 2 debug
  const char* env = std::getenv("DSL_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

void log_info(const std::string& msg) {
  if (log_level() >= 1) std::cerr << "[dsl] " << msg << "\n";
}
void log_debug(const std::string& msg) {
  if (log_level() >= 2) std::cerr << "[dsl:debug] " << msg << "\n";
}

struct GlobalOpts {
  std::string out_dir = "out";
  uint64_t seed = 1;
  int jobs = 1;
  std::string format = "csv";
  bool allow_partial = false;
};

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

void ensure_out_dir(const std::string& dir) {
  std::filesystem::create_directories(dir);
}

void emit_table(const GlobalOpts& g, dsl::report::RunManifest& manifest,
                const std::string& stem, const Table& table) {
  const std::string csv_name = stem + ".csv";
  dsl::report::write_file_atomic(g.out_dir + "/" + csv_name, table.to_csv());
  manifest.add_output(g.out_dir, csv_name);
  if (g.format == "json") {
    const std::string json_name = stem + ".json";
    dsl::report::write_file_atomic(g.out_dir + "/" + json_name, table.to_json());
    manifest.add_output(g.out_dir, json_name);
  }
}

std::vector<dsl::theory::StrategyKind> parse_strategies(
    const std::vector<std::string>& names) {
  std::vector<dsl::theory::StrategyKind> kinds;
  for (const auto& s : names) kinds.push_back(dsl::theory::strategy_kind_from_string(s));
  return kinds;
}

// --- minimal CSV reading for compare ---------------------------------
std::vector<std::map<std::string, std::string>> read_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open CSV: " + path);
  std::string line;
  std::vector<std::string> header;
  std::vector<std::map<std::string, std::string>> rows;
  auto split = [](const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
      if (c == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (c != '\r') {
        cur += c;
      }
    }
    out.push_back(cur);
    return out;
  };
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (header.empty()) {
      header = split(line);
      continue;
    }
    const auto cells = split(line);
    if (cells.size() != header.size())
      throw std::runtime_error("ragged CSV row in " + path);
    std::map<std::string, std::string> row;
    for (size_t i = 0; i < header.size(); ++i) row[header[i]] = cells[i];
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string grid_key(const std::string& alpha, const std::string& f,
                     const std::string& gamma, const std::string& strategy) {
  // Normalize numeric text so 0.5 and 0.50 collide.
  auto norm = [](const std::string& s) { return format_double(std::stod(s)); };
  return norm(alpha) + "|" + norm(f) + "|" + norm(gamma) + "|" + strategy;
}

// --- subcommand: theory ----------------------------------------------
int cmd_theory(const GlobalOpts& g, const std::vector<double>& alphas,
               const std::vector<double>& fs, const std::vector<double>& gammas_deg,
               const std::vector<std::string>& strategy_names, bool absolute_margin,
               double tol, const std::string& config_echo) {
  Stopwatch watch;
  ensure_out_dir(g.out_dir);
  std::vector<dsl::theory::GridCell> cells;
  for (double f : fs)
    for (double gdeg : gammas_deg)
      for (auto kind : parse_strategies(strategy_names))
        for (double a : alphas)
          cells.push_back({a, f, gdeg * dsl::math::kPi / 180.0, kind, absolute_margin});
  log_info("theory sweep over " + std::to_string(cells.size()) + " cells");
  dsl::theory::SolveOptions opts;
  opts.tol = tol;
  const auto points = dsl::theory::sweep(cells, opts);

  Table table({"alpha_syn", "f", "gamma_deg", "strategy", "R", "rho", "kappa",
               "epsilon", "residual", "converged"});
  int failed = 0;
  for (size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!p.converged) {
      ++failed;
      log_info("cell not converged: " + p.diagnostic);
    }
    table.add_row({format_double(p.alpha_syn), format_double(p.f),
                   format_double(cells[i].gamma_probe * 180.0 / dsl::math::kPi),
                   p.strategy.label(), format_double(p.R), format_double(p.rho),
                   format_double(p.kappa), format_double(p.epsilon),
                   format_double(p.residual), p.converged ? "1" : "0"});
  }

  dsl::report::RunManifest manifest;
  manifest.tool_version = dsl::kVersion;
  manifest.command = "theory";
  manifest.master_seed = g.seed;
  manifest.config_echo = config_echo;
  emit_table(g, manifest, "theory", table);
  manifest.wall_time_seconds = watch.seconds();
  manifest.write(g.out_dir);
  if (failed > 0 && !g.allow_partial) {
    std::cerr << failed << " grid cell(s) did not converge\n";
    return 2;
  }
  return 0;
}

// --- subcommand: simulate --------------------------------------------
int cmd_simulate(const GlobalOpts& g, int d, int trials,
                 const std::vector<double>& alphas, const std::vector<double>& fs,
                 const std::vector<double>& gammas_deg,
                 const std::vector<std::string>& strategy_names, bool absolute_margin,
                 const std::string& probe_mode, int probe_epochs, double mm_tol,
                 bool no_holdout, const std::string& config_echo) {
  Stopwatch watch;
  ensure_out_dir(g.out_dir);
  Table trials_table({"trial", "d", "alpha_tot", "f", "gamma_deg", "strategy", "R",
                      "kappa", "epsilon_analytic", "epsilon_empirical", "seed"});
  Table summary({"alpha_syn", "f", "gamma_deg", "strategy", "d", "alpha_tot",
                 "trials", "mean_epsilon", "std_error", "mean_epsilon_empirical",
                 "std_error_empirical", "mean_kappa"});

  int grid_index = 0;
  for (double f : fs)
    for (double gdeg : gammas_deg)
      for (auto kind : parse_strategies(strategy_names))
        for (double a : alphas) {
          dsl::sim::SimConfig cfg;
          cfg.d = d;
          cfg.alpha_tot = a / f;
          cfg.f = f;
          cfg.gamma_probe = gdeg * dsl::math::kPi / 180.0;
          cfg.probe_mode = (probe_mode == "trained")
                               ? dsl::sim::ProbeMode::TrainedEpochs
                               : dsl::sim::ProbeMode::ConditionedGaussian;
          cfg.probe_epochs = probe_epochs;
          cfg.strategy_kind = kind;
          cfg.absolute_margin = absolute_margin;
          cfg.trials = trials;
          // Distinct master seed per grid point, derived from the CLI seed.
          cfg.master_seed = dsl::sim::derive_seed(g.seed, 7000, uint64_t(grid_index));
          cfg.max_margin_tol = mm_tol;
          cfg.with_holdout = !no_holdout;
          cfg.jobs = g.jobs;
          log_info("simulate alpha_syn=" + format_double(a) + " f=" + format_double(f) +
                   " gamma=" + format_double(gdeg) + " " + dsl::theory::to_string(kind));
          const auto res = dsl::sim::run_experiment(cfg);
          const std::string label =
              dsl::theory::to_string(kind) + (absolute_margin ? "-abs" : "");
          for (const auto& tr : res.per_trial)
            trials_table.add_row(
                {std::to_string(tr.trial), std::to_string(d),
                 format_double(cfg.alpha_tot), format_double(f), format_double(gdeg),
                 label, format_double(tr.R), format_double(tr.kappa),
                 format_double(tr.epsilon_analytic),
                 tr.epsilon_empirical ? format_double(*tr.epsilon_empirical) : "",
                 std::to_string(tr.seed)});
          summary.add_row(
              {format_double(a), format_double(f), format_double(gdeg), label,
               std::to_string(d), format_double(cfg.alpha_tot), std::to_string(trials),
               format_double(res.mean_epsilon),
               res.std_error ? format_double(*res.std_error) : "",
               format_double(res.mean_epsilon_empirical),
               res.std_error_empirical ? format_double(*res.std_error_empirical) : "",
               format_double(res.mean_kappa)});
          ++grid_index;
        }

  dsl::report::RunManifest manifest;
  manifest.tool_version = dsl::kVersion;
  manifest.command = "simulate";
  manifest.master_seed = g.seed;
  manifest.config_echo = config_echo;
  emit_table(g, manifest, "sim_trials", trials_table);
  emit_table(g, manifest, "sim_summary", summary);
  manifest.wall_time_seconds = watch.seconds();
  manifest.write(g.out_dir);
  return 0;
}

// --- subcommand: compare ---------------------------------------------
int cmd_compare(const GlobalOpts& g, const std::string& theory_csv,
                const std::string& sim_csv, const std::string& config_echo) {
  Stopwatch watch;
  ensure_out_dir(g.out_dir);
  const auto theory_rows = read_csv(theory_csv);
  const auto sim_rows = read_csv(sim_csv);
  std::map<std::string, const std::map<std::string, std::string>*> theory_by_key;
  for (const auto& r : theory_rows)
    theory_by_key[grid_key(r.at("alpha_syn"), r.at("f"), r.at("gamma_deg"),
                           r.at("strategy"))] = &r;

  Table table({"alpha_syn", "f", "gamma_deg", "strategy", "epsilon_theory",
               "epsilon_sim", "std_error", "delta", "z", "pass"});
  int matched = 0, passed = 0, unmatched = 0;
  double max_abs_delta = 0.0;
  for (const auto& r : sim_rows) {
    const std::string key = grid_key(r.at("alpha_syn"), r.at("f"), r.at("gamma_deg"),
                                     r.at("strategy"));
    auto it = theory_by_key.find(key);
    if (it == theory_by_key.end()) {
      log_info("sim grid point without matching theory row: " + key);
      ++unmatched;
      continue;
    }
    const double eps_th = std::stod(it->second->at("epsilon"));
    const double eps_sim = std::stod(r.at("mean_epsilon"));
    const std::string se_text = r.at("std_error");
    const double se = se_text.empty() ? 0.0 : std::stod(se_text);
    const double delta = eps_th - eps_sim;
    max_abs_delta = std::max(max_abs_delta, std::fabs(delta));
    const bool pass = (se > 0.0) ? std::fabs(delta) <= 2.0 * se
                                 : std::fabs(delta) <= 1e-12;
    const double z = (se > 0.0) ? delta / se : 0.0;
    ++matched;
    if (pass) ++passed;
    table.add_row({r.at("alpha_syn"), r.at("f"), r.at("gamma_deg"), r.at("strategy"),
                   format_double(eps_th), format_double(eps_sim), se_text,
                   format_double(delta), format_double(z), pass ? "PASS" : "FAIL"});
  }
  if (matched == 0) {
    std::cerr << "compare: empty join between theory and simulation tables\n";
    return 1;
  }

  dsl::report::RunManifest manifest;
  manifest.tool_version = dsl::kVersion;
  manifest.command = "compare";
  manifest.master_seed = g.seed;
  manifest.config_echo = config_echo;
  emit_table(g, manifest, "compare", table);
  manifest.wall_time_seconds = watch.seconds();
  manifest.write(g.out_dir);

  std::cout << "compare: " << passed << "/" << matched << " points within 2 standard errors"
            << (unmatched ? (", " + std::to_string(unmatched) + " unmatched (excluded)") : "")
            << ", max |delta epsilon| = " << format_double(max_abs_delta) << "\n";
  return passed == matched ? 0 : 2;
}

// --- subcommand: distill ---------------------------------------------
nlohmann::json synthetic_to_json(const dsl::distill::SyntheticSet& syn,
                                 const std::string& mode, uint64_t seed,
                                 double lambda0, const std::string& schedule) {
  nlohmann::json j;
  j["ipc"] = syn.ipc;
  j["classes"] = syn.C;
  j["d"] = syn.d;
  j["mode"] = mode;
  j["seed"] = seed;
  j["lambda0"] = lambda0;
  j["schedule"] = schedule;
  auto feats = nlohmann::json::array();
  for (const auto& F : syn.features) {
    auto cls = nlohmann::json::array();
    for (int i = 0; i < F.rows(); ++i) {
      auto row = nlohmann::json::array();
      for (int k = 0; k < F.cols(); ++k) row.push_back(F(i, k));
      cls.push_back(row);
    }
    feats.push_back(cls);
  }
  j["features"] = feats;
  return j;
}

Table trace_to_table(const dsl::distill::DistillTrace& trace) {
  Table t({"step", "lambda", "matching_loss", "reg_value", "grad_norm_syn",
           "test_accuracy"});
  for (const auto& r : trace.rows)
    t.add_row({std::to_string(r.step), format_double(r.lambda),
               format_double(r.matching_loss), format_double(r.reg_value),
               format_double(r.grad_norm_syn), format_double(r.test_accuracy)});
  return t;
}

double mean_last_half_grad_norm(const dsl::distill::DistillTrace& trace) {
  const size_t n = trace.rows.size();
  double s = 0.0;
  size_t cnt = 0;
  for (size_t i = n / 2; i < n; ++i) {
    s += trace.rows[i].grad_norm_syn;
    ++cnt;
  }
  return cnt ? s / double(cnt) : 0.0;
}

int cmd_distill(const GlobalOpts& g, const std::string& mode,
                const std::string& dataset_name, int n_per_class, int data_d,
                double sep, dsl::distill::MatchConfig cfg,
                const std::vector<uint64_t>& seeds, int bank_checkpoints,
                double bank_eta, const std::string& config_echo) {
  Stopwatch watch;
  ensure_out_dir(g.out_dir);
  dsl::report::RunManifest manifest;
  manifest.tool_version = dsl::kVersion;
  manifest.command = "distill";
  manifest.master_seed = g.seed;
  manifest.config_echo = config_echo;

  Table summary({"seed", "mode", "variant", "final_accuracy",
                 "grad_norm_last_half", "matching_loss_last_half"});
  int failures = 0;
  std::vector<double> acc_base, acc_sdc, gn_base, gn_sdc;

  for (uint64_t seed : seeds) {
    try {
      const auto make_data = [&](uint64_t s) {
        return dataset_name == "xor4"
                   ? dsl::distill::make_xor4(n_per_class, data_d, sep, s)
                   : dsl::distill::make_blobs2(n_per_class, data_d, sep, s);
      };
      const auto train = make_data(dsl::sim::derive_seed(g.seed, 1, seed));
      const auto eval = make_data(dsl::sim::derive_seed(g.seed, 2, seed));

      dsl::distill::MatchConfig base_cfg = cfg;
      base_cfg.lambda0 = 0.0;
      base_cfg.lambda_schedule = dsl::distill::LambdaSchedule::constant(0.0);

      dsl::distill::DistillResult base, sdc;
      if (mode == "tm") {
        const auto bank = dsl::distill::build_expert_bank(
            train.X, train.y, train.C, 1, bank_checkpoints, bank_eta,
            dsl::sim::derive_seed(g.seed, 3, seed));
        base = dsl::distill::distill_tm(bank, train, base_cfg, seed, &eval);
        sdc = dsl::distill::distill_tm(bank, train, cfg, seed, &eval);
      } else {
        base = dsl::distill::distill_gm(train, base_cfg, seed, &eval);
        sdc = dsl::distill::distill_gm(train, cfg, seed, &eval);
      }

      const std::vector<std::pair<std::string, const dsl::distill::DistillResult*>>
          variants = {{"baseline", &base}, {"sdc", &sdc}};
      for (const auto& [variant, res] : variants) {
        const std::string stem = "trace_seed" + std::to_string(seed) + "_" + variant;
        emit_table(g, manifest, stem, trace_to_table(res->trace));
        const std::string syn_name =
            "syn_seed" + std::to_string(seed) + "_" + variant + ".json";
        const bool is_sdc = (variant == "sdc");
        dsl::report::write_file_atomic(
            g.out_dir + "/" + syn_name,
            synthetic_to_json(res->synthetic, mode, seed,
                              is_sdc ? cfg.lambda0 : 0.0,
                              is_sdc ? cfg.lambda_schedule.label() : "constant(0)")
                    .dump(2) +
                "\n");
        manifest.add_output(g.out_dir, syn_name);

        double mls = 0.0;
        size_t cnt = 0;
        for (size_t i = res->trace.rows.size() / 2; i < res->trace.rows.size(); ++i) {
          mls += res->trace.rows[i].matching_loss;
          ++cnt;
        }
        summary.add_row({std::to_string(seed), mode, variant,
                         format_double(res->final_accuracy),
                         format_double(mean_last_half_grad_norm(res->trace)),
                         format_double(cnt ? mls / double(cnt) : 0.0)});
      }
      acc_base.push_back(base.final_accuracy);
      acc_sdc.push_back(sdc.final_accuracy);
      gn_base.push_back(mean_last_half_grad_norm(base.trace));
      gn_sdc.push_back(mean_last_half_grad_norm(sdc.trace));
    } catch (const std::exception& e) {
      log_info("seed " + std::to_string(seed) + " failed: " + e.what());
      ++failures;
    }
  }

  emit_table(g, manifest, "distill_summary", summary);
  if (!acc_base.empty()) {
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / double(v.size());
    };
    Table agg({"seeds", "mode", "mean_final_acc_baseline", "mean_final_acc_sdc",
               "paired_acc_delta", "mean_grad_norm_baseline", "mean_grad_norm_sdc",
               "grad_norm_delta"});
    agg.add_row({std::to_string(acc_base.size()), mode, format_double(mean(acc_base)),
                 format_double(mean(acc_sdc)),
                 format_double(mean(acc_sdc) - mean(acc_base)),
                 format_double(mean(gn_base)), format_double(mean(gn_sdc)),
                 format_double(mean(gn_sdc) - mean(gn_base))});
    emit_table(g, manifest, "distill_aggregate", agg);
  }
  manifest.wall_time_seconds = watch.seconds();
  manifest.write(g.out_dir);
  return failures == 0 ? 0 : 2;
}

// --- subcommand: difficulty ------------------------------------------
int cmd_difficulty(const GlobalOpts& g, const std::string& dataset_name,
                   int n_per_class, int data_d, double sep, int members,
                   int member_steps, int batch, double eta,
                   const std::string& config_echo) {
  Stopwatch watch;
  ensure_out_dir(g.out_dir);
  const auto train = dataset_name == "xor4"
                         ? dsl::distill::make_xor4(n_per_class, data_d, sep,
                                                   dsl::sim::derive_seed(g.seed, 11))
                         : dsl::distill::make_blobs2(n_per_class, data_d, sep,
                                                     dsl::sim::derive_seed(g.seed, 11));
  const auto ens = dsl::difficulty::build_ensemble(train, members, member_steps,
                                                   batch, eta,
                                                   dsl::sim::derive_seed(g.seed, 12));
  const auto rep = dsl::difficulty::correlation_report(train, ens);

  Table table({"index", "chi", "gradn", "mean_loss"});
  for (const auto& r : rep.rows)
    table.add_row({std::to_string(r.index), format_double(r.chi),
                   format_double(r.gradn), format_double(r.mean_loss)});

  nlohmann::json j;
  auto put = [&](const char* k, const std::optional<double>& v) {
    if (v)
      j[k] = *v;
    else
      j[k] = "undefined";
  };
  put("pearson_chi_gradn", rep.pearson_chi_gradn);
  put("spearman_chi_gradn", rep.spearman_chi_gradn);
  put("pearson_chi_loss", rep.pearson_chi_loss);
  put("spearman_chi_loss", rep.spearman_chi_loss);
  j["ensemble"] = nlohmann::json{{"members", ens.count()},
                                 {"member_steps", member_steps},
                                 {"batch", batch},
                                 {"eta", eta},
                                 {"member_seeds", ens.member_seeds}};
  j["dataset"] = nlohmann::json{{"name", dataset_name},
                                {"n_per_class", n_per_class},
                                {"d", data_d},
                                {"sep", sep}};

  dsl::report::RunManifest manifest;
  manifest.tool_version = dsl::kVersion;
  manifest.command = "difficulty";
  manifest.master_seed = g.seed;
  manifest.config_echo = config_echo;
  emit_table(g, manifest, "difficulty", table);
  dsl::report::write_file_atomic(g.out_dir + "/difficulty_summary.json",
                                 j.dump(2) + "\n");
  manifest.add_output(g.out_dir, "difficulty_summary.json");
  manifest.wall_time_seconds = watch.seconds();
  manifest.write(g.out_dir);

  std::cout << "difficulty: spearman(chi, gradn) = "
            << (rep.spearman_chi_gradn ? format_double(*rep.spearman_chi_gradn)
                                       : std::string("undefined"))
            << ", spearman(chi, loss) = "
            << (rep.spearman_chi_loss ? format_double(*rep.spearman_chi_loss)
                                      : std::string("undefined"))
            << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distillation scaling laboratory"};
  app.set_config("--config", "", "read options from a config file");

  GlobalOpts g;
  bool print_defaults = false;
  app.add_option("--out", g.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", g.seed, "master seed")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads for independent units")
      ->capture_default_str();
  app.add_option("--format", g.format, "csv|json (json adds .json copies)")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  app.add_flag("--allow-partial", g.allow_partial,
               "exit 0 even when some grid cells fail");
  app.add_flag("--print-defaults", print_defaults,
               "print the fully resolved configuration and exit");

  // theory ------------------------------------------------------------
  auto* theory = app.add_subcommand("theory", "solve the saddle-point systems over a grid");
  std::vector<double> th_alpha{0.5, 1, 2, 4};
  std::vector<double> th_f{1.0};
  std::vector<double> th_gamma{0.0};
  std::vector<std::string> th_strategy{"keep-random"};
  bool th_abs = false;
  double th_tol = 1e-9;
  theory->add_option("--alpha", th_alpha, "alpha_syn grid")->delimiter(',')->capture_default_str();
  theory->add_option("--f", th_f, "kept fraction grid")->delimiter(',')->capture_default_str();
  theory->add_option("--gamma-deg", th_gamma, "probe angle grid (degrees)")
      ->delimiter(',')->capture_default_str();
  theory->add_option("--strategy", th_strategy,
                     "keep-hardest|keep-easiest|keep-random list")
      ->delimiter(',')->capture_default_str();
  theory->add_flag("--absolute-margin", th_abs, "rank margins by |z|");
  theory->add_option("--tol", th_tol, "residual tolerance")->capture_default_str();

  // simulate ------------------------------------------------------------
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo perceptron experiments");
  int sm_d = 200, sm_trials = 100, sm_probe_epochs = 2;
  std::vector<double> sm_alpha{1.0};
  std::vector<double> sm_f{1.0};
  std::vector<double> sm_gamma{0.0};
  std::vector<std::string> sm_strategy{"keep-random"};
  bool sm_abs = false, sm_no_holdout = false;
  std::string sm_probe_mode = "conditioned";
  double sm_mm_tol = 1e-6;
  simulate->add_option("--d", sm_d, "parameter dimension")->capture_default_str();
  simulate->add_option("--trials", sm_trials, "trials per grid point")->capture_default_str();
  simulate->add_option("--alpha", sm_alpha, "alpha_syn grid")->delimiter(',')->capture_default_str();
  simulate->add_option("--f", sm_f, "kept fraction grid")->delimiter(',')->capture_default_str();
  simulate->add_option("--gamma-deg", sm_gamma, "probe angle grid (degrees)")
      ->delimiter(',')->capture_default_str();
  simulate->add_option("--strategy", sm_strategy, "selection strategies")
      ->delimiter(',')->capture_default_str();
  simulate->add_flag("--absolute-margin", sm_abs, "rank margins by |z|");
  simulate->add_option("--probe-mode", sm_probe_mode, "conditioned|trained")
      ->check(CLI::IsMember({"conditioned", "trained"}))->capture_default_str();
  simulate->add_option("--probe-epochs", sm_probe_epochs,
                       "perceptron epochs for --probe-mode trained")->capture_default_str();
  simulate->add_option("--mm-tol", sm_mm_tol, "max-margin certificate tolerance")
      ->capture_default_str();
  simulate->add_flag("--no-holdout", sm_no_holdout, "skip the empirical holdout error");

  // compare -------------------------------------------------------------
  auto* compare = app.add_subcommand("compare", "join theory and simulation tables");
  std::string cp_theory, cp_sim;
  compare->add_option("--theory-csv", cp_theory, "theory sweep CSV")->required();
  compare->add_option("--sim-csv", cp_sim, "simulation summary CSV")->required();

  // distill -------------------------------------------------------------
  auto* distill = app.add_subcommand("distill", "matching-based distillation on toy data");
  std::string dt_mode = "gm", dt_dataset = "blob2", dt_schedule = "constant",
              dt_metric = "cosine-groupwise";
  int dt_npc = 256, dt_d = 16, dt_ipc = 2, dt_steps = 200, dt_T = 4, dt_M = 2, dt_N = 1,
      dt_batch_real = 32, dt_batch_syn = 0, dt_reg_exponent = 2,
      dt_bank_checkpoints = 12, dt_eval_train_steps = 200;
  double dt_sep = 2.4, dt_lambda = 0.002, dt_eta_model = 0.25, dt_eta_syn = 0.1,
         dt_bank_eta = 0.25, dt_eval_eta = 0.5;
  std::vector<uint64_t> dt_seeds{7};
  bool dt_reg_traj = false, dt_noise_init = false;
  distill->add_option("--mode", dt_mode, "gm|tm")->check(CLI::IsMember({"gm", "tm"}))
      ->capture_default_str();
  distill->add_option("--dataset", dt_dataset, "blob2|xor4")
      ->check(CLI::IsMember({"blob2", "xor4"}))->capture_default_str();
  distill->add_option("--n-per-class", dt_npc, "real samples per class")->capture_default_str();
  distill->add_option("--data-d", dt_d, "feature dimension")->capture_default_str();
  distill->add_option("--sep", dt_sep, "class separation scale")->capture_default_str();
  distill->add_option("--ipc", dt_ipc, "synthetic samples per class")->capture_default_str();
  distill->add_option("--lambda", dt_lambda, "regularization coefficient")->capture_default_str();
  distill->add_option("--schedule", dt_schedule,
                      "constant or log:<lambda_end>:<total_steps>")->capture_default_str();
  distill->add_option("--reg-exponent", dt_reg_exponent, "1 or 2")->capture_default_str();
  distill->add_option("--metric", dt_metric, "cosine-groupwise|l2")->capture_default_str();
  distill->add_option("--steps", dt_steps, "outer distillation steps")->capture_default_str();
  distill->add_option("--T", dt_T, "model updates per initialization (gm)")->capture_default_str();
  distill->add_option("--M", dt_M, "expert checkpoints ahead (tm)")->capture_default_str();
  distill->add_option("--N", dt_N, "student steps per segment (tm)")->capture_default_str();
  distill->add_option("--eta-model", dt_eta_model, "model learning rate")->capture_default_str();
  distill->add_option("--eta-syn", dt_eta_syn, "synthetic feature learning rate")
      ->capture_default_str();
  distill->add_option("--batch-real", dt_batch_real, "real batch per class")->capture_default_str();
  distill->add_option("--batch-syn", dt_batch_syn, "synthetic batch (0 = full)")
      ->capture_default_str();
  distill->add_option("--seeds", dt_seeds, "seed list (paired baseline/sdc per seed)")
      ->delimiter(',')->capture_default_str();
  distill->add_option("--bank-checkpoints", dt_bank_checkpoints,
                      "expert bank snapshots (tm)")->capture_default_str();
  distill->add_option("--bank-eta", dt_bank_eta, "expert bank learning rate (tm)")
      ->capture_default_str();
  distill->add_option("--eval-train-steps", dt_eval_train_steps,
                      "fresh-model training steps for evaluation")->capture_default_str();
  distill->add_option("--eval-eta", dt_eval_eta, "fresh-model learning rate")
      ->capture_default_str();
  distill->add_flag("--reg-along-trajectory", dt_reg_traj,
                    "average the tm regularizer along the inner steps");
  distill->add_flag("--noise-init", dt_noise_init,
                    "initialize synthetic features from Gaussian noise");

  // difficulty ------------------------------------------------------------
  auto* difficulty = app.add_subcommand("difficulty", "sample-difficulty correlation report");
  std::string df_dataset = "blob2";
  int df_npc = 400, df_d = 16, df_members = 20, df_steps = 60, df_batch = 32;
  double df_sep = 2.4, df_eta = 0.5;
  difficulty->add_option("--dataset", df_dataset, "blob2|xor4")
      ->check(CLI::IsMember({"blob2", "xor4"}))->capture_default_str();
  difficulty->add_option("--n-per-class", df_npc, "samples per class")->capture_default_str();
  difficulty->add_option("--data-d", df_d, "feature dimension")->capture_default_str();
  difficulty->add_option("--sep", df_sep, "class separation scale")->capture_default_str();
  difficulty->add_option("--members", df_members, "ensemble size")->capture_default_str();
  difficulty->add_option("--member-steps", df_steps, "training steps per member")
      ->capture_default_str();
  difficulty->add_option("--batch", df_batch, "minibatch size")->capture_default_str();
  difficulty->add_option("--eta", df_eta, "member learning rate")->capture_default_str();

  app.require_subcommand(0, 1);
  CLI11_PARSE(app, argc, argv);

  if (print_defaults) {
    std::cout << app.config_to_str(true, true);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::cout << app.help();
    return 1;
  }

  const std::string config_echo = app.config_to_str(true, false);
  try {
    if (theory->parsed())
      return cmd_theory(g, th_alpha, th_f, th_gamma, th_strategy, th_abs, th_tol,
                        config_echo);
    if (simulate->parsed())
      return cmd_simulate(g, sm_d, sm_trials, sm_alpha, sm_f, sm_gamma, sm_strategy,
                          sm_abs, sm_probe_mode, sm_probe_epochs, sm_mm_tol,
                          sm_no_holdout, config_echo);
    if (compare->parsed()) return cmd_compare(g, cp_theory, cp_sim, config_echo);
    if (distill->parsed()) {
      dsl::distill::MatchConfig cfg;
      cfg.lambda0 = dt_lambda;
      if (dt_schedule == "constant") {
        cfg.lambda_schedule = dsl::distill::LambdaSchedule::constant(dt_lambda);
      } else if (dt_schedule.rfind("log:", 0) == 0) {
        const auto rest = dt_schedule.substr(4);
        const auto colon = rest.find(':');
        if (colon == std::string::npos)
          throw CLI::ValidationError("--schedule", "expected log:<lambda_end>:<total>");
        cfg.lambda_schedule = dsl::distill::LambdaSchedule::logarithmic(
            dt_lambda, std::stod(rest.substr(0, colon)),
            std::stol(rest.substr(colon + 1)));
      } else {
        throw CLI::ValidationError("--schedule", "expected constant or log:<end>:<total>");
      }
      cfg.reg_exponent = dt_reg_exponent;
      cfg.distance_metric = dsl::distill::metric_from_string(dt_metric);
      cfg.steps = dt_steps;
      cfg.T = dt_T;
      cfg.M = dt_M;
      cfg.N = dt_N;
      cfg.eta_model = dt_eta_model;
      cfg.eta_syn = dt_eta_syn;
      cfg.batch_real = dt_batch_real;
      cfg.batch_syn = dt_batch_syn;
      cfg.ipc = dt_ipc;
      cfg.init = dt_noise_init ? dsl::distill::SynInit::GaussianNoise
                               : dsl::distill::SynInit::FromReal;
      cfg.reg_along_trajectory = dt_reg_traj;
      cfg.eval_train_steps = dt_eval_train_steps;
      cfg.eval_eta = dt_eval_eta;
      return cmd_distill(g, dt_mode, dt_dataset, dt_npc, dt_d, dt_sep, cfg, dt_seeds,
                         dt_bank_checkpoints, dt_bank_eta, config_echo);
    }
    if (difficulty->parsed())
      return cmd_difficulty(g, df_dataset, df_npc, df_d, df_sep, df_members, df_steps,
                            df_batch, df_eta, config_echo);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
