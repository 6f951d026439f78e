#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dsl/theory/selection.hpp"

// Monte Carlo counterpart of the saddle-point theory: expert-labeled
// Gaussian data, probe construction, margin-based subset selection,
// max-margin training, and generalization measurement.

namespace dsl::sim {

using dsl::theory::SelectionStrategy;
using dsl::theory::StrategyKind;

struct ExpertModel {
  Eigen::VectorXd weights;  // ||weights|| = sqrt(d)
  int d = 0;
};

struct LabeledSet {
  Eigen::MatrixXd inputs;   // n x d
  Eigen::VectorXi labels;   // +-1
  int n = 0;
  int d = 0;
};

struct MarginProfile {
  Eigen::VectorXd margins;  // m_i = probe.(y_i x_i)
  Eigen::VectorXd probe;
  SelectionStrategy selection;
  std::vector<int> kept_indices;
};

enum class ProbeMode { ConditionedGaussian, TrainedEpochs };

struct SimConfig {
  int d = 200;
  double alpha_tot = 4.0;   // real samples per parameter
  double f = 1.0;           // fraction kept
  double gamma_probe = 0.0; // radians (ConditionedGaussian mode)
  ProbeMode probe_mode = ProbeMode::ConditionedGaussian;
  int probe_epochs = 2;     // TrainedEpochs mode
  StrategyKind strategy_kind = StrategyKind::KeepRandom;
  bool absolute_margin = false;
  int trials = 100;
  uint64_t master_seed = 0;
  double max_margin_tol = 1e-6;
  bool with_holdout = true; // 20*d holdout for the empirical error
  int jobs = 1;
};

struct TrialResult {
  int trial = 0;
  double R = 0.0;
  double kappa = 0.0;
  double epsilon_analytic = 0.0;
  std::optional<double> epsilon_empirical;
  double probe_gamma_achieved = 0.0;
  uint64_t seed = 0;
};

struct SimResult {
  double mean_epsilon = 0.0;
  std::optional<double> std_error;          // undefined for trials == 1
  double mean_epsilon_empirical = 0.0;
  std::optional<double> std_error_empirical;
  double mean_kappa = 0.0;
  std::vector<TrialResult> per_trial;
  SimConfig config_echo;
};

struct MaxMarginResult {
  Eigen::VectorXd weights;  // unit norm
  double kappa = 0.0;       // min_i y_i w.x_i at unit norm
  int iterations = 0;
  double optimality_gap = 0.0;  // certified |kappa* - kappa| bound
};

class SimError : public std::runtime_error {
 public:
  explicit SimError(const std::string& m) : std::runtime_error(m) {}
};

// Expert direction uniform on the sphere of radius sqrt(d).
ExpertModel sample_expert(int d, uint64_t seed);

// i.i.d. standard Gaussian inputs labeled by the expert's sign; exact
// zero margins are resampled so every sample has positive expert margin.
LabeledSet generate_set(const ExpertModel& expert, int n, uint64_t seed);

// Gaussian vector conditioned to sit at angle gamma to the expert
// (exact by construction), scaled to norm sqrt(d).
Eigen::VectorXd make_probe(const ExpertModel& expert, double gamma_probe,
                           uint64_t seed);

// Classical perceptron rule over `epochs` passes with a seeded shuffle.
Eigen::VectorXd train_probe(const LabeledSet& set, int epochs, uint64_t seed);

MarginProfile compute_margins(const Eigen::VectorXd& probe, const LabeledSet& set);

// Keeps exactly round(f*n) samples: smallest margins for keep-hardest,
// largest for keep-easiest, a uniform draw for keep-random.  Ties break
// by index.  Fills profile.kept_indices as a side effect of selection.
LabeledSet select_subset(MarginProfile& profile, const LabeledSet& set, double f,
                         StrategyKind kind, uint64_t seed,
                         bool absolute_margin = false);

// Hard-margin separator through the origin.  Greedy dual coordinate
// ascent that repeatedly reinforces the current minimum-margin sample
// with the exact line-search step; terminates when the certified bracket
// around the optimal margin is narrower than tol.
MaxMarginResult train_max_margin(const LabeledSet& set, double tol = 1e-6);

struct ErrorMeasure {
  double R;
  double epsilon_analytic;
  std::optional<double> epsilon_empirical;
};
ErrorMeasure measure_error(const Eigen::VectorXd& student, const ExpertModel& expert,
                           const LabeledSet* holdout = nullptr);

TrialResult run_trial(const SimConfig& config, int trial);
SimResult run_experiment(const SimConfig& config);

}  // namespace dsl::sim
