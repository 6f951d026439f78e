#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "dsl/distill/distill.hpp"
#include "dsl/distill/model.hpp"

// Sample-difficulty metrics over an ensemble of trained models: the
// misclassification fraction chi, the ensemble-averaged per-sample
// gradient norm, and their correlation report.

namespace dsl::difficulty {

using dsl::distill::Dataset;
using dsl::distill::ToyModel;

struct Ensemble {
  std::vector<ToyModel> models;
  std::vector<uint64_t> member_seeds;
  int count() const { return int(models.size()); }
};

// Each member trains from its own seed (init, bootstrap subsample, and
// minibatch order) for a fixed step budget, so members disagree near the
// class boundaries.
Ensemble build_ensemble(const Dataset& train, int count, int steps,
                        int batch, double eta, uint64_t seed);

// Fraction of ensemble members misclassifying (x, y).
double sample_difficulty(const Eigen::VectorXd& x, int y, const Ensemble& ens);

// Mean over members of the per-sample loss-gradient norm.
double gradn_score(const Eigen::VectorXd& x, int y, const Ensemble& ens);

double pearson(const std::vector<double>& a, const std::vector<double>& b);
// Average-rank Spearman correlation.
double spearman(const std::vector<double>& a, const std::vector<double>& b);

struct DifficultyRow {
  int index = 0;
  double chi = 0.0;
  double gradn = 0.0;
  double mean_loss = 0.0;
};

struct DifficultyReport {
  std::vector<DifficultyRow> rows;
  // Correlations are left unset when a score vector is constant.
  std::optional<double> pearson_chi_gradn;
  std::optional<double> spearman_chi_gradn;
  std::optional<double> pearson_chi_loss;
  std::optional<double> spearman_chi_loss;
};

DifficultyReport correlation_report(const Dataset& set, const Ensemble& ens);

// out[0] = series[0]; out[t] = decay*out[t-1] + (1-decay)*series[t].
std::vector<double> ema_smooth(const std::vector<double>& series, double decay);

}  // namespace dsl::difficulty
