#pragma once

#include "behave/grassmann.hpp"
#include "behave/lti.hpp"
#include "behave/predictor.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace behave {

/// Perturbation-sweep experiment. Defaults reproduce the reference setup:
/// the built-in 2-state model, T = 30 offline samples, T_sim = 50 measured
/// samples, N = 100 perturbed behaviors and noise-to-signal ratio 0.02.
///
/// Seeds: the offline input uses `data_seed` (retrying with data_seed + k if
/// it is not persistently exciting), the measured input uses
/// data_seed + 1000003. Offline noise uses `noise_seed`, measured noise
/// noise_seed + 1. Perturbation n uses perturb_seed + n.
struct ExperimentConfig {
  StateSpaceModel<double> model = reference_model();
  Eigen::Index t_ini = 4;
  Eigen::Index t_f = 2;
  Eigen::Index offline_length = 30;
  Eigen::Index sim_length = 50;
  Eigen::Index perturbations = 100;
  double sigma = 0.02;
  double kappa_max = 0.9;
  /// When non-empty, overrides the evenly spaced grid; size must equal N.
  std::vector<double> kappa_grid;
  std::uint64_t data_seed = 1;
  std::uint64_t noise_seed = 2;
  std::uint64_t perturb_seed = 3;
  std::string output_dir = ".";
  unsigned threads = 1;

  void validate() const;
  BlockDims dims() const;
  /// Target chordal distance of perturbation n in 1..N.
  double target_kappa(Eigen::Index n) const;
};

/// Reads `key = value` lines ('#' starts a comment). Keys: model, Tini, Tf,
/// T, T_sim, N, sigma, kappa_max, kappa_grid, data_seed, noise_seed,
/// perturb_seed, output_dir, threads. A relative model path is resolved
/// against `base_dir`.
ExperimentConfig parse_config(std::istream& in, const std::string& source,
                              const std::string& base_dir = ".");
ExperimentConfig read_config_file(const std::string& path);

/// One (n, t) sample of the sweep. `bound` is empty when the one-step bound's
/// hypothesis kappa <= sigma_min(Mhat)/(2 sqrt2) fails.
struct TrialRecord {
  Eigen::Index n = 0;
  double kappa = 0;
  Eigen::Index t = 0;
  double prediction_error = 0;
  std::optional<double> bound;
  double sigma_min_mhat = 0;
};

/// Nominal quantities shared by every trial.
struct ExperimentSetup {
  BehaviorBasis<double> basis;
  Trajectory<double> measured;
  RollingPrediction<double> baseline;
};

ExperimentSetup prepare_experiment(const ExperimentConfig& config);

struct TrialResult {
  Eigen::Index n = 0;
  double kappa = 0;  // measured chordal distance d(U, Uhat_n)
  double sigma_min_mhat = 0;
  double norm_uyf1 = 0;
  RollingPrediction<double> perturbed;
  std::vector<TrialRecord> records;
};

TrialResult run_trial(const ExperimentConfig& config,
                      const ExperimentSetup& setup, Eigen::Index n);

struct SummaryRow {
  Eigen::Index n = 0;
  double kappa = 0;
  double avg_error = 0;
  std::optional<double> avg_bound;
};

struct ExperimentResult {
  std::vector<TrialResult> trials;  // ordered by n
  std::vector<SummaryRow> summary;
};

/// Runs all N trials, on `config.threads` workers; output is independent of
/// the thread count.
ExperimentResult run_experiment(const ExperimentConfig& config);

SummaryRow summarize(const TrialResult& trial);

void write_trials_csv(std::ostream& out, const ExperimentResult& result);
void write_summary_csv(std::ostream& out, const ExperimentResult& result);
/// Per-t trace for one trial: t,baseline,perturbed,error,bound (baseline and
/// perturbed become baseline_i / perturbed_i when p > 1).
void write_single_csv(std::ostream& out, const ExperimentSetup& setup,
                      const TrialResult& trial);

}  // namespace behave
