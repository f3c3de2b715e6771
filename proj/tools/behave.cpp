// behave: command-line front end for subspace prediction experiments.
//
// Exit codes: 0 success, 2 usage/config/parse error, 3 bound hypothesis
// violated, 4 numerical failure (rank deficiency, non-convergence).

#include "behave/bounds.hpp"
#include "behave/experiment.hpp"
#include "behave/grassmann.hpp"
#include "behave/io.hpp"
#include "behave/lti.hpp"
#include "behave/predictor.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>

namespace {

constexpr int kExitInput = 2;
constexpr int kExitHypothesis = 3;
constexpr int kExitNumerical = 4;

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw behave::InputError(path.string() + ": cannot open for writing");
  return out;
}

/// Writes via `emit` to `path`, or to stdout when `path` is empty.
template <typename Emit>
void write_to(const std::string& path, Emit&& emit) {
  if (path.empty()) {
    emit(std::cout);
    std::cout.flush();
  } else {
    auto out = open_output(path);
    emit(out);
  }
}

/// Any full-column-rank spanning matrix is accepted; it is replaced by an
/// orthonormal basis of the same column space.
behave::BehaviorBasis<double> load_basis(const std::string& path) {
  const auto x = behave::io::read_basis_file(path);
  try {
    return behave::BehaviorBasis<double>(x);
  } catch (const behave::InputError&) {
    return behave::orthonormal_basis(x, x.cols());
  }
}

struct ExperimentOptions {
  std::string config;
  std::string output_dir;
  unsigned threads = 0;
};

int run_experiment_cmd(const ExperimentOptions& opts) {
  auto config = behave::read_config_file(opts.config);
  if (!opts.output_dir.empty()) config.output_dir = opts.output_dir;
  if (opts.threads > 0) config.threads = opts.threads;
  const auto result = behave::run_experiment(config);
  const std::filesystem::path dir(config.output_dir);
  {
    auto out = open_output(dir / "trials.csv");
    behave::write_trials_csv(out, result);
  }
  {
    auto out = open_output(dir / "summary.csv");
    behave::write_summary_csv(out, result);
  }
  std::cerr << "wrote " << (dir / "trials.csv").string() << " and "
            << (dir / "summary.csv").string() << '\n';
  return 0;
}

struct SingleOptions {
  std::string config;
  long n = 0;
  std::string output;
};

int run_single_cmd(const SingleOptions& opts) {
  const auto config = behave::read_config_file(opts.config);
  const auto setup = behave::prepare_experiment(config);
  const auto trial = behave::run_trial(config, setup, opts.n);
  write_to(opts.output, [&](std::ostream& out) {
    behave::write_single_csv(out, setup, trial);
  });
  std::cerr << "n = " << trial.n << ", kappa = " << std::setprecision(12)
            << trial.kappa << ", sigma_min(Mhat) = " << trial.sigma_min_mhat
            << '\n';
  return 0;
}

int run_distance_cmd(const std::string& a, const std::string& b) {
  const auto ua = load_basis(a);
  const auto ub = load_basis(b);
  std::cout << std::setprecision(12) << behave::chordal_distance(ua, ub) << '\n';
  return 0;
}

int run_predict_cmd(const std::string& basis_path,
                    const std::string& context_path) {
  const auto basis = load_basis(basis_path);
  const auto ctx = behave::io::read_context_file(context_path, basis.dims());
  const auto pred = behave::predict_from_subspace(basis, ctx);
  const auto p = basis.dims().p;
  std::cout << 'k';
  for (Eigen::Index i = 0; i < p; ++i) std::cout << ",y_" << i;
  std::cout << '\n';
  for (Eigen::Index k = 0; k < basis.dims().t_f; ++k) {
    std::cout << k;
    for (Eigen::Index i = 0; i < p; ++i)
      std::cout << ',' << behave::io::format_double(pred.y_pred(k * p + i));
    std::cout << '\n';
  }
  std::cerr << "sigma_min(M) = " << behave::io::format_double(pred.sigma_min_regressor)
            << ", effective rank = " << pred.effective_rank << '\n';
  return 0;
}

struct BoundOptions {
  std::optional<double> gamma, alpha, beta;
  double kappa = 0;
  double b_norm = 0;
  bool one_step = false;
  std::optional<double> sigma_min, uyf1;
};

int run_bound_cmd(const BoundOptions& opts) {
  double value = 0;
  if (opts.one_step) {
    if (!opts.sigma_min || !opts.uyf1)
      throw behave::InputError("--one-step needs --sigma-min and --uyf1");
    value = behave::one_step_bound(*opts.sigma_min, *opts.uyf1, opts.kappa,
                                   opts.b_norm);
  } else {
    double g = 0;
    if (opts.gamma) {
      g = *opts.gamma;
    } else if (opts.alpha && opts.beta) {
      g = behave::gamma(*opts.alpha, *opts.beta);
    } else {
      throw behave::InputError("give --gamma, or both --alpha and --beta");
    }
    behave::BoundInputs<double> in;
    in.gamma = g;
    in.kappa = opts.kappa;
    in.b_norm = opts.b_norm;
    value = behave::lipschitz_bound(in);
  }
  std::cout << std::setprecision(12) << value << '\n';
  return 0;
}

struct SimulateOptions {
  std::string model;
  long length = 30;
  std::uint64_t seed = 1;
  double sigma = 0.0;
  std::uint64_t noise_seed = 2;
  std::string output;
};

int run_simulate_cmd(const SimulateOptions& opts) {
  const auto model = opts.model.empty() ? behave::reference_model()
                                        : behave::io::read_model_file(opts.model);
  if (opts.length < 1) throw behave::InputError("--length must be >= 1");
  behave::Rng rng(opts.seed);
  const auto inputs = rng.normal_matrix<double>(model.m(), opts.length);
  const auto traj = behave::simulate(
      model, inputs, behave::NoiseSpec::relative_gaussian(opts.sigma, opts.noise_seed));
  write_to(opts.output,
           [&](std::ostream& out) { behave::io::write_trajectory_csv(out, traj); });
  return 0;
}

struct BasisOptions {
  std::string trajectory;
  long t_ini = 0;
  long t_f = 0;
  long rank = 0;
  std::string output;
};

int run_basis_cmd(const BasisOptions& opts) {
  const auto traj = behave::io::read_trajectory_file(opts.trajectory);
  const auto data =
      behave::stacked_data_matrix(traj.inputs, traj.outputs, opts.t_ini, opts.t_f);
  const auto basis = behave::orthonormal_basis(data, opts.rank);
  write_to(opts.output, [&](std::ostream& out) {
    behave::io::write_basis(out, basis.partitioned());
  });
  return 0;
}

struct PerturbOptions {
  std::string basis;
  double kappa = 0;
  std::uint64_t seed = 0;
  std::string output;
};

int run_perturb_cmd(const PerturbOptions& opts) {
  const auto basis = load_basis(opts.basis);
  const auto moved = behave::perturb_subspace(basis, opts.kappa, opts.seed);
  write_to(opts.output, [&](std::ostream& out) {
    behave::io::write_basis(out, moved.partitioned());
  });
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Subspace prediction under behavioral perturbations"};
  app.require_subcommand(1);

  ExperimentOptions exp_opts;
  auto* exp_cmd = app.add_subcommand("experiment", "run the perturbation sweep");
  exp_cmd->add_option("--config", exp_opts.config, "config file")->required();
  exp_cmd->add_option("--output-dir", exp_opts.output_dir,
                      "override output_dir from the config");
  exp_cmd->add_option("--threads", exp_opts.threads, "override worker count");

  SingleOptions single_opts;
  auto* single_cmd =
      app.add_subcommand("single", "per-t trace for one perturbed behavior");
  single_cmd->add_option("--config", single_opts.config, "config file")->required();
  single_cmd->add_option("--n", single_opts.n, "perturbation index in 1..N")
      ->required();
  single_cmd->add_option("--output", single_opts.output, "CSV path (default stdout)");

  std::string dist_a, dist_b;
  auto* dist_cmd = app.add_subcommand("distance", "chordal distance of two bases");
  dist_cmd->add_option("A", dist_a, "basis file")->required();
  dist_cmd->add_option("B", dist_b, "basis file")->required();

  std::string pred_basis, pred_context;
  auto* pred_cmd = app.add_subcommand("predict", "evaluate the subspace predictor");
  pred_cmd->add_option("--basis", pred_basis, "basis file")->required();
  pred_cmd->add_option("--context", pred_context, "context file")->required();

  BoundOptions bound_opts;
  auto* bound_cmd = app.add_subcommand("bound", "evaluate a prediction error bound");
  bound_cmd->add_option("--gamma", bound_opts.gamma, "gamma = min(1, beta)/alpha");
  bound_cmd->add_option("--alpha", bound_opts.alpha, "sigma_max(Phi_{Tini+Tf})");
  bound_cmd->add_option("--beta", bound_opts.beta, "lower bound on sigma_min(Phi_Tini)");
  bound_cmd->add_option("--kappa", bound_opts.kappa, "chordal distance")->required();
  bound_cmd->add_option("--bnorm", bound_opts.b_norm, "||(u_ini, u, y_ini)||")
      ->required();
  bound_cmd->add_flag("--one-step", bound_opts.one_step, "one-step bound");
  bound_cmd->add_option("--sigma-min", bound_opts.sigma_min, "sigma_min(Mhat)");
  bound_cmd->add_option("--uyf1", bound_opts.uyf1, "||Uhat_yf^(1)||_2");

  SimulateOptions sim_opts;
  auto* sim_cmd = app.add_subcommand("simulate", "simulate a random-input trajectory");
  sim_cmd->add_option("--model", sim_opts.model, "model file (default: built-in)");
  sim_cmd->add_option("--length", sim_opts.length, "number of samples");
  sim_cmd->add_option("--seed", sim_opts.seed, "input seed");
  sim_cmd->add_option("--sigma", sim_opts.sigma, "noise-to-signal ratio");
  sim_cmd->add_option("--noise-seed", sim_opts.noise_seed, "noise seed");
  sim_cmd->add_option("--output", sim_opts.output, "CSV path (default stdout)");

  BasisOptions basis_opts;
  auto* basis_cmd = app.add_subcommand("basis", "orthonormal basis from trajectory data");
  basis_cmd->add_option("--trajectory", basis_opts.trajectory, "trajectory CSV")
      ->required();
  basis_cmd->add_option("--Tini", basis_opts.t_ini, "past horizon")->required();
  basis_cmd->add_option("--Tf", basis_opts.t_f, "future horizon")->required();
  basis_cmd->add_option("--rank", basis_opts.rank, "basis rank r (mL + n)")->required();
  basis_cmd->add_option("--output", basis_opts.output, "basis path (default stdout)");

  PerturbOptions perturb_opts;
  auto* perturb_cmd =
      app.add_subcommand("perturb", "move a basis to a given chordal distance");
  perturb_cmd->add_option("--basis", perturb_opts.basis, "basis file")->required();
  perturb_cmd->add_option("--kappa", perturb_opts.kappa, "target distance")->required();
  perturb_cmd->add_option("--seed", perturb_opts.seed, "direction seed");
  perturb_cmd->add_option("--output", perturb_opts.output, "basis path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitInput;
  }

  try {
    if (*exp_cmd) return run_experiment_cmd(exp_opts);
    if (*single_cmd) return run_single_cmd(single_opts);
    if (*dist_cmd) return run_distance_cmd(dist_a, dist_b);
    if (*pred_cmd) return run_predict_cmd(pred_basis, pred_context);
    if (*bound_cmd) return run_bound_cmd(bound_opts);
    if (*sim_cmd) return run_simulate_cmd(sim_opts);
    if (*basis_cmd) return run_basis_cmd(basis_opts);
    if (*perturb_cmd) return run_perturb_cmd(perturb_opts);
  } catch (const behave::HypothesisViolation& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitHypothesis;
  } catch (const behave::NumericalError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const behave::InputError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitInput;
}
