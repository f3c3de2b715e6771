#include "behave/experiment.hpp"

#include "behave/bounds.hpp"
#include "behave/hankel.hpp"
#include "behave/io.hpp"

#include <atomic>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

namespace behave {
namespace {

constexpr std::uint64_t kMeasuredInputSeedOffset = 1000003;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

template <typename Int>
Int parse_integer(const std::string& text, const std::string& where) {
  Int value{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end || text.empty())
    throw InputError(where + ": expected an integer, got '" + text + "'");
  return value;
}

}  // namespace

BlockDims ExperimentConfig::dims() const {
  return {model.m(), model.p(), t_ini, t_f};
}

void ExperimentConfig::validate() const {
  require(t_ini >= 1 && t_f >= 1, "Tini and Tf must be >= 1");
  require(offline_length >= t_ini + t_f, "T must be >= Tini + Tf");
  require(sim_length >= t_ini + t_f, "T_sim must be >= Tini + Tf");
  require(perturbations >= 1, "N must be >= 1");
  require(sigma >= 0.0 && std::isfinite(sigma), "sigma must be >= 0");
  require(threads >= 1, "threads must be >= 1");
  if (kappa_grid.empty()) {
    require(kappa_max >= 0.0 && std::isfinite(kappa_max),
            "kappa_max must be >= 0");
  } else {
    require(static_cast<Eigen::Index>(kappa_grid.size()) == perturbations,
            "kappa_grid has " + std::to_string(kappa_grid.size()) +
                " entries but N = " + std::to_string(perturbations));
    for (const double k : kappa_grid)
      require(k >= 0.0 && std::isfinite(k), "kappa_grid entries must be >= 0");
  }
}

double ExperimentConfig::target_kappa(Eigen::Index n) const {
  require(n >= 1 && n <= perturbations,
          "perturbation index " + std::to_string(n) + " outside [1, N = " +
              std::to_string(perturbations) + "]");
  if (!kappa_grid.empty()) return kappa_grid[static_cast<std::size_t>(n - 1)];
  return kappa_max * static_cast<double>(n) / static_cast<double>(perturbations);
}

ExperimentConfig parse_config(std::istream& in, const std::string& source,
                              const std::string& base_dir) {
  ExperimentConfig config;
  std::string line;
  int line_no = 0;
  bool grid_given = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string where = source + ":" + std::to_string(line_no);
    const std::string content = trim(line.substr(0, line.find('#')));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string::npos)
      throw InputError(where + ": expected 'key = value'");
    const std::string key = trim(content.substr(0, eq));
    const std::string value = trim(content.substr(eq + 1));
    if (key == "model") {
      std::filesystem::path path(value);
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      config.model = io::read_model_file(path.string());
    } else if (key == "Tini") {
      config.t_ini = parse_integer<Eigen::Index>(value, where);
    } else if (key == "Tf") {
      config.t_f = parse_integer<Eigen::Index>(value, where);
    } else if (key == "T") {
      config.offline_length = parse_integer<Eigen::Index>(value, where);
    } else if (key == "T_sim") {
      config.sim_length = parse_integer<Eigen::Index>(value, where);
    } else if (key == "N") {
      config.perturbations = parse_integer<Eigen::Index>(value, where);
    } else if (key == "sigma") {
      config.sigma = io::parse_double(value, where);
    } else if (key == "kappa_max") {
      config.kappa_max = io::parse_double(value, where);
    } else if (key == "kappa_grid") {
      grid_given = true;
      config.kappa_grid.clear();
      std::stringstream ss(value);
      std::string cell;
      while (std::getline(ss, cell, ','))
        config.kappa_grid.push_back(io::parse_double(trim(cell), where));
    } else if (key == "data_seed") {
      config.data_seed = parse_integer<std::uint64_t>(value, where);
    } else if (key == "noise_seed") {
      config.noise_seed = parse_integer<std::uint64_t>(value, where);
    } else if (key == "perturb_seed") {
      config.perturb_seed = parse_integer<std::uint64_t>(value, where);
    } else if (key == "output_dir") {
      std::filesystem::path path(value);
      if (path.is_relative()) path = std::filesystem::path(base_dir) / path;
      config.output_dir = path.string();
    } else if (key == "threads") {
      config.threads = parse_integer<unsigned>(value, where);
    } else {
      throw InputError(where + ": unknown key '" + key + "'");
    }
  }
  // A grid given without N sets N to its length.
  if (grid_given && static_cast<Eigen::Index>(config.kappa_grid.size()) !=
                        config.perturbations) {
    config.perturbations = static_cast<Eigen::Index>(config.kappa_grid.size());
  }
  try {
    config.validate();
  } catch (const InputError& e) {
    throw InputError(source + ": " + e.what());
  }
  return config;
}

ExperimentConfig read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError(path + ": cannot open file");
  const auto parent = std::filesystem::path(path).parent_path();
  return parse_config(in, path, parent.empty() ? "." : parent.string());
}

ExperimentSetup prepare_experiment(const ExperimentConfig& config) {
  config.validate();
  const auto& model = config.model;
  const BlockDims dims = config.dims();
  const auto horizon = dims.horizon();

  const Matrix<double> u_offline =
      generate_pe_input(model.m(), config.offline_length, model.n() + horizon,
                        config.data_seed);
  const auto offline = simulate(
      model, u_offline, NoiseSpec::relative_gaussian(config.sigma, config.noise_seed));
  const auto data = stacked_data_matrix(offline.inputs, offline.outputs,
                                        dims.t_ini, dims.t_f);
  const Eigen::Index rank = model.m() * horizon + model.n();
  auto basis = orthonormal_basis(data, rank);

  Rng input_rng(config.data_seed + kMeasuredInputSeedOffset);
  const Matrix<double> u_sim =
      input_rng.normal_matrix<double>(model.m(), config.sim_length);
  auto measured = simulate(
      model, u_sim,
      NoiseSpec::relative_gaussian(config.sigma, config.noise_seed + 1));
  measured.states.reset();

  auto baseline = rolling_one_step(basis, measured);
  return {std::move(basis), std::move(measured), std::move(baseline)};
}

TrialResult run_trial(const ExperimentConfig& config,
                      const ExperimentSetup& setup, Eigen::Index n) {
  const double target = config.target_kappa(n);
  const auto perturbed = perturb_subspace(
      setup.basis, target, config.perturb_seed + static_cast<std::uint64_t>(n));

  TrialResult trial;
  trial.n = n;
  trial.kappa = chordal_distance(setup.basis, perturbed);
  const auto factors = one_step_factors(perturbed);
  trial.sigma_min_mhat = factors.sigma_min_regressor;
  trial.norm_uyf1 = factors.norm_first_future_output;
  trial.perturbed = rolling_one_step(perturbed, setup.measured);

  const bool certified =
      trial.sigma_min_mhat > 0.0 &&
      trial.kappa <= lipschitz_radius(trial.sigma_min_mhat);
  const auto steps = trial.perturbed.outputs.size();
  trial.records.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    TrialRecord rec;
    rec.n = n;
    rec.kappa = trial.kappa;
    rec.t = trial.perturbed.first_t + static_cast<Eigen::Index>(k);
    rec.prediction_error =
        (trial.perturbed.outputs[k] - setup.baseline.outputs[k]).norm();
    rec.sigma_min_mhat = trial.sigma_min_mhat;
    if (certified) {
      rec.bound = one_step_bound(trial.sigma_min_mhat, trial.norm_uyf1,
                                 trial.kappa, setup.baseline.context_norms[k]);
      if (*rec.bound < rec.prediction_error)
        std::cerr << "warning: bound " << *rec.bound << " below error "
                  << rec.prediction_error << " at n = " << n << ", t = "
                  << rec.t << '\n';
    }
    trial.records.push_back(rec);
  }
  return trial;
}

SummaryRow summarize(const TrialResult& trial) {
  SummaryRow row;
  row.n = trial.n;
  row.kappa = trial.kappa;
  double err_sum = 0;
  double bound_sum = 0;
  std::size_t bound_count = 0;
  for (const auto& rec : trial.records) {
    err_sum += rec.prediction_error;
    if (rec.bound) {
      bound_sum += *rec.bound;
      ++bound_count;
    }
  }
  if (!trial.records.empty())
    row.avg_error = err_sum / static_cast<double>(trial.records.size());
  if (bound_count > 0) row.avg_bound = bound_sum / static_cast<double>(bound_count);
  return row;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  const auto setup = prepare_experiment(config);
  const auto count = static_cast<std::size_t>(config.perturbations);
  std::vector<std::optional<TrialResult>> slots(count);
  std::vector<std::exception_ptr> errors(count);

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        slots[i] = run_trial(config, setup, static_cast<Eigen::Index>(i + 1));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned workers =
      std::max(1u, std::min<unsigned>(config.threads, static_cast<unsigned>(count)));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (const auto& err : errors)
    if (err) std::rethrow_exception(err);

  ExperimentResult result;
  result.trials.reserve(count);
  for (auto& slot : slots) {
    result.summary.push_back(summarize(*slot));
    result.trials.push_back(std::move(*slot));
  }
  return result;
}

void write_trials_csv(std::ostream& out, const ExperimentResult& result) {
  out << "n,kappa,t,error,bound,sigma_min_Mhat\n";
  for (const auto& trial : result.trials)
    for (const auto& rec : trial.records) {
      out << rec.n << ',' << io::format_double(rec.kappa) << ',' << rec.t << ','
          << io::format_double(rec.prediction_error) << ',';
      if (rec.bound) out << io::format_double(*rec.bound);
      out << ',' << io::format_double(rec.sigma_min_mhat) << '\n';
    }
}

void write_summary_csv(std::ostream& out, const ExperimentResult& result) {
  out << "n,kappa,avg_error,avg_bound\n";
  for (const auto& row : result.summary) {
    out << row.n << ',' << io::format_double(row.kappa) << ','
        << io::format_double(row.avg_error) << ',';
    if (row.avg_bound) out << io::format_double(*row.avg_bound);
    out << '\n';
  }
}

void write_single_csv(std::ostream& out, const ExperimentSetup& setup,
                      const TrialResult& trial) {
  const auto p = setup.basis.dims().p;
  out << 't';
  if (p == 1) {
    out << ",baseline,perturbed";
  } else {
    for (Eigen::Index i = 0; i < p; ++i) out << ",baseline_" << i;
    for (Eigen::Index i = 0; i < p; ++i) out << ",perturbed_" << i;
  }
  out << ",error,bound\n";
  for (std::size_t k = 0; k < trial.records.size(); ++k) {
    const auto& rec = trial.records[k];
    out << rec.t;
    for (Eigen::Index i = 0; i < p; ++i)
      out << ',' << io::format_double(setup.baseline.outputs[k](i));
    for (Eigen::Index i = 0; i < p; ++i)
      out << ',' << io::format_double(trial.perturbed.outputs[k](i));
    out << ',' << io::format_double(rec.prediction_error) << ',';
    if (rec.bound) out << io::format_double(*rec.bound);
    out << '\n';
  }
}

}  // namespace behave
