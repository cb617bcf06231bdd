#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flatres/quadrotor2d.hpp"
#include "flatres/sim_control.hpp"
#include "flatres/training.hpp"

namespace flatres {

/// Everything a run needs; the defaults reproduce the published experiment
/// setup, so commands run without a config file.
struct ExperimentConfig {
  QuadrotorParams quad;
  double validity_thrust_min = 0.1;

  // data generation
  int n_trajectories = 3000;
  double traj_duration = 0.5;
  double sample_rate = 100.0;
  double data_plant_dt = 1e-3;
  std::vector<double> init_halfwidth = {1.0, 1.0, 0.5, 0.5, 0.05, 0.1};
  double thrust_lo = 8.98, thrust_hi = 10.98;
  double torque_lo = -0.5, torque_hi = 0.5;
  std::uint64_t data_seed = 0;

  // training
  int epochs = 20;
  double lr = 1e-3;
  int batch = 256;
  int hidden = 32;
  std::vector<int> learned_blocks = {0, 1};
  double val_fraction = 0.1;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};

  // evaluation scenarios
  double ref_period = 14.0;
  double lem_a = 1.0, lem_b = 0.6;
  double eval_T = 14.0;
  double open_loop_dt = 1e-2;
  double control_rate = 100.0;
  double closed_plant_dt = 1e-3;
  std::vector<double> controller_gains = {3.96, 12.08, 13.16, 6.03};
  std::string derivative_source = "algebraic";  // or "observer"
  double observer_pole = -40.0;
  double start_offset = 0.0;  // initial position offset (disturbance tests)

  // NMPC baseline
  double ocp_horizon = 1.0;
  int ocp_steps = 100;
  double ocp_q = 1.0, ocp_r = 1e-3, ocp_qt = 1.0;
  int ocp_max_iters = 50;
  double ocp_step_tol = 1e-6;
  double ocp_init_damping = 1e-3;

  // harness
  int workers = 2;
  std::string out_dir = "out";
};

ExperimentConfig default_config();
ExperimentConfig load_config(const std::string& path);
void save_config(const ExperimentConfig& cfg, const std::string& path);
/// Stable hex fingerprint of every field; identical configs hash equally.
std::string config_hash(const ExperimentConfig& cfg);

/// out/<run-id>/{dataset,models,trajectories,metrics,logs}; run-id is
/// derived from the config hash so identical configs land in the same place
/// and later commands can reuse earlier artifacts.
struct RunPaths {
  std::string root, dataset, models, trajectories, metrics, logs;
};
RunPaths make_run_paths(const ExperimentConfig& cfg);

struct TrainedModel {
  std::uint64_t seed = 0;
  LowerTriangularResidual residual;
  TrainLog log;
  std::string path;  // model file, when persisted
};

struct MetricRow {
  std::string scenario;   // e.g. "open-loop", "closed-loop-flat", "closed-loop-nmpc"
  std::string model;      // "nominal", "ground-truth", "learned"
  std::string reference;  // "circle", "lemniscate"
  std::optional<std::uint64_t> seed;
  double position_error = 0.0;
  TimingStats timing;     // closed loop only
  std::string status = "ok";
};

struct MetricTable {
  std::vector<MetricRow> rows;
  /// mean and sample standard deviation over seeds for matching rows
  struct Aggregate {
    std::string scenario, model, reference;
    double mean = 0.0, stddev = 0.0;
    int n = 0;
  };
  std::vector<Aggregate> aggregates() const;
};

Dataset run_gen_data(const ExperimentConfig& cfg, const RunPaths& paths);
std::vector<TrainedModel> run_train(const ExperimentConfig& cfg,
                                    const Dataset& ds, const RunPaths& paths);

/// Load-or-produce helpers: reuse the run directory's dataset/models when
/// they exist, generate and train otherwise.
Dataset ensure_dataset(const ExperimentConfig& cfg, const RunPaths& paths);
std::vector<TrainedModel> ensure_models(const ExperimentConfig& cfg,
                                        const RunPaths& paths);
MetricTable run_eval_open_loop(const ExperimentConfig& cfg,
                               const std::vector<TrainedModel>& models,
                               const RunPaths& paths);
MetricTable run_eval_closed_loop(const ExperimentConfig& cfg,
                                 const std::vector<TrainedModel>& models,
                                 const RunPaths& paths);

/// Writes the delimited metrics table and the machine-readable metrics
/// document (JSON) under paths.metrics.
void write_metrics(const MetricTable& table, const ExperimentConfig& cfg,
                   const RunPaths& paths, const std::string& name);

/// Manifest with seed(s), git description, and config hash.
void write_manifest(const ExperimentConfig& cfg, const RunPaths& paths,
                    const std::string& command);

std::string git_describe();

/// Helpers shared by the CLI, the acceptance suite, and tests.
PureFeedbackModel experiment_model(const ExperimentConfig& cfg,
                                   ModelFault fault = ModelFault::None);
Reference experiment_reference(const ExperimentConfig& cfg,
                               const std::string& name);
Eigen::VectorXd closed_loop_initial_state(const ExperimentConfig& cfg,
                                          const Reference& ref);

}  // namespace flatres
