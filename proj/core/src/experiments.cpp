#include "flatres/experiments.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <future>
#include <memory>
#include <sstream>

#include "flatres/errors.hpp"
#include "flatres/model_io.hpp"
#include "flatres/nmpc.hpp"
#include "json.hpp"

namespace flatres {

namespace fs = std::filesystem;
using nlohmann::json;

RunPaths make_run_paths(const ExperimentConfig& cfg) {
  RunPaths p;
  p.root = cfg.out_dir + "/run-" + config_hash(cfg);
  p.dataset = p.root + "/dataset";
  p.models = p.root + "/models";
  p.trajectories = p.root + "/trajectories";
  p.metrics = p.root + "/metrics";
  p.logs = p.root + "/logs";
  for (const auto& dir : {p.root, p.dataset, p.models, p.trajectories,
                          p.metrics, p.logs})
    fs::create_directories(dir);
  return p;
}

std::string git_describe() {
  std::array<char, 128> buf{};
  std::string out;
  FILE* pipe = popen("git describe --always --dirty 2>/dev/null", "r");
  if (!pipe) return "unknown";
  while (fgets(buf.data(), buf.size(), pipe)) out += buf.data();
  pclose(pipe);
  while (!out.empty() && (out.back() == '\n' || out.back() == '\r')) out.pop_back();
  return out.empty() ? "unknown" : out;
}

void write_manifest(const ExperimentConfig& cfg, const RunPaths& paths,
                    const std::string& command) {
  json j;
  j["command"] = command;
  j["config_hash"] = config_hash(cfg);
  j["git"] = git_describe();
  j["data_seed"] = cfg.data_seed;
  j["training_seeds"] = cfg.seeds;
  std::ofstream f(paths.root + "/manifest-" + command + ".json");
  f << j.dump(2) << "\n";
  save_config(cfg, paths.root + "/config.json");
}

PureFeedbackModel experiment_model(const ExperimentConfig& cfg,
                                   ModelFault fault) {
  return nominal_extended_model(cfg.quad, cfg.validity_thrust_min, fault);
}

Reference experiment_reference(const ExperimentConfig& cfg,
                               const std::string& name) {
  if (name == "circle") return make_circle(cfg.ref_period);
  if (name == "lemniscate")
    return make_lemniscate(cfg.lem_a, cfg.lem_b, cfg.ref_period);
  throw std::invalid_argument("unknown reference: " + name);
}

Eigen::VectorXd closed_loop_initial_state(const ExperimentConfig& cfg,
                                          const Reference& ref) {
  // Exactly on the reference under the true dynamics: the ground-truth
  // diffeomorphism supplies the consistent thrust/attitude chain.
  const FlatnessDiffeomorphism truth =
      construct(experiment_model(cfg), exact_drag_residual(cfg.quad));
  Eigen::VectorXd x0 = state_from_flat(truth, ref.jets(0.0, 4));
  x0[0] += cfg.start_offset;
  return x0;
}

Dataset run_gen_data(const ExperimentConfig& cfg, const RunPaths& paths) {
  DataGenConfig gen;
  gen.quad = cfg.quad;
  gen.n_trajectories = cfg.n_trajectories;
  gen.duration = cfg.traj_duration;
  gen.sample_rate = cfg.sample_rate;
  gen.plant_dt = cfg.data_plant_dt;
  gen.init_halfwidth = Eigen::Map<const Eigen::VectorXd>(
      cfg.init_halfwidth.data(), static_cast<Eigen::Index>(cfg.init_halfwidth.size()));
  gen.thrust_lo = cfg.thrust_lo;
  gen.thrust_hi = cfg.thrust_hi;
  gen.torque_lo = cfg.torque_lo;
  gen.torque_hi = cfg.torque_hi;
  gen.seed = cfg.data_seed;
  Dataset ds = generate_training_data(gen);
  write_dataset_csv(ds, paths.dataset + "/dataset.csv",
                    {"config_hash: " + config_hash(cfg)});
  write_manifest(cfg, paths, "gen-data");
  return ds;
}

namespace {

PlantFn original_nominal_fn(const QuadrotorParams& quad) {
  return [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return nominal_plant_original(quad, x, u);
  };
}

PlantFn extended_true_fn(const QuadrotorParams& quad) {
  return [quad](const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
    return true_plant_extended(quad, x, u);
  };
}

TrainConfig train_config(const ExperimentConfig& cfg, std::uint64_t seed) {
  TrainConfig t;
  t.epochs = cfg.epochs;
  t.lr = cfg.lr;
  t.batch = cfg.batch;
  t.seed = seed;
  t.hidden = cfg.hidden;
  t.learned_blocks = cfg.learned_blocks;
  t.val_fraction = cfg.val_fraction;
  return t;
}

/// Runs jobs over a bounded pool of async workers, preserving result order.
template <class Job>
void run_pool(int workers, int count, Job job) {
  if (workers <= 1) {
    for (int i = 0; i < count; ++i) job(i);
    return;
  }
  int next = 0;
  while (next < count) {
    const int batch = std::min(workers, count - next);
    std::vector<std::future<void>> futures;
    futures.reserve(static_cast<size_t>(batch));
    for (int i = 0; i < batch; ++i)
      futures.push_back(std::async(std::launch::async, job, next + i));
    for (auto& f : futures) f.get();
    next += batch;
  }
}

}  // namespace

std::vector<TrainedModel> run_train(const ExperimentConfig& cfg,
                                    const Dataset& ds, const RunPaths& paths) {
  if (cfg.seeds.empty())
    throw std::invalid_argument("run_train: the training seed list is empty");
  const PlantFn nominal = original_nominal_fn(cfg.quad);
  std::vector<TrainedModel> models(cfg.seeds.size());
  run_pool(cfg.workers, static_cast<int>(cfg.seeds.size()), [&](int i) {
    const std::uint64_t seed = cfg.seeds[static_cast<size_t>(i)];
    TrainResult result = train(ds, nominal, 4, 2, train_config(cfg, seed));
    TrainedModel& model = models[static_cast<size_t>(i)];
    model.seed = seed;
    model.residual = std::move(result.residual);
    model.log = std::move(result.log);
    model.path = paths.models + "/model-seed" + std::to_string(seed) + ".txt";
    save_model(model.residual, model.path,
               {"seed: " + std::to_string(seed),
                "config_hash: " + config_hash(cfg)});
    std::ofstream log(paths.logs + "/train-seed" + std::to_string(seed) + ".csv");
    log << "epoch,loss\n";
    for (size_t e = 0; e < model.log.epoch_loss.size(); ++e)
      log << e << "," << model.log.epoch_loss[e] << "\n";
  });
  write_manifest(cfg, paths, "train");
  return models;
}

MetricTable run_eval_open_loop(const ExperimentConfig& cfg,
                               const std::vector<TrainedModel>& models,
                               const RunPaths& paths) {
  const PureFeedbackModel model = experiment_model(cfg);
  const PlantFn plant = extended_true_fn(cfg.quad);

  struct Scenario {
    std::string model_name;
    std::optional<std::uint64_t> seed;
    LowerTriangularResidual residual;
    std::string reference;
  };
  std::vector<Scenario> runs;
  for (const std::string ref : {"circle", "lemniscate"}) {
    runs.push_back({"nominal", {}, zero_residual(4, 2), ref});
    runs.push_back({"ground-truth", {}, exact_drag_residual(cfg.quad), ref});
    for (const auto& m : models)
      runs.push_back({"learned", m.seed, m.residual, ref});
  }

  MetricTable table;
  table.rows.resize(runs.size());
  run_pool(cfg.workers, static_cast<int>(runs.size()), [&](int i) {
    const Scenario& sc = runs[static_cast<size_t>(i)];
    MetricRow row;
    row.scenario = "open-loop";
    row.model = sc.model_name;
    row.reference = sc.reference;
    row.seed = sc.seed;
    try {
      const FlatnessDiffeomorphism diffeo = construct(model, sc.residual);
      const Reference ref = experiment_reference(cfg, sc.reference);
      const SimTrajectory traj =
          open_loop_rollout(plant, diffeo, ref, cfg.open_loop_dt, cfg.eval_T);
      row.position_error = position_error(traj, ref);
      std::string name = paths.trajectories + "/open-loop-" + sc.model_name +
                         (sc.seed ? "-seed" + std::to_string(*sc.seed) : "") +
                         "-" + sc.reference + ".csv";
      write_trajectory_csv(traj, name,
                           {"config_hash: " + config_hash(cfg)});
    } catch (const DomainError& e) {
      row.status = std::string("domain-error: ") + e.what();
      row.position_error = std::nan("");
    }
    table.rows[static_cast<size_t>(i)] = std::move(row);
  });
  write_metrics(table, cfg, paths, "open-loop");
  write_manifest(cfg, paths, "eval-open-loop");
  return table;
}

namespace {

MetricRow closed_loop_row(const ExperimentConfig& cfg,
                          const PureFeedbackModel& model,
                          const std::string& model_name,
                          std::optional<std::uint64_t> seed,
                          const LowerTriangularResidual& residual,
                          const std::string& ref_name, bool nmpc,
                          const RunPaths& paths) {
  MetricRow row;
  row.scenario = nmpc ? "closed-loop-nmpc" : "closed-loop-flat";
  row.model = model_name;
  row.reference = ref_name;
  row.seed = seed;
  const Reference ref = experiment_reference(cfg, ref_name);
  const PlantFn plant = extended_true_fn(cfg.quad);

  ClosedLoopOptions options;
  options.T = cfg.eval_T;
  options.control_rate = cfg.control_rate;
  options.plant_dt = cfg.closed_plant_dt;
  options.x0 = closed_loop_initial_state(cfg, ref);

  ControllerFn controller;
  std::unique_ptr<FlatTrackingController> flat;
  std::unique_ptr<MpcController> mpc;
  const FlatnessDiffeomorphism diffeo = construct(model, residual);
  if (nmpc) {
    OcpDynamics dyn = make_ocp_dynamics(
        8, 2,
        [model, residual]<SmoothScalar S>(std::span<const S> x,
                                          std::span<const S> u) {
          SVec<S> xu(x.begin(), x.end());
          xu.insert(xu.end(), u.begin(), u.end());
          return eval_augmented<S>(model, residual, xu);
        });
    OcpConfig ocp;
    ocp.horizon = cfg.ocp_horizon;
    ocp.steps = cfg.ocp_steps;
    ocp.flat_dim = 2;
    ocp.q_weight = cfg.ocp_q;
    ocp.r_weight = cfg.ocp_r;
    ocp.qt_weight = cfg.ocp_qt;
    ocp.max_iters = cfg.ocp_max_iters;
    ocp.step_tol = cfg.ocp_step_tol;
    ocp.init_damping = cfg.ocp_init_damping;
    auto y_ref = [ref](double t) {
      return Eigen::VectorXd(ref.position(t));
    };
    auto init = [diffeo, ref](double t) {
      const FlatEvaluation eval = state_and_input_from_flat(diffeo, ref.jets(t, 4));
      return std::make_pair(eval.state, eval.input);
    };
    mpc = std::make_unique<MpcController>(std::move(dyn), ocp, y_ref, init);
    controller = [&mpc](const Eigen::VectorXd& x, double t) {
      return mpc->step(x, t);
    };
  } else {
    const DerivativeSource source = cfg.derivative_source == "observer"
                                        ? DerivativeSource::Observer
                                        : DerivativeSource::Algebraic;
    flat = std::make_unique<FlatTrackingController>(
        diffeo, ref, cfg.controller_gains, source, cfg.observer_pole,
        1.0 / cfg.control_rate);
    controller = [&flat](const Eigen::VectorXd& x, double t) {
      return flat->step(x, t);
    };
  }

  const ClosedLoopResult result = closed_loop_run(plant, controller, options);
  if (!result.completed) {
    row.status = "aborted: " + result.error;
    row.position_error = std::nan("");
    return row;
  }
  row.position_error = position_error(result.traj, ref);
  row.timing = timing_stats(result.traj);
  const std::string suffix = model_name +
                             (seed ? "-seed" + std::to_string(*seed) : "") +
                             "-" + ref_name;
  write_trajectory_csv(result.traj, paths.trajectories + "/" + row.scenario +
                                        "-" + suffix + ".csv",
                       {"config_hash: " + config_hash(cfg)});
  if (nmpc) {
    // per-step solve statistics; the wall clock per step sits in the
    // trajectory's controller_ns column
    std::ofstream f(paths.metrics + "/nmpc-steps-" + suffix + ".csv");
    f << "# config_hash: " << config_hash(cfg) << "\n";
    f << "step,t,iterations,cost,controller_ns\n";
    const auto& iters = mpc->iteration_history();
    const auto& costs = mpc->cost_history();
    for (size_t k = 0; k < iters.size(); ++k)
      f << k << "," << k / cfg.control_rate << "," << iters[k] << ","
        << costs[k] << ","
        << (k < result.traj.controller_ns.size() ? result.traj.controller_ns[k]
                                                 : 0)
        << "\n";
  }
  return row;
}

}  // namespace

MetricTable run_eval_closed_loop(const ExperimentConfig& cfg,
                                 const std::vector<TrainedModel>& models,
                                 const RunPaths& paths) {
  const PureFeedbackModel model = experiment_model(cfg);
  MetricTable table;
  // Timing comparability requires exclusive execution: runs are sequential.
  for (const std::string ref : {"circle", "lemniscate"}) {
    table.rows.push_back(closed_loop_row(cfg, model, "nominal", {},
                                         zero_residual(4, 2), ref, false,
                                         paths));
    for (const auto& m : models)
      table.rows.push_back(closed_loop_row(cfg, model, "learned", m.seed,
                                           m.residual, ref, false, paths));
    for (const auto& m : models)
      table.rows.push_back(closed_loop_row(cfg, model, "learned", m.seed,
                                           m.residual, ref, true, paths));
  }
  write_metrics(table, cfg, paths, "closed-loop");
  write_manifest(cfg, paths, "eval-closed-loop");
  return table;
}

Dataset ensure_dataset(const ExperimentConfig& cfg, const RunPaths& paths) {
  const std::string path = paths.dataset + "/dataset.csv";
  if (fs::exists(path)) return read_dataset_csv(path);
  return run_gen_data(cfg, paths);
}

std::vector<TrainedModel> ensure_models(const ExperimentConfig& cfg,
                                        const RunPaths& paths) {
  std::vector<TrainedModel> models;
  bool all_present = true;
  for (const std::uint64_t seed : cfg.seeds) {
    const std::string path =
        paths.models + "/model-seed" + std::to_string(seed) + ".txt";
    if (!fs::exists(path)) {
      all_present = false;
      break;
    }
    TrainedModel m;
    m.seed = seed;
    m.path = path;
    m.residual = load_model(path);
    models.push_back(std::move(m));
  }
  if (all_present && !models.empty()) return models;
  const Dataset ds = ensure_dataset(cfg, paths);
  return run_train(cfg, ds, paths);
}

std::vector<MetricTable::Aggregate> MetricTable::aggregates() const {
  std::vector<Aggregate> out;
  for (const auto& row : rows) {
    if (!row.seed) continue;
    auto it = std::find_if(out.begin(), out.end(), [&](const Aggregate& a) {
      return a.scenario == row.scenario && a.model == row.model &&
             a.reference == row.reference;
    });
    if (it == out.end()) {
      out.push_back({row.scenario, row.model, row.reference, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    it->mean += row.position_error;
    ++it->n;
  }
  for (auto& a : out) a.mean /= std::max(1, a.n);
  for (auto& a : out) {
    double var = 0.0;
    for (const auto& row : rows)
      if (row.seed && a.scenario == row.scenario && a.model == row.model &&
          a.reference == row.reference)
        var += (row.position_error - a.mean) * (row.position_error - a.mean);
    a.stddev = a.n > 1 ? std::sqrt(var / (a.n - 1)) : 0.0;
  }
  return out;
}

void write_metrics(const MetricTable& table, const ExperimentConfig& cfg,
                   const RunPaths& paths, const std::string& name) {
  {
    std::ofstream f(paths.metrics + "/" + name + ".csv");
    f << "# config_hash: " << config_hash(cfg) << "\n";
    f << "scenario,model,reference,seed,position_error,median_controller_ns,"
         "mean_controller_ns,std_controller_ns,status\n";
    for (const auto& row : table.rows) {
      f << row.scenario << "," << row.model << "," << row.reference << ","
        << (row.seed ? std::to_string(*row.seed) : "") << ","
        << row.position_error << "," << row.timing.median_ns << ","
        << row.timing.mean_ns << "," << row.timing.std_ns << "," << row.status
        << "\n";
    }
    f << "# aggregates: scenario,model,reference,mean,stddev,n\n";
    for (const auto& a : table.aggregates())
      f << "# " << a.scenario << "," << a.model << "," << a.reference << ","
        << a.mean << "," << a.stddev << "," << a.n << "\n";
  }
  json j;
  j["config_hash"] = config_hash(cfg);
  j["rows"] = json::array();
  for (const auto& row : table.rows) {
    json r = {{"scenario", row.scenario},
              {"model", row.model},
              {"reference", row.reference},
              {"position_error", row.position_error},
              {"status", row.status},
              {"timing",
               {{"median_ns", row.timing.median_ns},
                {"mean_ns", row.timing.mean_ns},
                {"std_ns", row.timing.std_ns},
                {"count", row.timing.count}}}};
    if (row.seed) r["seed"] = *row.seed;
    j["rows"].push_back(r);
  }
  j["aggregates"] = json::array();
  for (const auto& a : table.aggregates())
    j["aggregates"].push_back({{"scenario", a.scenario},
                               {"model", a.model},
                               {"reference", a.reference},
                               {"mean", a.mean},
                               {"stddev", a.stddev},
                               {"n", a.n}});
  std::ofstream f(paths.metrics + "/" + name + ".json");
  f << j.dump(2) << "\n";
}

}  // namespace flatres
