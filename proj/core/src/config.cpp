#include <fstream>
#include <sstream>

#include "flatres/errors.hpp"
#include "flatres/experiments.hpp"
#include "json.hpp"

namespace flatres {

namespace {

using nlohmann::json;

json to_json(const ExperimentConfig& c) {
  json j;
  j["quadrotor"] = {{"mass", c.quad.mass},
                    {"inertia", c.quad.inertia},
                    {"g", c.quad.g},
                    {"c_parasitic", c.quad.c_parasitic},
                    {"c_linear", c.quad.c_linear},
                    {"validity_thrust_min", c.validity_thrust_min}};
  j["dataset"] = {{"n_trajectories", c.n_trajectories},
                  {"duration", c.traj_duration},
                  {"sample_rate", c.sample_rate},
                  {"plant_dt", c.data_plant_dt},
                  {"init_halfwidth", c.init_halfwidth},
                  {"thrust_lo", c.thrust_lo},
                  {"thrust_hi", c.thrust_hi},
                  {"torque_lo", c.torque_lo},
                  {"torque_hi", c.torque_hi},
                  {"seed", c.data_seed}};
  j["training"] = {{"epochs", c.epochs},
                   {"lr", c.lr},
                   {"batch", c.batch},
                   {"hidden", c.hidden},
                   {"learned_blocks", c.learned_blocks},
                   {"val_fraction", c.val_fraction},
                   {"seeds", c.seeds}};
  j["scenario"] = {{"ref_period", c.ref_period},
                   {"lem_a", c.lem_a},
                   {"lem_b", c.lem_b},
                   {"eval_T", c.eval_T},
                   {"open_loop_dt", c.open_loop_dt},
                   {"control_rate", c.control_rate},
                   {"closed_plant_dt", c.closed_plant_dt},
                   {"controller_gains", c.controller_gains},
                   {"derivative_source", c.derivative_source},
                   {"observer_pole", c.observer_pole},
                   {"start_offset", c.start_offset}};
  j["nmpc"] = {{"horizon", c.ocp_horizon},
               {"steps", c.ocp_steps},
               {"q", c.ocp_q},
               {"r", c.ocp_r},
               {"qt", c.ocp_qt},
               {"max_iters", c.ocp_max_iters},
               {"step_tol", c.ocp_step_tol},
               {"init_damping", c.ocp_init_damping}};
  j["harness"] = {{"workers", c.workers}, {"out_dir", c.out_dir}};
  return j;
}

template <class T>
void maybe(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void from_json(const json& j, ExperimentConfig& c) {
  if (j.contains("quadrotor")) {
    const auto& q = j.at("quadrotor");
    maybe(q, "mass", c.quad.mass);
    maybe(q, "inertia", c.quad.inertia);
    maybe(q, "g", c.quad.g);
    maybe(q, "c_parasitic", c.quad.c_parasitic);
    maybe(q, "c_linear", c.quad.c_linear);
    maybe(q, "validity_thrust_min", c.validity_thrust_min);
  }
  if (j.contains("dataset")) {
    const auto& d = j.at("dataset");
    maybe(d, "n_trajectories", c.n_trajectories);
    maybe(d, "duration", c.traj_duration);
    maybe(d, "sample_rate", c.sample_rate);
    maybe(d, "plant_dt", c.data_plant_dt);
    maybe(d, "init_halfwidth", c.init_halfwidth);
    maybe(d, "thrust_lo", c.thrust_lo);
    maybe(d, "thrust_hi", c.thrust_hi);
    maybe(d, "torque_lo", c.torque_lo);
    maybe(d, "torque_hi", c.torque_hi);
    maybe(d, "seed", c.data_seed);
  }
  if (j.contains("training")) {
    const auto& t = j.at("training");
    maybe(t, "epochs", c.epochs);
    maybe(t, "lr", c.lr);
    maybe(t, "batch", c.batch);
    maybe(t, "hidden", c.hidden);
    maybe(t, "learned_blocks", c.learned_blocks);
    maybe(t, "val_fraction", c.val_fraction);
    maybe(t, "seeds", c.seeds);
  }
  if (j.contains("scenario")) {
    const auto& s = j.at("scenario");
    maybe(s, "ref_period", c.ref_period);
    maybe(s, "lem_a", c.lem_a);
    maybe(s, "lem_b", c.lem_b);
    maybe(s, "eval_T", c.eval_T);
    maybe(s, "open_loop_dt", c.open_loop_dt);
    maybe(s, "control_rate", c.control_rate);
    maybe(s, "closed_plant_dt", c.closed_plant_dt);
    maybe(s, "controller_gains", c.controller_gains);
    maybe(s, "derivative_source", c.derivative_source);
    maybe(s, "observer_pole", c.observer_pole);
    maybe(s, "start_offset", c.start_offset);
  }
  if (j.contains("nmpc")) {
    const auto& n = j.at("nmpc");
    maybe(n, "horizon", c.ocp_horizon);
    maybe(n, "steps", c.ocp_steps);
    maybe(n, "q", c.ocp_q);
    maybe(n, "r", c.ocp_r);
    maybe(n, "qt", c.ocp_qt);
    maybe(n, "max_iters", c.ocp_max_iters);
    maybe(n, "step_tol", c.ocp_step_tol);
    maybe(n, "init_damping", c.ocp_init_damping);
  }
  if (j.contains("harness")) {
    const auto& h = j.at("harness");
    maybe(h, "workers", c.workers);
    maybe(h, "out_dir", c.out_dir);
  }
}

}  // namespace

ExperimentConfig default_config() { return ExperimentConfig{}; }

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("load_config: cannot open " + path);
  json j;
  try {
    f >> j;
  } catch (const json::exception& e) {
    throw ParseError(std::string("load_config: ") + e.what());
  }
  ExperimentConfig cfg;
  from_json(j, cfg);
  return cfg;
}

void save_config(const ExperimentConfig& cfg, const std::string& path) {
  std::ofstream f(path);
  if (!f) throw ParseError("save_config: cannot open " + path);
  f << to_json(cfg).dump(2) << "\n";
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = to_json(cfg).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const char ch : dump) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ull;
  }
  std::ostringstream hex;
  hex << std::hex << h;
  return hex.str();
}

}  // namespace flatres
