#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace flatres {

/// Time-stamped state/input samples from one rollout.  Rows are samples;
/// timestamps are strictly increasing with uniform spacing.
struct Trajectory {
  Eigen::VectorXd t;
  Eigen::MatrixXd x;  // samples x state_dim
  Eigen::MatrixXd u;  // samples x input_dim

  Eigen::Index samples() const { return t.size(); }
};

struct Dataset {
  std::vector<Trajectory> trajectories;
  double sample_rate = 100.0;  // Hz
  double duration = 0.5;       // s
  std::uint64_t seed = 0;

  Eigen::Index total_samples() const;
  int state_dim() const;
  int input_dim() const;
};

/// Delimited text, one row per sample: trajectory_id, t, x..., u...;
/// leading '#' comment lines carry metadata (seed, config hash), the header
/// row is mandatory.  Doubles are printed with 17 significant digits so the
/// round trip is value-exact.
void write_dataset_csv(const Dataset& ds, const std::string& path,
                       const std::vector<std::string>& comments = {});
Dataset read_dataset_csv(const std::string& path);

/// SHA-agnostic content fingerprint used by the reproducibility checks.
std::uint64_t file_fingerprint(const std::string& path);

}  // namespace flatres
