#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "flatres/dataset.hpp"
#include "flatres/experiments.hpp"
#include "flatres/sim_control.hpp"

using namespace flatres;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(FLATRES_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string count_rows(const fs::path& file, int* data_rows, bool* has_header) {
  std::ifstream f(file);
  REQUIRE(f.good());
  std::string line, header;
  *data_rows = 0;
  *has_header = false;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!*has_header) {
      *has_header = true;
      header = line;
      continue;
    }
    ++*data_rows;
  }
  return header;
}

}  // namespace

TEST_CASE("dataset csv round trip preserves values and metadata") {
  DataGenConfig cfg;
  cfg.n_trajectories = 3;
  cfg.seed = 77;
  const Dataset ds = generate_training_data(cfg);
  const fs::path dir = temp_dir("flatres-dataset-io");
  const std::string path = (dir / "ds.csv").string();
  write_dataset_csv(ds, path, {"config_hash: deadbeef"});
  const Dataset back = read_dataset_csv(path);
  CHECK(back.seed == 77);
  CHECK(back.sample_rate == 100.0);
  REQUIRE(back.trajectories.size() == 3);
  for (size_t n = 0; n < 3; ++n) {
    CHECK(back.trajectories[n].x == ds.trajectories[n].x);
    CHECK(back.trajectories[n].u == ds.trajectories[n].u);
    CHECK(back.trajectories[n].t == ds.trajectories[n].t);
  }
  fs::remove_all(dir);
}

TEST_CASE("dataset reader rejects malformed files") {
  const fs::path dir = temp_dir("flatres-dataset-bad");
  const std::string path = (dir / "bad.csv").string();
  {
    std::ofstream f(path);
    f << "1,2,3\n";  // no header
  }
  CHECK_THROWS_AS(read_dataset_csv(path), ParseError);
  {
    std::ofstream f(path);
    f << "trajectory_id,t,x0,u0\n0,0.0,1.0\n";  // wrong column count
  }
  CHECK_THROWS_AS(read_dataset_csv(path), ParseError);
  fs::remove_all(dir);
}

TEST_CASE("trajectory csv carries the controller timing column") {
  SimTrajectory traj;
  for (int k = 0; k < 3; ++k) {
    traj.t.push_back(0.01 * k);
    traj.x.push_back(Eigen::VectorXd::Constant(2, k));
    traj.u.push_back(Eigen::VectorXd::Constant(1, -k));
    traj.controller_ns.push_back(1000 + k);
  }
  const fs::path dir = temp_dir("flatres-traj-io");
  const std::string path = (dir / "traj.csv").string();
  write_trajectory_csv(traj, path, {"seed: 0"});
  int rows = 0;
  bool has_header = false;
  const std::string header = count_rows(path, &rows, &has_header);
  CHECK(has_header);
  CHECK(rows == 3);
  CHECK(header == "t,x0,x1,u0,controller_ns");
  fs::remove_all(dir);
}

TEST_CASE("config round trip and stable hashing") {
  ExperimentConfig cfg = default_config();
  cfg.n_trajectories = 42;
  cfg.seeds = {3, 5};
  const fs::path dir = temp_dir("flatres-config-io");
  const std::string path = (dir / "config.json").string();
  save_config(cfg, path);
  const ExperimentConfig back = load_config(path);
  CHECK(back.n_trajectories == 42);
  CHECK(back.seeds == std::vector<std::uint64_t>{3, 5});
  CHECK(config_hash(back) == config_hash(cfg));
  ExperimentConfig other = cfg;
  other.lr *= 2.0;
  CHECK(config_hash(other) != config_hash(cfg));
  fs::remove_all(dir);
}

TEST_CASE("cli gen-data writes the expected dataset and reproduces itself") {
  const fs::path dir = temp_dir("flatres-cli-gen");
  const fs::path config = dir / "config.json";
  {
    ExperimentConfig cfg = default_config();
    cfg.n_trajectories = 1;
    cfg.out_dir = (dir / "out").string();
    save_config(cfg, config.string());
  }
  REQUIRE(run_cli("gen-data --config " + config.string()) == 0);

  ExperimentConfig cfg = load_config(config.string());
  const RunPaths paths = make_run_paths(cfg);
  const fs::path dataset = fs::path(paths.dataset) / "dataset.csv";
  REQUIRE(fs::exists(dataset));
  int rows = 0;
  bool has_header = false;
  count_rows(dataset, &rows, &has_header);
  CHECK(has_header);
  CHECK(rows == 50);  // one trajectory at 100 Hz for 0.5 s
  CHECK(fs::exists(fs::path(paths.root) / "manifest-gen-data.json"));

  const std::uint64_t first = file_fingerprint(dataset.string());
  fs::remove(dataset);
  REQUIRE(run_cli("gen-data --config " + config.string()) == 0);
  CHECK(file_fingerprint(dataset.string()) == first);
  fs::remove_all(dir);
}

TEST_CASE("cli train produces one model file per seed") {
  const fs::path dir = temp_dir("flatres-cli-train");
  const fs::path config = dir / "config.json";
  {
    ExperimentConfig cfg = default_config();
    cfg.n_trajectories = 40;
    cfg.epochs = 2;
    cfg.seeds = {0, 1, 2};
    cfg.out_dir = (dir / "out").string();
    save_config(cfg, config.string());
  }
  REQUIRE(run_cli("train --config " + config.string()) == 0);
  ExperimentConfig cfg = load_config(config.string());
  const RunPaths paths = make_run_paths(cfg);
  for (int seed : {0, 1, 2}) {
    CHECK(fs::exists(fs::path(paths.models) /
                     ("model-seed" + std::to_string(seed) + ".txt")));
    // 2-epoch loss log plus header
    int rows = 0;
    bool has_header = false;
    count_rows(fs::path(paths.logs) /
                   ("train-seed" + std::to_string(seed) + ".csv"),
               &rows, &has_header);
    CHECK(has_header);
    CHECK(rows == 2);
  }
  fs::remove_all(dir);
}

TEST_CASE("cli seed override trims the training set") {
  const fs::path dir = temp_dir("flatres-cli-seeds");
  const fs::path config = dir / "config.json";
  {
    ExperimentConfig cfg = default_config();
    cfg.n_trajectories = 20;
    cfg.epochs = 1;
    cfg.out_dir = (dir / "out").string();
    save_config(cfg, config.string());
  }
  REQUIRE(run_cli("train --config " + config.string() + " --seeds 7") == 0);
  ExperimentConfig cfg = load_config(config.string());
  cfg.seeds = {7};
  const RunPaths paths = make_run_paths(cfg);
  CHECK(fs::exists(fs::path(paths.models) / "model-seed7.txt"));
  fs::remove_all(dir);
}

TEST_CASE("cli verify passes clean and fails under fault injection") {
  CHECK(run_cli("verify --seed 1 > /dev/null") == 0);
  CHECK(run_cli("verify --seed 1 --inject-fault h2-sign > /dev/null 2>&1") != 0);
  CHECK(run_cli("verify --inject-fault bogus > /dev/null 2>&1") == 2);
}

TEST_CASE("cli verify reports are reproducible for a fixed seed") {
  const fs::path dir = temp_dir("flatres-cli-verify");
  const std::string a = (dir / "a.txt").string();
  const std::string b = (dir / "b.txt").string();
  REQUIRE(run_cli("verify --seed 4 > " + a) == 0);
  REQUIRE(run_cli("verify --seed 4 > " + b) == 0);
  CHECK(file_fingerprint(a) == file_fingerprint(b));
  fs::remove_all(dir);
}
