#include "flatres/dataset.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "flatres/errors.hpp"

namespace flatres {

Eigen::Index Dataset::total_samples() const {
  Eigen::Index n = 0;
  for (const auto& tr : trajectories) n += tr.samples();
  return n;
}

int Dataset::state_dim() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].x.cols());
}

int Dataset::input_dim() const {
  return trajectories.empty() ? 0 : static_cast<int>(trajectories[0].u.cols());
}

namespace {

void print_double(std::string& out, double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

}  // namespace

void write_dataset_csv(const Dataset& ds, const std::string& path,
                       const std::vector<std::string>& comments) {
  std::ofstream f(path);
  if (!f) throw ParseError("write_dataset_csv: cannot open " + path);
  for (const auto& c : comments) f << "# " << c << "\n";
  f << "# seed: " << ds.seed << "\n";
  f << "# sample_rate: " << ds.sample_rate << "\n";
  f << "# duration: " << ds.duration << "\n";
  const int nx = ds.state_dim(), nu = ds.input_dim();
  f << "trajectory_id,t";
  for (int i = 0; i < nx; ++i) f << ",x" << i;
  for (int i = 0; i < nu; ++i) f << ",u" << i;
  f << "\n";
  std::string line;
  for (size_t id = 0; id < ds.trajectories.size(); ++id) {
    const auto& tr = ds.trajectories[id];
    for (Eigen::Index k = 0; k < tr.samples(); ++k) {
      line.clear();
      line += std::to_string(id);
      line += ',';
      print_double(line, tr.t[k]);
      for (Eigen::Index i = 0; i < tr.x.cols(); ++i) {
        line += ',';
        print_double(line, tr.x(k, i));
      }
      for (Eigen::Index i = 0; i < tr.u.cols(); ++i) {
        line += ',';
        print_double(line, tr.u(k, i));
      }
      line += '\n';
      f << line;
    }
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("read_dataset_csv: cannot open " + path);
  Dataset ds;
  std::string line;
  bool have_header = false;
  int nx = 0, nu = 0;
  std::vector<std::vector<double>> rows;  // id, t, x..., u...
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream ss(line.substr(1));
      std::string key;
      ss >> key;
      if (key == "seed:") ss >> ds.seed;
      if (key == "sample_rate:") ss >> ds.sample_rate;
      if (key == "duration:") ss >> ds.duration;
      continue;
    }
    if (!have_header) {
      // header row: trajectory_id,t,x0..:,u0..
      size_t xcount = 0, ucount = 0, pos = 0;
      while ((pos = line.find(",x", pos)) != std::string::npos) { ++xcount; pos += 2; }
      pos = 0;
      while ((pos = line.find(",u", pos)) != std::string::npos) { ++ucount; pos += 2; }
      if (line.rfind("trajectory_id,t", 0) != 0 || xcount == 0 || ucount == 0)
        throw ParseError("read_dataset_csv: missing or malformed header row");
      nx = static_cast<int>(xcount);
      nu = static_cast<int>(ucount);
      have_header = true;
      continue;
    }
    std::vector<double> row;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (static_cast<int>(row.size()) != 2 + nx + nu)
      throw ParseError("read_dataset_csv: wrong column count in data row");
    rows.push_back(std::move(row));
  }
  if (!have_header) throw ParseError("read_dataset_csv: empty file");

  size_t k = 0;
  while (k < rows.size()) {
    const auto id = rows[k][0];
    size_t end = k;
    while (end < rows.size() && rows[end][0] == id) ++end;
    Trajectory tr;
    const auto n = static_cast<Eigen::Index>(end - k);
    tr.t.resize(n);
    tr.x.resize(n, nx);
    tr.u.resize(n, nu);
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto& row = rows[k + static_cast<size_t>(j)];
      tr.t[j] = row[1];
      for (int i = 0; i < nx; ++i) tr.x(j, i) = row[2 + static_cast<size_t>(i)];
      for (int i = 0; i < nu; ++i)
        tr.u(j, i) = row[2 + static_cast<size_t>(nx) + static_cast<size_t>(i)];
      if (j > 0 && tr.t[j] <= tr.t[j - 1])
        throw ParseError("read_dataset_csv: timestamps not strictly increasing");
    }
    ds.trajectories.push_back(std::move(tr));
    k = end;
  }
  return ds;
}

std::uint64_t file_fingerprint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ParseError("file_fingerprint: cannot open " + path);
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buf[4096];
  while (f.read(buf, sizeof buf) || f.gcount() > 0) {
    const auto n = static_cast<size_t>(f.gcount());
    for (size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 0x100000001b3ull;
    }
    if (!f) break;
  }
  return h;
}

}  // namespace flatres
