#include "flatres/model_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "flatres/errors.hpp"

namespace flatres {

namespace {

constexpr int kFormatVersion = 1;

void write_vector(std::ofstream& f, const char* name,
                  const Eigen::VectorXd& v) {
  f << name << " " << v.size();
  char buf[32];
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    std::snprintf(buf, sizeof buf, " %.17g", v[i]);
    f << buf;
  }
  f << "\n";
}

void write_matrix(std::ofstream& f, const char* name,
                  const Eigen::MatrixXd& m) {
  f << name << " " << m.rows() << " " << m.cols();
  char buf[32];
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, " %.17g", m(i, j));
      f << buf;
    }
  f << "\n";
}

std::istringstream next_record(std::ifstream& f, const std::string& expect) {
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    std::string key;
    ss >> key;
    if (key != expect)
      throw ParseError("model file: expected '" + expect + "', found '" + key +
                       "'");
    return ss;
  }
  throw ParseError("model file: truncated, missing '" + expect + "'");
}

Eigen::VectorXd read_vector(std::ifstream& f, const std::string& name) {
  auto ss = next_record(f, name);
  Eigen::Index n = -1;
  ss >> n;
  if (n < 0) throw ParseError("model file: bad vector size for " + name);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i)
    if (!(ss >> v[i])) throw ParseError("model file: truncated vector " + name);
  return v;
}

Eigen::MatrixXd read_matrix(std::ifstream& f, const std::string& name) {
  auto ss = next_record(f, name);
  Eigen::Index rows = -1, cols = -1;
  ss >> rows >> cols;
  if (rows < 0 || cols < 0)
    throw ParseError("model file: bad matrix shape for " + name);
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j)
      if (!(ss >> m(i, j)))
        throw ParseError("model file: truncated matrix " + name);
  return m;
}

}  // namespace

void save_model(const LowerTriangularResidual& res, const std::string& path,
                const std::vector<std::string>& comments) {
  std::ofstream f(path);
  if (!f) throw ParseError("save_model: cannot open " + path);
  for (const auto& c : comments) f << "# " << c << "\n";
  f << "format_version " << kFormatVersion << "\n";
  f << "blocks " << res.r << " width " << res.m << "\n";
  for (int i = 0; i < res.r; ++i) {
    const auto& blk = res.blocks[static_cast<size_t>(i)];
    if (blk.kind == LowerTriangularResidual::BlockKind::Exact)
      throw std::invalid_argument(
          "save_model: exact-closure blocks are not serializable");
    const char* kind =
        blk.kind == LowerTriangularResidual::BlockKind::Mlp ? "mlp" : "zero";
    f << "block " << i << " " << kind << " " << (blk.enabled ? 1 : 0) << "\n";
    if (blk.kind == LowerTriangularResidual::BlockKind::Mlp) {
      const auto& mlp = blk.mlp;
      f << "shape " << mlp.in_dim << " " << mlp.hidden << " " << mlp.out_dim
        << "\n";
      write_matrix(f, "w1", mlp.w1);
      write_vector(f, "b1", mlp.b1);
      write_matrix(f, "w2", mlp.w2);
      write_vector(f, "b2", mlp.b2);
      write_vector(f, "in_mean", mlp.in_mean);
      write_vector(f, "in_scale", mlp.in_scale);
    }
  }
}

LowerTriangularResidual load_model(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ParseError("load_model: cannot open " + path);
  {
    auto ss = next_record(f, "format_version");
    int version = -1;
    ss >> version;
    if (version != kFormatVersion)
      throw ParseError("load_model: unsupported format version " +
                       std::to_string(version));
  }
  int r = 0, m = 0;
  {
    auto ss = next_record(f, "blocks");
    std::string width_kw;
    ss >> r >> width_kw >> m;
    if (r <= 0 || m <= 0 || width_kw != "width")
      throw ParseError("load_model: bad blocks header");
  }
  LowerTriangularResidual res = zero_residual(r, m);
  for (int i = 0; i < r; ++i) {
    auto ss = next_record(f, "block");
    int idx = -1, enabled = -1;
    std::string kind;
    ss >> idx >> kind >> enabled;
    if (idx != i || (kind != "mlp" && kind != "zero") ||
        (enabled != 0 && enabled != 1))
      throw ParseError("load_model: bad block record " + std::to_string(i));
    auto& blk = res.blocks[static_cast<size_t>(i)];
    blk.enabled = enabled == 1;
    if (kind == "zero") {
      blk.kind = LowerTriangularResidual::BlockKind::Zero;
      continue;
    }
    blk.kind = LowerTriangularResidual::BlockKind::Mlp;
    auto shape = next_record(f, "shape");
    int in = 0, hid = 0, out = 0;
    shape >> in >> hid >> out;
    if (in != (i + 1) * m || out != m || hid <= 0)
      throw ParseError("load_model: block shape does not match the wiring");
    blk.mlp = make_mlp(in, out, hid);
    blk.mlp.w1 = read_matrix(f, "w1");
    blk.mlp.b1 = read_vector(f, "b1");
    blk.mlp.w2 = read_matrix(f, "w2");
    blk.mlp.b2 = read_vector(f, "b2");
    blk.mlp.in_mean = read_vector(f, "in_mean");
    blk.mlp.in_scale = read_vector(f, "in_scale");
    if (blk.mlp.w1.rows() != hid || blk.mlp.w1.cols() != in ||
        blk.mlp.w2.rows() != out || blk.mlp.w2.cols() != hid ||
        blk.mlp.b1.size() != hid || blk.mlp.b2.size() != out ||
        blk.mlp.in_mean.size() != in || blk.mlp.in_scale.size() != in)
      throw ParseError("load_model: weight shapes disagree with the header");
  }
  return res;
}

}  // namespace flatres
