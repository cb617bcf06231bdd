#include "flatres/residual.hpp"

#include <cstring>
#include <stdexcept>

namespace flatres {

namespace {

std::uint64_t fnv1a(std::uint64_t h, const void* data, size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

std::uint64_t fnv1a_mat(std::uint64_t h, const Eigen::MatrixXd& m) {
  return fnv1a(h, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

}  // namespace

Eigen::VectorXd MlpBlock::params() const {
  Eigen::VectorXd p(param_count());
  Eigen::Index o = 0;
  for (int j = 0; j < hidden; ++j)
    for (int i = 0; i < in_dim; ++i) p[o++] = w1(j, i);
  for (int j = 0; j < hidden; ++j) p[o++] = b1[j];
  for (int k = 0; k < out_dim; ++k)
    for (int j = 0; j < hidden; ++j) p[o++] = w2(k, j);
  for (int k = 0; k < out_dim; ++k) p[o++] = b2[k];
  return p;
}

void MlpBlock::set_params(const Eigen::VectorXd& p) {
  if (p.size() != param_count())
    throw std::invalid_argument("MlpBlock::set_params: size mismatch");
  Eigen::Index o = 0;
  for (int j = 0; j < hidden; ++j)
    for (int i = 0; i < in_dim; ++i) w1(j, i) = p[o++];
  for (int j = 0; j < hidden; ++j) b1[j] = p[o++];
  for (int k = 0; k < out_dim; ++k)
    for (int j = 0; j < hidden; ++j) w2(k, j) = p[o++];
  for (int k = 0; k < out_dim; ++k) b2[k] = p[o++];
}

MlpBlock make_mlp(int in_dim, int out_dim, int hidden) {
  MlpBlock b;
  b.in_dim = in_dim;
  b.out_dim = out_dim;
  b.hidden = hidden;
  b.w1 = Eigen::MatrixXd::Zero(hidden, in_dim);
  b.b1 = Eigen::VectorXd::Zero(hidden);
  b.w2 = Eigen::MatrixXd::Zero(out_dim, hidden);
  b.b2 = Eigen::VectorXd::Zero(out_dim);
  b.in_mean = Eigen::VectorXd::Zero(in_dim);
  b.in_scale = Eigen::VectorXd::Ones(in_dim);
  return b;
}

bool LowerTriangularResidual::is_zero() const {
  for (int i = 0; i < r; ++i)
    if (block_active(i)) return false;
  return true;
}

std::uint64_t LowerTriangularResidual::checksum() const {
  std::uint64_t h = 0xcbf29ce484222325ull;
  h = fnv1a(h, &r, sizeof r);
  h = fnv1a(h, &m, sizeof m);
  for (const auto& blk : blocks) {
    const int kind = static_cast<int>(blk.kind);
    const int enabled = blk.enabled ? 1 : 0;
    h = fnv1a(h, &kind, sizeof kind);
    h = fnv1a(h, &enabled, sizeof enabled);
    if (blk.kind == BlockKind::Mlp) {
      h = fnv1a_mat(h, blk.mlp.w1);
      h = fnv1a_mat(h, blk.mlp.b1);
      h = fnv1a_mat(h, blk.mlp.w2);
      h = fnv1a_mat(h, blk.mlp.b2);
      h = fnv1a_mat(h, blk.mlp.in_mean);
      h = fnv1a_mat(h, blk.mlp.in_scale);
    }
  }
  return h;
}

Eigen::VectorXd residual_eval(const LowerTriangularResidual& res,
                              const Eigen::VectorXd& x) {
  if (x.size() != res.r * res.m)
    throw std::invalid_argument("residual_eval: dimension mismatch");
  SVec<double> xs(x.data(), x.data() + x.size());
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.size());
  for (int i = 0; i < res.r; ++i) {
    if (!res.block_active(i)) continue;
    SVec<double> d = res.eval_block<double>(i, xs);
    for (int j = 0; j < res.m; ++j) out[i * res.m + j] = d[static_cast<size_t>(j)];
  }
  return out;
}

LowerTriangularResidual zero_residual(int r, int m) {
  LowerTriangularResidual res;
  res.r = r;
  res.m = m;
  res.blocks.resize(static_cast<size_t>(r));
  return res;
}

}  // namespace flatres
