#include "ultra/operators.hpp"

#include <algorithm>
#include <cmath>

#include "ultra/error.hpp"

namespace ultra {

namespace {

void check_relation(RelationRef r, const Signature& sig) {
  const std::size_t half = sig.dim() / 2;
  if (r.theta.size() != half || r.phi.size() != half || r.mu.size() != sig.q) {
    throw Error(ErrorCode::kDimension, "relation parameter counts do not match signature");
  }
}

// Derivative of G(angle) * (a, b) with respect to angle, contracted with
// (g0, g1), followed by the in-place transpose product G^T (g0, g1).
double givens_pair_backward(double angle, GivensMode mode, double a, double b,
                            double& g0, double& g1) {
  const double c = std::cos(angle), s = std::sin(angle);
  double dangle = 0.0;
  if (mode == GivensMode::kRotation) {
    dangle = g0 * (-s * a - c * b) + g1 * (c * a - s * b);
    const double n0 = c * g0 + s * g1;
    const double n1 = -s * g0 + c * g1;
    g0 = n0;
    g1 = n1;
  } else {
    dangle = g0 * (-s * a + c * b) + g1 * (c * a + s * b);
    const double n0 = c * g0 + s * g1;
    const double n1 = s * g0 - c * g1;
    g0 = n0;
    g1 = n1;
  }
  return dangle;
}

void givens_backward(std::span<const double> angles, std::span<const double> in,
                     GivensMode mode, std::span<double> g,
                     std::span<double> grad_angles) {
  for (std::size_t i = 0; i < angles.size(); ++i) {
    grad_angles[i] += givens_pair_backward(angles[i], mode, in[2 * i], in[2 * i + 1],
                                           g[2 * i], g[2 * i + 1]);
  }
}

void hyper_rot_backward(std::span<const double> mu, std::span<const double> in,
                        const Signature& sig, std::span<double> g,
                        std::span<double> grad_mu) {
  for (std::size_t i = 0; i < sig.q; ++i) {
    const double ch = std::cosh(mu[i]), sh = std::sinh(mu[i]);
    const double a = in[i], b = in[sig.p + i];
    const double ga = g[i], gb = g[sig.p + i];
    grad_mu[i] += ga * (sh * a + ch * b) + gb * (ch * a + sh * b);
    g[i] = ch * ga + sh * gb;
    g[sig.p + i] = sh * ga + ch * gb;
  }
}

}  // namespace

OperatorKind parse_operator_kind(const std::string& name) {
  if (name == "rotref") return OperatorKind::kRotRef;
  if (name == "rot") return OperatorKind::kRot;
  if (name == "ref") return OperatorKind::kRef;
  throw Error(ErrorCode::kConfig, "unknown operator '" + name + "' (expected rot, ref or rotref)");
}

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::kRotRef: return "rotref";
    case OperatorKind::kRot: return "rot";
    case OperatorKind::kRef: return "ref";
  }
  return "rotref";
}

RelationParams RelationParams::identity(const Signature& sig) {
  return {Vec(sig.dim() / 2, 0.0), Vec(sig.dim() / 2, 0.0), Vec(sig.q, 0.0)};
}

std::size_t relation_param_count(const Signature& sig) {
  return sig.dim() / 2 + sig.dim() / 2 + sig.q;
}

void givens_apply(std::span<const double> angles, std::span<double> v,
                  GivensMode mode, OpCount* count) {
  if (v.size() % 2 != 0) {
    throw Error(ErrorCode::kDimension, "givens_apply: odd-length vector");
  }
  if (v.size() != 2 * angles.size()) {
    throw Error(ErrorCode::kDimension, "givens_apply: vector length must be twice the angle count");
  }
  const double sign = mode == GivensMode::kRotation ? 1.0 : -1.0;
  for (std::size_t i = 0; i < angles.size(); ++i) {
    const double c = std::cos(angles[i]), s = std::sin(angles[i]);
    const double a = v[2 * i], b = v[2 * i + 1];
    v[2 * i] = c * a - sign * s * b;
    v[2 * i + 1] = s * a + sign * c * b;
  }
  if (count) {
    count->mul += 4 * angles.size();
    count->transcendental += 2 * angles.size();
  }
}

void block_orthogonal_apply(std::span<const double> angles, std::span<double> x,
                            const Signature& sig, GivensMode mode, OpCount* count) {
  sig.validate_for_operators();
  if (x.size() != sig.dim() || angles.size() != sig.dim() / 2) {
    throw Error(ErrorCode::kDimension, "block_orthogonal_apply: size mismatch");
  }
  givens_apply(angles.first(sig.p / 2), x.first(sig.p), mode, count);
  givens_apply(angles.subspan(sig.p / 2), x.subspan(sig.p), mode, count);
}

void hyper_rot_apply(std::span<const double> mu, std::span<double> x,
                     const Signature& sig, OpCount* count) {
  if (sig.q > sig.p) {
    throw Error(ErrorCode::kConfig, "hyper_rot_apply: requires q <= p");
  }
  if (mu.size() != sig.q || x.size() != sig.dim()) {
    throw Error(ErrorCode::kDimension, "hyper_rot_apply: size mismatch");
  }
  for (std::size_t i = 0; i < sig.q; ++i) {
    const double ch = std::cosh(mu[i]), sh = std::sinh(mu[i]);
    const double a = x[i], b = x[sig.p + i];
    x[i] = ch * a + sh * b;
    x[sig.p + i] = sh * a + ch * b;
  }
  if (count) {
    count->mul += 4 * sig.q;
    count->transcendental += 2 * sig.q;
  }
}

void relation_apply(RelationRef r, std::span<const double> x,
                    const Signature& sig, std::span<double> out,
                    OperatorKind kind, OpCount* count) {
  check_relation(r, sig);
  if (x.size() != sig.dim() || out.size() != sig.dim()) {
    throw Error(ErrorCode::kDimension, "relation_apply: size mismatch");
  }
  if (out.data() != x.data()) std::copy(x.begin(), x.end(), out.begin());
  if (kind != OperatorKind::kRot) {
    block_orthogonal_apply(r.phi, out, sig, GivensMode::kReflection, count);
  }
  hyper_rot_apply(r.mu, out, sig, count);
  if (kind != OperatorKind::kRef) {
    block_orthogonal_apply(r.theta, out, sig, GivensMode::kRotation, count);
  }
}

Vec relation_apply(RelationRef r, std::span<const double> x,
                   const Signature& sig, OperatorKind kind) {
  Vec out(x.size());
  relation_apply(r, x, sig, out, kind);
  return out;
}

void relation_backward(RelationRef r, std::span<const double> x,
                       const Signature& sig, OperatorKind kind,
                       std::span<double> g, RelationGradRef grad) {
  check_relation(r, sig);
  // Recompute the stage inputs: y1 = V x, y2 = H y1.
  Vec y1(x.begin(), x.end());
  if (kind != OperatorKind::kRot) {
    block_orthogonal_apply(r.phi, y1, sig, GivensMode::kReflection);
  }
  Vec y2 = y1;
  hyper_rot_apply(r.mu, y2, sig);

  if (kind != OperatorKind::kRef) givens_backward(r.theta, y2, GivensMode::kRotation, g, grad.theta);
  hyper_rot_backward(r.mu, y1, sig, g, grad.mu);
  if (kind != OperatorKind::kRot) givens_backward(r.phi, x, GivensMode::kReflection, g, grad.phi);
}

void euclidean_relation_apply(RelationRef r, std::span<const double> x,
                              std::span<double> out, OperatorKind kind) {
  if (out.data() != x.data()) std::copy(x.begin(), x.end(), out.begin());
  if (kind != OperatorKind::kRot) givens_apply(r.phi, out, GivensMode::kReflection);
  if (kind != OperatorKind::kRef) givens_apply(r.theta, out, GivensMode::kRotation);
}

void euclidean_relation_backward(RelationRef r, std::span<const double> x,
                                 OperatorKind kind, std::span<double> g,
                                 RelationGradRef grad) {
  Vec y1(x.begin(), x.end());
  if (kind != OperatorKind::kRot) givens_apply(r.phi, y1, GivensMode::kReflection);
  if (kind != OperatorKind::kRef) givens_backward(r.theta, y1, GivensMode::kRotation, g, grad.theta);
  if (kind != OperatorKind::kRot) givens_backward(r.phi, x, GivensMode::kReflection, g, grad.phi);
}

DenseOperator DenseOperator::identity(std::size_t n) {
  DenseOperator m(n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

DenseOperator DenseOperator::operator*(const DenseOperator& rhs) const {
  if (rhs.n_ != n_) throw Error(ErrorCode::kDimension, "matrix product: size mismatch");
  DenseOperator out(n_);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t k = 0; k < n_; ++k) {
      const double a = (*this)(i, k);
      if (a == 0.0) continue;
      for (std::size_t j = 0; j < n_; ++j) out(i, j) += a * rhs(k, j);
    }
  return out;
}

Vec DenseOperator::operator*(std::span<const double> v) const {
  if (v.size() != n_) throw Error(ErrorCode::kDimension, "matrix-vector product: size mismatch");
  Vec out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = 0; j < n_; ++j) out[i] += (*this)(i, j) * v[j];
  return out;
}

DenseOperator as_dense(RelationRef r, const Signature& sig, OperatorKind kind) {
  const std::size_t d = sig.dim();
  DenseOperator m(d);
  Vec e(d, 0.0), col(d);
  for (std::size_t j = 0; j < d; ++j) {
    std::fill(e.begin(), e.end(), 0.0);
    e[j] = 1.0;
    relation_apply(r, e, sig, col, kind);
    for (std::size_t i = 0; i < d; ++i) m(i, j) = col[i];
  }
  return m;
}

double j_orth_defect(const DenseOperator& m, const Signature& sig) {
  const std::size_t d = m.size();
  if (d != sig.dim()) throw Error(ErrorCode::kDimension, "j_orth_defect: size mismatch");
  auto j = [&](std::size_t k) { return k < sig.p ? 1.0 : -1.0; };
  double worst = 0.0;
  for (std::size_t a = 0; a < d; ++a)
    for (std::size_t b = 0; b < d; ++b) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += m(k, a) * j(k) * m(k, b);
      const double target = a == b ? j(a) : 0.0;
      worst = std::max(worst, std::abs(s - target));
    }
  return worst;
}

DenseOperator lorentz_boost(std::span<const double> b, const Signature& sig) {
  if (sig.q != 1) throw Error(ErrorCode::kConfig, "lorentz_boost: requires q = 1");
  if (b.size() != sig.p) throw Error(ErrorCode::kDimension, "lorentz_boost: |b| must equal p");
  double nb_sq = 0.0;
  for (double v : b) nb_sq += v * v;
  const double gamma = std::sqrt(1.0 + nb_sq);
  // (I + b b^T)^{1/2} = I + (gamma - 1) / |b|^2 * b b^T, and
  // (gamma - 1) / |b|^2 = 1 / (gamma + 1).
  const double k = 1.0 / (gamma + 1.0);
  DenseOperator m = DenseOperator::identity(sig.dim());
  for (std::size_t i = 0; i < sig.p; ++i) {
    for (std::size_t j = 0; j < sig.p; ++j) m(i, j) += k * b[i] * b[j];
    m(i, sig.p) = b[i];
    m(sig.p, i) = b[i];
  }
  m(sig.p, sig.p) = gamma;
  return m;
}

}  // namespace ultra
