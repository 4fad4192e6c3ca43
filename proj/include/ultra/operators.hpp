#pragma once

#include <cstddef>
#include <span>
#include <string>

#include "ultra/geometry.hpp"

namespace ultra {

enum class GivensMode { kRotation, kReflection };

// Which circular operators a relation uses around the hyperbolic rotation.
// kRotRef is the full U * H * V; kRot drops V, kRef drops U.
enum class OperatorKind { kRotRef, kRot, kRef };

OperatorKind parse_operator_kind(const std::string& name);
std::string to_string(OperatorKind kind);

// Instrumentation for the complexity checks. Counts scalar multiplies and
// transcendental evaluations performed by the kernels below.
struct OpCount {
  std::size_t mul = 0;
  std::size_t transcendental = 0;
};

// Owning parameters of one relation.
struct RelationParams {
  Vec theta;  // d/2 rotation angles: first p/2 act on space, rest on time
  Vec phi;    // d/2 reflection angles, same layout
  Vec mu;     // q boost magnitudes

  static RelationParams identity(const Signature& sig);
};

// Non-owning view, used for parameters living inside a Model.
struct RelationRef {
  std::span<const double> theta;
  std::span<const double> phi;
  std::span<const double> mu;

  RelationRef(std::span<const double> th, std::span<const double> ph,
              std::span<const double> m)
      : theta(th), phi(ph), mu(m) {}
  RelationRef(const RelationParams& r) : theta(r.theta), phi(r.phi), mu(r.mu) {}
};

struct RelationGradRef {
  std::span<double> theta;
  std::span<double> phi;
  std::span<double> mu;
};

// (p+q)/2 + (p+q)/2 + q
std::size_t relation_param_count(const Signature& sig);

// Applies G^+(angle_i) or G^-(angle_i) to coordinate pairs (2i, 2i+1), in place.
void givens_apply(std::span<const double> angles, std::span<double> v,
                  GivensMode mode, OpCount* count = nullptr);

// Space pairs take the first p/2 angles, time pairs the remaining q/2.
void block_orthogonal_apply(std::span<const double> angles, std::span<double> x,
                            const Signature& sig, GivensMode mode,
                            OpCount* count = nullptr);

// Couples space dim i with time dim p+i for i < q.
void hyper_rot_apply(std::span<const double> mu, std::span<double> x,
                     const Signature& sig, OpCount* count = nullptr);

// f_r(x) = U_theta(H_mu(V_phi(x))), written to out (which may alias x).
void relation_apply(RelationRef r, std::span<const double> x,
                    const Signature& sig, std::span<double> out,
                    OperatorKind kind = OperatorKind::kRotRef,
                    OpCount* count = nullptr);
Vec relation_apply(RelationRef r, std::span<const double> x,
                   const Signature& sig,
                   OperatorKind kind = OperatorKind::kRotRef);

// Reverse pass. On entry g holds dL/df_r(x); on exit it holds dL/dx. Parameter
// gradients are accumulated into grad.
void relation_backward(RelationRef r, std::span<const double> x,
                       const Signature& sig, OperatorKind kind,
                       std::span<double> g, RelationGradRef grad);

// Rot/Ref without the hyperbolic rotation, acting on all d coordinates; used
// by the Euclidean baseline.
void euclidean_relation_apply(RelationRef r, std::span<const double> x,
                              std::span<double> out, OperatorKind kind);
void euclidean_relation_backward(RelationRef r, std::span<const double> x,
                                 OperatorKind kind, std::span<double> g,
                                 RelationGradRef grad);

// Dense square matrix, row-major. Test-oracle representation of an operator.
class DenseOperator {
 public:
  explicit DenseOperator(std::size_t n) : n_(n), data_(n * n, 0.0) {}

  static DenseOperator identity(std::size_t n);

  std::size_t size() const { return n_; }
  double& operator()(std::size_t row, std::size_t col) { return data_[row * n_ + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * n_ + col]; }

  DenseOperator operator*(const DenseOperator& rhs) const;
  Vec operator*(std::span<const double> v) const;

 private:
  std::size_t n_;
  Vec data_;
};

DenseOperator as_dense(RelationRef r, const Signature& sig,
                       OperatorKind kind = OperatorKind::kRotRef);

// max |M^T J M - J| with J = diag(I_p, -I_q)
double j_orth_defect(const DenseOperator& m, const Signature& sig);

// Lorentz boost [[(I + b b^T)^{1/2}, b], [b^T, sqrt(1 + |b|^2)]] for q = 1.
DenseOperator lorentz_boost(std::span<const double> b, const Signature& sig);

}  // namespace ultra
