#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ultra {

using Vec = std::vector<double>;

inline constexpr double kTolManifold = 1e-9;
inline constexpr double kEpsTime = 1e-8;

// Ambient space R^{p,q}: coordinates are ordered space dims [0, p) followed
// by time dims [p, p+q). Points of the pseudo-hyperboloid satisfy
// <x,x>_q = -alpha^2.
struct Signature {
  std::size_t p = 0;
  std::size_t q = 0;
  double alpha = 1.0;

  std::size_t dim() const { return p + q; }

  // p >= q >= 1, alpha > 0.
  void validate() const;
  // Additionally p and q even, which the Givens pairing needs.
  void validate_for_operators() const;

  bool operator==(const Signature&) const = default;
};

// <x,y>_q = sum_{i<p} x_i y_i - sum_{j>=p} x_j y_j
double qdot(std::span<const double> x, std::span<const double> y,
            const Signature& sig);

// |<x,x>_q + alpha^2|
double manifold_defect(std::span<const double> x, const Signature& sig);

// Point of R^p x S^q_alpha.
struct ProductPoint {
  Vec space;
  Vec sphere_time;
};

ProductPoint psi(std::span<const double> x, const Signature& sig);
Vec psi_inv(const ProductPoint& z, const Signature& sig);

// If the time part of a free parameter is shorter than kEpsTime, shifts its
// first time coordinate by kEpsTime. Returns true when the shift applied.
bool apply_time_guard(std::span<double> z, const Signature& sig);

// phi = psi_inv o psi on free parameters (s, t) in R^p x R^q_*. The guard
// above is applied to a copy first.
Vec phi(std::span<const double> z, const Signature& sig);
void phi_into(std::span<const double> z, const Signature& sig,
              std::span<double> out);

// Reverse pass of phi: given dL/dx at x = phi(z), accumulates dL/dz into gz.
void phi_backward(std::span<const double> z, const Signature& sig,
                  std::span<const double> gx, std::span<double> gz);

// rho_x(y): keeps x's space part, rescales y's time part to the norm that puts
// the result back on the manifold.
Vec project_conic(std::span<const double> x, std::span<const double> y,
                  const Signature& sig);

// Great-circle distance between two points sharing a space part.
double dist_sphere(std::span<const double> a, std::span<const double> b,
                   const Signature& sig);

// Hyperbolic distance between two points with parallel time parts.
double dist_hyper(std::span<const double> a, std::span<const double> b,
                  const Signature& sig);

// -<rho_x(y), y>_q / alpha^2 before any clamping; >= 1 for manifold points.
double hyper_leg_argument(std::span<const double> x, std::span<const double> y,
                          const Signature& sig);

// Spherical leg x -> rho_x(y) followed by hyperbolic leg rho_x(y) -> y.
double manhattan_leg(std::span<const double> x, std::span<const double> y,
                     const Signature& sig);

double dist_manhattan(std::span<const double> x, std::span<const double> y,
                      const Signature& sig);

// Computes dist_manhattan(x, y) and accumulates scale * d(dist)/dx into gx and
// scale * d(dist)/dy into gy. The gradient follows the selected branch of the
// min; ties select the x -> y branch.
double dist_manhattan_backward(std::span<const double> x,
                               std::span<const double> y,
                               const Signature& sig, double scale,
                               std::span<double> gx, std::span<double> gy);

// Angle in [0, pi] between two nonzero vectors, stable near 0 and pi.
double vector_angle(std::span<const double> u, std::span<const double> v);

}  // namespace ultra
