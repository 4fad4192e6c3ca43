#include "ultra/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "ultra/error.hpp"

namespace ultra {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void require_dim(std::span<const double> x, const Signature& sig,
                 const char* what) {
  if (x.size() != sig.dim()) {
    throw Error(ErrorCode::kDimension,
                std::string(what) + ": expected length " +
                    std::to_string(sig.dim()) + ", got " +
                    std::to_string(x.size()));
  }
}

std::span<const double> space_of(std::span<const double> x,
                                 const Signature& sig) {
  return x.first(sig.p);
}

std::span<const double> time_of(std::span<const double> x,
                                const Signature& sig) {
  return x.subspan(sig.p, sig.q);
}

// Radius of the time sphere through a point whose space part is s.
double time_radius(std::span<const double> s, double alpha) {
  return std::sqrt(alpha * alpha + dot(s, s));
}

struct LegTerms {
  double rx = 0, ry = 0;
  double theta = 0;
  double dr = 0;        // rx - ry
  double chord_sq = 0;  // <a-y, a-y>_q with a = rho_x(y), before clamping
  double value = 0;
};

LegTerms leg_terms(std::span<const double> x, std::span<const double> y,
                   const Signature& sig) {
  const auto xp = space_of(x, sig), yp = space_of(y, sig);
  LegTerms t;
  t.rx = time_radius(xp, sig.alpha);
  t.ry = time_radius(yp, sig.alpha);
  t.theta = vector_angle(time_of(x, sig), time_of(y, sig));

  // rx - ry = <xp+yp, xp-yp> / (rx+ry), free of cancellation.
  double diff_sq = 0.0, sum_dot_diff = 0.0;
  for (std::size_t i = 0; i < sig.p; ++i) {
    const double d = xp[i] - yp[i];
    diff_sq += d * d;
    sum_dot_diff += (xp[i] + yp[i]) * d;
  }
  t.dr = sum_dot_diff / (t.rx + t.ry);
  t.chord_sq = diff_sq - t.dr * t.dr;

  const double chord = std::sqrt(std::max(0.0, t.chord_sq));
  t.value = t.rx * t.theta + 2.0 * sig.alpha * std::asinh(chord / (2.0 * sig.alpha));
  return t;
}

void leg_backward(std::span<const double> x, std::span<const double> y,
                  const Signature& sig, const LegTerms& t, double scale,
                  std::span<double> gx, std::span<double> gy) {
  const std::size_t p = sig.p, q = sig.q;
  const auto xp = space_of(x, sig), yp = space_of(y, sig);
  const auto xq = time_of(x, sig), yq = time_of(y, sig);

  // Spherical leg: rx * theta.
  for (std::size_t i = 0; i < p; ++i) gx[i] += scale * t.theta * xp[i] / t.rx;

  const double nx = norm(xq), ny = norm(yq);
  if (nx > 0.0 && ny > 0.0) {
    double c = 0.0;
    for (std::size_t j = 0; j < q; ++j) c += (xq[j] / nx) * (yq[j] / ny);
    c = std::clamp(c, -1.0, 1.0);
    double wx_sq = 0.0, wy_sq = 0.0;
    for (std::size_t j = 0; j < q; ++j) {
      const double ux = xq[j] / nx, uy = yq[j] / ny;
      wx_sq += (uy - c * ux) * (uy - c * ux);
      wy_sq += (ux - c * uy) * (ux - c * uy);
    }
    const double wx = std::sqrt(wx_sq), wy = std::sqrt(wy_sq);
    for (std::size_t j = 0; j < q; ++j) {
      const double ux = xq[j] / nx, uy = yq[j] / ny;
      if (wx > 0.0) gx[p + j] -= scale * t.rx * (uy - c * ux) / (wx * nx);
      if (wy > 0.0) gy[p + j] -= scale * t.rx * (ux - c * uy) / (wy * ny);
    }
  }

  // Hyperbolic leg: 2 alpha asinh(chord / 2 alpha). Zero gradient in the
  // clamped region and at the cusp chord == 0.
  if (t.chord_sq > 0.0) {
    const double chord = std::sqrt(t.chord_sq);
    const double half = chord / (2.0 * sig.alpha);
    const double dvalue_dchord = 1.0 / std::sqrt(1.0 + half * half);
    const double k = scale * dvalue_dchord / (2.0 * chord);
    for (std::size_t i = 0; i < p; ++i) {
      const double d = xp[i] - yp[i];
      gx[i] += k * (2.0 * d - 2.0 * t.dr * xp[i] / t.rx);
      gy[i] += k * (-2.0 * d + 2.0 * t.dr * yp[i] / t.ry);
    }
  }
}

}  // namespace

void Signature::validate() const {
  if (q < 1 || p < q) {
    throw Error(ErrorCode::kConfig, "signature requires p >= q >= 1, got p=" +
                                        std::to_string(p) +
                                        " q=" + std::to_string(q));
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::kConfig, "signature requires alpha > 0");
  }
}

void Signature::validate_for_operators() const {
  validate();
  if (p % 2 != 0 || q % 2 != 0) {
    throw Error(ErrorCode::kConfig,
                "relation operators require even p and q, got p=" +
                    std::to_string(p) + " q=" + std::to_string(q));
  }
}

double qdot(std::span<const double> x, std::span<const double> y,
            const Signature& sig) {
  require_dim(x, sig, "qdot");
  require_dim(y, sig, "qdot");
  double s = 0.0;
  for (std::size_t i = 0; i < sig.p; ++i) s += x[i] * y[i];
  for (std::size_t j = sig.p; j < sig.dim(); ++j) s -= x[j] * y[j];
  return s;
}

double manifold_defect(std::span<const double> x, const Signature& sig) {
  return std::abs(qdot(x, x, sig) + sig.alpha * sig.alpha);
}

ProductPoint psi(std::span<const double> x, const Signature& sig) {
  require_dim(x, sig, "psi");
  const auto t = time_of(x, sig);
  const double nt = norm(t);
  if (nt == 0.0) {
    throw Error(ErrorCode::kDegeneratePoint, "psi: time part has zero norm");
  }
  ProductPoint z;
  z.space.assign(x.begin(), x.begin() + sig.p);
  z.sphere_time.resize(sig.q);
  for (std::size_t j = 0; j < sig.q; ++j) z.sphere_time[j] = sig.alpha * t[j] / nt;
  return z;
}

Vec psi_inv(const ProductPoint& z, const Signature& sig) {
  if (z.space.size() != sig.p || z.sphere_time.size() != sig.q) {
    throw Error(ErrorCode::kDimension, "psi_inv: component lengths do not match signature");
  }
  const double nu = norm(z.sphere_time);
  if (std::abs(nu - sig.alpha) > kTolManifold * std::max(1.0, sig.alpha)) {
    throw Error(ErrorCode::kPrecondition,
                "psi_inv: time part is not on the sphere of radius alpha");
  }
  const double scale = time_radius(z.space, sig.alpha) / sig.alpha;
  Vec x(sig.dim());
  std::copy(z.space.begin(), z.space.end(), x.begin());
  for (std::size_t j = 0; j < sig.q; ++j) x[sig.p + j] = scale * z.sphere_time[j];
  return x;
}

bool apply_time_guard(std::span<double> z, const Signature& sig) {
  const auto t = z.subspan(sig.p, sig.q);
  if (norm(t) < kEpsTime) {
    t[0] += kEpsTime;
    return true;
  }
  return false;
}

void phi_into(std::span<const double> z, const Signature& sig,
              std::span<double> out) {
  require_dim(z, sig, "phi");
  std::copy(z.begin(), z.end(), out.begin());
  apply_time_guard(out, sig);
  const auto s = out.first(sig.p);
  const auto t = out.subspan(sig.p, sig.q);
  const double r = time_radius(s, sig.alpha);
  const double nt = norm(t);
  for (auto& v : t) v = r * v / nt;
}

Vec phi(std::span<const double> z, const Signature& sig) {
  Vec x(sig.dim());
  phi_into(z, sig, x);
  return x;
}

void phi_backward(std::span<const double> z, const Signature& sig,
                  std::span<const double> gx, std::span<double> gz) {
  Vec guarded(z.begin(), z.end());
  apply_time_guard(guarded, sig);
  const std::span<const double> s(guarded.data(), sig.p);
  const std::span<const double> t(guarded.data() + sig.p, sig.q);
  const double r = time_radius(s, sig.alpha);
  const double nt = norm(t);

  double gq_dot_u = 0.0;
  for (std::size_t j = 0; j < sig.q; ++j) gq_dot_u += gx[sig.p + j] * t[j] / nt;

  for (std::size_t i = 0; i < sig.p; ++i) gz[i] += gx[i] + gq_dot_u * s[i] / r;
  for (std::size_t j = 0; j < sig.q; ++j) {
    gz[sig.p + j] += (r / nt) * (gx[sig.p + j] - gq_dot_u * t[j] / nt);
  }
}

Vec project_conic(std::span<const double> x, std::span<const double> y,
                  const Signature& sig) {
  require_dim(x, sig, "project_conic");
  require_dim(y, sig, "project_conic");
  const double rx = time_radius(space_of(x, sig), sig.alpha);
  const auto yq = time_of(y, sig);
  const double ny = norm(yq);
  if (ny == 0.0) {
    throw Error(ErrorCode::kDegeneratePoint, "project_conic: time part has zero norm");
  }
  Vec out(sig.dim());
  std::copy(x.begin(), x.begin() + sig.p, out.begin());
  for (std::size_t j = 0; j < sig.q; ++j) out[sig.p + j] = rx * yq[j] / ny;
  return out;
}

double dist_sphere(std::span<const double> a, std::span<const double> b,
                   const Signature& sig) {
  require_dim(a, sig, "dist_sphere");
  require_dim(b, sig, "dist_sphere");
  double scale = 1.0, diff = 0.0;
  for (std::size_t i = 0; i < sig.p; ++i) {
    scale = std::max(scale, std::abs(a[i]));
    diff = std::max(diff, std::abs(a[i] - b[i]));
  }
  if (diff > kTolManifold * scale) {
    throw Error(ErrorCode::kPrecondition, "dist_sphere: space parts differ");
  }
  const double r = time_radius(space_of(a, sig), sig.alpha);
  return r * vector_angle(time_of(a, sig), time_of(b, sig));
}

double dist_hyper(std::span<const double> a, std::span<const double> b,
                  const Signature& sig) {
  require_dim(a, sig, "dist_hyper");
  require_dim(b, sig, "dist_hyper");
  // On the manifold -<a,b>_q = alpha^2 + <a-b,a-b>_q / 2, so
  // alpha * acosh(-<a,b>_q / alpha^2) = 2 alpha asinh(|a-b|_q / 2 alpha).
  double chord_sq = 0.0;
  for (std::size_t i = 0; i < sig.p; ++i) chord_sq += (a[i] - b[i]) * (a[i] - b[i]);
  for (std::size_t j = sig.p; j < sig.dim(); ++j) chord_sq -= (a[j] - b[j]) * (a[j] - b[j]);
  const double chord = std::sqrt(std::max(0.0, chord_sq));
  return 2.0 * sig.alpha * std::asinh(chord / (2.0 * sig.alpha));
}

double hyper_leg_argument(std::span<const double> x, std::span<const double> y,
                          const Signature& sig) {
  const Vec a = project_conic(x, y, sig);
  return -qdot(a, y, sig) / (sig.alpha * sig.alpha);
}

double manhattan_leg(std::span<const double> x, std::span<const double> y,
                     const Signature& sig) {
  require_dim(x, sig, "manhattan_leg");
  require_dim(y, sig, "manhattan_leg");
  return leg_terms(x, y, sig).value;
}

double dist_manhattan(std::span<const double> x, std::span<const double> y,
                      const Signature& sig) {
  require_dim(x, sig, "dist_manhattan");
  require_dim(y, sig, "dist_manhattan");
  return std::min(leg_terms(x, y, sig).value, leg_terms(y, x, sig).value);
}

double dist_manhattan_backward(std::span<const double> x,
                               std::span<const double> y,
                               const Signature& sig, double scale,
                               std::span<double> gx, std::span<double> gy) {
  require_dim(x, sig, "dist_manhattan");
  require_dim(y, sig, "dist_manhattan");
  const LegTerms forward = leg_terms(x, y, sig);
  const LegTerms reverse = leg_terms(y, x, sig);
  if (forward.value <= reverse.value) {
    leg_backward(x, y, sig, forward, scale, gx, gy);
    return forward.value;
  }
  leg_backward(y, x, sig, reverse, scale, gy, gx);
  return reverse.value;
}

double vector_angle(std::span<const double> u, std::span<const double> v) {
  const double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) return 0.0;
  double diff_sq = 0.0, sum_sq = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double a = u[i] / nu, b = v[i] / nv;
    diff_sq += (a - b) * (a - b);
    sum_sq += (a + b) * (a + b);
  }
  return 2.0 * std::atan2(std::sqrt(diff_sq), std::sqrt(sum_sq));
}

}  // namespace ultra
