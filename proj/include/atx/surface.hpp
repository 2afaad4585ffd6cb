// Simple surfaces in isothermal form: the closed unit disc with metric
// e^{2*lambda} * (euclidean), lambda from a registry of closed-form
// entries that supply first and second derivatives analytically.

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "atx/common.hpp"

namespace atx {

// Conformal factor with analytic derivatives up to second order.
struct ConformalFactor {
  std::function<double(double, double)> lam;
  std::function<double(double, double)> lam_x;
  std::function<double(double, double)> lam_y;
  std::function<double(double, double)> lam_xx;
  std::function<double(double, double)> lam_yy;
  std::function<double(double, double)> lam_xy;
};

class ConformalSurface {
 public:
  ConformalSurface(std::string name, ConformalFactor cf)
      : name_(std::move(name)), cf_(std::move(cf)) {}

  const std::string& name() const { return name_; }

  double lambda(double x, double y) const { return cf_.lam(x, y); }
  double lambda(const Vec2& p) const { return cf_.lam(p.x, p.y); }
  double lambda_x(double x, double y) const { return cf_.lam_x(x, y); }
  double lambda_y(double x, double y) const { return cf_.lam_y(x, y); }

  // K = -e^{-2 lambda} * (lambda_xx + lambda_yy)
  double gaussian_curvature(double x, double y) const {
    double lap = cf_.lam_xx(x, y) + cf_.lam_yy(x, y);
    return -std::exp(-2.0 * cf_.lam(x, y)) * lap;
  }
  double gaussian_curvature(const Vec2& p) const {
    return gaussian_curvature(p.x, p.y);
  }

  // g_x(u, v) for euclidean-component vectors u, v at x
  double metric(const Vec2& x, const Vec2& u, const Vec2& v) const {
    return std::exp(2.0 * lambda(x)) * u.dot(v);
  }

  // Geodesic curvature of the boundary circle at angle beta, with respect
  // to the inner normal; strictly convex boundary <=> positive everywhere.
  // For g = e^{2 lambda} * euclidean:  k_g = e^{-lambda} (1 + d lambda/dr).
  double boundary_geodesic_curvature(double beta) const {
    double cx = std::cos(beta), cy = std::sin(beta);
    double radial = cf_.lam_x(cx, cy) * cx + cf_.lam_y(cx, cy) * cy;
    return std::exp(-cf_.lam(cx, cy)) * (1.0 + radial);
  }

  bool in_disc(const Vec2& p, double tol = 0.0) const {
    return p.norm2() <= 1.0 + tol;
  }

 private:
  std::string name_;
  ConformalFactor cf_;
};

// Point of the unit sphere bundle SM: base point plus isothermal fiber
// angle phi.  The unit tangent is xi = e^{-lambda}(cos phi, sin phi).
struct PhaseVector {
  Vec2 pos;
  double phi = 0.0;

  PhaseVector() = default;
  PhaseVector(Vec2 p, double a) : pos(p), phi(a) {}

  Vec2 unit_tangent(const ConformalSurface& s) const {
    double e = std::exp(-s.lambda(pos));
    return {e * std::cos(phi), e * std::sin(phi)};
  }
  // xi rotated by +pi/2 (fixed orientation convention)
  Vec2 unit_perp(const ConformalSurface& s) const {
    return unit_tangent(s).perp();
  }
};

// ---- registry -------------------------------------------------------------

inline ConformalSurface make_euclidean() {
  auto z = [](double, double) { return 0.0; };
  return ConformalSurface("euclidean", {z, z, z, z, z, z});
}

// lambda = amp * exp(-|x|^2 / width): a radially symmetric bump.
inline ConformalSurface make_bump(double amp, double width) {
  auto g = [amp, width](double x, double y) {
    return amp * std::exp(-(x * x + y * y) / width);
  };
  ConformalFactor cf;
  cf.lam = g;
  cf.lam_x = [g, width](double x, double y) { return g(x, y) * (-2.0 * x / width); };
  cf.lam_y = [g, width](double x, double y) { return g(x, y) * (-2.0 * y / width); };
  cf.lam_xx = [g, width](double x, double y) {
    return g(x, y) * (4.0 * x * x / (width * width) - 2.0 / width);
  };
  cf.lam_yy = [g, width](double x, double y) {
    return g(x, y) * (4.0 * y * y / (width * width) - 2.0 / width);
  };
  cf.lam_xy = [g, width](double x, double y) {
    return g(x, y) * (4.0 * x * y / (width * width));
  };
  std::ostringstream nm;
  nm << "bump(" << amp << "," << width << ")";
  return ConformalSurface(nm.str(), cf);
}

// Exact constant-curvature metric K == c in stereographic form:
// e^{2 lambda} = 4 / (1 + c |x|^2)^2, i.e. lambda = ln 2 - ln(1 + c |x|^2).
// For c > 1 the disc covers more than a hemisphere: conjugate points at
// distance pi/sqrt(c) occur inside, and the boundary stops being convex.
inline ConformalSurface make_near_constant_curvature(double c) {
  auto den = [c](double x, double y) { return 1.0 + c * (x * x + y * y); };
  ConformalFactor cf;
  cf.lam = [den](double x, double y) { return std::log(2.0) - std::log(den(x, y)); };
  cf.lam_x = [c, den](double x, double y) { return -2.0 * c * x / den(x, y); };
  cf.lam_y = [c, den](double x, double y) { return -2.0 * c * y / den(x, y); };
  cf.lam_xx = [c, den](double x, double y) {
    double d = den(x, y);
    return (-2.0 * c * d + 4.0 * c * c * x * x) / (d * d);
  };
  cf.lam_yy = [c, den](double x, double y) {
    double d = den(x, y);
    return (-2.0 * c * d + 4.0 * c * c * y * y) / (d * d);
  };
  cf.lam_xy = [c, den](double x, double y) {
    double d = den(x, y);
    return 4.0 * c * c * x * y / (d * d);
  };
  std::ostringstream nm;
  nm << "near_constant_curvature(" << c << ")";
  return ConformalSurface(nm.str(), cf);
}

// Parses registry names of the form "euclidean", "bump(amp,width)",
// "near_constant_curvature(c)".
inline ConformalSurface surface_from_name(const std::string& spec) {
  auto args_of = [&](const std::string& head) -> std::vector<double> {
    std::string inner = spec.substr(head.size() + 1, spec.size() - head.size() - 2);
    std::vector<double> out;
    std::istringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  if (spec == "euclidean") return make_euclidean();
  if (spec.rfind("bump(", 0) == 0 && spec.back() == ')') {
    auto a = args_of("bump");
    if (a.size() != 2) throw ConfigError("bump expects (amp,width): " + spec);
    return make_bump(a[0], a[1]);
  }
  if (spec.rfind("near_constant_curvature(", 0) == 0 && spec.back() == ')') {
    auto a = args_of("near_constant_curvature");
    if (a.size() != 1)
      throw ConfigError("near_constant_curvature expects (c): " + spec);
    return make_near_constant_curvature(a[0]);
  }
  throw ConfigError("unknown surface registry entry: " + spec);
}

}  // namespace atx
