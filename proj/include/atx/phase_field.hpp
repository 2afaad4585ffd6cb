// Analytic functions on SM given as finite angular-mode expansions
//   u(x, phi) = sum_k c_k(x) e^{i k phi}
// with scalar-field coefficients, plus the geodesic vector field G applied
// to such expansions in closed form, and flow differencing for arbitrary
// phase functions.
//
// In isothermal coordinates
//   G = e^{-lambda} (cos phi d_x + sin phi d_y
//                    + (-lambda_x sin phi + lambda_y cos phi) d_phi).

#pragma once

#include <random>
#include <utility>
#include <vector>

#include "atx/angular_field.hpp"
#include "atx/common.hpp"
#include "atx/geodesic.hpp"
#include "atx/scalar_field.hpp"
#include "atx/surface.hpp"

namespace atx {

class ModeField {
 public:
  ModeField() = default;

  void add_mode(int k, ScalarField c) { modes_.emplace_back(k, std::move(c)); }

  const std::vector<std::pair<int, ScalarField>>& modes() const { return modes_; }

  cplx eval(double x, double y, double phi) const {
    cplx out(0.0);
    for (const auto& [k, c] : modes_)
      out += c(x, y) * cplx(std::cos(k * phi), std::sin(k * phi));
    return out;
  }

  PhaseFn evaluator() const {
    ModeField self = *this;
    return [self](double x, double y, double phi) { return self.eval(x, y, phi); };
  }

  // G u in closed form:
  //   G(c e^{ik phi}) = e^{-lambda} e^{ik phi} [ cos phi c_x + sin phi c_y
  //                     + i k c (-lambda_x sin phi + lambda_y cos phi) ].
  PhaseFn geodesic_derivative(const ConformalSurface& s) const {
    ModeField self = *this;
    return [self, s](double x, double y, double phi) {
      double e = std::exp(-s.lambda(x, y));
      double cp = std::cos(phi), sp = std::sin(phi);
      double rot = -s.lambda_x(x, y) * sp + s.lambda_y(x, y) * cp;
      cplx out(0.0);
      for (const auto& [k, c] : self.modes_) {
        cplx ph(std::cos(k * phi), std::sin(k * phi));
        out += ph * (cp * c.ddx(x, y) + sp * c.ddy(x, y) +
                     cplx(0.0, double(k)) * c(x, y) * rot);
      }
      return e * out;
    };
  }

  ModeField scaled(cplx s) const {
    ModeField out;
    for (const auto& [k, c] : modes_) {
      ScalarField cc = c;
      out.add_mode(k, ScalarField(
                          [cc, s](double x, double y) { return s * cc(x, y); },
                          [cc, s](double x, double y) { return s * cc.ddx(x, y); },
                          [cc, s](double x, double y) { return s * cc.ddy(x, y); }));
    }
    return out;
  }

 private:
  std::vector<std::pair<int, ScalarField>> modes_;
};

// Band-limited random field with polynomial coefficients; optionally
// vanishing on the boundary circle (then also on all of dSM).
inline ModeField random_mode_field(std::mt19937_64& rng, int k_min, int k_max,
                                   bool boundary_vanishing, int poly_deg = 2,
                                   double amplitude = 0.4) {
  ModeField f;
  for (int k = k_min; k <= k_max; ++k) {
    Polynomial2D c = boundary_vanishing
                         ? random_boundary_vanishing(rng, poly_deg, amplitude)
                         : random_polynomial(rng, poly_deg, amplitude);
    f.add_mode(k, ScalarField::from_poly(c));
  }
  return f;
}

// Centered flow difference (G u)(v) for an arbitrary phase function.
inline cplx flow_derivative_at(const PhaseFn& u, const ConformalSurface& s,
                               const PhaseVector& v, double delta = 1e-4) {
  PhaseVector fwd = flow_push(s, v, delta);
  PhaseVector bwd = flow_push(s, v, -delta);
  return (u(fwd.pos.x, fwd.pos.y, fwd.phi) - u(bwd.pos.x, bwd.pos.y, bwd.phi)) /
         (2.0 * delta);
}

struct FlowDerivativeResult {
  AngularField field;
  int one_sided_samples = 0;  // BoundaryProximity: one-sided differences used
};

// Flow derivative of a grid field, interpolated evaluation.  Samples whose
// forward or backward push leaves the closed disc fall back to a one-sided
// difference into the interior and are counted as flagged.
inline FlowDerivativeResult flow_derivative(const AngularField& u,
                                            const ConformalSurface& s,
                                            double delta = 1e-4) {
  const DiskGrid& g = u.grid();
  int na = u.n_angles();
  std::vector<cplx> vals(size_t(g.count()) * na, cplx(0.0));
  int flagged = 0;
  for (int i = 0; i < g.count(); ++i) {
    Vec2 p = g.node(i);
    if (p.norm2() > 1.0 + 1e-12) continue;  // outside SM: leave zero
    for (int j = 0; j < na; ++j) {
      PhaseVector v(p, u.angle(j));
      PhaseVector fwd = flow_push(s, v, delta);
      PhaseVector bwd = flow_push(s, v, -delta);
      bool fin = fwd.pos.norm2() <= 1.0, bin = bwd.pos.norm2() <= 1.0;
      cplx d;
      if (fin && bin) {
        d = (u.eval(fwd.pos.x, fwd.pos.y, fwd.phi) -
             u.eval(bwd.pos.x, bwd.pos.y, bwd.phi)) / (2.0 * delta);
      } else if (bin) {
        d = (u.eval(p.x, p.y, v.phi) - u.eval(bwd.pos.x, bwd.pos.y, bwd.phi)) / delta;
        ++flagged;
      } else if (fin) {
        d = (u.eval(fwd.pos.x, fwd.pos.y, fwd.phi) - u.eval(p.x, p.y, v.phi)) / delta;
        ++flagged;
      } else {
        d = cplx(0.0);
        ++flagged;
      }
      vals[size_t(i) * na + j] = d;
    }
  }
  return {AngularField(g, na, std::move(vals)), flagged};
}

}  // namespace atx
