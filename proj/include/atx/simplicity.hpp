// Sampled simplicity check: strict convexity of the boundary, conjugate
// point scan via the Jacobi equation J'' + K(gamma(t)) J = 0, and
// nontrapping confirmation over a fan of geodesics.  A finite scan is a
// falsifier, not a prover; failures are report entries, not exceptions.

#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "json.hpp"

#include "atx/common.hpp"
#include "atx/geodesic.hpp"
#include "atx/surface.hpp"

namespace atx {

struct SimplicitySampling {
  int n_boundary = 256;   // boundary curvature samples
  int n_beta = 24;        // fan: boundary anchor angles
  int n_incidence = 17;   // fan: incidence angles in (-pi/2, pi/2)
  double incidence_margin = 0.05;
  double step = 1e-3;
  double max_length = 20.0;
};

struct SimplicityReport {
  double min_boundary_curvature = 0.0;
  bool strictly_convex = false;

  bool conjugate_point_found = false;
  double conjugate_beta = 0.0, conjugate_incidence = 0.0, conjugate_time = 0.0;

  bool nontrapping = true;
  int trapped_rays = 0;

  bool pass() const {
    return strictly_convex && !conjugate_point_found && nontrapping;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["strictly_convex"] = strictly_convex;
    j["min_boundary_curvature"] = min_boundary_curvature;
    j["conjugate_point_found"] = conjugate_point_found;
    if (conjugate_point_found) {
      j["conjugate_ray"] = {{"beta", conjugate_beta},
                            {"incidence", conjugate_incidence},
                            {"time", conjugate_time}};
    }
    j["nontrapping"] = nontrapping;
    j["trapped_rays"] = trapped_rays;
    j["pass"] = pass();
    return j;
  }
};

namespace detail {

struct JacobiState {
  FlowState g;
  double j, jp;
};

inline JacobiState jacobi_rhs(const ConformalSurface& s, const JacobiState& v) {
  FlowState gd = flow_rhs(s, v.g);
  double k = s.gaussian_curvature(v.g.x, v.g.y);
  return {gd, v.jp, -k * v.j};
}

inline JacobiState jacobi_rk4(const ConformalSurface& s, const JacobiState& v, double dt) {
  auto add = [](const JacobiState& a, const JacobiState& b, double w) {
    return JacobiState{{a.g.x + w * b.g.x, a.g.y + w * b.g.y, a.g.phi + w * b.g.phi},
                       a.j + w * b.j, a.jp + w * b.jp};
  };
  JacobiState k1 = jacobi_rhs(s, v);
  JacobiState k2 = jacobi_rhs(s, add(v, k1, dt / 2));
  JacobiState k3 = jacobi_rhs(s, add(v, k2, dt / 2));
  JacobiState k4 = jacobi_rhs(s, add(v, k3, dt));
  JacobiState r = v;
  r.g.x += dt / 6 * (k1.g.x + 2 * k2.g.x + 2 * k3.g.x + k4.g.x);
  r.g.y += dt / 6 * (k1.g.y + 2 * k2.g.y + 2 * k3.g.y + k4.g.y);
  r.g.phi += dt / 6 * (k1.g.phi + 2 * k2.g.phi + 2 * k3.g.phi + k4.g.phi);
  r.j += dt / 6 * (k1.j + 2 * k2.j + 2 * k3.j + k4.j);
  r.jp += dt / 6 * (k1.jp + 2 * k2.jp + 2 * k3.jp + k4.jp);
  return r;
}

}  // namespace detail

// Integrates the Jacobi field J(0)=0, J'(0)=1 along the geodesic from v.
// Returns the flow time of the first interior zero of J (conjugate point),
// or a negative value if none occurs before exit / the length cap.
// Sets `trapped` if the geodesic does not exit within the cap.
inline double first_conjugate_time(const ConformalSurface& s, const PhaseVector& v,
                                   double step, double max_length, bool* trapped) {
  detail::JacobiState st{{v.pos.x, v.pos.y, v.phi}, 0.0, 1.0};
  if (trapped) *trapped = false;
  double t = 0.0;
  double prev_j = 0.0;
  while (t < max_length) {
    detail::JacobiState next = detail::jacobi_rk4(s, st, step);
    double tn = t + step;
    // sign change of J past the trivial zero at t=0
    if (t > 10 * step && prev_j * next.j < 0.0) {
      // linear interpolation of the crossing
      return t + step * prev_j / (prev_j - next.j);
    }
    if (radius2(next.g) > 1.0) return -1.0;
    prev_j = next.j;
    st = next;
    t = tn;
  }
  if (trapped) *trapped = true;
  return -1.0;
}

inline SimplicityReport simplicity_check(const ConformalSurface& s,
                                         const SimplicitySampling& samp = {}) {
  SimplicityReport rep;

  rep.min_boundary_curvature = std::numeric_limits<double>::infinity();
  for (int i = 0; i < samp.n_boundary; ++i) {
    double beta = 2.0 * pi * i / samp.n_boundary;
    rep.min_boundary_curvature =
        std::min(rep.min_boundary_curvature, s.boundary_geodesic_curvature(beta));
  }
  rep.strictly_convex = rep.min_boundary_curvature > 0.0;

  for (int ib = 0; ib < samp.n_beta; ++ib) {
    double beta = 2.0 * pi * ib / samp.n_beta;
    for (int ia = 0; ia < samp.n_incidence; ++ia) {
      double span = pi - 2.0 * samp.incidence_margin;
      double a = -pi / 2 + samp.incidence_margin + span * ia / (samp.n_incidence - 1);
      // inward unit vector at boundary angle beta, incidence a from the
      // inner normal (the euclidean angle equals the fiber angle)
      PhaseVector v({std::cos(beta), std::sin(beta)}, beta + pi + a);
      bool trapped = false;
      double tc = first_conjugate_time(s, v, samp.step, samp.max_length, &trapped);
      if (trapped) {
        rep.nontrapping = false;
        ++rep.trapped_rays;
      }
      if (tc >= 0.0 && !rep.conjugate_point_found) {
        rep.conjugate_point_found = true;
        rep.conjugate_beta = beta;
        rep.conjugate_incidence = a;
        rep.conjugate_time = tc;
      }
    }
  }
  return rep;
}

}  // namespace atx
