// Geodesic flow of e^{2 lambda} * euclidean on the unit disc.
//
// First-order system in (x, y, phi):
//   x'   = e^{-lambda} cos phi
//   y'   = e^{-lambda} sin phi
//   phi' = e^{-lambda} (-lambda_x sin phi + lambda_y cos phi)
// integrated with classical fixed-step RK4; the boundary crossing is
// located by bisection on |x|^2 - 1 over the last step.

#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <vector>

#include "atx/common.hpp"
#include "atx/surface.hpp"

namespace atx {

struct FlowState {
  double x, y, phi;

  PhaseVector phase() const { return PhaseVector({x, y}, phi); }
};

inline FlowState flow_rhs(const ConformalSurface& s, const FlowState& v) {
  double e = std::exp(-s.lambda(v.x, v.y));
  double c = std::cos(v.phi), sn = std::sin(v.phi);
  return {e * c, e * sn,
          e * (-s.lambda_x(v.x, v.y) * sn + s.lambda_y(v.x, v.y) * c)};
}

inline FlowState rk4_step(const ConformalSurface& s, const FlowState& v, double dt) {
  auto add = [](const FlowState& a, const FlowState& b, double w) {
    return FlowState{a.x + w * b.x, a.y + w * b.y, a.phi + w * b.phi};
  };
  FlowState k1 = flow_rhs(s, v);
  FlowState k2 = flow_rhs(s, add(v, k1, dt / 2));
  FlowState k3 = flow_rhs(s, add(v, k2, dt / 2));
  FlowState k4 = flow_rhs(s, add(v, k3, dt));
  return {v.x + dt / 6 * (k1.x + 2 * k2.x + 2 * k3.x + k4.x),
          v.y + dt / 6 * (k1.y + 2 * k2.y + 2 * k3.y + k4.y),
          v.phi + dt / 6 * (k1.phi + 2 * k2.phi + 2 * k3.phi + k4.phi)};
}

// Pushes v along the geodesic flow by signed time t (small |t|: used for
// flow differencing).  Substeps keep the local error negligible.
inline PhaseVector flow_push(const ConformalSurface& s, const PhaseVector& v,
                             double t, double max_substep = 1e-3) {
  FlowState st{v.pos.x, v.pos.y, v.phi};
  int n = std::max(1, int(std::ceil(std::abs(t) / max_substep)));
  double dt = t / n;
  for (int i = 0; i < n; ++i) st = rk4_step(s, st, dt);
  return st.phase();
}

struct GeodesicPath {
  std::vector<double> t;          // flow times, uniform step + final partial
  std::vector<PhaseVector> v;     // phase vectors at those times
  double exit_time = 0.0;         // tau_+
  bool exited = false;            // boundary reached transversally
  bool hit_cap = false;
};

struct TraceOptions {
  double step = 1e-3;
  double max_length = 50.0;        // flow-time cap; exceeding it means trapping
  double boundary_rtol = 1e-12;
  bool throw_on_cap = true;
};

inline double radius2(const FlowState& v) { return v.x * v.x + v.y * v.y; }

// d|x|^2/dt, used to classify tangential/outward boundary starts
inline double radial_speed2(const ConformalSurface& s, const FlowState& v) {
  double e = std::exp(-s.lambda(v.x, v.y));
  return 2.0 * e * (v.x * std::cos(v.phi) + v.y * std::sin(v.phi));
}

inline GeodesicPath trace_geodesic(const ConformalSurface& s, const PhaseVector& start,
                                   const TraceOptions& opt = {}) {
  GeodesicPath path;
  FlowState cur{start.pos.x, start.pos.y, start.phi};

  // Boundary start moving outward or tangentially outward: tau_+ = 0.
  if (radius2(cur) >= 1.0 - 1e-14 && radial_speed2(s, cur) >= 0.0) {
    path.t = {0.0};
    path.v = {start};
    path.exit_time = 0.0;
    path.exited = true;
    return path;
  }

  path.t.push_back(0.0);
  path.v.push_back(start);
  double t = 0.0;
  while (true) {
    FlowState next = rk4_step(s, cur, opt.step);
    if (radius2(next) > 1.0) {
      // bisect the substep length for the boundary crossing
      double lo = 0.0, hi = opt.step;
      for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (lo + hi);
        if (radius2(rk4_step(s, cur, mid)) > 1.0)
          hi = mid;
        else
          lo = mid;
        if (hi - lo < opt.boundary_rtol * std::max(1.0, t + hi)) break;
      }
      double dt = 0.5 * (lo + hi);
      FlowState exit = rk4_step(s, cur, dt);
      path.t.push_back(t + dt);
      path.v.push_back(exit.phase());
      path.exit_time = t + dt;
      path.exited = true;
      return path;
    }
    cur = next;
    t += opt.step;
    path.t.push_back(t);
    path.v.push_back(cur.phase());
    if (t > opt.max_length) {
      path.hit_cap = true;
      path.exit_time = t;
      if (opt.throw_on_cap) {
        std::ostringstream msg;
        msg << "geodesic from (" << start.pos.x << "," << start.pos.y << ";"
            << start.phi << ") exceeded flow-length cap " << opt.max_length;
        throw StepCapExceeded(msg.str());
      }
      return path;
    }
  }
}

inline double exit_time(const ConformalSurface& s, const PhaseVector& v,
                        const TraceOptions& opt = {}) {
  return trace_geodesic(s, v, opt).exit_time;
}

// Closed-form tau_+ on the flat disc; reference for tests.
inline double euclidean_exit_time(const PhaseVector& v) {
  Vec2 xi{std::cos(v.phi), std::sin(v.phi)};
  double b = v.pos.dot(xi);
  return -b + std::sqrt(b * b + 1.0 - v.pos.norm2());
}

}  // namespace atx
