// Attenuated and weighted geodesic X-ray transforms over fan-beam
// families, the explicit transport solution, flow-primitive integrating
// factors, and Theorem-B-style kernel elements.
//
// Quadrature: trapezoid on the integrator's own samples; the inner
// attenuation primitive is accumulated on the same sampling as the outer
// integral.  Deterministic for fixed configuration, independent of the
// thread partition.

#pragma once

#include <atomic>
#include <cmath>
#include <fstream>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "atx/angular_field.hpp"
#include "atx/attenuation.hpp"
#include "atx/common.hpp"
#include "atx/geodesic.hpp"
#include "atx/scalar_field.hpp"
#include "atx/surface.hpp"
#include "atx/tensor.hpp"

namespace atx {

// Inward boundary direction: boundary point (cos beta, sin beta),
// incidence a measured from the inner normal.  The euclidean direction
// angle equals the isothermal fiber angle, and <xi, nu>_g = cos a for any
// conformal factor.
struct FanBeamRay {
  double beta = 0.0;
  double incidence = 0.0;

  PhaseVector start() const {
    if (std::abs(incidence) >= pi / 2)
      throw ConfigError("fan-beam incidence must lie in (-pi/2, pi/2)");
    return PhaseVector({std::cos(beta), std::sin(beta)}, beta + pi + incidence);
  }
};

struct RayGrid {
  int n_beta = 32;
  int n_inc = 32;
  double incidence_margin = 0.05;  // clip tangential rays

  FanBeamRay ray(int ib, int ia) const {
    double beta = 2.0 * pi * ib / n_beta;
    double lo = -pi / 2 + incidence_margin, hi = pi / 2 - incidence_margin;
    double a = n_inc == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * ia / (n_inc - 1);
    return {beta, a};
  }
  int count() const { return n_beta * n_inc; }
};

namespace detail {

inline void parallel_for(int n, int threads, const std::function<void(int)>& body) {
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<int> next{0};
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

}  // namespace detail

// Core quadrature: I = int_0^tau psi(phi_t) exp(int_0^t a(phi_s) ds) dt.
// Shared for the boundary transform (v on d_+SM) and the interior
// transport solution (any v in SM).
inline cplx attenuated_path_integral(const ConformalSurface& s, const PhaseFn& psi,
                                     const PhaseFn& atten, const PhaseVector& v,
                                     double step) {
  TraceOptions opt;
  opt.step = step;
  GeodesicPath path = trace_geodesic(s, v, opt);
  const size_t n = path.t.size();
  if (n < 2) return cplx(0.0);

  cplx integral(0.0), primitive(0.0);
  auto eval_a = [&](const PhaseVector& p) { return atten(p.pos.x, p.pos.y, p.phi); };
  auto eval_psi = [&](const PhaseVector& p) { return psi(p.pos.x, p.pos.y, p.phi); };

  cplx a_prev = eval_a(path.v[0]);
  cplx g_prev = eval_psi(path.v[0]);  // exp(0) = 1
  for (size_t i = 1; i < n; ++i) {
    double dt = path.t[i] - path.t[i - 1];
    cplx a_cur = eval_a(path.v[i]);
    primitive += 0.5 * dt * (a_prev + a_cur);
    cplx g_cur = eval_psi(path.v[i]) * std::exp(primitive);
    integral += 0.5 * dt * (g_prev + g_cur);
    a_prev = a_cur;
    g_prev = g_cur;
  }
  return integral;
}

inline cplx attenuated_xray(const ConformalSurface& s, const PhaseFn& psi,
                            const Attenuation& atten, const FanBeamRay& ray,
                            double step = 1e-3) {
  return attenuated_path_integral(s, psi, atten.restricted(s), ray.start(), step);
}

// Explicit transport solution of G u + a u = -psi, u|_{dSM} = 0.
inline cplx transport_solve(const ConformalSurface& s, const PhaseFn& psi,
                            const Attenuation& atten, const PhaseVector& v,
                            double step = 1e-3) {
  return attenuated_path_integral(s, psi, atten.restricted(s), v, step);
}

// I_rho f: weighted transform of a function on M.
inline cplx weighted_xray(const ConformalSurface& s, const ScalarField& f,
                          const PhaseFn& rho, const FanBeamRay& ray,
                          double step = 1e-3) {
  // rho replaces the exponential weight: fold it into the integrand
  PhaseFn no_atten = [](double, double, double) { return cplx(0.0); };
  PhaseFn weighted = [f, rho](double x, double y, double phi) {
    return rho(x, y, phi) * f(x, y);
  };
  return attenuated_path_integral(s, weighted, no_atten, ray.start(), step);
}

// Flow primitive W(v) = int_0^{tau_+} a(phi_s) ds; solves G W = -a and
// vanishes at exit points.  e^{-W} is the computable integrating factor.
struct IntegratingFactor {
  ConformalSurface surface;
  Attenuation atten;
  double step = 1e-3;

  cplx eval(const PhaseVector& v) const {
    // W = int a dt: the path integral with integrand a and no weight
    PhaseFn no_atten = [](double, double, double) { return cplx(0.0); };
    return attenuated_path_integral(surface, atten.restricted(surface), no_atten, v,
                                    step);
  }

  PhaseFn evaluator() const {
    IntegratingFactor self = *this;
    return [self](double x, double y, double phi) {
      return self.eval(PhaseVector({x, y}, phi));
    };
  }

  // rho = e^{-W}
  PhaseFn weight() const {
    IntegratingFactor self = *this;
    return [self](double x, double y, double phi) {
      return std::exp(-self.eval(PhaseVector({x, y}, phi)));
    };
  }
};

inline IntegratingFactor integrating_factor(const Attenuation& atten,
                                            const ConformalSurface& s,
                                            double step = 1e-3) {
  return {s, atten, step};
}

// ---- fan-beam data ---------------------------------------------------------

struct FanBeamData {
  RayGrid grid;
  std::vector<cplx> values;  // row-major: ib * n_inc + ia
  nlohmann::json metadata;

  cplx at(int ib, int ia) const { return values[size_t(ib) * grid.n_inc + ia]; }

  double sup_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }

  // CSV rows: beta, incidence, re, im
  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    os.precision(17);
    for (int ib = 0; ib < grid.n_beta; ++ib)
      for (int ia = 0; ia < grid.n_inc; ++ia) {
        FanBeamRay r = grid.ray(ib, ia);
        cplx v = at(ib, ia);
        os << r.beta << "," << r.incidence << "," << v.real() << "," << v.imag()
           << "\n";
      }
  }

  void write_sidecar(const std::string& path) const {
    std::ofstream os(path);
    os << metadata.dump(2) << "\n";
  }
};

inline FanBeamData full_transform(const ConformalSurface& s, const PhaseFn& psi,
                                  const Attenuation& atten, const RayGrid& grid,
                                  double step = 1e-3, int threads = 1) {
  FanBeamData data;
  data.grid = grid;
  data.values.assign(grid.count(), cplx(0.0));
  detail::parallel_for(grid.count(), threads, [&](int idx) {
    int ib = idx / grid.n_inc, ia = idx % grid.n_inc;
    data.values[idx] = attenuated_xray(s, psi, atten, grid.ray(ib, ia), step);
  });
  data.metadata = {{"surface", s.name()},
                   {"n_beta", grid.n_beta},
                   {"n_inc", grid.n_inc},
                   {"incidence_margin", grid.incidence_margin},
                   {"step", step}};
  return data;
}

// ---- kernel elements -------------------------------------------------------

// The natural obstruction: for p of rank m-1 vanishing on the boundary,
// the pair (rank m, rank m-1) = (sigma(nabla p) + sigma(p alpha), h p)
// integrates to zero, since the combined restriction is (G + a) applied to
// the restriction of p.
struct KernelElement {
  SymmetricTensorField tensor;    // rank m
  SymmetricTensorField lower;     // rank m-1

  PhaseFn combined_restriction(const ConformalSurface& s) const {
    PhaseFn a = tensor.restriction(s);
    PhaseFn b = lower.restriction(s);
    return [a, b](double x, double y, double phi) {
      return a(x, y, phi) + b(x, y, phi);
    };
  }
};

inline KernelElement kernel_element(const SymmetricTensorField& p,
                                    const Attenuation& atten,
                                    const ConformalSurface& s,
                                    double boundary_tol = 1e-8) {
  if (p.boundary_sup() > boundary_tol)
    throw BoundaryNonvanishing("kernel_element: p does not vanish on the boundary");
  SymmetricTensorField dp = inner_derivative(p, s);
  SymmetricTensorField pa = symmetric_product_one_form(p, atten.alpha1, atten.alpha2);
  return {dp + pa, p.scaled_by(atten.h)};
}

}  // namespace atx
