#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "atx/phase_field.hpp"
#include "atx/tensor.hpp"
#include "atx/transforms.hpp"

using namespace atx;

namespace {

// Independent quadrature oracle: incremental flow pushes on a uniform
// partition of [0, tau], trapezoid for both the primitive and the outer
// integral, with a partition unrelated to the trace-based integrator's.
cplx uniform_grid_oracle(const ConformalSurface& s, const PhaseFn& psi,
                         const PhaseFn& atten, const PhaseVector& start, int n) {
  double tau = exit_time(s, start);
  double dt = tau / n;
  PhaseVector v = start;
  cplx primitive(0.0), integral(0.0);
  cplx a_prev = atten(v.pos.x, v.pos.y, v.phi);
  cplx g_prev = psi(v.pos.x, v.pos.y, v.phi);
  for (int i = 1; i <= n; ++i) {
    v = flow_push(s, v, dt);
    cplx a_cur = atten(v.pos.x, v.pos.y, v.phi);
    primitive += 0.5 * dt * (a_prev + a_cur);
    cplx g_cur = psi(v.pos.x, v.pos.y, v.phi) * std::exp(primitive);
    integral += 0.5 * dt * (g_prev + g_cur);
    a_prev = a_cur;
    g_prev = g_cur;
  }
  return integral;
}

Attenuation sample_attenuation() {
  Attenuation a;
  a.h = ScalarField::gaussian(cplx(0.3, 0.15), 0.8, {0.1, -0.2});
  a.alpha1 = ScalarField::gaussian(cplx(-0.2, 0.1), 0.6, {-0.1, 0.2});
  a.alpha2 = ScalarField::constant(cplx(0.15, -0.1));
  return a;
}

}  // namespace

TEST_CASE("unattenuated integral of 1 is the chord length") {
  ConformalSurface flat = make_euclidean();
  PhaseFn one = [](double, double, double) { return cplx(1.0); };
  cplx v = attenuated_xray(flat, one, Attenuation::zero(), {0.0, 0.0});
  CHECK(std::abs(v - 2.0) < 1e-6);

  // oblique ray: chord length 2 cos a
  double a = 0.4;
  cplx w = attenuated_xray(flat, one, Attenuation::zero(), {1.1, a});
  CHECK(std::abs(w - 2.0 * std::cos(a)) < 1e-6);
}

TEST_CASE("constant attenuation has a closed form") {
  ConformalSurface flat = make_euclidean();
  PhaseFn one = [](double, double, double) { return cplx(1.0); };
  cplx c(0.7, -0.3);
  Attenuation at;
  at.h = ScalarField::constant(c);
  // int_0^2 e^{c t} dt = (e^{2c} - 1)/c
  cplx v = attenuated_xray(flat, one, at, {0.0, 0.0});
  CHECK(std::abs(v - (std::exp(2.0 * c) - 1.0) / c) < 1e-6);
}

TEST_CASE("attenuated transform matches an independent quadrature") {
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation at = sample_attenuation();
  std::mt19937_64 rng(19);
  ModeField f = random_mode_field(rng, -2, 2, false);
  PhaseFn psi = f.evaluator();
  PhaseFn afn = at.restricted(s);
  for (double beta : {0.0, 1.3, 3.9}) {
    FanBeamRay ray{beta, 0.35};
    cplx got = attenuated_xray(s, psi, at, ray);
    cplx want = uniform_grid_oracle(s, psi, afn, ray.start(), 20000);
    CHECK(std::abs(got - want) < 1e-6);
  }
}

TEST_CASE("full transform over the fan-beam grid") {
  ConformalSurface flat = make_euclidean();
  PhaseFn one = [](double, double, double) { return cplx(1.0); };
  RayGrid grid;
  grid.n_beta = 8;
  grid.n_inc = 9;
  FanBeamData d = full_transform(flat, one, Attenuation::zero(), grid);
  for (int ib = 0; ib < grid.n_beta; ++ib)
    for (int ia = 0; ia < grid.n_inc; ++ia) {
      double a = grid.ray(ib, ia).incidence;
      CHECK(std::abs(d.at(ib, ia) - 2.0 * std::cos(a)) < 1e-6);
    }

  // rotationally symmetric data is beta-independent on a radial surface
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation at;
  at.h = ScalarField::gaussian(cplx(0.4, 0.0), 0.7, {0.0, 0.0});
  PhaseFn psi = [](double x, double y, double) { return cplx(1.0 - x * x - y * y); };
  FanBeamData r = full_transform(s, psi, at, grid);
  for (int ia = 0; ia < grid.n_inc; ++ia)
    for (int ib = 1; ib < grid.n_beta; ++ib)
      CHECK(std::abs(r.at(ib, ia) - r.at(0, ia)) < 1e-8);

  // deterministic and thread-partition independent
  FanBeamData r1 = full_transform(s, psi, at, grid, 1e-3, 1);
  FanBeamData r4 = full_transform(s, psi, at, grid, 1e-3, 4);
  for (int i = 0; i < grid.count(); ++i) {
    CHECK(r.values[i] == r1.values[i]);
    CHECK(r1.values[i] == r4.values[i]);
  }
}

TEST_CASE("weighted transform and the integrating factor") {
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation at = sample_attenuation();
  ScalarField f = ScalarField::gaussian(cplx(1.0, 0.5), 0.5, {0.2, 0.1});
  FanBeamRay ray{0.9, -0.25};

  // rho == 1 reduces to the unattenuated transform
  PhaseFn unit = [](double, double, double) { return cplx(1.0); };
  PhaseFn ff = [f](double x, double y, double) { return f(x, y); };
  cplx plain = attenuated_xray(s, ff, Attenuation::zero(), ray);
  CHECK(std::abs(weighted_xray(s, f, unit, ray) - plain) < 1e-12);

  // zero integrand
  CHECK(std::abs(weighted_xray(s, ScalarField::zero(), unit, ray)) < 1e-15);

  // W solves G W = -a and vanishes at exit points
  IntegratingFactor W = integrating_factor(at, s);
  PhaseFn afn = at.restricted(s);
  PhaseVector exit_pt = trace_geodesic(s, ray.start()).v.back();
  CHECK(std::abs(W.eval(exit_pt)) < 1e-8);
  PhaseFn We = W.evaluator();
  for (auto& v : {PhaseVector({0.2, -0.3}, 1.1), PhaseVector({-0.4, 0.1}, 5.0)}) {
    cplx gw = flow_derivative_at(We, s, v, 1e-3);
    CHECK(std::abs(gw + afn(v.pos.x, v.pos.y, v.phi)) < 1e-3);
  }

  // conjugation: I^a f = e^{W(start)} I_rho f with rho = e^{-W}
  cplx lhs = attenuated_xray(s, ff, at, ray);
  cplx rhs = std::exp(W.eval(ray.start())) * weighted_xray(s, f, W.weight(), ray);
  CHECK(std::abs(lhs - rhs) < 1e-6);

  // constant h: W = c tau
  Attenuation ch;
  cplx c(0.4, 0.2);
  ch.h = ScalarField::constant(c);
  IntegratingFactor Wc = integrating_factor(ch, s);
  PhaseVector v0({0.1, 0.25}, 2.0);
  CHECK(std::abs(Wc.eval(v0) - c * exit_time(s, v0)) < 1e-6);
}

TEST_CASE("transport solution") {
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation at = sample_attenuation();
  std::mt19937_64 rng(23);
  ModeField f = random_mode_field(rng, -1, 1, false);
  PhaseFn psi = f.evaluator();
  PhaseFn afn = at.restricted(s);

  // vanishes where the forward orbit exits immediately
  CHECK(std::abs(transport_solve(s, psi, at, PhaseVector({1.0, 0.0}, 0.3))) < 1e-10);

  // boundary values on d_+SM agree with the ray transform
  FanBeamRay ray{2.2, 0.15};
  CHECK(std::abs(transport_solve(s, psi, at, ray.start()) -
                 attenuated_xray(s, psi, at, ray)) < 1e-12);

  // interior residual G u + a u + psi = 0, flow differencing of the
  // quadrature closure
  PhaseFn u = [&](double x, double y, double phi) {
    return transport_solve(s, psi, at, PhaseVector({x, y}, phi));
  };
  std::uniform_real_distribution<double> ur(0.0, 0.8), ua(0.0, 2 * pi);
  for (int i = 0; i < 10; ++i) {
    double r = ur(rng), th = ua(rng);
    PhaseVector v({r * std::cos(th), r * std::sin(th)}, ua(rng));
    cplx gu = flow_derivative_at(u, s, v, 1e-3);
    cplx res = gu + afn(v.pos.x, v.pos.y, v.phi) * u(v.pos.x, v.pos.y, v.phi) +
               psi(v.pos.x, v.pos.y, v.phi);
    CHECK(std::abs(res) < 1e-3);
  }
}

TEST_CASE("kernel elements integrate to zero") {
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation at = sample_attenuation();
  std::mt19937_64 rng(29);

  // m = 1, no attenuation: I(restrict(nabla p)) telescopes to
  // p(exit) - p(entry) = 0 for boundary-vanishing p
  SymmetricTensorField p0 = SymmetricTensorField::scalar(
      ScalarField::from_poly(random_boundary_vanishing(rng, 2)));
  KernelElement ke0 = kernel_element(p0, Attenuation::zero(), s);
  FanBeamRay ray{0.7, 0.3};
  cplx v0 = attenuated_xray(s, ke0.combined_restriction(s), Attenuation::zero(), ray);
  CHECK(std::abs(v0) < 1e-5);

  // m = 2, full attenuation pair, with step refinement
  std::vector<ScalarField> comps;
  for (int j = 0; j < 2; ++j)
    comps.push_back(ScalarField::from_poly(random_boundary_vanishing(rng, 2)));
  SymmetricTensorField p1(1, std::move(comps));
  KernelElement ke = kernel_element(p1, at, s);
  CHECK(ke.tensor.rank() == 2);
  CHECK(ke.lower.rank() == 1);
  PhaseFn comb = ke.combined_restriction(s);
  cplx c1 = attenuated_xray(s, comb, at, ray, 2e-3);
  cplx c2 = attenuated_xray(s, comb, at, ray, 1e-3);
  CHECK(std::abs(c1) < 1e-4);
  CHECK(std::abs(c2) < 1e-4);
  CHECK(std::abs(c1) / std::abs(c2) > 3.0);

  // non-vanishing p is rejected
  SymmetricTensorField bad = SymmetricTensorField::scalar(ScalarField::constant(1.0));
  CHECK_THROWS_AS(kernel_element(bad, at, s), BoundaryNonvanishing);
}

TEST_CASE("fan-beam serialization") {
  ConformalSurface flat = make_euclidean();
  PhaseFn one = [](double, double, double) { return cplx(1.0); };
  RayGrid grid;
  grid.n_beta = 4;
  grid.n_inc = 3;
  FanBeamData d = full_transform(flat, one, Attenuation::zero(), grid);
  d.write_csv("/tmp/atx_fan.csv");
  d.write_sidecar("/tmp/atx_fan.json");
  std::ifstream is("/tmp/atx_fan.csv");
  int rows = 0;
  std::string line;
  while (std::getline(is, line))
    if (!line.empty()) ++rows;
  CHECK(rows == grid.count());
  CHECK(d.metadata["surface"] == "euclidean");
}
