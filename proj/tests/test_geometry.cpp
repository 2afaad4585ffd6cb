#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "atx/geodesic.hpp"
#include "atx/simplicity.hpp"
#include "atx/surface.hpp"

using namespace atx;

namespace {

// Independent exit-time oracle: bisection on |x(t)|^2 - 1 along the flow,
// evaluated by flow_push (no use of the trace's own crossing logic).
double exit_time_bisection(const ConformalSurface& s, const PhaseVector& v,
                           double t_hi) {
  double lo = 0.0, hi = t_hi;
  for (int i = 0; i < 100; ++i) {
    double mid = 0.5 * (lo + hi);
    if (flow_push(s, v, mid).pos.norm2() > 1.0)
      hi = mid;
    else
      lo = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

TEST_CASE("euclidean chords from the center and interior") {
  ConformalSurface s = make_euclidean();

  GeodesicPath p = trace_geodesic(s, PhaseVector({0, 0}, 0.0));
  CHECK(p.exited);
  CHECK(p.exit_time == Catch::Approx(1.0).margin(1e-10));
  CHECK(p.v.back().pos.x == Catch::Approx(1.0).margin(1e-10));
  CHECK(p.v.back().pos.y == Catch::Approx(0.0).margin(1e-10));

  GeodesicPath q = trace_geodesic(s, PhaseVector({0.5, 0}, pi));
  CHECK(q.exit_time == Catch::Approx(1.5).margin(1e-10));
  CHECK(q.v.back().pos.x == Catch::Approx(-1.0).margin(1e-10));
}

TEST_CASE("exit time: closed form on the flat disc") {
  ConformalSurface s = make_euclidean();
  CHECK(exit_time(s, PhaseVector({0, 0}, 1.234)) == Catch::Approx(1.0).margin(1e-10));
  CHECK(exit_time(s, PhaseVector({0.6, 0}, pi / 2)) == Catch::Approx(0.8).margin(1e-10));

  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> ur(0.0, 0.95), ua(0.0, 2 * pi);
  for (int i = 0; i < 1000; ++i) {
    double r = ur(rng), th = ua(rng), phi = ua(rng);
    PhaseVector v({r * std::cos(th), r * std::sin(th)}, phi);
    CHECK(std::abs(exit_time(s, v) - euclidean_exit_time(v)) < 1e-10);
  }
}

TEST_CASE("exit time on the bump metric vs bisection oracle") {
  ConformalSurface s = make_bump(0.2, 0.5);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> ur(0.0, 0.9), ua(0.0, 2 * pi);
  for (int i = 0; i < 100; ++i) {
    double r = ur(rng), th = ua(rng), phi = ua(rng);
    PhaseVector v({r * std::cos(th), r * std::sin(th)}, phi);
    double tau = exit_time(s, v);
    double tau_oracle = exit_time_bisection(s, v, tau + 0.5);
    CHECK(std::abs(tau - tau_oracle) < 1e-8);
  }
}

TEST_CASE("exit time converges at the integrator order") {
  // default-step runs agree with half-step re-integration far below 1e-8
  {
    ConformalSurface s = make_bump(0.2, 0.5);
    PhaseVector v({0.3, -0.2}, 1.0);
    TraceOptions a, b;
    a.step = 1e-3;
    b.step = 5e-4;
    CHECK(std::abs(exit_time(s, v, a) - exit_time(s, v, b)) < 1e-8);
  }
  // measurable error regime: stronger bump, coarse steps
  ConformalSurface s = make_bump(0.5, 0.3);
  PhaseVector v({0.3, -0.2}, 1.0);
  auto tau = [&](double h) {
    TraceOptions o;
    o.step = h;
    return exit_time(s, v, o);
  };
  double ref = tau(1e-3);
  double e1 = std::abs(tau(8e-2) - ref);
  double e2 = std::abs(tau(4e-2) - ref);
  CHECK(e1 / e2 >= 8.0);  // 4th-order scheme
}

TEST_CASE("unit speed along traced geodesics") {
  ConformalSurface s = make_bump(0.2, 0.5);
  GeodesicPath p = trace_geodesic(s, PhaseVector({0.1, 0.4}, 2.2));
  double worst = 0.0;
  for (const auto& v : p.v) {
    Vec2 xi = v.unit_tangent(s);
    worst = std::max(worst, std::abs(s.metric(v.pos, xi, xi) - 1.0));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("reversibility of the flow") {
  ConformalSurface s = make_bump(0.2, 0.5);
  PhaseVector v({0.25, -0.35}, 0.7);
  GeodesicPath fwd = trace_geodesic(s, v);
  PhaseVector exit = fwd.v.back();
  PhaseVector back = flow_push(s, PhaseVector(exit.pos, exit.phi + pi), fwd.exit_time);
  CHECK((back.pos - v.pos).norm() < 1e-7);
  double dphi = std::remainder(back.phi - (v.phi + pi), 2 * pi);
  CHECK(std::abs(dphi) < 1e-7);
}

TEST_CASE("gaussian curvature") {
  ConformalSurface flat = make_euclidean();
  CHECK(flat.gaussian_curvature(0.3, -0.2) == 0.0);

  ConformalSurface s = make_bump(0.2, 0.5);
  // 5-point finite-difference Laplacian oracle at the origin
  double h = 1e-4;
  auto lam = [&](double x, double y) { return s.lambda(x, y); };
  double lap = (lam(h, 0) + lam(-h, 0) + lam(0, h) + lam(0, -h) - 4 * lam(0, 0)) / (h * h);
  double k_fd = -std::exp(-2 * lam(0, 0)) * lap;
  CHECK(s.gaussian_curvature(0, 0) == Catch::Approx(k_fd).margin(1e-6));

  // radial symmetry of the curvature field
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ua(0.0, 2 * pi);
  for (double r : {0.2, 0.5, 0.8}) {
    double k0 = s.gaussian_curvature(r, 0.0);
    for (int i = 0; i < 10; ++i) {
      double th = ua(rng);
      CHECK(std::abs(s.gaussian_curvature(r * std::cos(th), r * std::sin(th)) - k0) <
            1e-12);
    }
  }

  // exact constant curvature registry entry
  ConformalSurface cc = make_near_constant_curvature(2.0);
  for (double r : {0.0, 0.4, 0.9})
    CHECK(cc.gaussian_curvature(r, 0.1) == Catch::Approx(2.0).margin(1e-10));
}

TEST_CASE("simplicity: flat and bump discs pass") {
  SimplicityReport flat = simplicity_check(make_euclidean());
  CHECK(flat.strictly_convex);
  CHECK_FALSE(flat.conjugate_point_found);
  CHECK(flat.nontrapping);
  CHECK(flat.pass());

  SimplicityReport bump = simplicity_check(make_bump(0.2, 0.5));
  CHECK(bump.pass());

  // doubled sampling density agrees
  SimplicitySampling dense;
  dense.n_beta *= 2;
  dense.n_incidence = 2 * dense.n_incidence - 1;
  CHECK(simplicity_check(make_bump(0.2, 0.5), dense).pass() == bump.pass());
}

TEST_CASE("simplicity falsifier: constant curvature with a long chord") {
  // K == 2: the diametral chord has length (4/sqrt 2) atan(sqrt 2) ~ 2.70,
  // beyond the conjugate distance pi/sqrt(2) ~ 2.22.
  double c = 2.0;
  ConformalSurface s = make_near_constant_curvature(c);
  SimplicityReport rep = simplicity_check(s);
  CHECK(rep.conjugate_point_found);
  CHECK_FALSE(rep.pass());

  // Jacobi field along the diametral chord matches sin(sqrt(c) t)/sqrt(c):
  // the first zero sits at pi/sqrt(c).
  bool trapped = false;
  double tc = first_conjugate_time(s, PhaseVector({-1.0 + 1e-9, 0.0}, 0.0), 1e-3,
                                   10.0, &trapped);
  REQUIRE(tc > 0.0);
  CHECK(tc == Catch::Approx(pi / std::sqrt(c)).margin(1e-4));
}

TEST_CASE("simplicity report serializes to JSON") {
  auto j = simplicity_check(make_euclidean()).to_json();
  CHECK(j["pass"].get<bool>());
  CHECK(j["strictly_convex"].get<bool>());
}

TEST_CASE("trapped geodesics hit the step cap") {
  // beyond-hemisphere cap: near-equatorial geodesics never exit
  ConformalSurface s = make_near_constant_curvature(2.0);
  TraceOptions opt;
  opt.max_length = 10.0;
  // start near the boundary moving almost tangentially
  PhaseVector v({0.98, 0.0}, pi / 2 + 0.02);
  CHECK_THROWS_AS(trace_geodesic(s, v, opt), StepCapExceeded);
  opt.throw_on_cap = false;
  GeodesicPath p = trace_geodesic(s, v, opt);
  CHECK(p.hit_cap);
}
