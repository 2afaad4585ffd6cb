#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <random>

#include "atx/angular_field.hpp"
#include "atx/attenuation.hpp"
#include "atx/phase_field.hpp"
#include "atx/surface.hpp"

using namespace atx;

namespace {

AngularField random_band_limited(std::mt19937_64& rng, int k_min, int k_max,
                                 DiskGrid grid = {}, int n_angles = 64) {
  ModeField f = random_mode_field(rng, k_min, k_max, false);
  return AngularField::sample(f.evaluator(), grid, n_angles);
}

}  // namespace

TEST_CASE("angular spectrum of elementary fields") {
  DiskGrid grid;
  grid.h = 1.0 / 8.0;

  AngularField cosf = AngularField::sample(
      [](double, double, double phi) { return cplx(std::cos(phi)); }, grid, 32);
  int node = grid.disc_nodes()[3];
  CHECK(std::abs(cosf.coeff(node, 1) - 0.5) < 1e-14);
  CHECK(std::abs(cosf.coeff(node, -1) - 0.5) < 1e-14);
  for (int k = -16; k < 16; ++k)
    if (k != 1 && k != -1) CHECK(std::abs(cosf.coeff(node, k)) < 1e-14);

  AngularField e3 = AngularField::sample(
      [](double x, double y, double phi) {
        return (1.0 - x * x - y * y) * cplx(std::cos(3 * phi), std::sin(3 * phi));
      },
      grid, 32);
  for (int i : grid.disc_nodes()) {
    Vec2 p = grid.node(i);
    CHECK(std::abs(e3.coeff(i, 3) - (1.0 - p.norm2())) < 1e-13);
    CHECK(std::abs(e3.coeff(i, -3)) < 1e-13);
    CHECK(std::abs(e3.coeff(i, 0)) < 1e-13);
  }
}

TEST_CASE("Parseval at every disc node") {
  std::mt19937_64 rng(11);
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField u = random_band_limited(rng, -5, 5, grid, 32);
  for (int i : grid.disc_nodes()) {
    double lhs = 0.0, rhs = 0.0;
    for (int j = 0; j < u.n_angles(); ++j) lhs += std::norm(u.value(i, j));
    lhs /= u.n_angles();
    for (int k = -u.n_angles() / 2; k < u.n_angles() / 2; ++k)
      rhs += std::norm(u.coeff(i, k));
    CHECK(std::abs(lhs - rhs) < 1e-10 * std::max(1.0, lhs));
  }
}

TEST_CASE("projections: partitions and idempotence") {
  std::mt19937_64 rng(5);
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField u = random_band_limited(rng, -6, 6, grid, 32);

  AngularField hol = u.project(AngularPart::Holomorphic);
  AngularField even = u.project(AngularPart::Even);
  AngularField odd = u.project(AngularPart::Odd);

  int node = grid.disc_nodes()[7];
  for (int j = 0; j < u.n_angles(); ++j) {
    CHECK(std::abs(even.value(node, j) + odd.value(node, j) - u.value(node, j)) < 1e-12);
  }
  // hol + strictly negative part = identity
  double strict_neg = 0.0;
  for (int k = -16; k < 0; ++k) strict_neg += std::norm(hol.coeff(node, k));
  CHECK(strict_neg < 1e-24);
  AngularField hol2 = hol.project(AngularPart::Holomorphic);
  for (int j = 0; j < u.n_angles(); ++j)
    CHECK(std::abs(hol2.value(node, j) - hol.value(node, j)) < 1e-12);

  // project(e^{i phi} + e^{-i phi}, holomorphic) = e^{i phi}
  AngularField two = AngularField::sample(
      [](double, double, double phi) { return cplx(2.0 * std::cos(phi)); }, grid, 32);
  AngularField h1 = two.project(AngularPart::Holomorphic);
  for (int j = 0; j < 32; ++j) {
    double phi = h1.angle(j);
    CHECK(std::abs(h1.value(node, j) - cplx(std::cos(phi), std::sin(phi))) < 1e-12);
  }

  // single-mode projection
  AngularField m1 = two.project_mode(-1);
  CHECK(std::abs(m1.coeff(node, -1) - 1.0) < 1e-12);
  CHECK(std::abs(m1.coeff(node, 1)) < 1e-15);
}

TEST_CASE("holomorphic closure under products and exponentials") {
  std::mt19937_64 rng(17);
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField a = random_band_limited(rng, 0, 8, grid, 64);
  AngularField b = random_band_limited(rng, 0, 8, grid, 64);

  AngularField prod = a.product(b);
  double anti = prod.mode_energy([](int k) { return k < 0; });
  CHECK(anti <= 1e-10 * prod.energy());

  // exponential closure needs headroom for the induced high modes
  ModeField wm = random_mode_field(rng, 0, 8, false, 2, 0.2);
  AngularField w = AngularField::sample(wm.evaluator(), grid, 256);
  AngularField ew = w.exp();
  CHECK_FALSE(ew.alias_risk());
  double anti_e = ew.mode_energy([](int k) { return k < 0; });
  CHECK(anti_e <= 1e-10 * ew.energy());
}

TEST_CASE("degree of band-limited fields and exponentials") {
  std::mt19937_64 rng(23);
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField u = random_band_limited(rng, -3, 3, grid, 64);
  CHECK(u.degree() == 3);

  // e^w for w of degree 2: degree found numerically must match the
  // spectrum of the pointwise exponential (the oracle *is* that spectrum)
  ModeField wm = random_mode_field(rng, -2, 2, false, 2, 0.25);
  AngularField w = AngularField::sample(wm.evaluator(), grid, 256);
  AngularField ew = w.exp();
  int d = ew.degree(1e-10);
  // oracle: direct scan of the exponentiated samples' spectrum
  double total = ew.energy();
  int d_oracle = 256 / 2;
  for (int m = 0; m <= 128; ++m) {
    if (ew.mode_energy([m](int k) { return std::abs(k) > m; }) <= 1e-10 * total) {
      d_oracle = m;
      break;
    }
  }
  CHECK(d == d_oracle);
  CHECK(d >= 2);
}

TEST_CASE("vertical derivative") {
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField cosf = AngularField::sample(
      [](double, double, double phi) { return cplx(std::cos(phi)); }, grid, 32);
  AngularField d = cosf.vertical_derivative();
  int node = grid.disc_nodes()[0];
  for (int j = 0; j < 32; ++j)
    CHECK(std::abs(d.value(node, j) - cplx(-std::sin(d.angle(j)))) < 1e-12);

  // -iV u = 3u exactly on H_3
  AngularField h3 = AngularField::sample(
      [](double x, double y, double phi) {
        return (x + 0.5 * y) * cplx(std::cos(3 * phi), std::sin(3 * phi));
      },
      grid, 32);
  AngularField vh3 = h3.vertical_derivative();
  for (int j = 0; j < 32; ++j) {
    cplx lhs = cplx(0, -1) * vh3.value(node, j);
    CHECK(std::abs(lhs - 3.0 * h3.value(node, j)) < 1e-12);
  }

  // product rule on random fields
  std::mt19937_64 rng(31);
  AngularField u = random_band_limited(rng, -5, 5, grid, 64);
  AngularField v = random_band_limited(rng, -5, 5, grid, 64);
  AngularField lhs = u.product(v).vertical_derivative();
  AngularField rhs = u.vertical_derivative().product(v).sum(
      u.product(v.vertical_derivative()));
  double scale = lhs.max_abs();
  for (int i : grid.disc_nodes())
    for (int j = 0; j < 64; ++j)
      CHECK(std::abs(lhs.value(i, j) - rhs.value(i, j)) <= 1e-10 * std::max(1.0, scale));
}

TEST_CASE("attenuation restriction is band-limited to |k| <= 1") {
  ConformalSurface s = make_bump(0.2, 0.5);
  Attenuation a;
  a.h = ScalarField::gaussian(cplx(0.4, 0.2), 0.7, {0.1, -0.2});
  a.alpha1 = ScalarField::constant(cplx(0.3, -0.1));
  a.alpha2 = ScalarField::gaussian(cplx(-0.2, 0.5), 0.9, {0.0, 0.3});
  DiskGrid grid;
  grid.h = 1.0 / 8.0;
  AngularField af = AngularField::sample(a.restricted(s), grid, 32);
  double high = af.mode_energy([](int k) { return std::abs(k) >= 2; });
  CHECK(high <= 1e-12 * af.energy());
}

TEST_CASE("flow derivative: constants, pullbacks, convergence") {
  ConformalSurface flat = make_euclidean();

  AngularField ones = AngularField::sample(
      [](double, double, double) { return cplx(1.0); }, {}, 32);
  FlowDerivativeResult d1 = flow_derivative(ones, flat);
  CHECK(d1.field.max_abs() < 1e-10);

  // G(x^1) = xi . grad x^1 = e^{-lambda} cos phi (flat: cos phi)
  AngularField x1 = AngularField::sample(
      [](double x, double, double) { return cplx(x); }, {}, 32);
  FlowDerivativeResult dx1 = flow_derivative(x1, flat);
  double worst = 0.0;
  for (int i : x1.grid().disc_nodes()) {
    if (x1.grid().node(i).norm() > 0.9) continue;  // skip flagged one-sided rim
    for (int j = 0; j < 32; ++j)
      worst = std::max(worst,
                       std::abs(dx1.field.value(i, j) - std::cos(dx1.field.angle(j))));
  }
  CHECK(worst < 1e-3);

  // Richardson: halving the flow-difference width shrinks the update x4
  ConformalSurface s = make_bump(0.2, 0.5);
  std::mt19937_64 rng(41);
  ModeField f = random_mode_field(rng, -3, 3, false);
  PhaseFn fn = f.evaluator();
  PhaseVector v({0.2, -0.3}, 0.9);
  auto D = [&](double del) { return flow_derivative_at(fn, s, v, del); };
  cplx d1c = D(4e-3) - D(2e-3);
  cplx d2c = D(2e-3) - D(1e-3);
  double ratio = std::abs(d1c) / std::abs(d2c);
  CHECK(ratio > 3.5);
  CHECK(ratio < 4.5);

  // analytic G on mode fields matches flow differencing
  PhaseFn gf = f.geodesic_derivative(s);
  CHECK(std::abs(gf(0.2, -0.3, 0.9) - D(1e-4)) < 1e-6);
}

TEST_CASE("field serialization round-trip") {
  std::mt19937_64 rng(53);
  DiskGrid grid;
  grid.h = 1.0 / 4.0;
  AngularField u = random_band_limited(rng, -2, 2, grid, 16);
  u.write_csv("/tmp/atx_field.csv");
  u.write_header("/tmp/atx_field.json");
  AngularField r = AngularField::read_csv("/tmp/atx_field.csv", grid, 16);
  for (int i = 0; i < grid.count(); ++i)
    for (int j = 0; j < 16; ++j)
      CHECK(std::abs(r.value(i, j) - u.value(i, j)) < 1e-15);
}
