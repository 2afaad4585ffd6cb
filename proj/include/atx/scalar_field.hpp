// Complex scalar fields on the plane with first derivatives.
//
// Most inputs (potentials p, attenuation components, tensor components)
// are bivariate complex polynomials, for which derivatives are exact.
// Arbitrary callables are supported with centered finite differences.

#pragma once

#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "atx/common.hpp"

namespace atx {

// Dense bivariate polynomial sum a(i,j) x^i y^j with complex coefficients.
class Polynomial2D {
 public:
  Polynomial2D() : nx_(1), ny_(1), c_(1, cplx(0.0)) {}
  Polynomial2D(int nx, int ny) : nx_(nx), ny_(ny), c_(size_t(nx) * ny, cplx(0.0)) {}

  static Polynomial2D constant(cplx v) {
    Polynomial2D p(1, 1);
    p.at(0, 0) = v;
    return p;
  }

  int deg_x() const { return nx_ - 1; }
  int deg_y() const { return ny_ - 1; }

  cplx& at(int i, int j) { return c_[size_t(i) * ny_ + j]; }
  cplx at(int i, int j) const { return c_[size_t(i) * ny_ + j]; }

  cplx eval(double x, double y) const {
    // Horner in x, inner Horner in y.
    cplx acc(0.0);
    for (int i = nx_ - 1; i >= 0; --i) {
      cplx row(0.0);
      for (int j = ny_ - 1; j >= 0; --j) row = row * y + at(i, j);
      acc = acc * x + row;
    }
    return acc;
  }

  Polynomial2D dx() const {
    if (nx_ == 1) return Polynomial2D();
    Polynomial2D d(nx_ - 1, ny_);
    for (int i = 1; i < nx_; ++i)
      for (int j = 0; j < ny_; ++j) d.at(i - 1, j) = double(i) * at(i, j);
    return d;
  }

  Polynomial2D dy() const {
    if (ny_ == 1) return Polynomial2D();
    Polynomial2D d(nx_, ny_ - 1);
    for (int i = 0; i < nx_; ++i)
      for (int j = 1; j < ny_; ++j) d.at(i, j - 1) = double(j) * at(i, j);
    return d;
  }

  Polynomial2D operator*(const Polynomial2D& o) const {
    Polynomial2D r(nx_ + o.nx_ - 1, ny_ + o.ny_ - 1);
    for (int i = 0; i < nx_; ++i)
      for (int j = 0; j < ny_; ++j) {
        if (at(i, j) == cplx(0.0)) continue;
        for (int k = 0; k < o.nx_; ++k)
          for (int l = 0; l < o.ny_; ++l) r.at(i + k, j + l) += at(i, j) * o.at(k, l);
      }
    return r;
  }

  Polynomial2D operator+(const Polynomial2D& o) const {
    Polynomial2D r(std::max(nx_, o.nx_), std::max(ny_, o.ny_));
    for (int i = 0; i < nx_; ++i)
      for (int j = 0; j < ny_; ++j) r.at(i, j) += at(i, j);
    for (int i = 0; i < o.nx_; ++i)
      for (int j = 0; j < o.ny_; ++j) r.at(i, j) += o.at(i, j);
    return r;
  }

  Polynomial2D scaled(cplx s) const {
    Polynomial2D r = *this;
    for (auto& v : r.c_) v *= s;
    return r;
  }

  // (1 - x^2 - y^2)^2, the standard boundary-vanishing factor on the disc.
  static Polynomial2D boundary_factor() {
    Polynomial2D q(3, 3);
    q.at(0, 0) = 1.0;
    q.at(2, 0) = -1.0;
    q.at(0, 2) = -1.0;
    return q * q;
  }

 private:
  int nx_, ny_;
  std::vector<cplx> c_;
};

// Scalar field with value and gradient callables. Factories wire exact
// derivatives where available and fall back to finite differences.
class ScalarField {
 public:
  using Fn = std::function<cplx(double, double)>;

  ScalarField() : ScalarField(zero()) {}
  ScalarField(Fn f, Fn fx, Fn fy)
      : f_(std::move(f)), fx_(std::move(fx)), fy_(std::move(fy)) {}

  cplx operator()(double x, double y) const { return f_(x, y); }
  cplx operator()(const Vec2& p) const { return f_(p.x, p.y); }
  cplx ddx(double x, double y) const { return fx_(x, y); }
  cplx ddy(double x, double y) const { return fy_(x, y); }

  static ScalarField zero() {
    auto z = [](double, double) { return cplx(0.0); };
    return ScalarField(z, z, z);
  }

  static ScalarField constant(cplx v) {
    auto z = [](double, double) { return cplx(0.0); };
    return ScalarField([v](double, double) { return v; }, z, z);
  }

  static ScalarField from_poly(const Polynomial2D& p) {
    Polynomial2D px = p.dx(), py = p.dy();
    return ScalarField(
        [p](double x, double y) { return p.eval(x, y); },
        [px](double x, double y) { return px.eval(x, y); },
        [py](double x, double y) { return py.eval(x, y); });
  }

  // amp * exp(-|x - c|^2 / w)
  static ScalarField gaussian(cplx amp, double width, Vec2 center) {
    auto val = [amp, width, center](double x, double y) {
      double dx = x - center.x, dy = y - center.y;
      return amp * std::exp(-(dx * dx + dy * dy) / width);
    };
    auto gx = [amp, width, center, val](double x, double y) {
      return val(x, y) * (-2.0 * (x - center.x) / width);
    };
    auto gy = [amp, width, center, val](double x, double y) {
      return val(x, y) * (-2.0 * (y - center.y) / width);
    };
    return ScalarField(val, gx, gy);
  }

  static ScalarField from_callable(Fn f, double fd_step = 1e-5) {
    auto fx = [f, fd_step](double x, double y) {
      return (f(x + fd_step, y) - f(x - fd_step, y)) / (2.0 * fd_step);
    };
    auto fy = [f, fd_step](double x, double y) {
      return (f(x, y + fd_step) - f(x, y - fd_step)) / (2.0 * fd_step);
    };
    return ScalarField(f, fx, fy);
  }

 private:
  Fn f_, fx_, fy_;
};

// Pointwise algebra; derivatives follow by linearity / the product rule.
inline ScalarField operator+(const ScalarField& a, const ScalarField& b) {
  return ScalarField(
      [a, b](double x, double y) { return a(x, y) + b(x, y); },
      [a, b](double x, double y) { return a.ddx(x, y) + b.ddx(x, y); },
      [a, b](double x, double y) { return a.ddy(x, y) + b.ddy(x, y); });
}

inline ScalarField operator*(const ScalarField& a, const ScalarField& b) {
  return ScalarField(
      [a, b](double x, double y) { return a(x, y) * b(x, y); },
      [a, b](double x, double y) { return a.ddx(x, y) * b(x, y) + a(x, y) * b.ddx(x, y); },
      [a, b](double x, double y) { return a.ddy(x, y) * b(x, y) + a(x, y) * b.ddy(x, y); });
}

inline ScalarField operator*(cplx s, const ScalarField& a) {
  return ScalarField([a, s](double x, double y) { return s * a(x, y); },
                     [a, s](double x, double y) { return s * a.ddx(x, y); },
                     [a, s](double x, double y) { return s * a.ddy(x, y); });
}

// Seeded random polynomial with coefficients uniform in a centered box.
// Used throughout the test suites for reproducible random inputs.
inline Polynomial2D random_polynomial(std::mt19937_64& rng, int max_deg,
                                      double amplitude = 0.5) {
  std::uniform_real_distribution<double> u(-amplitude, amplitude);
  Polynomial2D p(max_deg + 1, max_deg + 1);
  for (int i = 0; i <= max_deg; ++i)
    for (int j = 0; j <= max_deg; ++j) {
      if (i + j > max_deg) continue;
      p.at(i, j) = cplx(u(rng), u(rng));
    }
  return p;
}

// Random polynomial times (1-|x|^2)^2, vanishing on the unit circle.
inline Polynomial2D random_boundary_vanishing(std::mt19937_64& rng, int max_deg,
                                              double amplitude = 0.5) {
  return Polynomial2D::boundary_factor() * random_polynomial(rng, max_deg, amplitude);
}

}  // namespace atx
