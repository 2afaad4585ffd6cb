// Symmetric covariant tensor fields on the disc and the dictionary with
// functions on SM: restriction f_{i_1..i_m} xi^{i_1}..xi^{i_m}, the
// symmetrization sigma, degree raising sigma(F (x) g), the symmetrized
// covariant derivative, and the lift of a degree-m angular field back to
// a rank-m tensor via F = sum_i lambda^i F_{m-2i}.
//
// In two dimensions a rank-m symmetric tensor has m+1 independent
// components c_j = f_{1..1 2..2} (j indices equal to 2).  Full component
// arrays are indexed by bitmask (bit set = index value 2).

#pragma once

#include <bit>
#include <memory>
#include <vector>

#include "atx/angular_field.hpp"
#include "atx/attenuation.hpp"
#include "atx/common.hpp"
#include "atx/scalar_field.hpp"
#include "atx/surface.hpp"

namespace atx {

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

class SymmetricTensorField {
 public:
  SymmetricTensorField() : rank_(0), comp_(1, ScalarField::zero()) {}
  SymmetricTensorField(int rank, std::vector<ScalarField> components)
      : rank_(rank), comp_(std::move(components)) {
    if (int(comp_.size()) != rank_ + 1)
      throw DimensionMismatch("rank-m tensor needs m+1 components");
  }

  static SymmetricTensorField scalar(ScalarField f) {
    return SymmetricTensorField(0, {std::move(f)});
  }
  static SymmetricTensorField one_form(ScalarField c1, ScalarField c2) {
    return SymmetricTensorField(1, {std::move(c1), std::move(c2)});
  }

  int rank() const { return rank_; }
  const ScalarField& component(int j) const { return comp_[j]; }

  // component for a full index tuple given as bitmask
  const ScalarField& entry(unsigned bits) const { return comp_[std::popcount(bits)]; }

  // f(x, xi) with xi = e^{-lambda}(cos phi, sin phi):
  //   e^{-m lambda} sum_j C(m,j) c_j cos^{m-j} phi sin^j phi
  PhaseFn restriction(const ConformalSurface& s) const {
    SymmetricTensorField self = *this;
    int m = rank_;
    return [self, s, m](double x, double y, double phi) {
      double e = std::exp(-double(m) * s.lambda(x, y));
      double cp = std::cos(phi), sp = std::sin(phi);
      cplx acc(0.0);
      for (int j = 0; j <= m; ++j)
        acc += binomial(m, j) * self.comp_[j](x, y) *
               std::pow(cp, m - j) * std::pow(sp, j);
      return e * acc;
    };
  }

  SymmetricTensorField scaled_by(const ScalarField& s) const {
    std::vector<ScalarField> c;
    c.reserve(rank_ + 1);
    for (const auto& f : comp_) c.push_back(s * f);
    return SymmetricTensorField(rank_, std::move(c));
  }

  SymmetricTensorField operator+(const SymmetricTensorField& o) const {
    if (o.rank_ != rank_) throw DimensionMismatch("tensor sum: rank mismatch");
    std::vector<ScalarField> c;
    c.reserve(rank_ + 1);
    for (int j = 0; j <= rank_; ++j) c.push_back(comp_[j] + o.comp_[j]);
    return SymmetricTensorField(rank_, std::move(c));
  }

  // Max modulus of all components on the boundary circle.
  double boundary_sup(int n_samples = 128) const {
    double m = 0.0;
    for (int i = 0; i < n_samples; ++i) {
      double b = 2.0 * pi * i / n_samples;
      for (const auto& c : comp_) m = std::max(m, std::abs(c(std::cos(b), std::sin(b))));
    }
    return m;
  }

 private:
  int rank_;
  std::vector<ScalarField> comp_;
};

// sigma applied to a full rank-m component array (bitmask-indexed):
// the symmetric component with j twos is the mean over all arrangements.
inline SymmetricTensorField symmetrize(const std::vector<ScalarField>& full, int rank) {
  if (int(full.size()) != (1 << rank))
    throw DimensionMismatch("full array must have 2^m entries");
  auto shared = std::make_shared<std::vector<ScalarField>>(full);
  std::vector<ScalarField> comps;
  for (int j = 0; j <= rank; ++j) {
    std::vector<unsigned> idx;
    for (unsigned b = 0; b < unsigned(1 << rank); ++b)
      if (std::popcount(b) == j) idx.push_back(b);
    double w = 1.0 / double(idx.size());
    comps.push_back(ScalarField(
        [shared, idx, w](double x, double y) {
          cplx s(0.0);
          for (unsigned b : idx) s += (*shared)[b](x, y);
          return w * s;
        },
        [shared, idx, w](double x, double y) {
          cplx s(0.0);
          for (unsigned b : idx) s += (*shared)[b].ddx(x, y);
          return w * s;
        },
        [shared, idx, w](double x, double y) {
          cplx s(0.0);
          for (unsigned b : idx) s += (*shared)[b].ddy(x, y);
          return w * s;
        }));
  }
  return SymmetricTensorField(rank, std::move(comps));
}

// e^{2 lambda} with analytic derivatives, the conformal metric component.
inline ScalarField metric_component(const ConformalSurface& s) {
  return ScalarField(
      [s](double x, double y) { return cplx(std::exp(2.0 * s.lambda(x, y))); },
      [s](double x, double y) {
        return cplx(2.0 * s.lambda_x(x, y) * std::exp(2.0 * s.lambda(x, y)));
      },
      [s](double x, double y) {
        return cplx(2.0 * s.lambda_y(x, y) * std::exp(2.0 * s.lambda(x, y)));
      });
}

inline SymmetricTensorField metric_tensor(const ConformalSurface& s) {
  ScalarField e2l = metric_component(s);
  return SymmetricTensorField(2, {e2l, ScalarField::zero(), e2l});
}

// lambda F := sigma(F (x) g); the restriction to SM is unchanged since g
// restricts as the constant function 1.
inline SymmetricTensorField raise_degree(const SymmetricTensorField& f,
                                         const ConformalSurface& s) {
  int m = f.rank();
  ScalarField e2l = metric_component(s);
  ScalarField zero = ScalarField::zero();
  std::vector<ScalarField> full;
  full.reserve(1 << (m + 2));
  for (unsigned b = 0; b < unsigned(1 << (m + 2)); ++b) {
    unsigned fb = b & ((1u << m) - 1);
    unsigned ga = (b >> m) & 1u, gb = (b >> (m + 1)) & 1u;
    full.push_back(ga == gb ? e2l * f.entry(fb) : zero);
  }
  return symmetrize(full, m + 2);
}

// sigma(p (x) alpha) for a 1-form alpha with components (a1, a2).
inline SymmetricTensorField symmetric_product_one_form(const SymmetricTensorField& p,
                                                       const ScalarField& a1,
                                                       const ScalarField& a2) {
  int m = p.rank();
  std::vector<ScalarField> full;
  full.reserve(1 << (m + 1));
  for (unsigned b = 0; b < unsigned(1 << (m + 1)); ++b) {
    unsigned pb = b & ((1u << m) - 1);
    unsigned last = (b >> m) & 1u;
    full.push_back((last ? a2 : a1) * p.entry(pb));
  }
  return symmetrize(full, m + 1);
}

namespace detail {

// Christoffel symbols of e^{2 lambda} delta; indices in {0,1}.
inline double christoffel(const ConformalSurface& s, int k, int i, int j,
                          double x, double y) {
  double lx = s.lambda_x(x, y), ly = s.lambda_y(x, y);
  if (k == 0) {
    if (i == 0 && j == 0) return lx;
    if (i != j) return ly;
    return -lx;
  }
  if (i == 0 && j == 0) return -ly;
  if (i != j) return lx;
  return ly;
}

}  // namespace detail

// Symmetrized covariant derivative sigma(nabla p): rank m-1 -> rank m.
// Restricted to SM it equals G applied to the restriction of p.
inline SymmetricTensorField inner_derivative(const SymmetricTensorField& p,
                                             const ConformalSurface& s) {
  int m = p.rank() + 1;
  auto pp = std::make_shared<SymmetricTensorField>(p);
  std::vector<ScalarField> full;
  full.reserve(1 << m);
  for (unsigned b = 0; b < unsigned(1 << m); ++b) {
    unsigned ib = b & ((1u << (m - 1)) - 1);  // indices of p
    int j = int((b >> (m - 1)) & 1u);          // derivative index
    int nlow = m - 1;
    auto val = [pp, s, ib, j, nlow](double x, double y) {
      const ScalarField& c = pp->entry(ib);
      cplx out = (j == 0) ? c.ddx(x, y) : c.ddy(x, y);
      for (int slot = 0; slot < nlow; ++slot) {
        int is = int((ib >> slot) & 1u);
        for (int l = 0; l < 2; ++l) {
          unsigned swapped = (ib & ~(1u << slot)) | (unsigned(l) << slot);
          out -= detail::christoffel(s, l, j, is, x, y) * pp->entry(swapped)(x, y);
        }
      }
      return out;
    };
    full.push_back(ScalarField::from_callable(val));
  }
  return symmetrize(full, m);
}

// Samples the restriction of a tensor onto an angular grid.
inline AngularField restrict_tensor(const SymmetricTensorField& t,
                                    const ConformalSurface& s, DiskGrid grid = {},
                                    int n_angles = 64) {
  return AngularField::sample(t.restriction(s), grid, n_angles);
}

// Inverse dictionary: a field of degree <= m with the parity of m lifts to
// a rank-m symmetric tensor whose restriction reproduces it.  Mode pairs
// +-k give F_k = e^{k lambda} (u_k dz^k + u_{-k} dzbar^k); lower-degree
// parts are raised with sigma( . (x) g).
inline SymmetricTensorField lift_to_tensor(const AngularField& field, int m,
                                           const ConformalSurface& s,
                                           double tol = 1e-8) {
  double total = field.energy();
  if (total > 0.0) {
    double bad_parity =
        field.mode_energy([m](int k) { return ((k - m) % 2) != 0; });
    if (bad_parity > tol * total)
      throw ParityViolation("lift_to_tensor: energy in forbidden-parity modes");
    double beyond = field.mode_energy([m](int k) { return std::abs(k) > m; });
    if (beyond > tol * total)
      throw DegreeViolation("lift_to_tensor: field has degree above target rank");
  }

  auto shared = std::make_shared<AngularField>(field);
  SymmetricTensorField out;
  bool first = true;
  for (int k = m; k >= 0; k -= 2) {
    // rank-k tensor with restriction u_k + u_{-k}
    std::vector<ScalarField> comps;
    for (int j = 0; j <= k; ++j) {
      cplx ip = std::pow(cplx(0.0, 1.0), j);
      cplx im = std::pow(cplx(0.0, -1.0), j);
      int kk = k;
      auto val = [shared, s, ip, im, kk](double x, double y) {
        double ekl = std::exp(double(kk) * s.lambda(x, y));
        cplx up = shared->eval_coeff(kk, x, y);
        cplx um = kk == 0 ? cplx(0.0) : shared->eval_coeff(-kk, x, y);
        return ekl * (ip * up + im * um);
      };
      comps.push_back(ScalarField::from_callable(val));
    }
    SymmetricTensorField fk(k, std::move(comps));
    // raise to rank m
    for (int i = 0; i < (m - k) / 2; ++i) fk = raise_degree(fk, s);
    out = first ? fk : out + fk;
    first = false;
    if (k == 0) break;
  }
  return out;
}

}  // namespace atx
