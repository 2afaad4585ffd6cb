// Discretization of the forward transform as a dense complex matrix,
// exact discrete adjoint, CGLS on the normal equations, SVD null-space
// analysis, and the transport degree tests.
//
// Basis: tensor-product cubic B-splines over [-1,1]^2, restricted to
// functions with weight inside the disc.  Assembly scatters each
// quadrature sample of a traced ray into the 4x4 active spline stencil,
// so a full matrix costs one trace per ray.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "json.hpp"

#include "atx/angular_field.hpp"
#include "atx/attenuation.hpp"
#include "atx/common.hpp"
#include "atx/phase_field.hpp"
#include "atx/tensor.hpp"
#include "atx/transforms.hpp"

namespace atx {

// ---- spline basis ----------------------------------------------------------

inline double bspline3(double u) {
  u = std::abs(u);
  if (u < 1.0) return 2.0 / 3.0 - u * u + 0.5 * u * u * u;
  if (u < 2.0) {
    double w = 2.0 - u;
    return w * w * w / 6.0;
  }
  return 0.0;
}

struct SplineBasis2D {
  int n = 0;        // knots per axis over [-1, 1]
  double h = 0.0;   // knot spacing
  std::vector<int> col_of;              // (ix * n + iy) -> column or -1
  std::vector<std::pair<int, int>> knots;  // column -> (ix, iy)

  static SplineBasis2D make(int n, double max_center_radius) {
    SplineBasis2D b;
    b.n = n;
    b.h = 2.0 / (n - 1);
    b.col_of.assign(size_t(n) * n, -1);
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy) {
        Vec2 c{-1.0 + ix * b.h, -1.0 + iy * b.h};
        if (c.norm() <= max_center_radius) {
          b.col_of[size_t(ix) * n + iy] = int(b.knots.size());
          b.knots.emplace_back(ix, iy);
        }
      }
    return b;
  }

  // all splines with nonnegligible weight on the disc
  static SplineBasis2D over_disc(int n) {
    SplineBasis2D b = make(n, 1.0 + 1.0 / (n - 1));
    return b;
  }

  // splines whose support lies strictly inside the open disc
  static SplineBasis2D strictly_interior(int n) {
    double h = 2.0 / (n - 1);
    return make(n, 1.0 - 2.0 * h * std::sqrt(2.0));
  }

  int count() const { return int(knots.size()); }

  double eval(int col, double x, double y) const {
    auto [ix, iy] = knots[col];
    return bspline3((x + 1.0) / h - ix) * bspline3((y + 1.0) / h - iy);
  }

  ScalarField field(int col) const {
    SplineBasis2D self = *this;
    return ScalarField::from_callable(
        [self, col](double x, double y) { return cplx(self.eval(col, x, y)); });
  }

  // active columns at (x, y): up to 16 entries
  int gather(double x, double y, int* cols, double* vals) const {
    double fx = (x + 1.0) / h, fy = (y + 1.0) / h;
    int ix0 = int(std::floor(fx)) - 1, iy0 = int(std::floor(fy)) - 1;
    int cnt = 0;
    for (int a = 0; a < 4; ++a) {
      int ix = ix0 + a;
      if (ix < 0 || ix >= n) continue;
      double bx = bspline3(fx - ix);
      for (int b = 0; b < 4; ++b) {
        int iy = iy0 + b;
        if (iy < 0 || iy >= n) continue;
        int c = col_of[size_t(ix) * n + iy];
        if (c < 0) continue;
        cols[cnt] = c;
        vals[cnt] = bx * bspline3(fy - iy);
        ++cnt;
      }
    }
    return cnt;
  }

  // expansion value of a coefficient vector at (x, y)
  cplx expand(const Eigen::VectorXcd& coeffs, int offset, double x, double y) const {
    int cols[16];
    double vals[16];
    int cnt = gather(x, y, cols, vals);
    cplx out(0.0);
    for (int i = 0; i < cnt; ++i) out += vals[i] * coeffs[offset + cols[i]];
    return out;
  }
};

// ---- forward matrix --------------------------------------------------------

// A spline block contributes columns whose integrand carries the angular
// factor of one independent tensor component:
//   C(rank, comp) e^{-rank * lambda} cos^{rank-comp} phi sin^comp phi.
struct SplineBlock {
  int rank = 0;
  int comp = 0;
};

struct ForwardMatrix {
  Eigen::MatrixXcd A;
  RayGrid rays;
  int n_explicit = 0;                 // leading explicit columns
  std::vector<SplineBlock> blocks;    // after the explicit block
  SplineBasis2D basis;
  double step = 1e-3;
  nlohmann::json provenance;
};

inline ForwardMatrix assemble_forward(const ConformalSurface& s, const Attenuation& atten,
                                      const RayGrid& rays, double step,
                                      const SplineBasis2D& basis,
                                      const std::vector<SplineBlock>& blocks,
                                      const std::vector<PhaseFn>& explicit_cols = {},
                                      int threads = 1,
                                      std::int64_t entry_cap = 10'000'000) {
  const int n_expl = int(explicit_cols.size());
  const int cols = n_expl + int(blocks.size()) * basis.count();
  const int rows = rays.count();
  if (std::int64_t(rows) * cols > entry_cap)
    throw SizeGuard("forward matrix exceeds the configured entry cap");

  ForwardMatrix fm;
  fm.A = Eigen::MatrixXcd::Zero(rows, cols);
  fm.rays = rays;
  fm.n_explicit = n_expl;
  fm.blocks = blocks;
  fm.basis = basis;
  fm.step = step;

  PhaseFn att = atten.restricted(s);
  detail::parallel_for(rows, threads, [&](int row) {
    int ib = row / rays.n_inc, ia = row % rays.n_inc;
    TraceOptions opt;
    opt.step = step;
    GeodesicPath path = trace_geodesic(s, rays.ray(ib, ia).start(), opt);
    const size_t np = path.t.size();
    if (np < 2) return;

    // trapezoid weight per sample, times exp of the attenuation primitive
    std::vector<cplx> wexp(np);
    cplx primitive(0.0);
    cplx a_prev = att(path.v[0].pos.x, path.v[0].pos.y, path.v[0].phi);
    std::vector<cplx> eprim(np);
    eprim[0] = cplx(1.0);
    for (size_t i = 1; i < np; ++i) {
      double dt = path.t[i] - path.t[i - 1];
      cplx a_cur = att(path.v[i].pos.x, path.v[i].pos.y, path.v[i].phi);
      primitive += 0.5 * dt * (a_prev + a_cur);
      eprim[i] = std::exp(primitive);
      a_prev = a_cur;
    }
    for (size_t i = 0; i < np; ++i) {
      double w = 0.0;
      if (i > 0) w += 0.5 * (path.t[i] - path.t[i - 1]);
      if (i + 1 < np) w += 0.5 * (path.t[i + 1] - path.t[i]);
      wexp[i] = w * eprim[i];
    }

    int cbuf[16];
    double vbuf[16];
    for (size_t i = 0; i < np; ++i) {
      const PhaseVector& v = path.v[i];
      for (int e = 0; e < n_expl; ++e)
        fm.A(row, e) += wexp[i] * explicit_cols[e](v.pos.x, v.pos.y, v.phi);
      int cnt = basis.gather(v.pos.x, v.pos.y, cbuf, vbuf);
      double lam = s.lambda(v.pos);
      double cp = std::cos(v.phi), sp = std::sin(v.phi);
      int off = n_expl;
      for (const SplineBlock& blk : blocks) {
        double ang = binomial(blk.rank, blk.comp) * std::exp(-blk.rank * lam) *
                     std::pow(cp, blk.rank - blk.comp) * std::pow(sp, blk.comp);
        for (int c = 0; c < cnt; ++c)
          fm.A(row, off + cbuf[c]) += wexp[i] * (ang * vbuf[c]);
        off += basis.count();
      }
    }
  });

  fm.provenance = {{"surface", s.name()},  {"rows", rows},      {"cols", cols},
                   {"n_explicit", n_expl}, {"spline_n", basis.n}, {"step", step}};
  return fm;
}

// Theorem A mode: rank-0 unknown over the disc.
inline ForwardMatrix assemble_forward_scalar(const ConformalSurface& s,
                                             const Attenuation& atten,
                                             const RayGrid& rays, double step,
                                             int spline_n, int threads = 1) {
  return assemble_forward(s, atten, rays, step, SplineBasis2D::over_disc(spline_n),
                          {{0, 0}}, {}, threads);
}

// Raw matrix dump: row-major (re, im) f64 pairs, little-endian, plus a JSON
// sidecar with the shape and assembly provenance.
inline void write_matrix(const ForwardMatrix& fm, const std::string& bin_path,
                         const std::string& json_path) {
  std::ofstream os(bin_path, std::ios::binary);
  for (Eigen::Index r = 0; r < fm.A.rows(); ++r)
    for (Eigen::Index c = 0; c < fm.A.cols(); ++c) {
      double re = fm.A(r, c).real(), im = fm.A(r, c).imag();
      os.write(reinterpret_cast<const char*>(&re), sizeof re);
      os.write(reinterpret_cast<const char*>(&im), sizeof im);
    }
  nlohmann::json j = fm.provenance;
  j["layout"] = "row-major (re,im) float64 pairs";
  std::ofstream js(json_path);
  js << j.dump(2) << "\n";
}

inline Eigen::MatrixXcd read_matrix(const std::string& bin_path, int rows, int cols) {
  std::ifstream is(bin_path, std::ios::binary);
  Eigen::MatrixXcd A(rows, cols);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double re, im;
      is.read(reinterpret_cast<char*>(&re), sizeof re);
      is.read(reinterpret_cast<char*>(&im), sizeof im);
      A(r, c) = cplx(re, im);
    }
  if (!is) throw ConfigError("read_matrix: file too short for declared shape");
  return A;
}

inline Eigen::VectorXcd adjoint_apply(const ForwardMatrix& fm, const Eigen::VectorXcd& d) {
  if (d.size() != fm.A.rows())
    throw DimensionMismatch("adjoint_apply: data vector length mismatch");
  return fm.A.adjoint() * d;
}

// ---- CGLS ------------------------------------------------------------------

struct CglsResult {
  Eigen::VectorXcd x;
  std::vector<double> normal_residuals;  // ||A^H (b - A x)|| per iteration
  bool converged = false;
};

inline CglsResult cgls(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& b,
                       int max_iter = 200, double rtol = 1e-10) {
  CglsResult res;
  res.x = Eigen::VectorXcd::Zero(A.cols());
  Eigen::VectorXcd r = b;
  Eigen::VectorXcd s = A.adjoint() * r;
  Eigen::VectorXcd p = s;
  double gamma = s.squaredNorm();
  double gamma0 = gamma;
  res.normal_residuals.push_back(std::sqrt(gamma));
  for (int it = 0; it < max_iter; ++it) {
    if (gamma <= rtol * rtol * gamma0) {
      res.converged = true;
      break;
    }
    Eigen::VectorXcd q = A * p;
    double qn = q.squaredNorm();
    if (qn == 0.0) break;
    double alpha = gamma / qn;
    res.x += alpha * p;
    r -= alpha * q;
    s = A.adjoint() * r;
    double gamma_new = s.squaredNorm();
    res.normal_residuals.push_back(std::sqrt(gamma_new));
    p = s + (gamma_new / gamma) * p;
    gamma = gamma_new;
  }
  if (gamma <= rtol * rtol * gamma0) res.converged = true;
  return res;
}

inline CglsResult reconstruct(const ForwardMatrix& fm, const Eigen::VectorXcd& d,
                              int max_iter = 200, double rtol = 1e-10) {
  if (d.size() != fm.A.rows())
    throw DimensionMismatch("reconstruct: data vector length mismatch");
  return cgls(fm.A, d, max_iter, rtol);
}

// ---- SVD null-space analysis ----------------------------------------------

struct KernelReport {
  std::vector<double> singular_values;   // descending
  double null_ceiling = 0.0;             // ceiling_rel * sigma_max
  int near_null_dim = 0;
  bool decisive = true;                  // false <=> NoGapFound
  double gap_ratio_found = 0.0;
  int theory_dim = 0;
  std::vector<double> projection_residuals;  // near-null vectors onto theory span
  double subspace_angle = 0.0;               // largest principal angle [rad]
  double complement_sigma_min = 0.0;         // A restricted to generic columns
  double null_cluster_top = 0.0;             // largest sigma inside the cluster

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["singular_values"] = singular_values;
    j["null_ceiling"] = null_ceiling;
    j["near_null_dim"] = near_null_dim;
    j["decisive"] = decisive;
    j["gap_ratio"] = gap_ratio_found;
    j["theory_dim"] = theory_dim;
    j["projection_residuals"] = projection_residuals;
    j["subspace_angle_rad"] = subspace_angle;
    j["complement_sigma_min"] = complement_sigma_min;
    j["null_cluster_top"] = null_cluster_top;
    return j;
  }
};

inline double complement_sigma_min(const ForwardMatrix& fm) {
  if (fm.A.cols() <= fm.n_explicit) return 0.0;
  Eigen::MatrixXcd Ac = fm.A.rightCols(fm.A.cols() - fm.n_explicit);
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(Ac);
  return svd.singularValues().minCoeff();
}

// Near-null identification: singular values below ceiling_rel * sigma_max
// are candidates; the cluster boundary is the largest relative gap whose
// lower side is below the ceiling.  If candidates exist but no gap reaches
// min_gap_ratio the analysis is declared inconclusive rather than forcing
// a dimension.  The theoretical kernel span is the coordinate span of the
// leading explicit columns (images of the boundary-vanishing p basis).
inline KernelReport kernel_analysis(const ForwardMatrix& fm, double ceiling_rel = 1e-3,
                                    double min_gap_ratio = 10.0) {
  KernelReport rep;
  Eigen::BDCSVD<Eigen::MatrixXcd> svd(fm.A, Eigen::ComputeThinV);
  Eigen::VectorXd sv = svd.singularValues();
  rep.singular_values.assign(sv.data(), sv.data() + sv.size());
  const int nsv = int(sv.size());
  double smax = sv(0);
  rep.null_ceiling = ceiling_rel * smax;
  rep.theory_dim = fm.n_explicit;

  int first_below = nsv;
  for (int i = 0; i < nsv; ++i)
    if (sv(i) < rep.null_ceiling) {
      first_below = i;
      break;
    }
  if (first_below == nsv) {
    rep.near_null_dim = 0;
    rep.decisive = true;
    rep.complement_sigma_min = complement_sigma_min(fm);
    return rep;
  }

  // largest relative gap with lower side below the ceiling
  int gap_at = -1;
  double best_ratio = 0.0;
  for (int i = std::max(1, first_below); i < nsv; ++i) {
    if (sv(i) >= rep.null_ceiling) continue;
    double ratio = sv(i - 1) / std::max(sv(i), 1e-300);
    if (ratio > best_ratio) {
      best_ratio = ratio;
      gap_at = i;
    }
  }
  rep.gap_ratio_found = best_ratio;
  if (best_ratio < min_gap_ratio) {
    rep.decisive = false;  // NoGapFound
    rep.complement_sigma_min = complement_sigma_min(fm);
    return rep;
  }

  rep.near_null_dim = nsv - gap_at;
  rep.null_cluster_top = sv(gap_at);
  Eigen::MatrixXcd V = svd.matrixV();
  Eigen::MatrixXcd Vnull = V.rightCols(rep.near_null_dim);

  if (fm.n_explicit > 0) {
    // projection residual: energy of each near-null vector outside the
    // leading coordinate block
    for (int c = 0; c < Vnull.cols(); ++c) {
      double tail = Vnull.col(c).tail(Vnull.rows() - fm.n_explicit).norm();
      rep.projection_residuals.push_back(tail);
    }
    // principal angles: SVD of E^H Vnull = top rows of Vnull
    Eigen::MatrixXcd M = Vnull.topRows(fm.n_explicit);
    Eigen::BDCSVD<Eigen::MatrixXcd> ang(M);
    double cmin = ang.singularValues().minCoeff();
    rep.subspace_angle = std::acos(std::clamp(cmin, 0.0, 1.0));
  }
  rep.complement_sigma_min = complement_sigma_min(fm);
  return rep;
}

// ---- transport degree tests ------------------------------------------------

struct DegreeTestOptions {
  double grid_h = 1.0 / 6.0;
  int n_angles = 32;
  double step = 2e-3;
  int poly_deg = 2;
};

struct DegreeReport {
  double high_mode_energy_rel = 0.0;  // modes |k| >= m
  double sup_distance = 0.0;          // || u + restrict(p) ||_inf
  int measured_degree = 0;

  nlohmann::json to_json() const {
    return {{"high_mode_energy_rel", high_mode_energy_rel},
            {"sup_distance", sup_distance},
            {"measured_degree", measured_degree}};
  }
};

// Constructs psi = (G + a)(restrict p) for a random boundary-vanishing
// rank-(m-1) tensor p, so the transport solution is exactly -restrict(p)
// of degree m-1; reports the energy in modes |k| >= m and the sup
// distance between the computed solution and -restrict(p).
inline DegreeReport degree_test(int m, const Attenuation& atten,
                                const ConformalSurface& s, std::uint64_t seed,
                                const DegreeTestOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::vector<ScalarField> comps;
  for (int j = 0; j < m; ++j)
    comps.push_back(ScalarField::from_poly(random_boundary_vanishing(rng, opt.poly_deg)));
  SymmetricTensorField p(m - 1, std::move(comps));
  KernelElement ke = kernel_element(p, atten, s);
  PhaseFn psi = ke.combined_restriction(s);
  PhaseFn rp = p.restriction(s);

  double step = opt.step;
  PhaseFn u = [&s, &psi, &atten, step](double x, double y, double phi) {
    if (x * x + y * y > 1.0) return cplx(0.0);
    return transport_solve(s, psi, atten, PhaseVector({x, y}, phi), step);
  };

  DiskGrid grid;
  grid.h = opt.grid_h;
  AngularField uf = AngularField::sample(u, grid, opt.n_angles);

  DegreeReport rep;
  double total = uf.energy();
  rep.high_mode_energy_rel =
      total > 0 ? uf.mode_energy([m](int k) { return std::abs(k) >= m; }) / total : 0.0;
  rep.measured_degree = uf.degree(1e-3);
  for (int i : grid.disc_nodes()) {
    Vec2 pnode = grid.node(i);
    for (int j = 0; j < opt.n_angles; ++j) {
      double phi = uf.angle(j);
      rep.sup_distance = std::max(
          rep.sup_distance,
          std::abs(uf.value(i, j) + rp(pnode.x, pnode.y, phi)));
    }
  }
  return rep;
}

struct OneSidedReport {
  double bad_side_energy_rel = 0.0;
  double sup_distance = 0.0;

  nlohmann::json to_json() const {
    return {{"bad_side_energy_rel", bad_side_energy_rel},
            {"sup_distance", sup_distance}};
  }
};

// One-sided mode decay: builds a known solution u* with modes on one side
// only, takes psi = -(G u* + a u*) (one extra mode of slack), recomputes u
// by transport quadrature and measures the energy on the forbidden side.
// lower_side = true checks: psi_k = 0 for k <= -m-1  =>  u_k = 0 for k <= -m.
inline OneSidedReport one_sided_test(int m, const Attenuation& atten,
                                     const ConformalSurface& s, std::uint64_t seed,
                                     bool lower_side,
                                     const DegreeTestOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  int k_lo = lower_side ? -m + 1 : -3;
  int k_hi = lower_side ? 3 : m - 1;
  ModeField ustar = random_mode_field(rng, k_lo, k_hi, /*boundary_vanishing=*/true,
                                      opt.poly_deg);
  PhaseFn g_ustar = ustar.geodesic_derivative(s);
  PhaseFn ustar_fn = ustar.evaluator();
  Attenuation att = atten;
  ConformalSurface surf = s;
  PhaseFn psi = [g_ustar, ustar_fn, att, surf](double x, double y, double phi) {
    return -(g_ustar(x, y, phi) + att.eval(surf, x, y, phi) * ustar_fn(x, y, phi));
  };

  double step = opt.step;
  PhaseFn u = [&surf, &psi, &att, step](double x, double y, double phi) {
    if (x * x + y * y > 1.0) return cplx(0.0);
    return transport_solve(surf, psi, att, PhaseVector({x, y}, phi), step);
  };

  DiskGrid grid;
  grid.h = opt.grid_h;
  AngularField uf = AngularField::sample(u, grid, opt.n_angles);

  OneSidedReport rep;
  double total = uf.energy();
  auto forbidden = [m, lower_side](int k) { return lower_side ? k <= -m : k >= m; };
  rep.bad_side_energy_rel = total > 0 ? uf.mode_energy(forbidden) / total : 0.0;
  for (int i : grid.disc_nodes()) {
    Vec2 pnode = grid.node(i);
    for (int j = 0; j < opt.n_angles; ++j) {
      double phi = uf.angle(j);
      rep.sup_distance =
          std::max(rep.sup_distance,
                   std::abs(uf.value(i, j) - ustar_fn(pnode.x, pnode.y, phi)));
    }
  }
  return rep;
}

}  // namespace atx
