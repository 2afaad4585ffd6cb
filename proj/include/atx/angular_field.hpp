// Complex functions on the unit sphere bundle SM, stored as samples on a
// Cartesian lattice times a uniform fiber-angle lattice, with cached
// angular Fourier spectra u_k.  Spectra are authoritative for mode-level
// operations, samples for pointwise products.
//
// The lattice covers the square [-1,1]^2 plus a margin of cells so that
// bicubic stencils are complete everywhere on the closed disc; fields
// produced from analytic inputs extend smoothly onto the margin.  Norms
// and energies only count nodes inside the closed disc.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>
#include <fstream>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "atx/common.hpp"
#include "atx/surface.hpp"

namespace atx {

using PhaseFn = std::function<cplx(double, double, double)>;  // (x, y, phi)

namespace detail {

// In-place iterative radix-2 FFT, forward sign convention e^{-2 pi i jk/N}.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
  const size_t n = a.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double ang = 2.0 * pi / double(len) * (inverse ? 1.0 : -1.0);
    cplx wl(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      cplx w(1.0);
      for (size_t k = 0; k < len / 2; ++k) {
        cplx u = a[i + k], v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& v : a) v /= double(n);
}

// Keys cubic-convolution weights (a = -1/2); t in [0,1) within the cell.
inline std::array<double, 4> cubic_weights(double t) {
  double t2 = t * t, t3 = t2 * t;
  return {-0.5 * t3 + t2 - 0.5 * t, 1.5 * t3 - 2.5 * t2 + 1.0,
          -1.5 * t3 + 2.0 * t2 + 0.5 * t, 0.5 * t3 - 0.5 * t2};
}

}  // namespace detail

// Uniform lattice over [-1 - margin*h, 1 + margin*h]^2.
struct DiskGrid {
  double h = 1.0 / 32.0;
  int margin = 2;

  int per_axis() const { return int(std::lround(2.0 / h)) + 1 + 2 * margin; }
  int count() const { return per_axis() * per_axis(); }
  double origin() const { return -1.0 - margin * h; }

  Vec2 node(int ix, int iy) const { return {origin() + ix * h, origin() + iy * h}; }
  Vec2 node(int idx) const { return node(idx / per_axis(), idx % per_axis()); }
  int index(int ix, int iy) const { return ix * per_axis() + iy; }

  bool in_disc(int idx) const { return node(idx).norm2() <= 1.0 + 1e-12; }

  std::vector<int> disc_nodes() const {
    std::vector<int> out;
    for (int i = 0; i < count(); ++i)
      if (in_disc(i)) out.push_back(i);
    return out;
  }

  nlohmann::json to_json() const {
    return {{"h", h}, {"margin", margin}, {"per_axis", per_axis()}};
  }
};

enum class AngularPart { Holomorphic, Antiholomorphic, Even, Odd };

class AngularField {
 public:
  AngularField(DiskGrid grid, int n_angles, std::vector<cplx> values)
      : grid_(grid), n_angles_(n_angles), values_(std::move(values)) {
    if ((n_angles_ & (n_angles_ - 1)) != 0 || n_angles_ < 2)
      throw ConfigError("n_angles must be a power of two >= 2");
    if (int(values_.size()) != grid_.count() * n_angles_)
      throw DimensionMismatch("AngularField: value array does not match grid");
    compute_spectrum();
  }

  static AngularField sample(const PhaseFn& fn, DiskGrid grid = {}, int n_angles = 64) {
    std::vector<cplx> vals(size_t(grid.count()) * n_angles);
    for (int i = 0; i < grid.count(); ++i) {
      Vec2 p = grid.node(i);
      for (int j = 0; j < n_angles; ++j) {
        double phi = 2.0 * pi * j / n_angles;
        vals[size_t(i) * n_angles + j] = fn(p.x, p.y, phi);
      }
    }
    return AngularField(grid, n_angles, std::move(vals));
  }

  const DiskGrid& grid() const { return grid_; }
  int n_angles() const { return n_angles_; }
  double angle(int j) const { return 2.0 * pi * j / n_angles_; }

  cplx value(int node, int j) const { return values_[size_t(node) * n_angles_ + j]; }

  // u_k at a node, k in [-n/2, n/2)
  cplx coeff(int node, int k) const {
    int q = ((k % n_angles_) + n_angles_) % n_angles_;
    return spectrum_[size_t(node) * n_angles_ + q];
  }

  // pointwise in x: fields combine sample-wise
  AngularField pointwise(const AngularField& other,
                         const std::function<cplx(cplx, cplx)>& op) const {
    if (other.n_angles_ != n_angles_ || other.grid_.count() != grid_.count())
      throw DimensionMismatch("pointwise: incompatible fields");
    std::vector<cplx> vals(values_.size());
    for (size_t i = 0; i < values_.size(); ++i) vals[i] = op(values_[i], other.values_[i]);
    return AngularField(grid_, n_angles_, std::move(vals));
  }

  AngularField product(const AngularField& o) const {
    return pointwise(o, [](cplx a, cplx b) { return a * b; });
  }
  AngularField sum(const AngularField& o) const {
    return pointwise(o, [](cplx a, cplx b) { return a + b; });
  }
  AngularField exp() const {
    std::vector<cplx> vals(values_.size());
    for (size_t i = 0; i < values_.size(); ++i) vals[i] = std::exp(values_[i]);
    return AngularField(grid_, n_angles_, std::move(vals));
  }

  // ---- mode-level operations ----------------------------------------------

  AngularField project(AngularPart part) const {
    return filtered([part](int k) {
      switch (part) {
        case AngularPart::Holomorphic: return k >= 0;
        case AngularPart::Antiholomorphic: return k <= 0;
        case AngularPart::Even: return k % 2 == 0;
        case AngularPart::Odd: return k % 2 != 0;
      }
      return true;
    });
  }

  AngularField project_mode(int k0) const {
    return filtered([k0](int k) { return k == k0; });
  }

  // spectral differentiation u_k -> i k u_k
  AngularField vertical_derivative() const {
    std::vector<cplx> spec = spectrum_;
    for (int i = 0; i < grid_.count(); ++i)
      for (int q = 0; q < n_angles_; ++q) {
        int k = unwrap(q);
        spec[size_t(i) * n_angles_ + q] *= cplx(0.0, double(k));
      }
    return from_spectrum(grid_, n_angles_, spec);
  }

  // Total squared energy over in-disc nodes (Parseval-normalized).
  double energy() const {
    double e = 0.0;
    for (int i : grid_.disc_nodes())
      for (int q = 0; q < n_angles_; ++q) e += std::norm(spectrum_[size_t(i) * n_angles_ + q]);
    return e;
  }

  // Energy restricted to modes selected by `keep`.
  double mode_energy(const std::function<bool(int)>& keep) const {
    double e = 0.0;
    for (int i : grid_.disc_nodes())
      for (int q = 0; q < n_angles_; ++q)
        if (keep(unwrap(q))) e += std::norm(spectrum_[size_t(i) * n_angles_ + q]);
    return e;
  }

  // Smallest m with relative energy outside |k| <= m below tol.
  int degree(double tol = 1e-10) const {
    double total = energy();
    if (total == 0.0) return 0;
    for (int m = 0; m <= n_angles_ / 2; ++m) {
      double outside = mode_energy([m](int k) { return std::abs(k) > m; });
      if (outside <= tol * total) return m;
    }
    return n_angles_ / 2;
  }

  // Energy in the top quarter of modes above 1e-6 of the total indicates
  // possible aliasing.
  bool alias_risk(double rel = 1e-6) const {
    double total = energy();
    if (total == 0.0) return false;
    int q4 = (3 * n_angles_) / 8;
    return mode_energy([q4](int k) { return std::abs(k) >= q4; }) > rel * total;
  }

  double max_abs() const {
    double m = 0.0;
    for (int i : grid_.disc_nodes())
      for (int j = 0; j < n_angles_; ++j) m = std::max(m, std::abs(value(i, j)));
    return m;
  }

  // ---- off-lattice evaluation ----------------------------------------------
  // Bicubic (cubic convolution) in space, trigonometric in angle.

  cplx eval(double x, double y, double phi) const {
    auto [ix, iy, wx, wy] = stencil(x, y);
    // angular phases e^{i k phi}
    std::vector<cplx> ph(n_angles_);
    for (int q = 0; q < n_angles_; ++q) {
      int k = unwrap(q);
      ph[q] = cplx(std::cos(k * phi), std::sin(k * phi));
    }
    cplx out(0.0);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) {
        int node = grid_.index(ix + a, iy + b);
        cplx v(0.0);
        const cplx* sp = &spectrum_[size_t(node) * n_angles_];
        for (int q = 0; q < n_angles_; ++q) v += sp[q] * ph[q];
        out += wx[a] * wy[b] * v;
      }
    return out;
  }

  // Spatial interpolation of a single coefficient u_k.
  cplx eval_coeff(int k, double x, double y) const {
    auto [ix, iy, wx, wy] = stencil(x, y);
    cplx out(0.0);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b)
        out += wx[a] * wy[b] * coeff(grid_.index(ix + a, iy + b), k);
    return out;
  }

  // Self-contained evaluator (holds a copy; safe past the field's lifetime).
  PhaseFn evaluator() const {
    auto self = std::make_shared<AngularField>(*this);
    return [self](double x, double y, double phi) { return self->eval(x, y, phi); };
  }

  // ---- serialization --------------------------------------------------------
  // CSV rows: node_ix, node_iy, angle_index, re, im.  A JSON header carries
  // the grid spec and n_angles; the layout is stable.

  void write_csv(const std::string& path) const {
    std::ofstream os(path);
    os.precision(17);
    int n = grid_.per_axis();
    for (int ix = 0; ix < n; ++ix)
      for (int iy = 0; iy < n; ++iy)
        for (int j = 0; j < n_angles_; ++j) {
          cplx v = value(grid_.index(ix, iy), j);
          os << ix << "," << iy << "," << j << "," << v.real() << "," << v.imag() << "\n";
        }
  }

  void write_header(const std::string& path) const {
    nlohmann::json j;
    j["grid"] = grid_.to_json();
    j["n_angles"] = n_angles_;
    j["layout"] = "csv:node_ix,node_iy,angle_index,re,im";
    std::ofstream os(path);
    os << j.dump(2) << "\n";
  }

  static AngularField read_csv(const std::string& csv_path, DiskGrid grid, int n_angles) {
    std::ifstream is(csv_path);
    std::vector<cplx> vals(size_t(grid.count()) * n_angles);
    std::string line;
    while (std::getline(is, line)) {
      if (line.empty()) continue;
      int ix, iy, j;
      double re, im;
      if (std::sscanf(line.c_str(), "%d,%d,%d,%lf,%lf", &ix, &iy, &j, &re, &im) != 5)
        throw ConfigError("bad AngularField CSV row: " + line);
      vals[size_t(grid.index(ix, iy)) * n_angles + j] = cplx(re, im);
    }
    return AngularField(grid, n_angles, std::move(vals));
  }

  static AngularField from_spectrum(DiskGrid grid, int n_angles, std::vector<cplx> spec) {
    std::vector<cplx> vals(spec.size());
    std::vector<cplx> buf(n_angles);
    for (int i = 0; i < grid.count(); ++i) {
      std::copy_n(spec.begin() + size_t(i) * n_angles, n_angles, buf.begin());
      detail::fft_pow2(buf, /*inverse=*/true);
      for (int j = 0; j < n_angles; ++j) vals[size_t(i) * n_angles + j] = buf[j] * double(n_angles);
    }
    return AngularField(grid, n_angles, std::move(vals));
  }

 private:
  int unwrap(int q) const { return q < n_angles_ / 2 ? q : q - n_angles_; }

  void compute_spectrum() {
    spectrum_.resize(values_.size());
    std::vector<cplx> buf(n_angles_);
    for (int i = 0; i < grid_.count(); ++i) {
      std::copy_n(values_.begin() + size_t(i) * n_angles_, n_angles_, buf.begin());
      detail::fft_pow2(buf, /*inverse=*/false);
      for (int q = 0; q < n_angles_; ++q)
        spectrum_[size_t(i) * n_angles_ + q] = buf[q] / double(n_angles_);
    }
  }

  AngularField filtered(const std::function<bool(int)>& keep) const {
    std::vector<cplx> spec = spectrum_;
    for (int i = 0; i < grid_.count(); ++i)
      for (int q = 0; q < n_angles_; ++q)
        if (!keep(unwrap(q))) spec[size_t(i) * n_angles_ + q] = cplx(0.0);
    return from_spectrum(grid_, n_angles_, spec);
  }

  struct Stencil {
    int ix, iy;
    std::array<double, 4> wx, wy;
  };

  Stencil stencil(double x, double y) const {
    double fx = (x - grid_.origin()) / grid_.h;
    double fy = (y - grid_.origin()) / grid_.h;
    int cx = int(std::floor(fx)), cy = int(std::floor(fy));
    int n = grid_.per_axis();
    cx = std::clamp(cx, 1, n - 3);
    cy = std::clamp(cy, 1, n - 3);
    return {cx - 1, cy - 1, detail::cubic_weights(fx - cx), detail::cubic_weights(fy - cy)};
  }

  DiskGrid grid_;
  int n_angles_;
  std::vector<cplx> values_;
  std::vector<cplx> spectrum_;  // node-major, wrapped mode index
};

}  // namespace atx
