// Attenuation coefficient a(x, xi) = h(x) + alpha_x(xi), with h a complex
// function and alpha a complex 1-form.  Restricted to SM the 1-form part
// reads e^{-lambda} (alpha_1 cos phi + alpha_2 sin phi), so the angular
// spectrum of the restriction lives in modes |k| <= 1.

#pragma once

#include <sstream>
#include <string>
#include <vector>

#include "atx/angular_field.hpp"
#include "atx/common.hpp"
#include "atx/scalar_field.hpp"
#include "atx/surface.hpp"

namespace atx {

struct Attenuation {
  ScalarField h = ScalarField::zero();
  ScalarField alpha1 = ScalarField::zero();
  ScalarField alpha2 = ScalarField::zero();

  cplx eval(const ConformalSurface& s, double x, double y, double phi) const {
    double e = std::exp(-s.lambda(x, y));
    return h(x, y) + e * (alpha1(x, y) * std::cos(phi) + alpha2(x, y) * std::sin(phi));
  }

  PhaseFn restricted(const ConformalSurface& s) const {
    Attenuation a = *this;
    return [a, s](double x, double y, double phi) { return a.eval(s, x, y, phi); };
  }

  static Attenuation zero() { return {}; }
};

// Scalar registry entries accepted in configs:
//   "zero" | "constant(re,im)" | "gaussian(re,im,width,cx,cy)"
inline ScalarField scalar_from_name(const std::string& spec) {
  auto args_of = [&](size_t open) {
    std::vector<double> out;
    std::string inner = spec.substr(open + 1, spec.size() - open - 2);
    std::istringstream ss(inner);
    std::string tok;
    while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
    return out;
  };
  if (spec == "zero") return ScalarField::zero();
  if (spec.rfind("constant(", 0) == 0 && spec.back() == ')') {
    auto a = args_of(spec.find('('));
    if (a.size() != 2) throw ConfigError("constant expects (re,im): " + spec);
    return ScalarField::constant(cplx(a[0], a[1]));
  }
  if (spec.rfind("gaussian(", 0) == 0 && spec.back() == ')') {
    auto a = args_of(spec.find('('));
    if (a.size() != 5)
      throw ConfigError("gaussian expects (re,im,width,cx,cy): " + spec);
    return ScalarField::gaussian(cplx(a[0], a[1]), a[2], {a[3], a[4]});
  }
  throw ConfigError("unknown scalar registry entry: " + spec);
}

}  // namespace atx
