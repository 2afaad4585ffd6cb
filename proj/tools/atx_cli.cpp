// Config-driven experiment runner.  Every verification scenario is a
// subcommand; results land in --out as CSV/JSON plus a manifest with the
// config hash, wall time and per-criterion pass/fail.  Exit status is 0
// iff all configured tolerances pass.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "atx/inversion.hpp"
#include "atx/simplicity.hpp"

using namespace atx;
using nlohmann::json;

namespace {

struct RunContext {
  json config;
  std::string out_dir = ".";
  std::uint64_t seed = 1;
  int threads = 0;  // 0 -> hardware
  bool strict = false;
  std::vector<std::string> warnings;

  int n_threads() const {
    if (threads > 0) return threads;
    unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : int(n);
  }
  void warn(const std::string& w) { warnings.push_back(w); }
};

// Strict schema: every present key must be declared.
void check_keys(const json& j, const std::set<std::string>& allowed,
                const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
  for (const auto& [k, v] : j.items())
    if (!allowed.count(k))
      throw ConfigError(where + ": unknown key '" + k + "'");
}

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (j.contains(key)) return j.at(key).get<T>();
  return fallback;
}

ConformalSurface config_surface(const json& cfg) {
  return surface_from_name(get_or<std::string>(cfg, "surface", "euclidean"));
}

Attenuation config_attenuation(const json& cfg) {
  Attenuation a;
  if (!cfg.contains("attenuation")) return a;
  const json& j = cfg.at("attenuation");
  check_keys(j, {"h", "alpha1", "alpha2"}, "attenuation");
  a.h = scalar_from_name(get_or<std::string>(j, "h", "zero"));
  a.alpha1 = scalar_from_name(get_or<std::string>(j, "alpha1", "zero"));
  a.alpha2 = scalar_from_name(get_or<std::string>(j, "alpha2", "zero"));
  return a;
}

RayGrid config_rays(const json& cfg) {
  RayGrid g;
  if (!cfg.contains("rays")) return g;
  const json& j = cfg.at("rays");
  check_keys(j, {"n_beta", "n_inc", "incidence_margin"}, "rays");
  g.n_beta = get_or<int>(j, "n_beta", g.n_beta);
  g.n_inc = get_or<int>(j, "n_inc", g.n_inc);
  g.incidence_margin = get_or<double>(j, "incidence_margin", g.incidence_margin);
  if (g.n_beta < 1 || g.n_inc < 1) throw ConfigError("rays: counts must be positive");
  return g;
}

Attenuation seeded_attenuation(std::mt19937_64& rng, double amp = 0.3) {
  Attenuation a;
  a.h = ScalarField::from_poly(random_polynomial(rng, 2, amp));
  a.alpha1 = ScalarField::from_poly(random_polynomial(rng, 2, amp));
  a.alpha2 = ScalarField::from_poly(random_polynomial(rng, 2, amp));
  return a;
}

std::string config_hash(const json& cfg) {
  std::ostringstream os;
  os << std::hex << std::hash<std::string>{}(cfg.dump());
  return os.str();
}

void write_json(const std::string& path, const json& j) {
  std::ofstream os(path);
  os << j.dump(2) << "\n";
}

int finish(RunContext& ctx, const std::string& subcommand, json criteria,
           double wall_s) {
  bool pass = true;
  for (const auto& [k, v] : criteria.items())
    if (v.is_boolean() && !v.get<bool>()) pass = false;
  if (ctx.strict && !ctx.warnings.empty()) {
    criteria["strict_no_warnings"] = false;
    pass = false;
  }
  json manifest = {{"subcommand", subcommand},
                   {"config_hash", config_hash(ctx.config)},
                   {"seed", ctx.seed},
                   {"threads", ctx.n_threads()},
                   {"wall_time_s", wall_s},
                   {"warnings", ctx.warnings},
                   {"criteria", criteria},
                   {"pass", pass}};
  write_json(ctx.out_dir + "/manifest.json", manifest);
  std::printf("%s: %s (%.2fs)\n", subcommand.c_str(), pass ? "PASS" : "FAIL", wall_s);
  return pass ? 0 : 1;
}

// ---- subcommands -----------------------------------------------------------

int run_validate_surface(RunContext& ctx) {
  check_keys(ctx.config, {"surface", "sampling"}, "config");
  ConformalSurface s = config_surface(ctx.config);
  SimplicitySampling sampling;
  if (ctx.config.contains("sampling")) {
    const json& j = ctx.config.at("sampling");
    check_keys(j, {"n_boundary", "n_beta", "n_incidence", "step", "max_length"},
               "sampling");
    sampling.n_boundary = get_or<int>(j, "n_boundary", sampling.n_boundary);
    sampling.n_beta = get_or<int>(j, "n_beta", sampling.n_beta);
    sampling.n_incidence = get_or<int>(j, "n_incidence", sampling.n_incidence);
    sampling.step = get_or<double>(j, "step", sampling.step);
    sampling.max_length = get_or<double>(j, "max_length", sampling.max_length);
  }
  auto t0 = std::chrono::steady_clock::now();
  SimplicityReport rep = simplicity_check(s, sampling);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(ctx.out_dir + "/simplicity_report.json", rep.to_json());
  json crit = {{"strictly_convex", rep.strictly_convex},
               {"no_conjugate_points", !rep.conjugate_point_found},
               {"nontrapping", rep.nontrapping}};
  return finish(ctx, "validate-surface", crit, wall);
}

// psi given as a rank-m symmetric tensor with registry scalar components;
// the transform integrates its restriction.
int run_forward(RunContext& ctx) {
  check_keys(ctx.config, {"surface", "attenuation", "psi", "rays", "step"}, "config");
  ConformalSurface s = config_surface(ctx.config);
  Attenuation at = config_attenuation(ctx.config);
  RayGrid rays = config_rays(ctx.config);
  double step = get_or<double>(ctx.config, "step", 1e-3);

  std::vector<ScalarField> comps;
  if (ctx.config.contains("psi")) {
    const json& j = ctx.config.at("psi");
    check_keys(j, {"components"}, "psi");
    for (const auto& c : j.at("components"))
      comps.push_back(scalar_from_name(c.get<std::string>()));
  } else {
    comps.push_back(ScalarField::constant(1.0));
  }
  int rank = int(comps.size()) - 1;
  SymmetricTensorField psi(rank, std::move(comps));

  auto t0 = std::chrono::steady_clock::now();
  FanBeamData data =
      full_transform(s, psi.restriction(s), at, rays, step, ctx.n_threads());
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  data.metadata["seed"] = ctx.seed;
  data.write_csv(ctx.out_dir + "/fan_beam.csv");
  data.write_sidecar(ctx.out_dir + "/fan_beam.json");
  json crit = {{"computed", true}};
  return finish(ctx, "forward", crit, wall);
}

int run_kernel_check(RunContext& ctx) {
  check_keys(ctx.config, {"surface", "attenuation", "m", "rays", "step", "tolerance"},
             "config");
  ConformalSurface s = config_surface(ctx.config);
  int m = get_or<int>(ctx.config, "m", 1);
  if (m < 1) throw ConfigError("m must be >= 1");
  RayGrid rays = config_rays(ctx.config);
  double step = get_or<double>(ctx.config, "step", 1e-3);
  double tol = get_or<double>(ctx.config, "tolerance", 1e-4);

  std::mt19937_64 rng(ctx.seed);
  Attenuation at = ctx.config.contains("attenuation") ? config_attenuation(ctx.config)
                                                      : seeded_attenuation(rng);
  std::vector<ScalarField> comps;
  for (int j = 0; j < m; ++j)
    comps.push_back(ScalarField::from_poly(random_boundary_vanishing(rng, 2, 0.4)));
  SymmetricTensorField p(m - 1, std::move(comps));

  auto t0 = std::chrono::steady_clock::now();
  KernelElement ke = kernel_element(p, at, s);
  FanBeamData data = full_transform(s, ke.combined_restriction(s), at, rays, step,
                                    ctx.n_threads());
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  double sup = data.sup_abs();
  data.write_csv(ctx.out_dir + "/kernel_residuals.csv");
  write_json(ctx.out_dir + "/kernel_check.json",
             {{"m", m}, {"sup_residual", sup}, {"tolerance", tol}});
  json crit = {{"residual_below_tolerance", sup <= tol}};
  return finish(ctx, "kernel-check", crit, wall);
}

int run_degree_check(RunContext& ctx) {
  check_keys(ctx.config,
             {"surface", "attenuation", "m", "tolerance", "grid_h", "n_angles", "step"},
             "config");
  ConformalSurface s = config_surface(ctx.config);
  int m = get_or<int>(ctx.config, "m", 1);
  if (m < 1) throw ConfigError("m must be >= 1");
  double tol = get_or<double>(ctx.config, "tolerance", 1e-3);
  DegreeTestOptions opt;
  opt.grid_h = get_or<double>(ctx.config, "grid_h", opt.grid_h);
  opt.n_angles = get_or<int>(ctx.config, "n_angles", opt.n_angles);
  opt.step = get_or<double>(ctx.config, "step", opt.step);

  std::mt19937_64 rng(ctx.seed);
  Attenuation at = ctx.config.contains("attenuation") ? config_attenuation(ctx.config)
                                                      : seeded_attenuation(rng);
  auto t0 = std::chrono::steady_clock::now();
  DegreeReport deg = degree_test(m, at, s, ctx.seed, opt);
  OneSidedReport lo = one_sided_test(m, at, s, ctx.seed, true, opt);
  OneSidedReport hi = one_sided_test(m, at, s, ctx.seed, false, opt);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_json(ctx.out_dir + "/degree_report.json",
             {{"degree", deg.to_json()},
              {"one_sided_lower", lo.to_json()},
              {"one_sided_upper", hi.to_json()},
              {"tolerance", tol}});
  json crit = {{"degree_energy", deg.high_mode_energy_rel <= tol},
               {"degree_sup", deg.sup_distance <= tol},
               {"one_sided_lower", lo.bad_side_energy_rel <= tol},
               {"one_sided_upper", hi.bad_side_energy_rel <= tol}};
  return finish(ctx, "degree-check", crit, wall);
}

int run_adjoint_test(RunContext& ctx) {
  check_keys(ctx.config,
             {"surface", "attenuation", "rays", "step", "spline_n", "tolerance",
              "n_pairs"},
             "config");
  ConformalSurface s = config_surface(ctx.config);
  RayGrid rays = config_rays(ctx.config);
  double step = get_or<double>(ctx.config, "step", 2e-3);
  int spline_n = get_or<int>(ctx.config, "spline_n", 9);
  double tol = get_or<double>(ctx.config, "tolerance", 1e-12);
  int n_pairs = get_or<int>(ctx.config, "n_pairs", 20);

  std::mt19937_64 rng(ctx.seed);
  Attenuation at = ctx.config.contains("attenuation") ? config_attenuation(ctx.config)
                                                      : seeded_attenuation(rng);
  auto t0 = std::chrono::steady_clock::now();
  ForwardMatrix fm = assemble_forward_scalar(s, at, rays, step, spline_n,
                                             ctx.n_threads());
  std::normal_distribution<double> g(0.0, 1.0);
  double worst = 0.0;
  for (int t = 0; t < n_pairs; ++t) {
    Eigen::VectorXcd f(fm.A.cols()), d(fm.A.rows());
    for (int i = 0; i < f.size(); ++i) f[i] = cplx(g(rng), g(rng));
    for (int i = 0; i < d.size(); ++i) d[i] = cplx(g(rng), g(rng));
    cplx lhs = (fm.A * f).dot(d);
    cplx rhs = f.dot(adjoint_apply(fm, d));
    double scale = (fm.A * f).norm() * d.norm();
    worst = std::max(worst, std::abs(lhs - rhs) / std::max(scale, 1e-300));
  }
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_json(ctx.out_dir + "/adjoint_report.json",
             {{"max_relative_defect", worst}, {"n_pairs", n_pairs}, {"tolerance", tol}});
  json crit = {{"adjoint_exact", worst <= tol}};
  return finish(ctx, "adjoint-test", crit, wall);
}

int run_invert(RunContext& ctx) {
  check_keys(ctx.config,
             {"surface", "attenuation", "phantom", "rays", "step", "spline_n",
              "max_iters", "tolerance"},
             "config");
  ConformalSurface s = config_surface(ctx.config);
  Attenuation at = config_attenuation(ctx.config);
  RayGrid rays = config_rays(ctx.config);
  double step = get_or<double>(ctx.config, "step", 1e-3);
  int spline_n = get_or<int>(ctx.config, "spline_n", 30);
  int max_iters = get_or<int>(ctx.config, "max_iters", 200);
  double tol = get_or<double>(ctx.config, "tolerance", 0.05);
  ScalarField phantom = scalar_from_name(
      get_or<std::string>(ctx.config, "phantom", "gaussian(1,0,0.125,0.15,-0.1)"));

  auto t0 = std::chrono::steady_clock::now();
  PhaseFn pf = [phantom](double x, double y, double) { return phantom(x, y); };
  FanBeamData data = full_transform(s, pf, at, rays, step, ctx.n_threads());
  Eigen::VectorXcd b(rays.count());
  for (int i = 0; i < rays.count(); ++i) b[i] = data.values[i];

  ForwardMatrix fm = assemble_forward_scalar(s, at, rays, step, spline_n,
                                             ctx.n_threads());
  CglsResult res = reconstruct(fm, b, max_iters, 1e-12);

  double num = 0.0, den = 0.0;
  double h = 1.0 / 32.0;
  for (double x = -1.0; x <= 1.0; x += h)
    for (double y = -1.0; y <= 1.0; y += h) {
      if (x * x + y * y > 1.0) continue;
      cplx truth = phantom(x, y);
      num += std::norm(fm.basis.expand(res.x, 0, x, y) - truth);
      den += std::norm(truth);
    }
  double rel = den > 0 ? std::sqrt(num / den) : 0.0;
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  write_matrix(fm, ctx.out_dir + "/forward_matrix.bin",
               ctx.out_dir + "/forward_matrix.json");
  write_json(ctx.out_dir + "/inversion_report.json",
             {{"relative_l2_error", rel},
              {"tolerance", tol},
              {"iterations", int(res.normal_residuals.size()) - 1},
              {"converged", res.converged},
              {"basis_dim", fm.basis.count()},
              {"normal_residuals", res.normal_residuals}});
  json crit = {{"reconstruction_error", rel <= tol}};
  return finish(ctx, "invert", crit, wall);
}

int run_kernel_analysis(RunContext& ctx) {
  check_keys(ctx.config,
             {"surface", "attenuation", "rays", "step", "p_spline_n",
              "complement_spline_n", "ceiling_rel", "min_gap_ratio", "angle_tolerance"},
             "config");
  ConformalSurface s = config_surface(ctx.config);
  RayGrid rays = config_rays(ctx.config);
  double step = get_or<double>(ctx.config, "step", 1e-3);
  int p_n = get_or<int>(ctx.config, "p_spline_n", 14);
  int c_n = get_or<int>(ctx.config, "complement_spline_n", 10);
  double ceiling_rel = get_or<double>(ctx.config, "ceiling_rel", 1e-3);
  double min_gap = get_or<double>(ctx.config, "min_gap_ratio", 10.0);
  double angle_tol = get_or<double>(ctx.config, "angle_tolerance", 0.1);

  std::mt19937_64 rng(ctx.seed);
  Attenuation at = ctx.config.contains("attenuation") ? config_attenuation(ctx.config)
                                                      : seeded_attenuation(rng);
  auto t0 = std::chrono::steady_clock::now();
  SplineBasis2D p_basis = SplineBasis2D::strictly_interior(p_n);
  std::vector<PhaseFn> explicit_cols;
  for (int i = 0; i < p_basis.count(); ++i) {
    SymmetricTensorField p = SymmetricTensorField::scalar(p_basis.field(i));
    PhaseFn comb = kernel_element(p, at, s).combined_restriction(s);
    auto [ix, iy] = p_basis.knots[i];
    double cx = -1.0 + ix * p_basis.h, cy = -1.0 + iy * p_basis.h;
    double rad = 2.0 * p_basis.h + 1e-3;
    explicit_cols.push_back([comb, cx, cy, rad](double x, double y, double phi) {
      if (std::abs(x - cx) > rad || std::abs(y - cy) > rad) return cplx(0.0);
      return comb(x, y, phi);
    });
  }
  ForwardMatrix fm =
      assemble_forward(s, at, rays, step, SplineBasis2D::strictly_interior(c_n),
                       {{1, 0}, {1, 1}}, explicit_cols, ctx.n_threads());
  KernelReport rep = kernel_analysis(fm, ceiling_rel, min_gap);
  double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  json out = rep.to_json();
  out["p_basis_dim"] = p_basis.count();
  write_json(ctx.out_dir + "/kernel_report.json", out);
  if (!rep.decisive) ctx.warn("kernel-analysis: no decisive spectral gap");
  json crit = {{"decisive", rep.decisive},
               {"dimension_match", rep.near_null_dim == p_basis.count()},
               {"subspace_angle", rep.subspace_angle <= angle_tol},
               {"complement_margin",
                rep.complement_sigma_min >= min_gap * rep.null_ceiling}};
  return finish(ctx, "kernel-analysis", crit, wall);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"attenuated geodesic X-ray transform toolkit"};
  app.require_subcommand(1);

  RunContext ctx;
  std::string config_path;
  app.add_option("--config", config_path, "JSON experiment config")
      ->check(CLI::ExistingFile);
  app.add_option("--out", ctx.out_dir, "output directory");
  app.add_option("--seed", ctx.seed, "random seed");
  app.add_option("--threads", ctx.threads, "worker threads (0 = hardware)");
  app.add_flag("--strict", ctx.strict, "treat warnings as errors");

  auto* c_validate = app.add_subcommand("validate-surface", "simplicity check");
  auto* c_forward = app.add_subcommand("forward", "fan-beam transform of a tensor");
  auto* c_kernel = app.add_subcommand("kernel-check", "kernel pair identity residual");
  auto* c_degree = app.add_subcommand("degree-check", "transport degree / one-sided");
  auto* c_adjoint = app.add_subcommand("adjoint-test", "discrete adjoint defect");
  auto* c_invert = app.add_subcommand("invert", "CGLS phantom reconstruction");
  auto* c_analysis = app.add_subcommand("kernel-analysis", "SVD null-space report");
  for (auto* sub : app.get_subcommands({})) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      ctx.config = json::parse(is);
    } else {
      ctx.config = json::object();
    }
    std::filesystem::create_directories(ctx.out_dir);

    if (c_validate->parsed()) return run_validate_surface(ctx);
    if (c_forward->parsed()) return run_forward(ctx);
    if (c_kernel->parsed()) return run_kernel_check(ctx);
    if (c_degree->parsed()) return run_degree_check(ctx);
    if (c_adjoint->parsed()) return run_adjoint_test(ctx);
    if (c_invert->parsed()) return run_invert(ctx);
    if (c_analysis->parsed()) return run_kernel_analysis(ctx);
    return 2;
  } catch (const std::exception& e) {
    json err = {{"error", e.what()}};
    std::ofstream os(ctx.out_dir + "/error.json");
    os << err.dump(2) << "\n";
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
}
