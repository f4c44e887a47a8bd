#include "ncvem/analysis.hpp"

#include "ncvem/quadrature.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>

namespace ncvem {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

} // namespace

double PolynomialFunction::value(const Vec3& x) const {
  double r = 0.0;
  for (const auto& [mi, c] : terms) {
    double t = c;
    for (int a = 0; a < dim; ++a) t *= ipow(x[a], mi.s[a]);
    r += t;
  }
  return r;
}

Vec3 PolynomialFunction::gradient(const Vec3& x) const {
  Vec3 g = Vec3::Zero();
  for (const auto& [mi, c] : terms)
    for (int a = 0; a < dim; ++a) {
      if (mi.s[a] == 0) continue;
      double t = c * mi.s[a] * ipow(x[a], mi.s[a] - 1);
      for (int b = 0; b < dim; ++b)
        if (b != a) t *= ipow(x[b], mi.s[b]);
      g[a] += t;
    }
  return g;
}

double PolynomialFunction::laplacian(const Vec3& x) const {
  double lap = 0.0;
  for (const auto& [mi, c] : terms)
    for (int a = 0; a < dim; ++a) {
      if (mi.s[a] < 2) continue;
      double t = c * mi.s[a] * (mi.s[a] - 1) * ipow(x[a], mi.s[a] - 2);
      for (int b = 0; b < dim; ++b)
        if (b != a) t *= ipow(x[b], mi.s[b]);
      lap += t;
    }
  return lap;
}

int PolynomialFunction::degree() const {
  int d = 0;
  for (const auto& [mi, c] : terms)
    if (c != 0.0) d = std::max(d, mi.degree());
  return d;
}

ScalarField PolynomialFunction::as_field() const {
  PolynomialFunction copy = *this;
  return [copy](const Vec3& x) { return copy.value(x); };
}

ManufacturedProblem make_sin2d() {
  ManufacturedProblem p;
  p.name = "sin2d";
  p.dim = 2;
  p.regularity = 99.0;
  const double pi = M_PI;
  p.u = [pi](const Vec3& x) { return std::sin(pi * x.x()) * std::sin(pi * x.y()); };
  p.grad_u = [pi](const Vec3& x) {
    return Vec3(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()),
                pi * std::sin(pi * x.x()) * std::cos(pi * x.y()), 0.0);
  };
  p.laplacian_u = [pi](const Vec3& x) {
    return -2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
  };
  p.f = [pi](const Vec3& x) {
    return 2.0 * pi * pi * std::sin(pi * x.x()) * std::sin(pi * x.y());
  };
  p.g = p.u;
  return p;
}

ManufacturedProblem make_sin3d() {
  ManufacturedProblem p;
  p.name = "sin3d";
  p.dim = 3;
  p.regularity = 99.0;
  const double pi = M_PI;
  auto sss = [pi](const Vec3& x) {
    return std::sin(pi * x.x()) * std::sin(pi * x.y()) * std::sin(pi * x.z());
  };
  p.u = sss;
  p.grad_u = [pi](const Vec3& x) {
    return Vec3(pi * std::cos(pi * x.x()) * std::sin(pi * x.y()) * std::sin(pi * x.z()),
                pi * std::sin(pi * x.x()) * std::cos(pi * x.y()) * std::sin(pi * x.z()),
                pi * std::sin(pi * x.x()) * std::sin(pi * x.y()) * std::cos(pi * x.z()));
  };
  p.laplacian_u = [pi, sss](const Vec3& x) { return -3.0 * pi * pi * sss(x); };
  p.f = [pi, sss](const Vec3& x) { return 3.0 * pi * pi * sss(x); };
  p.g = p.u;
  return p;
}

ManufacturedProblem make_corner2d() {
  // harmonic r^{2/3} sin(2 theta / 3): smooth data, limited Sobolev regularity
  // at the corner; rate-limited and informational only
  ManufacturedProblem p;
  p.name = "corner2d";
  p.dim = 2;
  p.regularity = 2.0 / 3.0;
  p.u = [](const Vec3& x) {
    const double r = std::hypot(x.x(), x.y());
    if (r == 0.0) return 0.0;
    const double th = std::atan2(x.y(), x.x());
    return std::pow(r, 2.0 / 3.0) * std::sin(2.0 * th / 3.0);
  };
  p.grad_u = [](const Vec3& x) {
    const double r = std::max(std::hypot(x.x(), x.y()), 1e-14);
    const double th = std::atan2(x.y(), x.x());
    const double dr = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0) * std::sin(2.0 * th / 3.0);
    const double dt = 2.0 / 3.0 * std::pow(r, -1.0 / 3.0) * std::cos(2.0 * th / 3.0);
    return Vec3(dr * std::cos(th) - dt * std::sin(th), dr * std::sin(th) + dt * std::cos(th),
                0.0);
  };
  p.laplacian_u = [](const Vec3&) { return 0.0; };
  p.f = [](const Vec3&) { return 0.0; };
  p.g = p.u;
  return p;
}

ManufacturedProblem make_polynomial_problem(const PolynomialFunction& p, const std::string& name) {
  ManufacturedProblem mp;
  mp.name = name;
  mp.dim = p.dim;
  mp.regularity = 99.0;
  PolynomialFunction copy = p;
  mp.u = [copy](const Vec3& x) { return copy.value(x); };
  mp.grad_u = [copy](const Vec3& x) { return copy.gradient(x); };
  mp.laplacian_u = [copy](const Vec3& x) { return copy.laplacian(x); };
  mp.f = [copy](const Vec3& x) { return -copy.laplacian(x); };
  mp.g = mp.u;
  return mp;
}

namespace {

MultiIndex mi2(int a, int b) { return {{a, b, 0}, 2}; }
MultiIndex mi3(int a, int b, int c) { return {{a, b, c}, 3}; }

PolynomialFunction catalog_polynomial(int dim, int degree) {
  PolynomialFunction p;
  p.dim = dim;
  if (dim == 2) {
    switch (degree) {
      case 1: p.terms = {{mi2(1, 0), 2.0}, {mi2(0, 1), 3.0}, {mi2(0, 0), -1.0}}; return p;
      case 2: p.terms = {{mi2(2, 0), 1.0}, {mi2(0, 2), 0.5}, {mi2(1, 1), 1.0}}; return p;
      case 3: p.terms = {{mi2(3, 0), 1.0}, {mi2(2, 1), 1.0}, {mi2(0, 3), -1.0}}; return p;
      case 4:
        p.terms = {{mi2(4, 0), 1.0}, {mi2(2, 2), -6.0}, {mi2(0, 4), 1.0}, {mi2(3, 1), 1.0}};
        return p;
      default: break;
    }
  } else {
    switch (degree) {
      case 1: p.terms = {{mi3(1, 0, 0), 1.0}, {mi3(0, 1, 0), 2.0}, {mi3(0, 0, 1), -1.0},
                         {mi3(0, 0, 0), 0.5}};
        return p;
      case 2: p.terms = {{mi3(2, 0, 0), 1.0}, {mi3(0, 1, 1), 1.0}, {mi3(0, 0, 2), 1.0}}; return p;
      case 3: p.terms = {{mi3(3, 0, 0), 1.0}, {mi3(0, 2, 1), 1.0}, {mi3(1, 1, 1), 1.0}}; return p;
      default: break;
    }
  }
  throw ValidationError("no catalog polynomial of degree " + std::to_string(degree) + " in " +
                        std::to_string(dim) + "D");
}

} // namespace

ManufacturedProblem problem_by_name(const std::string& name) {
  if (name == "sin2d") return make_sin2d();
  if (name == "sin3d") return make_sin3d();
  if (name == "corner2d") return make_corner2d();
  for (int dim : {2, 3}) {
    const std::string prefix = "poly" + std::to_string(dim) + "d-";
    if (name.rfind(prefix, 0) == 0) {
      const int degree = std::stoi(name.substr(prefix.size()));
      return make_polynomial_problem(catalog_polynomial(dim, degree), name);
    }
  }
  throw ValidationError("unknown problem '" + name + "'");
}

std::vector<std::string> problem_names() {
  return {"sin2d", "sin3d", "corner2d", "poly2d-1", "poly2d-2", "poly2d-3", "poly2d-4",
          "poly3d-1", "poly3d-2", "poly3d-3"};
}

double check_problem_consistency(const ManufacturedProblem& p, int n_points, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.05, 0.95);
  double worst = 0.0;
  for (int i = 0; i < n_points; ++i) {
    Vec3 x(unif(rng), unif(rng), p.dim == 3 ? unif(rng) : 0.0);
    worst = std::max(worst, std::abs(-p.laplacian_u(x) - p.f(x)));
  }
  return worst;
}

namespace {

Vector local_dofs(const Mesh& mesh, const DofMap& dofmap, const LocalElement& el,
                  const Vector& dofs) {
  Vector local(el.layout.total);
  for (int i = 0; i < el.layout.total; ++i)
    local[i] = dofs[dofmap.global_index(mesh, el.cell, i)];
  return local;
}

} // namespace

double energy_error(const Mesh& mesh, const DofMap& dofmap,
                    const std::vector<LocalElement>& elements, const Vector& dofs,
                    const VectorField& grad_u) {
  double err2 = 0.0;
  for (const LocalElement& el : elements) {
    const Vector coeffs = el.proj.PiStar * local_dofs(mesh, dofmap, el, dofs);
    const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, el.cell, el.k);
    const QuadratureRule rule = cell_rule(mesh, el.cell, data_exactness(2 * el.k + 4));
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      Vec3 g = -grad_u(rule.points[q]);
      for (int j = 0; j < basis.size(); ++j) g += coeffs[j] * basis.gradient(j, rule.points[q]);
      err2 += rule.weights[q] * g.squaredNorm();
    }
  }
  return std::sqrt(err2);
}

double l2_error(const Mesh& mesh, const DofMap& dofmap,
                const std::vector<LocalElement>& elements, const Vector& dofs,
                const ScalarField& u) {
  double err2 = 0.0;
  for (const LocalElement& el : elements) {
    const Vector coeffs = el.proj.PiStar * local_dofs(mesh, dofmap, el, dofs);
    const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, el.cell, el.k);
    const QuadratureRule rule = cell_rule(mesh, el.cell, data_exactness(2 * el.k + 4));
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      double v = -u(rule.points[q]);
      for (int j = 0; j < basis.size(); ++j) v += coeffs[j] * basis.value(j, rule.points[q]);
      err2 += rule.weights[q] * v * v;
    }
  }
  return std::sqrt(err2);
}

double best_energy_approximation_error(const Mesh& mesh, int k, const VectorField& grad_u) {
  double err2 = 0.0;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, c, k);
    const int n = basis.size();
    const QuadratureRule rule = cell_rule(mesh, c, data_exactness(2 * k + 4));
    Matrix A = Matrix::Zero(n, n);
    Vector rhs = Vector::Zero(n);
    double gnorm2 = 0.0;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3 gu = grad_u(rule.points[q]);
      gnorm2 += rule.weights[q] * gu.squaredNorm();
      std::vector<Vec3> grads(n);
      for (int i = 0; i < n; ++i) grads[i] = basis.gradient(i, rule.points[q]);
      for (int i = 0; i < n; ++i) {
        rhs[i] += rule.weights[q] * gu.dot(grads[i]);
        for (int j = i; j < n; ++j) A(i, j) += rule.weights[q] * grads[i].dot(grads[j]);
      }
    }
    const Matrix A_full = Matrix(A.selfadjointView<Eigen::Upper>());
    // constant member has zero gradient: fit on the rest
    const int m = n - 1;
    const Matrix A_red = A_full.bottomRightCorner(m, m);
    const Vector rhs_red = rhs.tail(m);
    const Vector coef = Eigen::LDLT<Matrix>(A_red).solve(rhs_red);
    err2 += std::max(0.0, gnorm2 - 2.0 * coef.dot(rhs_red) + coef.dot(A_red * coef));
  }
  return std::sqrt(err2);
}

PatchTestResult run_patch_test(const Mesh& mesh, int k, const PolynomialFunction& p,
                               const StabilizationChoice& stab) {
  if (p.degree() > k)
    throw ValidationError("patch polynomial degree exceeds the scheme order");
  const DofMap dofmap = build_dof_map(mesh, k);
  PolynomialFunction poly = p;
  const ScalarField f = [poly](const Vec3& x) { return -poly.laplacian(x); };
  const LinearSystem sys = assemble(mesh, dofmap, k, stab, f, poly.as_field());
  const Vector solved = solve(sys);
  const Vector exact = global_dofs_of_function(mesh, dofmap, k, poly.as_field());
  PatchTestResult result;
  result.n_dofs = dofmap.total;
  const double scale = std::max(1.0, exact.cwiseAbs().maxCoeff());
  result.max_dof_error = (solved - exact).cwiseAbs().maxCoeff() / scale;
  return result;
}

std::vector<PolynomialFunction> monomial_polynomials(int dim, int max_degree) {
  std::vector<PolynomialFunction> out;
  for (const MultiIndex& mi : enumerate_multi_indices(dim, max_degree)) {
    PolynomialFunction p;
    p.dim = dim;
    p.terms = {{mi, 1.0}};
    out.push_back(std::move(p));
  }
  return out;
}

namespace {

double fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
  // least-squares slope of log(err) vs log(h) over the finest three points
  const int n = static_cast<int>(h.size());
  const int m = std::min(3, n);
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = n - m; i < n; ++i) {
    const double x = std::log(h[i]);
    const double y = std::log(std::max(err[i], 1e-300));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

} // namespace

ConvergenceReport run_convergence(const ManufacturedProblem& problem, MeshKind kind, int k,
                                  const std::vector<int>& resolutions,
                                  const ConvergenceOptions& options) {
  if (resolutions.size() < 3)
    throw ValidationError("convergence studies need at least three resolutions");
  ConvergenceReport report;
  report.problem = problem.name;
  report.kind = kind;
  report.k = k;
  report.stab = options.stab.kind;
  report.seed = options.seed;
  report.expected_energy_rate = std::min(static_cast<double>(k), problem.regularity);
  report.expected_l2_rate = report.expected_energy_rate + 1.0;
  report.energy_tolerance = options.energy_tolerance;
  report.l2_tolerance = options.l2_tolerance;

  for (int res : resolutions) {
    try {
      const auto t0 = std::chrono::steady_clock::now();
      const Mesh mesh = generate_mesh(kind, res, options.seed);
      const DofMap dofmap = build_dof_map(mesh, k);
      const std::vector<LocalElement> elements =
          build_all_elements(mesh, k, options.stab, options.threads);
      std::vector<Vector> loads(elements.size());
      for (int c = 0; c < mesh.n_cells(); ++c)
        loads[c] = options.load == LoadKind::Moment
                       ? build_load(mesh, c, elements[c].layout, problem.f)
                       : build_projected_load(mesh, c, elements[c], problem.f);
      const DirichletData bc = apply_dirichlet(mesh, dofmap, problem.g, k);
      const LinearSystem sys = assemble(mesh, dofmap, elements, loads, bc);
      SolveInfo info;
      const Vector dofs = solve(sys, &info, options.cg_tol);

      ConvergenceRow row;
      row.resolution = res;
      row.h = mesh.mesh_size();
      row.n_dofs = dofmap.total;
      row.energy_error = energy_error(mesh, dofmap, elements, dofs, problem.grad_u);
      row.l2_error = l2_error(mesh, dofmap, elements, dofs, problem.u);
      row.cg_iterations = info.iterations;
      const auto t1 = std::chrono::steady_clock::now();
      const long long ms =
          std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count();
      row.wall_ms = options.record_timing ? ms : 0;
      log_message(LogLevel::Info,
                  "converge " + problem.name + " " + to_string(kind) + " k=" + std::to_string(k) +
                      " res=" + std::to_string(res) + ": energy " +
                      std::to_string(row.energy_error) + ", l2 " + std::to_string(row.l2_error) +
                      " (" + std::to_string(ms) + " ms)");
      report.rows.push_back(row);
    } catch (const std::exception& e) {
      report.error = "resolution " + std::to_string(res) + ": " + e.what();
      report.complete = false;
      report.pass = false;
      return report;
    }
  }
  report.complete = true;

  std::vector<double> hs, es, ls;
  for (const ConvergenceRow& row : report.rows) {
    hs.push_back(row.h);
    es.push_back(row.energy_error);
    ls.push_back(row.l2_error);
  }
  report.energy_rate = fit_rate(hs, es);
  report.l2_rate = fit_rate(hs, ls);
  report.pass = std::abs(report.energy_rate - report.expected_energy_rate) <=
                    report.energy_tolerance &&
                std::abs(report.l2_rate - report.expected_l2_rate) <= report.l2_tolerance;
  return report;
}

void write_convergence_csv(const ConvergenceReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << "h,dofs,energy_error,l2_error,cg_iters,wall_ms\n";
  char buf[160];
  for (const ConvergenceRow& row : report.rows) {
    std::snprintf(buf, sizeof buf, "%.12e,%d,%.12e,%.12e,%d,%lld\n", row.h, row.n_dofs,
                  row.energy_error, row.l2_error, row.cg_iterations, row.wall_ms);
    out << buf;
  }
}

void write_convergence_json(const ConvergenceReport& report, const std::string& path) {
  nlohmann::json j;
  j["problem"] = report.problem;
  j["kind"] = to_string(report.kind);
  j["k"] = report.k;
  j["stabilization"] = to_string(report.stab);
  j["seed"] = report.seed;
  j["complete"] = report.complete;
  if (!report.error.empty()) j["error"] = report.error;
  nlohmann::json rows = nlohmann::json::array();
  for (const ConvergenceRow& row : report.rows)
    rows.push_back({{"resolution", row.resolution},
                    {"h", row.h},
                    {"dofs", row.n_dofs},
                    {"energy_error", row.energy_error},
                    {"l2_error", row.l2_error},
                    {"cg_iters", row.cg_iterations},
                    {"wall_ms", row.wall_ms}});
  j["rows"] = std::move(rows);
  if (report.complete) {
    j["energy_rate"] = report.energy_rate;
    j["l2_rate"] = report.l2_rate;
    j["expected_energy_rate"] = report.expected_energy_rate;
    j["expected_l2_rate"] = report.expected_l2_rate;
    j["energy_tolerance"] = report.energy_tolerance;
    j["l2_tolerance"] = report.l2_tolerance;
    j["pass"] = report.pass;
  }
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

} // namespace ncvem
