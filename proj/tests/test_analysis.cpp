#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncvem/analysis.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

using namespace ncvem;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

} // namespace

TEST_CASE("manufactured problems are internally consistent") {
  for (const std::string& name : problem_names()) {
    const ManufacturedProblem p = problem_by_name(name);
    CHECK(check_problem_consistency(p) <= 1e-10);
  }
  CHECK_THROWS_AS(problem_by_name("nope"), ValidationError);
}

TEST_CASE("polynomial functions differentiate exactly") {
  PolynomialFunction p;
  p.dim = 2;
  p.terms = {{{{3, 1, 0}, 2}, 1.5}, {{{0, 2, 0}, 2}, -2.0}, {{{1, 0, 0}, 2}, 0.5}};
  CHECK(p.degree() == 4);
  const Vec3 x(0.7, -0.3, 0.0);
  const double h = 1e-6;
  for (int a = 0; a < 2; ++a) {
    Vec3 xp = x, xm = x;
    xp[a] += h;
    xm[a] -= h;
    CHECK(p.gradient(x)[a] ==
          doctest::Approx((p.value(xp) - p.value(xm)) / (2 * h)).epsilon(1e-7));
  }
  // laplacian of 1.5 x^3 y - 2 y^2 + 0.5 x: 9xy - 4
  CHECK(p.laplacian(x) == doctest::Approx(9.0 * 0.7 * -0.3 - 4.0).epsilon(1e-13));
}

TEST_CASE("errors vanish for the zero solution and reproduce polynomials") {
  const Mesh mesh = generate_mesh(MeshKind::QuadStructured, 3);
  const int k = 2;
  const DofMap dofmap = build_dof_map(mesh, k);
  const std::vector<LocalElement> elements =
      build_all_elements(mesh, k, StabilizationChoice::vem_identity());
  const Vector zero = Vector::Zero(dofmap.total);
  CHECK(energy_error(mesh, dofmap, elements, zero,
                     [](const Vec3&) { return Vec3::Zero().eval(); }) == 0.0);
  CHECK(l2_error(mesh, dofmap, elements, zero, [](const Vec3&) { return 0.0; }) == 0.0);

  // interpolated polynomial: both errors at rounding level
  PolynomialFunction p;
  p.dim = 2;
  p.terms = {{{{2, 0, 0}, 2}, 1.0}, {{{0, 1, 0}, 2}, -0.5}};
  const Vector dofs = global_dofs_of_function(mesh, dofmap, k, p.as_field());
  const PolynomialFunction pc = p;
  CHECK(energy_error(mesh, dofmap, elements, dofs,
                     [pc](const Vec3& x) { return pc.gradient(x); }) <= 1e-10);
  CHECK(l2_error(mesh, dofmap, elements, dofs, p.as_field()) <= 1e-10);
}

TEST_CASE("patch tests on canonical cases") {
  SUBCASE("2x + 3y - 1 at k=1 on distorted quads") {
    const Mesh mesh = generate_mesh(MeshKind::QuadDistorted, 4, 3);
    PolynomialFunction p;
    p.dim = 2;
    p.terms = {{{{1, 0, 0}, 2}, 2.0}, {{{0, 1, 0}, 2}, 3.0}, {{{0, 0, 0}, 2}, -1.0}};
    CHECK(run_patch_test(mesh, 1, p).max_dof_error <= 1e-10);
  }
  SUBCASE("constants are pinned by the boundary moments at any k") {
    const Mesh mesh = generate_mesh(MeshKind::Voronoi2d, 3, 11);
    PolynomialFunction c;
    c.dim = 2;
    c.terms = {{{{0, 0, 0}, 2}, 4.2}};
    for (int k = 1; k <= 3; ++k) CHECK(run_patch_test(mesh, k, c).max_dof_error <= 1e-12);
  }
  SUBCASE("x^2 - y^2 at k=2 on hexagons") {
    const Mesh mesh = generate_mesh(MeshKind::HexagonDominant, 3);
    PolynomialFunction p;
    p.dim = 2;
    p.terms = {{{{2, 0, 0}, 2}, 1.0}, {{{0, 2, 0}, 2}, -1.0}};
    CHECK(run_patch_test(mesh, 2, p).max_dof_error <= 1e-9);
  }
  SUBCASE("degree above k is rejected") {
    const Mesh mesh = generate_mesh(MeshKind::QuadStructured, 2);
    PolynomialFunction p;
    p.dim = 2;
    p.terms = {{{{2, 0, 0}, 2}, 1.0}};
    CHECK_THROWS_AS(run_patch_test(mesh, 1, p), ValidationError);
  }
}

TEST_CASE("patch exactness across the structured families") {
  for (MeshKind kind : {MeshKind::TriStructured, MeshKind::QuadStructured}) {
    const Mesh mesh = generate_mesh(kind, 3);
    for (int k = 1; k <= 4; ++k) {
      double worst = 0.0;
      for (const PolynomialFunction& p : monomial_polynomials(2, k))
        worst = std::max(worst, run_patch_test(mesh, k, p).max_dof_error);
      CHECK(worst <= 1e-9);
    }
  }
}

TEST_CASE("halving h scales the errors at the expected orders") {
  ConvergenceOptions opts;
  opts.stab = StabilizationChoice::mfd_trace();
  opts.threads = 2;
  SUBCASE("energy at k=1 halves") {
    const ConvergenceReport rep =
        run_convergence(make_sin2d(), MeshKind::TriStructured, 1, {4, 8, 16}, opts);
    const double ratio = rep.rows[1].energy_error / rep.rows[2].energy_error;
    CHECK(ratio / 2.0 >= 0.85);
    CHECK(ratio / 2.0 <= 1.15);
  }
  SUBCASE("L2 at k=2 is cut by about 8") {
    const ConvergenceReport rep =
        run_convergence(make_sin2d(), MeshKind::TriStructured, 2, {4, 8, 16}, opts);
    const double ratio = rep.rows[1].l2_error / rep.rows[2].l2_error;
    CHECK(ratio / 8.0 >= 0.8);
    CHECK(ratio / 8.0 <= 1.2);
  }
}

TEST_CASE("convergence report: monotone errors, fitted rates, report files") {
  ConvergenceOptions opts;
  opts.stab = StabilizationChoice::mfd_trace();
  opts.threads = 2;
  const ConvergenceReport rep =
      run_convergence(make_sin2d(), MeshKind::TriStructured, 1, {4, 8, 16, 32}, opts);
  REQUIRE(rep.complete);
  REQUIRE(rep.rows.size() == 4);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) {
    CHECK(rep.rows[i].h < rep.rows[i - 1].h);
    CHECK(rep.rows[i].energy_error < rep.rows[i - 1].energy_error);
    CHECK(rep.rows[i].l2_error < rep.rows[i - 1].l2_error);
  }
  CHECK(std::abs(rep.energy_rate - 1.0) <= 0.15);
  CHECK(std::abs(rep.l2_rate - 2.0) <= 0.2);
  CHECK(rep.pass);

  write_convergence_csv(rep, "report_a.csv");
  write_convergence_json(rep, "report_a.json");
  write_convergence_csv(rep, "report_b.csv");
  write_convergence_json(rep, "report_b.json");
  CHECK(slurp("report_a.csv") == slurp("report_b.csv"));
  CHECK(slurp("report_a.json") == slurp("report_b.json"));
  const std::string csv = slurp("report_a.csv");
  CHECK(csv.rfind("h,dofs,energy_error,l2_error,cg_iters,wall_ms\n", 0) == 0);
  // timing is zeroed unless requested, keeping the files reproducible
  CHECK(csv.find(",0\n") != std::string::npos);
  for (const std::string f : {"report_a.csv", "report_a.json", "report_b.csv", "report_b.json"})
    std::remove(f.c_str());
}

TEST_CASE("convergence aborts with a partial report when a resolution fails") {
  ConvergenceOptions opts;
  const ConvergenceReport rep =
      run_convergence(make_sin2d(), MeshKind::TriStructured, 1, {4, 8, 0}, opts);
  CHECK_FALSE(rep.complete);
  CHECK_FALSE(rep.pass);
  CHECK(rep.rows.size() == 2);
  CHECK(!rep.error.empty());
}

TEST_CASE("stabilization switch moves the fitted rates by less than 0.1") {
  ConvergenceOptions vem;
  vem.threads = 2;
  ConvergenceOptions mfd = vem;
  mfd.stab = StabilizationChoice::mfd_trace();
  const ConvergenceReport a =
      run_convergence(make_sin2d(), MeshKind::TriStructured, 1, {4, 8, 16, 32}, vem);
  const ConvergenceReport b =
      run_convergence(make_sin2d(), MeshKind::TriStructured, 1, {4, 8, 16, 32}, mfd);
  CHECK(std::abs(a.energy_rate - b.energy_rate) < 0.1);
  CHECK(std::abs(a.l2_rate - b.l2_rate) < 0.1);
}

TEST_CASE("energy error stays within a bounded factor of the best approximation") {
  ConvergenceOptions opts;
  opts.stab = StabilizationChoice::mfd_trace();
  opts.threads = 2;
  const ManufacturedProblem problem = make_sin2d();
  const ConvergenceReport rep =
      run_convergence(problem, MeshKind::TriStructured, 2, {4, 8, 16}, opts);
  double lo = 1e300, hi = 0.0;
  for (const ConvergenceRow& row : rep.rows) {
    const Mesh mesh = generate_mesh(MeshKind::TriStructured, row.resolution, opts.seed);
    const double best = best_energy_approximation_error(mesh, 2, problem.grad_u);
    const double ratio = row.energy_error / best;
    CHECK(ratio >= 1.0);  // best approximation is a lower bound
    CHECK(ratio < 100.0);
    lo = std::min(lo, ratio);
    hi = std::max(hi, ratio);
  }
  CHECK(hi / lo <= 3.0);
}

TEST_CASE("corner problem is rate-limited (informational)") {
  ConvergenceOptions opts;
  opts.stab = StabilizationChoice::mfd_trace();
  opts.threads = 2;
  opts.energy_tolerance = 0.25;
  const ConvergenceReport rep =
      run_convergence(make_corner2d(), MeshKind::TriStructured, 2, {4, 8, 16}, opts);
  REQUIRE(rep.complete);
  CHECK(rep.expected_energy_rate == doctest::Approx(2.0 / 3.0));
  // far below the smooth-data order 2
  CHECK(rep.energy_rate < 1.0);
  CHECK(rep.energy_rate > 0.3);
}
