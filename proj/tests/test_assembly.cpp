#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncvem/analysis.hpp"
#include "ncvem/assembly.hpp"

#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>

using namespace ncvem;

namespace {

Mesh unit_square_mesh() {
  return Mesh(2, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}},
              {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {{{0, 1, 2, 3}, {1, 1, 1, 1}}});
}

// two unit squares sharing one vertical edge
Mesh two_quad_mesh() {
  return Mesh(2,
              {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {2, 1, 0}, {1, 1, 0}, {0, 1, 0}},
              {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 0}, {1, 4}},
              {{{0, 6, 4, 5}, {1, 1, 1, 1}}, {{1, 2, 3, 6}, {1, 1, 1, -1}}});
}

} // namespace

TEST_CASE("global dof counts") {
  const Mesh quad = generate_mesh(MeshKind::QuadStructured, 2);
  CHECK(build_dof_map(quad, 1).total == 12);
  CHECK(build_dof_map(quad, 2).total == 12 * 2 + 4 * 1);
  const Mesh cube = generate_mesh(MeshKind::CubeStructured, 2);
  CHECK(build_dof_map(cube, 1).total == 36);
  CHECK(build_dof_map(cube, 2).total == 36 * 3 + 8 * 1);
  CHECK_THROWS_AS(build_dof_map(quad, 0), ValidationError);
}

TEST_CASE("local dofs map to owned global slots") {
  const Mesh mesh = two_quad_mesh();
  const DofMap dofmap = build_dof_map(mesh, 2);
  // the shared edge (id 6) maps to the same globals from both cells
  for (int which = 0; which < 2; ++which) {
    const CellFaces& cf = mesh.cell(which);
    for (std::size_t lf = 0; lf < cf.faces.size(); ++lf) {
      if (cf.faces[lf] != 6) continue;
      for (int t = 0; t < dofmap.face_dofs; ++t)
        CHECK(dofmap.global_index(mesh, which, static_cast<int>(lf) * dofmap.face_dofs + t) ==
              dofmap.face_offset(6) + t);
    }
  }
  // internal dofs are per-cell
  CHECK(dofmap.cell_offset(0) != dofmap.cell_offset(1));
}

TEST_CASE("every global dof is hit by its incident cells exactly") {
  const Mesh mesh = generate_mesh(MeshKind::Voronoi2d, 3, 15);
  const DofMap dofmap = build_dof_map(mesh, 3);
  std::vector<int> hits(dofmap.total, 0);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const DofLayout layout = build_dof_layout(mesh, c, 3);
    for (int i = 0; i < layout.total; ++i) {
      const int g = dofmap.global_index(mesh, c, i);
      REQUIRE(g >= 0);
      REQUIRE(g < dofmap.total);
      ++hits[g];
    }
  }
  for (int f = 0; f < mesh.n_faces(); ++f)
    for (int t = 0; t < dofmap.face_dofs; ++t)
      CHECK(hits[dofmap.face_offset(f) + t] == (mesh.is_boundary_face(f) ? 1 : 2));
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int t = 0; t < dofmap.cell_dofs; ++t) CHECK(hits[dofmap.cell_offset(c) + t] == 1);
}

TEST_CASE("Dirichlet data as boundary face moments") {
  const Mesh mesh = generate_mesh(MeshKind::QuadStructured, 2);
  SUBCASE("g = 0 pins every boundary dof to zero") {
    const DofMap dofmap = build_dof_map(mesh, 2);
    const DirichletData bc = apply_dirichlet(mesh, dofmap, [](const Vec3&) { return 0.0; }, 2);
    int boundary_faces = 0;
    for (int f = 0; f < mesh.n_faces(); ++f)
      if (mesh.is_boundary_face(f)) ++boundary_faces;
    CHECK(bc.count == boundary_faces * dofmap.face_dofs);
    for (int i = 0; i < dofmap.total; ++i)
      if (bc.constrained[i]) CHECK(bc.values[i] == 0.0);
  }
  SUBCASE("g = 1 matches the dofs of the constant function") {
    const DofMap dofmap = build_dof_map(mesh, 3);
    const DirichletData bc = apply_dirichlet(mesh, dofmap, [](const Vec3&) { return 1.0; }, 3);
    const Vector exact =
        global_dofs_of_function(mesh, dofmap, 3, [](const Vec3&) { return 1.0; });
    for (int f = 0; f < mesh.n_faces(); ++f) {
      if (!mesh.is_boundary_face(f)) continue;
      CHECK(bc.values[dofmap.face_offset(f)] == doctest::Approx(1.0).epsilon(1e-13));
      for (int t = 0; t < dofmap.face_dofs; ++t)
        CHECK(bc.values[dofmap.face_offset(f) + t] ==
              doctest::Approx(exact[dofmap.face_offset(f) + t]).epsilon(1e-12));
    }
  }
  SUBCASE("g = x + y against an oversampled oracle") {
    const DofMap dofmap = build_dof_map(mesh, 2);
    const auto g = [](const Vec3& x) { return x.x() + x.y(); };
    const DirichletData bc = apply_dirichlet(mesh, dofmap, g, 2);
    const DirichletData fine = apply_dirichlet(mesh, dofmap, g, 2, 40);
    for (int i = 0; i < dofmap.total; ++i)
      if (bc.constrained[i]) CHECK(bc.values[i] == doctest::Approx(fine.values[i]).epsilon(1e-12));
  }
}

TEST_CASE("single-cell assembly equals the local matrix") {
  const Mesh mesh = unit_square_mesh();
  const DofMap dofmap = build_dof_map(mesh, 2);
  const std::vector<LocalElement> elements =
      build_all_elements(mesh, 2, StabilizationChoice::vem_identity());
  std::vector<Vector> loads = {Vector::Zero(elements[0].layout.total)};
  const DirichletData bc = apply_dirichlet(mesh, dofmap, [](const Vec3&) { return 0.0; }, 2);
  const LinearSystem sys = assemble(mesh, dofmap, elements, loads, bc);
  const Matrix dense(sys.A);
  CHECK((dense - elements[0].M).norm() <= 1e-14 * elements[0].M.norm());
}

TEST_CASE("shared-edge rows accumulate both cells") {
  const Mesh mesh = two_quad_mesh();
  const DofMap dofmap = build_dof_map(mesh, 1);
  const std::vector<LocalElement> elements =
      build_all_elements(mesh, 1, StabilizationChoice::vem_identity());
  std::vector<Vector> loads(2, Vector::Zero(4));
  const DirichletData bc = apply_dirichlet(mesh, dofmap, [](const Vec3&) { return 0.0; }, 1);
  const LinearSystem sys = assemble(mesh, dofmap, elements, loads, bc);
  const Matrix dense(sys.A);
  // diagonal entry of the shared edge dof = sum of the two local diagonals
  double expected = 0.0;
  for (int which = 0; which < 2; ++which) {
    const CellFaces& cf = mesh.cell(which);
    for (std::size_t lf = 0; lf < cf.faces.size(); ++lf)
      if (cf.faces[lf] == 6) expected += elements[which].M(lf, lf);
  }
  CHECK(dense(dofmap.face_offset(6), dofmap.face_offset(6)) ==
        doctest::Approx(expected).epsilon(1e-14));
  // global symmetry
  CHECK((dense - dense.transpose()).norm() <= 1e-13 * dense.norm());
}

TEST_CASE("trivial data produce the zero solution") {
  const Mesh mesh = generate_mesh(MeshKind::QuadStructured, 4);
  const DofMap dofmap = build_dof_map(mesh, 1);
  const LinearSystem sys =
      assemble(mesh, dofmap, 1, StabilizationChoice::vem_identity(),
               [](const Vec3&) { return 0.0; }, [](const Vec3&) { return 0.0; });
  const Vector x = solve(sys);
  CHECK(x.cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("identity system returns the right-hand side") {
  LinearSystem sys;
  const int n = 7;
  sys.A.resize(n, n);
  sys.A.setIdentity();
  sys.b = Vector::LinSpaced(n, 1.0, 7.0);
  sys.bc.constrained.assign(n, 0);
  sys.bc.values.assign(n, 0.0);
  sys.bc.constrained[n - 1] = 1;
  sys.bc.values[n - 1] = -3.0;
  sys.bc.count = 1;
  const Vector x = solve(sys);
  for (int i = 0; i < n - 1; ++i) CHECK(x[i] == doctest::Approx(sys.b[i]).epsilon(1e-14));
  CHECK(x[n - 1] == doctest::Approx(-3.0).epsilon(1e-15));
}

TEST_CASE("a system without constraints is rejected as singular") {
  const Mesh mesh = generate_mesh(MeshKind::QuadStructured, 2);
  const DofMap dofmap = build_dof_map(mesh, 1);
  const std::vector<LocalElement> elements =
      build_all_elements(mesh, 1, StabilizationChoice::vem_identity());
  std::vector<Vector> loads(elements.size(), Vector::Zero(4));
  DirichletData none;
  none.constrained.assign(dofmap.total, 0);
  none.values.assign(dofmap.total, 0.0);
  const LinearSystem sys = assemble(mesh, dofmap, elements, loads, none);
  CHECK_THROWS_AS(solve(sys), NumericalError);
}

TEST_CASE("moment continuity across shared faces") {
  const Mesh mesh = two_quad_mesh();
  const int k = 2;
  const auto f = [](const Vec3& x) { return std::sin(x.x() + 0.3 * x.y()); };
  // both incident cells compute identical moment dofs on the shared face
  Vector dofs0, dofs1;
  for (int which = 0; which < 2; ++which) {
    const DofLayout layout = build_dof_layout(mesh, which, k);
    const Vector local = compute_dofs_of_function(mesh, which, layout, f);
    const CellFaces& cf = mesh.cell(which);
    for (std::size_t lf = 0; lf < cf.faces.size(); ++lf)
      if (cf.faces[lf] == 6)
        (which == 0 ? dofs0 : dofs1) =
            local.segment(layout.face_block(static_cast<int>(lf)), layout.face_dofs);
  }
  REQUIRE(dofs0.size() == k);
  CHECK((dofs0 - dofs1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solution does not depend on the cell ordering") {
  const Mesh mesh = generate_mesh(MeshKind::QuadDistorted, 3, 6);
  std::vector<int> perm(mesh.n_cells());
  for (int i = 0; i < mesh.n_cells(); ++i) perm[i] = mesh.n_cells() - 1 - i;
  const Mesh permuted = mesh.permuted_cells(perm);

  const int k = 2;
  const ManufacturedProblem problem = make_sin2d();
  const DofMap map_a = build_dof_map(mesh, k);
  const DofMap map_b = build_dof_map(permuted, k);
  const Vector xa = solve(assemble(mesh, map_a, k, StabilizationChoice::vem_identity(),
                                   problem.f, problem.g));
  const Vector xb = solve(assemble(permuted, map_b, k, StabilizationChoice::vem_identity(),
                                   problem.f, problem.g));
  const double scale = xa.cwiseAbs().maxCoeff();
  // face dofs share global slots; cell dofs move with the permutation
  for (int f = 0; f < mesh.n_faces(); ++f)
    for (int t = 0; t < map_a.face_dofs; ++t)
      CHECK(std::abs(xa[map_a.face_offset(f) + t] - xb[map_b.face_offset(f) + t]) <=
            1e-12 * scale);
  for (int c = 0; c < mesh.n_cells(); ++c)
    CHECK(std::abs(xa[map_a.cell_offset(perm[c])] - xb[map_b.cell_offset(c)]) <= 1e-12 * scale);
}

TEST_CASE("conjugate gradients path solves a patch problem exactly") {
  // large enough to bypass the dense fallback
  const Mesh mesh = generate_mesh(MeshKind::TriStructured, 40);
  const DofMap dofmap = build_dof_map(mesh, 1);
  REQUIRE(dofmap.total > 2000);
  PolynomialFunction p;
  p.dim = 2;
  p.terms = {{{{1, 0, 0}, 2}, 2.0}, {{{0, 1, 0}, 2}, 3.0}, {{{0, 0, 0}, 2}, -1.0}};
  const LinearSystem sys =
      assemble(mesh, dofmap, 1, StabilizationChoice::vem_identity(),
               [&](const Vec3& x) { return -p.laplacian(x); }, p.as_field());
  SolveInfo info;
  const Vector x = solve(sys, &info);
  CHECK_FALSE(info.used_dense);
  CHECK(info.iterations > 0);
  CHECK(info.residual <= 1e-12);
  CHECK(info.residual_history.size() == static_cast<std::size_t>(info.iterations) + 1);
  const Vector exact = global_dofs_of_function(mesh, dofmap, 1, p.as_field());
  CHECK((x - exact).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, exact.cwiseAbs().maxCoeff()));
}

TEST_CASE("threaded element builds reproduce the serial assembly") {
  const Mesh mesh = generate_mesh(MeshKind::Voronoi2d, 4, 21);
  const DofMap dofmap = build_dof_map(mesh, 2);
  const ManufacturedProblem problem = make_sin2d();
  const Vector x1 = solve(assemble(mesh, dofmap, 2, StabilizationChoice::mfd_trace(), problem.f,
                                   problem.g, 1));
  const Vector x4 = solve(assemble(mesh, dofmap, 2, StabilizationChoice::mfd_trace(), problem.f,
                                   problem.g, 4));
  CHECK((x1 - x4).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("solution JSON carries dofs and projector coefficients") {
  const Mesh mesh = unit_square_mesh();
  const DofMap dofmap = build_dof_map(mesh, 1);
  const std::vector<LocalElement> elements =
      build_all_elements(mesh, 1, StabilizationChoice::vem_identity());
  Vector dofs = Vector::LinSpaced(dofmap.total, 0.0, 1.0);
  write_solution_json("sol_test.json", mesh, dofmap, dofs, elements);
  std::ifstream in("sol_test.json");
  nlohmann::json j;
  in >> j;
  CHECK(j.at("dofs").size() == static_cast<std::size_t>(dofmap.total));
  CHECK(j.at("cells")[0].at("projector_coefficients").size() == 3);
  CHECK(j.at("dofmap").at("total") == dofmap.total);
  std::remove("sol_test.json");
}
