#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ncvem/polybasis.hpp"

#include <cmath>
#include <random>

using namespace ncvem;

namespace {

Mesh unit_square_mesh() {
  return Mesh(2, {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}},
              {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {{{0, 1, 2, 3}, {1, 1, 1, 1}}});
}

Mesh regular_hexagon_mesh() {
  std::vector<Vec3> v;
  std::vector<std::vector<int>> faces;
  for (int i = 0; i < 6; ++i) {
    v.push_back({std::cos(M_PI * i / 3.0), std::sin(M_PI * i / 3.0), 0.0});
    faces.push_back({i, (i + 1) % 6});
  }
  return Mesh(2, v, faces, {{{0, 1, 2, 3, 4, 5}, {1, 1, 1, 1, 1, 1}}});
}

Mesh reference_triangle_mesh() {
  return Mesh(2, {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}, {{0, 1}, {1, 2}, {2, 0}},
              {{{0, 1, 2}, {1, 1, 1}}});
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

} // namespace

TEST_CASE("multi-index enumeration is graded-lex with binomial cardinality") {
  const auto idx21 = enumerate_multi_indices(2, 1);
  REQUIRE(idx21.size() == 3);
  CHECK(idx21[0].s == std::array<int, 3>{0, 0, 0});
  CHECK(idx21[1].s == std::array<int, 3>{1, 0, 0});
  CHECK(idx21[2].s == std::array<int, 3>{0, 1, 0});

  CHECK(enumerate_multi_indices(2, 2).size() == 6);
  CHECK(enumerate_multi_indices(3, 2).size() == 10);
  CHECK(polynomial_space_dim(2, 4) == 15);
  CHECK(polynomial_space_dim(3, -1) == 0);

  // hierarchical: lower-degree enumerations are prefixes
  const auto big = enumerate_multi_indices(3, 4);
  const auto small = enumerate_multi_indices(3, 2);
  for (std::size_t i = 0; i < small.size(); ++i) CHECK(big[i] == small[i]);
  for (std::size_t i = 1; i < big.size(); ++i)
    CHECK(big[i].degree() >= big[i - 1].degree());
}

TEST_CASE("scaled monomial evaluation") {
  const Mesh mesh = unit_square_mesh();
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, 0, 2);
  const Vec3 x(1.0, 0.5, 0.0);
  CHECK(basis.value(0, x) == doctest::Approx(1.0).epsilon(1e-15));
  // member with s = (1,0): ((x - 0.5)/sqrt(2))
  CHECK(basis.value(1, x) == doctest::Approx(0.35355339059327373).epsilon(1e-14));
  // the constant member is 1 everywhere, every member is 0/1-normalized at the center
  CHECK(basis.value(0, basis.center()) == doctest::Approx(1.0));
  for (int i = 1; i < basis.size(); ++i)
    CHECK(basis.value(i, basis.center()) == doctest::Approx(0.0));
  // laplacian of ((x-c)/h)^2 is 2/h^2
  const int ix2 = 3;  // graded-lex: 1, x, y, x^2, xy, y^2
  CHECK(basis.index(ix2).s == std::array<int, 3>{2, 0, 0});
  CHECK(basis.laplacian(ix2, x) == doctest::Approx(2.0 / 2.0).epsilon(1e-14));  // h^2 = 2
}

TEST_CASE("gradients match central finite differences") {
  const Mesh mesh = generate_mesh(MeshKind::Voronoi2d, 2, 5);
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, 0, 4);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> unif(-0.4, 0.4);
  const double step = 1e-6 * basis.scale();
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 x = basis.center() + Vec3(unif(rng), unif(rng), 0.0) * basis.scale();
    for (int i = 0; i < basis.size(); ++i) {
      const Vec3 g = basis.gradient(i, x);
      for (int a = 0; a < 2; ++a) {
        Vec3 xp = x, xm = x;
        xp[a] += step;
        xm[a] -= step;
        const double fd = (basis.value(i, xp) - basis.value(i, xm)) / (2.0 * step);
        CHECK(g[a] == doctest::Approx(fd).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("laplacian expansion matches the analytic laplacian") {
  const Mesh mesh = generate_mesh(MeshKind::TetStructured, 1, 0);
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, 0, 3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int i = 0; i < basis.size(); ++i) {
    const auto coeffs = basis.laplacian_coefficients(i);
    for (int trial = 0; trial < 5; ++trial) {
      const Vec3 x(unif(rng), unif(rng), unif(rng));
      double expanded = 0.0;
      for (const auto& [j, c] : coeffs) expanded += c * basis.value(j, x);
      CHECK(expanded == doctest::Approx(basis.laplacian(i, x)).epsilon(1e-13));
    }
  }
}

TEST_CASE("edge rule: two Gauss points integrate cubics") {
  const QuadratureRule rule = edge_rule(Vec3(0, 0, 0), Vec3(1, 0, 0), 3);
  CHECK(rule.points.size() == 2);
  CHECK(rule.weight_sum() == doctest::Approx(1.0).epsilon(1e-15));
  const double ix3 = rule.integrate([](const Vec3& x) { return x.x() * x.x() * x.x(); });
  CHECK(ix3 == doctest::Approx(0.25).epsilon(1e-14));
}

TEST_CASE("cell rules integrate monomials exactly on reference shapes") {
  const Mesh square = unit_square_mesh();
  const Mesh tri = reference_triangle_mesh();
  const Mesh cube = generate_mesh(MeshKind::CubeStructured, 1);
  const Mesh tet = generate_mesh(MeshKind::TetStructured, 1);
  for (int degree = 0; degree <= 8; ++degree) {
    const QuadratureRule sq = cell_rule(square, 0, degree);
    CHECK(std::abs(sq.weight_sum() - 1.0) <= 1e-13);
    const QuadratureRule tr = cell_rule(tri, 0, degree);
    for (const MultiIndex& mi : enumerate_multi_indices(2, degree)) {
      const auto f = [&](const Vec3& x) {
        double r = 1.0;
        for (int e = 0; e < mi.s[0]; ++e) r *= x.x();
        for (int e = 0; e < mi.s[1]; ++e) r *= x.y();
        return r;
      };
      const double exact_sq = 1.0 / ((mi.s[0] + 1.0) * (mi.s[1] + 1.0));
      CHECK(std::abs(sq.integrate(f) - exact_sq) <= 1e-12 * std::abs(exact_sq));
      const double exact_tr =
          factorial(mi.s[0]) * factorial(mi.s[1]) / factorial(mi.s[0] + mi.s[1] + 2);
      CHECK(std::abs(tr.integrate(f) - exact_tr) <= 1e-12 * std::abs(exact_tr));
    }
  }
  for (int degree = 0; degree <= 6; ++degree) {
    // tet 0 of the Kuhn split of the unit cube has volume 1/6
    const QuadratureRule cu = cell_rule(cube, 0, degree);
    const QuadratureRule te = cell_rule(tet, 0, degree);
    CHECK(std::abs(cu.weight_sum() - 1.0) <= 1e-13);
    CHECK(std::abs(te.weight_sum() - 1.0 / 6.0) <= 1e-14);
    for (const MultiIndex& mi : enumerate_multi_indices(3, degree)) {
      const auto f = [&](const Vec3& x) {
        double r = 1.0;
        for (int e = 0; e < mi.s[0]; ++e) r *= x.x();
        for (int e = 0; e < mi.s[1]; ++e) r *= x.y();
        for (int e = 0; e < mi.s[2]; ++e) r *= x.z();
        return r;
      };
      const double exact =
          1.0 / ((mi.s[0] + 1.0) * (mi.s[1] + 1.0) * (mi.s[2] + 1.0));
      CHECK(std::abs(cu.integrate(f) - exact) <= 1e-12 * std::abs(exact));
    }
  }
}

TEST_CASE("hexagon fan rule reproduces the analytic area") {
  const Mesh hexagon = regular_hexagon_mesh();
  const QuadratureRule rule = cell_rule(hexagon, 0, 4);
  CHECK(rule.weight_sum() == doctest::Approx(2.598076211353316).epsilon(1e-14));
  // odd moments about the center vanish by symmetry
  CHECK(std::abs(rule.integrate([](const Vec3& x) { return x.x(); })) <= 1e-13);
  CHECK(std::abs(rule.integrate([](const Vec3& x) { return x.y(); })) <= 1e-13);
}

TEST_CASE("3D face rule integrates in-plane monomials") {
  const Mesh cube = generate_mesh(MeshKind::CubeStructured, 1);
  // find the face in the z = 0 plane
  int bottom = -1;
  for (int f = 0; f < cube.n_faces(); ++f)
    if (std::abs(cube.face_geometry(f).centroid.z()) < 1e-14 &&
        std::abs(cube.face_geometry(f).normal.z()) > 0.9)
      bottom = f;
  REQUIRE(bottom >= 0);
  const QuadratureRule rule = face_rule(cube, bottom, 4);
  CHECK(rule.weight_sum() == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(rule.integrate([](const Vec3& x) { return x.x() * x.x() * x.y(); }) ==
        doctest::Approx(1.0 / 6.0).epsilon(1e-13));
}

TEST_CASE("non-star cell is rejected by the fan quadrature") {
  // boomerang quad: centroid falls outside the visibility kernel
  const Mesh boomerang = Mesh(2, {{0, 0, 0}, {1, 0, 0}, {0.08, 0.08, 0}, {0, 1, 0}},
                              {{0, 1}, {1, 2}, {2, 3}, {3, 0}}, {{{0, 1, 2, 3}, {1, 1, 1, 1}}});
  CHECK_THROWS_AS(cell_rule(boomerang, 0, 2), NumericalError);
}

TEST_CASE("face projection reproduces polynomials and frozen coefficients") {
  const Mesh mesh = unit_square_mesh();
  const FaceMonomialBasis basis(mesh, 0, 2);
  // projecting a basis member returns the matching unit vector
  for (int j = 0; j < basis.size(); ++j) {
    const Vector c = l2_project_onto_face_polys(
        [&](const Vec3& x) { return basis.value(j, x); }, mesh, 0, 2);
    for (int i = 0; i < basis.size(); ++i)
      CHECK(c[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  }
  // constants project to a single coefficient on the constant member
  const Vector c5 = l2_project_onto_face_polys([](const Vec3&) { return 5.0; }, mesh, 0, 0);
  REQUIRE(c5.size() == 1);
  CHECK(c5[0] == doctest::Approx(5.0).epsilon(1e-14));

  // sin(pi x) on the bottom edge at degree 1: analytically (2/pi, 0) in the
  // scaled basis {1, (x - 1/2)}
  const auto f = [](const Vec3& x) { return std::sin(M_PI * x.x()); };
  const Vector c = l2_project_onto_face_polys(f, mesh, 0, 1);
  CHECK(c[0] == doctest::Approx(0.6366197723675814).epsilon(1e-12));
  CHECK(std::abs(c[1]) <= 1e-12);
  // and the 10x-oversampled rule agrees
  const Vector c_fine = l2_project_onto_face_polys(f, mesh, 0, 1, 40);
  CHECK((c - c_fine).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("cell projection reproduces constants and basis members") {
  const Mesh mesh = generate_mesh(MeshKind::QuadDistorted, 2, 4);
  const Vector c1 = l2_project_onto_cell_polys([](const Vec3&) { return 1.0; }, mesh, 1, 2);
  CHECK(c1[0] == doctest::Approx(1.0).epsilon(1e-13));
  for (int i = 1; i < c1.size(); ++i) CHECK(std::abs(c1[i]) <= 1e-13);
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, 1, 2);
  for (int j = 0; j < basis.size(); ++j) {
    const Vector c = l2_project_onto_cell_polys(
        [&](const Vec3& x) { return basis.value(j, x); }, mesh, 1, 2);
    for (int i = 0; i < basis.size(); ++i)
      CHECK(c[i] == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-12));
  }
}

TEST_CASE("cell projection: oracle agreement and idempotence") {
  const Mesh mesh = generate_mesh(MeshKind::Voronoi2d, 2, 9);
  const auto f = [](const Vec3& x) {
    return 2.0 * M_PI * M_PI * std::sin(M_PI * x.x()) * std::sin(M_PI * x.y());
  };
  const Vector c = l2_project_onto_cell_polys(f, mesh, 0, 2);
  const Vector c_fine = l2_project_onto_cell_polys(f, mesh, 0, 2, 40);
  CHECK((c - c_fine).cwiseAbs().maxCoeff() <= 1e-10 * std::max(1.0, c.cwiseAbs().maxCoeff()));

  // projecting the projection is the identity on coefficients
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, 0, 2);
  const auto projected = [&](const Vec3& x) {
    double r = 0.0;
    for (int j = 0; j < basis.size(); ++j) r += c[j] * basis.value(j, x);
    return r;
  };
  const Vector c2 = l2_project_onto_cell_polys(projected, mesh, 0, 2);
  CHECK((c2 - c).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, c.cwiseAbs().maxCoeff()));
}

TEST_CASE("face basis rejects off-plane points in 3D") {
  const Mesh cube = generate_mesh(MeshKind::CubeStructured, 1);
  const FaceMonomialBasis basis(cube, 0, 1);
  const FaceGeometry& fg = cube.face_geometry(0);
  CHECK_NOTHROW(basis.value(0, fg.centroid));
  CHECK_THROWS_AS(basis.value(0, Vec3(fg.centroid + 0.1 * fg.normal)), ValidationError);
}
