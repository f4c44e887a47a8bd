#include "ncvem/quadrature.hpp"

#include <cmath>
#include <string>

namespace ncvem {

double QuadratureRule::weight_sum() const {
  double s = 0.0;
  for (double w : weights) s += w;
  return s;
}

std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n_points) {
  if (n_points < 1) throw ValidationError("gauss_legendre: need at least one point");
  std::vector<double> x(n_points), w(n_points);
  const int m = (n_points + 1) / 2;
  for (int i = 0; i < m; ++i) {
    // Newton on P_n starting from the Chebyshev-like estimate.
    double z = std::cos(M_PI * (i + 0.75) / (n_points + 0.5));
    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int j = 0; j < n_points; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
      }
      pp = n_points * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / pp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[i] = -z;
    x[n_points - 1 - i] = z;
    const double wi = 2.0 / ((1.0 - z * z) * pp * pp);
    w[i] = wi;
    w[n_points - 1 - i] = wi;
  }
  if (n_points % 2 == 1) x[n_points / 2] = 0.0;
  return {x, w};
}

QuadratureRule edge_rule(const Vec3& a, const Vec3& b, int degree) {
  const int n = (std::max(degree, 0) + 2) / 2;  // ceil((degree+1)/2)
  auto [x, w] = gauss_legendre(n);
  const double len = (b - a).norm();
  if (len <= 0.0) throw NumericalError("edge_rule: degenerate edge");
  QuadratureRule rule;
  rule.exactness = 2 * n - 1;
  rule.points.reserve(n);
  rule.weights.reserve(n);
  for (int i = 0; i < n; ++i) {
    rule.points.push_back(0.5 * (a + b) + 0.5 * x[i] * (b - a));
    rule.weights.push_back(0.5 * len * w[i]);
  }
  return rule;
}

// Collapsed tensor-product rule on the triangle (a,b,c):
//   P(u,v) = a + u (b-a) + v (1-u) (c-a),  |J| = 2A (1-u).
// A monomial of ambient degree q pulls back to degree <= q+1 in u and q in v.
QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree) {
  const int q = std::max(degree, 0);
  const int nu = (q + 3) / 2;  // ceil((q+2)/2)
  const int nv = (q + 2) / 2;  // ceil((q+1)/2)
  auto [xu, wu] = gauss_legendre(nu);
  auto [xv, wv] = gauss_legendre(nv);
  const double area2 = ((b - a).cross(c - a)).norm();
  QuadratureRule rule;
  rule.exactness = q;
  rule.points.reserve(nu * nv);
  rule.weights.reserve(nu * nv);
  for (int i = 0; i < nu; ++i) {
    const double u = 0.5 * (xu[i] + 1.0);
    for (int j = 0; j < nv; ++j) {
      const double v = 0.5 * (xv[j] + 1.0);
      rule.points.push_back(a + u * (b - a) + v * (1.0 - u) * (c - a));
      rule.weights.push_back(0.25 * wu[i] * wv[j] * area2 * (1.0 - u));
    }
  }
  return rule;
}

QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                                int degree) {
  const int q = std::max(degree, 0);
  const int nu = (q + 4) / 2;  // ceil((q+3)/2)
  const int nv = (q + 3) / 2;
  const int nw = (q + 2) / 2;
  auto [xu, wu] = gauss_legendre(nu);
  auto [xv, wv] = gauss_legendre(nv);
  auto [xw, ww] = gauss_legendre(nw);
  const double vol6 = std::abs((b - a).cross(c - a).dot(d - a));
  QuadratureRule rule;
  rule.exactness = q;
  rule.points.reserve(nu * nv * nw);
  rule.weights.reserve(nu * nv * nw);
  for (int i = 0; i < nu; ++i) {
    const double u = 0.5 * (xu[i] + 1.0);
    for (int j = 0; j < nv; ++j) {
      const double v = 0.5 * (xv[j] + 1.0);
      for (int l = 0; l < nw; ++l) {
        const double w = 0.5 * (xw[l] + 1.0);
        rule.points.push_back(a + u * (b - a) + v * (1.0 - u) * (c - a) +
                              w * (1.0 - u) * (1.0 - v) * (d - a));
        rule.weights.push_back(0.125 * wu[i] * wv[j] * ww[l] * vol6 * (1.0 - u) * (1.0 - u) *
                               (1.0 - v));
      }
    }
  }
  return rule;
}

namespace {

void append(QuadratureRule& rule, const QuadratureRule& part) {
  rule.points.insert(rule.points.end(), part.points.begin(), part.points.end());
  rule.weights.insert(rule.weights.end(), part.weights.begin(), part.weights.end());
}

// Centroid fan of a planar polygon given in loop order; `normal` orients the
// positivity check.
QuadratureRule polygon_fan_rule(const std::vector<Vec3>& loop, const Vec3& centroid,
                                const Vec3& normal, int degree, const std::string& what) {
  QuadratureRule rule;
  rule.exactness = std::max(degree, 0);
  const int n = static_cast<int>(loop.size());
  double scale2 = 0.0;
  for (const Vec3& p : loop) scale2 = std::max(scale2, (p - centroid).squaredNorm());
  for (int i = 0; i < n; ++i) {
    const Vec3& p = loop[i];
    const Vec3& q = loop[(i + 1) % n];
    const double signed_area2 = (p - centroid).cross(q - centroid).dot(normal);
    if (signed_area2 <= 1e-14 * scale2) {
      if (std::abs(signed_area2) <= 1e-14 * scale2) continue;  // degenerate sliver
      throw NumericalError(what + " is not star-shaped with respect to its centroid");
    }
    append(rule, triangle_rule(centroid, p, q, degree));
  }
  return rule;
}

} // namespace

QuadratureRule face_rule(const Mesh& mesh, int f, int degree) {
  const std::vector<int>& fv = mesh.face_vertices(f);
  if (mesh.dimension() == 2) return edge_rule(mesh.vertex(fv[0]), mesh.vertex(fv[1]), degree);
  std::vector<Vec3> loop;
  loop.reserve(fv.size());
  for (int v : fv) loop.push_back(mesh.vertex(v));
  const FaceGeometry& geom = mesh.face_geometry(f);
  return polygon_fan_rule(loop, geom.centroid, geom.normal, degree,
                          "face " + std::to_string(f));
}

QuadratureRule cell_rule(const Mesh& mesh, int c, int degree) {
  const CellGeometry& geom = mesh.cell_geometry(c);
  if (mesh.dimension() == 2) {
    const std::vector<int>& loop_ids = mesh.cell_vertices(c);
    std::vector<Vec3> loop;
    loop.reserve(loop_ids.size());
    for (int v : loop_ids) loop.push_back(mesh.vertex(v));
    return polygon_fan_rule(loop, geom.centroid, Vec3(0, 0, 1), degree,
                            "cell " + std::to_string(c));
  }
  // Fan into tetrahedra: cell centroid x (face centroid x face edge).
  QuadratureRule rule;
  rule.exactness = std::max(degree, 0);
  const CellFaces& cf = mesh.cell(c);
  const double h = geom.diameter;
  for (std::size_t lf = 0; lf < cf.faces.size(); ++lf) {
    const int f = cf.faces[lf];
    const FaceGeometry& fg = mesh.face_geometry(f);
    const Vec3 n_out = mesh.outward_normal(c, static_cast<int>(lf));
    const std::vector<int>& fv = mesh.face_vertices(f);
    const int nv = static_cast<int>(fv.size());
    for (int i = 0; i < nv; ++i) {
      Vec3 p = mesh.vertex(fv[i]);
      Vec3 q = mesh.vertex(fv[(i + 1) % nv]);
      // orient the boundary triangle so its normal points out of the cell
      if (fg.normal.dot(n_out) < 0.0) std::swap(p, q);
      const double vol6 =
          (fg.centroid - geom.centroid).cross(p - geom.centroid).dot(q - geom.centroid);
      if (vol6 <= 1e-14 * h * h * h) {
        if (std::abs(vol6) <= 1e-14 * h * h * h) continue;
        throw NumericalError("cell " + std::to_string(c) +
                             " is not star-shaped with respect to its centroid");
      }
      append(rule, tetrahedron_rule(geom.centroid, fg.centroid, p, q, degree));
    }
  }
  return rule;
}

} // namespace ncvem
