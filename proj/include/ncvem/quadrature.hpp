// Quadrature rules on edges, planar polygons and polyhedra.
//
// Polygons are fanned into triangles around the centroid, polyhedra into
// tetrahedra (cell centroid x fanned faces); both require the entity to be
// star-shaped with respect to its centroid. Simplex rules are collapsed
// tensor-product Gauss rules with a certified exactness degree.

#ifndef NCVEM_QUADRATURE_HPP
#define NCVEM_QUADRATURE_HPP

#include "ncvem/common.hpp"
#include "ncvem/mesh.hpp"

#include <algorithm>

#include <utility>
#include <vector>

namespace ncvem {

struct QuadratureRule {
  std::vector<Vec3> points;
  std::vector<double> weights;  // carry the entity measure: weights sum to |e| or |K|
  int exactness = 0;

  double weight_sum() const;

  template <typename F>
  double integrate(F&& f) const {
    double acc = 0.0;
    for (std::size_t q = 0; q < points.size(); ++q) acc += weights[q] * f(points[q]);
    return acc;
  }
};

/// Gauss-Legendre nodes and weights on [-1,1].
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n_points);

/// Rules integrating user-supplied (non-polynomial) data never drop below this
/// exactness; smooth data then integrates to ~1e-12 even at low orders.
constexpr int kMinDataExactness = 13;
inline int data_exactness(int nominal) { return std::max(nominal, kMinDataExactness); }

QuadratureRule edge_rule(const Vec3& a, const Vec3& b, int degree);
QuadratureRule triangle_rule(const Vec3& a, const Vec3& b, const Vec3& c, int degree);
QuadratureRule tetrahedron_rule(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d,
                                int degree);

/// Rule on face f of the mesh: Gauss on the segment in 2D, centroid fan of the
/// polygon in 3D. Points are in ambient coordinates.
QuadratureRule face_rule(const Mesh& mesh, int f, int degree);

/// Rule on cell c: centroid fan into triangles (2D) or tetrahedra (3D);
/// throws NumericalError if the cell is not star-shaped w.r.t. its centroid.
QuadratureRule cell_rule(const Mesh& mesh, int c, int degree);

} // namespace ncvem

#endif
