// Scaled monomial bases attached to cells and faces, and L2 projections onto
// the polynomial spaces they span.
//
// A cell member is prod_i ((x_i - c_i)/h)^{s_i} with c the cell centroid and
// h the cell diameter. Face members use the same recipe in an in-plane frame
// centered at the face centroid and scaled by the face diameter.

#ifndef NCVEM_POLYBASIS_HPP
#define NCVEM_POLYBASIS_HPP

#include "ncvem/common.hpp"
#include "ncvem/mesh.hpp"
#include "ncvem/multi_index.hpp"
#include "ncvem/quadrature.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace ncvem {

using ScalarField = std::function<double(const Vec3&)>;

/// M^degree(K): scaled monomials on a d-dimensional cell, graded-lex ordered.
class CellMonomialBasis {
public:
  CellMonomialBasis(int dim, int degree, const Vec3& center, double scale);
  static CellMonomialBasis for_cell(const Mesh& mesh, int c, int degree);

  int dim() const { return dim_; }
  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const Vec3& center() const { return center_; }
  double scale() const { return scale_; }
  const MultiIndex& index(int i) const { return indices_[i]; }

  double value(int i, const Vec3& x) const;
  Vec3 gradient(int i, const Vec3& x) const;
  double laplacian(int i, const Vec3& x) const;

  /// Exact expansion of the Laplacian of member i in the same family:
  /// pairs (j, c_j) with Delta m_i = sum_j c_j m_j, deg m_j = deg m_i - 2.
  std::vector<std::pair<int, double>> laplacian_coefficients(int i) const;

private:
  int dim_;
  int degree_;
  Vec3 center_;
  double scale_;
  std::vector<MultiIndex> indices_;
};

/// M^degree(e): scaled monomials on a face, in the face's own frame. The frame
/// is canonical per face (derived from the stored vertex loop), so the two
/// cells sharing a face see identical basis members.
class FaceMonomialBasis {
public:
  FaceMonomialBasis(const Mesh& mesh, int f, int degree);

  int degree() const { return degree_; }
  int size() const { return static_cast<int>(indices_.size()); }
  const MultiIndex& index(int i) const { return indices_[i]; }

  /// Local in-plane coordinates of an ambient point; throws for points off
  /// the face plane (3D) beyond 1e-8 * h_e.
  Eigen::Vector2d local_coords(const Vec3& x) const;

  double value(int i, const Vec3& x) const;

private:
  int ambient_dim_;
  int degree_;
  Vec3 center_;
  double scale_;
  Vec3 tangent1_, tangent2_, normal_;
  std::vector<MultiIndex> indices_;
};

/// Coefficients of the L2(e)-orthogonal projection of f onto the span of
/// M^degree(e). Quadrature exactness is 2*degree + extra_degree; pass extra
/// headroom for non-polynomial data.
Vector l2_project_onto_face_polys(const ScalarField& f, const Mesh& mesh, int face, int degree,
                                  int extra_degree = 4);

/// Cell analogue of the face projection.
Vector l2_project_onto_cell_polys(const ScalarField& f, const Mesh& mesh, int cell, int degree,
                                  int extra_degree = 4);

} // namespace ncvem

#endif
