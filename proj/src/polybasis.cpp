#include "ncvem/polybasis.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <string>

namespace ncvem {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= base;
  return r;
}

} // namespace

CellMonomialBasis::CellMonomialBasis(int dim, int degree, const Vec3& center, double scale)
    : dim_(dim), degree_(degree), center_(center), scale_(scale),
      indices_(enumerate_multi_indices(dim, degree)) {
  if (scale_ <= 0.0) throw ValidationError("monomial basis needs a positive scale");
}

CellMonomialBasis CellMonomialBasis::for_cell(const Mesh& mesh, int c, int degree) {
  const CellGeometry& g = mesh.cell_geometry(c);
  return CellMonomialBasis(mesh.dimension(), degree, g.centroid, g.diameter);
}

double CellMonomialBasis::value(int i, const Vec3& x) const {
  const MultiIndex& mi = indices_[i];
  double r = 1.0;
  for (int a = 0; a < dim_; ++a) r *= ipow((x[a] - center_[a]) / scale_, mi.s[a]);
  return r;
}

Vec3 CellMonomialBasis::gradient(int i, const Vec3& x) const {
  const MultiIndex& mi = indices_[i];
  double xi[3] = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) xi[a] = (x[a] - center_[a]) / scale_;
  Vec3 g = Vec3::Zero();
  for (int a = 0; a < dim_; ++a) {
    if (mi.s[a] == 0) continue;
    double part = mi.s[a] / scale_ * ipow(xi[a], mi.s[a] - 1);
    for (int b = 0; b < dim_; ++b)
      if (b != a) part *= ipow(xi[b], mi.s[b]);
    g[a] = part;
  }
  return g;
}

double CellMonomialBasis::laplacian(int i, const Vec3& x) const {
  const MultiIndex& mi = indices_[i];
  double xi[3] = {0, 0, 0};
  for (int a = 0; a < dim_; ++a) xi[a] = (x[a] - center_[a]) / scale_;
  double lap = 0.0;
  for (int a = 0; a < dim_; ++a) {
    if (mi.s[a] < 2) continue;
    double part = mi.s[a] * (mi.s[a] - 1) / (scale_ * scale_) * ipow(xi[a], mi.s[a] - 2);
    for (int b = 0; b < dim_; ++b)
      if (b != a) part *= ipow(xi[b], mi.s[b]);
    lap += part;
  }
  return lap;
}

std::vector<std::pair<int, double>> CellMonomialBasis::laplacian_coefficients(int i) const {
  const MultiIndex& mi = indices_[i];
  std::vector<std::pair<int, double>> out;
  for (int a = 0; a < dim_; ++a) {
    if (mi.s[a] < 2) continue;
    MultiIndex target = mi;
    target.s[a] -= 2;
    int pos = -1;
    for (std::size_t j = 0; j < indices_.size(); ++j)
      if (indices_[j] == target) {
        pos = static_cast<int>(j);
        break;
      }
    if (pos < 0) throw NumericalError("laplacian expansion target outside the basis");
    out.emplace_back(pos, mi.s[a] * (mi.s[a] - 1) / (scale_ * scale_));
  }
  return out;
}

FaceMonomialBasis::FaceMonomialBasis(const Mesh& mesh, int f, int degree)
    : ambient_dim_(mesh.dimension()), degree_(degree),
      indices_(enumerate_multi_indices(mesh.dimension() - 1, degree)) {
  const FaceGeometry& g = mesh.face_geometry(f);
  center_ = g.centroid;
  scale_ = g.diameter;
  const std::vector<int>& fv = mesh.face_vertices(f);
  if (ambient_dim_ == 2) {
    tangent1_ = (mesh.vertex(fv[1]) - mesh.vertex(fv[0])).normalized();
    tangent2_ = Vec3::Zero();
    normal_ = g.normal;
  } else {
    normal_ = g.normal;
    Vec3 t = mesh.vertex(fv[1]) - mesh.vertex(fv[0]);
    t -= t.dot(normal_) * normal_;
    tangent1_ = t.normalized();
    tangent2_ = normal_.cross(tangent1_);
  }
}

Eigen::Vector2d FaceMonomialBasis::local_coords(const Vec3& x) const {
  const Vec3 r = x - center_;
  if (ambient_dim_ == 3 && std::abs(r.dot(normal_)) > 1e-8 * scale_)
    throw ValidationError("face basis evaluated off the face plane");
  return {r.dot(tangent1_) / scale_, ambient_dim_ == 3 ? r.dot(tangent2_) / scale_ : 0.0};
}

double FaceMonomialBasis::value(int i, const Vec3& x) const {
  const Eigen::Vector2d xi = local_coords(x);
  const MultiIndex& mi = indices_[i];
  double r = ipow(xi[0], mi.s[0]);
  if (ambient_dim_ == 3) r *= ipow(xi[1], mi.s[1]);
  return r;
}

namespace {

Vector project_with_rule(const ScalarField& f, const QuadratureRule& rule,
                         const std::function<double(int, const Vec3&)>& basis_value, int n,
                         const std::string& what) {
  Matrix gram = Matrix::Zero(n, n);
  Vector rhs = Vector::Zero(n);
  std::vector<double> vals(n);
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec3& x = rule.points[q];
    const double w = rule.weights[q];
    for (int i = 0; i < n; ++i) vals[i] = basis_value(i, x);
    const double fx = f(x);
    for (int i = 0; i < n; ++i) {
      rhs[i] += w * fx * vals[i];
      for (int j = i; j < n; ++j) gram(i, j) += w * vals[i] * vals[j];
    }
  }
  const Matrix gram_full = Matrix(gram.selfadjointView<Eigen::Upper>());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_full);
  const double lmin = eig.eigenvalues().minCoeff();
  const double lmax = eig.eigenvalues().maxCoeff();
  if (lmin <= 0.0 || lmin < lmax * 1e-15)
    throw NumericalError(what + ": singular mass matrix (degenerate entity)");
  if (lmax / lmin > 1e12)
    log_message(LogLevel::Info, what + ": mass matrix condition number above 1e12");
  return Eigen::LDLT<Matrix>(gram_full).solve(rhs);
}

} // namespace

Vector l2_project_onto_face_polys(const ScalarField& f, const Mesh& mesh, int face, int degree,
                                  int extra_degree) {
  const FaceMonomialBasis basis(mesh, face, degree);
  const QuadratureRule rule =
      face_rule(mesh, face, data_exactness(2 * degree + std::max(extra_degree, 0)));
  return project_with_rule(
      f, rule, [&](int i, const Vec3& x) { return basis.value(i, x); }, basis.size(),
      "face " + std::to_string(face) + " projection");
}

Vector l2_project_onto_cell_polys(const ScalarField& f, const Mesh& mesh, int cell, int degree,
                                  int extra_degree) {
  const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, cell, degree);
  const QuadratureRule rule =
      cell_rule(mesh, cell, data_exactness(2 * degree + std::max(extra_degree, 0)));
  return project_with_rule(
      f, rule, [&](int i, const Vec3& x) { return basis.value(i, x); }, basis.size(),
      "cell " + std::to_string(cell) + " projection");
}

} // namespace ncvem
