#include "ncvem/assembly.hpp"

#include "ncvem/polybasis.hpp"
#include "ncvem/quadrature.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <fstream>

namespace ncvem {

DofMap build_dof_map(const Mesh& mesh, int k) {
  if (k < 1) throw ValidationError("order must be >= 1");
  DofMap map;
  map.dim = mesh.dimension();
  map.k = k;
  map.n_faces = mesh.n_faces();
  map.n_cells = mesh.n_cells();
  map.face_dofs = polynomial_space_dim(map.dim - 1, k - 1);
  map.cell_dofs = polynomial_space_dim(map.dim, k - 2);
  map.total = map.n_faces * map.face_dofs + map.n_cells * map.cell_dofs;
  return map;
}

int DofMap::global_index(const Mesh& mesh, int c, int local) const {
  const CellFaces& cf = mesh.cell(c);
  const int n_face_dofs = static_cast<int>(cf.faces.size()) * face_dofs;
  if (local < n_face_dofs)
    return face_offset(cf.faces[local / face_dofs]) + local % face_dofs;
  return cell_offset(c) + (local - n_face_dofs);
}

DirichletData apply_dirichlet(const Mesh& mesh, const DofMap& dofmap, const ScalarField& g,
                              int k, int extra_degree) {
  DirichletData bc;
  bc.constrained.assign(dofmap.total, 0);
  bc.values.assign(dofmap.total, 0.0);
  for (int f = 0; f < mesh.n_faces(); ++f) {
    if (!mesh.is_boundary_face(f)) continue;
    const FaceMonomialBasis basis(mesh, f, k - 1);
    const QuadratureRule rule =
        face_rule(mesh, f, data_exactness(2 * k + std::max(extra_degree, 0)));
    const double inv_measure = 1.0 / mesh.face_geometry(f).measure;
    for (int t = 0; t < dofmap.face_dofs; ++t) {
      double moment = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q)
        moment += rule.weights[q] * g(rule.points[q]) * basis.value(t, rule.points[q]);
      const int idx = dofmap.face_offset(f) + t;
      bc.constrained[idx] = 1;
      bc.values[idx] = moment * inv_measure;
      ++bc.count;
    }
  }
  return bc;
}

LinearSystem assemble(const Mesh& mesh, const DofMap& dofmap,
                      const std::vector<LocalElement>& elements,
                      const std::vector<Vector>& loads, const DirichletData& bc) {
  if (static_cast<int>(elements.size()) != mesh.n_cells() || loads.size() != elements.size())
    throw ValidationError("assemble: one element and one load per cell required");
  LinearSystem sys;
  sys.bc = bc;
  sys.b = Vector::Zero(dofmap.total);
  std::vector<Eigen::Triplet<double>> triplets;
  std::size_t nnz_estimate = 0;
  for (const LocalElement& el : elements)
    nnz_estimate += static_cast<std::size_t>(el.layout.total) * el.layout.total;
  triplets.reserve(nnz_estimate);
  // fixed scatter order: ascending cells, row-major local blocks
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const LocalElement& el = elements[c];
    const int n = el.layout.total;
    std::vector<int> global(n);
    for (int i = 0; i < n; ++i) global[i] = dofmap.global_index(mesh, c, i);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) triplets.emplace_back(global[i], global[j], el.M(i, j));
      sys.b[global[i]] += loads[c][i];
    }
  }
  sys.A.resize(dofmap.total, dofmap.total);
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  return sys;
}

LinearSystem assemble(const Mesh& mesh, const DofMap& dofmap, int k,
                      const StabilizationChoice& stab, const ScalarField& f,
                      const ScalarField& g, int threads) {
  const std::vector<LocalElement> elements = build_all_elements(mesh, k, stab, threads);
  std::vector<Vector> loads(elements.size());
  for (int c = 0; c < mesh.n_cells(); ++c)
    loads[c] = build_load(mesh, c, elements[c].layout, f);
  const DirichletData bc = apply_dirichlet(mesh, dofmap, g, k);
  return assemble(mesh, dofmap, elements, loads, bc);
}

namespace {

constexpr int kDenseLimit = 2000;

Vector solve_reduced(const Eigen::SparseMatrix<double>& A_ff, const Vector& b_f, SolveInfo* info,
                     double tol) {
  const int n = static_cast<int>(b_f.size());
  if (n <= kDenseLimit) {
    Matrix dense(A_ff);
    Eigen::LLT<Matrix> llt(dense);
    if (llt.info() != Eigen::Success)
      throw NumericalError("free block is not positive definite (zero or negative pivot)");
    Vector x = llt.solve(b_f);
    const double bn = b_f.norm();
    const double res = (b_f - dense * x).norm() / (bn > 0.0 ? bn : 1.0);
    if (!(res < 1e-8))
      throw NumericalError("dense Cholesky solve failed (relative residual " +
                           std::to_string(res) + ")");
    if (info != nullptr) {
      info->used_dense = true;
      info->iterations = 0;
      info->residual = res;
    }
    return x;
  }

  // diagonally preconditioned conjugate gradients
  Vector diag = A_ff.diagonal();
  for (int i = 0; i < n; ++i) {
    if (!(diag[i] > 0.0))
      throw NumericalError("free block has a non-positive diagonal entry: not SPD");
    diag[i] = 1.0 / diag[i];
  }
  const double bn = b_f.norm();
  Vector x = Vector::Zero(n);
  if (bn == 0.0) {
    if (info != nullptr) info->used_dense = false;
    return x;
  }
  Vector r = b_f;
  Vector z = diag.cwiseProduct(r);
  Vector p = z;
  double rz = r.dot(z);
  const long long max_iter = 20LL * n;
  std::vector<double> history;
  history.reserve(256);
  long long it = 0;
  double rel = r.norm() / bn;
  history.push_back(rel);
  while (rel > tol) {
    if (it >= max_iter)
      throw NumericalError("conjugate gradients did not converge in " + std::to_string(max_iter) +
                           " iterations (last relative residual " + std::to_string(rel) + ")");
    const Vector Ap = A_ff * p;
    const double pAp = p.dot(Ap);
    if (!(pAp > 0.0))
      throw NumericalError("conjugate gradients hit a non-positive curvature direction: "
                           "matrix is not positive definite");
    const double alpha = rz / pAp;
    x += alpha * p;
    r -= alpha * Ap;
    z = diag.cwiseProduct(r);
    const double rz_new = r.dot(z);
    p = z + (rz_new / rz) * p;
    rz = rz_new;
    rel = r.norm() / bn;
    history.push_back(rel);
    ++it;
  }
  if (info != nullptr) {
    info->used_dense = false;
    info->iterations = static_cast<int>(it);
    info->residual = rel;
    info->residual_history = std::move(history);
  }
  return x;
}

} // namespace

Vector solve(const LinearSystem& system, SolveInfo* info, double tol) {
  const int n = static_cast<int>(system.b.size());
  if (system.bc.count == 0)
    throw NumericalError(
        "system has no Dirichlet constraints: the operator is singular (constant null space)");

  std::vector<int> free_index(n, -1);
  int n_free = 0;
  for (int i = 0; i < n; ++i)
    if (!system.bc.constrained[i]) free_index[i] = n_free++;

  // symmetric elimination: move constrained columns to the right-hand side
  Vector b_f(n_free);
  for (int i = 0; i < n; ++i)
    if (free_index[i] >= 0) b_f[free_index[i]] = system.b[i];
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(system.A.nonZeros());
  for (int col = 0; col < system.A.outerSize(); ++col) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(system.A, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (free_index[i] < 0) continue;
      if (free_index[j] < 0) {
        b_f[free_index[i]] -= it.value() * system.bc.values[j];
      } else {
        triplets.emplace_back(free_index[i], free_index[j], it.value());
      }
    }
  }
  Eigen::SparseMatrix<double> A_ff(n_free, n_free);
  A_ff.setFromTriplets(triplets.begin(), triplets.end());

  const Vector x_f = solve_reduced(A_ff, b_f, info, tol);

  Vector x(n);
  for (int i = 0; i < n; ++i)
    x[i] = free_index[i] >= 0 ? x_f[free_index[i]] : system.bc.values[i];
  return x;
}

Vector global_dofs_of_function(const Mesh& mesh, const DofMap& dofmap, int k,
                               const ScalarField& f, int extra_degree) {
  Vector dofs = Vector::Zero(dofmap.total);
  const int exactness = data_exactness(2 * k + std::max(extra_degree, 0));
  for (int face = 0; face < mesh.n_faces(); ++face) {
    const FaceMonomialBasis basis(mesh, face, k - 1);
    const QuadratureRule rule = face_rule(mesh, face, exactness);
    const double inv_measure = 1.0 / mesh.face_geometry(face).measure;
    for (int t = 0; t < dofmap.face_dofs; ++t) {
      double moment = 0.0;
      for (std::size_t q = 0; q < rule.points.size(); ++q)
        moment += rule.weights[q] * f(rule.points[q]) * basis.value(t, rule.points[q]);
      dofs[dofmap.face_offset(face) + t] = moment * inv_measure;
    }
  }
  if (dofmap.cell_dofs > 0) {
    for (int c = 0; c < mesh.n_cells(); ++c) {
      const CellMonomialBasis basis = CellMonomialBasis::for_cell(mesh, c, k - 2);
      const QuadratureRule rule = cell_rule(mesh, c, exactness);
      const double inv_measure = 1.0 / mesh.cell_geometry(c).measure;
      for (int t = 0; t < dofmap.cell_dofs; ++t) {
        double moment = 0.0;
        for (std::size_t q = 0; q < rule.points.size(); ++q)
          moment += rule.weights[q] * f(rule.points[q]) * basis.value(t, rule.points[q]);
        dofs[dofmap.cell_offset(c) + t] = moment * inv_measure;
      }
    }
  }
  return dofs;
}

void write_solution_json(const std::string& path, const Mesh& mesh, const DofMap& dofmap,
                         const Vector& dofs, const std::vector<LocalElement>& elements) {
  nlohmann::json j;
  j["dofmap"] = {{"dimension", dofmap.dim},  {"k", dofmap.k},
                 {"n_faces", dofmap.n_faces}, {"n_cells", dofmap.n_cells},
                 {"face_dofs", dofmap.face_dofs}, {"cell_dofs", dofmap.cell_dofs},
                 {"total", dofmap.total}};
  j["dofs"] = std::vector<double>(dofs.data(), dofs.data() + dofs.size());
  nlohmann::json cells = nlohmann::json::array();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const LocalElement& el = elements[c];
    Vector local(el.layout.total);
    for (int i = 0; i < el.layout.total; ++i) local[i] = dofs[dofmap.global_index(mesh, c, i)];
    const Vector coeffs = el.proj.PiStar * local;
    nlohmann::json jc;
    jc["cell"] = c;
    jc["projector_coefficients"] = std::vector<double>(coeffs.data(), coeffs.data() + coeffs.size());
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << j.dump(2) << "\n";
}

} // namespace ncvem
