#include "ncvem/element.hpp"

#include "detail_linalg.hpp"
#include "ncvem/quadrature.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <thread>

namespace ncvem {

using detail::MatrixL;
using detail::VectorL;

DofLayout build_dof_layout(const Mesh& mesh, int cell, int k) {
  if (k < 1) throw ValidationError("order must be >= 1");
  DofLayout layout;
  layout.dim = mesh.dimension();
  layout.k = k;
  layout.n_faces = static_cast<int>(mesh.cell(cell).faces.size());
  layout.face_dofs = polynomial_space_dim(layout.dim - 1, k - 1);
  layout.cell_dofs = polynomial_space_dim(layout.dim, k - 2);
  layout.total = layout.n_faces * layout.face_dofs + layout.cell_dofs;
  return layout;
}

StabilizationChoice StabilizationChoice::custom_matrix(Matrix s) {
  StabilizationChoice c;
  c.kind = StabilizationKind::Custom;
  c.custom = std::move(s);
  return c;
}

StabilizationKind stabilization_from_string(const std::string& name) {
  if (name == "vem-identity") return StabilizationKind::VemIdentity;
  if (name == "mfd-trace") return StabilizationKind::MfdTrace;
  throw ValidationError("unknown stabilization '" + name + "' (vem-identity|mfd-trace)");
}

std::string to_string(StabilizationKind kind) {
  switch (kind) {
    case StabilizationKind::VemIdentity: return "vem-identity";
    case StabilizationKind::MfdTrace: return "mfd-trace";
    case StabilizationKind::Custom: return "custom";
  }
  return "?";
}

Vector compute_dofs_of_function(const Mesh& mesh, int cell, const DofLayout& layout,
                                const ScalarField& f, int quadrature_exactness) {
  const int k = layout.k;
  const int exactness =
      quadrature_exactness >= 0 ? quadrature_exactness : data_exactness(2 * k + 4);
  Vector dofs = Vector::Zero(layout.total);
  const CellFaces& cf = mesh.cell(cell);
  for (int lf = 0; lf < layout.n_faces; ++lf) {
    const int face = cf.faces[lf];
    const FaceMonomialBasis fb(mesh, face, k - 1);
    const QuadratureRule rule = face_rule(mesh, face, exactness);
    const double inv_measure = 1.0 / mesh.face_geometry(face).measure;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double wf = rule.weights[q] * f(rule.points[q]) * inv_measure;
      for (int t = 0; t < layout.face_dofs; ++t)
        dofs[layout.face_block(lf) + t] += wf * fb.value(t, rule.points[q]);
    }
  }
  if (layout.cell_dofs > 0) {
    const CellMonomialBasis cb = CellMonomialBasis::for_cell(mesh, cell, k - 2);
    const QuadratureRule rule = cell_rule(mesh, cell, exactness);
    const double inv_measure = 1.0 / mesh.cell_geometry(cell).measure;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const double wf = rule.weights[q] * f(rule.points[q]) * inv_measure;
      for (int t = 0; t < layout.cell_dofs; ++t)
        dofs[layout.cell_block() + t] += wf * cb.value(t, rule.points[q]);
    }
  }
  return dofs;
}

namespace {

MatrixL build_D_long(const Mesh& mesh, int cell, const DofLayout& layout) {
  const int k = layout.k;
  const CellMonomialBasis cb = CellMonomialBasis::for_cell(mesh, cell, k);
  const int n_poly = cb.size();
  MatrixL D = MatrixL::Zero(layout.total, n_poly);
  const CellFaces& cf = mesh.cell(cell);
  for (int lf = 0; lf < layout.n_faces; ++lf) {
    const int face = cf.faces[lf];
    const FaceMonomialBasis fb(mesh, face, k - 1);
    const QuadratureRule rule = face_rule(mesh, face, 2 * k);
    const long double inv_measure = 1.0L / mesh.face_geometry(face).measure;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3& x = rule.points[q];
      for (int t = 0; t < layout.face_dofs; ++t) {
        const long double wt = rule.weights[q] * fb.value(t, x) * inv_measure;
        for (int j = 0; j < n_poly; ++j)
          D(layout.face_block(lf) + t, j) += wt * cb.value(j, x);
      }
    }
  }
  if (layout.cell_dofs > 0) {
    const QuadratureRule rule = cell_rule(mesh, cell, 2 * k);
    const long double inv_measure = 1.0L / mesh.cell_geometry(cell).measure;
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const Vec3& x = rule.points[q];
      for (int t = 0; t < layout.cell_dofs; ++t) {
        const long double wt = rule.weights[q] * cb.value(t, x) * inv_measure;
        for (int j = 0; j < n_poly; ++j) D(layout.cell_block() + t, j) += wt * cb.value(j, x);
      }
    }
  }
  return D;
}

// Energy pairings of the cell monomials against the virtual basis written in
// terms of the dofs alone: int_K grad m_i . grad psi_j
//   = -int_K (Delta m_i) psi_j + sum_e int_e (dm_i/dn) psi_j,
// with Delta m_i expanded exactly in the cell-moment monomials and dm_i/dn
// re-expanded on each face in the face monomials through the face Gram matrix.
MatrixL build_B_long(const Mesh& mesh, int cell, const DofLayout& layout) {
  const int k = layout.k;
  const CellMonomialBasis cb = CellMonomialBasis::for_cell(mesh, cell, k);
  const int n_poly = cb.size();
  MatrixL B = MatrixL::Zero(n_poly, layout.total);
  const CellFaces& cf = mesh.cell(cell);
  const CellGeometry& cg = mesh.cell_geometry(cell);

  if (k == 1) {
    for (int lf = 0; lf < layout.n_faces; ++lf)
      B(0, layout.face_block(lf)) = mesh.face_geometry(cf.faces[lf]).measure;
  } else {
    B(0, layout.cell_block()) = cg.measure;
  }

  // cell part: -int_K (Delta m_i) psi_j via the cell-moment dofs
  for (int i = 1; i < n_poly; ++i)
    for (const auto& [pos, coef] : cb.laplacian_coefficients(i)) {
      if (pos >= layout.cell_dofs)
        throw NumericalError("Laplacian expansion escapes the cell-moment space");
      B(i, layout.cell_block() + pos) -= coef * cg.measure;
    }

  // face part: + int_e (dm_i/dn) psi_j via the face-moment dofs
  for (int lf = 0; lf < layout.n_faces; ++lf) {
    const int face = cf.faces[lf];
    const FaceMonomialBasis fb(mesh, face, k - 1);
    const QuadratureRule rule = face_rule(mesh, face, 2 * k);
    const Vec3 n_out = mesh.outward_normal(cell, lf);
    const double face_measure = mesh.face_geometry(face).measure;
    const int nq = static_cast<int>(rule.points.size());

    MatrixL gram = MatrixL::Zero(layout.face_dofs, layout.face_dofs);
    MatrixL fvals(layout.face_dofs, nq);
    for (int q = 0; q < nq; ++q) {
      for (int t = 0; t < layout.face_dofs; ++t) fvals(t, q) = fb.value(t, rule.points[q]);
      for (int t = 0; t < layout.face_dofs; ++t)
        for (int s = t; s < layout.face_dofs; ++s)
          gram(t, s) += rule.weights[q] * fvals(t, q) * fvals(s, q);
    }
    const MatrixL gram_full = MatrixL(gram.selfadjointView<Eigen::Upper>());
    Eigen::LDLT<MatrixL> gram_ldlt(gram_full);

    for (int i = 1; i < n_poly; ++i) {
      VectorL rhs = VectorL::Zero(layout.face_dofs);
      VectorL fn(nq);
      long double fn_norm2 = 0.0L;
      for (int q = 0; q < nq; ++q) {
        fn[q] = n_out.dot(cb.gradient(i, rule.points[q]));
        fn_norm2 += rule.weights[q] * fn[q] * fn[q];
        for (int t = 0; t < layout.face_dofs; ++t) rhs[t] += rule.weights[q] * fn[q] * fvals(t, q);
      }
      const VectorL gamma = gram_ldlt.solve(rhs);
      long double res2 = 0.0L;
      for (int q = 0; q < nq; ++q) {
        const long double r = fn[q] - gamma.dot(fvals.col(q));
        res2 += rule.weights[q] * r * r;
      }
      const long double scale =
          std::max(std::sqrt((double)fn_norm2), std::sqrt(face_measure) / cg.diameter);
      if (std::sqrt((double)res2) > 1e-10 * scale)
        throw NumericalError("normal derivative does not lie in the face polynomial space (cell " +
                             std::to_string(cell) + ", face " + std::to_string(face) + ")");
      for (int t = 0; t < layout.face_dofs; ++t)
        B(i, layout.face_block(lf) + t) += gamma[t] * face_measure;
    }
  }
  return B;
}

struct ProjectorL {
  MatrixL G, Gtilde, PiStar, Pi;
};

ProjectorL build_projector_long(const MatrixL& D, const MatrixL& B, int cell) {
  ProjectorL p;
  p.G = B * D;
  Eigen::PartialPivLU<MatrixL> lu(p.G);
  const long double rc = lu.rcond();
  if (!(rc > 0.0L) || rc < 1e-30L)
    throw NumericalError("unisolvence violation: G = B*D is singular on cell " +
                         std::to_string(cell));
  if (rc < 1e-12L)
    log_message(LogLevel::Info,
                "cond(G) above 1e12 on cell " + std::to_string(cell) + " (scaled monomial Gram)");
  p.PiStar = lu.solve(B);
  p.Pi = D * p.PiStar;
  p.Gtilde = p.G;
  p.Gtilde.row(0).setZero();
  return p;
}

MatrixL build_stabilization_long(const Mesh& mesh, int cell, const DofLayout& layout,
                                 const ProjectorL& /*proj*/, const MatrixL& D, const MatrixL& M0,
                                 const StabilizationChoice& choice) {
  const int n = layout.total;
  const int dim = mesh.dimension();
  switch (choice.kind) {
    case StabilizationKind::VemIdentity: {
      const long double gamma =
          dim == 2 ? 1.0L : static_cast<long double>(mesh.cell_geometry(cell).diameter);
      return gamma * MatrixL::Identity(n, n);
    }
    case StabilizationKind::MfdTrace: {
      const MatrixL pi_perp = detail::pi_perp_long(D);
      const long double rho = M0.trace() / static_cast<long double>(n);
      return rho * (MatrixL::Identity(n, n) - pi_perp);
    }
    case StabilizationKind::Custom: {
      if (choice.custom.rows() != n || choice.custom.cols() != n)
        throw ValidationError("custom stabilization matrix has the wrong size");
      const Matrix& S = choice.custom;
      const double nrm = S.cwiseAbs().maxCoeff();
      if ((S - S.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(nrm, 1e-300))
        throw ValidationError("custom stabilization matrix is not symmetric");
      const MatrixL SL = detail::widen(S);
      const MatrixL P = MatrixL::Identity(n, n) - detail::pi_perp_long(D);
      const MatrixL A = P * SL * P;
      Eigen::SelfAdjointEigenSolver<MatrixL> eig(0.5L * (A + A.transpose()));
      const int n_poly = static_cast<int>(D.cols());
      int positive = 0;
      for (int i = 0; i < n; ++i) {
        if (eig.eigenvalues()[i] < -1e-10L * nrm)
          throw ValidationError("custom stabilization matrix is indefinite on the complement");
        if (eig.eigenvalues()[i] > 1e-12L * std::max(nrm, 1e-300)) ++positive;
      }
      if (positive < n - n_poly)
        throw ValidationError(
            "custom stabilization matrix is not positive definite on the complement");
      return SL;
    }
  }
  throw ValidationError("unknown stabilization kind");
}

MatrixL assemble_stiffness_long(const ProjectorL& proj, const MatrixL& S, const MatrixL& D,
                                MatrixL* m0_out, int cell) {
  const int n = static_cast<int>(proj.Pi.rows());
  const MatrixL M0 = proj.PiStar.transpose() * proj.Gtilde * proj.PiStar;
  const MatrixL complement = MatrixL::Identity(n, n) - proj.Pi;
  MatrixL M = M0 + complement.transpose() * S * complement;

  const long double nrm = M.cwiseAbs().maxCoeff();
  if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-10L * nrm)
    throw NumericalError("stiffness lost symmetry on cell " + std::to_string(cell));
  M = 0.5L * (M + M.transpose().eval());

  Eigen::SelfAdjointEigenSolver<MatrixL> eig(M);
  const long double lmax = eig.eigenvalues().cwiseAbs().maxCoeff();
  if (eig.eigenvalues().minCoeff() < -1e-10L * lmax)
    throw NumericalError("stiffness not positive semidefinite on cell " + std::to_string(cell));
  const VectorL constant_dofs = D.col(0);
  if ((M * constant_dofs).cwiseAbs().maxCoeff() >
      1e-10L * nrm * constant_dofs.cwiseAbs().maxCoeff())
    throw NumericalError("constant mode escapes the stiffness kernel on cell " +
                         std::to_string(cell));
  if (m0_out != nullptr) *m0_out = M0;
  return M;
}

} // namespace

Matrix build_D(const Mesh& mesh, int cell, const DofLayout& layout) {
  return detail::narrow(build_D_long(mesh, cell, layout));
}

Matrix build_B(const Mesh& mesh, int cell, const DofLayout& layout) {
  return detail::narrow(build_B_long(mesh, cell, layout));
}

Projector build_projector(const Matrix& D, const Matrix& B, int cell) {
  const ProjectorL p = build_projector_long(detail::widen(D), detail::widen(B), cell);
  return {detail::narrow(p.G), detail::narrow(p.Gtilde), detail::narrow(p.PiStar),
          detail::narrow(p.Pi)};
}

Matrix build_stabilization(const Mesh& mesh, int cell, const DofLayout& layout,
                           const Projector& proj, const Matrix& D, const Matrix& M0,
                           const StabilizationChoice& choice) {
  const ProjectorL pl = {detail::widen(proj.G), detail::widen(proj.Gtilde),
                         detail::widen(proj.PiStar), detail::widen(proj.Pi)};
  return detail::narrow(
      build_stabilization_long(mesh, cell, layout, pl, detail::widen(D), detail::widen(M0), choice));
}

Matrix build_stiffness(const Projector& proj, const Matrix& S, const Matrix& D, int cell) {
  const ProjectorL pl = {detail::widen(proj.G), detail::widen(proj.Gtilde),
                         detail::widen(proj.PiStar), detail::widen(proj.Pi)};
  return detail::narrow(assemble_stiffness_long(pl, detail::widen(S), detail::widen(D), nullptr, cell));
}

Vector build_load(const Mesh& mesh, int cell, const DofLayout& layout, const ScalarField& f,
                  int extra_degree) {
  const int k = layout.k;
  Vector load = Vector::Zero(layout.total);
  const CellGeometry& cg = mesh.cell_geometry(cell);
  if (k == 1) {
    // edge-average quadrature of the cell mean: (int_K f)/n on each face slot
    const QuadratureRule rule =
        cell_rule(mesh, cell, data_exactness(2 * k + std::max(extra_degree, 0)));
    const double integral = rule.integrate(f);
    for (int lf = 0; lf < layout.n_faces; ++lf)
      load[layout.face_block(lf)] = integral / layout.n_faces;
    return load;
  }
  // projection rule exactness 2(k-2) + extra + 4 = 2k + extra, the data default
  const Vector coeffs = l2_project_onto_cell_polys(f, mesh, cell, k - 2, extra_degree + 4);
  for (int t = 0; t < layout.cell_dofs; ++t) load[layout.cell_block() + t] = cg.measure * coeffs[t];
  return load;
}

Vector build_projected_load(const Mesh& mesh, int cell, const LocalElement& element,
                            const ScalarField& f, int extra_degree) {
  const int k = element.k;
  const DofLayout& layout = element.layout;
  const CellMonomialBasis cb = CellMonomialBasis::for_cell(mesh, cell, k);
  const QuadratureRule rule =
      cell_rule(mesh, cell, data_exactness(2 * k + std::max(extra_degree, 0)));
  const double measure = mesh.cell_geometry(cell).measure;

  // moment part P^{k-2}(f) on the internal dofs, as in build_load
  Vector load = Vector::Zero(layout.total);
  Vector coeffs;
  if (layout.cell_dofs > 0) {
    coeffs = l2_project_onto_cell_polys(f, mesh, cell, k - 2, extra_degree + 4);
    for (int t = 0; t < layout.cell_dofs; ++t)
      load[layout.cell_block() + t] = measure * coeffs[t];
  }

  // remainder f - P^{k-2}(f) tested against the projected function
  Vector b = Vector::Zero(cb.size());
  for (std::size_t q = 0; q < rule.points.size(); ++q) {
    const Vec3& x = rule.points[q];
    double r = f(x);
    for (int t = 0; t < layout.cell_dofs; ++t) r -= coeffs[t] * cb.value(t, x);
    const double wr = rule.weights[q] * r;
    for (int j = 0; j < cb.size(); ++j) b[j] += wr * cb.value(j, x);
  }
  load += element.proj.PiStar.transpose() * b;
  return load;
}

LoadKind load_kind_from_string(const std::string& name) {
  if (name == "moment") return LoadKind::Moment;
  if (name == "projected") return LoadKind::Projected;
  throw ValidationError("unknown load kind '" + name + "' (moment|projected)");
}

std::string to_string(LoadKind kind) {
  return kind == LoadKind::Moment ? "moment" : "projected";
}

LocalElement build_local_element(const Mesh& mesh, int cell, int k,
                                 const StabilizationChoice& stab) {
  LocalElement el;
  el.cell = cell;
  el.k = k;
  el.layout = build_dof_layout(mesh, cell, k);
  const MatrixL D = build_D_long(mesh, cell, el.layout);
  const MatrixL B = build_B_long(mesh, cell, el.layout);
  const ProjectorL proj = build_projector_long(D, B, cell);
  const MatrixL M0 = proj.PiStar.transpose() * proj.Gtilde * proj.PiStar;
  const MatrixL S = build_stabilization_long(mesh, cell, el.layout, proj, D, M0, stab);
  MatrixL M0_check;
  const MatrixL M = assemble_stiffness_long(proj, S, D, &M0_check, cell);

  el.D = detail::narrow(D);
  el.B = detail::narrow(B);
  el.proj = {detail::narrow(proj.G), detail::narrow(proj.Gtilde), detail::narrow(proj.PiStar),
             detail::narrow(proj.Pi)};
  el.S = detail::narrow(S);
  el.M0 = detail::narrow(M0);
  el.M = detail::narrow(M);
  return el;
}

std::vector<LocalElement> build_all_elements(const Mesh& mesh, int k,
                                             const StabilizationChoice& stab, int threads) {
  const int n_cells = mesh.n_cells();
  std::vector<LocalElement> elements(n_cells);
  const int n_threads = std::max(1, std::min(threads, n_cells));
  if (n_threads == 1) {
    for (int c = 0; c < n_cells; ++c) elements[c] = build_local_element(mesh, c, k, stab);
    return elements;
  }
  std::vector<std::exception_ptr> errors(n_cells);
  std::vector<std::thread> pool;
  pool.reserve(n_threads);
  for (int t = 0; t < n_threads; ++t) {
    pool.emplace_back([&, t] {
      for (int c = t; c < n_cells; c += n_threads) {
        try {
          elements[c] = build_local_element(mesh, c, k, stab);
        } catch (...) {
          errors[c] = std::current_exception();
        }
      }
    });
  }
  for (std::thread& th : pool) th.join();
  for (int c = 0; c < n_cells; ++c)
    if (errors[c]) std::rethrow_exception(errors[c]);
  return elements;
}

namespace {

void write_matrix_17g(std::string& out, const Matrix& m) {
  char buf[40];
  out += "[";
  for (int i = 0; i < m.rows(); ++i) {
    out += i == 0 ? "[" : ",[";
    for (int j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof buf, "%.17g", m(i, j));
      if (j > 0) out += ",";
      out += buf;
    }
    out += "]";
  }
  out += "]";
}

} // namespace

void dump_elements_json(const Mesh& mesh, int k, const StabilizationChoice& stab,
                        const std::string& path, int cell) {
  std::string out;
  out += "{\"dimension\":" + std::to_string(mesh.dimension()) + ",\"k\":" + std::to_string(k);
  out += ",\"stabilization\":\"" + to_string(stab.kind) + "\",\"cells\":[";
  const int c0 = cell >= 0 ? cell : 0;
  const int c1 = cell >= 0 ? cell + 1 : mesh.n_cells();
  if (c1 > mesh.n_cells() || c0 < 0) throw ValidationError("cell index out of range");
  for (int c = c0; c < c1; ++c) {
    const LocalElement el = build_local_element(mesh, c, k, stab);
    if (c > c0) out += ",";
    out += "{\"cell\":" + std::to_string(c) + ",\"n_dofs\":" + std::to_string(el.layout.total);
    out += ",\"D\":";
    write_matrix_17g(out, el.D);
    out += ",\"B\":";
    write_matrix_17g(out, el.B);
    out += ",\"G\":";
    write_matrix_17g(out, el.proj.G);
    out += ",\"M\":";
    write_matrix_17g(out, el.M);
    out += "}";
  }
  out += "]}\n";
  std::ofstream f(path);
  if (!f) throw ValidationError("cannot open '" + path + "' for writing");
  f << out;
}

} // namespace ncvem
