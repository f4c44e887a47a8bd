// The local nonconforming virtual element of order k on a polytopal cell.
//
// Degrees of freedom are scaled face moments against M^{k-1}(e) and scaled
// cell moments against M^{k-2}(K). The element assembles the matrices
//   D   (N x nP)  dofs of the cell monomials,
//   B   (nP x N)  energy pairings <grad m_i, grad psi_j> via integration by
//                 parts, plus the projector's mean condition in row 0,
//   G = B*D, Gt (G with row 0 zeroed),
//   PiStar = G^{-1} B (dofs -> polynomial coefficients),
//   Pi = D*PiStar    (dof-form projector),
// and the stiffness M = PiStar^T Gt PiStar + (I-Pi)^T S (I-Pi).
// The virtual basis functions themselves are never evaluated.

#ifndef NCVEM_ELEMENT_HPP
#define NCVEM_ELEMENT_HPP

#include "ncvem/common.hpp"
#include "ncvem/mesh.hpp"
#include "ncvem/polybasis.hpp"

#include <string>
#include <vector>

namespace ncvem {

/// Per-cell DoF bookkeeping: face blocks in cell-local face order (graded-lex
/// within a face), then the cell-moment block.
struct DofLayout {
  int dim = 2;
  int k = 1;
  int n_faces = 0;
  int face_dofs = 0;  // dim M^{k-1}(e)
  int cell_dofs = 0;  // dim M^{k-2}(K)
  int total = 0;

  int face_block(int local_face) const { return local_face * face_dofs; }
  int cell_block() const { return n_faces * face_dofs; }
};

DofLayout build_dof_layout(const Mesh& mesh, int cell, int k);

enum class StabilizationKind { VemIdentity, MfdTrace, Custom };

struct StabilizationChoice {
  StabilizationKind kind = StabilizationKind::VemIdentity;
  Matrix custom;  // used when kind == Custom

  static StabilizationChoice vem_identity() { return {StabilizationKind::VemIdentity, {}}; }
  static StabilizationChoice mfd_trace() { return {StabilizationKind::MfdTrace, {}}; }
  static StabilizationChoice custom_matrix(Matrix s);
};

StabilizationKind stabilization_from_string(const std::string& name);
std::string to_string(StabilizationKind kind);

struct Projector {
  Matrix G;
  Matrix Gtilde;
  Matrix PiStar;  // nP x N
  Matrix Pi;      // N x N
};

struct LocalElement {
  int cell = -1;
  int k = 1;
  DofLayout layout;
  Matrix D;
  Matrix B;
  Projector proj;
  Matrix S;
  Matrix M0;  // consistency term
  Matrix M;   // M0 + (I-Pi)^T S (I-Pi)
};

/// Face moments (1/|e|) int_e f m ds in cell-local order, then cell moments
/// (1/|K|) int_K f m dx. quadrature_exactness < 0 selects 2k+4 (data default).
Vector compute_dofs_of_function(const Mesh& mesh, int cell, const DofLayout& layout,
                                const ScalarField& f, int quadrature_exactness = -1);

Matrix build_D(const Mesh& mesh, int cell, const DofLayout& layout);
Matrix build_B(const Mesh& mesh, int cell, const DofLayout& layout);

/// G = B*D, its zeroed-first-row variant, and both forms of the energy
/// projector. Throws if G is singular (a unisolvence violation); warns on
/// condition numbers above 1e12.
Projector build_projector(const Matrix& D, const Matrix& B, int cell = -1);

Matrix build_stabilization(const Mesh& mesh, int cell, const DofLayout& layout,
                           const Projector& proj, const Matrix& D, const Matrix& M0,
                           const StabilizationChoice& choice);

/// M = PiStar^T Gt PiStar + (I-Pi)^T S (I-Pi); validates symmetry, positive
/// semidefiniteness and that the constant dof vector (column 0 of D) is in the
/// kernel.
Matrix build_stiffness(const Projector& proj, const Matrix& S, const Matrix& D, int cell = -1);

/// Local right-hand side: for k >= 2 the cell-moment entries |K| c_i of the
/// expansion P^{k-2}_K(f) = sum c_i m_i; for k = 1 the value (int_K f)/n on
/// each face's zeroth-moment slot.
Vector build_load(const Mesh& mesh, int cell, const DofLayout& layout, const ScalarField& f,
                  int extra_degree = 4);

/// Alternative right-hand side tested against the projected function:
/// load_i = int_K f (Pi m)_i, i.e. PiStar^T b with b_j = int_K f m_j. Same
/// polynomial consistency, smaller data-consistency error on smooth forcing.
Vector build_projected_load(const Mesh& mesh, int cell, const LocalElement& element,
                            const ScalarField& f, int extra_degree = 4);

enum class LoadKind { Moment, Projected };
LoadKind load_kind_from_string(const std::string& name);
std::string to_string(LoadKind kind);

LocalElement build_local_element(const Mesh& mesh, int cell, int k,
                                 const StabilizationChoice& stab);

/// All cells, optionally in parallel. Results are independent of the thread
/// count.
std::vector<LocalElement> build_all_elements(const Mesh& mesh, int k,
                                             const StabilizationChoice& stab, int threads = 1);

/// Debug dump of per-cell D, B, G, M to JSON with 17 significant digits,
/// row-major. cell < 0 dumps every cell.
void dump_elements_json(const Mesh& mesh, int k, const StabilizationChoice& stab,
                        const std::string& path, int cell = -1);

} // namespace ncvem

#endif
