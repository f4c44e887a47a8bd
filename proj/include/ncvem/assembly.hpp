// Global DoF numbering, Dirichlet data via boundary face moments, sparse SPD
// assembly and linear solve.

#ifndef NCVEM_ASSEMBLY_HPP
#define NCVEM_ASSEMBLY_HPP

#include "ncvem/common.hpp"
#include "ncvem/element.hpp"
#include "ncvem/mesh.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace ncvem {

/// Global numbering: all face-moment dofs first (shared between the two cells
/// incident to a face), then per-cell internal moment dofs.
struct DofMap {
  int dim = 2;
  int k = 1;
  int n_faces = 0;
  int n_cells = 0;
  int face_dofs = 0;
  int cell_dofs = 0;
  int total = 0;

  int face_offset(int f) const { return f * face_dofs; }
  int cell_offset(int c) const { return n_faces * face_dofs + c * cell_dofs; }

  /// Global index of a local dof of cell c (layout as in DofLayout).
  int global_index(const Mesh& mesh, int c, int local) const;
};

DofMap build_dof_map(const Mesh& mesh, int k);

struct DirichletData {
  std::vector<char> constrained;  // size = total dofs
  std::vector<double> values;
  int count = 0;
};

/// Constrains every boundary face's moment dofs to (1/|e|) int_e g m ds, the
/// dofs of the face-wise L2 projection of g.
DirichletData apply_dirichlet(const Mesh& mesh, const DofMap& dofmap, const ScalarField& g,
                              int k, int extra_degree = 4);

struct LinearSystem {
  Eigen::SparseMatrix<double> A;  // full symmetric operator
  Vector b;
  DirichletData bc;
};

/// Scatters the local stiffness blocks and load vectors; the summation order
/// is fixed (cells in ascending order), so the result does not depend on how
/// the elements were computed.
LinearSystem assemble(const Mesh& mesh, const DofMap& dofmap,
                      const std::vector<LocalElement>& elements,
                      const std::vector<Vector>& loads, const DirichletData& bc);

/// Convenience: build elements (optionally threaded), loads, Dirichlet data
/// and the assembled system in one call.
LinearSystem assemble(const Mesh& mesh, const DofMap& dofmap, int k,
                      const StabilizationChoice& stab, const ScalarField& f,
                      const ScalarField& g, int threads = 1);

struct SolveInfo {
  int iterations = 0;  // 0 when the dense path is taken
  double residual = 0.0;
  bool used_dense = false;
  std::vector<double> residual_history;
};

/// Eliminates the constrained dofs symmetrically and solves the free-free
/// block: dense Cholesky for up to 2000 free dofs, otherwise diagonally
/// preconditioned conjugate gradients (relative residual <= tol, at most
/// 20 * N_free iterations). Returns the full dof vector including the
/// constrained values.
Vector solve(const LinearSystem& system, SolveInfo* info = nullptr, double tol = 1e-12);

/// Dofs of an explicit function in the global numbering (face and cell
/// moments by quadrature).
Vector global_dofs_of_function(const Mesh& mesh, const DofMap& dofmap, int k,
                               const ScalarField& f, int extra_degree = 4);

/// Solution file: dof vector, DofMap description and per-cell projected
/// polynomial coefficients.
void write_solution_json(const std::string& path, const Mesh& mesh, const DofMap& dofmap,
                         const Vector& dofs, const std::vector<LocalElement>& elements);

} // namespace ncvem

#endif
