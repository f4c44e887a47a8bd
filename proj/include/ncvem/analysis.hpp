// Verification harness: manufactured problems, energy/L2 error measures
// against the projected solution, patch tests and convergence-rate studies.

#ifndef NCVEM_ANALYSIS_HPP
#define NCVEM_ANALYSIS_HPP

#include "ncvem/assembly.hpp"
#include "ncvem/common.hpp"
#include "ncvem/element.hpp"
#include "ncvem/mesh.hpp"
#include "ncvem/multi_index.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace ncvem {

using VectorField = std::function<Vec3(const Vec3&)>;

/// Polynomial in 2 or 3 variables with exact gradient and Laplacian;
/// terms are (multi-index, coefficient) pairs over plain monomials x^s.
struct PolynomialFunction {
  int dim = 2;
  std::vector<std::pair<MultiIndex, double>> terms;

  double value(const Vec3& x) const;
  Vec3 gradient(const Vec3& x) const;
  double laplacian(const Vec3& x) const;
  int degree() const;

  ScalarField as_field() const;
};

struct ManufacturedProblem {
  std::string name;
  int dim = 2;
  double regularity = 99.0;  // Sobolev index s of u in H^{s+1}; large = smooth
  ScalarField u;
  VectorField grad_u;
  ScalarField laplacian_u;
  ScalarField f;  // forcing, -laplacian_u
  ScalarField g;  // boundary data, trace of u
};

ManufacturedProblem make_sin2d();
ManufacturedProblem make_sin3d();
ManufacturedProblem make_corner2d();  // r^{2/3}-type, rate-limited, informational
ManufacturedProblem make_polynomial_problem(const PolynomialFunction& p, const std::string& name);

/// Registry lookup: sin2d, sin3d, corner2d, poly2d-1..4, poly3d-1..3.
ManufacturedProblem problem_by_name(const std::string& name);
std::vector<std::string> problem_names();

/// Max |(-laplacian_u - f)| over `n_points` pseudo-random points in the unit
/// domain; analytic second derivatives, no differencing.
double check_problem_consistency(const ManufacturedProblem& p, int n_points = 32,
                                 std::uint64_t seed = 7);

/// Broken energy error sqrt(sum_K ||grad u - grad (Pi u_h)||^2_{0,K}) using
/// the projected polynomial in place of the virtual solution.
double energy_error(const Mesh& mesh, const DofMap& dofmap,
                    const std::vector<LocalElement>& elements, const Vector& dofs,
                    const VectorField& grad_u);

double l2_error(const Mesh& mesh, const DofMap& dofmap,
                const std::vector<LocalElement>& elements, const Vector& dofs,
                const ScalarField& u);

/// Cellwise best-approximation error of u in the energy seminorm by P^k
/// gradients (reference scale for the Galerkin error bound monitor).
double best_energy_approximation_error(const Mesh& mesh, int k, const VectorField& grad_u);

struct PatchTestResult {
  double max_dof_error = 0.0;  // scaled by max(1, ||exact dofs||_inf)
  int n_dofs = 0;
};

/// Solves with f = -Delta p, g = p and compares the solved dofs against the
/// dofs of p.
PatchTestResult run_patch_test(const Mesh& mesh, int k, const PolynomialFunction& p,
                               const StabilizationChoice& stab = StabilizationChoice::vem_identity());

/// All monomials of degree <= max_degree in `dim` variables, as polynomial
/// solutions for patch sweeps.
std::vector<PolynomialFunction> monomial_polynomials(int dim, int max_degree);

struct ConvergenceRow {
  int resolution = 0;
  double h = 0.0;
  int n_dofs = 0;
  double energy_error = 0.0;
  double l2_error = 0.0;
  int cg_iterations = 0;
  long long wall_ms = 0;
};

struct ConvergenceReport {
  std::string problem;
  MeshKind kind = MeshKind::TriStructured;
  int k = 1;
  StabilizationKind stab = StabilizationKind::VemIdentity;
  std::uint64_t seed = 0;
  std::vector<ConvergenceRow> rows;
  double energy_rate = 0.0;
  double l2_rate = 0.0;
  double expected_energy_rate = 0.0;
  double expected_l2_rate = 0.0;
  double energy_tolerance = 0.15;
  double l2_tolerance = 0.2;
  bool pass = false;
  bool complete = false;     // false when a resolution failed
  std::string error;         // failure message for partial reports
};

struct ConvergenceOptions {
  StabilizationChoice stab = StabilizationChoice::vem_identity();
  LoadKind load = LoadKind::Projected;
  std::uint64_t seed = 1;
  int threads = 1;
  double cg_tol = 1e-12;
  double energy_tolerance = 0.15;
  double l2_tolerance = 0.2;
  bool record_timing = false;
};

/// Full pipeline per resolution; rates are least-squares slopes of log error
/// vs log h over the finest three points. A solver failure aborts with a
/// partial report (complete = false).
ConvergenceReport run_convergence(const ManufacturedProblem& problem, MeshKind kind, int k,
                                  const std::vector<int>& resolutions,
                                  const ConvergenceOptions& options = {});

/// CSV with columns h,dofs,energy_error,l2_error,cg_iters,wall_ms. wall_ms is
/// zero unless the report recorded timing, keeping outputs reproducible.
void write_convergence_csv(const ConvergenceReport& report, const std::string& path);
void write_convergence_json(const ConvergenceReport& report, const std::string& path);

} // namespace ncvem

#endif
