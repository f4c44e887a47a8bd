// Mimetic-finite-difference side of the local algebra: the orthogonal
// projector onto range(D), the MFD stabilization (I-PiPerp) U (I-PiPerp),
// and executable checks of its interchangeability with the VEM stabilization.

#ifndef NCVEM_MFD_HPP
#define NCVEM_MFD_HPP

#include "ncvem/common.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace ncvem {

class Mesh;

/// PiPerp = D (D^T D)^{-1} D^T via Cholesky of D^T D. Throws on rank-deficient
/// D; warns when cond(D^T D) exceeds 1e12.
Matrix build_pi_perp(const Matrix& D);

/// M^MFD_1 = (I - PiPerp) U (I - PiPerp).
Matrix mfd_stabilization(const Matrix& U, const Matrix& PiPerp);

struct ProjectorRelationsReport {
  double res_pi_piperp = 0.0;    // || Pi PiPerp - PiPerp ||
  double res_pit_piperp = 0.0;   // || Pi^T PiPerp - Pi^T ||
  double res_piperp_pi = 0.0;    // || PiPerp Pi - Pi ||
  double max_residual = 0.0;     // all Frobenius, relative
};

ProjectorRelationsReport verify_projector_relations(const Matrix& Pi, const Matrix& PiPerp);

struct MfdToVemResult {
  Matrix S;        // := M^MFD_1
  Matrix Mvem1;    // (I-Pi)^T S (I-Pi)
  double residual; // ||Mvem1 - Mmfd1|| / max(||Mmfd1||, scale), Frobenius
};

/// Reconstructs the MFD stabilization through the VEM form by taking
/// S = M^MFD_1. `scale` floors the residual denominator (pass ||U|| so the
/// degenerate N = n_P case, where both sides vanish, reports ~0).
MfdToVemResult match_vem_to_mfd(const Matrix& Mmfd1, const Matrix& Pi, double scale = 0.0);

struct VemToMfdResult {
  Matrix U;        // := (I-Pi)^T S (I-Pi)
  Matrix Mmfd1;    // (I-PiPerp) U (I-PiPerp)
  double residual; // vs U, Frobenius, denominator floored by `scale`
  bool input_spd_on_complement = true;  // flagged, not thrown
};

/// Reconstructs the VEM stabilization through the MFD form by taking
/// U = (I-Pi)^T S (I-Pi). `scale` as in match_vem_to_mfd (pass ||S||).
VemToMfdResult match_mfd_to_vem(const Matrix& S, const Matrix& Pi, const Matrix& PiPerp,
                                double scale = 0.0);

/// Reproducible SPD parameter matrix A^T A + eps I with eps = 1e-3 ||A^T A||.
Matrix random_spd_matrix(int n, std::mt19937_64& rng);

struct MfdCheckReport {
  int k = 1;
  int trials = 0;
  std::uint64_t seed = 0;
  double max_relation_residual = 0.0;
  double max_mfd_to_vem_residual = 0.0;
  double max_vem_to_mfd_residual = 0.0;
  nlohmann::json trials_json;
};

/// Randomized coverage over the cells of a mesh; one trial = one (cell, SPD
/// matrix) pair checked through both reconstruction directions and the
/// projector relations.
MfdCheckReport run_mfd_check(const Mesh& mesh, int k, int trials, std::uint64_t seed);

nlohmann::json mfd_report_to_json(const MfdCheckReport& report);

} // namespace ncvem

#endif
