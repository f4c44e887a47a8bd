#include "ncvem/mfd.hpp"

#include "detail_linalg.hpp"
#include "ncvem/element.hpp"
#include "ncvem/mesh.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <map>

namespace ncvem {

using detail::MatrixL;

namespace {

double rel_fro(const MatrixL& difference, const MatrixL& reference, double scale = 0.0) {
  const double ref = std::max(static_cast<double>(reference.norm()), scale);
  return static_cast<double>(difference.norm()) / (ref > 0.0 ? ref : 1.0);
}

} // namespace

Matrix build_pi_perp(const Matrix& D) {
  return detail::narrow(detail::pi_perp_long(detail::widen(D)));
}

Matrix mfd_stabilization(const Matrix& U, const Matrix& PiPerp) {
  const MatrixL P = MatrixL::Identity(U.rows(), U.cols()) - detail::widen(PiPerp);
  return detail::narrow(P * detail::widen(U) * P);
}

ProjectorRelationsReport verify_projector_relations(const Matrix& Pi, const Matrix& PiPerp) {
  const MatrixL P = detail::widen(Pi);
  const MatrixL Q = detail::widen(PiPerp);
  ProjectorRelationsReport r;
  r.res_pi_piperp = rel_fro(P * Q - Q, Q);
  r.res_pit_piperp = rel_fro(P.transpose() * Q - P.transpose(), P.transpose());
  r.res_piperp_pi = rel_fro(Q * P - P, P);
  r.max_residual = std::max({r.res_pi_piperp, r.res_pit_piperp, r.res_piperp_pi});
  return r;
}

MfdToVemResult match_vem_to_mfd(const Matrix& Mmfd1, const Matrix& Pi, double scale) {
  const MatrixL S = detail::widen(Mmfd1);
  const MatrixL C = MatrixL::Identity(Pi.rows(), Pi.cols()) - detail::widen(Pi);
  const MatrixL Mvem1 = C.transpose() * S * C;
  MfdToVemResult out;
  out.S = Mmfd1;
  out.Mvem1 = detail::narrow(Mvem1);
  out.residual = rel_fro(Mvem1 - S, S, 1e-14 * scale);
  return out;
}

VemToMfdResult match_mfd_to_vem(const Matrix& S, const Matrix& Pi, const Matrix& PiPerp,
                                double scale) {
  const int n = static_cast<int>(S.rows());
  const MatrixL SL = detail::widen(S);
  const MatrixL C = MatrixL::Identity(n, n) - detail::widen(Pi);
  const MatrixL P = MatrixL::Identity(n, n) - detail::widen(PiPerp);
  const MatrixL U = C.transpose() * SL * C;
  const MatrixL Mmfd1 = P * U * P;
  VemToMfdResult out;
  out.U = detail::narrow(U);
  out.Mmfd1 = detail::narrow(Mmfd1);
  out.residual = rel_fro(Mmfd1 - U, U, 1e-14 * scale);

  // flag degenerate or indefinite inputs (rank of PiPerp = dim of the
  // polynomial subspace)
  const double nrm = S.cwiseAbs().maxCoeff();
  const int n_poly = static_cast<int>(std::lround(PiPerp.trace()));
  bool ok = (S - S.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * std::max(nrm, 1e-300);
  if (ok) {
    const MatrixL A = P * SL * P;
    Eigen::SelfAdjointEigenSolver<MatrixL> eig(0.5L * (A + A.transpose()));
    int positive = 0;
    for (int i = 0; i < n; ++i) {
      if (eig.eigenvalues()[i] < -1e-10L * std::max(nrm, 1e-300)) ok = false;
      if (eig.eigenvalues()[i] > 1e-12L * std::max(nrm, 1e-300)) ++positive;
    }
    if (positive < n - n_poly) ok = false;
  }
  out.input_spd_on_complement = ok;
  return out;
}

Matrix random_spd_matrix(int n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Matrix A(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) A(i, j) = unif(rng);
  Matrix ata = A.transpose() * A;
  const double eps = 1e-3 * ata.norm();
  ata += eps * Matrix::Identity(n, n);
  return ata;
}

MfdCheckReport run_mfd_check(const Mesh& mesh, int k, int trials, std::uint64_t seed) {
  if (trials < 1) throw ValidationError("mfd check needs at least one trial");
  MfdCheckReport report;
  report.k = k;
  report.trials = trials;
  report.seed = seed;
  report.trials_json = nlohmann::json::array();

  std::mt19937_64 rng(seed);
  std::map<int, LocalElement> cache;
  for (int t = 0; t < trials; ++t) {
    const int cell = static_cast<int>(rng() % static_cast<std::uint64_t>(mesh.n_cells()));
    auto it = cache.find(cell);
    if (it == cache.end())
      it = cache.emplace(cell, build_local_element(mesh, cell, k,
                                                   StabilizationChoice::vem_identity())).first;
    const LocalElement& el = it->second;
    const int n = el.layout.total;

    const Matrix pi_perp = build_pi_perp(el.D);
    const ProjectorRelationsReport relations =
        verify_projector_relations(el.proj.Pi, pi_perp);

    const Matrix U = random_spd_matrix(n, rng);
    const Matrix mmfd1 = mfd_stabilization(U, pi_perp);
    const MfdToVemResult part_i = match_vem_to_mfd(mmfd1, el.proj.Pi, U.norm());
    const VemToMfdResult part_ii = match_mfd_to_vem(el.S, el.proj.Pi, pi_perp, el.S.norm());

    report.max_relation_residual = std::max(report.max_relation_residual, relations.max_residual);
    report.max_mfd_to_vem_residual = std::max(report.max_mfd_to_vem_residual, part_i.residual);
    report.max_vem_to_mfd_residual = std::max(report.max_vem_to_mfd_residual, part_ii.residual);

    nlohmann::json row;
    row["trial"] = t;
    row["cell"] = cell;
    row["projector_relations"] = {relations.res_pi_piperp, relations.res_pit_piperp, relations.res_piperp_pi};
    row["mfd_to_vem_residual"] = part_i.residual;
    row["vem_to_mfd_residual"] = part_ii.residual;
    report.trials_json.push_back(std::move(row));
  }
  return report;
}

nlohmann::json mfd_report_to_json(const MfdCheckReport& report) {
  nlohmann::json j;
  j["k"] = report.k;
  j["trials"] = report.trials;
  j["seed"] = report.seed;
  j["max_relation_residual"] = report.max_relation_residual;
  j["max_mfd_to_vem_residual"] = report.max_mfd_to_vem_residual;
  j["max_vem_to_mfd_residual"] = report.max_vem_to_mfd_residual;
  j["pass"] = report.max_relation_residual <= 1e-12 && report.max_mfd_to_vem_residual <= 1e-12 &&
              report.max_vem_to_mfd_residual <= 1e-12;
  j["trials_detail"] = report.trials_json;
  return j;
}

} // namespace ncvem
