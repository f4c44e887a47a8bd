// ncvem command line: mesh generation and checking, Poisson solves on
// polytopal meshes, patch tests, convergence studies, MFD stabilization
// checks and per-element matrix dumps.

#include "ncvem/analysis.hpp"
#include "ncvem/mfd.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

using namespace ncvem;

namespace {

constexpr int kOrderCap2d = 4;
constexpr int kOrderCap3d = 3;

void check_order(int k, int dim, bool force) {
  if (k < 1) throw ValidationError("order must be >= 1");
  const int cap = dim == 2 ? kOrderCap2d : kOrderCap3d;
  if (k > cap && !force)
    throw ValidationError("order " + std::to_string(k) + " above the default cap " +
                          std::to_string(cap) + " for " + std::to_string(dim) +
                          "D; pass --force-order to override");
}

struct MeshGenArgs {
  std::string kind = "quad-structured";
  int res = 4;
  std::uint64_t seed = 1;
  std::string out;
  bool json = false;
};

struct MeshCheckArgs {
  std::string in;
  double rho = 0.1;
  bool json = false;
};

struct SolveArgs {
  std::string mesh;
  int k = 1;
  std::string problem = "sin2d";
  std::string stab = "mfd-trace";
  std::string load = "projected";
  std::string out = "sol.json";
  int threads = 1;
  double cg_tol = 1e-12;
  bool force_order = false;
  bool json = false;
};

struct ConvergeArgs {
  std::string problem = "sin2d";
  std::string kind = "tri-structured";
  int k = 1;
  std::vector<int> res;
  std::string out = "report.csv";
  std::string json_out;
  std::string stab = "mfd-trace";
  std::string load = "projected";
  std::uint64_t seed = 7;
  int threads = 1;
  double cg_tol = 1e-12;
  double energy_tol = 0.15;
  double l2_tol = 0.2;
  bool timing = false;
  bool force_order = false;
  bool json = false;
};

struct PatchArgs {
  std::string kind = "quad-distorted";
  int res = 4;
  int k = 1;
  int degree = -1;
  std::uint64_t seed = 1;
  std::string stab = "mfd-trace";
  bool force_order = false;
  bool json = false;
};

struct MfdArgs {
  std::string mesh;
  int k = 1;
  int trials = 20;
  std::uint64_t seed = 1;
  std::string out;
  bool force_order = false;
  bool json = false;  // reports are always JSON; accepted for uniformity
};

struct DumpArgs {
  std::string mesh;
  int k = 1;
  int cell = -1;
  std::string stab = "vem-identity";
  std::string out = "elements.json";
  bool force_order = false;
  bool json = false;
};

int run_mesh_gen(const MeshGenArgs& args) {
  const Mesh mesh = generate_mesh(mesh_kind_from_string(args.kind), args.res, args.seed);
  write_mesh(mesh, args.out);
  if (args.json) {
    nlohmann::json j = {{"out", args.out},
                        {"kind", args.kind},
                        {"resolution", args.res},
                        {"seed", args.seed},
                        {"dimension", mesh.dimension()},
                        {"vertices", mesh.n_vertices()},
                        {"faces", mesh.n_faces()},
                        {"cells", mesh.n_cells()}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << args.out << ": " << mesh.n_cells() << " cells, " << mesh.n_faces()
              << " faces, " << mesh.n_vertices() << " vertices\n";
  }
  return 0;
}

int run_mesh_check(const MeshCheckArgs& args) {
  const Mesh mesh = read_mesh(args.in);
  const RegularityReport report = check_regularity(mesh, args.rho);
  int heuristic = 0, non_star = 0;
  for (const CellRegularity& c : report.cells) {
    if (c.method == "heuristic") ++heuristic;
    if (!c.star_shaped) ++non_star;
  }
  if (args.json) {
    nlohmann::json j = {{"in", args.in},
                        {"rho_min", args.rho},
                        {"pass", report.pass},
                        {"h", report.h},
                        {"worst_edge_ratio", report.worst_ratio},
                        {"worst_cell", report.worst_cell},
                        {"heuristic_cells", heuristic},
                        {"non_star_cells", non_star}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << (report.pass ? "PASS" : "FAIL") << ": h = " << report.h
              << ", worst face/diameter ratio " << report.worst_ratio << " (cell "
              << report.worst_cell << "), " << non_star << " non-star cells, " << heuristic
              << " heuristic verdicts\n";
  }
  return 0;
}

int run_solve(const SolveArgs& args) {
  const Mesh mesh = read_mesh(args.mesh);
  check_order(args.k, mesh.dimension(), args.force_order);
  const ManufacturedProblem problem = problem_by_name(args.problem);
  if (problem.dim != mesh.dimension())
    throw ValidationError("problem '" + args.problem + "' is " + std::to_string(problem.dim) +
                          "D but the mesh is " + std::to_string(mesh.dimension()) + "D");
  StabilizationChoice stab;
  stab.kind = stabilization_from_string(args.stab);
  const LoadKind load = load_kind_from_string(args.load);

  const DofMap dofmap = build_dof_map(mesh, args.k);
  const std::vector<LocalElement> elements = build_all_elements(mesh, args.k, stab, args.threads);
  std::vector<Vector> loads(elements.size());
  for (int c = 0; c < mesh.n_cells(); ++c)
    loads[c] = load == LoadKind::Moment ? build_load(mesh, c, elements[c].layout, problem.f)
                                        : build_projected_load(mesh, c, elements[c], problem.f);
  const DirichletData bc = apply_dirichlet(mesh, dofmap, problem.g, args.k);
  const LinearSystem sys = assemble(mesh, dofmap, elements, loads, bc);
  SolveInfo info;
  const Vector dofs = solve(sys, &info, args.cg_tol);
  write_solution_json(args.out, mesh, dofmap, dofs, elements);

  const double e_err = energy_error(mesh, dofmap, elements, dofs, problem.grad_u);
  const double l_err = l2_error(mesh, dofmap, elements, dofs, problem.u);
  if (args.json) {
    nlohmann::json j = {{"out", args.out},
                        {"dofs", dofmap.total},
                        {"cg_iters", info.iterations},
                        {"used_dense", info.used_dense},
                        {"energy_error", e_err},
                        {"l2_error", l_err}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << args.out << ": " << dofmap.total << " dofs, "
              << (info.used_dense ? "dense solve" : std::to_string(info.iterations) + " CG iters")
              << ", energy error " << e_err << ", L2 error " << l_err << "\n";
  }
  return 0;
}

int run_converge(const ConvergeArgs& args) {
  const MeshKind kind = mesh_kind_from_string(args.kind);
  check_order(args.k, mesh_kind_is_3d(kind) ? 3 : 2, args.force_order);
  if (args.res.size() < 3) throw ValidationError("--res needs at least three resolutions");
  const ManufacturedProblem problem = problem_by_name(args.problem);
  ConvergenceOptions opts;
  opts.stab.kind = stabilization_from_string(args.stab);
  opts.load = load_kind_from_string(args.load);
  opts.seed = args.seed;
  opts.threads = args.threads;
  opts.cg_tol = args.cg_tol;
  opts.energy_tolerance = args.energy_tol;
  opts.l2_tolerance = args.l2_tol;
  opts.record_timing = args.timing;
  const ConvergenceReport report = run_convergence(problem, kind, args.k, args.res, opts);
  write_convergence_csv(report, args.out);
  const std::size_t dot = args.out.find_last_of('.');
  const std::string json_path = !args.json_out.empty() ? args.json_out
                                : dot == std::string::npos ? args.out + ".json"
                                                           : args.out.substr(0, dot) + ".json";
  write_convergence_json(report, json_path);
  if (args.json) {
    nlohmann::json j = {{"csv", args.out},           {"json", json_path},
                        {"complete", report.complete}, {"energy_rate", report.energy_rate},
                        {"l2_rate", report.l2_rate},   {"pass", report.pass}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << args.out << " and " << json_path << "\n";
    if (report.complete)
      std::cout << "energy rate " << report.energy_rate << " (expected "
                << report.expected_energy_rate << "), L2 rate " << report.l2_rate << " (expected "
                << report.expected_l2_rate << "), " << (report.pass ? "PASS" : "FAIL") << "\n";
  }
  if (!report.complete) throw NumericalError("convergence study aborted: " + report.error);
  return 0;
}

int run_patch(const PatchArgs& args) {
  const MeshKind kind = mesh_kind_from_string(args.kind);
  const int dim = mesh_kind_is_3d(kind) ? 3 : 2;
  check_order(args.k, dim, args.force_order);
  const int degree = args.degree < 0 ? args.k : args.degree;
  if (degree > args.k) throw ValidationError("--degree must not exceed --k");
  const Mesh mesh = generate_mesh(kind, args.res, args.seed);
  StabilizationChoice stab;
  stab.kind = stabilization_from_string(args.stab);
  double worst = 0.0;
  nlohmann::json rows = nlohmann::json::array();
  for (const PolynomialFunction& p : monomial_polynomials(dim, degree)) {
    const PatchTestResult r = run_patch_test(mesh, args.k, p, stab);
    worst = std::max(worst, r.max_dof_error);
    rows.push_back(r.max_dof_error);
  }
  const bool pass = worst <= 1e-9;
  if (args.json) {
    nlohmann::json j = {{"kind", args.kind}, {"resolution", args.res}, {"k", args.k},
                        {"degree", degree},  {"max_dof_error", worst}, {"pass", pass},
                        {"per_polynomial", rows}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << (pass ? "PASS" : "FAIL") << ": max dof error " << worst << " over "
              << rows.size() << " polynomials (k=" << args.k << ", " << args.kind << ")\n";
  }
  if (!pass) throw NumericalError("patch test exceeded 1e-9");
  return 0;
}

int run_mfd(const MfdArgs& args) {
  const Mesh mesh = read_mesh(args.mesh);
  check_order(args.k, mesh.dimension(), args.force_order);
  const MfdCheckReport report = run_mfd_check(mesh, args.k, args.trials, args.seed);
  const nlohmann::json j = mfd_report_to_json(report);
  if (!args.out.empty()) {
    std::ofstream f(args.out);
    if (!f) throw ValidationError("cannot open '" + args.out + "' for writing");
    f << j.dump(2) << "\n";
    std::cout << "wrote " << args.out << "\n";
  } else {
    std::cout << j.dump(2) << "\n";
  }
  return 0;
}

int run_dump(const DumpArgs& args) {
  const Mesh mesh = read_mesh(args.mesh);
  check_order(args.k, mesh.dimension(), args.force_order);
  StabilizationChoice stab;
  stab.kind = stabilization_from_string(args.stab);
  dump_elements_json(mesh, args.k, stab, args.out, args.cell);
  if (args.json) {
    nlohmann::json j = {{"out", args.out},
                        {"k", args.k},
                        {"cells", args.cell >= 0 ? 1 : mesh.n_cells()}};
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "wrote " << args.out << "\n";
  }
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"nonconforming virtual element solver on polygonal and polyhedral meshes"};
  app.require_subcommand(1);

  MeshGenArgs gen_args;
  MeshCheckArgs check_args;
  SolveArgs solve_args;
  ConvergeArgs conv_args;
  PatchArgs patch_args;
  MfdArgs mfd_args;
  DumpArgs dump_args;

  CLI::App* mesh_cmd = app.add_subcommand("mesh", "mesh generation and checks");
  mesh_cmd->require_subcommand(1);
  CLI::App* gen = mesh_cmd->add_subcommand("gen", "generate a mesh on the unit square/cube");
  gen->add_option("--kind", gen_args.kind,
                  "tri-structured|quad-structured|quad-distorted|hexagon-dominant|voronoi-2d|"
                  "cube-structured|tet-structured");
  gen->add_option("--res", gen_args.res, "resolution (cells per side)");
  gen->add_option("--seed", gen_args.seed, "seed for randomized kinds");
  gen->add_option("--out", gen_args.out, "output mesh JSON")->required();
  gen->add_flag("--json", gen_args.json, "machine-readable summary");

  CLI::App* check = mesh_cmd->add_subcommand("check", "shape-regularity report");
  check->add_option("--in", check_args.in, "mesh JSON")->required();
  check->add_option("--rho", check_args.rho, "face/diameter ratio threshold");
  check->add_flag("--json", check_args.json, "machine-readable report");

  CLI::App* solve_cmd = app.add_subcommand("solve", "solve a named problem on a mesh file");
  solve_cmd->add_option("--mesh", solve_args.mesh, "mesh JSON")->required();
  solve_cmd->add_option("--k", solve_args.k, "order (>= 1)");
  solve_cmd->add_option("--problem", solve_args.problem, "problem name (see README)");
  solve_cmd->add_option("--stab", solve_args.stab, "vem-identity|mfd-trace");
  solve_cmd->add_option("--load", solve_args.load, "moment|projected");
  solve_cmd->add_option("--out", solve_args.out, "solution JSON");
  solve_cmd->add_option("--threads", solve_args.threads, "element build threads");
  solve_cmd->add_option("--cg-tol", solve_args.cg_tol, "CG relative residual");
  solve_cmd->add_flag("--force-order", solve_args.force_order, "lift the default order cap");
  solve_cmd->add_flag("--json", solve_args.json, "machine-readable summary");

  CLI::App* conv = app.add_subcommand("converge", "convergence study over a mesh family");
  conv->add_option("--problem", conv_args.problem, "problem name");
  conv->add_option("--kind", conv_args.kind, "mesh kind");
  conv->add_option("--k", conv_args.k, "order");
  conv->add_option("--res", conv_args.res, "resolutions, e.g. 4,8,16,32")
      ->required()
      ->delimiter(',');
  conv->add_option("--out", conv_args.out, "CSV path");
  conv->add_option("--json-out", conv_args.json_out, "rates JSON path (default: CSV with .json)");
  conv->add_option("--stab", conv_args.stab, "vem-identity|mfd-trace");
  conv->add_option("--load", conv_args.load, "moment|projected");
  conv->add_option("--seed", conv_args.seed, "mesh seed");
  conv->add_option("--threads", conv_args.threads, "element build threads");
  conv->add_option("--cg-tol", conv_args.cg_tol, "CG relative residual");
  conv->add_option("--energy-tol", conv_args.energy_tol, "energy rate tolerance");
  conv->add_option("--l2-tol", conv_args.l2_tol, "L2 rate tolerance");
  conv->add_flag("--timing", conv_args.timing, "record wall_ms in the CSV (non-reproducible)");
  conv->add_flag("--force-order", conv_args.force_order, "lift the default order cap");
  conv->add_flag("--json", conv_args.json, "machine-readable summary");

  CLI::App* patch = app.add_subcommand("patch-test", "polynomial exactness check");
  patch->add_option("--kind", patch_args.kind, "mesh kind");
  patch->add_option("--res", patch_args.res, "resolution");
  patch->add_option("--k", patch_args.k, "order");
  patch->add_option("--degree", patch_args.degree, "polynomial degree (default k)");
  patch->add_option("--seed", patch_args.seed, "mesh seed");
  patch->add_option("--stab", patch_args.stab, "vem-identity|mfd-trace");
  patch->add_flag("--force-order", patch_args.force_order, "lift the default order cap");
  patch->add_flag("--json", patch_args.json, "machine-readable report");

  CLI::App* mfd = app.add_subcommand("mfd-check", "stabilization interchange residuals");
  mfd->add_option("--mesh", mfd_args.mesh, "mesh JSON")->required();
  mfd->add_option("--k", mfd_args.k, "order");
  mfd->add_option("--trials", mfd_args.trials, "number of randomized trials");
  mfd->add_option("--seed", mfd_args.seed, "trial seed");
  mfd->add_option("--out", mfd_args.out, "report JSON path (default: stdout)");
  mfd->add_flag("--force-order", mfd_args.force_order, "lift the default order cap");
  mfd->add_flag("--json", mfd_args.json, "machine-readable report (always on)");

  CLI::App* dump = app.add_subcommand("element-dump", "per-cell D, B, G, M matrices");
  dump->add_option("--mesh", dump_args.mesh, "mesh JSON")->required();
  dump->add_option("--k", dump_args.k, "order");
  dump->add_option("--cell", dump_args.cell, "single cell id (default: all)");
  dump->add_option("--stab", dump_args.stab, "vem-identity|mfd-trace");
  dump->add_option("--out", dump_args.out, "dump JSON path");
  dump->add_flag("--force-order", dump_args.force_order, "lift the default order cap");
  dump->add_flag("--json", dump_args.json, "machine-readable summary");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (gen->parsed()) return run_mesh_gen(gen_args);
    if (check->parsed()) return run_mesh_check(check_args);
    if (solve_cmd->parsed()) return run_solve(solve_args);
    if (conv->parsed()) return run_converge(conv_args);
    if (patch->parsed()) return run_patch(patch_args);
    if (mfd->parsed()) return run_mfd(mfd_args);
    if (dump->parsed()) return run_dump(dump_args);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
