#include "ncvem/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <sstream>

namespace ncvem {

namespace {

std::string id_str(const char* what, int id) { return std::string(what) + " " + std::to_string(id); }

// Chains the signed edges of a 2D cell into the counterclockwise vertex loop.
std::vector<int> chain_cell_loop(const std::vector<std::vector<int>>& faces, const CellFaces& cf,
                                 int cell_id) {
  const int n = static_cast<int>(cf.faces.size());
  auto directed = [&](int i) -> std::pair<int, int> {
    const std::vector<int>& fv = faces[cf.faces[i]];
    return cf.signs[i] > 0 ? std::make_pair(fv[0], fv[1]) : std::make_pair(fv[1], fv[0]);
  };
  std::vector<char> used(n, 0);
  std::vector<int> loop;
  loop.reserve(n);
  auto [start, current] = directed(0);
  used[0] = 1;
  loop.push_back(start);
  for (int step = 1; step < n; ++step) {
    loop.push_back(current);
    bool found = false;
    for (int i = 0; i < n; ++i) {
      if (used[i]) continue;
      auto [a, b] = directed(i);
      if (a == current) {
        current = b;
        used[i] = 1;
        found = true;
        break;
      }
    }
    if (!found)
      throw ValidationError(id_str("cell", cell_id) + ": edges do not form a closed loop");
  }
  if (current != start)
    throw ValidationError(id_str("cell", cell_id) + ": edges do not close up");
  return loop;
}

double polygon_signed_area_2d(const std::vector<Vec3>& loop) {
  double a2 = 0.0;
  const int n = static_cast<int>(loop.size());
  for (int i = 0; i < n; ++i) {
    const Vec3& p = loop[i];
    const Vec3& q = loop[(i + 1) % n];
    a2 += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a2;
}

Vec3 polygon_centroid_2d(const std::vector<Vec3>& loop, double area) {
  Vec3 c = Vec3::Zero();
  const int n = static_cast<int>(loop.size());
  for (int i = 0; i < n; ++i) {
    const Vec3& p = loop[i];
    const Vec3& q = loop[(i + 1) % n];
    const double cross = p.x() * q.y() - q.x() * p.y();
    c.x() += (p.x() + q.x()) * cross;
    c.y() += (p.y() + q.y()) * cross;
  }
  return c / (6.0 * area);
}

double max_pairwise_distance(const std::vector<Vec3>& pts) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j)
      d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
  return std::sqrt(d2);
}

} // namespace

Mesh::Mesh(int dimension, std::vector<Vec3> vertices, std::vector<std::vector<int>> faces,
           std::vector<CellFaces> cells)
    : dim_(dimension),
      vertices_(std::move(vertices)),
      faces_(std::move(faces)),
      cells_(std::move(cells)) {
  validate_and_build();
}

void Mesh::validate_and_build() {
  if (dim_ != 2 && dim_ != 3) throw ValidationError("mesh dimension must be 2 or 3");
  if (vertices_.empty()) throw ValidationError("mesh has no vertices");
  if (faces_.empty()) throw ValidationError("mesh has no faces");
  if (cells_.empty()) throw ValidationError("mesh has no cells");

  const int nv = n_vertices();
  for (int f = 0; f < n_faces(); ++f) {
    const std::vector<int>& fv = faces_[f];
    if (dim_ == 2 && fv.size() != 2)
      throw ValidationError(id_str("face", f) + ": 2D faces are edges with two vertices");
    if (dim_ == 3 && fv.size() < 3)
      throw ValidationError(id_str("face", f) + ": 3D faces need at least three vertices");
    std::set<int> distinct(fv.begin(), fv.end());
    if (distinct.size() != fv.size())
      throw ValidationError(id_str("face", f) + ": repeated vertex");
    for (int v : fv)
      if (v < 0 || v >= nv) throw ValidationError(id_str("face", f) + ": vertex index out of range");
  }

  // Face-cell incidence; every face is used by one or two cells, with opposite
  // orientation signs when shared.
  face_cells_.assign(faces_.size(), {-1, -1});
  std::vector<std::array<int, 2>> face_signs(faces_.size(), {0, 0});
  for (int c = 0; c < n_cells(); ++c) {
    const CellFaces& cf = cells_[c];
    if (cf.faces.empty()) throw ValidationError(id_str("cell", c) + ": empty face list");
    if (cf.faces.size() != cf.signs.size())
      throw ValidationError(id_str("cell", c) + ": faces/signs size mismatch");
    std::set<int> distinct(cf.faces.begin(), cf.faces.end());
    if (distinct.size() != cf.faces.size())
      throw ValidationError(id_str("cell", c) + ": repeated face");
    for (std::size_t i = 0; i < cf.faces.size(); ++i) {
      const int f = cf.faces[i];
      if (f < 0 || f >= n_faces())
        throw ValidationError(id_str("cell", c) + ": face index out of range");
      if (cf.signs[i] != 1 && cf.signs[i] != -1)
        throw ValidationError(id_str("cell", c) + ": orientation signs must be +1 or -1");
      if (face_cells_[f][0] < 0) {
        face_cells_[f][0] = c;
        face_signs[f][0] = cf.signs[i];
      } else if (face_cells_[f][1] < 0) {
        face_cells_[f][1] = c;
        face_signs[f][1] = cf.signs[i];
      } else {
        throw ValidationError(id_str("face", f) + ": referenced by more than two cells");
      }
    }
  }
  for (int f = 0; f < n_faces(); ++f) {
    if (face_cells_[f][0] < 0)
      throw ValidationError(id_str("face", f) + ": not referenced by any cell");
    if (face_cells_[f][1] >= 0 && face_signs[f][0] * face_signs[f][1] != -1)
      throw ValidationError(id_str("face", f) + ": incident cells must use opposite orientations");
  }

  // Face geometry.
  face_geom_.resize(faces_.size());
  for (int f = 0; f < n_faces(); ++f) {
    const std::vector<int>& fv = faces_[f];
    FaceGeometry& g = face_geom_[f];
    if (dim_ == 2) {
      const Vec3& a = vertices_[fv[0]];
      const Vec3& b = vertices_[fv[1]];
      g.measure = (b - a).norm();
      g.diameter = g.measure;
      g.centroid = 0.5 * (a + b);
      if (g.measure <= 0.0) throw ValidationError(id_str("face", f) + ": zero length");
      const Vec3 t = (b - a) / g.measure;
      g.normal = Vec3(t.y(), -t.x(), 0.0);
    } else {
      std::vector<Vec3> pts;
      pts.reserve(fv.size());
      for (int v : fv) pts.push_back(vertices_[v]);
      Vec3 newell = Vec3::Zero();
      for (std::size_t i = 0; i < pts.size(); ++i)
        newell += pts[i].cross(pts[(i + 1) % pts.size()]);
      const double area = 0.5 * newell.norm();
      if (area <= 0.0) throw ValidationError(id_str("face", f) + ": zero area");
      g.measure = area;
      g.normal = newell.normalized();
      g.diameter = max_pairwise_distance(pts);
      // centroid through the in-plane fan around the vertex mean
      Vec3 mean = Vec3::Zero();
      for (const Vec3& p : pts) mean += p;
      mean /= static_cast<double>(pts.size());
      Vec3 weighted = Vec3::Zero();
      double asum = 0.0;
      for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec3& p = pts[i];
        const Vec3& q = pts[(i + 1) % pts.size()];
        const double tri2 = (p - mean).cross(q - mean).dot(g.normal);
        weighted += tri2 * (mean + p + q) / 3.0;
        asum += tri2;
      }
      g.centroid = weighted / asum;
      // planarity
      for (const Vec3& p : pts)
        if (std::abs((p - g.centroid).dot(g.normal)) > 1e-12 * g.diameter)
          throw ValidationError(id_str("face", f) + ": vertices are not coplanar");
    }
  }

  // Cell geometry + per-cell checks.
  cell_geom_.resize(cells_.size());
  cell_vertices_.resize(cells_.size());
  h_ = 0.0;
  for (int c = 0; c < n_cells(); ++c) {
    const CellFaces& cf = cells_[c];
    CellGeometry& g = cell_geom_[c];
    if (dim_ == 2) {
      std::vector<int> loop = chain_cell_loop(faces_, cf, c);
      std::vector<Vec3> pts;
      pts.reserve(loop.size());
      for (int v : loop) pts.push_back(vertices_[v]);
      const double area = polygon_signed_area_2d(pts);
      if (area <= 0.0)
        throw ValidationError(id_str("cell", c) + ": loop is not counterclockwise (bad signs?)");
      g.measure = area;
      g.centroid = polygon_centroid_2d(pts, area);
      g.diameter = max_pairwise_distance(pts);
      cell_vertices_[c] = std::move(loop);
    } else {
      std::set<int> vs;
      for (int f : cf.faces)
        for (int v : faces_[f]) vs.insert(v);
      cell_vertices_[c].assign(vs.begin(), vs.end());
      std::vector<Vec3> pts;
      pts.reserve(vs.size());
      for (int v : cell_vertices_[c]) pts.push_back(vertices_[v]);
      g.diameter = max_pairwise_distance(pts);
      Vec3 mean = Vec3::Zero();
      for (const Vec3& p : pts) mean += p;
      mean /= static_cast<double>(pts.size());
      // signed fan from the vertex mean; exact for consistently oriented
      // boundaries even when some sub-tetrahedra are negative
      double vol = 0.0;
      Vec3 weighted = Vec3::Zero();
      for (std::size_t lf = 0; lf < cf.faces.size(); ++lf) {
        const int f = cf.faces[lf];
        const FaceGeometry& fg = face_geom_[f];
        const std::vector<int>& fv = faces_[f];
        const int nfv = static_cast<int>(fv.size());
        for (int i = 0; i < nfv; ++i) {
          Vec3 p = vertices_[fv[i]];
          Vec3 q = vertices_[fv[(i + 1) % nfv]];
          if (cf.signs[lf] < 0) std::swap(p, q);
          const double v6 = (fg.centroid - mean).cross(p - mean).dot(q - mean);
          vol += v6 / 6.0;
          weighted += (v6 / 6.0) * (mean + fg.centroid + p + q) / 4.0;
        }
      }
      if (vol <= 0.0) throw ValidationError(id_str("cell", c) + ": non-positive volume");
      g.measure = vol;
      g.centroid = weighted / vol;
    }
    h_ = std::max(h_, g.diameter);

    // closed-boundary check: sum of |e| n_out vanishes for a watertight cell
    Vec3 nsum = Vec3::Zero();
    double msum = 0.0;
    for (std::size_t lf = 0; lf < cf.faces.size(); ++lf) {
      const FaceGeometry& fg = face_geom_[cf.faces[lf]];
      nsum += cf.signs[lf] * fg.measure * fg.normal;
      msum += fg.measure;
    }
    if (nsum.norm() > 1e-12 * msum)
      throw ValidationError(id_str("cell", c) + ": boundary faces do not close up");
  }
}

Vec3 Mesh::outward_normal(int c, int local_face) const {
  const CellFaces& cf = cells_[c];
  return cf.signs[local_face] * face_geom_[cf.faces[local_face]].normal;
}

Mesh Mesh::permuted_cells(const std::vector<int>& perm) const {
  if (perm.size() != cells_.size())
    throw ValidationError("cell permutation has the wrong length");
  std::vector<CellFaces> permuted;
  permuted.reserve(cells_.size());
  for (int p : perm) permuted.push_back(cells_.at(p));
  return Mesh(dim_, vertices_, faces_, std::move(permuted));
}

// ---------------------------------------------------------------------------
// generators
// ---------------------------------------------------------------------------

namespace {

// Builds faces/cells from per-cell vertex loops (2D) with shared-edge welding.
Mesh mesh_from_polygons(const std::vector<Vec3>& vertices,
                        const std::vector<std::vector<int>>& polygons) {
  std::map<std::pair<int, int>, int> edge_ids;
  std::vector<std::vector<int>> faces;
  std::vector<CellFaces> cells;
  cells.reserve(polygons.size());
  for (const std::vector<int>& loop : polygons) {
    CellFaces cf;
    const int n = static_cast<int>(loop.size());
    for (int i = 0; i < n; ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % n];
      const auto key = std::minmax(a, b);
      auto it = edge_ids.find(key);
      if (it == edge_ids.end()) {
        const int id = static_cast<int>(faces.size());
        faces.push_back({a, b});
        edge_ids.emplace(key, id);
        cf.faces.push_back(id);
        cf.signs.push_back(1);
      } else {
        const int id = it->second;
        cf.faces.push_back(id);
        cf.signs.push_back(faces[id][0] == a ? 1 : -1);
      }
    }
    cells.push_back(std::move(cf));
  }
  return Mesh(2, vertices, std::move(faces), std::move(cells));
}

// Same for 3D: per-cell list of outward-oriented face loops.
Mesh mesh_from_polyhedra(const std::vector<Vec3>& vertices,
                         const std::vector<std::vector<std::vector<int>>>& cell_face_loops) {
  std::map<std::vector<int>, int> face_ids;
  std::vector<std::vector<int>> faces;
  std::vector<CellFaces> cells;
  cells.reserve(cell_face_loops.size());
  for (const auto& loops : cell_face_loops) {
    CellFaces cf;
    for (const std::vector<int>& loop : loops) {
      std::vector<int> key(loop);
      std::sort(key.begin(), key.end());
      auto it = face_ids.find(key);
      if (it == face_ids.end()) {
        const int id = static_cast<int>(faces.size());
        faces.push_back(loop);
        face_ids.emplace(std::move(key), id);
        cf.faces.push_back(id);
        cf.signs.push_back(1);
      } else {
        cf.faces.push_back(it->second);
        cf.signs.push_back(-1);
      }
    }
    cells.push_back(std::move(cf));
  }
  return Mesh(3, vertices, std::move(faces), std::move(cells));
}

int grid_id(int i, int j, int n) { return i + (n + 1) * j; }

Mesh generate_quad(int n, bool distorted, std::uint64_t seed) {
  std::vector<Vec3> vertices((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices[grid_id(i, j, n)] = Vec3(double(i) / n, double(j) / n, 0.0);
  if (distorted) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(-1.0, 1.0);
    const double amp = 0.15 / n;
    for (int j = 1; j < n; ++j)
      for (int i = 1; i < n; ++i) {
        Vec3& v = vertices[grid_id(i, j, n)];
        v.x() += amp * unif(rng);
        v.y() += amp * unif(rng);
      }
  }
  std::vector<std::vector<int>> polys;
  polys.reserve(n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      polys.push_back({grid_id(i, j, n), grid_id(i + 1, j, n), grid_id(i + 1, j + 1, n),
                       grid_id(i, j + 1, n)});
  return mesh_from_polygons(vertices, polys);
}

Mesh generate_tri(int n) {
  std::vector<Vec3> vertices((n + 1) * (n + 1));
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i)
      vertices[grid_id(i, j, n)] = Vec3(double(i) / n, double(j) / n, 0.0);
  std::vector<std::vector<int>> polys;
  polys.reserve(2 * n * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int a = grid_id(i, j, n), b = grid_id(i + 1, j, n);
      const int c = grid_id(i + 1, j + 1, n), d = grid_id(i, j + 1, n);
      polys.push_back({a, b, c});
      polys.push_back({a, c, d});
    }
  return mesh_from_polygons(vertices, polys);
}

// --- clipped Voronoi machinery ---------------------------------------------

using Poly2 = std::vector<Vec3>;

// Keep the half-plane (x - m) . u <= 0.
Poly2 clip_half_plane(const Poly2& poly, const Vec3& m, const Vec3& u) {
  Poly2 out;
  const int n = static_cast<int>(poly.size());
  for (int i = 0; i < n; ++i) {
    const Vec3& p = poly[i];
    const Vec3& q = poly[(i + 1) % n];
    const double dp = (p - m).dot(u);
    const double dq = (q - m).dot(u);
    if (dp <= 0.0) {
      out.push_back(p);
      if (dq > 0.0) out.push_back(p + (dp / (dp - dq)) * (q - p));
    } else if (dq <= 0.0) {
      out.push_back(p + (dp / (dp - dq)) * (q - p));
    }
  }
  return out;
}

std::vector<Poly2> voronoi_polygons(const std::vector<Vec3>& seeds) {
  const int n = static_cast<int>(seeds.size());
  std::vector<Poly2> polys(n);
  std::vector<std::pair<double, int>> order(n);
  for (int i = 0; i < n; ++i) {
    Poly2 poly = {Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(1, 1, 0), Vec3(0, 1, 0)};
    for (int j = 0; j < n; ++j) order[j] = {(seeds[j] - seeds[i]).squaredNorm(), j};
    std::sort(order.begin(), order.end());
    for (int jj = 1; jj < n; ++jj) {  // order[0] is the seed itself
      const int j = order[jj].second;
      const double dist = std::sqrt(order[jj].first);
      double radius2 = 0.0;
      for (const Vec3& p : poly) radius2 = std::max(radius2, (p - seeds[i]).squaredNorm());
      if (0.25 * dist * dist > radius2) break;  // bisector cannot reach the polygon
      poly = clip_half_plane(poly, 0.5 * (seeds[i] + seeds[j]), (seeds[j] - seeds[i]) / dist);
      if (poly.size() < 3)
        throw NumericalError("voronoi generator produced a degenerate cell");
    }
    polys[i] = std::move(poly);
  }
  return polys;
}

Mesh mesh_from_voronoi_polygons(const std::vector<Poly2>& polys) {
  // Weld coincident corners computed independently by neighboring cells.
  const double tol = 1e-7;
  std::map<std::pair<long long, long long>, std::vector<int>> grid;
  std::vector<Vec3> vertices;
  auto weld = [&](const Vec3& p) -> int {
    const long long kx = std::llround(p.x() / tol);
    const long long ky = std::llround(p.y() / tol);
    for (long long dx = -1; dx <= 1; ++dx)
      for (long long dy = -1; dy <= 1; ++dy) {
        auto it = grid.find({kx + dx, ky + dy});
        if (it == grid.end()) continue;
        for (int v : it->second)
          if ((vertices[v] - p).lpNorm<Eigen::Infinity>() <= tol) return v;
      }
    const int id = static_cast<int>(vertices.size());
    vertices.push_back(p);
    grid[{kx, ky}].push_back(id);
    return id;
  };
  std::vector<std::vector<int>> loops;
  loops.reserve(polys.size());
  for (const Poly2& poly : polys) {
    std::vector<int> loop;
    for (const Vec3& p : poly) {
      const int v = weld(p);
      if (loop.empty() || loop.back() != v) loop.push_back(v);
    }
    while (loop.size() > 1 && loop.back() == loop.front()) loop.pop_back();
    if (loop.size() < 3) throw NumericalError("voronoi generator produced a degenerate cell");
    loops.push_back(std::move(loop));
  }
  return mesh_from_polygons(vertices, loops);
}

Mesh generate_voronoi(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::vector<Vec3> seeds(static_cast<std::size_t>(n) * n);
  for (Vec3& s : seeds) {
    const double x = unif(rng);
    const double y = unif(rng);
    s = Vec3(x, y, 0.0);
  }
  // one Lloyd pass: move each seed to its clipped cell's centroid
  std::vector<Poly2> polys = voronoi_polygons(seeds);
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    const double area = polygon_signed_area_2d(polys[i]);
    seeds[i] = polygon_centroid_2d(polys[i], area);
  }
  return mesh_from_voronoi_polygons(voronoi_polygons(seeds));
}

Mesh generate_hexagon(int n) {
  // Voronoi diagram of a staggered triangular lattice: regular hexagons in the
  // interior, half-hexagons along the boundary.
  const double dx = 1.0 / n;
  const int rows = std::max(1, static_cast<int>(std::lround(1.0 / (dx * std::sqrt(3.0) / 2.0))));
  std::vector<Vec3> seeds;
  for (int j = 0; j <= rows; ++j) {
    const double y = double(j) / rows;
    if (j % 2 == 0) {
      for (int i = 0; i <= n; ++i) seeds.emplace_back(i * dx, y, 0.0);
    } else {
      for (int i = 0; i < n; ++i) seeds.emplace_back((i + 0.5) * dx, y, 0.0);
    }
  }
  return mesh_from_voronoi_polygons(voronoi_polygons(seeds));
}

int grid_id_3d(int i, int j, int k, int n) { return i + (n + 1) * (j + (n + 1) * k); }

Mesh generate_cube(int n) {
  std::vector<Vec3> vertices;
  vertices.resize(static_cast<std::size_t>(n + 1) * (n + 1) * (n + 1));
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        vertices[grid_id_3d(i, j, k, n)] = Vec3(double(i) / n, double(j) / n, double(k) / n);
  std::vector<std::vector<std::vector<int>>> cells;
  cells.reserve(static_cast<std::size_t>(n) * n * n);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        auto v = [&](int di, int dj, int dk) { return grid_id_3d(i + di, j + dj, k + dk, n); };
        // outward-oriented quadrilateral loops
        cells.push_back({
            {v(0, 0, 0), v(0, 0, 1), v(0, 1, 1), v(0, 1, 0)},  // -x
            {v(1, 0, 0), v(1, 1, 0), v(1, 1, 1), v(1, 0, 1)},  // +x
            {v(0, 0, 0), v(1, 0, 0), v(1, 0, 1), v(0, 0, 1)},  // -y
            {v(0, 1, 0), v(0, 1, 1), v(1, 1, 1), v(1, 1, 0)},  // +y
            {v(0, 0, 0), v(0, 1, 0), v(1, 1, 0), v(1, 0, 0)},  // -z
            {v(0, 0, 1), v(1, 0, 1), v(1, 1, 1), v(0, 1, 1)},  // +z
        });
      }
  return mesh_from_polyhedra(vertices, cells);
}

Mesh generate_tet(int n) {
  std::vector<Vec3> vertices;
  vertices.resize(static_cast<std::size_t>(n + 1) * (n + 1) * (n + 1));
  for (int k = 0; k <= n; ++k)
    for (int j = 0; j <= n; ++j)
      for (int i = 0; i <= n; ++i)
        vertices[grid_id_3d(i, j, k, n)] = Vec3(double(i) / n, double(j) / n, double(k) / n);
  static const int perms[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2}, {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<std::vector<std::vector<int>>> cells;
  cells.reserve(static_cast<std::size_t>(n) * n * n * 6);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        for (const auto& perm : perms) {
          // lattice path from the base corner: consistent across cubes
          int d[3] = {0, 0, 0};
          std::array<int, 4> t;
          t[0] = grid_id_3d(i, j, k, n);
          for (int step = 0; step < 3; ++step) {
            d[perm[step]] += 1;
            t[step + 1] = grid_id_3d(i + d[0], j + d[1], k + d[2], n);
          }
          const Vec3 e0 = vertices[t[1]] - vertices[t[0]];
          const Vec3 e1 = vertices[t[2]] - vertices[t[0]];
          const Vec3 e2 = vertices[t[3]] - vertices[t[0]];
          if (e0.cross(e1).dot(e2) < 0.0) std::swap(t[2], t[3]);
          // outward-oriented triangles of a positively oriented tet
          cells.push_back({{t[0], t[2], t[1]},
                           {t[0], t[1], t[3]},
                           {t[0], t[3], t[2]},
                           {t[1], t[2], t[3]}});
        }
  return mesh_from_polyhedra(vertices, cells);
}

} // namespace

MeshKind mesh_kind_from_string(const std::string& name) {
  if (name == "tri-structured") return MeshKind::TriStructured;
  if (name == "quad-structured") return MeshKind::QuadStructured;
  if (name == "quad-distorted") return MeshKind::QuadDistorted;
  if (name == "hexagon-dominant") return MeshKind::HexagonDominant;
  if (name == "voronoi-2d") return MeshKind::Voronoi2d;
  if (name == "cube-structured") return MeshKind::CubeStructured;
  if (name == "tet-structured") return MeshKind::TetStructured;
  throw ValidationError("unknown mesh kind '" + name + "'");
}

std::string to_string(MeshKind kind) {
  switch (kind) {
    case MeshKind::TriStructured: return "tri-structured";
    case MeshKind::QuadStructured: return "quad-structured";
    case MeshKind::QuadDistorted: return "quad-distorted";
    case MeshKind::HexagonDominant: return "hexagon-dominant";
    case MeshKind::Voronoi2d: return "voronoi-2d";
    case MeshKind::CubeStructured: return "cube-structured";
    case MeshKind::TetStructured: return "tet-structured";
  }
  return "?";
}

bool mesh_kind_is_3d(MeshKind kind) {
  return kind == MeshKind::CubeStructured || kind == MeshKind::TetStructured;
}

Mesh generate_mesh(MeshKind kind, int resolution, std::uint64_t seed) {
  if (resolution < 1) throw ValidationError("mesh resolution must be >= 1");
  switch (kind) {
    case MeshKind::TriStructured: return generate_tri(resolution);
    case MeshKind::QuadStructured: return generate_quad(resolution, false, seed);
    case MeshKind::QuadDistorted: return generate_quad(resolution, true, seed);
    case MeshKind::HexagonDominant: return generate_hexagon(resolution);
    case MeshKind::Voronoi2d: return generate_voronoi(resolution, seed);
    case MeshKind::CubeStructured: return generate_cube(resolution);
    case MeshKind::TetStructured: return generate_tet(resolution);
  }
  throw ValidationError("unsupported mesh kind");
}

// ---------------------------------------------------------------------------
// regularity
// ---------------------------------------------------------------------------

namespace {

bool point_in_polygon(const std::vector<Vec3>& loop, const Vec3& p) {
  bool inside = false;
  const int n = static_cast<int>(loop.size());
  for (int i = 0, j = n - 1; i < n; j = i++) {
    const Vec3& a = loop[i];
    const Vec3& b = loop[j];
    if ((a.y() > p.y()) != (b.y() > p.y()) &&
        p.x() < (b.x() - a.x()) * (p.y() - a.y()) / (b.y() - a.y()) + a.x())
      inside = !inside;
  }
  return inside;
}

double cross2(const Vec3& u, const Vec3& v) { return u.x() * v.y() - u.y() * v.x(); }

// Proper crossing of open segments, with a tolerance dead-band around touches.
bool segments_cross(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d, double tol) {
  const double d1 = cross2(b - a, c - a);
  const double d2 = cross2(b - a, d - a);
  const double d3 = cross2(d - c, a - c);
  const double d4 = cross2(d - c, b - c);
  return (d1 > tol && d2 < -tol) || (d1 < -tol && d2 > tol) ?
             ((d3 > tol && d4 < -tol) || (d3 < -tol && d4 > tol)) : false;
}

bool sees_whole_boundary(const std::vector<Vec3>& loop, const Vec3& p, double scale) {
  const int n = static_cast<int>(loop.size());
  const double tol = 1e-12 * scale * scale;
  for (int e = 0; e < n; ++e) {
    const Vec3& a = loop[e];
    const Vec3& b = loop[(e + 1) % n];
    const Vec3 targets[3] = {a, 0.5 * (a + b), b};
    for (const Vec3& t : targets)
      for (int o = 0; o < n; ++o) {
        if (o == e) continue;
        if (segments_cross(p, t, loop[o], loop[(o + 1) % n], tol)) return false;
      }
  }
  return true;
}

double distance_to_boundary_2d(const std::vector<Vec3>& loop, const Vec3& p) {
  double d = std::numeric_limits<double>::max();
  const int n = static_cast<int>(loop.size());
  for (int i = 0; i < n; ++i) {
    const Vec3& a = loop[i];
    const Vec3& b = loop[(i + 1) % n];
    const Vec3 ab = b - a;
    const double t = std::clamp((p - a).dot(ab) / ab.squaredNorm(), 0.0, 1.0);
    d = std::min(d, (p - (a + t * ab)).norm());
  }
  return d;
}

} // namespace

RegularityReport check_regularity(const Mesh& mesh, double rho_min) {
  RegularityReport report;
  report.h = mesh.mesh_size();
  report.cells.resize(mesh.n_cells());
  report.worst_ratio = std::numeric_limits<double>::max();
  bool all_star = true;
  int first_non_star = -1;
  for (int c = 0; c < mesh.n_cells(); ++c) {
    CellRegularity& r = report.cells[c];
    const CellFaces& cf = mesh.cell(c);
    const CellGeometry& cg = mesh.cell_geometry(c);
    r.worst_edge_ratio = std::numeric_limits<double>::max();
    for (int f : cf.faces)
      r.worst_edge_ratio = std::min(r.worst_edge_ratio, mesh.face_geometry(f).diameter / cg.diameter);
    if (r.worst_edge_ratio < report.worst_ratio) {
      report.worst_ratio = r.worst_edge_ratio;
      report.worst_cell = c;
    }

    bool convex = true;
    if (mesh.dimension() == 2) {
      const std::vector<int>& loop_ids = mesh.cell_vertices(c);
      std::vector<Vec3> loop;
      loop.reserve(loop_ids.size());
      for (int v : loop_ids) loop.push_back(mesh.vertex(v));
      const int n = static_cast<int>(loop.size());
      for (int i = 0; i < n && convex; ++i) {
        const Vec3& a = loop[i];
        const Vec3& b = loop[(i + 1) % n];
        const Vec3& d = loop[(i + 2) % n];
        if (cross2(b - a, d - b) < -1e-12 * cg.diameter * cg.diameter) convex = false;
      }
      if (convex) {
        r.star_shaped = true;
        r.method = "exact-convex";
        double dist = std::numeric_limits<double>::max();
        for (int i = 0; i < n; ++i) {
          const Vec3& a = loop[i];
          const Vec3& b = loop[(i + 1) % n];
          const Vec3 t = (b - a).normalized();
          dist = std::min(dist, std::abs(cross2(t, cg.centroid - a)));
        }
        r.rho_estimate = dist / cg.diameter;
      } else {
        // sample candidate star centers: centroid plus a coarse interior grid
        r.method = "heuristic";
        std::vector<Vec3> candidates = {cg.centroid};
        Vec3 lo = loop[0], hi = loop[0];
        for (const Vec3& p : loop) {
          lo = lo.cwiseMin(p);
          hi = hi.cwiseMax(p);
        }
        for (int gi = 1; gi <= 4; ++gi)
          for (int gj = 1; gj <= 4; ++gj) {
            Vec3 p(lo.x() + gi * (hi.x() - lo.x()) / 5.0, lo.y() + gj * (hi.y() - lo.y()) / 5.0,
                   0.0);
            if (point_in_polygon(loop, p)) candidates.push_back(p);
          }
        for (const Vec3& p : candidates) {
          if (!point_in_polygon(loop, p)) continue;
          if (!sees_whole_boundary(loop, p, cg.diameter)) continue;
          r.star_shaped = true;
          r.rho_estimate = std::max(r.rho_estimate, distance_to_boundary_2d(loop, p) / cg.diameter);
        }
      }
    } else {
      for (std::size_t lf = 0; lf < cf.faces.size() && convex; ++lf) {
        const FaceGeometry& fg = mesh.face_geometry(cf.faces[lf]);
        const Vec3 n_out = mesh.outward_normal(c, static_cast<int>(lf));
        for (int v : mesh.cell_vertices(c))
          if ((mesh.vertex(v) - fg.centroid).dot(n_out) > 1e-12 * cg.diameter) {
            convex = false;
            break;
          }
      }
      double dist = std::numeric_limits<double>::max();
      for (std::size_t lf = 0; lf < cf.faces.size(); ++lf) {
        const FaceGeometry& fg = mesh.face_geometry(cf.faces[lf]);
        dist = std::min(dist, (fg.centroid - cg.centroid).dot(mesh.outward_normal(c, static_cast<int>(lf))));
      }
      if (convex) {
        r.star_shaped = true;
        r.method = "exact-convex";
        r.rho_estimate = std::max(dist, 0.0) / cg.diameter;
      } else {
        // centroid-star proxy: every fan tetrahedron positively oriented
        r.method = "heuristic";
        bool fan_ok = true;
        for (std::size_t lf = 0; lf < cf.faces.size() && fan_ok; ++lf) {
          const int f = cf.faces[lf];
          const FaceGeometry& fg = mesh.face_geometry(f);
          const std::vector<int>& fv = mesh.face_vertices(f);
          const int nfv = static_cast<int>(fv.size());
          for (int i = 0; i < nfv; ++i) {
            Vec3 p = mesh.vertex(fv[i]);
            Vec3 q = mesh.vertex(fv[(i + 1) % nfv]);
            if (cf.signs[lf] < 0) std::swap(p, q);
            if ((fg.centroid - cg.centroid).cross(p - cg.centroid).dot(q - cg.centroid) <= 0.0) {
              fan_ok = false;
              break;
            }
          }
        }
        r.star_shaped = fan_ok;
        if (fan_ok) r.rho_estimate = std::max(dist, 1e-12 * cg.diameter) / cg.diameter;
      }
    }
    if (!r.star_shaped && first_non_star < 0) first_non_star = c;
    all_star = all_star && r.star_shaped;
  }
  report.pass = report.worst_ratio >= rho_min && all_star;
  if (report.worst_ratio >= rho_min && !all_star) report.worst_cell = first_non_star;
  return report;
}

// ---------------------------------------------------------------------------
// JSON I/O
// ---------------------------------------------------------------------------

nlohmann::json mesh_to_json(const Mesh& mesh) {
  nlohmann::json j;
  j["dimension"] = mesh.dimension();
  nlohmann::json verts = nlohmann::json::array();
  for (int v = 0; v < mesh.n_vertices(); ++v) {
    const Vec3& p = mesh.vertex(v);
    if (mesh.dimension() == 2) verts.push_back({p.x(), p.y()});
    else verts.push_back({p.x(), p.y(), p.z()});
  }
  j["vertices"] = std::move(verts);
  nlohmann::json faces = nlohmann::json::array();
  for (int f = 0; f < mesh.n_faces(); ++f) faces.push_back(mesh.face_vertices(f));
  j["faces"] = std::move(faces);
  nlohmann::json cells = nlohmann::json::array();
  for (int c = 0; c < mesh.n_cells(); ++c) {
    nlohmann::json jc;
    jc["faces"] = mesh.cell(c).faces;
    jc["signs"] = mesh.cell(c).signs;
    cells.push_back(std::move(jc));
  }
  j["cells"] = std::move(cells);
  return j;
}

Mesh mesh_from_json(const nlohmann::json& j) {
  try {
    const int dim = j.at("dimension").get<int>();
    std::vector<Vec3> vertices;
    for (const auto& jv : j.at("vertices")) {
      if (!jv.is_array() || static_cast<int>(jv.size()) != dim)
        throw ValidationError("vertex entries must be length-" + std::to_string(dim) + " arrays");
      Vec3 p = Vec3::Zero();
      for (int i = 0; i < dim; ++i) p[i] = jv.at(i).get<double>();
      vertices.push_back(p);
    }
    std::vector<std::vector<int>> faces;
    for (const auto& jf : j.at("faces")) faces.push_back(jf.get<std::vector<int>>());
    std::vector<CellFaces> cells;
    for (const auto& jc : j.at("cells")) {
      CellFaces cf;
      cf.faces = jc.at("faces").get<std::vector<int>>();
      cf.signs = jc.at("signs").get<std::vector<int>>();
      cells.push_back(std::move(cf));
    }
    return Mesh(dim, std::move(vertices), std::move(faces), std::move(cells));
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed mesh JSON: ") + e.what());
  }
}

Mesh read_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open mesh file '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("cannot parse '" + path + "': " + e.what());
  }
  return mesh_from_json(j);
}

void write_mesh(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot open '" + path + "' for writing");
  out << mesh_to_json(mesh).dump(2) << "\n";
}

} // namespace ncvem
