// Polytopal mesh data model: general polygonal (2D) and polyhedral (3D) cells,
// desk-scale generators on the unit square/cube, shape-regularity checks and
// JSON file I/O.

#ifndef NCVEM_MESH_HPP
#define NCVEM_MESH_HPP

#include "ncvem/common.hpp"

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace ncvem {

/// Face list of one cell together with orientation signs: outward normal of
/// face `faces[i]` as seen from this cell is `signs[i]` times the face's
/// intrinsic normal.
struct CellFaces {
  std::vector<int> faces;
  std::vector<int> signs;
};

/// Centroid, measure, diameter and intrinsic unit normal of a face.
/// In 2D the intrinsic normal of edge (v0,v1) is the tangent rotated by -90deg;
/// in 3D it is the Newell normal of the stored vertex loop.
struct FaceGeometry {
  Vec3 centroid = Vec3::Zero();
  double measure = 0.0;
  double diameter = 0.0;
  Vec3 normal = Vec3::Zero();
};

struct CellGeometry {
  Vec3 centroid = Vec3::Zero();
  double measure = 0.0;
  double diameter = 0.0;
};

/// Immutable polytopal mesh. Construction validates connectivity and computes
/// all entity geometry; instances are safe to share across threads.
class Mesh {
public:
  Mesh(int dimension,
       std::vector<Vec3> vertices,
       std::vector<std::vector<int>> faces,
       std::vector<CellFaces> cells);

  int dimension() const { return dim_; }
  int n_vertices() const { return static_cast<int>(vertices_.size()); }
  int n_faces() const { return static_cast<int>(faces_.size()); }
  int n_cells() const { return static_cast<int>(cells_.size()); }

  const Vec3& vertex(int v) const { return vertices_[v]; }
  const std::vector<int>& face_vertices(int f) const { return faces_[f]; }
  const CellFaces& cell(int c) const { return cells_[c]; }

  bool is_boundary_face(int f) const { return face_cells_[f][1] < 0; }
  /// Incident cell ids, second entry -1 on the boundary.
  const std::array<int, 2>& face_cells(int f) const { return face_cells_[f]; }

  const FaceGeometry& face_geometry(int f) const { return face_geom_[f]; }
  const CellGeometry& cell_geometry(int c) const { return cell_geom_[c]; }
  const std::vector<FaceGeometry>& face_geometries() const { return face_geom_; }
  const std::vector<CellGeometry>& cell_geometries() const { return cell_geom_; }

  /// Outward unit normal of the local_face-th face of cell c.
  Vec3 outward_normal(int c, int local_face) const;

  /// Unique vertex ids of a cell; in 2D ordered as the counterclockwise
  /// boundary loop, in 3D unsorted.
  const std::vector<int>& cell_vertices(int c) const { return cell_vertices_[c]; }

  /// Max cell diameter.
  double mesh_size() const { return h_; }

  /// Copy with the cell list permuted (cell i of the result is cell perm[i]).
  Mesh permuted_cells(const std::vector<int>& perm) const;

private:
  void validate_and_build();

  int dim_;
  std::vector<Vec3> vertices_;
  std::vector<std::vector<int>> faces_;
  std::vector<CellFaces> cells_;

  std::vector<std::array<int, 2>> face_cells_;
  std::vector<FaceGeometry> face_geom_;
  std::vector<CellGeometry> cell_geom_;
  std::vector<std::vector<int>> cell_vertices_;
  double h_ = 0.0;
};

enum class MeshKind {
  TriStructured,
  QuadStructured,
  QuadDistorted,
  HexagonDominant,
  Voronoi2d,
  CubeStructured,
  TetStructured,
};

MeshKind mesh_kind_from_string(const std::string& name);
std::string to_string(MeshKind kind);
bool mesh_kind_is_3d(MeshKind kind);

/// Deterministic generators covering the unit square (2D kinds) or unit cube
/// (3D kinds). `seed` only affects the randomized kinds.
Mesh generate_mesh(MeshKind kind, int resolution, std::uint64_t seed = 0);

struct CellRegularity {
  double worst_edge_ratio = 0.0;  // min over faces of h_e / h_K
  bool star_shaped = false;
  double rho_estimate = 0.0;      // radius of a verified star ball over h_K
  std::string method;             // "exact-convex" or "heuristic"
};

struct RegularityReport {
  std::vector<CellRegularity> cells;
  double h = 0.0;
  double worst_ratio = 1.0;
  int worst_cell = -1;
  bool pass = false;
};

/// Shape-regularity audit: the rho_min threshold gates the face/cell diameter
/// ratios; star-shapedness is certified exactly for convex cells and sampled
/// heuristically otherwise. Failures are reported, never thrown.
RegularityReport check_regularity(const Mesh& mesh, double rho_min);

nlohmann::json mesh_to_json(const Mesh& mesh);
Mesh mesh_from_json(const nlohmann::json& j);

Mesh read_mesh(const std::string& path);
void write_mesh(const Mesh& mesh, const std::string& path);

} // namespace ncvem

#endif
