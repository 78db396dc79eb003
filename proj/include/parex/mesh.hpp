#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace parex {

struct MeshError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PhysicalName {
  int dim = 0;
  std::string name;
};

struct Tet {
  std::array<int, 4> nodes;
  int region = 0;
};

struct SurfaceTri {
  std::array<int, 3> nodes;
  int tag = 0;
};

/// Tagged tetrahedral mesh. Immutable after construction; tets are
/// orientation-normalized (positive signed volume) and the edge list is
/// deduplicated with global low-index -> high-index orientation.
class Mesh {
 public:
  std::vector<Eigen::Vector3d> nodes;
  std::vector<Tet> tets;
  std::vector<SurfaceTri> boundary_tris;
  std::map<int, PhysicalName> physical_names;
  std::vector<std::array<int, 2>> edges;

  static Mesh from_parts(std::vector<Eigen::Vector3d> nodes, std::vector<Tet> tets,
                         std::vector<SurfaceTri> tris,
                         std::map<int, PhysicalName> names = {});

  int edge_index(int a, int b) const;
  double tet_volume(int t) const;
  double surface_area(int tag) const;
  std::vector<int> surface_tris(int tag) const;
  double total_volume() const;

  bool has_region_tag(int tag) const { return region_tags_.count(tag) > 0; }
  bool has_surface_tag(int tag) const { return surface_tags_.count(tag) > 0; }
  const std::set<int>& region_tags() const { return region_tags_; }
  const std::set<int>& surface_tags() const { return surface_tags_; }

  /// Tag of the physical group with the given name and dimension, or -1.
  int tag_of_name(const std::string& name, int dim) const;

 private:
  void finalize();

  std::unordered_map<std::uint64_t, int> edge_lookup_;
  std::set<int> region_tags_;
  std::set<int> surface_tags_;
};

/// Parses a Gmsh ASCII MSH v2.2 file (sections $MeshFormat, $PhysicalNames,
/// $Nodes, $Elements; element types 2 and 4; line/point elements skipped).
Mesh load_mesh(const std::string& path);
Mesh load_mesh_stream(std::istream& in, const std::string& origin);

void write_msh22(const Mesh& mesh, const std::string& path);

struct SpanningTree {
  std::vector<int> tree_edges;    // edge indices, |tree| = n_nodes - 1
  std::vector<int> cotree_edges;  // all remaining edges
};

/// Deterministic BFS spanning tree from the lowest node id, neighbors visited
/// in ascending node order. Throws on a disconnected mesh.
SpanningTree build_spanning_tree(const Mesh& mesh);

struct SurfaceSelection {
  int tag = 0;
  std::vector<int> tris;
  double area = 0.0;
  std::vector<Eigen::Vector3d> outward_normals;  // out of the adjacent conductor
};

/// Collects the triangles of a tagged surface. When a conductor predicate is
/// given, normals point out of the adjacent conducting region.
SurfaceSelection select_surface(const Mesh& mesh, int tag,
                                const std::function<bool(int)>& region_is_conductor = nullptr);

}  // namespace parex
