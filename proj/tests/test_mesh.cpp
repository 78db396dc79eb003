#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "parex/mesh.hpp"
#include "parex/meshgen.hpp"

using namespace parex;

namespace {

Mesh two_tet_mesh() {
  std::vector<Eigen::Vector3d> nodes = {
      {0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  std::vector<Tet> tets = {{{0, 1, 2, 3}, 1}, {{1, 2, 3, 4}, 2}};
  std::vector<SurfaceTri> tris = {{{0, 1, 2}, 11}, {{1, 2, 4}, 12}};
  std::map<int, PhysicalName> names = {{1, {3, "left"}}, {2, {3, "right"}},
                                       {11, {2, "bottom"}}, {12, {2, "side"}}};
  return Mesh::from_parts(nodes, tets, tris, names);
}

}  // namespace

TEST_CASE("construction normalizes orientation and deduplicates edges") {
  Mesh m = two_tet_mesh();
  for (std::size_t t = 0; t < m.tets.size(); ++t) CHECK(m.tet_volume((int)t) > 0.0);
  // 2 tets, 4 shared nodes on the common face: 9 unique edges.
  CHECK(m.edges.size() == 9);
  for (const auto& e : m.edges) CHECK(e[0] < e[1]);
  CHECK(m.edge_index(1, 2) == m.edge_index(2, 1));
  CHECK(m.edge_index(0, 4) == -1);  // nodes not connected by any tet edge
  CHECK(m.total_volume() == doctest::Approx(1.0 / 6.0 + 1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("surface queries") {
  Mesh m = two_tet_mesh();
  CHECK(m.surface_area(11) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(m.surface_tris(11).size() == 1);
  CHECK(m.has_surface_tag(12));
  CHECK(!m.has_surface_tag(99));
  CHECK(m.has_region_tag(1));
  CHECK(m.tag_of_name("left", 3) == 1);
  CHECK(m.tag_of_name("side", 2) == 12);
  CHECK(m.tag_of_name("missing", 2) == -1);
  CHECK(m.tag_of_name("left", 2) == -1);  // wrong dimension
}

TEST_CASE("invalid meshes are rejected") {
  std::vector<Eigen::Vector3d> nodes = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  std::vector<Tet> tets = {{{0, 1, 2, 3}, 1}};
  SUBCASE("tri that is not a tet face") {
    std::vector<SurfaceTri> tris = {{{0, 1, 1}, 5}};
    CHECK_THROWS_AS(Mesh::from_parts(nodes, tets, tris), MeshError);
  }
  SUBCASE("node index out of range") {
    std::vector<Tet> bad = {{{0, 1, 2, 7}, 1}};
    CHECK_THROWS_AS(Mesh::from_parts(nodes, bad, {}), MeshError);
  }
  SUBCASE("degenerate tet") {
    std::vector<Eigen::Vector3d> flat = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};
    CHECK_THROWS_AS(Mesh::from_parts(flat, tets, {}), MeshError);
  }
}

TEST_CASE("msh 2.2 round trip") {
  Mesh m = meshgen::bar_fixture();
  const std::string path =
      (std::filesystem::temp_directory_path() / "parex_test_roundtrip.msh").string();
  write_msh22(m, path);
  Mesh r = load_mesh(path);
  REQUIRE(r.nodes.size() == m.nodes.size());
  REQUIRE(r.tets.size() == m.tets.size());
  REQUIRE(r.boundary_tris.size() == m.boundary_tris.size());
  CHECK(r.total_volume() == doctest::Approx(m.total_volume()).epsilon(1e-12));
  for (int tag : m.surface_tags())
    CHECK(r.surface_area(tag) == doctest::Approx(m.surface_area(tag)).epsilon(1e-12));
  for (const auto& [tag, pn] : m.physical_names) {
    REQUIRE(r.physical_names.count(tag) == 1);
    CHECK(r.physical_names.at(tag).name == pn.name);
    CHECK(r.physical_names.at(tag).dim == pn.dim);
  }
  std::filesystem::remove(path);
}

TEST_CASE("malformed msh input") {
  SUBCASE("wrong version") {
    std::istringstream in("$MeshFormat\n4.1 0 8\n$EndMeshFormat\n");
    CHECK_THROWS_AS(load_mesh_stream(in, "test"), MeshError);
  }
  SUBCASE("missing file") { CHECK_THROWS_AS(load_mesh("/nonexistent/file.msh"), MeshError); }
}

TEST_CASE("spanning tree covers the mesh") {
  Mesh m = meshgen::bar_fixture();
  SpanningTree st = build_spanning_tree(m);
  CHECK(st.tree_edges.size() == m.nodes.size() - 1);
  CHECK(st.tree_edges.size() + st.cotree_edges.size() == m.edges.size());
}

TEST_CASE("select_surface orients normals out of the conductor") {
  Mesh m = meshgen::wire_r_fixture();
  auto is_cond = [](int region) { return region == meshgen::kRegionConductor; };
  // Terminal A is an interior disk at the z=0 end of the wire; the wire body
  // lies at z > 0, so conductor-outward normals point toward -z.
  SurfaceSelection sel = select_surface(m, meshgen::kSurfTerminalA, is_cond);
  REQUIRE(!sel.tris.empty());
  CHECK(sel.area == doctest::Approx(m.surface_area(meshgen::kSurfTerminalA)).epsilon(1e-12));
  for (const auto& n : sel.outward_normals) {
    CHECK(n.norm() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(n.z() < 0.0);
  }
}
