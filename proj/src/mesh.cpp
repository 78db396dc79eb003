#include "parex/mesh.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <queue>
#include <sstream>

namespace parex {

namespace {

constexpr double kDegenerateVolume = 1e-18;  // m^3

std::uint64_t edge_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

double signed_volume(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c, const Eigen::Vector3d& d) {
  return (b - a).cross(c - a).dot(d - a) / 6.0;
}

std::array<int, 3> sorted_face(int a, int b, int c) {
  std::array<int, 3> f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

// Faces of a tet by local node indices.
constexpr int kTetFaces[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};

}  // namespace

Mesh Mesh::from_parts(std::vector<Eigen::Vector3d> nodes, std::vector<Tet> tets,
                      std::vector<SurfaceTri> tris, std::map<int, PhysicalName> names) {
  Mesh m;
  m.nodes = std::move(nodes);
  m.tets = std::move(tets);
  m.boundary_tris = std::move(tris);
  m.physical_names = std::move(names);
  m.finalize();
  return m;
}

void Mesh::finalize() {
  for (auto& t : tets) {
    for (int n : t.nodes)
      if (n < 0 || n >= static_cast<int>(nodes.size()))
        throw MeshError("tet references node out of range");
    double v = signed_volume(nodes[t.nodes[0]], nodes[t.nodes[1]], nodes[t.nodes[2]],
                             nodes[t.nodes[3]]);
    if (v < 0.0) {
      std::swap(t.nodes[1], t.nodes[2]);
      v = -v;
    }
    if (v < kDegenerateVolume)
      throw MeshError("degenerate tetrahedron with volume " + std::to_string(v) + " m^3");
    region_tags_.insert(t.region);
  }

  // Edge list, globally oriented low -> high.
  edges.clear();
  edge_lookup_.clear();
  for (const auto& t : tets) {
    static constexpr int le[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    for (const auto& e : le) {
      int a = t.nodes[e[0]], b = t.nodes[e[1]];
      if (a > b) std::swap(a, b);
      auto key = edge_key(a, b);
      if (edge_lookup_.emplace(key, static_cast<int>(edges.size())).second)
        edges.push_back({a, b});
    }
  }

  // Conformity: no face may be shared by more than two tets.
  std::map<std::array<int, 3>, int> face_count;
  for (const auto& t : tets)
    for (const auto& f : kTetFaces)
      ++face_count[sorted_face(t.nodes[f[0]], t.nodes[f[1]], t.nodes[f[2]])];
  for (const auto& [f, cnt] : face_count)
    if (cnt > 2) throw MeshError("non-conforming mesh: face shared by " + std::to_string(cnt) + " tets");

  for (const auto& tri : boundary_tris) {
    for (int n : tri.nodes)
      if (n < 0 || n >= static_cast<int>(nodes.size()))
        throw MeshError("boundary triangle references node out of range");
    auto it = face_count.find(sorted_face(tri.nodes[0], tri.nodes[1], tri.nodes[2]));
    if (it == face_count.end())
      throw MeshError("surface triangle is not a face of any tet");
    surface_tags_.insert(tri.tag);
  }

  for (const auto& [tag, pn] : physical_names) {
    bool used = (pn.dim == 3 && region_tags_.count(tag)) || (pn.dim == 2 && surface_tags_.count(tag));
    if (!used)
      std::cerr << "warning: physical group " << tag << " ('" << pn.name
                << "') not referenced by any element\n";
  }
}

int Mesh::edge_index(int a, int b) const {
  auto it = edge_lookup_.find(edge_key(a, b));
  return it == edge_lookup_.end() ? -1 : it->second;
}

double Mesh::tet_volume(int t) const {
  const auto& n = tets[t].nodes;
  return signed_volume(nodes[n[0]], nodes[n[1]], nodes[n[2]], nodes[n[3]]);
}

double Mesh::total_volume() const {
  double v = 0.0;
  for (std::size_t t = 0; t < tets.size(); ++t) v += tet_volume(static_cast<int>(t));
  return v;
}

std::vector<int> Mesh::surface_tris(int tag) const {
  std::vector<int> out;
  for (std::size_t i = 0; i < boundary_tris.size(); ++i)
    if (boundary_tris[i].tag == tag) out.push_back(static_cast<int>(i));
  return out;
}

double Mesh::surface_area(int tag) const {
  if (!has_surface_tag(tag)) throw MeshError("unknown surface tag " + std::to_string(tag));
  double area = 0.0;
  for (const auto& tri : boundary_tris) {
    if (tri.tag != tag) continue;
    const auto& a = nodes[tri.nodes[0]];
    const auto& b = nodes[tri.nodes[1]];
    const auto& c = nodes[tri.nodes[2]];
    area += 0.5 * (b - a).cross(c - a).norm();
  }
  return area;
}

int Mesh::tag_of_name(const std::string& name, int dim) const {
  for (const auto& [tag, pn] : physical_names)
    if (pn.dim == dim && pn.name == name) return tag;
  return -1;
}

namespace {

struct LineReader {
  std::istream& in;
  std::string origin;
  int lineno = 0;

  bool next(std::string& line) {
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg) const {
    throw MeshError(origin + ":" + std::to_string(lineno) + ": " + msg);
  }
};

}  // namespace

Mesh load_mesh_stream(std::istream& in, const std::string& origin) {
  LineReader rd{in, origin};
  std::string line;

  std::vector<Eigen::Vector3d> nodes;
  std::unordered_map<long long, int> node_id_map;  // file id -> dense id
  std::vector<Tet> tets;
  std::vector<SurfaceTri> tris;
  std::map<int, PhysicalName> names;
  bool saw_format = false, saw_nodes = false, saw_elements = false;

  auto map_node = [&](long long id) {
    auto it = node_id_map.find(id);
    if (it == node_id_map.end()) rd.fail("element references unknown node " + std::to_string(id));
    return it->second;
  };

  while (rd.next(line)) {
    if (line.empty()) continue;
    if (line == "$MeshFormat") {
      if (!rd.next(line)) rd.fail("unexpected end of file in $MeshFormat");
      std::istringstream ss(line);
      double version = 0;
      int file_type = 0, data_size = 0;
      if (!(ss >> version >> file_type >> data_size)) rd.fail("malformed $MeshFormat header");
      if (version < 2.19 || version > 2.21 || file_type != 0)
        rd.fail("unsupported mesh format (need ASCII MSH 2.2)");
      if (!rd.next(line) || line != "$EndMeshFormat") rd.fail("missing $EndMeshFormat");
      saw_format = true;
    } else if (line == "$PhysicalNames") {
      if (!rd.next(line)) rd.fail("unexpected end of file in $PhysicalNames");
      int count = 0;
      try {
        count = std::stoi(line);
      } catch (...) {
        rd.fail("malformed $PhysicalNames count");
      }
      for (int i = 0; i < count; ++i) {
        if (!rd.next(line)) rd.fail("unexpected end of file in $PhysicalNames");
        std::istringstream ss(line);
        int dim = 0, tag = 0;
        if (!(ss >> dim >> tag)) rd.fail("malformed physical name entry");
        std::string rest;
        std::getline(ss, rest);
        auto first = rest.find('"');
        auto last = rest.rfind('"');
        if (first == std::string::npos || last == first) rd.fail("physical name not quoted");
        names[tag] = PhysicalName{dim, rest.substr(first + 1, last - first - 1)};
      }
      if (!rd.next(line) || line != "$EndPhysicalNames") rd.fail("missing $EndPhysicalNames");
    } else if (line == "$Nodes") {
      if (!rd.next(line)) rd.fail("unexpected end of file in $Nodes");
      long long count = 0;
      try {
        count = std::stoll(line);
      } catch (...) {
        rd.fail("malformed $Nodes count");
      }
      nodes.reserve(count);
      for (long long i = 0; i < count; ++i) {
        if (!rd.next(line)) rd.fail("unexpected end of file in $Nodes");
        std::istringstream ss(line);
        long long id = 0;
        double x = 0, y = 0, z = 0;
        if (!(ss >> id >> x >> y >> z)) rd.fail("malformed node line");
        if (!node_id_map.emplace(id, static_cast<int>(nodes.size())).second)
          rd.fail("duplicate node id " + std::to_string(id));
        nodes.emplace_back(x, y, z);
      }
      if (!rd.next(line) || line != "$EndNodes") rd.fail("missing $EndNodes");
      saw_nodes = true;
    } else if (line == "$Elements") {
      if (!rd.next(line)) rd.fail("unexpected end of file in $Elements");
      long long count = 0;
      try {
        count = std::stoll(line);
      } catch (...) {
        rd.fail("malformed $Elements count");
      }
      for (long long i = 0; i < count; ++i) {
        if (!rd.next(line)) rd.fail("unexpected end of file in $Elements");
        std::istringstream ss(line);
        long long id = 0;
        int type = 0, ntags = 0;
        if (!(ss >> id >> type >> ntags)) rd.fail("malformed element line");
        std::vector<int> tags(ntags);
        for (int k = 0; k < ntags; ++k)
          if (!(ss >> tags[k])) rd.fail("malformed element tags");
        int phys = tags.empty() ? 0 : tags[0];
        if (type == 2) {
          long long a, b, c;
          if (!(ss >> a >> b >> c)) rd.fail("malformed triangle element");
          tris.push_back({{map_node(a), map_node(b), map_node(c)}, phys});
        } else if (type == 4) {
          long long a, b, c, d;
          if (!(ss >> a >> b >> c >> d)) rd.fail("malformed tetrahedron element");
          tets.push_back({{map_node(a), map_node(b), map_node(c), map_node(d)}, phys});
        } else if (type == 1 || type == 15) {
          // line / point elements carry no field data here
        } else {
          rd.fail("unsupported element type " + std::to_string(type));
        }
      }
      if (!rd.next(line) || line != "$EndElements") rd.fail("missing $EndElements");
      saw_elements = true;
    } else if (line[0] == '$') {
      // skip unknown section
      const std::string end = "$End" + line.substr(1);
      bool closed = false;
      while (rd.next(line))
        if (line == end) {
          closed = true;
          break;
        }
      if (!closed) rd.fail("unterminated section");
    } else {
      rd.fail("unexpected content outside section: '" + line + "'");
    }
  }

  if (!saw_format) throw MeshError(origin + ": missing $MeshFormat section");
  if (!saw_nodes) throw MeshError(origin + ": missing $Nodes section");
  if (!saw_elements) throw MeshError(origin + ": missing $Elements section");

  return Mesh::from_parts(std::move(nodes), std::move(tets), std::move(tris), std::move(names));
}

Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MeshError("cannot open mesh file '" + path + "'");
  return load_mesh_stream(in, path);
}

void write_msh22(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw MeshError("cannot open '" + path + "' for writing");
  out << "$MeshFormat\n2.2 0 8\n$EndMeshFormat\n";
  if (!mesh.physical_names.empty()) {
    out << "$PhysicalNames\n" << mesh.physical_names.size() << "\n";
    for (const auto& [tag, pn] : mesh.physical_names)
      out << pn.dim << " " << tag << " \"" << pn.name << "\"\n";
    out << "$EndPhysicalNames\n";
  }
  out << "$Nodes\n" << mesh.nodes.size() << "\n";
  char buf[128];
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu %.17g %.17g %.17g\n", i + 1, mesh.nodes[i].x(),
                  mesh.nodes[i].y(), mesh.nodes[i].z());
    out << buf;
  }
  out << "$EndNodes\n$Elements\n" << (mesh.boundary_tris.size() + mesh.tets.size()) << "\n";
  std::size_t id = 1;
  for (const auto& tri : mesh.boundary_tris)
    out << id++ << " 2 2 " << tri.tag << " " << tri.tag << " " << tri.nodes[0] + 1 << " "
        << tri.nodes[1] + 1 << " " << tri.nodes[2] + 1 << "\n";
  for (const auto& t : mesh.tets)
    out << id++ << " 4 2 " << t.region << " " << t.region << " " << t.nodes[0] + 1 << " "
        << t.nodes[1] + 1 << " " << t.nodes[2] + 1 << " " << t.nodes[3] + 1 << "\n";
  out << "$EndElements\n";
}

SpanningTree build_spanning_tree(const Mesh& mesh) {
  const int n = static_cast<int>(mesh.nodes.size());
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // node -> (neighbor, edge)
  for (std::size_t e = 0; e < mesh.edges.size(); ++e) {
    auto [a, b] = mesh.edges[e];
    adj[a].emplace_back(b, static_cast<int>(e));
    adj[b].emplace_back(a, static_cast<int>(e));
  }
  for (auto& v : adj) std::sort(v.begin(), v.end());

  std::vector<char> visited(n, 0);
  std::vector<char> in_tree(mesh.edges.size(), 0);
  SpanningTree st;
  std::queue<int> q;
  visited[0] = 1;
  q.push(0);
  int reached = 1;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    for (auto [v, e] : adj[u]) {
      if (visited[v]) continue;
      visited[v] = 1;
      in_tree[e] = 1;
      st.tree_edges.push_back(e);
      ++reached;
      q.push(v);
    }
  }
  if (reached != n) {
    // report component sizes
    std::vector<int> comp(n, -1);
    int ncomp = 0;
    std::vector<int> sizes;
    for (int s = 0; s < n; ++s) {
      if (comp[s] >= 0) continue;
      int size = 0;
      std::queue<int> qq;
      qq.push(s);
      comp[s] = ncomp;
      while (!qq.empty()) {
        int u = qq.front();
        qq.pop();
        ++size;
        for (auto [v, e] : adj[u])
          if (comp[v] < 0) {
            comp[v] = ncomp;
            qq.push(v);
          }
      }
      sizes.push_back(size);
      ++ncomp;
    }
    std::string msg = "mesh is disconnected: " + std::to_string(ncomp) + " components (sizes";
    for (int s : sizes) msg += " " + std::to_string(s);
    throw MeshError(msg + ")");
  }
  for (std::size_t e = 0; e < mesh.edges.size(); ++e)
    if (!in_tree[e]) st.cotree_edges.push_back(static_cast<int>(e));
  return st;
}

SurfaceSelection select_surface(const Mesh& mesh, int tag,
                                const std::function<bool(int)>& region_is_conductor) {
  if (!mesh.has_surface_tag(tag))
    throw MeshError("unknown surface tag " + std::to_string(tag));
  SurfaceSelection sel;
  sel.tag = tag;
  sel.tris = mesh.surface_tris(tag);
  sel.area = mesh.surface_area(tag);

  // Adjacent tets per face: one for a domain-boundary tri, two for an
  // interior interface tri (e.g. a terminal on a conductor surface).
  std::map<std::array<int, 3>, std::array<int, 2>> face_tet;
  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const auto& n = mesh.tets[t].nodes;
    for (const auto& f : kTetFaces) {
      auto [it, fresh] = face_tet.emplace(sorted_face(n[f[0]], n[f[1]], n[f[2]]),
                                          std::array<int, 2>{static_cast<int>(t), -1});
      if (!fresh) it->second[1] = static_cast<int>(t);
    }
  }
  for (int ti : sel.tris) {
    const auto& tri = mesh.boundary_tris[ti];
    const auto& a = mesh.nodes[tri.nodes[0]];
    const auto& b = mesh.nodes[tri.nodes[1]];
    const auto& c = mesh.nodes[tri.nodes[2]];
    Eigen::Vector3d nrm = (b - a).cross(c - a).normalized();
    auto adj = face_tet.at(sorted_face(tri.nodes[0], tri.nodes[1], tri.nodes[2]));
    // Point away from the conductor-side tet (out of the conductor when the
    // surface bounds a conducting region).
    int t = adj[0];
    if (adj[1] >= 0 && region_is_conductor && !region_is_conductor(mesh.tets[t].region) &&
        region_is_conductor(mesh.tets[adj[1]].region))
      t = adj[1];
    Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
    for (int n : mesh.tets[t].nodes) centroid += mesh.nodes[n];
    centroid /= 4.0;
    Eigen::Vector3d fc = (a + b + c) / 3.0;
    if (nrm.dot(fc - centroid) < 0.0) nrm = -nrm;
    if (region_is_conductor && !region_is_conductor(mesh.tets[t].region)) nrm = -nrm;
    sel.outward_normals.push_back(nrm);
  }
  return sel;
}

}  // namespace parex
