#include "parex/meshgen.hpp"

#include <cmath>
#include <numbers>
#include <unordered_map>

namespace parex::meshgen {

namespace {

// Prism (v0,v1,v2 | v3,v4,v5) -> 3 tets. The smallest vertex id is rotated to
// position 0 (6 orientation-preserving symmetries), then the configuration is
// picked so every quad face is cut by the diagonal through its smallest
// vertex; adjacent prisms therefore split shared faces identically.
void split_prism(const std::array<int, 6>& p, int region, std::vector<Tet>& out) {
  static constexpr int perms[6][6] = {
      {0, 1, 2, 3, 4, 5}, {1, 2, 0, 4, 5, 3}, {2, 0, 1, 5, 3, 4},
      {3, 5, 4, 0, 2, 1}, {5, 4, 3, 2, 1, 0}, {4, 3, 5, 1, 0, 2},
  };
  int best = 0;
  for (int k = 1; k < 6; ++k)
    if (p[perms[k][0]] < p[perms[best][0]]) best = k;
  std::array<int, 6> v;
  for (int i = 0; i < 6; ++i) v[i] = p[perms[best][i]];
  if (std::min(v[1], v[5]) < std::min(v[2], v[4])) {
    out.push_back({{v[0], v[1], v[2], v[5]}, region});
    out.push_back({{v[0], v[1], v[5], v[4]}, region});
    out.push_back({{v[0], v[4], v[5], v[3]}, region});
  } else {
    out.push_back({{v[0], v[1], v[2], v[4]}, region});
    out.push_back({{v[0], v[4], v[2], v[5]}, region});
    out.push_back({{v[0], v[4], v[5], v[3]}, region});
  }
}

struct Tri2d {
  std::array<int, 3> n;  // node ids within a layer
  int annulus;
};

}  // namespace

Mesh cylinder_mesh(const CylinderSpec& spec) {
  const int nr = static_cast<int>(spec.radii.size());
  std::vector<double> zs = spec.z_levels;
  if (zs.empty()) {
    if (spec.nz < 1 || !(spec.length > 0.0)) throw MeshError("invalid cylinder spec");
    for (int k = 0; k <= spec.nz; ++k) zs.push_back(spec.length * k / spec.nz);
  }
  const int nz = static_cast<int>(zs.size()) - 1;
  if (nr < 1 || spec.n_theta < 3 || nz < 1) throw MeshError("invalid cylinder spec");
  for (int k = 0; k < nz; ++k)
    if (!(zs[k + 1] > zs[k])) throw MeshError("cylinder spec: z levels must ascend");
  if (static_cast<int>(spec.annulus_region.size()) != nr ||
      static_cast<int>(spec.bottom_tag.size()) != nr ||
      static_cast<int>(spec.top_tag.size()) != nr)
    throw MeshError("cylinder spec: per-annulus arrays must match radii");

  const int nt = spec.n_theta;
  const int npl = 1 + nr * nt;  // nodes per layer
  std::vector<Eigen::Vector3d> nodes;
  nodes.reserve(static_cast<std::size_t>(npl) * (nz + 1));
  for (int k = 0; k <= nz; ++k) {
    const double z = zs[k];
    nodes.emplace_back(0.0, 0.0, z);
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nt; ++j) {
        const double th = 2.0 * std::numbers::pi * j / nt;
        nodes.emplace_back(spec.radii[i] * std::cos(th), spec.radii[i] * std::sin(th), z);
      }
  }
  auto ring_node = [&](int ring, int j) { return 1 + (ring - 1) * nt + (j % nt); };  // ring >= 1

  // Cross-section triangulation with annulus bookkeeping.
  std::vector<Tri2d> tris;
  for (int j = 0; j < nt; ++j) tris.push_back({{0, ring_node(1, j), ring_node(1, j + 1)}, 0});
  for (int i = 1; i < nr; ++i)
    for (int j = 0; j < nt; ++j) {
      const int a = ring_node(i, j), b = ring_node(i, j + 1);
      const int c = ring_node(i + 1, j + 1), d = ring_node(i + 1, j);
      tris.push_back({{a, b, c}, i});
      tris.push_back({{a, c, d}, i});
    }

  std::vector<Tet> tets;
  tets.reserve(tris.size() * 3 * nz);
  for (int k = 0; k < nz; ++k) {
    const int o0 = k * npl, o1 = (k + 1) * npl;
    for (const auto& t : tris) {
      const int region =
          spec.region_of ? spec.region_of(t.annulus, k) : spec.annulus_region[t.annulus];
      split_prism({t.n[0] + o0, t.n[1] + o0, t.n[2] + o0, t.n[0] + o1, t.n[1] + o1, t.n[2] + o1},
                  region, tets);
    }
  }

  std::vector<SurfaceTri> btris;
  const int otop = nz * npl;
  for (const auto& t : tris) {
    btris.push_back({{t.n[0], t.n[1], t.n[2]}, spec.bottom_tag[t.annulus]});
    btris.push_back({{t.n[0] + otop, t.n[1] + otop, t.n[2] + otop}, spec.top_tag[t.annulus]});
  }
  for (const auto& disk : spec.disks) {
    int layer = 0;
    for (int k = 1; k <= nz; ++k)
      if (std::abs(zs[k] - disk.z) < std::abs(zs[layer] - disk.z)) layer = k;
    const int off = layer * npl;
    for (const auto& t : tris)
      if (t.annulus < disk.n_rings)
        btris.push_back({{t.n[0] + off, t.n[1] + off, t.n[2] + off}, disk.tag});
  }
  // Lateral quads, split along the diagonal through their smallest vertex.
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < nt; ++j) {
      const std::array<int, 4> q = {ring_node(nr, j) + k * npl, ring_node(nr, j + 1) + k * npl,
                                    ring_node(nr, j + 1) + (k + 1) * npl,
                                    ring_node(nr, j) + (k + 1) * npl};
      int m = 0;
      for (int i = 1; i < 4; ++i)
        if (q[i] < q[m]) m = i;
      btris.push_back({{q[m], q[(m + 1) % 4], q[(m + 2) % 4]}, spec.side_tag});
      btris.push_back({{q[m], q[(m + 2) % 4], q[(m + 3) % 4]}, spec.side_tag});
    }

  return Mesh::from_parts(std::move(nodes), std::move(tets), std::move(btris), spec.names);
}

Mesh box_mesh(const BoxSpec& spec) {
  if (spec.nx < 1 || spec.ny < 1 || spec.nz < 1 || !spec.region_of || !spec.surface_tag_of)
    throw MeshError("invalid box spec");
  const int px = spec.nx + 1, py = spec.ny + 1, pz = spec.nz + 1;
  auto nid = [&](int i, int j, int k) { return (k * py + j) * px + i; };
  std::vector<Eigen::Vector3d> nodes(static_cast<std::size_t>(px) * py * pz);
  for (int k = 0; k < pz; ++k)
    for (int j = 0; j < py; ++j)
      for (int i = 0; i < px; ++i)
        nodes[nid(i, j, k)] = spec.origin + Eigen::Vector3d(spec.size.x() * i / spec.nx,
                                                            spec.size.y() * j / spec.ny,
                                                            spec.size.z() * k / spec.nz);

  // Kuhn split: one tet per axis permutation, conforming across cells.
  static constexpr int axis_perm[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                          {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
  std::vector<Tet> tets;
  tets.reserve(static_cast<std::size_t>(spec.nx) * spec.ny * spec.nz * 6);
  for (int k = 0; k < spec.nz; ++k)
    for (int j = 0; j < spec.ny; ++j)
      for (int i = 0; i < spec.nx; ++i) {
        const Eigen::Vector3d center =
            spec.origin + Eigen::Vector3d(spec.size.x() * (i + 0.5) / spec.nx,
                                          spec.size.y() * (j + 0.5) / spec.ny,
                                          spec.size.z() * (k + 0.5) / spec.nz);
        const int region = spec.region_of(center);
        for (const auto& perm : axis_perm) {
          int c[3] = {i, j, k};
          std::array<int, 4> tn;
          tn[0] = nid(c[0], c[1], c[2]);
          for (int s = 0; s < 3; ++s) {
            ++c[perm[s]];
            tn[s + 1] = nid(c[0], c[1], c[2]);
          }
          tets.push_back({tn, region});
        }
      }

  // Boundary faces = faces belonging to exactly one tet.
  struct FaceInfo {
    std::array<int, 3> tri;
    int opposite;
    int count;
  };
  std::unordered_map<std::uint64_t, FaceInfo> faces;
  faces.reserve(tets.size() * 4);
  auto key_of = [&](std::array<int, 3> f) {
    std::sort(f.begin(), f.end());
    const auto n = nodes.size();
    return (static_cast<std::uint64_t>(f[0]) * n + f[1]) * n + f[2];
  };
  for (const auto& t : tets)
    for (int f = 0; f < 4; ++f) {
      std::array<int, 3> tri = {t.nodes[(f + 1) % 4], t.nodes[(f + 2) % 4], t.nodes[(f + 3) % 4]};
      auto [it, inserted] = faces.try_emplace(key_of(tri), FaceInfo{tri, t.nodes[f], 1});
      if (!inserted) ++it->second.count;
    }

  std::vector<SurfaceTri> btris;
  for (const auto& [key, info] : faces) {
    if (info.count != 1) continue;
    const auto& a = nodes[info.tri[0]];
    Eigen::Vector3d normal =
        (nodes[info.tri[1]] - a).cross(nodes[info.tri[2]] - a).normalized();
    if (normal.dot(nodes[info.opposite] - a) > 0.0) normal = -normal;
    const Eigen::Vector3d centroid = (a + nodes[info.tri[1]] + nodes[info.tri[2]]) / 3.0;
    btris.push_back({info.tri, spec.surface_tag_of(centroid, normal)});
  }
  std::sort(btris.begin(), btris.end(), [](const SurfaceTri& x, const SurfaceTri& y) {
    return x.nodes < y.nodes;
  });

  return Mesh::from_parts(std::move(nodes), std::move(tets), std::move(btris), spec.names);
}

namespace {

std::vector<double> geometric_rings(double r0, double r1, int n) {
  std::vector<double> out;
  const double ratio = std::pow(r1 / r0, 1.0 / n);
  double r = r0;
  for (int i = 0; i < n; ++i) {
    r *= ratio;
    out.push_back(r);
  }
  out.back() = r1;
  return out;
}

std::map<int, PhysicalName> wire_names() {
  return {{kRegionConductor, {3, "wire"}},
          {kRegionAir, {3, "air"}},
          {kSurfOuter, {2, "outer"}},
          {kSurfTerminalA, {2, "terminal:a"}},
          {kSurfTerminalB, {2, "terminal:b"}}};
}

// The wire occupies z in [0, length]; air caps (layer boundaries at the given
// ascending offsets beyond each end) separate the terminals from the outer
// boundary, so an electric outer boundary does not short the terminals. The
// terminals are the interior conductor/air disks at z = 0 and z = length.
CylinderSpec wire_spec(const std::vector<double>& cond_radii, const std::vector<double>& air_radii,
                       int n_theta, int nz_wire, double length,
                       const std::vector<double>& cap_offsets) {
  CylinderSpec s;
  s.radii = cond_radii;
  s.radii.insert(s.radii.end(), air_radii.begin(), air_radii.end());
  const int nr = static_cast<int>(s.radii.size());
  const int ncond = static_cast<int>(cond_radii.size());
  const int ncap = static_cast<int>(cap_offsets.size());
  s.annulus_region.assign(nr, kRegionAir);
  s.bottom_tag.assign(nr, kSurfOuter);
  s.top_tag.assign(nr, kSurfOuter);
  s.side_tag = kSurfOuter;
  s.n_theta = n_theta;
  for (auto it = cap_offsets.rbegin(); it != cap_offsets.rend(); ++it) s.z_levels.push_back(-*it);
  for (int k = 0; k <= nz_wire; ++k) s.z_levels.push_back(length * k / nz_wire);
  for (double c : cap_offsets) s.z_levels.push_back(length + c);
  s.region_of = [ncond, ncap, nz_wire](int annulus, int layer) {
    const bool in_wire = annulus < ncond && layer >= ncap && layer < ncap + nz_wire;
    return in_wire ? kRegionConductor : kRegionAir;
  };
  s.disks = {{0.0, ncond, kSurfTerminalA}, {length, ncond, kSurfTerminalB}};
  s.names = wire_names();
  return s;
}

}  // namespace

Mesh wire_fixture(int refine) {
  const double mm = 1e-3;
  std::vector<double> cond = {0.5 * mm, 0.8 * mm, 0.95 * mm, 1.0 * mm};
  std::vector<double> air = geometric_rings(1.0 * mm, 64.0 * mm, 9);
  std::vector<double> caps = geometric_rings(1.5 * mm, 64.0 * mm, 5);
  int n_theta = 16, nz = 14;
  if (refine > 0) {
    cond = {0.25 * mm, 0.5 * mm, 0.65 * mm, 0.8 * mm, 0.9 * mm, 0.95 * mm, 1.0 * mm};
    air = geometric_rings(1.0 * mm, 64.0 * mm, 13);
    caps = geometric_rings(1.0 * mm, 64.0 * mm, 8);
    n_theta = 24;
    nz = 20;
  }
  // Scale the conductor rings so the inscribed n_theta-gon cross-section has
  // area pi r^2 exactly; the DC resistance then does not carry the polygon
  // area deficit.
  const double area_scale =
      std::sqrt(2.0 * std::numbers::pi / (n_theta * std::sin(2.0 * std::numbers::pi / n_theta)));
  for (double& r : cond) r *= area_scale;
  return cylinder_mesh(wire_spec(cond, air, n_theta, nz, 0.05, caps));
}

Mesh wire_r_fixture(int refine) {
  const double mm = 1e-3;
  std::vector<double> cond = {mm / 3.0, 2.0 * mm / 3.0, 1.0 * mm};
  std::vector<double> air = {1.8 * mm, 3.2 * mm, 5.0 * mm};
  std::vector<double> caps = {2.4 * mm, 3.8 * mm, 6.0 * mm};
  int n_theta = 24, nz = 8;
  if (refine > 0) {
    cond = {mm / 6.0, mm / 3.0, 0.5 * mm, 2.0 * mm / 3.0, 5.0 * mm / 6.0, 1.0 * mm};
    air = {1.4 * mm, 1.8 * mm, 2.5 * mm, 3.2 * mm, 5.0 * mm};
    caps = {1.4 * mm, 2.0 * mm, 2.9 * mm, 4.2 * mm, 6.0 * mm};
    n_theta = 48;
    nz = 16;
  }
  return cylinder_mesh(wire_spec(cond, air, n_theta, nz, 0.05, caps));
}

Mesh bar_fixture() {
  BoxSpec s;
  const double mm = 1e-3;
  s.origin = {0.0, 0.0, 0.0};
  s.size = {4 * mm, 4 * mm, 8 * mm};
  s.nx = 4;
  s.ny = 4;
  s.nz = 8;
  s.region_of = [](const Eigen::Vector3d&) { return kRegionConductor; };
  const double zt = 8 * mm;
  s.surface_tag_of = [zt](const Eigen::Vector3d& c, const Eigen::Vector3d& n) {
    if (n.z() < -0.5 && c.z() < 1e-9) return kSurfTerminalA;
    if (n.z() > 0.5 && c.z() > zt - 1e-9) return kSurfTerminalB;
    return kSurfOuter;
  };
  s.names = {{kRegionConductor, {3, "bar"}},
             {kSurfOuter, {2, "outer"}},
             {kSurfTerminalA, {2, "terminal:a"}},
             {kSurfTerminalB, {2, "terminal:b"}}};
  return box_mesh(s);
}

Mesh two_bar_fixture() {
  BoxSpec s;
  const double mm = 1e-3;
  s.origin = {0.0, 0.0, 0.0};
  s.size = {12 * mm, 8 * mm, 10 * mm};
  s.nx = 12;
  s.ny = 8;
  s.nz = 10;
  auto in_bar1 = [mm](double x, double y) {
    return x > 2 * mm && x < 4 * mm && y > 3 * mm && y < 5 * mm;
  };
  auto in_bar2 = [mm](double x, double y) {
    return x > 8 * mm && x < 10 * mm && y > 3 * mm && y < 5 * mm;
  };
  s.region_of = [=](const Eigen::Vector3d& c) {
    if (in_bar1(c.x(), c.y())) return kRegionConductor;
    if (in_bar2(c.x(), c.y())) return kRegionConductor2;
    return kRegionAir;
  };
  const double zt = 10 * mm;
  s.surface_tag_of = [=](const Eigen::Vector3d& c, const Eigen::Vector3d& n) {
    if (n.z() < -0.5 && c.z() < 1e-9) {
      if (in_bar1(c.x(), c.y())) return kSurfTerminalA;
      if (in_bar2(c.x(), c.y())) return kSurfTerminalC;
    }
    if (n.z() > 0.5 && c.z() > zt - 1e-9) {
      if (in_bar1(c.x(), c.y())) return kSurfTerminalB;
      if (in_bar2(c.x(), c.y())) return kSurfTerminalD;
    }
    return kSurfOuter;
  };
  s.names = {{kRegionConductor, {3, "bar1"}},   {kRegionConductor2, {3, "bar2"}},
             {kRegionAir, {3, "air"}},          {kSurfOuter, {2, "outer"}},
             {kSurfTerminalA, {2, "terminal:a"}}, {kSurfTerminalB, {2, "terminal:b"}},
             {kSurfTerminalC, {2, "terminal:c"}}, {kSurfTerminalD, {2, "terminal:d"}}};
  return box_mesh(s);
}

Mesh capacitor_fixture() {
  BoxSpec s;
  const double mm = 1e-3;
  s.origin = {0.0, 0.0, 0.0};
  s.size = {16 * mm, 16 * mm, 8 * mm};
  s.nx = 16;
  s.ny = 16;
  s.nz = 8;
  auto over_plate = [mm](double x, double y) {
    return x > 4 * mm && x < 12 * mm && y > 4 * mm && y < 12 * mm;
  };
  s.region_of = [=](const Eigen::Vector3d& c) {
    if (!over_plate(c.x(), c.y())) return kRegionAir;
    if (c.z() < 1 * mm || c.z() > 7 * mm) return kRegionConductor;
    return kRegionDielectric;
  };
  const double zt = 8 * mm;
  s.surface_tag_of = [=](const Eigen::Vector3d& c, const Eigen::Vector3d& n) {
    if (n.z() < -0.5 && c.z() < 1e-9 && over_plate(c.x(), c.y())) return kSurfTerminalA;
    if (n.z() > 0.5 && c.z() > zt - 1e-9 && over_plate(c.x(), c.y())) return kSurfTerminalB;
    return kSurfOuter;
  };
  s.names = {{kRegionConductor, {3, "plates"}},
             {kRegionAir, {3, "air"}},
             {kRegionDielectric, {3, "dielectric"}},
             {kSurfOuter, {2, "outer"}},
             {kSurfTerminalA, {2, "terminal:a"}},
             {kSurfTerminalB, {2, "terminal:b"}}};
  return box_mesh(s);
}

Mesh coil_fixture() {
  const double mm = 1e-3;
  CylinderSpec s;
  s.radii = {1 * mm, 2 * mm, 3 * mm, 4.5 * mm, 6 * mm, 8.5 * mm, 12 * mm};
  s.annulus_region = {kRegionConductor, kRegionConductor, kRegionDielectric,
                      kRegionDielectric, kRegionDielectric, kRegionAir, kRegionAir};
  s.bottom_tag = {kSurfTerminalA, kSurfTerminalA, kSurfOuter, kSurfOuter,
                  kSurfOuter,     kSurfOuter,     kSurfOuter};
  s.top_tag = {kSurfTerminalB, kSurfTerminalB, kSurfOuter, kSurfOuter,
               kSurfOuter,     kSurfOuter,     kSurfOuter};
  s.side_tag = kSurfOuter;
  s.n_theta = 12;
  s.nz = 8;
  s.length = 0.02;
  s.names = {{kRegionConductor, {3, "core"}},
             {kRegionDielectric, {3, "sleeve"}},
             {kRegionAir, {3, "air"}},
             {kSurfOuter, {2, "outer"}},
             {kSurfTerminalA, {2, "terminal:a"}},
             {kSurfTerminalB, {2, "terminal:b"}}};
  return cylinder_mesh(s);
}

}  // namespace parex::meshgen
