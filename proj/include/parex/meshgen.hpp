#pragma once

#include <functional>

#include "parex/mesh.hpp"

namespace parex::meshgen {

/// Structured cylinder aligned with +z: radial rings (ascending radii), a
/// regular n_theta fan, nz extrusion layers. Each annulus (index 0 = the
/// innermost disk) carries a region tag and per-end surface tags; the lateral
/// surface carries side_tag.
struct CylinderSpec {
  std::vector<double> radii;
  std::vector<int> annulus_region;
  std::vector<int> bottom_tag;  // per annulus, z = z_min
  std::vector<int> top_tag;     // per annulus, z = z_max
  int side_tag = 0;
  int n_theta = 16;
  int nz = 10;
  double length = 1.0;
  /// Optional explicit ascending layer boundaries (size nz + 1); overrides
  /// nz/length when non-empty.
  std::vector<double> z_levels;
  /// Optional per-(annulus, layer) region override of annulus_region.
  std::function<int(int annulus, int layer)> region_of;
  /// Interior tagged disk: the cross-section triangles of the first n_rings
  /// annuli at the layer boundary closest to z.
  struct InteriorDisk {
    double z = 0.0;
    int n_rings = 1;
    int tag = 0;
  };
  std::vector<InteriorDisk> disks;
  std::map<int, PhysicalName> names;
};

Mesh cylinder_mesh(const CylinderSpec& spec);

/// Axis-aligned box split into nx*ny*nz cells of 6 tets each (Kuhn split).
/// Regions assigned per cell center; boundary faces tagged by centroid and
/// outward normal.
struct BoxSpec {
  Eigen::Vector3d origin{0.0, 0.0, 0.0};
  Eigen::Vector3d size{1.0, 1.0, 1.0};
  int nx = 1, ny = 1, nz = 1;
  std::function<int(const Eigen::Vector3d&)> region_of;
  std::function<int(const Eigen::Vector3d&, const Eigen::Vector3d&)> surface_tag_of;
  std::map<int, PhysicalName> names;
};

Mesh box_mesh(const BoxSpec& spec);

// Shared tag conventions of the bundled fixtures.
inline constexpr int kRegionConductor = 1;
inline constexpr int kRegionAir = 2;
inline constexpr int kRegionDielectric = 3;
inline constexpr int kRegionConductor2 = 4;
inline constexpr int kSurfOuter = 11;
inline constexpr int kSurfTerminalA = 12;
inline constexpr int kSurfTerminalB = 13;
inline constexpr int kSurfTerminalC = 14;
inline constexpr int kSurfTerminalD = 15;

/// 50 mm x 1 mm-radius wire in a wide air cylinder (inductance studies).
Mesh wire_fixture(int refine = 0);
/// Same wire in a tight domain with a finer cross-section (resistance studies).
Mesh wire_r_fixture(int refine = 0);
/// Solid conducting bar spanning a box; terminals are the full end faces.
Mesh bar_fixture();
/// Two parallel bars (two branches) for reciprocity checks.
Mesh two_bar_fixture();
/// Parallel-plate capacitor, plates touching the z boundaries.
Mesh capacitor_fixture();
/// Coaxial core with a permeable sleeve (closed azimuthal flux path).
Mesh coil_fixture();

}  // namespace parex::meshgen
