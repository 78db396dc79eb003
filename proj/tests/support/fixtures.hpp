#pragma once

// Small fast fixtures shared by the test suites.

#include "parex/femcore.hpp"
#include "parex/meshgen.hpp"

namespace parex::testfix {

/// 4x4x4 mm box with two 2x2x1 mm plates facing each other across a 2 mm
/// gap; terminals on the outer plate faces. 384 tets - fast enough for dense
/// cross-checks.
inline Mesh mini_capacitor() {
  using namespace meshgen;
  BoxSpec bs;
  const double mm = 1e-3;
  bs.origin = {0, 0, 0};
  bs.size = {4 * mm, 4 * mm, 4 * mm};
  bs.nx = bs.ny = bs.nz = 4;
  auto over = [mm](double x, double y) {
    return x > 1 * mm && x < 3 * mm && y > 1 * mm && y < 3 * mm;
  };
  bs.region_of = [=](const Eigen::Vector3d& c) {
    if (!over(c.x(), c.y())) return kRegionAir;
    if (c.z() < 1 * mm || c.z() > 3 * mm) return kRegionConductor;
    return kRegionAir;
  };
  bs.surface_tag_of = [=](const Eigen::Vector3d& c, const Eigen::Vector3d& n) {
    if (n.z() < -0.5 && c.z() < 1e-9 && over(c.x(), c.y())) return kSurfTerminalA;
    if (n.z() > 0.5 && c.z() > 4 * mm - 1e-9 && over(c.x(), c.y())) return kSurfTerminalB;
    return kSurfOuter;
  };
  bs.names = {{kRegionConductor, {3, "plates"}},
              {kRegionAir, {3, "air"}},
              {kSurfOuter, {2, "outer"}},
              {kSurfTerminalA, {2, "terminal:a"}},
              {kSurfTerminalB, {2, "terminal:b"}}};
  return box_mesh(bs);
}

/// 2x2x6 mm conducting bar through a 6x6x6 mm air box, terminals where the
/// bar meets the z faces. Small companion to the bundled bar fixture.
inline Mesh mini_bar() {
  using namespace meshgen;
  BoxSpec bs;
  const double mm = 1e-3;
  bs.origin = {0, 0, 0};
  bs.size = {6 * mm, 6 * mm, 6 * mm};
  bs.nx = bs.ny = 6;
  bs.nz = 6;
  auto in_bar = [mm](double x, double y) {
    return x > 2 * mm && x < 4 * mm && y > 2 * mm && y < 4 * mm;
  };
  bs.region_of = [=](const Eigen::Vector3d& c) {
    return in_bar(c.x(), c.y()) ? kRegionConductor : kRegionAir;
  };
  bs.surface_tag_of = [=](const Eigen::Vector3d& c, const Eigen::Vector3d& n) {
    if (n.z() < -0.5 && in_bar(c.x(), c.y())) return kSurfTerminalA;
    if (n.z() > 0.5 && in_bar(c.x(), c.y())) return kSurfTerminalB;
    return kSurfOuter;
  };
  bs.names = {{kRegionConductor, {3, "bar"}},
              {kRegionAir, {3, "air"}},
              {kSurfOuter, {2, "outer"}},
              {kSurfTerminalA, {2, "terminal:a"}},
              {kSurfTerminalB, {2, "terminal:b"}}};
  return box_mesh(bs);
}

inline MaterialTable lossy_materials(double sigma = 5.8e7) {
  MaterialTable mat;
  mat.regions[meshgen::kRegionConductor] = {sigma, 1.0, 1.0, false};
  mat.regions[meshgen::kRegionAir] = {0.0, 1.0, 1.0, false};
  return mat;
}

inline MaterialTable pec_materials() {
  MaterialTable mat;
  mat.regions[meshgen::kRegionConductor] = {0.0, 1.0, 1.0, true};
  mat.regions[meshgen::kRegionAir] = {0.0, 1.0, 1.0, false};
  return mat;
}

}  // namespace parex::testfix
