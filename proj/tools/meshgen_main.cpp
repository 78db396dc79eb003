// Writes the bundled benchmark fixtures as Gmsh MSH 2.2 files.

#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "parex/meshgen.hpp"

int main(int argc, char** argv) {
  CLI::App app{"parex fixture mesh generator"};
  std::string fixture;
  std::string output;
  int refine = 0;
  app.add_option("fixture", fixture, "wire | wire-r | bar | two-bar | capacitor | coil")
      ->required();
  app.add_option("output", output, "output .msh path (MSH 2.2)")->required();
  app.add_option("--refine", refine, "refinement level (wire fixtures)")->default_val(0);
  CLI11_PARSE(app, argc, argv);

  try {
    parex::Mesh mesh;
    using namespace parex::meshgen;
    if (fixture == "wire")
      mesh = wire_fixture(refine);
    else if (fixture == "wire-r")
      mesh = wire_r_fixture(refine);
    else if (fixture == "bar")
      mesh = bar_fixture();
    else if (fixture == "two-bar")
      mesh = two_bar_fixture();
    else if (fixture == "capacitor")
      mesh = capacitor_fixture();
    else if (fixture == "coil")
      mesh = coil_fixture();
    else {
      std::fprintf(stderr, "error: unknown fixture '%s'\n", fixture.c_str());
      return 1;
    }
    parex::write_msh22(mesh, output);
    std::printf("%s: %zu nodes, %zu tets, %zu surface tris -> %s\n", fixture.c_str(),
                mesh.nodes.size(), mesh.tets.size(), mesh.boundary_tris.size(), output.c_str());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
