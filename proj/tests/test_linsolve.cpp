#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "parex/extraction.hpp"
#include "parex/linsolve.hpp"
#include "support/fixtures.hpp"

using namespace parex;
using namespace parex::testfix;

TEST_CASE("direct solver contract") {
  SUBCASE("solves a well-posed system") {
    std::vector<Eigen::Triplet<double>> t = {{0, 0, 4.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 3.0}};
    SpMat A(2, 2);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd b(2);
    b << 1.0, 2.0;
    const Eigen::VectorXd x = solve(A, b);
    CHECK((A * x - b).norm() <= 1e-12);
  }
  SUBCASE("singular matrix names a pivot proxy") {
    std::vector<Eigen::Triplet<double>> t = {{0, 0, 1.0}, {0, 1, 1.0}, {1, 0, 1.0}, {1, 1, 1.0}};
    SpMat A(2, 2);
    A.setFromTriplets(t.begin(), t.end());
    Eigen::VectorXd b(2);
    b << 1.0, 0.0;
    CHECK_THROWS_WITH_AS(solve(A, b), doctest::Contains("pivot proxy"), SolveError);
  }
  SUBCASE("shape validation") {
    SpMat A(2, 3);
    Eigen::VectorXd b(3);
    CHECK_THROWS_AS(solve(A, b), SolveError);
    SpMat B(2, 2);
    B.setIdentity();
    Eigen::VectorXd c(3);
    CHECK_THROWS_AS(solve(B, c), SolveError);
  }
}

TEST_CASE("gauge basis spans the free edges exactly once") {
  Mesh m = mini_capacitor();
  for (auto mat : {lossy_materials(), pec_materials()}) {
    for (auto bk : {BoundaryKind::Electric, BoundaryKind::Magnetic}) {
      DofSystem dofs = build_dof_system(m, mat, bk,
                                        {meshgen::kSurfTerminalA, meshgen::kSurfTerminalB});
      EdgeBasis basis = build_edge_basis(m, mat, dofs);
      CHECK(basis.n_cols() == dofs.count_free_edges());  // square basis
      CHECK(basis.count(EdgeColClass::V) + basis.count(EdgeColClass::S) +
                basis.count(EdgeColClass::W) + basis.count(EdgeColClass::U) ==
            basis.n_cols());
      // No entries on Dirichlet edges.
      for (int k = 0; k < basis.P.outerSize(); ++k)
        for (SpMat::InnerIterator it(basis.P, k); it; ++it)
          CHECK(dofs.edge_dirichlet[it.row()] == 0);
    }
  }
}

TEST_CASE("exact-gradient columns are kernel vectors of the curl operator") {
  Mesh m = mini_bar();
  MaterialTable mat = lossy_materials();
  DofSystem dofs = build_dof_system(m, mat, BoundaryKind::Magnetic,
                                    {meshgen::kSurfTerminalA, meshgen::kSurfTerminalB});
  FemOperators ops = build_operators(m, mat, dofs);
  EdgeBasis basis = build_edge_basis(m, mat, dofs);
  int checked = 0;
  for (int c = 0; c < basis.n_cols(); ++c) {
    if (basis.cls[c] != EdgeColClass::U && basis.cls[c] != EdgeColClass::W) continue;
    Eigen::VectorXd u = Eigen::VectorXd::Zero(dofs.n_edges);
    for (SpMat::InnerIterator it(basis.P, c); it; ++it) u[it.row()] = it.value();
    CHECK((ops.K_curl * u).cwiseAbs().maxCoeff() <= 1e-12 * ops.K_curl.norm());
    // U columns additionally avoid every conducting element.
    if (basis.cls[c] == EdgeColClass::U)
      CHECK((ops.M_edge_sigma * u).cwiseAbs().maxCoeff() == 0.0);
    ++checked;
  }
  CHECK(checked > 0);
}

TEST_CASE("class scale factories") {
  CHECK(mqs_gauge_scales().drop_u);
  CHECK(mqs_stabilized_scales(100.0).drop_u);
  CHECK(std::abs(mqs_stabilized_scales(100.0).w) ==
        doctest::Approx(1.0 / std::sqrt(2 * M_PI * 100.0 * kMu0)).epsilon(1e-12));
  CHECK(!fullwave_scales(100.0).drop_u);
  CHECK(std::abs(fullwave_scales(100.0).u) == doctest::Approx(kC0 / (2 * M_PI * 100.0)));
  CHECK(darwin_scales(100.0).u.imag() == 0.0);
  CHECK_THROWS_AS(mqs_stabilized_scales(0.0), SolveError);
  CHECK_THROWS_AS(fullwave_scales(0.0), SolveError);
  CHECK_THROWS_AS(darwin_scales(-1.0), SolveError);

  Mesh m = mini_capacitor();
  MaterialTable mat = pec_materials();
  DofSystem dofs = build_dof_system(m, mat, BoundaryKind::Magnetic,
                                    {meshgen::kSurfTerminalA, meshgen::kSurfTerminalB});
  EdgeBasis basis = build_edge_basis(m, mat, dofs);
  SpMatC full = scaled_basis(basis, ClassScales{});
  SpMatC dropped = scaled_basis(basis, mqs_gauge_scales());
  CHECK(full.cols() == basis.n_cols());
  CHECK(dropped.cols() == basis.n_cols() - basis.count(EdgeColClass::U));
}

TEST_CASE("stabilized and plain tree-cotree MQS agree") {
  Mesh m = mini_bar();
  MaterialTable mat = lossy_materials();
  ProblemSpec spec;
  spec.branches = {{meshgen::kSurfTerminalA, meshgen::kSurfTerminalB}};
  spec.formulation = Formulation::Mqs;
  spec.frequencies = {100.0};
  Extractor ex(m, mat, spec, BoundaryKind::Magnetic);
  const Branch br = spec.branches[0];
  const double f = 100.0;
  const Eigen::VectorXcd b = ex.e_rhs(br, f);
  const Complex jwmu0(0.0, 2 * M_PI * f * kMu0);
  const SpMatC rest = SpMatC(jwmu0 * ex.ops().M_edge_sigma.cast<Complex>());
  const Eigen::VectorXcd e_plain =
      solve_edge_gauged(ex.ops().K_curl, rest, b, ex.basis(), mqs_gauge_scales());
  const Eigen::VectorXcd e_stab =
      solve_edge_gauged(ex.ops().K_curl, rest, b, ex.basis(), mqs_stabilized_scales(f));
  CHECK((e_plain - e_stab).norm() <= 1e-8 * e_stab.norm());
}

TEST_CASE("spanning-tree root choice does not change the physics") {
  Mesh m = mini_bar();
  MaterialTable mat = lossy_materials();
  ProblemSpec spec;
  spec.branches = {{meshgen::kSurfTerminalA, meshgen::kSurfTerminalB}};
  spec.formulation = Formulation::Mqs;
  spec.frequencies = {100.0};
  const Branch br = spec.branches[0];
  Extractor ex0(m, mat, spec, BoundaryKind::Magnetic, 0);
  Extractor ex1(m, mat, spec, BoundaryKind::Magnetic, 7);
  const Eigen::VectorXcd e0 = ex0.solve_E(br, 100.0);
  const Eigen::VectorXcd e1 = ex1.solve_E(br, 100.0);
  // curl E is gauge invariant even though E itself may differ by a gradient.
  const Eigen::VectorXcd d = ex0.ops().K_curl.cast<Complex>() * (e0 - e1);
  const double ref = (ex0.ops().K_curl.cast<Complex>() * e0).norm();
  CHECK(d.norm() <= 1e-9 * ref);
  // And the extracted impedance is identical physics.
  const Eigen::MatrixXcd z0 = ex0.impedance_at(100.0);
  const Eigen::MatrixXcd z1 = ex1.impedance_at(100.0);
  CHECK(std::abs(z0(0, 0) - z1(0, 0)) <= 1e-9 * std::abs(z0(0, 0)));
}

TEST_CASE("PEC reactance is exactly linear in frequency") {
  Mesh m = mini_capacitor();
  MaterialTable mat = pec_materials();
  ProblemSpec spec;
  spec.branches = {{meshgen::kSurfTerminalA, meshgen::kSurfTerminalB}};
  spec.formulation = Formulation::Darwin;
  spec.conductor_model = ConductorModel::Pec;
  spec.frequencies = {50.0, 100.0};
  Extractor ex(m, mat, spec, BoundaryKind::Magnetic);
  const Complex z1 = ex.impedance_at(50.0)(0, 0);
  const Complex z2 = ex.impedance_at(100.0)(0, 0);
  CHECK(z1.real() == doctest::Approx(0.0).scale(std::abs(z1)));
  // Capacitive: X = -1/(w C) halves... doubles in magnitude when f halves.
  CHECK(z1.imag() * 0.5 == doctest::Approx(z2.imag()).epsilon(1e-10));
  CHECK(z2.imag() < 0.0);
}

TEST_CASE("block solver validates dimensions") {
  SpMatC A(2, 2), B(2, 1), C(1, 2), D(1, 1);
  A.setIdentity();
  D.setIdentity();
  Eigen::VectorXcd b1(2), b2(1);
  b1.setZero();
  b2.setZero();
  SpMatC Bad(3, 1);
  CHECK_THROWS_AS(solve_block2(A, Bad, C, D, b1, b2), SolveError);
}
