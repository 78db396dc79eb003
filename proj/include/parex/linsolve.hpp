#pragma once

#include "parex/femcore.hpp"

namespace parex {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Direct sparse factorization with a residual contract
/// ||Ax-b||/||b|| <= 1e-10. Throws SolveError on a singular factorization,
/// naming the smallest diagonal entry as pivot proxy.
Eigen::VectorXd solve(const SpMat& A, const Eigen::VectorXd& b);
Eigen::VectorXcd solve(const SpMatC& A, const Eigen::VectorXcd& b);

inline constexpr double kSolveResidualTol = 1e-10;

/// Column classes of the gauged edge basis:
///   V - cotree free edges (carry the curl)
///   S - truncated nodal-hat gradients of nodes incident to Dirichlet edges
///   W - nodal-hat gradients of conductor nodes (controlled by the sigma mass)
///   U - exact-gradient columns supported outside every conducting element
///       (strict-air hats and class-uniform gradients); the nullspace of the
///       curl-curl + conduction operator.
enum class EdgeColClass { V, S, W, U };

struct EdgeBasis {
  SpMat P;  // n_edges x n_cols, entries in {-1, 0, +1}
  std::vector<EdgeColClass> cls;
  int n_cols() const { return static_cast<int>(cls.size()); }
  int count(EdgeColClass c) const;
};

/// Tree-cotree basis of the free (non-Dirichlet) edge subspace. Nodes are
/// merged into quotient classes (all nodes of a conducting element; endpoints
/// of every Dirichlet edge) so that each class-uniform gradient column is an
/// exact kernel vector of the gauged operators. One class-uniform column per
/// free-edge component (the root's class) is omitted: the per-component
/// uniform columns sum to zero. root_offset rotates the deterministic root
/// choice for gauge-invariance checks.
EdgeBasis build_edge_basis(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs,
                           int root_offset = 0);

/// Per-class diagonal scaling of the basis columns; drop_u removes the U
/// columns entirely (tree-cotree gauge of the singular MQS operator).
struct ClassScales {
  Complex v{1.0, 0.0};
  Complex s{1.0, 0.0};
  Complex w{1.0, 0.0};
  Complex u{1.0, 0.0};
  bool drop_u = false;
};

/// Tree-cotree gauge (MQS): U columns dropped, no scaling.
ClassScales mqs_gauge_scales();
/// Low-frequency stabilized MQS: U dropped, W scaled by (i*omega*mu0)^{-1/2}.
ClassScales mqs_stabilized_scales(double frequency);
/// Full-wave stabilization: W as above, U scaled by c/(i*omega).
/// Throws for frequency == 0 (use the MQS or PEC paths there).
ClassScales fullwave_scales(double frequency);
/// Darwin block stabilization: W as above, U scaled by c^2/omega^2 against
/// the scalar coupling (the E block alone has no mass term acting on U).
ClassScales darwin_scales(double frequency);

/// Scaled/reduced basis Pd = P * D with drop/scale rules applied.
SpMatC scaled_basis(const EdgeBasis& basis, const ClassScales& scales);

/// Solves (K_curl + A_rest) x = b on the gauged subspace:
/// y = (Pd^T A Pd)^{-1} Pd^T b, x = Pd y. The operator is passed split
/// because the curl part annihilates the exact-gradient columns (classes U
/// and W) analytically; their rows and columns of the reduced curl block are
/// forced to zero instead of being accumulated as roundoff, which would
/// otherwise be amplified by the class scaling and bury the physical
/// couplings of those rows. The reduced-system residual obeys the solve
/// contract; for gauged (rank-deficient) operators the full-system residual
/// additionally requires a compatible right-hand side.
Eigen::VectorXcd solve_edge_gauged(const SpMat& K_curl, const SpMatC& A_rest,
                                   const Eigen::VectorXcd& b, const EdgeBasis& basis,
                                   const ClassScales& scales);

/// Real variant for the frequency-independent PEC path (tree-cotree gauge).
Eigen::VectorXd solve_edge_gauged(const SpMat& A, const Eigen::VectorXd& b,
                                  const EdgeBasis& basis);

/// Monolithic solve of [[A11, A12], [A21, A22]] [x1; x2] = [b1; b2];
/// returns the stacked solution.
Eigen::VectorXcd solve_block2(const SpMatC& A11, const SpMatC& A12, const SpMatC& A21,
                              const SpMatC& A22, const Eigen::VectorXcd& b1,
                              const Eigen::VectorXcd& b2);

struct DarwinSolution {
  Eigen::VectorXcd E;    // full edge-length vector (zeros on Dirichlet edges)
  Eigen::VectorXcd phi;  // nodal
};

/// Coupled Darwin solve with the E block expressed in the scaled gauge basis;
/// the potential equation is symmetrized and rescaled internally.
DarwinSolution solve_darwin_block(const DarwinBlocks& blocks, const EdgeBasis& basis,
                                  const ClassScales& scales, const Eigen::VectorXcd& bE,
                                  const Eigen::VectorXcd& bphi, double frequency);

}  // namespace parex
