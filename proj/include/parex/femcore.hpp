#pragma once

#include <complex>
#include <map>
#include <set>

#include <Eigen/Sparse>

#include "parex/mesh.hpp"

namespace parex {

inline constexpr double kMu0 = 4.0e-7 * 3.14159265358979323846;
inline constexpr double kC0 = 299792458.0;
inline constexpr double kEps0 = 1.0 / (kMu0 * kC0 * kC0);

using SpMat = Eigen::SparseMatrix<double>;
using SpMatC = Eigen::SparseMatrix<std::complex<double>>;
using Complex = std::complex<double>;

struct FemError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Material {
  double sigma = 0.0;   // S/m
  double eps_r = 1.0;
  double mu_r = 1.0;
  bool pec = false;
  bool conducting() const { return pec || sigma > 0.0; }
};

struct MaterialTable {
  std::map<int, Material> regions;
  const Material& at(int region) const;
  bool region_conducting(int region) const { return at(region).conducting(); }
  void validate(const Mesh& mesh) const;  // every mesh region present, mu_r/eps_r > 0
};

/// Per-tet geometry: volume and barycentric gradients (column n = grad lambda_n).
struct TetGeometry {
  double volume = 0.0;
  Eigen::Matrix<double, 3, 4> grad;
};

TetGeometry tet_geometry(const Mesh& mesh, int t);

/// Local tet edges; Whitney functions are oriented along the global
/// low-id -> high-id convention via the per-edge sign.
inline constexpr int kLocalEdges[6][2] = {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};

struct TetEdgeInfo {
  std::array<int, 6> edge;      // global edge index per local edge
  std::array<double, 6> sign;   // +1 if local (a,b) matches global low->high
  std::array<std::array<int, 2>, 6> local;  // local node pairs
};
TetEdgeInfo tet_edges(const Mesh& mesh, int t);

Eigen::Matrix4d elem_scalar_stiffness(const TetGeometry& g, double coeff);
Eigen::Matrix4d elem_scalar_mass(const TetGeometry& g, double coeff);
Eigen::Matrix<double, 6, 6> elem_curl_curl(const TetGeometry& g, const TetEdgeInfo& e, double nu_r);
Eigen::Matrix<double, 6, 6> elem_edge_mass(const TetGeometry& g, const TetEdgeInfo& e, double coeff);
Eigen::Matrix<double, 6, 4> elem_mixed_grad(const TetGeometry& g, const TetEdgeInfo& e, double eps_r);

enum class BoundaryKind { Electric, Magnetic };

/// Nodal and edge degree-of-freedom bookkeeping: Dirichlet masks for the
/// outer boundary kind, conductor incidence, and conductor components.
struct DofSystem {
  BoundaryKind boundary = BoundaryKind::Electric;
  bool pec_mode = false;
  int n_nodes = 0;
  int n_edges = 0;
  std::vector<char> node_dirichlet;   // node on Gamma_el
  std::vector<char> edge_dirichlet;   // edge in a Gamma_el face, or edge of a PEC tet
  std::vector<char> node_conductor;   // node of a conducting tet
  std::vector<char> edge_conductor;   // edge of a conducting tet
  std::vector<int> cond_component;    // per node, -1 outside conductors
  int n_cond_components = 0;

  int count_free_edges() const;
};

/// Terminal surfaces are excluded from Gamma_el so that the potential there
/// stays an unknown.
DofSystem build_dof_system(const Mesh& mesh, const MaterialTable& mat, BoundaryKind boundary,
                           const std::set<int>& terminal_tags);

/// Unconstrained global operators shared by all formulations. Edge-space and
/// mixed operators skip PEC tets (the E equation is enforced in Omega_0 only).
struct FemOperators {
  SpMat K_nodal_eps;   // (eps_r grad u, grad v)
  SpMat K_nodal_unit;  // (grad u, grad v)
  SpMat M_nodal;       // (u, v)
  SpMat K_curl;        // (nu_r curl w, curl w')
  SpMat M_edge_sigma;  // (sigma w, w')
  SpMat M_edge_eps;    // (eps_r w, w')
  SpMat G_eps;         // edge x node, (eps_r w, grad v)
  SpMat G_unit;        // edge x node, (w, grad v)
  SpMat T;             // edge x node discrete gradient incidence
};

FemOperators build_operators(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs);

/// Nodal load with b_n = magnitude * area(tri)/3 per incident node;
/// sums to magnitude * area(tag).
Eigen::VectorXd surface_load(const Mesh& mesh, int tag, double magnitude);

struct Branch {
  int terminal_a = 0;
  int terminal_b = 0;
};

/// div J_s load of a branch: +I0/A(T_a) on T_a and -I0/A(T_b) on T_b.
/// Sums to zero exactly (up to rounding).
Eigen::VectorXd branch_div_load(const Mesh& mesh, const Branch& branch, double I0);

/// Symmetric Dirichlet elimination in place: masked rows/cols zeroed, unit diagonal.
void apply_dirichlet(SpMat& A, const std::vector<char>& mask);
void apply_dirichlet(SpMatC& A, const std::vector<char>& mask);

enum class FormSelector {
  ScalarXi,
  ScalarGFullWave,
  ScalarGDarwin,
  EFieldFullWave,
  EFieldMqs,
  ScalarPhicFullWave,
  ScalarPhicMqs,
  DarwinBlock,
};

enum class DofKind { Nodal, Edge, MixedBlock };

struct AssembledOperator {
  SpMatC A;
  DofKind kind = DofKind::Nodal;
  bool symmetric = true;
};

struct DarwinBlocks {
  SpMatC A_EE;      // curlcurl(nu_r) + i omega mu0 M_sigma
  SpMatC A_Ephi;    // (omega/c)^2 G_eps
  SpMatC A_phiE;    // G_eps^T
  SpMatC A_phiphi;  // K_eps - (omega/c)^2 M
  // Raw (no Dirichlet) split of A_EE. The gauged solve reduces the curl part
  // separately so the exact-gradient basis columns hit analytic zeros instead
  // of accumulated roundoff.
  SpMat K_curl;
  SpMat M_sigma;
};

/// Assembles the operator of a scalar or edge form with Dirichlet rows/cols
/// eliminated symmetrically (Dirichlet value 0).
AssembledOperator assemble(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs,
                           FormSelector form, double frequency, double sigma_tilde = 1.0);
AssembledOperator assemble(const FemOperators& ops, const DofSystem& dofs, FormSelector form,
                           double frequency, double sigma_tilde = 1.0);

DarwinBlocks assemble_darwin_blocks(const Mesh& mesh, const MaterialTable& mat,
                                    const DofSystem& dofs, double frequency);
DarwinBlocks assemble_darwin_blocks(const FemOperators& ops, const DofSystem& dofs,
                                    double frequency);

}  // namespace parex
