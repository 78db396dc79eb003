#pragma once

#include <functional>

#include "parex/linsolve.hpp"

namespace parex {

enum class Formulation { FullWave, Darwin, Mqs };
enum class ConductorModel { Lossy, Pec };
enum class BoundaryCondition { Electric, Magnetic, DualImage };

struct ExtractionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ProblemSpec {
  Formulation formulation = Formulation::Mqs;
  ConductorModel conductor_model = ConductorModel::Lossy;
  BoundaryCondition boundary = BoundaryCondition::Electric;
  std::vector<Branch> branches;
  std::vector<double> frequencies;  // Hz, ascending, > 0
  double I0 = 1.0;                  // A
  double sigma_tilde = 1.0;         // S/m, fictitious source conductivity
  bool compensation = true;         // apply the g term in the potential equation
  double f_x = 1000.0;              // stabilization crossover frequency
  int threads = 1;
  void validate() const;
};

struct FieldSolution {
  Eigen::VectorXcd E;      // full edge vector, zeros on Dirichlet edges
  Eigen::VectorXcd phi_c;  // nodal
  double frequency = 0.0;
  bool compensation_applied = true;
};

struct SweepEntry {
  double frequency = 0.0;
  Eigen::MatrixXcd Z;
  bool ok = true;
  std::string error;
};

struct SweepResult {
  std::vector<SweepEntry> entries;
  int n_branches = 0;
};

/// Surface-averaged potential difference avg_{T_b} phi - avg_{T_a} phi.
Complex terminal_voltage(const Mesh& mesh, const Eigen::VectorXcd& phi, const Branch& branch);
double terminal_voltage(const Mesh& mesh, const Eigen::VectorXd& phi, const Branch& branch);

/// One mesh + material + boundary-kind context: degree-of-freedom maps,
/// global operators and the gauge basis are built once and shared by all
/// branches and frequencies. All solve methods are const and thread-safe.
class Extractor {
 public:
  Extractor(const Mesh& mesh, const MaterialTable& mat, const ProblemSpec& spec,
            BoundaryKind boundary, int root_offset = 0);

  const Mesh& mesh() const { return mesh_; }
  const DofSystem& dofs() const { return dofs_; }
  const FemOperators& ops() const { return ops_; }
  const EdgeBasis& basis() const { return basis_; }

  /// Source potential: sigma_tilde-Laplace problem driven by the branch load.
  Eigen::VectorXd solve_xi(const Branch& branch) const;
  /// Frequency-independent compensation field (Darwin/MQS); zero-mean on a
  /// pure-magnetic boundary.
  Eigen::VectorXd solve_g_static(const Branch& branch) const;
  /// Formulation-aware g (full-wave keeps the omega^2/c^2 term).
  Eigen::VectorXcd solve_g(const Branch& branch, double f) const;
  /// Edge-space source term of the E equation.
  Eigen::VectorXcd e_rhs(const Branch& branch, double f) const;
  Eigen::VectorXcd solve_E(const Branch& branch, double f) const;
  Eigen::VectorXcd solve_phi_c(double f, const Eigen::VectorXcd& E,
                               const Eigen::VectorXcd& g) const;
  /// Full pipeline at one frequency (Darwin uses the coupled block solve).
  FieldSolution field_solution(const Branch& branch, double f) const;
  Eigen::MatrixXcd impedance_at(double f) const;

  /// Frequency-independent inductance matrix of the scaled real PEC path.
  Eigen::MatrixXd l_matrix_pec_mqs() const;

  /// Integral of an edge field over the selected regions (diagnostics).
  Eigen::Vector3cd integrate_edge_field(const Eigen::VectorXcd& E,
                                        const std::function<bool(int)>& take_region) const;

 private:
  template <typename Vec, typename Mat>
  Vec scalar_solve(const Mat& A_masked, Vec b, bool pinned) const;
  ClassScales edge_scales(double f) const;
  FieldSolution darwin_solution(const Branch& branch, double f) const;
  int terminal_component(int tag) const;

  const Mesh& mesh_;
  const MaterialTable& mat_;
  ProblemSpec spec_;
  DofSystem dofs_;
  FemOperators ops_;
  EdgeBasis basis_;
  bool pure_neumann_scalar_ = false;
  std::vector<char> scalar_mask_;  // node Dirichlet plus gauge pin
  SpMat K_xi_;                     // sigma_tilde * K_unit, Dirichlet applied
  SpMat K_eps_d_;                  // K_eps, Dirichlet applied
};

/// Frequency sweep honoring the boundary condition (dual-image runs both
/// boundary kinds and averages) with concurrent frequency execution; solver
/// failures are captured per frequency.
SweepResult sweep(const Mesh& mesh, const MaterialTable& mat, const ProblemSpec& spec);

SweepResult dual_image(const SweepResult& electric, const SweepResult& magnetic);

struct CExtraction {
  double c = 0.0;       // F, extracted at f0
  double e_x_f0 = 0.0;  // reactance self-consistency at f0 (C from f0/2)
  double e_x_half = 0.0;
};

CExtraction extract_c_darwin_pec(const Mesh& mesh, const MaterialTable& mat,
                                 const ProblemSpec& spec, double f0);

Eigen::MatrixXd extract_l_pec_mqs(const Mesh& mesh, const MaterialTable& mat,
                                  const ProblemSpec& spec);

}  // namespace parex
