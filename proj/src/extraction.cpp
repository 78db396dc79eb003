#include "parex/extraction.hpp"

#include <atomic>
#include <cmath>
#include <iostream>
#include <numbers>
#include <thread>

namespace parex {

namespace {

constexpr double kPi = std::numbers::pi;

template <typename Vec>
auto surface_average(const Mesh& mesh, int tag, const Vec& phi) {
  typename Vec::Scalar acc{};
  double area = 0.0;
  for (int ti : mesh.surface_tris(tag)) {
    const auto& tri = mesh.boundary_tris[ti];
    const auto& p0 = mesh.nodes[tri.nodes[0]];
    const auto& p1 = mesh.nodes[tri.nodes[1]];
    const auto& p2 = mesh.nodes[tri.nodes[2]];
    const double a = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    acc += a / 3.0 * (phi[tri.nodes[0]] + phi[tri.nodes[1]] + phi[tri.nodes[2]]);
    area += a;
  }
  if (!(area > 0.0)) throw ExtractionError("terminal surface has zero area");
  return acc / area;
}

template <typename Vec>
void mask_vector(Vec& v, const std::vector<char>& mask) {
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) v[static_cast<int>(i)] = typename Vec::Scalar{};
}

}  // namespace

void ProblemSpec::validate() const {
  if (branches.empty()) throw ExtractionError("at least one branch is required");
  for (const auto& b : branches)
    if (b.terminal_a == b.terminal_b)
      throw ExtractionError("branch terminals must be distinct surfaces");
  if (I0 == 0.0) throw ExtractionError("source current I0 must be nonzero");
  for (std::size_t i = 0; i < frequencies.size(); ++i) {
    if (!(frequencies[i] > 0.0)) throw ExtractionError("frequencies must be positive");
    if (i > 0 && frequencies[i] < frequencies[i - 1])
      throw ExtractionError("frequencies must be sorted ascending");
  }
}

Complex terminal_voltage(const Mesh& mesh, const Eigen::VectorXcd& phi, const Branch& branch) {
  return surface_average(mesh, branch.terminal_b, phi) -
         surface_average(mesh, branch.terminal_a, phi);
}

double terminal_voltage(const Mesh& mesh, const Eigen::VectorXd& phi, const Branch& branch) {
  return surface_average(mesh, branch.terminal_b, phi) -
         surface_average(mesh, branch.terminal_a, phi);
}

Extractor::Extractor(const Mesh& mesh, const MaterialTable& mat, const ProblemSpec& spec,
                     BoundaryKind boundary, int root_offset)
    : mesh_(mesh), mat_(mat), spec_(spec) {
  spec_.validate();
  std::set<int> terminal_tags;
  for (const auto& b : spec_.branches) {
    for (int tag : {b.terminal_a, b.terminal_b}) {
      if (!mesh_.has_surface_tag(tag))
        throw ExtractionError("terminal surface tag " + std::to_string(tag) +
                              " not present in mesh");
      terminal_tags.insert(tag);
    }
  }
  if (spec_.conductor_model == ConductorModel::Pec) {
    bool any_pec = false;
    for (const auto& [tag, m] : mat_.regions) any_pec |= m.pec;
    if (!any_pec) throw ExtractionError("PEC conductor model but no region is flagged pec");
  }

  dofs_ = build_dof_system(mesh_, mat_, boundary, terminal_tags);
  ops_ = build_operators(mesh_, mat_, dofs_);
  basis_ = build_edge_basis(mesh_, mat_, dofs_, root_offset);

  scalar_mask_ = dofs_.node_dirichlet;
  pure_neumann_scalar_ =
      std::none_of(scalar_mask_.begin(), scalar_mask_.end(), [](char c) { return c != 0; });
  if (pure_neumann_scalar_) scalar_mask_[0] = 1;  // gauge pin

  K_xi_ = SpMat(spec_.sigma_tilde * ops_.K_nodal_unit);
  apply_dirichlet(K_xi_, scalar_mask_);
  K_eps_d_ = ops_.K_nodal_eps;
  apply_dirichlet(K_eps_d_, scalar_mask_);

  if (spec_.formulation == Formulation::Mqs) {
    for (const auto& b : spec_.branches) {
      const int ca = terminal_component(b.terminal_a);
      const int cb = terminal_component(b.terminal_b);
      if (ca != cb)
        throw ExtractionError(
            "MQS requires both branch terminals on the same conductor component; "
            "use the Darwin formulation for capacitive branches");
    }
  }
}

int Extractor::terminal_component(int tag) const {
  for (int ti : mesh_.surface_tris(tag))
    for (int n : mesh_.boundary_tris[ti].nodes)
      if (dofs_.cond_component[n] >= 0) return dofs_.cond_component[n];
  throw ExtractionError("terminal surface " + std::to_string(tag) +
                        " is not adjacent to any conductor");
}

template <typename Vec, typename Mat>
Vec Extractor::scalar_solve(const Mat& A_masked, Vec b, bool) const {
  mask_vector(b, scalar_mask_);
  return solve(A_masked, b);
}

Eigen::VectorXd Extractor::solve_xi(const Branch& branch) const {
  Eigen::VectorXd b = branch_div_load(mesh_, branch, spec_.I0);
  return scalar_solve(K_xi_, std::move(b), pure_neumann_scalar_);
}

Eigen::VectorXd Extractor::solve_g_static(const Branch& branch) const {
  Eigen::VectorXd b = -branch_div_load(mesh_, branch, spec_.I0);
  Eigen::VectorXd g = scalar_solve(K_eps_d_, std::move(b), pure_neumann_scalar_);
  if (pure_neumann_scalar_) {
    // Fix the additive constant to zero mean: keeps the potential equation
    // compatible on a pure-magnetic boundary.
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.size());
    const Eigen::VectorXd Mg = ops_.M_nodal * g;
    g.array() -= ones.dot(Mg) / ones.dot(ops_.M_nodal * ones);
  }
  return g;
}

Eigen::VectorXcd Extractor::solve_g(const Branch& branch, double f) const {
  if (spec_.formulation != Formulation::FullWave || f < spec_.f_x)
    return solve_g_static(branch).cast<Complex>();
  const double omega = 2.0 * kPi * f;
  const double w2c2 = omega * omega / (kC0 * kC0);
  SpMat A = SpMat(ops_.K_nodal_eps - w2c2 * ops_.M_nodal);
  apply_dirichlet(A, dofs_.node_dirichlet);  // no pin: the omega^2 term fixes the constant
  Eigen::VectorXd b = -branch_div_load(mesh_, branch, spec_.I0);
  mask_vector(b, dofs_.node_dirichlet);
  return solve(A, b).cast<Complex>();
}

Eigen::VectorXcd Extractor::e_rhs(const Branch& branch, double f) const {
  const double omega = 2.0 * kPi * f;
  const Complex jwmu0(0.0, omega * kMu0);
  Eigen::VectorXcd b;
  if (spec_.formulation == Formulation::FullWave) {
    const Eigen::VectorXd xi = solve_xi(branch);
    b = (jwmu0 * spec_.sigma_tilde) * (ops_.G_unit * xi).cast<Complex>();
  } else {
    const Eigen::VectorXcd g = solve_g(branch, f);
    b = -jwmu0 * (ops_.G_eps.cast<Complex>() * g);
  }
  mask_vector(b, dofs_.edge_dirichlet);
  return b;
}

ClassScales Extractor::edge_scales(double f) const {
  switch (spec_.formulation) {
    case Formulation::Mqs:
      return mqs_stabilized_scales(f);
    case Formulation::FullWave:
      return f < spec_.f_x ? fullwave_scales(f) : ClassScales{};
    case Formulation::Darwin:
      return darwin_scales(f);
  }
  return {};
}

Eigen::VectorXcd Extractor::solve_E(const Branch& branch, double f) const {
  // Mass terms assembled separately from the curl part: the gauged solve
  // needs the split to keep the exact-gradient rows of the reduced curl
  // block at their analytic zeros.
  const double omega = 2.0 * kPi * f;
  const Complex jwmu0(0.0, omega * kMu0);
  SpMatC rest = SpMatC(jwmu0 * ops_.M_edge_sigma.cast<Complex>());
  if (spec_.formulation == Formulation::FullWave) {
    const double w2c2 = omega * omega / (kC0 * kC0);
    rest = SpMatC(rest - w2c2 * ops_.M_edge_eps.cast<Complex>());
  }
  return solve_edge_gauged(ops_.K_curl, rest, e_rhs(branch, f), basis_, edge_scales(f));
}

Eigen::VectorXcd Extractor::solve_phi_c(double f, const Eigen::VectorXcd& E,
                                        const Eigen::VectorXcd& g) const {
  const double omega = 2.0 * kPi * f;
  const Complex jwmu0(0.0, omega * kMu0);
  Eigen::VectorXcd b = -(ops_.G_eps.cast<Complex>().transpose() * E);
  if (spec_.compensation) b += jwmu0 * (ops_.M_nodal.cast<Complex>() * g);
  if (spec_.formulation == Formulation::FullWave && f >= spec_.f_x) {
    const double w2c2 = omega * omega / (kC0 * kC0);
    SpMat A = SpMat(ops_.K_nodal_eps - w2c2 * ops_.M_nodal);
    apply_dirichlet(A, dofs_.node_dirichlet);
    mask_vector(b, dofs_.node_dirichlet);
    return solve(A.cast<Complex>().eval(), b);
  }
  mask_vector(b, scalar_mask_);
  return solve(K_eps_d_.cast<Complex>().eval(), b);
}

FieldSolution Extractor::darwin_solution(const Branch& branch, double f) const {
  DarwinBlocks blocks = assemble_darwin_blocks(ops_, dofs_, f);
  const double omega = 2.0 * kPi * f;
  const Complex jwmu0(0.0, omega * kMu0);
  const Eigen::VectorXcd g = solve_g(branch, f);
  Eigen::VectorXcd bE = -jwmu0 * (ops_.G_eps.cast<Complex>() * g);
  mask_vector(bE, dofs_.edge_dirichlet);
  Eigen::VectorXcd bphi = Eigen::VectorXcd::Zero(dofs_.n_nodes);
  if (spec_.compensation) bphi = jwmu0 * (ops_.M_nodal.cast<Complex>() * g);
  mask_vector(bphi, dofs_.node_dirichlet);

  if (pure_neumann_scalar_ && f < spec_.f_x) {
    // Pin one potential node: the omega^2/c^2 shift keeps the scalar block
    // formally nonsingular but numerically degenerate at low frequency.
    std::vector<char> pin(dofs_.n_nodes, 0);
    pin[0] = 1;
    apply_dirichlet(blocks.A_phiphi, pin);
    for (int k = 0; k < blocks.A_Ephi.outerSize(); ++k)
      for (SpMatC::InnerIterator it(blocks.A_Ephi, k); it; ++it)
        if (it.col() == 0) it.valueRef() = 0.0;
    for (int k = 0; k < blocks.A_phiE.outerSize(); ++k)
      for (SpMatC::InnerIterator it(blocks.A_phiE, k); it; ++it)
        if (it.row() == 0) it.valueRef() = 0.0;
    bphi[0] = 0.0;
  }

  const DarwinSolution sol = solve_darwin_block(blocks, basis_, darwin_scales(f), bE, bphi, f);
  return {sol.E, sol.phi, f, spec_.compensation};
}

FieldSolution Extractor::field_solution(const Branch& branch, double f) const {
  if (!(f > 0.0)) throw ExtractionError("frequency must be positive");
  if (spec_.formulation == Formulation::Darwin) return darwin_solution(branch, f);
  const Eigen::VectorXcd g = solve_g(branch, f);
  const Eigen::VectorXcd E = solve_E(branch, f);
  return {E, solve_phi_c(f, E, g), f, spec_.compensation};
}

Eigen::MatrixXcd Extractor::impedance_at(double f) const {
  const int n = static_cast<int>(spec_.branches.size());
  Eigen::MatrixXcd Z(n, n);
  for (int j = 0; j < n; ++j) {
    const FieldSolution fs = field_solution(spec_.branches[j], f);
    for (int i = 0; i < n; ++i)
      Z(i, j) = terminal_voltage(mesh_, fs.phi_c, spec_.branches[i]) / spec_.I0;
  }
  return Z;
}

Eigen::MatrixXd Extractor::l_matrix_pec_mqs() const {
  if (spec_.conductor_model != ConductorModel::Pec)
    throw ExtractionError("the frequency-independent inductance path requires PEC conductors");
  SpMat A = ops_.K_curl;
  apply_dirichlet(A, dofs_.edge_dirichlet);
  const int n = static_cast<int>(spec_.branches.size());
  Eigen::MatrixXd L(n, n);
  for (int j = 0; j < n; ++j) {
    const Eigen::VectorXd g = solve_g_static(spec_.branches[j]);
    Eigen::VectorXd bE = -kMu0 * (ops_.G_eps * g);
    mask_vector(bE, dofs_.edge_dirichlet);
    const Eigen::VectorXd Escaled = solve_edge_gauged(A, bE, basis_);
    Eigen::VectorXd bphi = -(ops_.G_eps.transpose() * Escaled);
    if (spec_.compensation) bphi += kMu0 * (ops_.M_nodal * g);
    const Eigen::VectorXd phi = scalar_solve(K_eps_d_, std::move(bphi), pure_neumann_scalar_);
    for (int i = 0; i < n; ++i)
      L(i, j) = terminal_voltage(mesh_, phi, spec_.branches[i]) / spec_.I0;
  }
  return L;
}

Eigen::Vector3cd Extractor::integrate_edge_field(
    const Eigen::VectorXcd& E, const std::function<bool(int)>& take_region) const {
  Eigen::Vector3cd acc = Eigen::Vector3cd::Zero();
  for (std::size_t t = 0; t < mesh_.tets.size(); ++t) {
    if (!take_region(mesh_.tets[t].region)) continue;
    const TetGeometry g = tet_geometry(mesh_, static_cast<int>(t));
    const TetEdgeInfo ei = tet_edges(mesh_, static_cast<int>(t));
    for (int e = 0; e < 6; ++e) {
      const auto [a, b] = ei.local[e];
      const Eigen::Vector3d w_int = g.volume / 4.0 * (g.grad.col(b) - g.grad.col(a));
      acc += E[ei.edge[e]] * ei.sign[e] * w_int;
    }
  }
  return acc;
}

namespace {

SweepResult sweep_one(const Mesh& mesh, const MaterialTable& mat, const ProblemSpec& spec,
                      BoundaryKind bk) {
  if (spec.frequencies.empty()) throw ExtractionError("frequency list is empty");
  const Extractor ex(mesh, mat, spec, bk);
  SweepResult out;
  out.n_branches = static_cast<int>(spec.branches.size());
  out.entries.resize(spec.frequencies.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < spec.frequencies.size();) {
      SweepEntry& e = out.entries[i];
      e.frequency = spec.frequencies[i];
      try {
        e.Z = ex.impedance_at(e.frequency);
      } catch (const std::exception& err) {
        e.ok = false;
        e.error = err.what();
      }
    }
  };
  const int nthreads = std::clamp(spec.threads, 1,
                                  static_cast<int>(spec.frequencies.size()));
  if (nthreads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return out;
}

}  // namespace

SweepResult dual_image(const SweepResult& electric, const SweepResult& magnetic) {
  if (electric.entries.size() != magnetic.entries.size() ||
      electric.n_branches != magnetic.n_branches)
    throw ExtractionError("dual-image inputs do not match");
  SweepResult out;
  out.n_branches = electric.n_branches;
  out.entries.resize(electric.entries.size());
  for (std::size_t i = 0; i < out.entries.size(); ++i) {
    const SweepEntry& a = electric.entries[i];
    const SweepEntry& b = magnetic.entries[i];
    SweepEntry& e = out.entries[i];
    e.frequency = a.frequency;
    e.ok = a.ok && b.ok;
    if (e.ok)
      e.Z = 0.5 * (a.Z + b.Z);
    else
      e.error = !a.ok ? a.error : b.error;
  }
  return out;
}

SweepResult sweep(const Mesh& mesh, const MaterialTable& mat, const ProblemSpec& spec) {
  spec.validate();
  if (spec.boundary == BoundaryCondition::DualImage)
    return dual_image(sweep_one(mesh, mat, spec, BoundaryKind::Electric),
                      sweep_one(mesh, mat, spec, BoundaryKind::Magnetic));
  return sweep_one(mesh, mat, spec,
                   spec.boundary == BoundaryCondition::Electric ? BoundaryKind::Electric
                                                                : BoundaryKind::Magnetic);
}

CExtraction extract_c_darwin_pec(const Mesh& mesh, const MaterialTable& mat,
                                 const ProblemSpec& spec, double f0) {
  if (spec.formulation != Formulation::Darwin)
    throw ExtractionError("capacitance extraction uses the Darwin formulation");
  if (!(f0 > 0.0)) throw ExtractionError("f0 must be positive");
  ProblemSpec s = spec;
  s.frequencies = {0.5 * f0, f0};
  const SweepResult r = sweep(mesh, mat, s);
  for (const auto& e : r.entries)
    if (!e.ok) throw ExtractionError("capacitance sweep failed: " + e.error);
  const double x_half = r.entries[0].Z(0, 0).imag();
  const double x_f0 = r.entries[1].Z(0, 0).imag();
  if (!(x_f0 < 0.0) || !(x_half < 0.0))
    throw ExtractionError("fixture is not capacitive at the test frequency");
  CExtraction out;
  out.c = -1.0 / (2.0 * kPi * f0 * x_f0);
  const double c_half = -1.0 / (2.0 * kPi * 0.5 * f0 * x_half);
  const double xc_f0 = -1.0 / (2.0 * kPi * f0 * c_half);
  const double xc_half = -1.0 / (2.0 * kPi * 0.5 * f0 * out.c);
  out.e_x_f0 = std::abs((x_f0 - xc_f0) / x_f0);
  out.e_x_half = std::abs((x_half - xc_half) / x_half);
  return out;
}

Eigen::MatrixXd extract_l_pec_mqs(const Mesh& mesh, const MaterialTable& mat,
                                  const ProblemSpec& spec) {
  spec.validate();
  if (spec.boundary == BoundaryCondition::DualImage) {
    const Extractor el(mesh, mat, spec, BoundaryKind::Electric);
    const Extractor mg(mesh, mat, spec, BoundaryKind::Magnetic);
    return 0.5 * (el.l_matrix_pec_mqs() + mg.l_matrix_pec_mqs());
  }
  const Extractor ex(mesh, mat, spec,
                     spec.boundary == BoundaryCondition::Electric ? BoundaryKind::Electric
                                                                  : BoundaryKind::Magnetic);
  return ex.l_matrix_pec_mqs();
}

}  // namespace parex
