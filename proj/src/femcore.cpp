#include "parex/femcore.hpp"

#include <queue>
#include <vector>

namespace parex {

const Material& MaterialTable::at(int region) const {
  auto it = regions.find(region);
  if (it == regions.end())
    throw FemError("no material for region tag " + std::to_string(region));
  return it->second;
}

void MaterialTable::validate(const Mesh& mesh) const {
  for (int tag : mesh.region_tags()) {
    const Material& m = at(tag);
    if (!(m.eps_r > 0.0)) throw FemError("eps_r must be positive");
    if (!(m.mu_r > 0.0)) throw FemError("mu_r must be positive");
    if (m.sigma < 0.0) throw FemError("sigma must be non-negative");
  }
}

TetGeometry tet_geometry(const Mesh& mesh, int t) {
  const auto& n = mesh.tets[t].nodes;
  Eigen::Matrix3d J;
  for (int k = 0; k < 3; ++k) J.col(k) = mesh.nodes[n[k + 1]] - mesh.nodes[n[0]];
  const double det = J.determinant();
  TetGeometry g;
  g.volume = det / 6.0;
  if (!(g.volume > 0.0)) throw FemError("degenerate tetrahedron in element computation");
  Eigen::Matrix3d Jinv = J.inverse();
  // grad lambda_{k+1} = row k of J^-1; grad lambda_0 = -(sum of others)
  for (int k = 0; k < 3; ++k) g.grad.col(k + 1) = Jinv.row(k).transpose();
  g.grad.col(0) = -(g.grad.col(1) + g.grad.col(2) + g.grad.col(3));
  return g;
}

TetEdgeInfo tet_edges(const Mesh& mesh, int t) {
  const auto& n = mesh.tets[t].nodes;
  TetEdgeInfo info;
  for (int e = 0; e < 6; ++e) {
    int a = kLocalEdges[e][0], b = kLocalEdges[e][1];
    info.local[e] = {a, b};
    info.edge[e] = mesh.edge_index(n[a], n[b]);
    info.sign[e] = n[a] < n[b] ? 1.0 : -1.0;
  }
  return info;
}

Eigen::Matrix4d elem_scalar_stiffness(const TetGeometry& g, double coeff) {
  return coeff * g.volume * (g.grad.transpose() * g.grad);
}

Eigen::Matrix4d elem_scalar_mass(const TetGeometry& g, double coeff) {
  Eigen::Matrix4d m = Eigen::Matrix4d::Constant(coeff * g.volume / 20.0);
  m.diagonal().setConstant(coeff * g.volume / 10.0);
  return m;
}

Eigen::Matrix<double, 6, 6> elem_curl_curl(const TetGeometry& g, const TetEdgeInfo& e,
                                           double nu_r) {
  // curl w_(ab) = 2 grad(lambda_a) x grad(lambda_b), constant per tet
  Eigen::Matrix<double, 3, 6> curls;
  for (int k = 0; k < 6; ++k) {
    auto [a, b] = e.local[k];
    curls.col(k) = 2.0 * e.sign[k] * g.grad.col(a).cross(g.grad.col(b));
  }
  return nu_r * g.volume * (curls.transpose() * curls);
}

Eigen::Matrix<double, 6, 6> elem_edge_mass(const TetGeometry& g, const TetEdgeInfo& e,
                                           double coeff) {
  // int w_(ab).w_(cd) via int lambda_i lambda_j = V/20 (1+delta_ij)
  const Eigen::Matrix4d gg = g.grad.transpose() * g.grad;
  Eigen::Matrix<double, 6, 6> m;
  for (int p = 0; p < 6; ++p) {
    auto [a, b] = e.local[p];
    for (int q = 0; q < 6; ++q) {
      auto [c, d] = e.local[q];
      double v = (1.0 + (a == c)) * gg(b, d) - (1.0 + (a == d)) * gg(b, c) -
                 (1.0 + (b == c)) * gg(a, d) + (1.0 + (b == d)) * gg(a, c);
      m(p, q) = e.sign[p] * e.sign[q] * coeff * g.volume / 20.0 * v;
    }
  }
  return m;
}

Eigen::Matrix<double, 6, 4> elem_mixed_grad(const TetGeometry& g, const TetEdgeInfo& e,
                                            double eps_r) {
  // int w_(ab).grad(lambda_n) = V/4 (g_bn - g_an)
  const Eigen::Matrix4d gg = g.grad.transpose() * g.grad;
  Eigen::Matrix<double, 6, 4> m;
  for (int p = 0; p < 6; ++p) {
    auto [a, b] = e.local[p];
    for (int n = 0; n < 4; ++n)
      m(p, n) = e.sign[p] * eps_r * g.volume / 4.0 * (gg(b, n) - gg(a, n));
  }
  return m;
}

int DofSystem::count_free_edges() const {
  int c = 0;
  for (char d : edge_dirichlet)
    if (!d) ++c;
  return c;
}

DofSystem build_dof_system(const Mesh& mesh, const MaterialTable& mat, BoundaryKind boundary,
                           const std::set<int>& terminal_tags) {
  mat.validate(mesh);
  DofSystem d;
  d.boundary = boundary;
  d.n_nodes = static_cast<int>(mesh.nodes.size());
  d.n_edges = static_cast<int>(mesh.edges.size());
  d.node_dirichlet.assign(d.n_nodes, 0);
  d.edge_dirichlet.assign(d.n_edges, 0);
  d.node_conductor.assign(d.n_nodes, 0);
  d.edge_conductor.assign(d.n_edges, 0);
  d.cond_component.assign(d.n_nodes, -1);

  for (const auto& t : mesh.tets) {
    const Material& m = mat.at(t.region);
    if (m.pec) d.pec_mode = true;
    if (!m.conducting()) continue;
    for (int n : t.nodes) d.node_conductor[n] = 1;
    for (const auto& le : kLocalEdges) {
      int e = mesh.edge_index(t.nodes[le[0]], t.nodes[le[1]]);
      d.edge_conductor[e] = 1;
      if (m.pec) d.edge_dirichlet[e] = 1;  // E lives in Omega_0 only
    }
  }

  if (boundary == BoundaryKind::Electric) {
    for (const auto& tri : mesh.boundary_tris) {
      if (terminal_tags.count(tri.tag)) continue;
      for (int k = 0; k < 3; ++k) {
        d.node_dirichlet[tri.nodes[k]] = 1;
        int e = mesh.edge_index(tri.nodes[k], tri.nodes[(k + 1) % 3]);
        if (e >= 0) d.edge_dirichlet[e] = 1;
      }
    }
  }

  // Conductor components over the node graph of conducting tets.
  std::vector<std::vector<int>> adj(d.n_nodes);
  for (const auto& t : mesh.tets) {
    if (!mat.at(t.region).conducting()) continue;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j) {
        adj[t.nodes[i]].push_back(t.nodes[j]);
        adj[t.nodes[j]].push_back(t.nodes[i]);
      }
  }
  int ncomp = 0;
  for (int s = 0; s < d.n_nodes; ++s) {
    if (!d.node_conductor[s] || d.cond_component[s] >= 0) continue;
    std::queue<int> q;
    q.push(s);
    d.cond_component[s] = ncomp;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      for (int v : adj[u])
        if (d.cond_component[v] < 0) {
          d.cond_component[v] = ncomp;
          q.push(v);
        }
    }
    ++ncomp;
  }
  d.n_cond_components = ncomp;
  return d;
}

namespace {

using Triplet = Eigen::Triplet<double>;

void scatter_nodal(std::vector<Triplet>& trips, const Eigen::Matrix4d& ke,
                   const std::array<int, 4>& nodes) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) trips.emplace_back(nodes[i], nodes[j], ke(i, j));
}

}  // namespace

FemOperators build_operators(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs) {
  const int nn = dofs.n_nodes;
  const int ne = dofs.n_edges;
  std::vector<Triplet> t_keps, t_kunit, t_mn, t_kc, t_ms, t_me, t_g, t_g1;

  for (std::size_t t = 0; t < mesh.tets.size(); ++t) {
    const Material& m = mat.at(mesh.tets[t].region);
    const TetGeometry g = tet_geometry(mesh, static_cast<int>(t));
    const TetEdgeInfo ei = tet_edges(mesh, static_cast<int>(t));
    const auto& nd = mesh.tets[t].nodes;

    scatter_nodal(t_keps, elem_scalar_stiffness(g, m.eps_r), nd);
    scatter_nodal(t_kunit, elem_scalar_stiffness(g, 1.0), nd);
    scatter_nodal(t_mn, elem_scalar_mass(g, 1.0), nd);

    if (m.pec) continue;  // E equation is not posed inside PEC conductors

    const auto kc = elem_curl_curl(g, ei, 1.0 / m.mu_r);
    const auto ms = elem_edge_mass(g, ei, m.sigma);
    const auto me = elem_edge_mass(g, ei, m.eps_r);
    const auto ge = elem_mixed_grad(g, ei, m.eps_r);
    const auto g1 = elem_mixed_grad(g, ei, 1.0);
    for (int p = 0; p < 6; ++p)
      for (int q = 0; q < 6; ++q) {
        t_kc.emplace_back(ei.edge[p], ei.edge[q], kc(p, q));
        if (m.sigma > 0.0) t_ms.emplace_back(ei.edge[p], ei.edge[q], ms(p, q));
        t_me.emplace_back(ei.edge[p], ei.edge[q], me(p, q));
      }
    for (int p = 0; p < 6; ++p)
      for (int n = 0; n < 4; ++n) {
        t_g.emplace_back(ei.edge[p], nd[n], ge(p, n));
        t_g1.emplace_back(ei.edge[p], nd[n], g1(p, n));
      }
  }

  FemOperators ops;
  auto make = [](int rows, int cols, std::vector<Triplet>& trips) {
    SpMat A(rows, cols);
    A.setFromTriplets(trips.begin(), trips.end());
    A.makeCompressed();
    return A;
  };
  ops.K_nodal_eps = make(nn, nn, t_keps);
  ops.K_nodal_unit = make(nn, nn, t_kunit);
  ops.M_nodal = make(nn, nn, t_mn);
  ops.K_curl = make(ne, ne, t_kc);
  ops.M_edge_sigma = make(ne, ne, t_ms);
  ops.M_edge_eps = make(ne, ne, t_me);
  ops.G_eps = make(ne, nn, t_g);
  ops.G_unit = make(ne, nn, t_g1);

  std::vector<Triplet> t_t;
  for (int e = 0; e < ne; ++e) {
    t_t.emplace_back(e, mesh.edges[e][0], -1.0);
    t_t.emplace_back(e, mesh.edges[e][1], 1.0);
  }
  ops.T = make(ne, nn, t_t);
  return ops;
}

Eigen::VectorXd surface_load(const Mesh& mesh, int tag, double magnitude) {
  auto tris = mesh.surface_tris(tag);
  if (tris.empty()) throw FemError("surface tag " + std::to_string(tag) + " has no triangles");
  Eigen::VectorXd b = Eigen::VectorXd::Zero(mesh.nodes.size());
  for (int ti : tris) {
    const auto& tri = mesh.boundary_tris[ti];
    const auto& p0 = mesh.nodes[tri.nodes[0]];
    const auto& p1 = mesh.nodes[tri.nodes[1]];
    const auto& p2 = mesh.nodes[tri.nodes[2]];
    const double area = 0.5 * (p1 - p0).cross(p2 - p0).norm();
    for (int k = 0; k < 3; ++k) b[tri.nodes[k]] += magnitude * area / 3.0;
  }
  return b;
}

Eigen::VectorXd branch_div_load(const Mesh& mesh, const Branch& branch, double I0) {
  const double area_a = mesh.surface_area(branch.terminal_a);
  const double area_b = mesh.surface_area(branch.terminal_b);
  if (!(area_a > 0.0)) throw FemError("terminal surface has zero area");
  if (!(area_b > 0.0)) throw FemError("terminal surface has zero area");
  return surface_load(mesh, branch.terminal_a, I0 / area_a) -
         surface_load(mesh, branch.terminal_b, I0 / area_b);
}

namespace {

template <typename Mat>
void apply_dirichlet_impl(Mat& A, const std::vector<char>& mask) {
  using Scalar = typename Mat::Scalar;
  for (int k = 0; k < A.outerSize(); ++k)
    for (typename Mat::InnerIterator it(A, k); it; ++it)
      if (mask[it.row()] || mask[it.col()]) it.valueRef() = Scalar(0);
  for (int i = 0; i < A.rows(); ++i)
    if (mask[i]) A.coeffRef(i, i) = Scalar(1);
  A.prune([](int, int, const Scalar& v) { return v != Scalar(0); });
  A.makeCompressed();
}

SpMatC to_complex(const SpMat& A) { return A.cast<Complex>(); }

}  // namespace

void apply_dirichlet(SpMat& A, const std::vector<char>& mask) { apply_dirichlet_impl(A, mask); }
void apply_dirichlet(SpMatC& A, const std::vector<char>& mask) { apply_dirichlet_impl(A, mask); }

AssembledOperator assemble(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs,
                           FormSelector form, double frequency, double sigma_tilde) {
  return assemble(build_operators(mesh, mat, dofs), dofs, form, frequency, sigma_tilde);
}

AssembledOperator assemble(const FemOperators& ops, const DofSystem& dofs, FormSelector form,
                           double frequency, double sigma_tilde) {
  if (frequency < 0.0) throw FemError("frequency must be non-negative");
  const double omega = 2.0 * 3.14159265358979323846 * frequency;
  const double w2c2 = omega * omega / (kC0 * kC0);
  const Complex jw(0.0, omega);

  AssembledOperator out;
  switch (form) {
    case FormSelector::ScalarXi:
      out.A = to_complex(SpMat(sigma_tilde * ops.K_nodal_unit));
      out.kind = DofKind::Nodal;
      break;
    case FormSelector::ScalarGFullWave:
      out.A = to_complex(SpMat(ops.K_nodal_eps - w2c2 * ops.M_nodal));
      out.kind = DofKind::Nodal;
      break;
    case FormSelector::ScalarGDarwin:
      out.A = to_complex(ops.K_nodal_eps);
      out.kind = DofKind::Nodal;
      break;
    case FormSelector::ScalarPhicFullWave:
      out.A = to_complex(SpMat(ops.K_nodal_eps - w2c2 * ops.M_nodal));
      out.kind = DofKind::Nodal;
      break;
    case FormSelector::ScalarPhicMqs:
      out.A = to_complex(ops.K_nodal_eps);
      out.kind = DofKind::Nodal;
      break;
    case FormSelector::EFieldFullWave:
      out.A = to_complex(ops.K_curl) + (jw * kMu0) * to_complex(ops.M_edge_sigma) -
              w2c2 * to_complex(ops.M_edge_eps);
      out.kind = DofKind::Edge;
      break;
    case FormSelector::EFieldMqs:
      out.A = to_complex(ops.K_curl) + (jw * kMu0) * to_complex(ops.M_edge_sigma);
      out.kind = DofKind::Edge;
      break;
    case FormSelector::DarwinBlock:
      throw FemError("use assemble_darwin_blocks for the Darwin block system");
  }
  if (out.kind == DofKind::Nodal)
    apply_dirichlet(out.A, dofs.node_dirichlet);
  else
    apply_dirichlet(out.A, dofs.edge_dirichlet);
  out.symmetric = true;
  return out;
}

DarwinBlocks assemble_darwin_blocks(const Mesh& mesh, const MaterialTable& mat,
                                    const DofSystem& dofs, double frequency) {
  return assemble_darwin_blocks(build_operators(mesh, mat, dofs), dofs, frequency);
}

DarwinBlocks assemble_darwin_blocks(const FemOperators& ops, const DofSystem& dofs,
                                    double frequency) {
  if (frequency < 0.0) throw FemError("frequency must be non-negative");
  const double omega = 2.0 * 3.14159265358979323846 * frequency;
  const double w2c2 = omega * omega / (kC0 * kC0);
  const Complex jw(0.0, omega);

  DarwinBlocks b;
  b.K_curl = ops.K_curl;
  b.M_sigma = ops.M_edge_sigma;
  b.A_EE = to_complex(ops.K_curl) + (jw * kMu0) * to_complex(ops.M_edge_sigma);
  b.A_Ephi = w2c2 * to_complex(ops.G_eps);
  b.A_phiE = to_complex(SpMat(ops.G_eps.transpose()));
  b.A_phiphi = to_complex(SpMat(ops.K_nodal_eps - w2c2 * ops.M_nodal));
  apply_dirichlet(b.A_EE, dofs.edge_dirichlet);
  apply_dirichlet(b.A_phiphi, dofs.node_dirichlet);
  // couplings: zero Dirichlet rows/cols (value-0 constraints)
  for (int k = 0; k < b.A_Ephi.outerSize(); ++k)
    for (SpMatC::InnerIterator it(b.A_Ephi, k); it; ++it)
      if (dofs.edge_dirichlet[it.row()] || dofs.node_dirichlet[it.col()]) it.valueRef() = 0.0;
  for (int k = 0; k < b.A_phiE.outerSize(); ++k)
    for (SpMatC::InnerIterator it(b.A_phiE, k); it; ++it)
      if (dofs.node_dirichlet[it.row()] || dofs.edge_dirichlet[it.col()]) it.valueRef() = 0.0;
  return b;
}

}  // namespace parex
