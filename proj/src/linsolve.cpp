#include "parex/linsolve.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <sstream>

#include <Eigen/SparseLU>

namespace parex {

namespace {

template <typename Mat, typename Vec>
Vec solve_impl(const Mat& A, const Vec& b) {
  if (A.rows() != A.cols()) throw SolveError("operator must be square");
  if (A.cols() != b.size()) throw SolveError("right-hand side length mismatch");
  if (A.rows() == 0) throw SolveError("operator has no unknowns (every degree of freedom is constrained)");
  Eigen::SparseLU<Mat> lu;
  lu.compute(A);
  if (lu.info() != Eigen::Success) {
    int imin = 0;
    double vmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i < A.rows(); ++i) {
      double d = std::abs(A.coeff(i, i));
      if (d < vmin) {
        vmin = d;
        imin = i;
      }
    }
    throw SolveError("numerically singular factorization (smallest pivot proxy |A[" +
                     std::to_string(imin) + "," + std::to_string(imin) +
                     "]| = " + std::to_string(vmin) + ")");
  }
  Vec x = lu.solve(b);
  const double bn = b.norm();
  if (bn > 0.0) {
    // Iterative refinement on the cached factorization: recovers the residual
    // contract on systems whose class blocks span many orders of magnitude.
    double r = (A * x - b).norm() / bn;
    for (int it = 0; it < 3 && !(r <= kSolveResidualTol); ++it) {
      x += lu.solve(Vec(b - A * x));
      r = (A * x - b).norm() / bn;
    }
    if (!(r <= kSolveResidualTol)) {
      std::ostringstream os;
      os << "solve residual " << r << " exceeds contract 1e-10";
      throw SolveError(os.str());
    }
  }
  return x;
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    for (int i = 0; i < n; ++i) parent[i] = i;
  }
  int find(int a) {
    while (parent[a] != a) a = parent[a] = parent[parent[a]];
    return a;
  }
  void unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
};

}  // namespace

Eigen::VectorXd solve(const SpMat& A, const Eigen::VectorXd& b) { return solve_impl(A, b); }
Eigen::VectorXcd solve(const SpMatC& A, const Eigen::VectorXcd& b) { return solve_impl(A, b); }

int EdgeBasis::count(EdgeColClass c) const {
  return static_cast<int>(std::count(cls.begin(), cls.end(), c));
}

EdgeBasis build_edge_basis(const Mesh& mesh, const MaterialTable& mat, const DofSystem& dofs,
                           int root_offset) {
  const int nn = dofs.n_nodes;
  const int ne = dofs.n_edges;

  // Quotient classes: nodes of a conducting element are one class, as are
  // the endpoints of every Dirichlet edge (boundary patches, PEC surfaces).
  UnionFind uf(nn);
  for (const auto& t : mesh.tets)
    if (mat.at(t.region).conducting())
      for (int k = 1; k < 4; ++k) uf.unite(t.nodes[0], t.nodes[k]);
  for (int e = 0; e < ne; ++e)
    if (dofs.edge_dirichlet[e]) uf.unite(mesh.edges[e][0], mesh.edges[e][1]);

  std::vector<char> has_dir_edge(nn, 0);
  for (int e = 0; e < ne; ++e)
    if (dofs.edge_dirichlet[e]) {
      has_dir_edge[mesh.edges[e][0]] = 1;
      has_dir_edge[mesh.edges[e][1]] = 1;
    }

  // Free-edge adjacency, sorted for determinism.
  std::vector<std::vector<std::pair<int, int>>> adj(nn);  // (neighbor, edge)
  for (int e = 0; e < ne; ++e) {
    if (dofs.edge_dirichlet[e]) continue;
    adj[mesh.edges[e][0]].emplace_back(mesh.edges[e][1], e);
    adj[mesh.edges[e][1]].emplace_back(mesh.edges[e][0], e);
  }
  for (auto& a : adj) std::sort(a.begin(), a.end());

  std::vector<int> comp(nn, -1);
  std::vector<char> in_tree(ne, 0);
  std::vector<std::vector<int>> comp_nodes;

  for (int s = 0; s < nn; ++s) {
    if (comp[s] >= 0 || adj[s].empty()) continue;
    const int c = static_cast<int>(comp_nodes.size());
    std::vector<int> members;
    std::queue<int> q;
    q.push(s);
    comp[s] = c;
    while (!q.empty()) {
      int u = q.front();
      q.pop();
      members.push_back(u);
      for (auto [v, e] : adj[u])
        if (comp[v] < 0) {
          comp[v] = c;
          q.push(v);
        }
    }
    std::sort(members.begin(), members.end());
    comp_nodes.push_back(std::move(members));
  }

  // BFS forest from a per-component root (rotated by root_offset).
  std::vector<int> root_of(comp_nodes.size());
  {
    std::vector<char> visited(nn, 0);
    for (std::size_t c = 0; c < comp_nodes.size(); ++c) {
      const auto& members = comp_nodes[c];
      const int root = members[static_cast<std::size_t>(root_offset) % members.size()];
      root_of[c] = root;
      std::queue<int> q;
      q.push(root);
      visited[root] = 1;
      while (!q.empty()) {
        int u = q.front();
        q.pop();
        for (auto [v, e] : adj[u])
          if (!visited[v]) {
            visited[v] = 1;
            in_tree[e] = 1;
            q.push(v);
          }
      }
    }
  }

  // Group members of each component by quotient class; detect classes that
  // straddle components (those keep individual hats only).
  std::vector<int> class_comp(nn, -2);  // -2 unseen, -3 straddles
  for (const auto& members : comp_nodes)
    for (int n : members) {
      int r = uf.find(n);
      if (class_comp[r] == -2)
        class_comp[r] = comp[n];
      else if (class_comp[r] != comp[n])
        class_comp[r] = -3;
    }

  std::vector<Eigen::Triplet<double>> trips;
  std::vector<EdgeColClass> cls;
  auto hat_entries = [&](int n, int col) {
    for (auto [v, e] : adj[n])
      trips.emplace_back(e, col, mesh.edges[e][1] == n ? 1.0 : -1.0);
  };
  auto classify_hat = [&](int n) {
    if (has_dir_edge[n]) return EdgeColClass::S;
    if (dofs.node_conductor[n]) return EdgeColClass::W;
    return EdgeColClass::U;  // unreachable for multi-member classes in practice
  };

  // Cotree columns.
  for (int e = 0; e < ne; ++e) {
    if (dofs.edge_dirichlet[e] || in_tree[e]) continue;
    trips.emplace_back(e, static_cast<int>(cls.size()), 1.0);
    cls.push_back(EdgeColClass::V);
  }

  for (std::size_t c = 0; c < comp_nodes.size(); ++c) {
    const int root = root_of[c];
    const int root_class = uf.find(root);
    std::map<int, std::vector<int>> pieces;  // class root -> sorted members
    for (int n : comp_nodes[c]) pieces[uf.find(n)].push_back(n);

    for (const auto& [cr, members] : pieces) {
      const bool has_root = (cr == root_class);
      const bool straddles = (class_comp[cr] == -3);
      if (!has_root && !straddles) {
        // Class-uniform gradient column: exact kernel vector (class U).
        const int col = static_cast<int>(cls.size());
        for (int m : members)
          for (auto [v, e] : adj[m])
            if (uf.find(v) != cr)
              trips.emplace_back(e, col, mesh.edges[e][1] == m ? 1.0 : -1.0);
        cls.push_back(EdgeColClass::U);
        for (std::size_t k = 1; k < members.size(); ++k) {
          hat_entries(members[k], static_cast<int>(cls.size()));
          cls.push_back(classify_hat(members[k]));
        }
      } else {
        for (int m : members) {
          if (m == root) continue;
          hat_entries(m, static_cast<int>(cls.size()));
          cls.push_back(classify_hat(m));
        }
      }
    }
  }

  EdgeBasis basis;
  basis.P.resize(ne, static_cast<int>(cls.size()));
  basis.P.setFromTriplets(trips.begin(), trips.end());
  basis.P.makeCompressed();
  basis.cls = std::move(cls);
  return basis;
}

ClassScales mqs_gauge_scales() {
  ClassScales s;
  s.drop_u = true;
  return s;
}

namespace {
Complex inv_sqrt_jwmu0(double frequency) {
  const double omega = 2.0 * std::numbers::pi * frequency;
  return 1.0 / std::sqrt(Complex(0.0, omega * kMu0));  // principal branch
}
}  // namespace

ClassScales mqs_stabilized_scales(double frequency) {
  if (!(frequency > 0.0)) throw SolveError("MQS stabilization requires frequency > 0");
  ClassScales s;
  s.drop_u = true;
  s.w = inv_sqrt_jwmu0(frequency);
  return s;
}

ClassScales fullwave_scales(double frequency) {
  if (!(frequency > 0.0))
    throw SolveError(
        "full-wave stabilization undefined at zero frequency; use the MQS or "
        "Darwin/PEC paths");
  const double omega = 2.0 * std::numbers::pi * frequency;
  ClassScales s;
  s.w = inv_sqrt_jwmu0(frequency);
  s.u = kC0 / Complex(0.0, omega);
  return s;
}

ClassScales darwin_scales(double frequency) {
  if (!(frequency > 0.0)) throw SolveError("Darwin stabilization requires frequency > 0");
  const double omega = 2.0 * std::numbers::pi * frequency;
  ClassScales s;
  s.w = inv_sqrt_jwmu0(frequency);
  // With the potential block symmetrized by omega^2/c^2 and the potential
  // scaled by c/omega, this turns every gradient/potential coupling block
  // into plain G_eps, balancing the saddle system.
  s.u = kC0 / omega;
  return s;
}

SpMatC scaled_basis(const EdgeBasis& basis, const ClassScales& scales) {
  std::vector<Eigen::Triplet<Complex>> trips;
  std::vector<int> col_map(basis.n_cols(), -1);
  int ncols = 0;
  for (int c = 0; c < basis.n_cols(); ++c) {
    if (scales.drop_u && basis.cls[c] == EdgeColClass::U) continue;
    col_map[c] = ncols++;
  }
  for (int c = 0; c < basis.P.outerSize(); ++c) {
    if (col_map[c] < 0) continue;
    Complex d;
    switch (basis.cls[c]) {
      case EdgeColClass::V: d = scales.v; break;
      case EdgeColClass::S: d = scales.s; break;
      case EdgeColClass::W: d = scales.w; break;
      case EdgeColClass::U: d = scales.u; break;
    }
    for (SpMat::InnerIterator it(basis.P, c); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), col_map[c], d * it.value());
  }
  SpMatC Pd(basis.P.rows(), ncols);
  Pd.setFromTriplets(trips.begin(), trips.end());
  Pd.makeCompressed();
  return Pd;
}

namespace {

// Classes of the columns kept by scaled_basis, in reduced column order.
std::vector<EdgeColClass> reduced_classes(const EdgeBasis& basis, const ClassScales& scales) {
  std::vector<EdgeColClass> out;
  for (int c = 0; c < basis.n_cols(); ++c) {
    if (scales.drop_u && basis.cls[c] == EdgeColClass::U) continue;
    out.push_back(basis.cls[c]);
  }
  return out;
}

bool curl_kernel(EdgeColClass c) { return c == EdgeColClass::U || c == EdgeColClass::W; }

// Pd^T K_curl Pd with the analytically exact zeros enforced: U and W columns
// are exact gradients, hence exact kernel vectors of the curl-curl operator.
// Accumulating their rows/columns numerically leaves pure cancellation noise
// that the class scaling amplifies by many orders of magnitude.
template <typename PdMat>
PdMat reduce_curl(const SpMat& K_curl, const PdMat& Pd, const PdMat& Pt,
                  const std::vector<EdgeColClass>& cls) {
  PdMat Kr = Pt * K_curl.template cast<typename PdMat::Scalar>() * Pd;
  for (int k = 0; k < Kr.outerSize(); ++k)
    for (typename PdMat::InnerIterator it(Kr, k); it; ++it)
      if (curl_kernel(cls[it.row()]) || curl_kernel(cls[it.col()]))
        it.valueRef() = typename PdMat::Scalar(0);
  Kr.prune([](int, int, const typename PdMat::Scalar& v) {
    return v != typename PdMat::Scalar(0);
  });
  Kr.makeCompressed();
  return Kr;
}

}  // namespace

Eigen::VectorXcd solve_edge_gauged(const SpMat& K_curl, const SpMatC& A_rest,
                                   const Eigen::VectorXcd& b, const EdgeBasis& basis,
                                   const ClassScales& scales) {
  // Symmetric two-sided scaling (transpose, not adjoint): test rows carry the
  // same class scales as the trial columns, keeping the row magnitudes of the
  // differently scaled subspaces balanced in the factorization.
  const SpMatC Pd = scaled_basis(basis, scales);
  const SpMatC Pt = SpMatC(Pd.transpose());
  SpMatC S = SpMatC(reduce_curl(K_curl, Pd, Pt, reduced_classes(basis, scales)) +
                    SpMatC(Pt * A_rest * Pd));
  S.makeCompressed();
  const Eigen::VectorXcd br = Pt * b;
  const Eigen::VectorXcd y = solve(S, br);
  return Pd * y;
}

Eigen::VectorXd solve_edge_gauged(const SpMat& A, const Eigen::VectorXd& b,
                                  const EdgeBasis& basis) {
  std::vector<Eigen::Triplet<double>> trips;
  std::vector<int> col_map(basis.n_cols(), -1);
  int ncols = 0;
  for (int c = 0; c < basis.n_cols(); ++c)
    if (basis.cls[c] != EdgeColClass::U) col_map[c] = ncols++;
  for (int c = 0; c < basis.P.outerSize(); ++c) {
    if (col_map[c] < 0) continue;
    for (SpMat::InnerIterator it(basis.P, c); it; ++it)
      trips.emplace_back(static_cast<int>(it.row()), col_map[c], it.value());
  }
  SpMat Pd(basis.P.rows(), ncols);
  Pd.setFromTriplets(trips.begin(), trips.end());
  const SpMat Pt = SpMat(Pd.transpose());
  std::vector<EdgeColClass> kept;
  for (int c = 0; c < basis.n_cols(); ++c)
    if (basis.cls[c] != EdgeColClass::U) kept.push_back(basis.cls[c]);
  SpMat S = reduce_curl(A, Pd, Pt, kept);
  const Eigen::VectorXd y = solve(S, Eigen::VectorXd(Pt * b));
  return Pd * y;
}

Eigen::VectorXcd solve_block2(const SpMatC& A11, const SpMatC& A12, const SpMatC& A21,
                              const SpMatC& A22, const Eigen::VectorXcd& b1,
                              const Eigen::VectorXcd& b2) {
  const int n1 = static_cast<int>(A11.rows());
  const int n2 = static_cast<int>(A22.rows());
  if (A12.rows() != n1 || A12.cols() != n2 || A21.rows() != n2 || A21.cols() != n1)
    throw SolveError("block dimensions do not conform");
  std::vector<Eigen::Triplet<Complex>> trips;
  auto add = [&](const SpMatC& M, int r0, int c0) {
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMatC::InnerIterator it(M, k); it; ++it)
        trips.emplace_back(static_cast<int>(it.row()) + r0, static_cast<int>(it.col()) + c0,
                           it.value());
  };
  add(A11, 0, 0);
  add(A12, 0, n1);
  add(A21, n1, 0);
  add(A22, n1, n1);
  SpMatC A(n1 + n2, n1 + n2);
  A.setFromTriplets(trips.begin(), trips.end());
  A.makeCompressed();
  Eigen::VectorXcd b(n1 + n2);
  b << b1, b2;
  return solve(A, b);
}

DarwinSolution solve_darwin_block(const DarwinBlocks& blocks, const EdgeBasis& basis,
                                  const ClassScales& scales, const Eigen::VectorXcd& bE,
                                  const Eigen::VectorXcd& bphi, double frequency) {
  if (!(frequency > 0.0)) throw SolveError("Darwin block solve requires frequency > 0");
  const double omega = 2.0 * std::numbers::pi * frequency;
  const double w2c2 = omega * omega / (kC0 * kC0);
  const double dphi = kC0 / omega;  // dphi^2 * w2c2 = 1
  // Symmetrized, balanced form: the potential equation is multiplied by
  // omega^2/c^2 and the potential unknown scaled by c/omega. Combined with
  // the c/omega scale of the U columns, every gradient/potential coupling
  // block reduces to G_eps, so the saddle system stays well pivoted.
  const SpMatC Pd = scaled_basis(basis, scales);
  const SpMatC Pt = SpMatC(Pd.transpose());
  const Complex jwmu0(0.0, omega * kMu0);
  const SpMatC S11 =
      SpMatC(reduce_curl(blocks.K_curl, Pd, Pt, reduced_classes(basis, scales)) +
             SpMatC(jwmu0 * (Pt * blocks.M_sigma.cast<Complex>() * Pd)));
  const SpMatC S12 = SpMatC(dphi * (Pt * blocks.A_Ephi));
  const SpMatC S21 = SpMatC((dphi * w2c2) * (blocks.A_phiE * Pd));
  const SpMatC S22 = SpMatC(blocks.A_phiphi);  // dphi^2 * w2c2 == 1
  const Eigen::VectorXcd x = solve_block2(S11, S12, S21, S22, Eigen::VectorXcd(Pt * bE),
                                          Eigen::VectorXcd((dphi * w2c2) * bphi));
  DarwinSolution sol;
  sol.E = Pd * x.head(Pd.cols());
  sol.phi = dphi * x.tail(blocks.A_phiphi.rows());
  return sol;
}

}  // namespace parex
