#include "mlqmcfe/fem.hpp"

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

namespace {

// 4-point Gauss-Legendre on [-1,1], exact through degree 7; used for all
// smooth-coefficient element integrals (declared quadrature degree 6).
constexpr double kGx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                           0.8611363115940526};
constexpr double kGw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                           0.3478548451374538};

// Dunavant 12-point rule on the triangle, exact through degree 6.
// Barycentric points with weights normalized to sum to one.
struct TriQuadPoint {
  double l0, l1, l2, w;
};
const TriQuadPoint kTri12[] = {
    {0.873821971016996, 0.063089014491502, 0.063089014491502, 0.050844906370207},
    {0.063089014491502, 0.873821971016996, 0.063089014491502, 0.050844906370207},
    {0.063089014491502, 0.063089014491502, 0.873821971016996, 0.050844906370207},
    {0.501426509658179, 0.249286745170910, 0.249286745170911, 0.116786275726379},
    {0.249286745170910, 0.501426509658179, 0.249286745170911, 0.116786275726379},
    {0.249286745170910, 0.249286745170911, 0.501426509658179, 0.116786275726379},
    {0.636502499121399, 0.310352451033785, 0.053145049844816, 0.082851075618374},
    {0.636502499121399, 0.053145049844816, 0.310352451033785, 0.082851075618374},
    {0.310352451033785, 0.636502499121399, 0.053145049844816, 0.082851075618374},
    {0.310352451033785, 0.053145049844816, 0.636502499121399, 0.082851075618374},
    {0.053145049844816, 0.636502499121399, 0.310352451033785, 0.082851075618374},
    {0.053145049844816, 0.310352451033785, 0.636502499121399, 0.082851075618374},
};

}  // namespace

FeMesh FeMesh::interval(int level, double h0, double length) {
  if (level < 0) throw std::invalid_argument("FeMesh: level must be >= 0");
  if (!(h0 > 0.0) || !(length > 0.0)) throw std::invalid_argument("FeMesh: bad geometry");
  const double h = std::ldexp(h0, -level);
  const double cells_d = length / h;
  const long long cells = static_cast<long long>(std::llround(cells_d));
  if (cells < 1 || std::abs(cells_d - static_cast<double>(cells)) > 1e-9)
    throw std::invalid_argument("FeMesh: h must divide the interval length");
  FeMesh m;
  m.dim_ = 1;
  m.level_ = level;
  m.h_ = h;
  m.length_ = length;
  m.nodes1d_.resize(static_cast<std::size_t>(cells) + 1);
  for (long long i = 0; i <= cells; ++i)
    m.nodes1d_[static_cast<std::size_t>(i)] = static_cast<double>(i) * h;
  m.nodes1d_.back() = length;
  return m;
}

FeMesh FeMesh::from_nodes(std::vector<double> nodes, int level) {
  if (nodes.size() < 2 || !std::is_sorted(nodes.begin(), nodes.end()))
    throw std::invalid_argument("FeMesh: node list must be sorted with >= 2 entries");
  FeMesh m;
  m.dim_ = 1;
  m.level_ = level;
  m.h_ = nodes[1] - nodes[0];
  m.length_ = nodes.back() - nodes.front();
  m.uniform_ = false;
  m.nodes1d_ = std::move(nodes);
  return m;
}

FeMesh FeMesh::unit_square(int level, double h0) {
  if (level < 0) throw std::invalid_argument("FeMesh: level must be >= 0");
  const double h = std::ldexp(h0, -level);
  const double ns_d = 1.0 / h;
  const int ns = static_cast<int>(std::llround(ns_d));
  if (ns < 1 || std::abs(ns_d - ns) > 1e-9)
    throw std::invalid_argument("FeMesh: h must divide the unit square");
  FeMesh m;
  m.dim_ = 2;
  m.level_ = level;
  m.h_ = h;
  m.length_ = 1.0;
  m.nside_ = ns;
  return m;
}

int FeMesh::n_interior() const {
  if (dim_ == 1) return static_cast<int>(nodes1d_.size()) - 2;
  return (nside_ - 1) * (nside_ - 1);
}

long long FeMesh::n_elements() const {
  if (dim_ == 1) return static_cast<long long>(nodes1d_.size()) - 1;
  return 2LL * nside_ * nside_;
}

void FeMesh::triangle(long long t, Pt* p0, Pt* p1, Pt* p2) const {
  const long long cell = t / 2;
  const int cx = static_cast<int>(cell % nside_);
  const int cy = static_cast<int>(cell / nside_);
  const double x = cx * h_, y = cy * h_;
  if (t % 2 == 0) {  // lower triangle, diagonal SW-NE
    *p0 = {x, y};
    *p1 = {x + h_, y};
    *p2 = {x + h_, y + h_};
  } else {
    *p0 = {x, y};
    *p1 = {x + h_, y + h_};
    *p2 = {x, y + h_};
  }
}

int FeMesh::dof2d(int ix, int iy) const {
  if (ix <= 0 || ix >= nside_ || iy <= 0 || iy >= nside_) return -1;
  return (iy - 1) * (nside_ - 1) + (ix - 1);
}

double default_h0(const Domain& dom) { return dom.dim == 1 ? 1.0 : 0.5; }

std::vector<FeMesh> build_hierarchy(const Domain& dom, int L, double h0) {
  if (L < 0) throw std::invalid_argument("build_hierarchy: L must be >= 0");
  if (h0 <= 0.0) h0 = default_h0(dom);
  std::vector<FeMesh> out;
  out.reserve(static_cast<std::size_t>(L) + 1);
  for (int ell = 0; ell <= L; ++ell)
    out.push_back(dom.dim == 1 ? FeMesh::interval(ell, h0, dom.length)
                               : FeMesh::unit_square(ell, h0));
  return out;
}

double SparseSym::entry(int i, int j) const {
  for (int p = rowptr[static_cast<std::size_t>(i)]; p < rowptr[static_cast<std::size_t>(i) + 1]; ++p)
    if (col[static_cast<std::size_t>(p)] == j) return val[static_cast<std::size_t>(p)];
  return 0.0;
}

std::vector<double> SparseSym::multiply(std::span<const double> x) const {
  std::vector<double> r(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i)
    for (int p = rowptr[static_cast<std::size_t>(i)]; p < rowptr[static_cast<std::size_t>(i) + 1]; ++p)
      r[static_cast<std::size_t>(i)] += val[static_cast<std::size_t>(p)] * x[static_cast<std::size_t>(col[static_cast<std::size_t>(p)])];
  return r;
}

namespace {

// exact integral of psi_j over [a, b] for multiresolution fields, degree-6
// Gauss quadrature otherwise
double fluct_integral_1d(const CoefficientField& field, long long j, double a, double b) {
  if (const WaveletBasis* basis = field.multiresolution()) {
    int n;
    long long m;
    basis->level_location(j, &n, &m);
    return basis->integrate_1d(n, m, a, b);
  }
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  double acc = 0.0;
  for (int q = 0; q < 4; ++q)
    acc += kGw[q] * field.fluctuation(j, Pt{mid + half * kGx[q], 0.0});
  return acc * half;
}

double fluct_integral_tri(const CoefficientField& field, long long j, const Pt& p0, const Pt& p1,
                          const Pt& p2, double area) {
  if (const WaveletBasis* basis = field.multiresolution()) {
    int n;
    long long m;
    basis->level_location(j, &n, &m);
    return basis->integrate_triangle(n, m, p0, p1, p2);
  }
  double acc = 0.0;
  for (const auto& qp : kTri12) {
    Pt x{qp.l0 * p0.x + qp.l1 * p1.x + qp.l2 * p2.x, qp.l0 * p0.y + qp.l1 * p1.y + qp.l2 * p2.y};
    acc += qp.w * field.fluctuation(j, x);
  }
  return acc * area;
}

// int_e a(x, y) over a 1D element, generic truncation
double coeff_integral_1d(const CoefficientField& field, std::span<const double> y, double a,
                         double b, long long* evals) {
  double total = field.mean_value() * (b - a);
  if (evals) ++*evals;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] == 0.0) continue;
    total += y[j] * fluct_integral_1d(field, static_cast<long long>(j) + 1, a, b);
    if (evals) ++*evals;
  }
  return total;
}

double coeff_integral_tri(const CoefficientField& field, std::span<const double> y, const Pt& p0,
                          const Pt& p1, const Pt& p2, double area, long long* evals) {
  double total = field.mean_value() * area;
  if (evals) ++*evals;
  for (std::size_t j = 0; j < y.size(); ++j) {
    if (y[j] == 0.0) continue;
    total += y[j] * fluct_integral_tri(field, static_cast<long long>(j) + 1, p0, p1, p2, area);
    if (evals) ++*evals;
  }
  return total;
}

// aligned fast path: only levels n <= n_cut contribute, one wavelet per level
double coeff_integral_fast(const CoefficientField& field, const WaveletBasis& basis,
                           std::span<const double> y, double a, double b, int n_cut,
                           long long* evals) {
  const double mid = 0.5 * (a + b);
  double total = field.mean_value();
  if (evals) ++*evals;
  for (int n = 0; n <= n_cut; ++n) {
    long long m;
    const double v = basis.cell_value(n, Pt{mid, 0.0}, &m);
    if (evals) ++*evals;
    if (v == 0.0) continue;
    const long long j = basis.flat_index(n, m);
    if (j <= static_cast<long long>(y.size())) total += y[static_cast<std::size_t>(j - 1)] * v;
  }
  return total * (b - a);
}

int fastpath_cut(const FeMesh& mesh, const WaveletBasis& basis, int k) {
  if (mesh.dim() != 1 || basis.dim() != 1)
    throw std::invalid_argument("assemble: orthogonal_fastpath requires the aligned 1D Haar setup");
  if (!mesh.uniform() || std::abs(mesh.length() - basis.domain_length()) > 1e-12)
    throw std::invalid_argument("assemble: mesh is not aligned with the wavelet basis");
  const double e = -std::log2(mesh.h());
  const long long er = std::llround(e);
  if (er < 0 || std::abs(e - static_cast<double>(er)) > 1e-9)
    throw std::invalid_argument("assemble: fastpath requires dyadic mesh width");
  return static_cast<int>(std::min<long long>(er + k - 1, basis.max_level()));
}

}  // namespace

SparseSym assemble_stiffness(const FeMesh& mesh, const CoefficientField& field,
                             std::span<const double> y, AssemblyMode mode, long long* eval_count) {
  for (double yj : y)
    if (yj < -0.5 || yj > 0.5)
      throw std::invalid_argument("assemble: parameter component outside [-1/2, 1/2]");

  SparseSym A;
  if (mesh.dim() == 1) {
    const auto& nodes = mesh.nodes1d();
    const int M = mesh.n_interior();
    const long long ne = mesh.n_elements();
    std::vector<double> ce(static_cast<std::size_t>(ne));
    int n_cut = -1;
    if (mode == AssemblyMode::orthogonal_fastpath) {
      const WaveletBasis* basis = field.multiresolution();
      if (!basis)
        throw std::invalid_argument("assemble: orthogonal_fastpath needs a multiresolution field");
      n_cut = fastpath_cut(mesh, *basis, basis->k_order());
    }
    for (long long e = 0; e < ne; ++e) {
      const double a = nodes[static_cast<std::size_t>(e)], b = nodes[static_cast<std::size_t>(e) + 1];
      ce[static_cast<std::size_t>(e)] =
          mode == AssemblyMode::orthogonal_fastpath
              ? coeff_integral_fast(field, *field.multiresolution(), y, a, b, n_cut, eval_count)
              : coeff_integral_1d(field, y, a, b, eval_count);
      if (!(ce[static_cast<std::size_t>(e)] > 0.0))
        throw std::runtime_error("assemble: nonpositive element coefficient (ellipticity A2 violated)");
    }
    A.n = M;
    A.rowptr.assign(static_cast<std::size_t>(M) + 1, 0);
    if (M == 0) return A;
    for (int i = 0; i < M; ++i)
      A.rowptr[static_cast<std::size_t>(i) + 1] =
          A.rowptr[static_cast<std::size_t>(i)] + (M == 1 ? 1 : (i == 0 || i == M - 1 ? 2 : 3));
    A.col.resize(static_cast<std::size_t>(A.rowptr.back()));
    A.val.assign(A.col.size(), 0.0);
    auto he = [&](long long e) { return nodes[static_cast<std::size_t>(e) + 1] - nodes[static_cast<std::size_t>(e)]; };
    for (int i = 0; i < M; ++i) {
      // dof i sits at node i+1, flanked by elements i and i+1
      const double le = he(i), re = he(i + 1);
      const double diag = ce[static_cast<std::size_t>(i)] / (le * le) + ce[static_cast<std::size_t>(i) + 1] / (re * re);
      int p = A.rowptr[static_cast<std::size_t>(i)];
      if (i > 0) {
        A.col[static_cast<std::size_t>(p)] = i - 1;
        A.val[static_cast<std::size_t>(p)] = -ce[static_cast<std::size_t>(i)] / (le * le);
        ++p;
      }
      A.col[static_cast<std::size_t>(p)] = i;
      A.val[static_cast<std::size_t>(p)] = diag;
      ++p;
      if (i < M - 1) {
        A.col[static_cast<std::size_t>(p)] = i + 1;
        A.val[static_cast<std::size_t>(p)] = -ce[static_cast<std::size_t>(i) + 1] / (re * re);
      }
    }
    return A;
  }

  // 2D Friedrichs-Keller
  if (mode == AssemblyMode::orthogonal_fastpath)
    throw std::invalid_argument(
        "assemble: orthogonal_fastpath is not available in 2D (k-orthogonality check fails "
        "against triangulated cells)");
  const int M = mesh.n_interior();
  std::vector<std::map<int, double>> rows(static_cast<std::size_t>(M));
  const int ns = mesh.nside();
  for (long long t = 0; t < mesh.n_elements(); ++t) {
    Pt p[3];
    mesh.triangle(t, &p[0], &p[1], &p[2]);
    const double area = 0.5 * mesh.h() * mesh.h();
    const double ci = coeff_integral_tri(field, y, p[0], p[1], p[2], area, eval_count);
    if (!(ci > 0.0))
      throw std::runtime_error("assemble: nonpositive element coefficient (ellipticity A2 violated)");
    double gx[3], gy[3];
    const double two_area = 2.0 * area;
    for (int v = 0; v < 3; ++v) {
      const Pt& pa = p[(v + 1) % 3];
      const Pt& pb = p[(v + 2) % 3];
      gx[v] = (pa.y - pb.y) / two_area;
      gy[v] = (pb.x - pa.x) / two_area;
    }
    int dof[3];
    for (int v = 0; v < 3; ++v) {
      const int ix = static_cast<int>(std::llround(p[v].x / mesh.h()));
      const int iy = static_cast<int>(std::llround(p[v].y / mesh.h()));
      dof[v] = mesh.dof2d(ix, iy);
    }
    (void)ns;
    for (int a = 0; a < 3; ++a) {
      if (dof[a] < 0) continue;
      for (int b = 0; b < 3; ++b) {
        if (dof[b] < 0) continue;
        const double k = ci * (gx[a] * gx[b] + gy[a] * gy[b]);
        rows[static_cast<std::size_t>(dof[a])][dof[b]] += k;
      }
    }
  }
  A.n = M;
  A.rowptr.assign(static_cast<std::size_t>(M) + 1, 0);
  for (int i = 0; i < M; ++i)
    A.rowptr[static_cast<std::size_t>(i) + 1] =
        A.rowptr[static_cast<std::size_t>(i)] + static_cast<int>(rows[static_cast<std::size_t>(i)].size());
  A.col.reserve(static_cast<std::size_t>(A.rowptr.back()));
  A.val.reserve(static_cast<std::size_t>(A.rowptr.back()));
  for (int i = 0; i < M; ++i)
    for (const auto& [j, v] : rows[static_cast<std::size_t>(i)]) {
      A.col.push_back(j);
      A.val.push_back(v);
    }
  return A;
}

std::vector<double> load_vector(const FeMesh& mesh, const ScalarFn& f) {
  const int M = mesh.n_interior();
  std::vector<double> rhs(static_cast<std::size_t>(M), 0.0);
  if (mesh.dim() == 1) {
    const auto& nodes = mesh.nodes1d();
    for (long long e = 0; e + 1 < static_cast<long long>(nodes.size()); ++e) {
      const double a = nodes[static_cast<std::size_t>(e)], b = nodes[static_cast<std::size_t>(e) + 1];
      const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
      double lo = 0.0, hi = 0.0;  // against hats of left/right node
      for (int q = 0; q < 4; ++q) {
        const double x = mid + half * kGx[q];
        const double fv = f(Pt{x, 0.0});
        const double t = (x - a) / (b - a);
        lo += kGw[q] * fv * (1.0 - t);
        hi += kGw[q] * fv * t;
      }
      lo *= half;
      hi *= half;
      if (e >= 1) rhs[static_cast<std::size_t>(e - 1)] += lo;  // node e is dof e-1
      if (e + 1 <= static_cast<long long>(M)) rhs[static_cast<std::size_t>(e)] += hi;
    }
    return rhs;
  }
  for (long long t = 0; t < mesh.n_elements(); ++t) {
    Pt p[3];
    mesh.triangle(t, &p[0], &p[1], &p[2]);
    const double area = 0.5 * mesh.h() * mesh.h();
    int dof[3];
    for (int v = 0; v < 3; ++v) {
      const int ix = static_cast<int>(std::llround(p[v].x / mesh.h()));
      const int iy = static_cast<int>(std::llround(p[v].y / mesh.h()));
      dof[v] = mesh.dof2d(ix, iy);
    }
    for (const auto& qp : kTri12) {
      Pt x{qp.l0 * p[0].x + qp.l1 * p[1].x + qp.l2 * p[2].x,
           qp.l0 * p[0].y + qp.l1 * p[1].y + qp.l2 * p[2].y};
      const double fv = f(x) * qp.w * area;
      const double lam[3] = {qp.l0, qp.l1, qp.l2};
      for (int v = 0; v < 3; ++v)
        if (dof[v] >= 0) rhs[static_cast<std::size_t>(dof[v])] += fv * lam[v];
    }
  }
  return rhs;
}

namespace {

std::vector<double> solve_tridiag(const SparseSym& A, std::span<const double> rhs) {
  const int n = A.n;
  std::vector<double> diag(static_cast<std::size_t>(n)), lower(static_cast<std::size_t>(n), 0.0),
      upper(static_cast<std::size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int p = A.rowptr[static_cast<std::size_t>(i)]; p < A.rowptr[static_cast<std::size_t>(i) + 1]; ++p) {
      const int j = A.col[static_cast<std::size_t>(p)];
      if (j == i)
        diag[static_cast<std::size_t>(i)] = A.val[static_cast<std::size_t>(p)];
      else if (j == i - 1)
        lower[static_cast<std::size_t>(i)] = A.val[static_cast<std::size_t>(p)];
      else if (j == i + 1)
        upper[static_cast<std::size_t>(i)] = A.val[static_cast<std::size_t>(p)];
    }
  }
  std::vector<double> c(static_cast<std::size_t>(n), 0.0), d(static_cast<std::size_t>(n), 0.0);
  double piv = diag[0];
  if (!(piv > 0.0)) throw std::runtime_error("solve: nonpositive pivot (A2 violated?)");
  if (n > 1) c[0] = upper[0] / piv;
  d[0] = rhs[0] / piv;
  for (int i = 1; i < n; ++i) {
    piv = diag[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)] * c[static_cast<std::size_t>(i - 1)];
    if (!(piv > 0.0)) throw std::runtime_error("solve: nonpositive pivot (A2 violated?)");
    if (i + 1 < n) c[static_cast<std::size_t>(i)] = upper[static_cast<std::size_t>(i)] / piv;
    d[static_cast<std::size_t>(i)] =
        (rhs[static_cast<std::size_t>(i)] - lower[static_cast<std::size_t>(i)] * d[static_cast<std::size_t>(i - 1)]) / piv;
  }
  std::vector<double> u(static_cast<std::size_t>(n));
  u[static_cast<std::size_t>(n - 1)] = d[static_cast<std::size_t>(n - 1)];
  for (int i = n - 2; i >= 0; --i)
    u[static_cast<std::size_t>(i)] =
        d[static_cast<std::size_t>(i)] - c[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(i + 1)];
  return u;
}

double rel_residual(const SparseSym& A, std::span<const double> x, std::span<const double> b) {
  const auto Ax = A.multiply(x);
  double rn = 0.0, bn = 0.0;
  for (std::size_t i = 0; i < Ax.size(); ++i) {
    rn += (b[i] - Ax[i]) * (b[i] - Ax[i]);
    bn += b[i] * b[i];
  }
  return bn == 0.0 ? 0.0 : std::sqrt(rn / bn);
}

}  // namespace

FeSolution solve(const FeMesh& mesh, const CoefficientField& field, std::span<const double> y,
                 const ScalarFn& f, AssemblyMode mode, double solver_tol) {
  FeSolution sol;
  sol.level = mesh.level();
  sol.y_used.assign(y.begin(), y.end());
  const SparseSym A = assemble_stiffness(mesh, field, y, mode);
  const std::vector<double> rhs = load_vector(mesh, f);
  if (A.n == 0) return sol;

  if (mesh.dim() == 1) {
    sol.coeff = solve_tridiag(A, rhs);
  } else {
    Eigen::SparseMatrix<double> S(A.n, A.n);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(A.val.size());
    for (int i = 0; i < A.n; ++i)
      for (int p = A.rowptr[static_cast<std::size_t>(i)]; p < A.rowptr[static_cast<std::size_t>(i) + 1]; ++p)
        trips.emplace_back(i, A.col[static_cast<std::size_t>(p)], A.val[static_cast<std::size_t>(p)]);
    S.setFromTriplets(trips.begin(), trips.end());
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> chol(S);
    if (chol.info() != Eigen::Success)
      throw std::runtime_error("solve: sparse factorization failed (matrix not SPD, A2 violated?)");
    if ((chol.vectorD().array() <= 0.0).any())
      throw std::runtime_error("solve: indefinite stiffness matrix (A2 violated)");
    Eigen::VectorXd b = Eigen::Map<const Eigen::VectorXd>(rhs.data(), A.n);
    Eigen::VectorXd x = chol.solve(b);
    // one step of iterative refinement keeps the algebraic residual near machine precision
    Eigen::VectorXd r = b - S * x;
    x += chol.solve(r);
    sol.coeff.assign(x.data(), x.data() + A.n);
  }
  const double res = rel_residual(A, sol.coeff, rhs);
  if (res > solver_tol)
    throw std::runtime_error("solve: relative residual " + format_double(res) +
                             " exceeds tolerance (condition diagnostics: n=" +
                             std::to_string(A.n) + ")");
  return sol;
}

double apply_functional(const ScalarFn& g, const FeMesh& mesh, const FeSolution& u) {
  const std::vector<double> rep = load_vector(mesh, g);
  if (rep.size() != u.coeff.size())
    throw std::invalid_argument("apply_functional: solution does not match the mesh");
  KahanSum s;
  for (std::size_t i = 0; i < rep.size(); ++i) s.add(rep[i] * u.coeff[i]);
  return s.value();
}

namespace {

double eval_solution_1d(const FeMesh& mesh, const FeSolution& u, double x) {
  const auto& nodes = mesh.nodes1d();
  if (x <= nodes.front() || x >= nodes.back()) return 0.0;
  auto it = std::upper_bound(nodes.begin(), nodes.end(), x);
  const std::size_t e = static_cast<std::size_t>(it - nodes.begin()) - 1;
  const double t = (x - nodes[e]) / (nodes[e + 1] - nodes[e]);
  const double ul = e >= 1 ? u.coeff[e - 1] : 0.0;
  const double ur = e + 1 < nodes.size() - 1 ? u.coeff[e] : 0.0;
  return ul * (1.0 - t) + ur * t;
}

double eval_solution_2d(const FeMesh& mesh, const FeSolution& u, const Pt& p) {
  const double h = mesh.h();
  const int ns = mesh.nside();
  int cx = std::min(static_cast<int>(std::floor(p.x / h)), ns - 1);
  int cy = std::min(static_cast<int>(std::floor(p.y / h)), ns - 1);
  cx = std::max(cx, 0);
  cy = std::max(cy, 0);
  const double lx = p.x / h - cx, ly = p.y / h - cy;
  auto nodal = [&](int ix, int iy) {
    const int d = mesh.dof2d(ix, iy);
    return d < 0 ? 0.0 : u.coeff[static_cast<std::size_t>(d)];
  };
  if (lx >= ly) {  // lower triangle (v0,v1,v2) = (SW, SE, NE)
    const double l1 = lx - ly, l2 = ly, l0 = 1.0 - lx;
    return l0 * nodal(cx, cy) + l1 * nodal(cx + 1, cy) + l2 * nodal(cx + 1, cy + 1);
  }
  const double l1 = lx, l2 = ly - lx, l0 = 1.0 - ly;
  return l0 * nodal(cx, cy) + l1 * nodal(cx + 1, cy + 1) + l2 * nodal(cx, cy + 1);
}

}  // namespace

FeSolution prolongate(const FeMesh& coarse, const FeSolution& u, const FeMesh& fine) {
  FeSolution out;
  out.level = fine.level();
  out.y_used = u.y_used;
  if (fine.dim() == 1) {
    const auto& nodes = fine.nodes1d();
    out.coeff.resize(static_cast<std::size_t>(fine.n_interior()));
    for (std::size_t i = 0; i < out.coeff.size(); ++i)
      out.coeff[i] = eval_solution_1d(coarse, u, nodes[i + 1]);
    return out;
  }
  out.coeff.resize(static_cast<std::size_t>(fine.n_interior()));
  for (int iy = 1; iy < fine.nside(); ++iy)
    for (int ix = 1; ix < fine.nside(); ++ix)
      out.coeff[static_cast<std::size_t>(fine.dof2d(ix, iy))] =
          eval_solution_2d(coarse, u, Pt{ix * fine.h(), iy * fine.h()});
  return out;
}

double integrate_fluctuation_element(const FeMesh& mesh, const CoefficientField& field,
                                     long long j, long long element) {
  if (mesh.dim() == 1) {
    const auto& nodes = mesh.nodes1d();
    return fluct_integral_1d(field, j, nodes[static_cast<std::size_t>(element)],
                             nodes[static_cast<std::size_t>(element) + 1]);
  }
  Pt p0, p1, p2;
  mesh.triangle(element, &p0, &p1, &p2);
  return fluct_integral_tri(field, j, p0, p1, p2, 0.5 * mesh.h() * mesh.h());
}

}  // namespace mlqmcfe
