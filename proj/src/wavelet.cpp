#include "mlqmcfe/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "mlqmcfe/fem.hpp"

namespace mlqmcfe {

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

// Sutherland-Hodgman clip of a convex polygon against an axis-aligned
// half-plane; returns the area of poly ∩ [x0,x1] x [y0,y1].
void clip_halfplane(std::vector<Pt>& poly, int axis, double bound, bool keep_below) {
  std::vector<Pt> out;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Pt& a = poly[i];
    const Pt& b = poly[(i + 1) % n];
    const double va = axis == 0 ? a.x : a.y;
    const double vb = axis == 0 ? b.x : b.y;
    const bool ina = keep_below ? va <= bound : va >= bound;
    const bool inb = keep_below ? vb <= bound : vb >= bound;
    if (ina) out.push_back(a);
    if (ina != inb) {
      const double t = (bound - va) / (vb - va);
      out.push_back(Pt{a.x + t * (b.x - a.x), a.y + t * (b.y - a.y)});
    }
  }
  poly.swap(out);
}

double clipped_area(const Pt& p0, const Pt& p1, const Pt& p2, double x0, double x1, double y0,
                    double y1) {
  std::vector<Pt> poly = {p0, p1, p2};
  clip_halfplane(poly, 0, x0, false);
  if (poly.size() < 3) return 0.0;
  clip_halfplane(poly, 0, x1, true);
  if (poly.size() < 3) return 0.0;
  clip_halfplane(poly, 1, y0, false);
  if (poly.size() < 3) return 0.0;
  clip_halfplane(poly, 1, y1, true);
  if (poly.size() < 3) return 0.0;
  double area2 = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Pt& a = poly[i];
    const Pt& b = poly[(i + 1) % poly.size()];
    area2 += a.x * b.y - b.x * a.y;
  }
  return 0.5 * std::abs(area2);
}

}  // namespace

WaveletBasis::WaveletBasis(int dim, int a, std::function<double(int)> decay, int max_level)
    : dim_(dim), a_(a), max_level_(max_level) {
  if (dim != 1 && dim != 2) throw std::invalid_argument("WaveletBasis: dim must be 1 or 2");
  if (dim == 1 && a < 2) throw std::invalid_argument("WaveletBasis: 1D domain length a must be >= 2");
  if (dim == 2 && a != 1) throw std::invalid_argument("WaveletBasis: 2D uses the unit square (a = 1)");
  if (max_level < 0) throw std::invalid_argument("WaveletBasis: max_level must be >= 0");
  decay_.assign(static_cast<std::size_t>(max_level) + 1, 0.0);
  for (int n = 1; n <= max_level; ++n) {
    const double d = decay(n);
    if (!(d > 0.0) || !std::isfinite(d))
      throw std::invalid_argument("WaveletBasis: scaling d_n must be positive and finite");
    decay_[static_cast<std::size_t>(n)] = d;
  }
  // Level-block summability: at any point exactly one level-n wavelet is
  // nonzero, so sum_n d_n must converge; demand a geometric envelope. The
  // orthonormal scaling d_n = 2^{(n-1)/2} grows and is rejected here.
  for (int n = 1; n + 1 <= max_level; ++n) {
    if (!(decay_[static_cast<std::size_t>(n + 1)] < decay_[static_cast<std::size_t>(n)]))
      throw std::invalid_argument(
          "WaveletBasis: scaling sequence must decay geometrically (non-summable envelope)");
  }
  level_off_.assign(static_cast<std::size_t>(max_level) + 2, 0);
  for (int n = 0; n <= max_level; ++n)
    level_off_[static_cast<std::size_t>(n) + 1] =
        level_off_[static_cast<std::size_t>(n)] + level_count(n);
}

long long WaveletBasis::level_count(int n) const {
  if (n < 0 || n > max_level_) throw std::out_of_range("WaveletBasis: level out of range");
  if (dim_ == 1) return n == 0 ? a_ : (1LL << (n - 1)) * a_;
  return n == 0 ? 1 : 3LL * (1LL << (2 * (n - 1)));
}

long long WaveletBasis::total_count() const { return level_off_.back(); }

long long WaveletBasis::s_ell_orthogonal(int ell, int k) const {
  if (ell < 0) throw std::invalid_argument("s_ell: ell must be >= 0");
  if (ell + k - 1 > max_level_)
    throw std::invalid_argument("s_ell: basis max_level too small for requested level");
  long long s = 0;
  for (int n = 0; n <= ell + k - 1; ++n) s += level_count(n);
  return s;
}

long long WaveletBasis::flat_index(int n, long long m) const {
  if (m < 0 || m >= level_count(n)) throw std::out_of_range("WaveletBasis: location out of range");
  return level_off_[static_cast<std::size_t>(n)] + m + 1;
}

void WaveletBasis::level_location(long long j, int* n, long long* m) const {
  if (j < 1 || j > total_count()) throw std::out_of_range("WaveletBasis: flat index out of range");
  int lo = 0;
  while (level_off_[static_cast<std::size_t>(lo) + 1] < j) ++lo;
  *n = lo;
  *m = j - 1 - level_off_[static_cast<std::size_t>(lo)];
}

void WaveletBasis::support_1d(int n, long long m, double* lo, double* hi) const {
  if (n == 0) {
    *lo = static_cast<double>(m);
    *hi = static_cast<double>(m) + 1.0;
  } else {
    const double w = std::ldexp(1.0, -n);
    *lo = 2.0 * static_cast<double>(m) * w;
    *hi = *lo + 2.0 * w;
  }
}

double WaveletBasis::evaluate(int n, long long m, const Pt& p) const {
  if (dim_ == 1) {
    if (n == 0) return (p.x >= m && p.x < m + 1) ? 1.0 : 0.0;
    const double t = std::ldexp(p.x, n) - 2.0 * static_cast<double>(m);
    if (t < 0.0 || t >= 2.0) return 0.0;
    return t < 1.0 ? scaling(n) : -scaling(n);
  }
  if (n == 0)
    return (p.x >= 0.0 && p.x < 1.0 && p.y >= 0.0 && p.y < 1.0) ? 1.0 : 0.0;
  double x0, y0, w;
  support_2d(n, m, &x0, &y0, &w);
  if (p.x < x0 || p.x >= x0 + w || p.y < y0 || p.y >= y0 + w) return 0.0;
  const int qx = p.x - x0 < 0.5 * w ? 0 : 1;
  const int qy = p.y - y0 < 0.5 * w ? 0 : 1;
  const int o = static_cast<int>(m % 3);
  int sign;
  if (o == 0)
    sign = qy == 0 ? 1 : -1;
  else if (o == 1)
    sign = qx == 0 ? 1 : -1;
  else
    sign = (qx ^ qy) == 0 ? 1 : -1;
  return sign * scaling(n);
}

double WaveletBasis::evaluate_flat(long long j, const Pt& p) const {
  int n;
  long long m;
  level_location(j, &n, &m);
  return evaluate(n, m, p);
}

double WaveletBasis::integrate_1d(int n, long long m, double alpha, double beta) const {
  if (dim_ != 1) throw std::logic_error("integrate_1d: basis is not one-dimensional");
  if (n == 0) return overlap(alpha, beta, static_cast<double>(m), static_cast<double>(m) + 1.0);
  const double w = std::ldexp(1.0, -n);
  const double A = 2.0 * static_cast<double>(m) * w;
  return scaling(n) * (overlap(alpha, beta, A, A + w) - overlap(alpha, beta, A + w, A + 2.0 * w));
}

void WaveletBasis::support_2d(int n, long long m, double* x0, double* y0, double* w) const {
  if (dim_ != 2) throw std::logic_error("support_2d: basis is not two-dimensional");
  if (n == 0) {
    *x0 = 0.0;
    *y0 = 0.0;
    *w = 1.0;
    return;
  }
  const long long cells = 1LL << (n - 1);
  const long long cell = m / 3;
  const long long cx = cell % cells;
  const long long cy = cell / cells;
  *w = std::ldexp(2.0, -n);  // 2^{1-n}
  *x0 = static_cast<double>(cx) * *w;
  *y0 = static_cast<double>(cy) * *w;
}

double WaveletBasis::integrate_triangle(int n, long long m, const Pt& p0, const Pt& p1,
                                        const Pt& p2) const {
  if (dim_ != 2) throw std::logic_error("integrate_triangle: basis is not two-dimensional");
  if (n == 0) return clipped_area(p0, p1, p2, 0.0, 1.0, 0.0, 1.0);
  double x0, y0, w;
  support_2d(n, m, &x0, &y0, &w);
  const double half = 0.5 * w;
  const int o = static_cast<int>(m % 3);
  double total = 0.0;
  for (int qy = 0; qy < 2; ++qy) {
    for (int qx = 0; qx < 2; ++qx) {
      int sign;
      if (o == 0)
        sign = qy == 0 ? 1 : -1;
      else if (o == 1)
        sign = qx == 0 ? 1 : -1;
      else
        sign = (qx ^ qy) == 0 ? 1 : -1;
      const double ax = x0 + qx * half;
      const double ay = y0 + qy * half;
      const double area = clipped_area(p0, p1, p2, ax, ax + half, ay, ay + half);
      total += sign * area;
    }
  }
  return scaling(n) * total;
}

double WaveletBasis::cell_value(int n, const Pt& p, long long* m_out) const {
  if (dim_ != 1) throw std::logic_error("cell_value: only used by the 1D aligned path");
  if (n == 0) {
    const long long m = static_cast<long long>(std::floor(p.x));
    if (m_out) *m_out = m;
    return (m >= 0 && m < a_) ? 1.0 : 0.0;
  }
  const double t = std::ldexp(p.x, n);
  const long long m = static_cast<long long>(std::floor(t * 0.5));
  if (m_out) *m_out = m;
  if (m < 0 || m >= level_count(n)) return 0.0;
  return (t - 2.0 * static_cast<double>(m)) < 1.0 ? scaling(n) : -scaling(n);
}

namespace {

struct Violation {
  double rel = 0.0;
  int first_fail = -1;
  double tol = 0.0;
};

void track(Violation& v, double rel, int n) {
  v.rel = std::max(v.rel, rel);
  if (rel > v.tol && v.first_fail < 0) v.first_fail = n;
}

}  // namespace

OrthogonalityReport check_k_orthogonality(const WaveletBasis& basis, const FeMesh& mesh, int k,
                                          double tol) {
  OrthogonalityReport rep;
  if (basis.dim() != mesh.dim()) {
    rep.detail = "dimension mismatch between basis and mesh";
    return rep;
  }
  if (basis.dim() == 1 &&
      std::abs(mesh.length() - static_cast<double>(basis.domain_length())) > 1e-12) {
    rep.detail = "domain mismatch between basis and mesh";
    return rep;
  }
  const int ell = mesh.level();
  Violation worst;
  worst.tol = tol;

  if (basis.dim() == 1) {
    const auto& nodes = mesh.nodes1d();
    // (i) vanishing integrals against every element indicator for n >= ell+k
    for (int n = ell + k; n <= basis.max_level(); ++n) {
      for (long long m = 0; m < basis.level_count(n); ++m) {
        double lo, hi;
        basis.support_1d(n, m, &lo, &hi);
        auto it = std::upper_bound(nodes.begin(), nodes.end(), lo);
        std::size_t e = it == nodes.begin() ? 0 : static_cast<std::size_t>(it - nodes.begin()) - 1;
        for (; e + 1 < nodes.size() && nodes[e] < hi; ++e) {
          const double cover = overlap(nodes[e], nodes[e + 1], lo, hi);
          if (cover <= 0.0) continue;
          const double I = basis.integrate_1d(n, m, nodes[e], nodes[e + 1]);
          track(worst, std::abs(I) / (basis.sup_norm(n) * cover), n);
        }
      }
    }
    // (ii) psi^n_m itself piecewise constant on the level ell+k-1 mesh
    for (int n = 0; n <= std::min(ell + k - 1, basis.max_level()); ++n) {
      for (long long m = 0; m < basis.level_count(n); ++m) {
        double lo, hi;
        basis.support_1d(n, m, &lo, &hi);
        std::vector<double> breaks = {lo, hi};
        if (n >= 1) breaks.insert(breaks.begin() + 1, 0.5 * (lo + hi));
        for (double b : breaks) {
          auto it = std::upper_bound(nodes.begin(), nodes.end(), b);
          if (it == nodes.begin() || it == nodes.end()) continue;
          const double below = b - *(it - 1);
          const double above = *it - b;
          // a jump strictly inside an element means psi is not in S^0(T)
          if (below > 1e-13 && above > 1e-13) track(worst, 1.0, n);
        }
      }
    }
  } else {
    for (int n = ell + k; n <= basis.max_level(); ++n) {
      for (long long m = 0; m < basis.level_count(n); ++m) {
        double x0, y0, w;
        basis.support_2d(n, m, &x0, &y0, &w);
        for (long long t = 0; t < mesh.n_elements(); ++t) {
          Pt p0, p1, p2;
          mesh.triangle(t, &p0, &p1, &p2);
          const double bx0 = std::min({p0.x, p1.x, p2.x}), bx1 = std::max({p0.x, p1.x, p2.x});
          const double by0 = std::min({p0.y, p1.y, p2.y}), by1 = std::max({p0.y, p1.y, p2.y});
          if (bx1 <= x0 || bx0 >= x0 + w || by1 <= y0 || by0 >= y0 + w) continue;
          const double I = basis.integrate_triangle(n, m, p0, p1, p2);
          const double cover = clipped_area(p0, p1, p2, x0, x0 + w, y0, y0 + w);
          if (cover <= 0.0) continue;
          track(worst, std::abs(I) / (basis.sup_norm(n) * cover), n);
        }
      }
    }
    for (int n = 0; n <= std::min(ell + k - 1, basis.max_level()); ++n) {
      for (long long m = 0; m < basis.level_count(n); ++m) {
        double x0, y0, w;
        basis.support_2d(n, m, &x0, &y0, &w);
        const double half = n == 0 ? w : 0.5 * w;
        for (long long t = 0; t < mesh.n_elements(); ++t) {
          Pt p0, p1, p2;
          mesh.triangle(t, &p0, &p1, &p2);
          const double area =
              0.5 * std::abs((p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y));
          // element must intersect at most one constancy cell of the wavelet
          int cells_hit = 0;
          double covered = 0.0;
          for (int qy = 0; qy < (n == 0 ? 1 : 2); ++qy)
            for (int qx = 0; qx < (n == 0 ? 1 : 2); ++qx) {
              const double ax = x0 + qx * half, ay = y0 + qy * half;
              const double ca = clipped_area(p0, p1, p2, ax, ax + half, ay, ay + half);
              if (ca > 1e-14 * area) {
                ++cells_hit;
                covered += ca;
              }
            }
          const bool partial = covered > 1e-14 * area && covered < area * (1.0 - 1e-12);
          if (cells_hit > 1 || partial) track(worst, 1.0, n);
        }
      }
    }
  }

  rep.max_violation = worst.rel;
  rep.first_fail_level = worst.first_fail;
  rep.pass = worst.rel <= tol;
  std::ostringstream os;
  os << (rep.pass ? "PASS" : "FAIL") << " k=" << k << " mesh level " << ell
     << " max relative violation " << rep.max_violation;
  rep.detail = os.str();
  return rep;
}

}  // namespace mlqmcfe
