#pragma once

#include <functional>
#include <string>
#include <vector>

namespace mlqmcfe {

struct Pt {
  double x = 0.0;
  double y = 0.0;
};

// Haar multiresolution system on [0,a] (1D, integer a >= 2) or the unit
// square (2D, a = 1). Level 0 holds plain scaling indicators of unit cells;
// level n >= 1 holds detail functions with sup-norm d_n. Flat index j
// enumerates level 0 entirely before level 1, and so on.
class WaveletBasis {
 public:
  // decay(n) supplies d_n for n >= 1; must be positive with a strictly
  // geometric envelope (sup d_{n+1}/d_n < 1), otherwise the level-block sums
  // of sup-norms diverge and the basis is rejected.
  WaveletBasis(int dim, int a, std::function<double(int)> decay, int max_level);

  int dim() const { return dim_; }
  int domain_length() const { return a_; }
  int max_level() const { return max_level_; }
  int k_order() const { return 1; }

  // |J_n|: 1D: a at n = 0, 2^{n-1} a for n >= 1. 2D: 1 at n = 0 (a = 1),
  // three detail orientations per dyadic cell afterwards.
  long long level_count(int n) const;
  long long total_count() const;  // sum over n <= max_level

  // s_ell = sum_{n=0}^{ell+k-1} |J_n|
  long long s_ell_orthogonal(int ell, int k) const;

  double scaling(int n) const { return n == 0 ? 1.0 : decay_[static_cast<std::size_t>(n)]; }
  double sup_norm(int n) const { return scaling(n); }

  // flat index <-> (level, location), flat index 1-based
  long long flat_index(int n, long long m) const;
  void level_location(long long j, int* n, long long* m) const;

  double evaluate(int n, long long m, const Pt& p) const;
  double evaluate_flat(long long j, const Pt& p) const;

  // 1D support interval [lo, hi)
  void support_1d(int n, long long m, double* lo, double* hi) const;
  // exact integral of psi^n_m over [alpha, beta] (1D)
  double integrate_1d(int n, long long m, double alpha, double beta) const;

  // 2D: support box [x0,x0+w) x [y0,y0+w); constancy cells have side w/2
  // for n >= 1 (the whole box at n = 0).
  void support_2d(int n, long long m, double* x0, double* y0, double* w) const;
  // exact integral over the triangle (counterclockwise vertices)
  double integrate_triangle(int n, long long m, const Pt& p0, const Pt& p1, const Pt& p2) const;

  // value on the constancy cell containing p, assuming the cell of every
  // level <= n_query is not straddled; used by the aligned assembly path
  double cell_value(int n, const Pt& p, long long* m_out = nullptr) const;

 private:
  int dim_;
  int a_;
  int max_level_;
  std::vector<double> decay_;        // d_n, index by level (d_0 unused)
  std::vector<long long> level_off_; // flat offset of each level
};

struct OrthogonalityReport {
  bool pass = false;
  double max_violation = 0.0;  // worst |integral| relative to ||psi||_inf * |K|
  int first_fail_level = -1;
  std::string detail;
};

class FeMesh;  // fem.hpp

// Verifies eq. orthogonality: integral of psi^n_m against every piecewise
// constant on the mesh vanishes for n >= level+k, and psi^n_m for
// n <= level+k-1 is piecewise constant on the level+k-1 mesh. Exact
// piecewise integration on both sides; default tolerance 1e-13 relative.
OrthogonalityReport check_k_orthogonality(const WaveletBasis& basis, const FeMesh& mesh,
                                          int k, double tol = 1e-13);

}  // namespace mlqmcfe
