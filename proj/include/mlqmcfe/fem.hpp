#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "mlqmcfe/field.hpp"

namespace mlqmcfe {

using ScalarFn = std::function<double(const Pt&)>;
inline ScalarFn constant_one() { return [](const Pt&) { return 1.0; }; }

// Uniform nested P1 meshes: 1D intervals on [0, length] with h = 2^-level h0;
// 2D Friedrichs-Keller triangulation of the unit square (each dyadic cell
// split along its SW-NE diagonal).
class FeMesh {
 public:
  static FeMesh interval(int level, double h0, double length);
  static FeMesh from_nodes(std::vector<double> nodes, int level);  // 1D, custom spacing
  static FeMesh unit_square(int level, double h0);

  int dim() const { return dim_; }
  int level() const { return level_; }
  double h() const { return h_; }
  double length() const { return length_; }
  bool uniform() const { return uniform_; }

  int n_interior() const;
  long long n_elements() const;

  const std::vector<double>& nodes1d() const { return nodes1d_; }
  int nside() const { return nside_; }

  // 2D triangles: t in [0, 2 nside^2); even t = lower (SE) triangle, odd = upper
  void triangle(long long t, Pt* p0, Pt* p1, Pt* p2) const;

  // interior dof index of grid node (ix, iy), or -1 on the boundary
  int dof2d(int ix, int iy) const;

 private:
  int dim_ = 1;
  int level_ = 0;
  double h_ = 1.0;
  double length_ = 1.0;
  bool uniform_ = true;
  std::vector<double> nodes1d_;
  int nside_ = 0;
};

std::vector<FeMesh> build_hierarchy(const Domain& dom, int L, double h0 = -1.0);
double default_h0(const Domain& dom);  // 1 in 1D, 1/2 in 2D

enum class AssemblyMode { generic, orthogonal_fastpath };

// Symmetric sparse matrix in CSR (full pattern, both triangles stored).
struct SparseSym {
  int n = 0;
  std::vector<int> rowptr;
  std::vector<int> col;
  std::vector<double> val;

  double entry(int i, int j) const;
  std::vector<double> multiply(std::span<const double> x) const;
};

// Stiffness matrix of the truncated coefficient: entries
// int_D a(x, y_{1:s}) grad phi_i . grad phi_j dx with s = y.size().
// generic mode integrates every active term (exactly for piecewise-constant
// families, by degree-6 Gauss rules for smooth ones); orthogonal_fastpath
// requires an aligned k-orthogonal wavelet field and touches only levels
// n <= level+k-1, independent of the length of y. eval_count, when non-null,
// accumulates the number of coefficient integrand evaluations.
SparseSym assemble_stiffness(const FeMesh& mesh, const CoefficientField& field,
                             std::span<const double> y, AssemblyMode mode,
                             long long* eval_count = nullptr);

std::vector<double> load_vector(const FeMesh& mesh, const ScalarFn& f);

struct FeSolution {
  int level = 0;
  std::vector<double> coeff;  // interior nodal values
  std::vector<double> y_used;
};

// Galerkin solve; 1D via tridiagonal elimination, 2D via sparse Cholesky with
// one refinement step. Relative algebraic residual kept below solver_tol.
FeSolution solve(const FeMesh& mesh, const CoefficientField& field, std::span<const double> y,
                 const ScalarFn& f, AssemblyMode mode = AssemblyMode::generic,
                 double solver_tol = 1e-12);

// G(u_h) = int_D g u_h, same element quadrature as the load vector
double apply_functional(const ScalarFn& g, const FeMesh& mesh, const FeSolution& u);

// nodal prolongation of a level-(l) solution onto the level-(l+1) mesh
FeSolution prolongate(const FeMesh& coarse, const FeSolution& u, const FeMesh& fine);

// exact integral of a fluctuation over a 1D element / 2D triangle; exposed so
// oracles and the orthogonality check share one integration kernel
double integrate_fluctuation_element(const FeMesh& mesh, const CoefficientField& field,
                                     long long j, long long element);

}  // namespace mlqmcfe
