#pragma once

#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "mlqmcfe/fem.hpp"
#include "mlqmcfe/qmc.hpp"

namespace mlqmcfe {

struct ReferenceResult {
  double value = 0.0;
  std::string method;
  int nodes_per_dim = 0;
  int mesh_level = -1;
  double residual = 0.0;  // change under the coarser companion resolution
};

// Gauss-Legendre nodes/weights on [-1/2, 1/2] (Newton on the Legendre
// recurrence); exact for polynomials of degree <= 2n-1.
void gauss_legendre_halfcentered(int n, std::vector<double>* nodes, std::vector<double>* weights);

// Full tensor-product quadrature of F over [-1/2,1/2]^s. Refuses budgets
// beyond nodes_per_dim^s > 1e7.
double tensor_quadrature(int s, int nodes_per_dim,
                         const std::function<double(std::span<const double>)>& F);

// Reference value of I_s(G(u_h^s)) with one FE solve per tensor node; the
// residual field reports the change against half the resolution.
ReferenceResult tensor_quadrature_reference(const CoefficientField& field, const ScalarFn& f,
                                            const ScalarFn& g, int s, const FeMesh& mesh,
                                            int nodes_per_dim);

// Stechkin bound min(1/(1/p-1), 1) (sum_j b_j^p + tail_p)^{1/p} s^{-(1/p-1)}
// for nonincreasing b; tail_p adds a declared analytic remainder of the
// p-th power sum beyond the stored entries.
double stechkin_tail(std::span<const double> b, double p, long long s, double tail_p = 0.0);

struct NastyReport {
  double left = 0.0;    // sum over subsets meeting {s_prev+1 : s_curr}
  double right = 0.0;   // s_prev^{-2 alpha} * full (|u|+n)! sum
  double ratio = 0.0;   // left / right
  double alpha = 0.0;
};

// Both sides of the weight-decay condition, evaluated by per-order
// accumulation in log scale (no subset enumeration); alpha = 1/p - 1/q.
// max_order < 0 means all orders.
NastyReport verify_truncation_condition(const PodWeights& w, std::span<const double> b,
                                        long long s_prev, long long s_curr, double p, double q,
                                        int n = 3, int max_order = -1);

// Subset-enumeration shift-averaged squared worst-case error for s <= 3.
// Keys are sorted 1-based index sets.
double brute_force_wce(const LatticeRule& rule,
                       const std::map<std::vector<int>, double>& weights);

// Expands POD weights into the explicit subset map (s <= 16).
std::map<std::vector<int>, double> expand_pod_weights(const PodWeights& w, int s);

}  // namespace mlqmcfe
