#pragma once

#include <cstdint>
#include <vector>

#include "mlqmcfe/fem.hpp"
#include "mlqmcfe/qmc.hpp"

namespace mlqmcfe {

struct PlanCaps {
  long long s_max = 4096;
  long long N_max = 1LL << 20;
  int L_max = 12;
};

struct PlanInputs {
  double epsilon = -1.0;  // exactly one of epsilon / L
  int L = -1;
  int scenario = 1;
  double p = 0.4;
  double q = 0.6;
  double tau = 2.0;
  double delta = 0.1;
  int d = 1;
  double h0 = -1.0;  // < 0: default per dimension
  int m_star = 16;
  double N0_scale = 1.0;
  double lambda_override = -1.0;
  const WaveletBasis* basis = nullptr;  // scenario 1 level counts
  int k = 1;
  PlanCaps caps;
};

struct MlPlan {
  int scenario = 1;
  int L = 0;
  double tau = 2.0;
  int d = 1;
  double p = 0.0, q = 0.0, delta = 0.1;
  double lambda = 1.0;
  double h0 = 1.0;
  double eta = 0.0, xi = 0.0;     // pq/(q-p), p/(2-2p)
  int crossover_level = -1;       // scenario 2 diagnostic
  double N0_scale = 1.0;
  int k = 1;
  std::vector<double> h;
  std::vector<long long> s;
  std::vector<long long> N;      // prime
  std::vector<int> m;            // shift replicates per level
  std::vector<int> theta;        // truncation-error indicator per level
};

// K_ell: h^{-d} log(h^{-d}) when the orthogonal multiresolution is in play
// (floored at log 2 so the coarsest level carries nonzero cost), h^{-d} s_ell
// otherwise.
double cost_factor(int scenario, double h, int d, long long s_ell);

MlPlan plan(const PlanInputs& in);

double cost_model(const MlPlan& plan);

struct LevelStats {
  long long s = 0;
  long long N = 0;
  int m = 0;
  double mean = 0.0;       // average over shift replicates
  double variance = 0.0;   // sample variance over replicates
  long long solves = 0;
  double cost = 0.0;       // m * N * K_ell
};

struct MlEstimate {
  double value = 0.0;
  double std_error = 0.0;
  double cost_units = 0.0;
  double wall_time_s = 0.0;
  std::uint64_t seed = 0;
  long long total_solves = 0;
  std::vector<LevelStats> levels;
};

// Multi-level estimator: sum over levels of shift-replicate averages of
// Q_ell(G(u_ell - u_{ell-1})); the coarse solve reuses the first s_{ell-1}
// coordinates of the same lattice point. Deterministic for fixed
// (plan, seed) under any thread count.
MlEstimate ml_estimate(const MlPlan& plan, const CoefficientField& field,
                       const std::vector<FeMesh>& meshes, const ScalarFn& f, const ScalarFn& g,
                       const std::vector<LatticeRule>& rules, std::uint64_t seed,
                       AssemblyMode mode = AssemblyMode::generic);

// Single-level baseline on one mesh; cost = m N h^{-d} s.
MlEstimate sl_estimate(const FeMesh& mesh, const CoefficientField& field, const ScalarFn& f,
                       const ScalarFn& g, const LatticeRule& rule, int m, std::uint64_t seed,
                       AssemblyMode mode = AssemblyMode::generic);

}  // namespace mlqmcfe
