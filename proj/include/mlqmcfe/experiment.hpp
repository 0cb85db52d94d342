#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <string>

#include "mlqmcfe/config.hpp"
#include "mlqmcfe/mlqmc.hpp"
#include "mlqmcfe/oracle.hpp"
#include "mlqmcfe/util.hpp"

namespace mlqmcfe {

// builders shared by the CLI modes, tests, and the acceptance suite
WaveletBasis build_basis(const Config& cfg);
std::unique_ptr<CoefficientField> build_field(const Config& cfg);
double resolve_lambda(const Config& cfg);
std::uint64_t resolve_seed(const Config& cfg);
DecaySequences build_sequences(const CoefficientField& field, const Config& cfg, long long s_max);
PodWeights build_weights(const CoefficientField& field, const Config& cfg, long long s_max);
MlPlan plan_from_config(const Config& cfg, const CoefficientField& field);

// generic-field orthogonality check (delegates to the wavelet checker when
// the field is a multiresolution family; smooth families fail at level 0)
OrthogonalityReport check_field_orthogonality(const CoefficientField& field, const FeMesh& mesh,
                                              int k, double tol = 1e-13);

// process-local CBC cache; construction is deterministic per (s, N, weights)
class RuleCache {
 public:
  const LatticeRule& get(int s, long long N, const PodWeights& w);

 private:
  std::map<std::pair<int, long long>, LatticeRule> rules_;
};

struct ConvergenceTable {
  std::vector<double> x;
  std::vector<double> err;
  LogLogFit fit;
  std::string csv;  // "x,error" rows
};
ConvergenceTable convergence_table(std::span<const double> x, std::span<const double> err);

struct CostPoint {
  int level = 0;
  double cost = 0.0;
  double rms = 0.0;
};

struct MlSlComparison {
  std::vector<CostPoint> ml;
  std::vector<CostPoint> sl;
  double a_ml = 0.0;  // fitted cost exponents vs measured RMS
  double a_sl = 0.0;
  double reference = 0.0;
  double reference_stderr = 0.0;
  std::vector<double> eps_targets;
  std::vector<double> cost_ratio;  // ML/SL cost at matched RMS from the fits
};

// Matched-accuracy cost study: ML plans over run.l_list and single-level runs
// over run.sl_levels, both measured against one high-accuracy reference.
MlSlComparison compare_ml_sl(const Config& cfg, std::ostream* log, RuleCache* cache = nullptr);

// Dispatch on run.mode; writes results.csv / plan.csv / run.log under
// output.dir. Returns a process exit status.
int run_experiment(const Config& cfg, std::ostream& log);
int run_experiment_file(const std::string& path, std::ostream& log);

}  // namespace mlqmcfe
