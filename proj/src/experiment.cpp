#include "mlqmcfe/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace fs = std::filesystem;

namespace mlqmcfe {

WaveletBasis build_basis(const Config& cfg) {
  const int dim = static_cast<int>(cfg.integer("fem.dim"));
  const int a = dim == 1 ? static_cast<int>(cfg.integer("wavelet.a")) : 1;
  const double c = cfg.number("wavelet.c");
  const double theta = cfg.number("wavelet.theta");
  const int max_level = static_cast<int>(cfg.integer("wavelet.max_level"));
  if (cfg.integer("wavelet.k") != 1)
    throw std::runtime_error("config: only wavelet.k = 1 is available");
  return WaveletBasis(dim, a, [c, theta](int n) { return c * std::exp2(-theta * n); }, max_level);
}

std::unique_ptr<CoefficientField> build_field(const Config& cfg) {
  const std::string family = cfg.str("field.family");
  const int dim = static_cast<int>(cfg.integer("fem.dim"));
  const double abar = 1.0;
  if (family == "sine") {
    SineField probe(dim, cfg.number("field.c"), cfg.number("field.theta"), 1e-9, 1e9, abar);
    const double bound = probe.pointwise_fluctuation_bound(-1);
    const double a_min = cfg.is_auto("field.a_min") ? abar - 0.5 * bound : cfg.number("field.a_min");
    const double a_max = cfg.is_auto("field.a_max") ? abar + 0.5 * bound : cfg.number("field.a_max");
    if (!(a_min > 0.0))
      throw std::runtime_error(
          "config: fluctuation budget drives a_min below zero; reduce field.c or raise field.theta");
    return std::make_unique<SineField>(dim, cfg.number("field.c"), cfg.number("field.theta"),
                                       a_min, a_max, abar);
  }
  if (family == "haar") {
    WaveletBasis basis = build_basis(cfg);
    double bound = 1.0;
    for (int n = 1; n <= basis.max_level(); ++n)
      bound += (basis.dim() == 1 ? 1 : 3) * basis.sup_norm(n);
    const double a_min = cfg.is_auto("field.a_min") ? abar - 0.5 * bound : cfg.number("field.a_min");
    const double a_max = cfg.is_auto("field.a_max") ? abar + 0.5 * bound : cfg.number("field.a_max");
    if (!(a_min > 0.0))
      throw std::runtime_error(
          "config: fluctuation budget drives a_min below zero; reduce wavelet.c");
    return std::make_unique<HaarField>(std::move(basis), a_min, a_max, abar);
  }
  throw std::runtime_error("config: field.family must be 'sine' or 'haar'");
}

double resolve_lambda(const Config& cfg) {
  if (!cfg.is_auto("qmc.lambda_override")) return cfg.number("qmc.lambda_override");
  return lambda_q(cfg.number("field.q"), cfg.number("qmc.delta"));
}

std::uint64_t resolve_seed(const Config& cfg) {
  if (!cfg.is_auto("qmc.seed")) return static_cast<std::uint64_t>(cfg.integer("qmc.seed"));
  return static_cast<std::uint64_t>(cfg.integer("run.seed"));
}

DecaySequences build_sequences(const CoefficientField& field, const Config& cfg, long long s_max) {
  const double b_const = cfg.is_auto("field.b_const") ? -1.0 : cfg.number("field.b_const");
  return derive_sequences(field, cfg.number("field.p"), cfg.number("field.q"),
                          cfg.number("field.kappa"), b_const, cfg.number("field.c_t"), s_max);
}

PodWeights build_weights(const CoefficientField& field, const Config& cfg, long long s_max) {
  const DecaySequences seqs = build_sequences(field, cfg, s_max);
  return pod_weights(seqs.beta, resolve_lambda(cfg), static_cast<int>(s_max));
}

MlPlan plan_from_config(const Config& cfg, const CoefficientField& field) {
  PlanInputs in;
  in.scenario = static_cast<int>(cfg.integer("run.scenario"));
  in.p = cfg.number("field.p");
  in.q = cfg.number("field.q");
  in.tau = cfg.number("run.tau");
  in.delta = cfg.number("qmc.delta");
  in.d = static_cast<int>(cfg.integer("fem.dim"));
  in.h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  in.m_star = static_cast<int>(cfg.integer("run.mstar"));
  in.N0_scale = cfg.number("run.n0_scale");
  in.lambda_override = cfg.is_auto("qmc.lambda_override") ? -1.0 : cfg.number("qmc.lambda_override");
  in.basis = field.multiresolution();
  in.k = static_cast<int>(cfg.integer("wavelet.k"));
  in.caps.s_max = cfg.integer("run.cap_s");
  in.caps.N_max = cfg.integer("run.cap_n");
  in.caps.L_max = static_cast<int>(cfg.integer("run.cap_l"));
  const bool has_eps = !cfg.is_auto("run.epsilon");
  const bool has_L = !cfg.is_auto("run.L");
  if (has_eps == has_L)
    throw std::runtime_error("config: set exactly one of run.epsilon and run.L");
  if (has_eps) in.epsilon = cfg.number("run.epsilon");
  if (has_L) in.L = static_cast<int>(cfg.integer("run.L"));
  return plan(in);
}

OrthogonalityReport check_field_orthogonality(const CoefficientField& field, const FeMesh& mesh,
                                              int k, double tol) {
  if (const WaveletBasis* basis = field.multiresolution())
    return check_k_orthogonality(*basis, mesh, k, tol);
  OrthogonalityReport rep;
  double worst = 0.0;
  const long long jmax = std::min<long long>(field.capacity(), 8);
  for (long long j = 1; j <= jmax; ++j) {
    for (long long e = 0; e < mesh.n_elements(); ++e) {
      const double I = integrate_fluctuation_element(mesh, field, j, e);
      const double vol = mesh.dim() == 1
                             ? mesh.nodes1d()[static_cast<std::size_t>(e) + 1] -
                                   mesh.nodes1d()[static_cast<std::size_t>(e)]
                             : 0.5 * mesh.h() * mesh.h();
      worst = std::max(worst, std::abs(I) / (field.sup_norm(j) * vol));
    }
  }
  rep.max_violation = worst;
  rep.pass = worst <= tol;
  rep.first_fail_level = rep.pass ? -1 : 0;
  rep.detail = rep.pass ? "PASS (non-multiresolution family)"
                        : "FAIL: family has no vanishing integrals against mesh constants";
  return rep;
}

const LatticeRule& RuleCache::get(int s, long long N, const PodWeights& w) {
  const auto key = std::make_pair(s, N);
  auto it = rules_.find(key);
  if (it == rules_.end()) it = rules_.emplace(key, cbc_construct(s, N, w)).first;
  return it->second;
}

ConvergenceTable convergence_table(std::span<const double> x, std::span<const double> err) {
  ConvergenceTable t;
  t.x.assign(x.begin(), x.end());
  t.err.assign(err.begin(), err.end());
  t.fit = fit_loglog(x, err);
  std::ostringstream os;
  os << "x,error\n";
  for (std::size_t i = 0; i < t.x.size(); ++i)
    os << format_double(t.x[i]) << "," << format_double(t.err[i]) << "\n";
  t.csv = os.str();
  return t;
}

namespace {

std::string hash_line(const Config& cfg) {
  std::ostringstream os;
  os << "# config-hash: " << std::hex << std::setw(16) << std::setfill('0') << cfg.hash();
  return os.str();
}

void write_csv(const fs::path& path, const Config& cfg, const std::string& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << hash_line(cfg) << "\n" << header << "\n";
  for (const auto& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << row[i];
    out << "\n";
  }
}

double estimate_G(const FeMesh& mesh, const CoefficientField& field, std::span<const double> y,
                  const ScalarFn& f, const ScalarFn& g) {
  return apply_functional(g, mesh, solve(mesh, field, y, f));
}

// equal-weight rule average of G(u_h^s) for one shift
double qmc_average(const FeMesh& mesh, const CoefficientField& field, const ScalarFn& f,
                   const ScalarFn& g, const LatticeRule& rule, std::span<const double> shift) {
  std::vector<double> y(static_cast<std::size_t>(rule.s));
  KahanSum acc;
  for (std::int64_t i = 1; i <= rule.N; ++i) {
    lattice_point(rule, i, shift, y);
    acc.add(estimate_G(mesh, field, y, f, g));
  }
  return acc.value() / static_cast<double>(rule.N);
}

int mode_check_orthogonality(const Config& cfg, std::ostream& log, const fs::path& outdir) {
  const auto field = build_field(cfg);
  const int L = static_cast<int>(cfg.integer("fem.L"));
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), L, h0);
  const int k = static_cast<int>(cfg.integer("wavelet.k"));
  std::vector<std::vector<std::string>> rows;
  bool all_pass = true;
  for (int ell = 0; ell <= L; ++ell) {
    const auto rep = check_field_orthogonality(*field, meshes[static_cast<std::size_t>(ell)], k);
    all_pass = all_pass && rep.pass;
    rows.push_back({std::to_string(ell), rep.pass ? "1" : "0", format_double(rep.max_violation),
                    std::to_string(rep.first_fail_level)});
    log << "l=" << ell << " " << rep.detail << "\n";
  }
  write_csv(outdir / "results.csv", cfg, "ell,pass,max_violation,first_fail_level", rows);
  log << (all_pass ? "PASS" : "FAIL") << " k=" << k << " for l=0.." << L << "\n";
  return all_pass ? 0 : 2;
}

int mode_fe_convergence(const Config& cfg, std::ostream& log, const fs::path& outdir) {
  const auto field = build_field(cfg);
  const int L_ref = static_cast<int>(cfg.integer("fem.L"));
  if (L_ref < 4) throw std::runtime_error("fe_convergence: fem.L must be >= 4");
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), L_ref, h0);
  const int s = static_cast<int>(cfg.integer("run.s"));
  const std::vector<double> y(static_cast<std::size_t>(s), 0.5);
  const ScalarFn one = constant_one();
  const double ref = estimate_G(meshes.back(), *field, y, one, one);
  std::vector<double> xs, errs;
  std::vector<std::vector<std::string>> rows;
  for (int ell = 2; ell <= L_ref - 2; ++ell) {
    const double G = estimate_G(meshes[static_cast<std::size_t>(ell)], *field, y, one, one);
    const double err = std::abs(ref - G);
    xs.push_back(std::exp2(ell));  // error vs 2^ell, slope -2 expected
    errs.push_back(err);
    rows.push_back({std::to_string(ell), format_double(meshes[static_cast<std::size_t>(ell)].h()),
                    format_double(err)});
  }
  const auto table = convergence_table(xs, errs);
  write_csv(outdir / "results.csv", cfg, "ell,h,error", rows);
  log << "fe_convergence slope (vs 2^ell) = " << format_double(table.fit.slope) << "\n";
  return 0;
}

int mode_qmc_convergence(const Config& cfg, std::ostream& log, const fs::path& outdir,
                         RuleCache& cache) {
  const auto field = build_field(cfg);
  const int s = static_cast<int>(cfg.integer("run.s"));
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), static_cast<int>(cfg.integer("fem.L")), h0);
  const FeMesh& mesh = meshes.back();
  const PodWeights w = build_weights(*field, cfg, s);
  const ScalarFn one = constant_one();
  const std::uint64_t seed = resolve_seed(cfg);

  // randomized-lattice reference with its own standard error
  const LatticeRule& ref_rule = cache.get(s, next_prime(cfg.integer("run.ref_n")), w);
  const int ref_shifts = static_cast<int>(cfg.integer("run.ref_shifts"));
  std::vector<double> ref_vals(static_cast<std::size_t>(ref_shifts));
  parallel_for(ref_vals.size(), [&](std::size_t r) {
    Rng rng(seed, 0x0e1f0000ULL + r);
    std::vector<double> shift(static_cast<std::size_t>(s));
    for (auto& d : shift) d = rng.next_double();
    ref_vals[r] = qmc_average(mesh, *field, one, one, ref_rule, shift);
  });
  double ref = 0.0, ref_var = 0.0;
  for (double v : ref_vals) ref += v;
  ref /= ref_shifts;
  for (double v : ref_vals) ref_var += (v - ref) * (v - ref);
  ref_var = ref_shifts > 1 ? ref_var / (ref_shifts - 1) : 0.0;
  const double ref_stderr = std::sqrt(ref_var / ref_shifts);

  const int shifts = static_cast<int>(cfg.integer("run.shifts"));
  std::vector<double> xs, rmss;
  std::vector<std::vector<std::string>> rows;
  for (long long N : cfg.int_list("run.n_list")) {
    const LatticeRule& rule = cache.get(s, next_prime(N), w);
    std::vector<double> errs(static_cast<std::size_t>(shifts));
    parallel_for(errs.size(), [&](std::size_t r) {
      Rng rng(seed, (static_cast<std::uint64_t>(N) << 16) | r);
      std::vector<double> shift(static_cast<std::size_t>(s));
      for (auto& d : shift) d = rng.next_double();
      const double q = qmc_average(mesh, *field, one, one, rule, shift);
      errs[r] = q - ref;
    });
    double ms = 0.0;
    for (double e : errs) ms += e * e;
    const double rms = std::sqrt(ms / shifts);
    xs.push_back(static_cast<double>(rule.N));
    rmss.push_back(rms);
    rows.push_back({std::to_string(rule.N), format_double(rms)});
  }
  const auto table = convergence_table(xs, rmss);
  write_csv(outdir / "results.csv", cfg, "N,rms", rows);
  log << "qmc_convergence slope = " << format_double(table.fit.slope)
      << " (reference stderr " << format_double(ref_stderr) << ")\n";
  return 0;
}

int mode_truncation(const Config& cfg, std::ostream& log, const fs::path& outdir,
                    RuleCache& cache) {
  const auto field = build_field(cfg);
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), static_cast<int>(cfg.integer("fem.L")), h0);
  const FeMesh& mesh = meshes.back();
  const long long smax = cfg.integer("run.smax");
  const auto s_list = cfg.int_list("run.s_list");
  const int n_y = static_cast<int>(cfg.integer("run.y_samples"));
  const std::uint64_t seed = resolve_seed(cfg);
  const ScalarFn one = constant_one();

  // pointwise tail decay at random anchors
  std::vector<std::vector<double>> diffs(s_list.size(),
                                         std::vector<double>(static_cast<std::size_t>(n_y)));
  parallel_for(static_cast<std::size_t>(n_y), [&](std::size_t t) {
    Rng rng(seed, 0xa11ce + t);
    std::vector<double> y(static_cast<std::size_t>(smax));
    for (auto& v : y) v = rng.uniform(-0.5, 0.5);
    const double full = estimate_G(mesh, *field, y, one, one);
    for (std::size_t si = 0; si < s_list.size(); ++si) {
      const auto head = std::span<const double>(y.data(), static_cast<std::size_t>(s_list[si]));
      diffs[si][t] = std::abs(estimate_G(mesh, *field, head, one, one) - full);
    }
  });

  // squared functional-integral proxy from coupled randomized-QMC estimates
  const PodWeights w = build_weights(*field, cfg, smax);
  const LatticeRule& rule = cache.get(static_cast<int>(smax), next_prime(2048), w);
  const int shifts = static_cast<int>(cfg.integer("run.ref_shifts"));
  std::vector<std::vector<double>> sq(s_list.size(),
                                      std::vector<double>(static_cast<std::size_t>(shifts)));
  parallel_for(static_cast<std::size_t>(shifts), [&](std::size_t r) {
    Rng rng(seed, 0xbeef + r);
    std::vector<double> shift(static_cast<std::size_t>(smax));
    for (auto& d : shift) d = rng.next_double();
    std::vector<double> y(static_cast<std::size_t>(smax));
    std::vector<KahanSum> acc(s_list.size());
    KahanSum acc_full;
    for (std::int64_t i = 1; i <= rule.N; ++i) {
      lattice_point(rule, i, shift, y);
      acc_full.add(estimate_G(mesh, *field, y, one, one));
      for (std::size_t si = 0; si < s_list.size(); ++si) {
        const auto head = std::span<const double>(y.data(), static_cast<std::size_t>(s_list[si]));
        acc[si].add(estimate_G(mesh, *field, head, one, one));
      }
    }
    for (std::size_t si = 0; si < s_list.size(); ++si) {
      const double d = (acc[si].value() - acc_full.value()) / static_cast<double>(rule.N);
      sq[si][r] = d * d;
    }
  });

  std::vector<double> xs, ptw, prox;
  std::vector<std::vector<std::string>> rows;
  for (std::size_t si = 0; si < s_list.size(); ++si) {
    double mean_abs = 0.0;
    for (double v : diffs[si]) mean_abs += v;
    mean_abs /= n_y;
    double mean_sq = 0.0;
    for (double v : sq[si]) mean_sq += v;
    mean_sq /= shifts;
    xs.push_back(static_cast<double>(s_list[si]));
    ptw.push_back(mean_abs);
    prox.push_back(mean_sq);
    rows.push_back({std::to_string(s_list[si]), format_double(mean_abs), format_double(mean_sq)});
  }
  const auto fit_ptw = fit_loglog(xs, ptw);
  const auto fit_prox = fit_loglog(xs, prox);
  write_csv(outdir / "results.csv", cfg, "s,pointwise_mean_abs,qmc_sq_proxy", rows);
  log << "truncation pointwise slope = " << format_double(fit_ptw.slope)
      << ", squared-proxy slope = " << format_double(fit_prox.slope) << "\n";
  return 0;
}

void write_plan_csv(const Config& cfg, const MlPlan& plan, const fs::path& path) {
  std::vector<std::vector<std::string>> rows;
  for (int ell = 0; ell <= plan.L; ++ell)
    rows.push_back({std::to_string(ell), format_double(plan.h[static_cast<std::size_t>(ell)]),
                    std::to_string(plan.s[static_cast<std::size_t>(ell)]),
                    std::to_string(plan.N[static_cast<std::size_t>(ell)]),
                    std::to_string(plan.m[static_cast<std::size_t>(ell)]),
                    std::to_string(plan.theta[static_cast<std::size_t>(ell)])});
  write_csv(path, cfg, "ell,h,s,N,m,theta", rows);
}

AssemblyMode pick_mode(const CoefficientField& field, const std::vector<FeMesh>& meshes,
                       int scenario, int k) {
  if (scenario != 1 || !field.multiresolution()) return AssemblyMode::generic;
  const auto rep = check_k_orthogonality(*field.multiresolution(), meshes.back(), k);
  return rep.pass ? AssemblyMode::orthogonal_fastpath : AssemblyMode::generic;
}

int mode_ml(const Config& cfg, std::ostream& log, const fs::path& outdir, RuleCache& cache) {
  const auto field = build_field(cfg);
  const MlPlan pl = plan_from_config(cfg, *field);
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), pl.L, h0);
  const PodWeights w = build_weights(*field, cfg, pl.s.back());
  std::vector<LatticeRule> rules;
  for (int ell = 0; ell <= pl.L; ++ell)
    rules.push_back(cache.get(static_cast<int>(pl.s[static_cast<std::size_t>(ell)]),
                              pl.N[static_cast<std::size_t>(ell)], w));
  const AssemblyMode mode = pick_mode(*field, meshes, pl.scenario, pl.k);
  const ScalarFn one = constant_one();
  const MlEstimate est = ml_estimate(pl, *field, meshes, one, one, rules, resolve_seed(cfg), mode);

  write_plan_csv(cfg, pl, outdir / "plan.csv");
  std::vector<std::vector<std::string>> rows;
  for (int ell = 0; ell <= pl.L; ++ell) {
    const auto& ls = est.levels[static_cast<std::size_t>(ell)];
    rows.push_back({std::to_string(ell), std::to_string(ls.s), std::to_string(ls.N),
                    std::to_string(ls.m), format_double(ls.mean), format_double(ls.variance),
                    std::to_string(ls.solves), format_double(ls.cost)});
  }
  write_csv(outdir / "results.csv", cfg, "ell,s,N,m,mean,variance,solves,cost", rows);
  log << "ml value = " << format_double(est.value) << " +/- " << format_double(est.std_error)
      << " cost_units = " << format_double(est.cost_units) << " solves = " << est.total_solves
      << " wall_s = " << format_double(est.wall_time_s)
      << (mode == AssemblyMode::orthogonal_fastpath ? " (fastpath)" : "") << "\n";
  return 0;
}

int mode_sl(const Config& cfg, std::ostream& log, const fs::path& outdir, RuleCache& cache) {
  const auto field = build_field(cfg);
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), static_cast<int>(cfg.integer("fem.L")), h0);
  const int s = static_cast<int>(cfg.integer("run.s"));
  const PodWeights w = build_weights(*field, cfg, s);
  const LatticeRule& rule = cache.get(s, next_prime(cfg.integer("run.n")), w);
  const ScalarFn one = constant_one();
  const MlEstimate est = sl_estimate(meshes.back(), *field, one, one, rule,
                                     static_cast<int>(cfg.integer("run.mstar")), resolve_seed(cfg));
  const auto& ls = est.levels[0];
  write_csv(outdir / "results.csv", cfg, "s,N,m,mean,variance,solves,cost",
            {{std::to_string(ls.s), std::to_string(ls.N), std::to_string(ls.m),
              format_double(ls.mean), format_double(ls.variance), std::to_string(ls.solves),
              format_double(ls.cost)}});
  log << "sl value = " << format_double(est.value) << " +/- " << format_double(est.std_error)
      << " cost_units = " << format_double(est.cost_units) << "\n";
  return 0;
}

}  // namespace

MlSlComparison compare_ml_sl(const Config& cfg, std::ostream* log, RuleCache* cache) {
  RuleCache local_cache;
  if (!cache) cache = &local_cache;
  const auto field = build_field(cfg);
  const WaveletBasis* basis = field->multiresolution();
  if (!basis)
    throw std::runtime_error("compare_ml_sl: needs the multiresolution (haar) field for scenario 1");
  const auto l_list = cfg.int_list("run.l_list");
  const auto sl_levels = cfg.int_list("run.sl_levels");
  const int repeats = static_cast<int>(cfg.integer("run.repeats"));
  const int m_star = static_cast<int>(cfg.integer("run.mstar"));
  const double n0_scale = cfg.number("run.n0_scale");
  const double tau = cfg.number("run.tau");
  const double lambda = resolve_lambda(cfg);
  const std::uint64_t seed = resolve_seed(cfg);
  const int k = static_cast<int>(cfg.integer("wavelet.k"));
  const ScalarFn one = constant_one();

  const int L_max = static_cast<int>(*std::max_element(l_list.begin(), l_list.end()));
  const int L_ref = L_max + 2;
  const double h0 = cfg.is_auto("fem.h0") ? -1.0 : cfg.number("fem.h0");
  const auto meshes = build_hierarchy(field->domain(), L_ref, h0);
  const AssemblyMode mode = pick_mode(*field, meshes, 1, k);
  const PodWeights w = build_weights(*field, cfg, basis->s_ell_orthogonal(L_ref, k));

  auto make_plan = [&](int L, double scale) {
    PlanInputs in;
    in.L = L;
    in.scenario = 1;
    in.p = cfg.number("field.p");
    in.q = cfg.number("field.q");
    in.tau = tau;
    in.delta = cfg.number("qmc.delta");
    in.d = 1;
    in.h0 = h0;
    in.m_star = m_star;
    in.N0_scale = scale;
    in.lambda_override = lambda;
    in.basis = basis;
    in.k = k;
    in.caps.N_max = cfg.integer("run.cap_n");
    in.caps.s_max = cfg.integer("run.cap_s");
    in.caps.L_max = std::max(static_cast<int>(cfg.integer("run.cap_l")), L_ref);
    return plan(in);
  };

  // reference: two levels deeper, N_0 pinned to roughly twice the largest run
  const double ref_scale =
      2.0 * n0_scale * std::exp2(-(L_ref - L_max) * tau * 2.0 * lambda);
  MlPlan ref_plan = make_plan(L_ref, ref_scale);
  for (auto& m : ref_plan.m) m = 32;
  std::vector<LatticeRule> ref_rules;
  for (int ell = 0; ell <= ref_plan.L; ++ell)
    ref_rules.push_back(cache->get(static_cast<int>(ref_plan.s[static_cast<std::size_t>(ell)]),
                                   ref_plan.N[static_cast<std::size_t>(ell)], w));
  const MlEstimate ref_est =
      ml_estimate(ref_plan, *field, meshes, one, one, ref_rules, seed ^ 0x5eedULL, mode);

  MlSlComparison out;
  out.reference = ref_est.value;
  out.reference_stderr = ref_est.std_error;
  if (log)
    *log << "reference = " << format_double(out.reference) << " +/- "
         << format_double(out.reference_stderr) << " (L=" << L_ref << ")\n";

  for (long long L : l_list) {
    const MlPlan pl = make_plan(static_cast<int>(L), n0_scale);
    std::vector<LatticeRule> rules;
    for (int ell = 0; ell <= pl.L; ++ell)
      rules.push_back(cache->get(static_cast<int>(pl.s[static_cast<std::size_t>(ell)]),
                                 pl.N[static_cast<std::size_t>(ell)], w));
    double ms = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const MlEstimate est = ml_estimate(pl, *field, meshes, one, one, rules,
                                         seed + 7919ULL * static_cast<std::uint64_t>(r + 1), mode);
      const double err = est.value - out.reference;
      ms += err * err;
    }
    CostPoint cp;
    cp.level = static_cast<int>(L);
    cp.cost = cost_model(pl);
    cp.rms = std::sqrt(ms / repeats);
    out.ml.push_back(cp);
    if (log)
      *log << "ml L=" << L << " cost=" << format_double(cp.cost)
           << " rms=" << format_double(cp.rms) << "\n";
  }

  for (long long ell : sl_levels) {
    const long long s = basis->s_ell_orthogonal(static_cast<int>(ell), k);
    const long long N =
        next_prime(std::max<long long>(2, static_cast<long long>(std::ceil(
                                              n0_scale * std::exp2(ell * tau * 2.0 * lambda)))));
    const LatticeRule& rule = cache->get(static_cast<int>(s), N, w);
    const FeMesh& mesh = meshes[static_cast<std::size_t>(ell)];
    double ms = 0.0;
    for (int r = 0; r < repeats; ++r) {
      const MlEstimate est = sl_estimate(mesh, *field, one, one, rule, m_star,
                                         seed + 104729ULL * static_cast<std::uint64_t>(r + 1), mode);
      const double err = est.value - out.reference;
      ms += err * err;
    }
    CostPoint cp;
    cp.level = static_cast<int>(ell);
    cp.cost = static_cast<double>(m_star) * static_cast<double>(N) *
              std::pow(mesh.h(), -1.0) * static_cast<double>(s);
    cp.rms = std::sqrt(ms / repeats);
    out.sl.push_back(cp);
    if (log)
      *log << "sl l=" << ell << " cost=" << format_double(cp.cost)
           << " rms=" << format_double(cp.rms) << "\n";
  }

  auto exponent = [](const std::vector<CostPoint>& pts) {
    std::vector<double> rms, cost;
    for (const auto& p : pts) {
      rms.push_back(p.rms);
      cost.push_back(p.cost);
    }
    const auto fit = fit_loglog(rms, cost);
    return std::make_pair(-fit.slope, fit.intercept);
  };
  const auto [a_ml, b_ml] = exponent(out.ml);
  const auto [a_sl, b_sl] = exponent(out.sl);
  out.a_ml = a_ml;
  out.a_sl = a_sl;
  out.eps_targets = {std::exp2(-6), std::exp2(-8), std::exp2(-10)};
  for (double eps : out.eps_targets) {
    const double cml = std::exp(b_ml - a_ml * std::log(eps));
    const double csl = std::exp(b_sl - a_sl * std::log(eps));
    out.cost_ratio.push_back(cml / csl);
  }
  if (log) {
    *log << "a_ml = " << format_double(out.a_ml) << ", a_sl = " << format_double(out.a_sl) << "\n";
    for (std::size_t i = 0; i < out.eps_targets.size(); ++i)
      *log << "eps=" << format_double(out.eps_targets[i])
           << " cost_ml/cost_sl = " << format_double(out.cost_ratio[i]) << "\n";
  }
  return out;
}

namespace {

int mode_compare_ml_sl(const Config& cfg, std::ostream& log, const fs::path& outdir,
                       RuleCache& cache) {
  const MlSlComparison cmp = compare_ml_sl(cfg, &log, &cache);
  std::vector<std::vector<std::string>> rows;
  for (const auto& p : cmp.ml)
    rows.push_back({"ml", std::to_string(p.level), format_double(p.cost), format_double(p.rms)});
  for (const auto& p : cmp.sl)
    rows.push_back({"sl", std::to_string(p.level), format_double(p.cost), format_double(p.rms)});
  write_csv(outdir / "results.csv", cfg, "kind,level,cost_units,rms", rows);
  return 0;
}

}  // namespace

int run_experiment(const Config& cfg, std::ostream& log) {
  const fs::path outdir = cfg.str("output.dir");
  fs::create_directories(outdir);
  std::ofstream run_log(outdir / "run.log");
  run_log << hash_line(cfg) << "\n# resolved config:\n" << cfg.resolved() << "#\n";

  const std::string mode = cfg.str("run.mode");
  RuleCache cache;
  int rc;
  std::ostringstream captured;
  if (mode == "check_orthogonality")
    rc = mode_check_orthogonality(cfg, captured, outdir);
  else if (mode == "fe_convergence")
    rc = mode_fe_convergence(cfg, captured, outdir);
  else if (mode == "qmc_convergence")
    rc = mode_qmc_convergence(cfg, captured, outdir, cache);
  else if (mode == "truncation")
    rc = mode_truncation(cfg, captured, outdir, cache);
  else if (mode == "ml")
    rc = mode_ml(cfg, captured, outdir, cache);
  else if (mode == "sl")
    rc = mode_sl(cfg, captured, outdir, cache);
  else if (mode == "compare_ml_sl")
    rc = mode_compare_ml_sl(cfg, captured, outdir, cache);
  else
    throw std::runtime_error("config: unknown run.mode '" + mode + "'");
  run_log << captured.str();
  log << captured.str();
  return rc;
}

int run_experiment_file(const std::string& path, std::ostream& log) {
  return run_experiment(Config::from_file(path), log);
}

}  // namespace mlqmcfe
