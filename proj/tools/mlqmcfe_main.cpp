// Experiment runner for the multi-level QMC finite element library.
//
//   mlqmcfe run <config>               run the mode selected by run.mode
//   mlqmcfe plan <config>              print the level plan without running
//   mlqmcfe cbc --s S --n N [...]      emit a generating vector file

#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mlqmcfe/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"multi-level quasi-Monte Carlo finite element experiments"};
  app.require_subcommand(1);

  std::string config_path;
  auto* run_cmd = app.add_subcommand("run", "run an experiment config");
  run_cmd->add_option("config", config_path, "key=value config file")->required();

  std::string plan_config;
  auto* plan_cmd = app.add_subcommand("plan", "print the multi-level plan only");
  plan_cmd->add_option("config", plan_config, "key=value config file")->required();

  int cbc_s = 0;
  long long cbc_n = 0;
  std::string cbc_config;
  std::string cbc_out = "lattice.txt";
  auto* cbc_cmd = app.add_subcommand("cbc", "construct and write a generating vector");
  cbc_cmd->add_option("--s", cbc_s, "dimension")->required();
  cbc_cmd->add_option("--n", cbc_n, "number of points (rounded up to a prime)")->required();
  cbc_cmd->add_option("--config", cbc_config, "config supplying the field and weights");
  cbc_cmd->add_option("--out", cbc_out, "output path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return mlqmcfe::run_experiment_file(config_path, std::cout);

    if (plan_cmd->parsed()) {
      const auto cfg = mlqmcfe::Config::from_file(plan_config);
      const auto field = mlqmcfe::build_field(cfg);
      const auto plan = mlqmcfe::plan_from_config(cfg, *field);
      std::cout << "ell,h,s,N,m,theta\n";
      for (int ell = 0; ell <= plan.L; ++ell)
        std::cout << ell << "," << plan.h[ell] << "," << plan.s[ell] << "," << plan.N[ell] << ","
                  << plan.m[ell] << "," << plan.theta[ell] << "\n";
      return 0;
    }

    const auto cfg = cbc_config.empty() ? mlqmcfe::Config::defaults()
                                        : mlqmcfe::Config::from_file(cbc_config);
    const auto field = mlqmcfe::build_field(cfg);
    const auto weights = mlqmcfe::build_weights(*field, cfg, cbc_s);
    const auto rule = mlqmcfe::cbc_construct(cbc_s, mlqmcfe::next_prime(cbc_n), weights);
    std::ofstream out(cbc_out);
    out << mlqmcfe::serialize_rule(rule, weights.lambda);
    std::cout << "wrote " << cbc_out << " (s=" << rule.s << ", N=" << rule.N << ")\n";
    return 0;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
