#pragma once

#include <cstdint>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qc1d/analysis.hpp"
#include "qc1d/errors.hpp"
#include "qc1d/lattice.hpp"
#include "qc1d/loads.hpp"
#include "qc1d/model.hpp"
#include "qc1d/operators.hpp"
#include "qc1d/potential.hpp"
#include "qc1d/report_io.hpp"
#include "qc1d/solver.hpp"

namespace qc1d {

enum class Command { solve, sweep, ghost, stability };

inline const char* to_string(Command c) {
  switch (c) {
    case Command::solve: return "solve";
    case Command::sweep: return "sweep";
    case Command::ghost: return "ghost";
    case Command::stability: return "stability";
  }
  return "?";
}

/// Parsed experiment configuration; string fields keep the exact selector
/// syntax used on the command line so the meta header reproduces them.
struct RunConfig {
  Command command = Command::solve;
  std::string models_str = "qce";  ///< comma-separated model list
  std::string potential_str = "lj";
  double strain = 1.0;
  std::string load_str = "zero";
  std::vector<int> n_list;
  std::string k_rule_str = "frac:0.25";
  std::string out_prefix;
  int trials = 200;
  std::uint64_t seed = 12345;
  double tol_compat = 1e-6;
  double tol_odd = 1e-9;
  bool dump_operator = false;  ///< solve: also write assembled operators as triplets
};

namespace detail {

inline std::vector<Model> parse_models(const std::string& names) {
  std::vector<Model> out;
  std::stringstream ss(names);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(parse_model(tok));
  }
  if (out.empty()) throw ConfigError("model: no models given");
  return out;
}

/// Sweeps demand halving-friendly N lists: every entry a power-of-two
/// multiple of the smallest.
inline void validate_sweep_n_list(const std::vector<int>& ns) {
  if (ns.size() < 4) {
    throw ConfigError("N: sweep needs at least 4 levels, got " + std::to_string(ns.size()));
  }
  const int base = ns.front();
  for (int n : ns) {
    if (n < 4) throw ConfigError("N: level " + std::to_string(n) + " is too small");
    if (n % base != 0) {
      throw ConfigError("N: " + std::to_string(n) + " is not a multiple of base " +
                        std::to_string(base));
    }
    int q = n / base;
    while (q % 2 == 0) q /= 2;
    if (q != 1) {
      throw ConfigError("N: " + std::to_string(n) + " is not base*2^k for base " +
                        std::to_string(base));
    }
  }
  for (std::size_t i = 1; i < ns.size(); ++i) {
    if (ns[i] <= ns[i - 1]) throw ConfigError("N: list must be strictly increasing");
  }
}

inline void warn_assumptions(std::ostream& err, const LinearizedCoeffs& c,
                             const std::vector<Model>& models) {
  for (Model m : models) {
    const AssumptionReport rep = check_assumptions(c, m);
    for (const auto& chk : rep.checks) {
      if (!chk.pass) {
        err << "warning: " << to_string(m) << ": " << chk.name
            << " fails (margin " << fmt17(chk.margin) << ")\n";
      }
    }
    if (rep.oscillatory_risk) {
      err << "warning: decay root is not real > 1; interface analysis unavailable\n";
    }
  }
}

inline std::string solution_path(const RunConfig& cfg, Model m, int n) {
  return cfg.out_prefix + "solution_" + to_string(m) + "_N" + std::to_string(n) + ".csv";
}

}  // namespace detail

/// Execute one experiment; writes CSV files under the configured prefix.
/// Throws typed errors (ConfigError, AssumptionError, SolverError, IoError)
/// which the CLI maps onto distinct exit codes.
inline int run(const RunConfig& cfg, std::ostream& log = std::cout,
               std::ostream& err = std::cerr) {
  const std::vector<Model> models = detail::parse_models(cfg.models_str);
  const PairPotential potential = parse_potential(cfg.potential_str);
  const LoadSpec load = parse_load(cfg.load_str);
  const KRule k_rule = KRule::parse(cfg.k_rule_str);
  if (cfg.n_list.empty()) throw ConfigError("N: at least one lattice size required");
  if (cfg.command == Command::sweep) detail::validate_sweep_n_list(cfg.n_list);
  for (int n : cfg.n_list) {
    const int k = k_rule.k_for(n);
    if (k < 2 || k > n - 2) {
      throw ConfigError("K: rule '" + cfg.k_rule_str + "' gives K=" + std::to_string(k) +
                        " outside [2, N-2] for N=" + std::to_string(n));
    }
  }
  const LinearizedCoeffs coeffs = linearize(potential, cfg.strain);
  detail::warn_assumptions(err, coeffs, models);
  const SolveOptions opt{cfg.tol_compat, cfg.tol_odd};
  const std::string meta_extra = "load=" + cfg.load_str + " K=" + cfg.k_rule_str;

  switch (cfg.command) {
    case Command::solve: {
      for (Model m : models) {
        for (int n : cfg.n_list) {
          const LatticeConfig lat(n, k_rule.k_for(n), cfg.strain);
          const SolveReport rep = solve_model(m, lat, coeffs, load, opt);
          const PeriodicField du = backward_difference(rep.solution, lat);
          CsvFile file(detail::solution_path(cfg, m, n));
          write_meta_line(file.stream(), "solve", cfg.potential_str, cfg.strain, coeffs,
                          meta_extra + " model=" + to_string(m) + " N=" + std::to_string(n));
          file.stream() << "j,x_j,u_j,Du_j\n";
          for (long j = -lat.n_half + 1; j <= lat.n_half; ++j) {
            file.stream() << j << ',' << fmt17(lat.x(j)) << ',' << fmt17(rep.solution(j))
                          << ',' << fmt17(du(j)) << '\n';
          }
          file.close();
          log << "wrote " << file.path() << " (defect " << fmt17(rep.compatibility_defect)
              << ", residual " << fmt17(rep.residual_norm) << ")\n";
          if (cfg.dump_operator) {
            CsvFile dump(cfg.out_prefix + "operator_" + std::string(to_string(m)) + "_N" +
                         std::to_string(n) + ".txt");
            assemble(m, lat, coeffs).write_triplets(dump.stream());
            dump.close();
            log << "wrote " << dump.path() << '\n';
          }
        }
      }
      return 0;
    }
    case Command::sweep: {
      CsvFile file(cfg.out_prefix + "sweep.csv");
      write_meta_line(file.stream(), "sweep", cfg.potential_str, cfg.strain, coeffs, meta_extra);
      file.stream() << "model,N,h,K,e_linf,de_l1,de_l2,de_linf\n";
      bool all_complete = true;
      bool non_assumption_failure = false;
      std::vector<std::pair<Model, ConvergenceReport>> reports;
      for (Model m : models) {
        ConvergenceReport rep =
            convergence_sweep(m, potential, cfg.strain, load, cfg.n_list, k_rule, opt);
        all_complete = all_complete && rep.complete;
        for (const auto& row : rep.rows) {
          if (!row.ok() && row.failure_kind != FailureKind::assumption) {
            non_assumption_failure = true;
          }
        }
        for (const auto& row : rep.rows) {
          if (!row.ok()) {
            file.stream() << to_string(m) << ',' << row.n_half << ',' << fmt17(row.h) << ','
                          << row.k_interface << ",failed,failed,failed,failed\n";
            err << "warning: level N=" << row.n_half << " failed: " << row.failure << '\n';
            continue;
          }
          file.stream() << to_string(m) << ',' << row.n_half << ',' << fmt17(row.h) << ','
                        << row.k_interface << ',' << fmt17(row.e_linf) << ',' << fmt17(row.de_l1)
                        << ',' << fmt17(row.de_l2) << ',' << fmt17(row.de_linf) << '\n';
        }
        reports.emplace_back(m, std::move(rep));
      }
      for (const auto& [m, rep] : reports) {
        const auto rate_line = [&](const char* name, const RateFit& f) {
          file.stream() << "#rate," << to_string(m) << ',' << name << ','
                        << (f.valid ? fmt17(f.rate) : "nan")
                        << (f.dropped_coarsest ? ",dropped_coarsest" : "") << '\n';
        };
        rate_line("e_linf", rep.rate_e_linf);
        rate_line("de_l1", rep.rate_de_l1);
        rate_line("de_l2", rep.rate_de_l2);
        rate_line("de_linf", rep.rate_de_linf);
      }
      file.close();
      log << "wrote " << file.path() << '\n';
      if (all_complete) return 0;
      return non_assumption_failure ? 4 : 3;
    }
    case Command::ghost: {
      for (int n : cfg.n_list) {
        const LatticeConfig lat(n, k_rule.k_for(n), cfg.strain);
        const GhostVector gv = ghost_vector(lat, coeffs);
        const SolveReport rep = solve_model(Model::qce, lat, coeffs, LoadSpec::zero(), opt);
        CsvFile file(cfg.out_prefix + "ghost_N" + std::to_string(n) + ".csv");
        write_meta_line(file.stream(), "ghost", cfg.potential_str, cfg.strain, coeffs,
                        meta_extra + " N=" + std::to_string(n));
        file.stream() << "j,g_j,u_qce_j\n";
        for (long j = -lat.n_half + 1; j <= lat.n_half; ++j) {
          file.stream() << j << ',' << fmt17(gv.g(j)) << ',' << fmt17(rep.solution(j)) << '\n';
        }
        file.close();
        log << "wrote " << file.path() << '\n';
      }
      return 0;
    }
    case Command::stability: {
      CsvFile file(cfg.out_prefix + "stability.csv");
      write_meta_line(file.stream(), "stability", cfg.potential_str, cfg.strain, coeffs,
                      meta_extra + " trials=" + std::to_string(cfg.trials));
      file.stream() << "model,N,K,nu_theory,min_ratio\n";
      for (Model m : models) {
        for (int n : cfg.n_list) {
          const LatticeConfig lat(n, k_rule.k_for(n), cfg.strain);
          const PeriodicOperator op = assemble(m, lat, coeffs);
          const double nu = stability_constant(coeffs, m);
          const StabilityProbe probe = stability_probe(op, nu, cfg.trials, cfg.seed);
          file.stream() << to_string(m) << ',' << n << ',' << lat.k_interface << ','
                        << fmt17(nu) << ',' << fmt17(probe.min_ratio) << '\n';
          if (probe.violations > 0) {
            err << "warning: " << to_string(m) << " N=" << n << ": " << probe.violations
                << " coercivity violations\n";
          }
        }
      }
      file.close();
      log << "wrote " << file.path() << '\n';
      return 0;
    }
  }
  return 0;
}

}  // namespace qc1d
