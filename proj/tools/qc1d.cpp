// Command-line front end: solve / sweep / ghost / stability experiments on
// the periodic lattice models, emitting deterministic CSV files.
//
// Exit codes: 0 ok, 1 I/O failure, 2 configuration error,
//             3 assumption violation, 4 solver failure.

#include <CLI11.hpp>

#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "qc1d/errors.hpp"
#include "qc1d/run.hpp"
#include "qc1d/version.hpp"

namespace {

std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw qc1d::ConfigError("config: cannot read '" + path + "'");
  std::vector<std::pair<std::string, std::string>> kv;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    if (line[first] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw qc1d::ConfigError("config: line " + std::to_string(lineno) + " of '" + path +
                              "' is not key=value");
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return (b == std::string::npos) ? std::string() : s.substr(b, e - b + 1);
    };
    kv.emplace_back(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return kv;
}

// Splice file-provided options in front of the user's flags; options are
// registered take-last, so explicit flags override the file.
std::vector<std::string> merge_config_args(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::string config_path;
  for (std::size_t i = 0; i + 1 < args.size(); ++i) {
    if (args[i] == "--config") {
      config_path = args[i + 1];
      break;
    }
  }
  if (config_path.empty() || args.empty()) return args;
  std::vector<std::string> merged;
  merged.push_back(args[0]);  // subcommand
  for (const auto& [k, v] : read_config_file(config_path)) {
    merged.push_back("--" + k);
    merged.push_back(v);
  }
  merged.insert(merged.end(), args.begin() + 1, args.end());
  return merged;
}

void add_common_options(CLI::App* sub, qc1d::RunConfig& cfg, std::string& n_csv,
                        std::string& config_path, bool with_model) {
  sub->option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  if (with_model) {
    sub->add_option("--model", cfg.models_str,
                    "model(s): atomistic|continuum|qce|qnl, comma separated");
  }
  sub->add_option("--potential", cfg.potential_str, "\"lj\" or \"explicit:a,b,c,d\"");
  sub->add_option("--F", cfg.strain, "uniform deformation gradient, > 0");
  sub->add_option("--load", cfg.load_str, "\"zero\" or \"sin:m,A[;m,A...]\"");
  sub->add_option("--N", n_csv, "lattice size(s), comma separated")->required();
  sub->add_option("--K", cfg.k_rule_str, "interface rule: frac:theta or count:k");
  sub->add_option("--out", cfg.out_prefix, "output path prefix");
  sub->add_option("--tol-compat", cfg.tol_compat, "relative compatibility hard-error threshold");
  sub->add_option("--tol-odd", cfg.tol_odd, "relative oddness assertion tolerance");
  sub->add_option("--config", config_path, "key=value file; flags override it");
}

std::vector<int> parse_n_csv(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    try {
      std::size_t pos = 0;
      const int n = std::stoi(tok, &pos);
      if (pos != tok.size() || n < 1) throw std::invalid_argument(tok);
      out.push_back(n);
    } catch (const std::exception&) {
      throw qc1d::ConfigError("N: bad value '" + tok + "'");
    }
  }
  if (out.empty()) throw qc1d::ConfigError("N: empty list");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"one-dimensional atomistic/continuum lattice models: solves, "
               "refinement sweeps, ghost-force and stability experiments"};
  app.set_version_flag("--version", qc1d::version_string);
  app.require_subcommand(1);

  qc1d::RunConfig cfg;
  cfg.models_str.clear();
  std::string n_csv;
  std::string config_path;

  CLI::App* solve = app.add_subcommand("solve", "solve models and write solution CSVs");
  add_common_options(solve, cfg, n_csv, config_path, true);
  solve->add_flag("--dump-operator", cfg.dump_operator,
                  "also write each assembled operator as 'i j value' triplets");
  CLI::App* sweep = app.add_subcommand("sweep", "refinement sweep with fitted rates");
  add_common_options(sweep, cfg, n_csv, config_path, true);
  CLI::App* ghost = app.add_subcommand("ghost", "ghost forcing and zero-load QCE response");
  add_common_options(ghost, cfg, n_csv, config_path, false);
  CLI::App* stability = app.add_subcommand("stability", "random coercivity probes");
  add_common_options(stability, cfg, n_csv, config_path, true);
  stability->add_option("--trials", cfg.trials, "random probes per configuration");
  stability->add_option("--seed", cfg.seed, "probe RNG seed");

  try {
    const std::vector<std::string> merged = merge_config_args(argc, argv);
    // CLI11 takes arguments in reverse order
    std::vector<std::string> reversed(merged.rbegin(), merged.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    app.exit(e);
    return 2;
  } catch (const qc1d::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    if (solve->parsed()) cfg.command = qc1d::Command::solve;
    if (sweep->parsed()) cfg.command = qc1d::Command::sweep;
    if (ghost->parsed()) cfg.command = qc1d::Command::ghost;
    if (stability->parsed()) cfg.command = qc1d::Command::stability;
    if (ghost->parsed()) cfg.models_str = "qce";
    if (cfg.models_str.empty()) cfg.models_str = "qce";
    cfg.n_list = parse_n_csv(n_csv);
    return qc1d::run(cfg);
  } catch (const qc1d::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const qc1d::AssumptionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  } catch (const qc1d::SolverError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  } catch (const qc1d::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return 1;
  }
}
