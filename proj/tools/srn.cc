// srn: run association experiments, sweep config sets, probe the oracle and
// run the invariant suite.

#include <glob.h>

#include <algorithm>
#include <cstdint>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "invariant_checks.h"
#include "json.hpp"
#include "srn/errors.h"
#include "srn/experiment.h"

namespace {

enum ExitCode {
  kOk = 0,
  kFailed = 1,
  kNumericalFault = 3,
  kIntractable = 4,
};

// Every config field becomes a --<field> flag; values use the same syntax as
// the config file, with plain comma lists accepted for `policies`.
struct FieldFlags {
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;

  void Attach(CLI::App* cmd, bool seed_required) {
    const auto defaults = nlohmann::json::parse(srn::ExperimentConfig{}.Serialize());
    for (const auto& [key, value] : defaults.items()) {
      if (key == "seed") continue;
      cmd->add_option("--" + key, values[key], "override config field " + key);
    }
    auto* s = cmd->add_option("--seed", seed, "master seed");
    if (seed_required) s->required();
    cmd->add_option("--set", sets, "key=value override, repeatable");
  }

  void Apply(srn::ExperimentConfig& config) const {
    for (const auto& [key, value] : values) {
      if (value.empty()) continue;
      config.Override(key + "=" + Normalize(key, value));
    }
    for (const auto& assignment : sets) config.Override(assignment);
    if (seed) config.seed = *seed;
  }

  static std::string Normalize(const std::string& key, const std::string& value) {
    if (key != "policies" || value.front() == '[') return value;
    nlohmann::json list = nlohmann::json::array();
    std::size_t start = 0;
    while (start <= value.size()) {
      const std::size_t comma = std::min(value.find(',', start), value.size());
      list.push_back(value.substr(start, comma - start));
      start = comma + 1;
    }
    return list.dump();
  }
};

void PrintRun(const srn::ExperimentConfig& config, const srn::RunOutputs& out) {
  for (const auto& w : out.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "# " << config.scenario << " seed=" << config.seed << "\n";
  std::cout << "csv=" << out.csv.string() << "\n";
  std::cout << "summary=" << out.summary_file.string() << "\n";
  srn::WriteSummary(out.summary, std::cout);
}

int RunOne(const std::string& path, const FieldFlags& flags) {
  srn::ExperimentConfig config = srn::ExperimentConfig::Load(path);
  flags.Apply(config);
  PrintRun(config, srn::RunAndWrite(config));
  return kOk;
}

int Sweep(const std::string& pattern, const FieldFlags& flags) {
  glob_t matches{};
  const int rc = glob(pattern.c_str(), 0, nullptr, &matches);
  std::vector<std::string> paths;
  if (rc == 0) {
    for (std::size_t i = 0; i < matches.gl_pathc; ++i) {
      paths.emplace_back(matches.gl_pathv[i]);
    }
  }
  globfree(&matches);
  if (paths.empty()) {
    std::cerr << "sweep: no config matches " << pattern << "\n";
    return kFailed;
  }
  std::sort(paths.begin(), paths.end());
  for (const auto& path : paths) RunOne(path, flags);
  return kOk;
}

int Oracle(int num_users, int num_devices, std::uint64_t seed, double rho,
           std::uint64_t cap) {
  srn::ExperimentConfig config;
  config.num_users = num_users;
  config.num_devices = num_devices;
  config.seed = seed;
  config.rho = rho;
  srn::SrnEnvironment env(config.Topology(), config.System(), rho);
  const srn::LinkGains& gains = env.Advance();
  std::cout << "m=" << num_users << " n=" << num_devices << " seed=" << seed
            << "\n";
  std::cout.precision(17);
  for (int m = 0; m < num_users; ++m) {
    std::cout << "gain[" << m << "]=";
    for (int n = 0; n < num_devices; ++n) {
      std::cout << (n ? "," : "") << gains(m, n);
    }
    std::cout << "\n";
  }
  srn::Rng rng = srn::MakeStream(seed, srn::Stream::kAgentBase);
  const srn::Association random =
      srn::RandomPolicy(num_users, num_devices, rng);
  const double random_rate =
      srn::EvaluateFrame(gains, random, env.params()).sum_rate;
  try {
    const srn::PolicyDecision best = srn::OptimalPolicy(gains, env.params(), cap);
    std::cout << "optimal.users=";
    const auto users = best.assoc.Users();
    for (std::size_t n = 0; n < users.size(); ++n) {
      std::cout << (n ? "," : "") << users[n] + 1;
    }
    std::cout << "\noptimal.sum_rate=" << best.achieved_sum_rate << "\n";
  } catch (const srn::IntractableError& e) {
    std::cout << "optimal unavailable: " << e.what() << "\n";
    std::cout << "random.sum_rate=" << random_rate << "\n";
    return kIntractable;
  }
  std::cout << "random.sum_rate=" << random_rate << "\n";
  return kOk;
}

int Check(std::uint64_t seed) {
  bool ok = true;
  for (const auto& r : srn::verify::RunAllChecks(seed)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail
              << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Symbiotic radio user association experiments"};
  app.require_subcommand(1);

  FieldFlags run_flags;
  std::string run_config;
  auto* run = app.add_subcommand("run", "run one experiment config");
  run->add_option("config", run_config, "config file")->required();
  run_flags.Attach(run, true);

  FieldFlags sweep_flags;
  std::string sweep_glob;
  auto* sweep = app.add_subcommand("sweep", "run every config matching a glob");
  sweep->add_option("pattern", sweep_glob, "config glob")->required();
  sweep_flags.Attach(sweep, false);

  int oracle_m = 3;
  int oracle_n = 3;
  std::uint64_t oracle_seed = 0;
  double oracle_rho = 0.99;
  std::uint64_t oracle_cap = srn::kDefaultEnumerationCap;
  auto* oracle = app.add_subcommand("oracle", "optimal association for one frame");
  oracle->add_option("--m", oracle_m, "number of users")->required();
  oracle->add_option("--n", oracle_n, "number of devices")->required();
  oracle->add_option("--seed", oracle_seed, "master seed")->required();
  oracle->add_option("--rho", oracle_rho, "fading correlation");
  oracle->add_option("--enumeration-cap", oracle_cap, "largest M^N searched");

  std::uint64_t check_seed = 1;
  auto* check = app.add_subcommand("check", "run the invariant suite");
  check->add_option("--seed", check_seed, "seed for the random instances");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return RunOne(run_config, run_flags);
    if (*sweep) return Sweep(sweep_glob, sweep_flags);
    if (*oracle) {
      return Oracle(oracle_m, oracle_n, oracle_seed, oracle_rho, oracle_cap);
    }
    if (*check) return Check(check_seed);
  } catch (const srn::NumericalFault& e) {
    std::cerr << "numerical fault: " << e.what() << "\n";
    return kNumericalFault;
  } catch (const srn::IntractableError& e) {
    std::cerr << "intractable: " << e.what() << "\n";
    return kIntractable;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailed;
  }
  return kFailed;
}
