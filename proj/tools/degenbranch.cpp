#include <CLI11.hpp>
#include <cstdlib>
#include <fmt/format.h>
#include <iostream>
#include <optional>
#include <thread>

#include "degenbranch/config_io.hpp"
#include "degenbranch/error.hpp"
#include "degenbranch/harness.hpp"
#include "degenbranch/limit_constants.hpp"
#include "degenbranch/report.hpp"
#include "degenbranch/selftest.hpp"

using namespace degenbranch;

namespace {

constexpr int kExitGateFailure = 1;
constexpr int kExitInvalidInput = 2;

std::size_t resolve_workers(std::optional<std::size_t> flag) {
  if (flag) return std::max<std::size_t>(1, *flag);
  if (const char* env = std::getenv("DEGENBRANCH_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v >= 1) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
    throw ConfigError("DEGENBRANCH_WORKERS", fmt::format("must be a positive integer; got '{}'", env));
  }
  return std::max(1U, std::thread::hardware_concurrency());
}

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;
  std::string out = "out";
  std::string format = "jsonl";
};

void add_run_options(CLI::App* cmd, RunArgs& args) {
  cmd->add_option("--config", args.config, "experiment configuration (JSON)")->required();
  cmd->add_option("--seed", args.seed, "master seed, overrides the config");
  cmd->add_option("--workers", args.workers, "worker threads (default: DEGENBRANCH_WORKERS or all cores)");
  cmd->add_option("--out", args.out, "output directory")->capture_default_str();
  cmd->add_option("--format", args.format, "raw sample format")
      ->check(CLI::IsMember({"jsonl", "csv"}))
      ->capture_default_str();
}

SummaryReport run(const RunArgs& args) {
  ExperimentConfig config = load_config(args.config);
  if (args.seed) config.master_seed = *args.seed;
  const std::size_t workers = resolve_workers(args.workers);
  RunWriter writer(args.out, args.format == "csv" ? SampleFormat::Csv : SampleFormat::Jsonl,
                   config, workers);
  RunOptions options;
  options.workers = workers;
  options.sink = [&](const std::vector<FluctuationSample>& s) {
    writer.write_samples(s);
    if (!s.empty()) std::cerr << fmt::format("n = {}: {} samples written\n", s.front().n, s.size());
  };
  SummaryReport report = run_experiment(config, options);
  writer.finish(report);
  return report;
}

int cmd_constants(const std::vector<double>& alphas, double gamma, double theta, double kappa) {
  const StableIndexVector indices(alphas);
  Json out = {{"alphas", alphas},
              {"bar_alpha", indices.bar_alpha()},
              {"regime", std::string(to_string(indices.regime()))},
              {"gamma", gamma},
              {"theta", theta},
              {"kappa", kappa}};
  auto constant = [](const ConstantResult& c) {
    Json j = {{"value", c.value},
              {"method", std::string(to_string(c.method))},
              {"est_abs_error", c.est_abs_error}};
    if (c.cross_check) j["cross_check"] = *c.cross_check;
    if (c.truncation_radius) j["truncation_radius"] = *c.truncation_radius;
    return j;
  };
  switch (indices.regime()) {
    case Regime::Critical: {
      const CubicIntegral cubic = anisotropic_cubic_integral(indices);
      out["cubic_integral"] = cubic.value();
      out["c1"] = constant(c1(indices, gamma, theta, kappa));
      break;
    }
    case Regime::Intermediate:
      out["cubic_integral"] = anisotropic_cubic_integral(indices).value();
      out["c2"] = constant(c2(indices, gamma, theta));
      break;
    case Regime::Large: {
      const auto phi = GaussianTestFunction::standard(indices.dim());
      out["large_dim_variance_standard_gaussian"] =
          large_dim_covariance(phi, phi, indices, gamma, theta);
      break;
    }
    case Regime::Subcritical:
      throw UnsupportedRegimeError(
          fmt::format("no limit constant for bar_alpha = {} <= 1", indices.bar_alpha()));
  }
  std::cout << format_json(out, -1) << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Degenerate branching stable particle systems: simulation and verification"};
  app.set_version_flag("--version", tool_version());
  app.require_subcommand(1);

  std::vector<double> alphas;
  double gamma = 1.0;
  double theta = 1.0;
  double kappa = 0.5;
  auto* constants = app.add_subcommand("constants", "evaluate the limit constant for an index vector");
  constants->add_option("--alpha", alphas, "stability indices, comma separated")
      ->delimiter(',')
      ->required();
  constants->add_option("--gamma", gamma)->capture_default_str();
  constants->add_option("--theta", theta)->capture_default_str();
  constants->add_option("--kappa", kappa)->capture_default_str();

  RunArgs sim_args;
  auto* simulate = app.add_subcommand("simulate", "run an experiment and write its results");
  add_run_options(simulate, sim_args);

  RunArgs ver_args;
  auto* verify = app.add_subcommand("verify", "run an experiment and its acceptance gates");
  add_run_options(verify, ver_args);

  auto* selftest = app.add_subcommand("selftest", "run the oracle and invariant suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitInvalidInput;
  }

  try {
    if (*constants) {
      if (!(kappa > 0.0 && kappa < 1.0)) {
        throw ConfigError("--kappa", fmt::format("must lie in the open interval (0, 1); got {}", kappa));
      }
      return cmd_constants(alphas, gamma, theta, kappa);
    }
    if (*simulate) {
      const SummaryReport report = run(sim_args);
      std::cout << fmt::format("wrote {} scales to {}\n", report.scales.size(), sim_args.out);
      return 0;
    }
    if (*verify) {
      const SummaryReport report = run(ver_args);
      for (const auto& g : report.gates) {
        std::cout << fmt::format("{} {}{}: {}\n", g.passed ? "PASS" : "FAIL", g.name,
                                 g.enforced ? "" : " (informational)", g.detail);
      }
      return report.all_gates_passed() ? 0 : kExitGateFailure;
    }
    if (*selftest) {
      bool ok = true;
      run_selftest([&](const SelftestCheck& c) {
        ok = ok && c.passed;
        std::cout << fmt::format("{} {}: {}\n", c.passed ? "PASS" : "FAIL", c.name, c.detail)
                  << std::flush;
      });
      return ok ? 0 : kExitGateFailure;
    }
  } catch (const ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const DomainError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const UnsupportedRegimeError& e) {
    std::cerr << "unsupported regime: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const DivergenceError& e) {
    std::cerr << "divergent quantity: " << e.what() << '\n';
    return kExitInvalidInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitGateFailure;
  }
  return 0;
}
