// sqzem: figure reproduction and verification runs for the squeezed-bath
// electromechanical blockade model.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "config.hpp"
#include "experiments.hpp"

namespace {

using namespace sqzem;
using namespace sqzem::cli;

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kVerification = 4 };

struct Options {
  std::string command;
  std::string config_path;
  std::string preset_name;
  std::string out;
  std::vector<std::string> sets;
  int threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
};

json resolve_config(const Options& opt) {
  json config = default_config();
  if (!opt.preset_name.empty()) apply_patch(config, preset(opt.preset_name));
  if (!opt.config_path.empty()) apply_patch(config, load_json_file(opt.config_path));
  for (const auto& s : opt.sets) apply_patch(config, parse_assignment(s));
  if (!opt.out.empty()) config["output"] = opt.out;

  // The subcommand picks the experiment; a config may narrow `verify` to one check
  // and may use the sweep names for `design`.
  const std::string requested = config.at("experiment");
  static const std::vector<std::string> known = {
      "design", "sweep-xi", "sweep-r0", "spectrum", "g2", "verify", "verify-frames",
      "verify-dissipator", "verify-rwa", "all"};
  if (std::find(known.begin(), known.end(), requested) == known.end()) {
    throw Error(Errc::config, "unknown experiment '" + requested + "'");
  }
  const bool narrows = opt.command == "verify" && requested.rfind("verify-", 0) == 0;
  if (!narrows) config["experiment"] = opt.command;
  return config;
}

int exit_code_for(const Error& e) { return is_solver_failure(e.code()) ? kSolver : kConfig; }

void write_manifest(const fs::path& dir, const json& manifest) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(dir / "manifest.json");
  if (!out) {
    std::fprintf(stderr, "warning: cannot write manifest to %s\n", dir.string().c_str());
    return;
  }
  out << manifest.dump(2) << '\n';
}

int run(const Options& opt) {
  const auto start = std::chrono::steady_clock::now();
  json manifest = {{"tool", "sqzem"}, {"version", kVersion}, {"command", opt.command},
                   {"threads", opt.threads}};
  fs::path out = opt.out.empty() ? fs::path(default_config().at("output").get<std::string>())
                                 : fs::path(opt.out);
  auto finish = [&](int code, const Report* report) {
    manifest["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["exit_code"] = code;
    if (report) {
      json checks = json::array();
      for (const auto& c : report->checks) {
        checks.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
      }
      manifest["summaries"] = report->summaries;
      manifest["checks"] = checks;
      manifest["models"] = report->models;
      manifest["warnings"] = report->warnings;
      manifest["errors"] = report->errors;
      manifest["files"] = report->files;
    }
    write_manifest(out, manifest);
    return code;
  };

  json config;
  try {
    config = resolve_config(opt);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    manifest["errors"] = {e.what()};
    return finish(kConfig, nullptr);
  }
  manifest["config"] = config;
  out = config.at("output").get<std::string>();
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) {
    std::fprintf(stderr, "error: cannot create output directory %s\n", out.string().c_str());
    return kConfig;
  }

  RunContext ctx{config, out, opt.threads};
  Report report;
  const std::string experiment = config.at("experiment");
  const bool all = experiment == "all";
  using Runner = void (*)(const RunContext&, Report&);
  std::vector<std::pair<std::string, Runner>> stages;
  if (all || experiment == "design" || experiment == "sweep-xi" || experiment == "sweep-r0") {
    stages.emplace_back("design", run_design);
  }
  if (all || experiment == "spectrum") stages.emplace_back("spectrum", run_spectrum);
  if (all || experiment == "g2") stages.emplace_back("g2", run_g2);
  if (all || experiment.rfind("verify", 0) == 0) stages.emplace_back("verify", run_verifications);

  int code = kOk;
  for (const auto& [name, runner] : stages) {
    try {
      runner(ctx, report);
    } catch (const Error& e) {
      std::fprintf(stderr, "error in %s: %s\n", name.c_str(), e.what());
      report.errors.push_back(name + ": " + e.what());
      const int c = exit_code_for(e);
      if (code == kOk || c < code) code = c;
    } catch (const json::exception& e) {
      std::fprintf(stderr, "error in %s: config: %s\n", name.c_str(), e.what());
      report.errors.push_back(name + ": config: " + e.what());
      code = kConfig;
    }
  }

  for (const auto& c : report.checks) {
    std::printf("%s %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
  }
  const bool failed_check = std::any_of(report.checks.begin(), report.checks.end(),
                                        [](const Check& c) { return !c.passed; });
  if (code == kOk && report.solver_failures > 0) code = kSolver;
  if (failed_check && (code == kOk || code == kSolver)) code = kVerification;
  return finish(code, &report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Squeezed-bath electromechanical blockade: design curves, spectra, g2 and "
               "frame verifications."};
  app.require_subcommand(1);
  const std::string footer =
      "Configuration keys and defaults (override with --set key=value):\n" + describe_defaults() +
      "\nExit codes: 0 success, 2 config error, 3 solver failure, 4 verification failure.";
  app.footer(footer);

  Options opt;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"design", "Design curves versus xi and r0, and the balanced operating point"},
      {"spectrum", "Excitation spectra of the first Bogoliubov mode"},
      {"g2", "g2(0) trajectory from vacuum and steady state"},
      {"verify", "Dissipator identity, frame equivalence and rotating-wave checks"},
      {"all", "Every experiment above"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->footer(footer);
    sub->add_option("--config", opt.config_path, "JSON config file")->check(CLI::ExistingFile);
    sub->add_option("--preset", opt.preset_name, "Named parameter set: fig2, fig3a, fig3b");
    sub->add_option("--out", opt.out, "Output directory (default: config key 'output')");
    sub->add_option("--set", opt.sets, "Override a config key, e.g. params.xi_max=1100")
        ->take_all()
        ->allow_extra_args(false);
    sub->add_option("--threads", opt.threads, "Worker threads for sweeps")
        ->check(CLI::PositiveNumber);
    sub->callback([&opt, name = name] { opt.command = name; });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kConfig;
  }
  return run(opt);
}
