#include <CLI11.hpp>

#include <iostream>

#include "pipelines.hpp"
#include "report.hpp"

using namespace exorder::cli;

int main(int argc, char** argv) {
  CLI::App app{"Measures on sets of exact approximation order: construction, checks and scans"};
  app.require_subcommand(1);

  struct Sub {
    const char* name;
    const char* help;
    std::vector<std::string> steps;  // empty: the pipelines listed in the config
  };
  const std::vector<Sub> subs = {
      {"run", "run the pipelines listed in the config", {}},
      {"build", "build the measure tree and write its snapshot", {"build"}},
      {"verify", "run the geometry and Fourier checks", {"verify-geometry", "verify-fourier"}},
      {"scan-decay", "tabulate the Fourier transform over the decay grid", {"decay-scan"}},
      {"scan-balls", "scan ball-condition windows", {"scan-balls"}},
      {"exactness", "check approximation order along sampled points", {"exactness"}},
      {"sample", "draw prefixes from the measure", {"sample"}},
      {"normality", "digit statistics and the DEL partial sums", {"normality"}},
  };
  std::string config_path;
  std::vector<std::pair<CLI::App*, const Sub*>> registered;
  for (const auto& s : subs) {
    CLI::App* cmd = app.add_subcommand(s.name, s.help);
    cmd->add_option("config", config_path, "TOML config file")->required();
    registered.emplace_back(cmd, &s);
  }
  std::string report_dir;
  std::string golden_dir;
  CLI::App* report = app.add_subcommand("report", "summarize an artifact directory");
  report->add_option("dir", report_dir, "artifact directory")->required();
  report->add_option("--golden", golden_dir, "reference run to compare decay.csv against");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : exit_config;
  }

  if (report->parsed())
    return report_directory(report_dir, golden_dir.empty() ? std::nullopt : std::optional<std::string>(golden_dir),
                            std::cout);
  for (const auto& [cmd, sub] : registered) {
    if (!cmd->parsed()) continue;
    std::optional<std::vector<std::string>> steps;
    if (!sub->steps.empty()) steps = sub->steps;
    return run_config_file(config_path, steps, std::cerr);
  }
  return exit_config;
}
