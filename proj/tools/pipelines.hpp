#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"
#include "exorder/ledger.hpp"
#include "exorder/measure_tree.hpp"

namespace exorder::cli {

enum ExitCode : int {
  exit_ok = 0,
  exit_partial = 1,
  exit_config = 2,
  exit_infeasible = 3,
  exit_verification = 4,
  exit_budget = 5,
};

class VerificationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CheckRow {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunContext {
  RunConfig config;
  std::string hash;        // SHA-256 of the canonical config
  std::string model_hash;  // profile, schedule, geometry and seed only; keys the ledger
  std::filesystem::path out;
  ConstantsLedger ledger;
  unsigned workers = 1;
  std::unique_ptr<MeasureTree> tree;
  std::vector<std::string> failed;  // checks that failed across pipelines
  Json pipeline_log = Json::array();
  Json artifacts = Json::object();  // file name -> sha256
};

// Hash of the settings that determine the measure and the geometry scans.
std::string model_hash(const RunConfig& c);

// Runs `steps` (pipeline names plus the internal "scan-balls") in dependency order, writing
// artifacts and MANIFEST into the configured output directory. Returns the process exit code.
int run_pipelines(const RunConfig& config, std::vector<std::string> steps, std::ostream& log);

// Config-file entry point: parse errors map to exit 2.
int run_config_file(const std::string& path, const std::optional<std::vector<std::string>>& steps, std::ostream& log);

}  // namespace exorder::cli
