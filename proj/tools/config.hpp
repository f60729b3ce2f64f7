#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "exorder/profile.hpp"
#include "exorder/serialize.hpp"

namespace exorder::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct ProfileSettings {
  std::string form = "power";  // power, power_log, custom
  double tau = 2.5;
  double log_exp = 0.0;
  std::vector<std::pair<std::string, std::string>> table;  // custom: (q, psi as p/q)
  std::optional<double> tau_limit;
};

struct ScheduleSettings {
  long N = 6;
  long m = 2;
  long J = 2;
  double epsilon = 0.2;
  double concentration = 0.2;  // relative window for the block measure
  std::size_t levels = 2;
  double eta_ratio = 0.5;
  long max_j1 = 10000;
  std::uint64_t enumeration_budget = 10'000'000;
};

struct GeometrySettings {
  std::size_t ball_samples = 100;
  std::vector<double> ball_log10_widths = {-2, -4, -8, -16, -32};
  std::size_t windows_per_width = 8;
  std::size_t lower_tokens = 20;
  std::size_t lower_samples = 200;
  double partition_log_xi = 19.85;
  double partition_gap = 0.15;
};

struct FourierSettings {
  double log_xi = 19.85;
  double gap = 0.15;
  std::size_t max_box_members = 10;  // m2 and diagnostics on boxes up to this size
  std::size_t qr_box = 0;            // 0: the largest box with at most max_box_members
  std::size_t synthetic_instances = 100;
  std::size_t diagnostic_samples = 2000;
};

struct DecaySettings {
  double xi_min = 100.0;
  double xi_max = 1e5;
  std::size_t points = 13;
  double target_error = 0.05;
  std::size_t depth = 64;
  std::string policy = "adaptive";  // adaptive, alpha0
};

struct ExactnessSettings {
  std::size_t points = 4;
  std::size_t tokens = 0;  // 0: through the first exceptional level plus 40 blocks
  double c = 0.5;
  std::uint64_t qmax = 200000;
  std::uint64_t q_threshold = 10;  // Q(c): both verdicts look at q above it
};

struct SampleSettings {
  std::size_t count = 100;
  std::size_t tokens = 0;  // 0: through the first exceptional level
};

struct NormalitySettings {
  std::size_t samples = 1000;
  std::size_t digits = 200;
  std::vector<int> bases = {2, 10};
  long del_base = 2;
  long del_multiplier = 1;
  long del_N0 = 20;
  std::size_t del_samples = 100000;
};

struct RunConfig {
  std::string source_path;
  ProfileSettings profile;
  ScheduleSettings schedule;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> pipelines;
  std::string output_dir = "run";
  bool write_csv = true;
  std::size_t snapshot_nodes = 64;
  GeometrySettings geometry;
  FourierSettings fourier;
  DecaySettings decay;
  ExactnessSettings exactness;
  SampleSettings sample;
  NormalitySettings normality;

  std::uint64_t require_seed() const;
};

// Pipeline names in execution order.
const std::vector<std::string>& pipeline_order();

RunConfig parse_config_file(const std::string& path);
RunConfig parse_config_text(const std::string& text, const std::string& source_name = "<string>");
// Canonical JSON of every setting (paths excluded); the hash is SHA-256 of this text.
Json canonical_config(const RunConfig& c);
std::string config_hash(const RunConfig& c);
std::string sha256_hex(const std::string& bytes);

ApproxProfile build_profile(const ProfileSettings& p);

}  // namespace exorder::cli
