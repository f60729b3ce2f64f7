#pragma once

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

#include "exorder/admissible.hpp"
#include "exorder/block_measure.hpp"
#include "exorder/measure_tree.hpp"
#include "exorder/profile.hpp"

namespace exorder {

using Json = nlohmann::ordered_json;

constexpr int kSchemaVersion = 1;

// JSON text with every floating value written by fmt17 and non-finite values as strings.
std::string dump_json(const Json& j, int indent = 2);
// Reads a number written by dump_json, including "inf", "-inf" and "nan".
double json_double(const Json& j);

// Header object embedded in every artifact.
Json artifact_header(const std::string& schema, const std::string& config_hash);

// CSV with two comment lines (schema and config hash) before the column row.
class CsvTable {
 public:
  CsvTable(std::string schema, std::string config_hash, std::vector<std::string> columns);
  void row(const std::vector<std::string>& cells);
  std::string str() const;
  static std::string num(double x);

 private:
  std::string schema_, hash_;
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

Json to_json(const Schedule& s);
Schedule schedule_from_json(const Json& j);
Json to_json(const ApproxProfile& p);
ApproxProfile profile_from_json(const Json& j);
Json to_json(const BlockMeasure& m);
BlockMeasure block_measure_from_json(const Json& j);
Json to_json(const std::vector<Token>& tokens);
std::vector<Token> tokens_from_json(const Json& j);

// Schedule, profile, nu_bar and a table of sampled prefixes with their log weights.
Json tree_snapshot(const MeasureTree& tree, const std::string& config_hash, std::size_t table_size,
                   std::uint64_t seed);

struct SnapshotCheck {
  bool ok = true;
  std::string invariant;  // name of the first violated invariant
  std::string detail;
};

// Re-derives every stored quantity that can be recomputed and compares.
SnapshotCheck validate_snapshot(const Json& snapshot);
// Throws std::runtime_error naming the invariant when validation fails.
MeasureTree tree_from_snapshot(const Json& snapshot);

}  // namespace exorder
