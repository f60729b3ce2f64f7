#include "exorder/ledger.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "exorder/serialize.hpp"

namespace exorder {

std::string default_ledger_path() {
  if (const char* p = std::getenv("EXORDER_LEDGER"); p && *p) return p;
  return std::string(EXORDER_SOURCE_DIR) + "/data/constants.json";
}

std::string ledger_json(const ConstantsLedger& l) {
  Json j;
  j["schema"] = "exorder.constants_ledger";
  j["schema_version"] = l.schema_version;
  j["calibrated_on"] = l.calibrated_on;
  j["stationary_K"] = l.stationary_K;
  j["stationary_K_proof"] = l.stationary_K_proof;
  j["stationary_K_observed"] = l.stationary_K_observed;
  j["m2_prefactor"] = l.m2_prefactor;
  j["m2_exponent_slack"] = l.m2_exponent_slack;
  j["rel_ball_C"] = l.rel_ball_C;
  j["t2_prefactor"] = l.t2_prefactor;
  j["t2_exponent_slack"] = l.t2_exponent_slack;
  j["beta_hat"] = l.beta_hat;
  Json kinds = Json::object();
  for (const auto& [k, v] : l.kind_exponents) kinds[k] = v;
  j["kind_exponents"] = kinds;
  j["exponent_tolerance"] = l.exponent_tolerance;
  return dump_json(j);
}

ConstantsLedger load_ledger(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("constants ledger not found at " + path);
  Json j = Json::parse(in);
  if (j.value("schema", std::string()) != "exorder.constants_ledger")
    throw std::runtime_error(path + " is not a constants ledger");
  ConstantsLedger l;
  l.schema_version = j.at("schema_version").get<int>();
  if (l.schema_version != 1) throw std::runtime_error("unsupported ledger version " + std::to_string(l.schema_version));
  l.calibrated_on = j.at("calibrated_on").get<std::string>();
  l.stationary_K = json_double(j.at("stationary_K"));
  l.stationary_K_proof = json_double(j.at("stationary_K_proof"));
  l.stationary_K_observed = json_double(j.at("stationary_K_observed"));
  l.m2_prefactor = json_double(j.at("m2_prefactor"));
  l.m2_exponent_slack = json_double(j.at("m2_exponent_slack"));
  l.rel_ball_C = json_double(j.at("rel_ball_C"));
  l.t2_prefactor = json_double(j.at("t2_prefactor"));
  l.t2_exponent_slack = json_double(j.at("t2_exponent_slack"));
  l.beta_hat = json_double(j.at("beta_hat"));
  for (auto it = j.at("kind_exponents").begin(); it != j.at("kind_exponents").end(); ++it)
    l.kind_exponents[it.key()] = json_double(it.value());
  l.exponent_tolerance = json_double(j.at("exponent_tolerance"));
  return l;
}

void save_ledger(const ConstantsLedger& ledger, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << ledger_json(ledger);
}

}  // namespace exorder
