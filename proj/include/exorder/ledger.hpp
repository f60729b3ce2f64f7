#pragma once

#include <map>
#include <string>

namespace exorder {

// Fitted constants frozen after calibration on the desk configuration. Regression assertions
// read these instead of constants chosen in code.
struct ConstantsLedger {
  int schema_version = 1;
  std::string calibrated_on;  // config hash of the calibration run

  // stationary-phase bound: frozen value, the constant extracted from the proof, and the
  // largest ratio (quadrature / bound with constant 1) seen during calibration
  double stationary_K = 0.0;
  double stationary_K_proof = 0.0;
  double stationary_K_observed = 0.0;

  // m2 <= prefactor (|xi|^((3 alpha - 1)/2 + C eps) + |xi|^(-tau alpha/(tau - 1) + C eps))
  double m2_prefactor = 1.0;
  double m2_exponent_slack = 1.0;

  // relative ball exponent beta_F = ... - C_rel eps
  double rel_ball_C = 1.0;

  // T2 relative mass <= prefactor |xi|^(-C eps)
  double t2_prefactor = 1.0;
  double t2_exponent_slack = 1.0;

  // regression values for the ball-condition scan
  double beta_hat = 0.0;
  std::map<std::string, double> kind_exponents;  // min exponent per cylinder kind
  double exponent_tolerance = 0.02;
};

std::string default_ledger_path();
ConstantsLedger load_ledger(const std::string& path);
// Written with 17 significant digits.
void save_ledger(const ConstantsLedger& ledger, const std::string& path);
std::string ledger_json(const ConstantsLedger& ledger);

}  // namespace exorder
