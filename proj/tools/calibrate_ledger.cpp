// Freezes the fitted constants into data/constants.json from a desk-config run.
// Usage: calibrate_ledger CONFIG [LEDGER_PATH]
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "exorder/fourier.hpp"
#include "exorder/oscillatory.hpp"
#include "exorder/parallel.hpp"
#include "pipelines.hpp"

using namespace exorder;
using namespace exorder::cli;

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: calibrate_ledger CONFIG [LEDGER_PATH]\n";
    return exit_config;
  }
  const std::string ledger_path = argc > 2 ? argv[2] : default_ledger_path();
  RunConfig cfg;
  try {
    cfg = parse_config_file(argv[1]);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return exit_config;
  }
  fs::path scratch = fs::temp_directory_path() / ("exorder-calibrate-" + config_hash(cfg).substr(0, 12));
  fs::remove_all(scratch);
  cfg.output_dir = scratch.string();

  // the scan must not compare against a stale ledger
  setenv("EXORDER_LEDGER", (scratch / "none.json").string().c_str(), 1);
  int rc = run_pipelines(cfg, {"build", "scan-balls"}, std::cerr);
  if (rc != exit_ok && rc != exit_verification) return rc;

  ConstantsLedger L;
  L.calibrated_on = model_hash(cfg);
  {
    std::ifstream in(scratch / "balls.json");
    Json b = Json::parse(in);
    L.beta_hat = json_double(b.at("beta_hat"));
    for (const auto& k : b.at("kinds")) L.kind_exponents[k.at("kind").get<std::string>()] = json_double(k.at("min_exponent"));
  }

  // stationary-phase constant: largest |integral| / (bound at K = 1) over desk C2 pairs
  MeasureTree tree = tree_from_snapshot([&] {
    std::ifstream in(scratch / "tree_snapshot.json");
    return Json::parse(in);
  }());
  const double lx = cfg.fourier.log_xi, xi = std::exp(lx);
  ScaleChoice ch = choose_alpha(lx, tree.schedule());
  ClassPartition part = partition_classes(tree, lx, ch.alpha, cfg.fourier.gap);
  M2Options mo;
  mo.stationary_K = 1.0;
  mo.workers = default_workers();
  double observed = 0.0;
  std::size_t c2_pairs = 0;
  for (std::size_t b = 0; b < part.boxes.size(); ++b) {
    BoxFunction F = build_f_xi(part, b, xi, tree.schedule().N);
    if (F.size() > cfg.fourier.max_box_members) continue;
    M2Result r = m2_decompose(F, ch.alpha, tree.schedule().epsilon, tree.schedule().tau, mo);
    for (const auto& pc : r.pairs) {
      if (pc.kind != PhaseCaseKind::C2 || !(pc.bound_used > 0)) continue;
      ++c2_pairs;
      observed = std::max(observed, (std::abs(pc.quadrature_value) + pc.quadrature_error) / pc.bound_used);
    }
  }
  L.stationary_K_proof = stationary_constant_from_proof();
  L.stationary_K_observed = observed;
  L.stationary_K = std::max(L.stationary_K_proof, 2.0 * observed);
  L.m2_prefactor = 1.0;
  L.t2_prefactor = 1.0;
  L.rel_ball_C = 1.0;

  save_ledger(L, ledger_path);
  std::cerr << "ledger written to " << ledger_path << " (" << c2_pairs << " stationary pairs, observed K " << observed
            << ", beta_hat " << L.beta_hat << ")\n";
  fs::remove_all(scratch);
  return exit_ok;
}
