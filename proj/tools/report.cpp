#include "report.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "pipelines.hpp"

namespace exorder::cli {

namespace fs = std::filesystem;

namespace {

struct CsvData {
  std::vector<std::string> comments;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

std::vector<std::string> split_commas(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

CsvData read_csv(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw std::runtime_error("cannot read " + p.string());
  CsvData d;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') d.comments.push_back(line);
    else if (d.columns.empty()) d.columns = split_commas(line);
    else d.rows.push_back(split_commas(line));
  }
  return d;
}

Json read_json(const fs::path& p) {
  std::ifstream in(p);
  return Json::parse(in);
}

// Artifacts each pipeline leaves behind.
const std::vector<std::pair<std::string, std::vector<std::string>>>& expected_artifacts() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"build", {"tree_snapshot.json", "schedule.json", "nu_bar_report.json"}},
      {"verify-geometry", {"geometry.json", "balls.json"}},
      {"scan-balls", {"balls.json"}},
      {"verify-fourier", {"fourier_checks.json"}},
      {"decay-scan", {"decay.csv", "decay.json"}},
      {"exactness", {"exactness.json"}},
      {"sample", {"samples.json"}},
      {"normality", {"normality.json"}},
  };
  return table;
}

int compare_golden(const fs::path& run, const fs::path& golden, std::ostream& out) {
  CsvData a = read_csv(run / "decay.csv"), b = read_csv(golden / "decay.csv");
  if (a.columns != b.columns) {
    out << "golden: column mismatch\n";
    return exit_verification;
  }
  if (a.rows.size() != b.rows.size()) {
    out << "golden: " << a.rows.size() << " rows, expected " << b.rows.size() << "\n";
    return exit_verification;
  }
  std::size_t bad = 0;
  for (std::size_t r = 0; r < a.rows.size(); ++r) {
    for (std::size_t c = 0; c < a.columns.size(); ++c) {
      const std::string &x = a.rows[r][c], &y = b.rows[r][c];
      if (x == y) continue;
      char* ex = nullptr;
      char* ey = nullptr;
      double dx = std::strtod(x.c_str(), &ex), dy = std::strtod(y.c_str(), &ey);
      bool numeric = *ex == '\0' && *ey == '\0' && !x.empty() && !y.empty();
      if (numeric && std::fabs(dx - dy) <= 1e-9) continue;
      if (bad++ < 5) out << "golden: row " << r << " " << a.columns[c] << ": " << x << " vs " << y << "\n";
    }
  }
  if (bad) {
    out << "golden: " << bad << " mismatching cells\n";
    return exit_verification;
  }
  out << "golden: decay.csv matches (" << a.rows.size() << " rows)\n";
  return exit_ok;
}

}  // namespace

int report_directory(const std::string& dir, const std::optional<std::string>& golden, std::ostream& out) {
  fs::path root(dir);
  if (!fs::is_directory(root)) {
    out << "error: " << dir << " is not a directory\n";
    return exit_config;
  }
  int code = exit_ok;
  try {
    Json manifest;
    bool have_manifest = fs::exists(root / "MANIFEST");
    std::vector<std::string> ran;
    if (have_manifest) {
      manifest = read_json(root / "MANIFEST");
      out << "config hash  " << manifest["header"].value("config_hash", std::string("?")) << "\n";
      out << "model hash   " << manifest.value("model_hash", std::string("?")) << "\n";
      out << "exit code    " << manifest.value("exit_code", -1) << "\n";
      for (const auto& p : manifest["pipelines"]) {
        ran.push_back(p.at("name").get<std::string>());
        out << "  " << p.at("name").get<std::string>() << ": " << p.at("status").get<std::string>() << " ("
            << p.at("seconds").get<double>() << " s)\n";
      }
      for (const auto& f : manifest["failed_checks"]) out << "  failed: " << f.get<std::string>() << "\n";
    } else {
      out << "warning: no MANIFEST, summarizing the files present\n";
      code = exit_partial;
    }

    std::vector<std::string> missing;
    if (have_manifest) {
      for (const auto& [pipeline, files] : expected_artifacts()) {
        if (std::find(ran.begin(), ran.end(), pipeline) == ran.end()) continue;
        for (const auto& f : files)
          if (!fs::exists(root / f)) missing.push_back(f);
      }
      for (auto it = manifest["artifacts"].begin(); it != manifest["artifacts"].end(); ++it)
        if (!fs::exists(root / it.key()) && std::find(missing.begin(), missing.end(), it.key()) == missing.end())
          missing.push_back(it.key());
    }
    for (const auto& m : missing) out << "missing artifact: " << m << "\n";
    if (!missing.empty()) code = exit_partial;

    if (fs::exists(root / "decay.csv")) {
      CsvData d = read_csv(root / "decay.csv");
      out << "decay: " << d.rows.size() << " rows";
      if (fs::exists(root / "decay.json")) {
        Json j = read_json(root / "decay.json");
        if (j.contains("slope") && !j["slope"].is_null()) out << ", slope " << fmt17(json_double(j["slope"]));
      }
      out << "\n";
    }
    if (fs::exists(root / "geometry.json")) {
      Json j = read_json(root / "geometry.json");
      std::size_t pass = 0, total = 0;
      for (const auto& c : j["checks"]) pass += c.at("pass").get<bool>(), ++total;
      out << "geometry: " << pass << "/" << total << " checks, beta_hat " << fmt17(json_double(j["beta_hat"])) << "\n";
    }
    if (fs::exists(root / "fourier_checks.json")) {
      Json j = read_json(root / "fourier_checks.json");
      std::size_t pass = 0, total = 0;
      for (const auto& c : j["checks"]) pass += c.at("pass").get<bool>(), ++total;
      out << "fourier: " << pass << "/" << total << " checks\n";
    }
    if (fs::exists(root / "normality.json")) {
      Json j = read_json(root / "normality.json");
      for (const auto& b : j["bases"])
        out << "normality base " << b.at("base").get<int>() << ": digit p " << fmt17(json_double(b["p_digits"]))
            << ", digraph p " << fmt17(json_double(b["p_digraphs"])) << "\n";
    }
    if (golden) {
      int g = compare_golden(root, fs::path(*golden), out);
      if (g != exit_ok) code = g;
    }
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return exit_verification;
  }
  return code;
}

}  // namespace exorder::cli
