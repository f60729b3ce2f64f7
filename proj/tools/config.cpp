#include "config.hpp"

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <set>
#include <sstream>

namespace exorder::cli {

namespace {

class Section {
 public:
  Section(const toml::table* t, std::string name) : t_(t), name_(std::move(name)) {}

  template <class T>
  void get(const char* key, T& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    if constexpr (std::is_same_v<T, double>) {
      if (auto v = n->value<double>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, bool>) {
      if (auto v = n->value_exact<bool>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (auto v = n->value_exact<std::string>()) {
        out = *v;
        return;
      }
    } else if constexpr (std::is_integral_v<T>) {
      if (auto v = n->value_exact<std::int64_t>()) {
        if (*v < 0 && std::is_unsigned_v<T>) bad(key, "must be nonnegative");
        out = static_cast<T>(*v);
        return;
      }
    }
    bad(key, "has the wrong type");
  }

  void get_opt(const char* key, std::optional<double>& out) {
    double v = 0.0;
    if (t_ && t_->get(key)) {
      get(key, v);
      out = v;
    } else {
      seen_.insert(key);
    }
  }

  template <class T>
  void get_list(const char* key, std::vector<T>& out) {
    seen_.insert(key);
    if (!t_) return;
    const toml::node* n = t_->get(key);
    if (!n) return;
    const toml::array* a = n->as_array();
    if (!a) bad(key, "must be an array");
    out.clear();
    for (const auto& e : *a) {
      if constexpr (std::is_same_v<T, std::string>) {
        auto v = e.value_exact<std::string>();
        if (!v) bad(key, "must hold strings");
        out.push_back(*v);
      } else if constexpr (std::is_same_v<T, double>) {
        auto v = e.value<double>();
        if (!v) bad(key, "must hold numbers");
        out.push_back(*v);
      } else {
        auto v = e.value_exact<std::int64_t>();
        if (!v) bad(key, "must hold integers");
        out.push_back(static_cast<T>(*v));
      }
    }
  }

  const toml::table* table() const { return t_; }
  void mark(const char* key) { seen_.insert(key); }

  void finish() const {
    if (!t_) return;
    for (const auto& [k, v] : *t_) {
      if (!seen_.count(std::string(k.str()))) throw ConfigError("unknown key '" + prefix() + std::string(k.str()) + "'");
    }
  }

 private:
  std::string prefix() const { return name_.empty() ? "" : name_ + "."; }
  [[noreturn]] void bad(const char* key, const char* what) const {
    throw ConfigError("config key '" + prefix() + key + "' " + what);
  }
  const toml::table* t_;
  std::string name_;
  std::set<std::string> seen_;
};

const toml::table* subtable(const toml::table& root, const char* name) {
  const toml::node* n = root.get(name);
  if (!n) return nullptr;
  if (!n->is_table()) throw ConfigError(std::string("config key '") + name + "' must be a table");
  return n->as_table();
}

void validate(const RunConfig& c) {
  if (c.pipelines.empty()) throw ConfigError("pipelines list is empty");
  for (const auto& p : c.pipelines) {
    const auto& order = pipeline_order();
    if (std::find(order.begin(), order.end(), p) == order.end()) throw ConfigError("unknown pipeline '" + p + "'");
  }
  bool sampling = std::any_of(c.pipelines.begin(), c.pipelines.end(), [](const std::string& p) { return p != "build"; });
  if (sampling && !c.seed) throw ConfigError("seed is mandatory for sampling pipelines");
  if (c.schedule.N < 2) throw ConfigError("schedule.N must be >= 2");
  if (c.schedule.m < 1 || c.schedule.J < 1) throw ConfigError("schedule.m and schedule.J must be >= 1");
  if (!(c.schedule.epsilon > 0 && c.schedule.epsilon < 1)) throw ConfigError("schedule.epsilon must lie in (0, 1)");
  if (!(c.schedule.concentration > 0)) throw ConfigError("schedule.concentration must be positive");
  if (c.schedule.levels < 1) throw ConfigError("schedule.levels must be >= 1");
  if (!(c.decay.xi_min > 0 && c.decay.xi_max >= c.decay.xi_min)) throw ConfigError("decay grid must satisfy 0 < xi_min <= xi_max");
  if (c.decay.policy != "adaptive" && c.decay.policy != "alpha0") throw ConfigError("decay.policy must be adaptive or alpha0");
  if (!(c.exactness.c > 0 && c.exactness.c < 1)) throw ConfigError("exactness.c must lie in (0, 1)");
  if (c.profile.form != "power" && c.profile.form != "power_log" && c.profile.form != "custom")
    throw ConfigError("profile.form must be power, power_log or custom");
  for (int b : c.normality.bases)
    if (b < 2 || b > 36) throw ConfigError("normality.bases must lie in [2, 36]");
}

}  // namespace

std::uint64_t RunConfig::require_seed() const {
  if (!seed) throw ConfigError("seed is mandatory for sampling pipelines");
  return *seed;
}

const std::vector<std::string>& pipeline_order() {
  static const std::vector<std::string> order = {"build",      "verify-geometry", "verify-fourier", "decay-scan",
                                                 "exactness",  "sample",          "normality"};
  return order;
}

RunConfig parse_config_text(const std::string& text, const std::string& source_name) {
  toml::table root;
  try {
    root = toml::parse(text, source_name);
  } catch (const toml::parse_error& e) {
    std::ostringstream os;
    os << source_name << ": " << e.description() << " at line " << e.source().begin.line;
    throw ConfigError(os.str());
  }
  RunConfig c;
  c.source_path = source_name;

  Section top(&root, "");
  std::int64_t seed = 0;
  if (root.get("seed")) {
    top.get("seed", seed);
    if (seed < 0) throw ConfigError("seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(seed);
  } else {
    top.mark("seed");
  }
  top.get_list("pipelines", c.pipelines);
  top.get("output_dir", c.output_dir);
  top.get("snapshot_nodes", c.snapshot_nodes);
  for (const char* t : {"profile", "schedule", "geometry", "fourier", "decay", "exactness", "sample", "normality", "format"})
    top.mark(t);
  top.finish();

  Section p(subtable(root, "profile"), "profile");
  p.get("form", c.profile.form);
  p.get("tau", c.profile.tau);
  p.get("log_exp", c.profile.log_exp);
  p.get_opt("tau_limit", c.profile.tau_limit);
  p.mark("table");
  if (p.table() && p.table()->get("table")) {
    const toml::array* a = p.table()->get("table")->as_array();
    if (!a) throw ConfigError("profile.table must be an array of [q, psi] string pairs");
    for (const auto& e : *a) {
      const toml::array* pair = e.as_array();
      if (!pair || pair->size() != 2) throw ConfigError("profile.table entries must be [q, psi]");
      auto q = (*pair)[0].value_exact<std::string>();
      auto psi = (*pair)[1].value_exact<std::string>();
      if (!q || !psi) throw ConfigError("profile.table entries must be strings (exact integers and rationals)");
      c.profile.table.emplace_back(*q, *psi);
    }
  }
  p.finish();

  Section s(subtable(root, "schedule"), "schedule");
  s.get("N", c.schedule.N);
  s.get("m", c.schedule.m);
  s.get("J", c.schedule.J);
  s.get("epsilon", c.schedule.epsilon);
  s.get("concentration", c.schedule.concentration);
  s.get("levels", c.schedule.levels);
  s.get("eta_ratio", c.schedule.eta_ratio);
  s.get("max_j1", c.schedule.max_j1);
  s.get("enumeration_budget", c.schedule.enumeration_budget);
  s.finish();

  Section g(subtable(root, "geometry"), "geometry");
  g.get("ball_samples", c.geometry.ball_samples);
  g.get_list("ball_log10_widths", c.geometry.ball_log10_widths);
  g.get("windows_per_width", c.geometry.windows_per_width);
  g.get("lower_tokens", c.geometry.lower_tokens);
  g.get("lower_samples", c.geometry.lower_samples);
  g.get("partition_log_xi", c.geometry.partition_log_xi);
  g.get("partition_gap", c.geometry.partition_gap);
  g.finish();

  Section f(subtable(root, "fourier"), "fourier");
  f.get("log_xi", c.fourier.log_xi);
  f.get("gap", c.fourier.gap);
  f.get("max_box_members", c.fourier.max_box_members);
  f.get("qr_box", c.fourier.qr_box);
  f.get("synthetic_instances", c.fourier.synthetic_instances);
  f.get("diagnostic_samples", c.fourier.diagnostic_samples);
  f.finish();

  Section d(subtable(root, "decay"), "decay");
  d.get("xi_min", c.decay.xi_min);
  d.get("xi_max", c.decay.xi_max);
  d.get("points", c.decay.points);
  d.get("target_error", c.decay.target_error);
  d.get("depth", c.decay.depth);
  d.get("policy", c.decay.policy);
  d.finish();

  Section e(subtable(root, "exactness"), "exactness");
  e.get("points", c.exactness.points);
  e.get("tokens", c.exactness.tokens);
  e.get("c", c.exactness.c);
  e.get("qmax", c.exactness.qmax);
  e.get("q_threshold", c.exactness.q_threshold);
  e.finish();

  Section sm(subtable(root, "sample"), "sample");
  sm.get("count", c.sample.count);
  sm.get("tokens", c.sample.tokens);
  sm.finish();

  Section n(subtable(root, "normality"), "normality");
  n.get("samples", c.normality.samples);
  n.get("digits", c.normality.digits);
  n.get_list("bases", c.normality.bases);
  n.get("del_base", c.normality.del_base);
  n.get("del_multiplier", c.normality.del_multiplier);
  n.get("del_N0", c.normality.del_N0);
  n.get("del_samples", c.normality.del_samples);
  n.finish();

  Section fm(subtable(root, "format"), "format");
  fm.get("csv", c.write_csv);
  fm.finish();

  validate(c);
  return c;
}

RunConfig parse_config_file(const std::string& path) {
  std::FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw ConfigError("cannot open config file " + path);
  std::string text;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) text.append(buf, n);
  std::fclose(f);
  return parse_config_text(text, path);
}

Json canonical_config(const RunConfig& c) {
  Json j;
  j["seed"] = c.seed ? Json(*c.seed) : Json(nullptr);
  j["pipelines"] = c.pipelines;
  j["snapshot_nodes"] = c.snapshot_nodes;
  Json tbl = Json::array();
  for (const auto& [q, psi] : c.profile.table) tbl.push_back(Json{q, psi});
  j["profile"] = {{"form", c.profile.form}, {"tau", c.profile.tau}, {"log_exp", c.profile.log_exp},
                  {"tau_limit", c.profile.tau_limit ? Json(*c.profile.tau_limit) : Json(nullptr)}, {"table", tbl}};
  j["schedule"] = {{"N", c.schedule.N},
                   {"m", c.schedule.m},
                   {"J", c.schedule.J},
                   {"epsilon", c.schedule.epsilon},
                   {"concentration", c.schedule.concentration},
                   {"levels", c.schedule.levels},
                   {"eta_ratio", c.schedule.eta_ratio},
                   {"max_j1", c.schedule.max_j1},
                   {"enumeration_budget", c.schedule.enumeration_budget}};
  j["geometry"] = {{"ball_samples", c.geometry.ball_samples},
                   {"ball_log10_widths", c.geometry.ball_log10_widths},
                   {"windows_per_width", c.geometry.windows_per_width},
                   {"lower_tokens", c.geometry.lower_tokens},
                   {"lower_samples", c.geometry.lower_samples},
                   {"partition_log_xi", c.geometry.partition_log_xi},
                   {"partition_gap", c.geometry.partition_gap}};
  j["fourier"] = {{"log_xi", c.fourier.log_xi},
                  {"gap", c.fourier.gap},
                  {"max_box_members", c.fourier.max_box_members},
                  {"qr_box", c.fourier.qr_box},
                  {"synthetic_instances", c.fourier.synthetic_instances},
                  {"diagnostic_samples", c.fourier.diagnostic_samples}};
  j["decay"] = {{"xi_min", c.decay.xi_min},         {"xi_max", c.decay.xi_max}, {"points", c.decay.points},
                {"target_error", c.decay.target_error}, {"depth", c.decay.depth},   {"policy", c.decay.policy}};
  j["exactness"] = {{"points", c.exactness.points}, {"tokens", c.exactness.tokens}, {"c", c.exactness.c},
                    {"qmax", c.exactness.qmax}, {"q_threshold", c.exactness.q_threshold}};
  j["sample"] = {{"count", c.sample.count}, {"tokens", c.sample.tokens}};
  j["normality"] = {{"samples", c.normality.samples},
                    {"digits", c.normality.digits},
                    {"bases", c.normality.bases},
                    {"del_base", c.normality.del_base},
                    {"del_multiplier", c.normality.del_multiplier},
                    {"del_N0", c.normality.del_N0},
                    {"del_samples", c.normality.del_samples}};
  j["format"] = {{"csv", c.write_csv}};
  return j;
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    if (ctx) EVP_MD_CTX_free(ctx);
    throw std::runtime_error("SHA-256 failed");
  }
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string config_hash(const RunConfig& c) { return sha256_hex(dump_json(canonical_config(c), 0)); }

ApproxProfile build_profile(const ProfileSettings& p) {
  if (p.form == "power") return ApproxProfile::power(p.tau);
  if (p.form == "power_log") return ApproxProfile::power_log(p.tau, p.log_exp);
  std::vector<PsiPoint> table;
  try {
    for (const auto& [q, psi] : p.table) table.push_back(PsiPoint{parse_bigint(q), Rational(psi)});
  } catch (const std::exception& e) {
    throw ConfigError(std::string("profile.table: ") + e.what());
  }
  try {
    return ApproxProfile::custom(std::move(table), p.tau_limit);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("profile: ") + e.what());
  }
}

}  // namespace exorder::cli
