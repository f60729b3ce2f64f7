#include "exorder/serialize.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace exorder {

namespace {

void dump_rec(const Json& j, int indent, int level, std::string& out) {
  auto pad = [&](int l) {
    if (indent > 0) {
      out += '\n';
      out.append(static_cast<std::size_t>(l * indent), ' ');
    }
  };
  switch (j.type()) {
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += '{';
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ',';
        first = false;
        pad(level + 1);
        out += Json(it.key()).dump();
        out += indent > 0 ? ": " : ":";
        dump_rec(it.value(), indent, level + 1, out);
      }
      pad(level);
      out += '}';
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      // arrays of scalars stay on one line
      bool flat = true;
      for (const auto& e : j) flat = flat && !e.is_structured();
      out += '[';
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",";
        first = false;
        if (!flat) pad(level + 1);
        dump_rec(e, indent, level + 1, out);
      }
      if (!flat) pad(level);
      out += ']';
      return;
    }
    case Json::value_t::number_float: {
      double x = j.get<double>();
      if (std::isfinite(x)) out += fmt17(x);
      else out += '"' + fmt17(x) + '"';
      return;
    }
    default:
      out += j.dump();
  }
}

std::string level_name(BlockLevel l) { return l == BlockLevel::nu_m ? "nu_m" : "nu_bar"; }

std::string form_name(ProfileForm f) {
  switch (f) {
    case ProfileForm::power: return "power";
    case ProfileForm::power_log: return "power_log";
    case ProfileForm::custom: return "custom";
  }
  return "power";
}

Json doubles(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(x);
  return a;
}

std::vector<double> doubles_from(const Json& j) {
  std::vector<double> v;
  v.reserve(j.size());
  for (const auto& e : j) v.push_back(json_double(e));
  return v;
}

}  // namespace

std::string dump_json(const Json& j, int indent) {
  std::string out;
  dump_rec(j, indent, 0, out);
  out += '\n';
  return out;
}

double json_double(const Json& j) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const std::string s = j.get<std::string>();
    if (s == "inf") return INFINITY;
    if (s == "-inf") return -INFINITY;
    if (s == "nan") return NAN;
  }
  throw std::invalid_argument("expected a number, got " + j.dump());
}

Json artifact_header(const std::string& schema, const std::string& config_hash) {
  Json h;
  h["schema"] = schema;
  h["schema_version"] = kSchemaVersion;
  h["config_hash"] = config_hash;
  return h;
}

CsvTable::CsvTable(std::string schema, std::string config_hash, std::vector<std::string> columns)
    : schema_(std::move(schema)), hash_(std::move(config_hash)), columns_(std::move(columns)) {}

void CsvTable::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) throw std::logic_error("CsvTable: row width differs from header");
  rows_.push_back(cells);
}

std::string CsvTable::num(double x) { return fmt17(x); }

std::string CsvTable::str() const {
  std::ostringstream os;
  os << "# schema=" << schema_ << " version=" << kSchemaVersion << "\n";
  os << "# config_hash=" << hash_ << "\n";
  for (std::size_t i = 0; i < columns_.size(); ++i) os << (i ? "," : "") << columns_[i];
  os << "\n";
  for (const auto& r : rows_) {
    for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
    os << "\n";
  }
  return os.str();
}

Json to_json(const Schedule& s) {
  Json j;
  j["N"] = s.N;
  j["m"] = s.m;
  j["J"] = s.J;
  j["epsilon"] = s.epsilon;
  j["tau"] = s.tau;
  j["sigma"] = s.sigma;
  j["concentration"] = s.concentration;
  j["jk"] = s.jk;
  j["etak"] = doubles(s.etak);
  Json checks = Json::array();
  for (const GrowthCheck& c : s.growth_checks) {
    Json cj;
    cj["name"] = c.name;
    cj["origin"] = c.origin;
    cj["required"] = c.required;
    cj["passed"] = c.passed;
    cj["lhs"] = c.lhs;
    cj["rhs"] = c.rhs;
    cj["detail"] = c.detail;
    checks.push_back(cj);
  }
  j["growth_checks"] = checks;
  return j;
}

Schedule schedule_from_json(const Json& j) {
  Schedule s;
  s.N = j.at("N").get<long>();
  s.m = j.at("m").get<long>();
  s.J = j.at("J").get<long>();
  s.epsilon = json_double(j.at("epsilon"));
  s.tau = json_double(j.at("tau"));
  s.sigma = json_double(j.at("sigma"));
  s.concentration = json_double(j.at("concentration"));
  s.jk = j.at("jk").get<std::vector<long>>();
  s.etak = doubles_from(j.at("etak"));
  for (const auto& cj : j.at("growth_checks")) {
    GrowthCheck c;
    c.name = cj.at("name").get<std::string>();
    c.origin = cj.at("origin").get<std::string>();
    c.required = cj.at("required").get<bool>();
    c.passed = cj.at("passed").get<bool>();
    c.lhs = json_double(cj.at("lhs"));
    c.rhs = json_double(cj.at("rhs"));
    c.detail = cj.at("detail").get<std::string>();
    s.growth_checks.push_back(c);
  }
  return s;
}

Json to_json(const ApproxProfile& p) {
  Json j;
  j["form"] = form_name(p.form());
  j["tau"] = p.tau();
  j["log_exp"] = p.log_exp();
  j["tau_limit"] = p.tau_limit();
  Json table = Json::array();
  for (const PsiPoint& pt : p.table()) table.push_back(Json{to_decimal(pt.q), to_string(pt.psi)});
  j["table"] = table;
  return j;
}

ApproxProfile profile_from_json(const Json& j) {
  const std::string form = j.at("form").get<std::string>();
  if (form == "power") return ApproxProfile::power(json_double(j.at("tau")));
  if (form == "power_log") return ApproxProfile::power_log(json_double(j.at("tau")), json_double(j.at("log_exp")));
  if (form == "custom") {
    std::vector<PsiPoint> table;
    for (const auto& e : j.at("table")) table.push_back(PsiPoint{parse_bigint(e.at(0).get<std::string>()), Rational(e.at(1).get<std::string>())});
    return ApproxProfile::custom(std::move(table), json_double(j.at("tau_limit")));
  }
  throw std::invalid_argument("unknown profile form '" + form + "'");
}

Json to_json(const BlockMeasure& m) {
  Json j;
  j["level"] = level_name(m.level);
  j["N"] = m.N;
  j["m"] = m.m;
  j["J"] = m.J;
  j["length"] = m.length;
  j["epsilon"] = m.epsilon;
  Json blocks = Json::array();
  for (std::size_t i = 0; i < m.size(); ++i) blocks.push_back(m.block(i));
  j["blocks"] = blocks;
  j["log_weights"] = doubles(m.log_weights);
  j["log_K"] = doubles(m.log_K);
  j["log_Sm"] = m.log_Sm;
  j["log_product_weights"] = doubles(m.log_product_weights);
  j["sigma"] = m.sigma;
  j["log_K_sd"] = m.log_K_sd;
  j["concentration"] = m.concentration;
  j["retained_mass"] = m.retained_mass;
  j["sampled"] = m.sampled;
  j["retained_mass_stderr"] = m.retained_mass_stderr;
  j["support_predicate"] = m.support_predicate;
  return j;
}

BlockMeasure block_measure_from_json(const Json& j) {
  BlockMeasure m;
  const std::string level = j.at("level").get<std::string>();
  if (level != "nu_m" && level != "nu_bar") throw std::invalid_argument("unknown block level '" + level + "'");
  m.level = level == "nu_m" ? BlockLevel::nu_m : BlockLevel::nu_bar;
  m.N = j.at("N").get<long>();
  m.m = j.at("m").get<long>();
  m.J = j.at("J").get<long>();
  m.length = j.at("length").get<long>();
  m.epsilon = json_double(j.at("epsilon"));
  for (const auto& b : j.at("blocks")) {
    auto blk = b.get<std::vector<int>>();
    if (static_cast<long>(blk.size()) != m.length) throw std::invalid_argument("block of wrong length in snapshot");
    for (int c : blk) {
      if (c < 1 || c > 255) throw std::invalid_argument("block entry out of range in snapshot");
      m.entries.push_back(static_cast<std::uint8_t>(c));
    }
  }
  m.log_weights = doubles_from(j.at("log_weights"));
  m.log_K = doubles_from(j.at("log_K"));
  m.log_Sm = json_double(j.at("log_Sm"));
  m.log_product_weights = doubles_from(j.at("log_product_weights"));
  m.sigma = json_double(j.at("sigma"));
  m.log_K_sd = json_double(j.at("log_K_sd"));
  m.concentration = json_double(j.at("concentration"));
  m.retained_mass = json_double(j.at("retained_mass"));
  m.sampled = j.at("sampled").get<bool>();
  m.retained_mass_stderr = json_double(j.at("retained_mass_stderr"));
  m.support_predicate = j.at("support_predicate").get<std::string>();
  if (m.log_weights.size() * static_cast<std::size_t>(m.length) != m.entries.size() ||
      m.log_K.size() != m.log_weights.size())
    throw std::invalid_argument("block table sizes disagree in snapshot");
  return m;
}

Json to_json(const std::vector<Token>& tokens) {
  Json a = Json::array();
  for (const Token& t : tokens) {
    if (t.exceptional) a.push_back(Json{{"b", to_decimal(t.b)}});
    else a.push_back(t.block);
  }
  return a;
}

std::vector<Token> tokens_from_json(const Json& j) {
  std::vector<Token> out;
  for (const auto& e : j) {
    if (e.is_object()) out.push_back(Token{true, {}, parse_bigint(e.at("b").get<std::string>())});
    else out.push_back(Token{false, e.get<std::vector<int>>(), BigInt(0)});
  }
  return out;
}

Json tree_snapshot(const MeasureTree& tree, const std::string& config_hash, std::size_t table_size,
                   std::uint64_t seed) {
  Json j;
  j["header"] = artifact_header("exorder.tree_snapshot", config_hash);
  j["schedule"] = to_json(tree.schedule());
  j["profile"] = to_json(tree.profile());
  j["nu_bar"] = to_json(tree.nu_bar());
  Json nodes = Json::array();
  const std::size_t tokens = tree.tokens_through_level(std::min<std::size_t>(1, tree.schedule().levels()));
  for (const AdmissibleSeq& s : tree.sample(tokens, table_size, seed, 61)) {
    Json n;
    n["prefix"] = to_json(s.tokens);
    n["log_weight"] = tree.lambda_weight(s);
    nodes.push_back(n);
  }
  j["nodes"] = nodes;
  return j;
}

SnapshotCheck validate_snapshot(const Json& snap) {
  auto fail = [](std::string inv, std::string detail) { return SnapshotCheck{false, std::move(inv), std::move(detail)}; };
  try {
    const Json& h = snap.at("header");
    if (h.at("schema").get<std::string>() != "exorder.tree_snapshot") return fail("schema", "not a tree snapshot");
    if (h.at("schema_version").get<int>() != kSchemaVersion)
      return fail("schema-version", "snapshot version " + h.at("schema_version").dump());
  } catch (const std::exception& e) {
    return fail("header", e.what());
  }

  Schedule s;
  BlockMeasure nb;
  std::optional<ApproxProfile> prof;
  try {
    s = schedule_from_json(snap.at("schedule"));
    prof = profile_from_json(snap.at("profile"));
    nb = block_measure_from_json(snap.at("nu_bar"));
  } catch (const std::exception& e) {
    return fail("parse", e.what());
  }

  for (std::size_t k = 1; k < s.jk.size(); ++k)
    if (!(s.jk[k] > s.jk[k - 1])) return fail("schedule-jk-increasing", "j_" + std::to_string(k + 1) + " <= j_" + std::to_string(k));
  for (std::size_t k = 1; k < s.etak.size(); ++k)
    if (!(s.etak[k] < s.etak[k - 1])) return fail("schedule-eta-decreasing", "eta_" + std::to_string(k + 1));
  if (s.etak.size() != s.jk.size()) return fail("schedule-levels", "eta and j lists differ in length");
  if (nb.length != s.p() || nb.N != s.N) return fail("schedule-block-shape", "nu_bar block shape differs from the schedule");

  for (std::size_t i = 0; i < nb.size(); ++i) {
    double lk = log_interior_continuant(nb.block_ptr(i), static_cast<std::size_t>(nb.length));
    if (std::fabs(lk - nb.log_K[i]) > 1e-12 * std::max(1.0, lk))
      return fail("nu_bar-log-continuant", "block " + std::to_string(i) + " stores log K " + fmt17(nb.log_K[i]) +
                                               ", recomputed " + fmt17(lk));
    for (std::size_t c = 0; c < static_cast<std::size_t>(nb.length); ++c)
      if (nb.block_ptr(i)[c] > nb.N) return fail("nu_bar-alphabet", "block " + std::to_string(i) + " has an entry above N");
  }
  double total = std::exp(log_sum_exp(nb.log_weights));
  if (std::fabs(total - 1.0) > 1e-12) return fail("nu_bar-normalized", "weights sum to " + fmt17(total));
  NuBarReport rep = check_nu_bar(nb, nb.concentration);
  if (!rep.property_a) return fail("nu_bar-factor-at-most-2", "max factor " + fmt17(rep.max_factor));
  if (!rep.property_b)
    return fail("nu_bar-concentration-window", "relative deviation " + fmt17(rep.worst_relative_deviation));
  if (!rep.mass_ok) return fail("nu_bar-retained-mass", "retained mass " + fmt17(rep.retained_mass));

  try {
    MeasureTree tree(s, *prof, nb);
    std::size_t i = 0;
    for (const auto& n : snap.at("nodes")) {
      AdmissibleSeq seq = AdmissibleSeq::from_tokens(tokens_from_json(n.at("prefix")));
      double stored = json_double(n.at("log_weight"));
      double lw = tree.lambda_weight(seq);
      if (std::fabs(lw - stored) > 1e-12 * std::max(1.0, std::fabs(lw)))
        return fail("node-log-weight", "node " + std::to_string(i) + " stores " + fmt17(stored) + ", recomputed " + fmt17(lw));
      ++i;
    }
  } catch (const std::exception& e) {
    return fail("node-admissible", e.what());
  }
  return SnapshotCheck{};
}

MeasureTree tree_from_snapshot(const Json& snap) {
  SnapshotCheck c = validate_snapshot(snap);
  if (!c.ok) throw std::runtime_error("snapshot invariant violated: " + c.invariant + " (" + c.detail + ")");
  return MeasureTree(schedule_from_json(snap.at("schedule")), profile_from_json(snap.at("profile")),
                     block_measure_from_json(snap.at("nu_bar")));
}

}  // namespace exorder
