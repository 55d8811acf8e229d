#include "voi/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "voi/error.hpp"

namespace voi {

using nlohmann::json;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void reject_unknown(const json& obj, const std::string& where,
                    std::initializer_list<const char*> allowed) {
  const std::set<std::string> keys(allowed.begin(), allowed.end());
  for (const auto& item : obj.items())
    if (!keys.count(item.key())) throw ConfigError(join(where, item.key()), "unknown field");
}

const json* find(const json& obj, const char* key) {
  const auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

void require_object(const json& value, const std::string& field) {
  if (!value.is_object()) throw ConfigError(field, "expected an object");
}

double read_number(const json& obj, const char* key, const std::string& where, double fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number()) throw ConfigError(join(where, key), "expected a number");
  return v->get<double>();
}

double read_positive(const json& obj, const char* key, const std::string& where, double fallback) {
  const double v = read_number(obj, key, where, fallback);
  if (!(v > 0.0)) throw ConfigError(join(where, key), "must be positive");
  return v;
}

std::int64_t read_integer(const json& obj, const char* key, const std::string& where,
                          std::int64_t fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  if (!v->is_number_integer()) throw ConfigError(join(where, key), "expected an integer");
  return v->get<std::int64_t>();
}

std::size_t read_count(const json& obj, const char* key, const std::string& where,
                       std::size_t fallback, std::size_t minimum = 1) {
  const std::int64_t v = read_integer(obj, key, where, static_cast<std::int64_t>(fallback));
  if (v < static_cast<std::int64_t>(minimum)) {
    std::ostringstream os;
    os << "must be an integer >= " << minimum << ", got " << v;
    throw ConfigError(join(where, key), os.str());
  }
  return static_cast<std::size_t>(v);
}

std::vector<int> read_sizes(const json& value, const std::string& field) {
  if (!value.is_array()) throw ConfigError(field, "expected an array of integers");
  std::vector<int> out;
  for (const auto& v : value) {
    if (!v.is_number_integer() || v.get<std::int64_t>() < 1)
      throw ConfigError(field, "sample sizes must be positive integers");
    out.push_back(v.get<int>());
  }
  return out;
}

BetaPrior read_beta(const json& obj, const char* key, const std::string& where, BetaPrior fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  const std::string field = join(where, key);
  require_object(*v, field);
  reject_unknown(*v, field, {"alpha", "beta"});
  return {read_positive(*v, "alpha", field, fallback.alpha),
          read_positive(*v, "beta", field, fallback.beta)};
}

NormalPrior read_normal(const json& obj, const char* key, const std::string& where,
                        NormalPrior fallback) {
  const json* v = find(obj, key);
  if (v == nullptr) return fallback;
  const std::string field = join(where, key);
  require_object(*v, field);
  reject_unknown(*v, field, {"mean", "variance"});
  return {read_number(*v, "mean", field, fallback.mean),
          read_positive(*v, "variance", field, fallback.variance)};
}

StudyKind parse_kind(const std::string& name, const std::string& field) {
  for (StudyKind k : {StudyKind::SideEffects, StudyKind::QualityOfLife, StudyKind::EffectivenessRct})
    if (name == to_string(k)) return k;
  throw ConfigError(field, "unknown study kind '" + name +
                               "' (expected side_effects, quality_of_life or effectiveness_rct)");
}

StudyConfig read_study(const json& v, const std::string& field) {
  require_object(v, field);
  reject_unknown(v, field, {"name", "kind", "n", "outcome_variance", "n_grid", "size_range"});
  const json* kind = find(v, "kind");
  if (kind == nullptr || !kind->is_string()) throw ConfigError(join(field, "kind"), "required string");
  StudyConfig s;
  s.design.kind = parse_kind(kind->get<std::string>(), join(field, "kind"));
  const json* n = find(v, "n");
  if (n == nullptr) throw ConfigError(join(field, "n"), "required");
  s.design.n = static_cast<int>(read_count(v, "n", field, 1));
  s.design.outcome_variance = read_positive(v, "outcome_variance", field, 2.0);
  const json* name = find(v, "name");
  if (name != nullptr && !name->is_string()) throw ConfigError(join(field, "name"), "expected a string");
  s.name = name != nullptr ? name->get<std::string>() : to_string(s.design.kind);
  if (const json* g = find(v, "n_grid")) s.n_grid = read_sizes(*g, join(field, "n_grid"));
  if (const json* r = find(v, "size_range")) {
    const auto pair = read_sizes(*r, join(field, "size_range"));
    if (pair.size() != 2) throw ConfigError(join(field, "size_range"), "expected [min, max]");
    s.size_range = SizeRange{pair[0], pair[1]};
  }
  return s;
}

MarketShareFunction read_market(const json& v, const std::string& field) {
  require_object(v, field);
  reject_unknown(v, field, {"kind", "threshold", "saturation_at", "breakpoints", "target"});
  const json* kind = find(v, "kind");
  if (kind == nullptr || !kind->is_string()) throw ConfigError(join(field, "kind"), "required string");
  MarketShareFunction fn;
  fn.target = read_count(v, "target", field, 1, 0);
  const std::string k = kind->get<std::string>();
  if (k == "threshold_linear") {
    ThresholdLinear t;
    t.threshold = read_number(v, "threshold", field, t.threshold);
    t.saturation_at = read_number(v, "saturation_at", field, t.saturation_at);
    fn.kind = t;
  } else if (k == "step_at_argmax") {
    fn.kind = StepAtArgmax{};
  } else if (k == "table") {
    const json* pts = find(v, "breakpoints");
    const std::string pf = join(field, "breakpoints");
    if (pts == nullptr || !pts->is_array()) throw ConfigError(pf, "expected an array of [p, share]");
    BreakpointTable table;
    for (const auto& pt : *pts) {
      if (!pt.is_array() || pt.size() != 2 || !pt[0].is_number() || !pt[1].is_number())
        throw ConfigError(pf, "each breakpoint must be [p, share]");
      table.points.emplace_back(pt[0].get<double>(), pt[1].get<double>());
    }
    fn.kind = table;
  } else {
    throw ConfigError(join(field, "kind"),
                      "unknown market-share kind '" + k +
                          "' (expected threshold_linear, step_at_argmax or table)");
  }
  try {
    fn.validate();
  } catch (const DomainError& e) {
    throw ConfigError(field, e.what());
  }
  return fn;
}

json market_to_json(const MarketShareFunction& fn) {
  json out;
  out["target"] = fn.target;
  if (const auto* t = std::get_if<ThresholdLinear>(&fn.kind)) {
    out["kind"] = "threshold_linear";
    out["threshold"] = t->threshold;
    out["saturation_at"] = t->saturation_at;
  } else if (std::holds_alternative<StepAtArgmax>(fn.kind)) {
    out["kind"] = "step_at_argmax";
  } else {
    out["kind"] = "table";
    json pts = json::array();
    for (const auto& [p, m] : std::get<BreakpointTable>(fn.kind).points) pts.push_back({p, m});
    out["breakpoints"] = pts;
  }
  return out;
}

}  // namespace

const char* to_string(Method m) {
  switch (m) {
    case Method::Nmc: return "nmc";
    case Method::Mm: return "mm";
    case Method::Both: return "both";
  }
  return "?";
}

SizeRange StudyConfig::effective_size_range() const {
  if (size_range) return *size_range;
  int lo = design.n, hi = design.n;
  for (int n : n_grid) {
    lo = std::min(lo, n);
    hi = std::max(hi, n);
  }
  if (hi == lo) {
    lo = std::max(1, lo / 2);
    hi = 2 * hi;
  }
  return {lo, hi};
}

void RunConfig::validate() const {
  try {
    fixed.validate();
  } catch (const DomainError& e) {
    throw ConfigError("model.fixed", e.what());
  }
  try {
    prior.validate();
  } catch (const DomainError& e) {
    throw ConfigError("model.prior", e.what());
  }
  if (studies.empty()) throw ConfigError("studies", "at least one study is required");
  for (std::size_t i = 0; i < studies.size(); ++i) {
    const std::string field = "studies[" + std::to_string(i) + "]";
    try {
      studies[i].design.validate();
    } catch (const DomainError& e) {
      throw ConfigError(field, e.what());
    }
    if (!studies[i].n_grid.empty() || studies[i].size_range) {
      const SizeRange r = studies[i].effective_size_range();
      if (r.min < 1 || r.max <= r.min) throw ConfigError(field + ".size_range", "needs 1 <= min < max");
      for (int n : studies[i].n_grid)
        if (n < r.min || n > r.max)
          throw ConfigError(field + ".n_grid", "values must lie inside size_range");
    }
  }
  if (psa_size < 2) throw ConfigError("psa_size", "must be at least 2");
  if (S < 2) throw ConfigError("S", "must be at least 2");
  if (R < 2) throw ConfigError("R", "must be at least 2");
  if (Q < 5) throw ConfigError("Q", "must be at least 5");
  try {
    market.validate();
  } catch (const DomainError& e) {
    throw ConfigError("market_share", e.what());
  }
  if (market.target > 1) throw ConfigError("market_share.target", "must be 0 or 1");
  try {
    current_shares.validate(2);
  } catch (const DomainError& e) {
    throw ConfigError("current_shares", e.what());
  }
  if (mcmc.adaptation < 2 || mcmc.burn_in < 0 || mcmc.thin < 1)
    throw ConfigError("mcmc", "needs adaptation >= 2, burn_in >= 0, thin >= 1");
  if (output_dir.empty()) throw ConfigError("output_dir", "must not be empty");
}

RunConfig case_study_config() {
  RunConfig c;
  c.studies = {
      {"side_effects", StudyDesign::side_effects(60), {}, std::nullopt},
      {"quality_of_life", StudyDesign::quality_of_life(100), {}, std::nullopt},
      {"effectiveness_rct", StudyDesign::effectiveness_rct(200), {}, std::nullopt},
  };
  return c;
}

RunConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  reject_unknown(doc, "",
                 {"model", "studies", "method", "psa_size", "S", "R", "Q", "n_grid", "seed",
                  "market_share", "current_shares", "mcmc", "output_dir", "threads",
                  "record_timing"});
  RunConfig c = case_study_config();

  if (const json* model = find(doc, "model")) {
    require_object(*model, "model");
    reject_unknown(*model, "model", {"fixed", "prior"});
    if (const json* f = find(*model, "fixed")) {
      const std::string w = "model.fixed";
      require_object(*f, w);
      reject_unknown(*f, w,
                     {"life_years", "event_cost", "treatment_cost", "side_effect_cost",
                      "side_effect_qaly_loss", "willingness_to_pay"});
      c.fixed.life_years = read_positive(*f, "life_years", w, c.fixed.life_years);
      c.fixed.event_cost = read_positive(*f, "event_cost", w, c.fixed.event_cost);
      c.fixed.treatment_cost = read_positive(*f, "treatment_cost", w, c.fixed.treatment_cost);
      c.fixed.side_effect_cost = read_positive(*f, "side_effect_cost", w, c.fixed.side_effect_cost);
      c.fixed.side_effect_qaly_loss =
          read_positive(*f, "side_effect_qaly_loss", w, c.fixed.side_effect_qaly_loss);
      c.fixed.willingness_to_pay =
          read_positive(*f, "willingness_to_pay", w, c.fixed.willingness_to_pay);
    }
    if (const json* p = find(*model, "prior")) {
      const std::string w = "model.prior";
      require_object(*p, w);
      reject_unknown(*p, w,
                     {"event_prob", "log_odds_ratio", "side_effect_prob", "logit_event_quality"});
      c.prior.event_prob = read_beta(*p, "event_prob", w, c.prior.event_prob);
      c.prior.log_odds_ratio = read_normal(*p, "log_odds_ratio", w, c.prior.log_odds_ratio);
      c.prior.side_effect_prob = read_beta(*p, "side_effect_prob", w, c.prior.side_effect_prob);
      c.prior.logit_event_quality =
          read_normal(*p, "logit_event_quality", w, c.prior.logit_event_quality);
    }
  }

  if (const json* studies = find(doc, "studies")) {
    if (!studies->is_array()) throw ConfigError("studies", "expected an array");
    c.studies.clear();
    for (std::size_t i = 0; i < studies->size(); ++i)
      c.studies.push_back(read_study((*studies)[i], "studies[" + std::to_string(i) + "]"));
  }
  if (const json* grid = find(doc, "n_grid")) {
    const auto sizes = read_sizes(*grid, "n_grid");
    for (auto& s : c.studies)
      if (s.n_grid.empty()) s.n_grid = sizes;
  }

  if (const json* m = find(doc, "method")) {
    if (!m->is_string()) throw ConfigError("method", "expected a string");
    const std::string name = m->get<std::string>();
    if (name == "nmc") c.method = Method::Nmc;
    else if (name == "mm") c.method = Method::Mm;
    else if (name == "both") c.method = Method::Both;
    else throw ConfigError("method", "must be one of nmc, mm, both (got '" + name + "')");
  }
  c.psa_size = read_count(doc, "psa_size", "", c.psa_size);
  c.S = read_count(doc, "S", "", c.S);
  c.R = read_count(doc, "R", "", c.R);
  c.Q = read_count(doc, "Q", "", c.Q);
  if (const json* seed = find(doc, "seed")) {
    if (!seed->is_number_unsigned() && !(seed->is_number_integer() && seed->get<std::int64_t>() >= 0))
      throw ConfigError("seed", "expected a nonnegative integer");
    c.seed = seed->get<std::uint64_t>();
  }
  if (const json* m = find(doc, "market_share")) c.market = read_market(*m, "market_share");
  if (const json* s = find(doc, "current_shares")) {
    if (!s->is_array()) throw ConfigError("current_shares", "expected an array of numbers");
    c.current_shares.m.clear();
    for (const auto& v : *s) {
      if (!v.is_number()) throw ConfigError("current_shares", "expected an array of numbers");
      c.current_shares.m.push_back(v.get<double>());
    }
  }
  if (const json* m = find(doc, "mcmc")) {
    require_object(*m, "mcmc");
    reject_unknown(*m, "mcmc", {"adaptation", "burn_in", "thin", "min_acceptance", "max_acceptance"});
    c.mcmc.adaptation = static_cast<int>(read_count(*m, "adaptation", "mcmc", 1000, 2));
    c.mcmc.burn_in = static_cast<int>(read_count(*m, "burn_in", "mcmc", 1000, 0));
    c.mcmc.thin = static_cast<int>(read_count(*m, "thin", "mcmc", 5, 1));
    c.mcmc.min_acceptance = read_number(*m, "min_acceptance", "mcmc", 0.05);
    c.mcmc.max_acceptance = read_number(*m, "max_acceptance", "mcmc", 0.95);
  }
  if (const json* o = find(doc, "output_dir")) {
    if (!o->is_string()) throw ConfigError("output_dir", "expected a string");
    c.output_dir = o->get<std::string>();
  }
  c.threads = static_cast<unsigned>(read_count(doc, "threads", "", 0, 0));
  if (const json* t = find(doc, "record_timing")) {
    if (!t->is_boolean()) throw ConfigError("record_timing", "expected true or false");
    c.record_timing = t->get<bool>();
  }
  c.validate();
  return c;
}

json to_json(const RunConfig& c) {
  json doc;
  doc["model"]["fixed"] = {{"life_years", c.fixed.life_years},
                           {"event_cost", c.fixed.event_cost},
                           {"treatment_cost", c.fixed.treatment_cost},
                           {"side_effect_cost", c.fixed.side_effect_cost},
                           {"side_effect_qaly_loss", c.fixed.side_effect_qaly_loss},
                           {"willingness_to_pay", c.fixed.willingness_to_pay}};
  auto beta = [](const BetaPrior& b) { return json{{"alpha", b.alpha}, {"beta", b.beta}}; };
  auto normal = [](const NormalPrior& n) { return json{{"mean", n.mean}, {"variance", n.variance}}; };
  doc["model"]["prior"] = {{"event_prob", beta(c.prior.event_prob)},
                           {"log_odds_ratio", normal(c.prior.log_odds_ratio)},
                           {"side_effect_prob", beta(c.prior.side_effect_prob)},
                           {"logit_event_quality", normal(c.prior.logit_event_quality)}};
  json studies = json::array();
  for (const auto& s : c.studies) {
    json st = {{"name", s.name},
               {"kind", to_string(s.design.kind)},
               {"n", s.design.n},
               {"outcome_variance", s.design.outcome_variance}};
    if (!s.n_grid.empty()) st["n_grid"] = s.n_grid;
    if (s.size_range) st["size_range"] = {s.size_range->min, s.size_range->max};
    studies.push_back(st);
  }
  doc["studies"] = studies;
  doc["method"] = to_string(c.method);
  doc["psa_size"] = c.psa_size;
  doc["S"] = c.S;
  doc["R"] = c.R;
  doc["Q"] = c.Q;
  doc["seed"] = c.seed;
  doc["market_share"] = market_to_json(c.market);
  doc["current_shares"] = c.current_shares.m;
  doc["mcmc"] = {{"adaptation", c.mcmc.adaptation},
                 {"burn_in", c.mcmc.burn_in},
                 {"thin", c.mcmc.thin},
                 {"min_acceptance", c.mcmc.min_acceptance},
                 {"max_acceptance", c.mcmc.max_acceptance}};
  doc["output_dir"] = c.output_dir;
  doc["threads"] = c.threads;
  doc["record_timing"] = c.record_timing;
  return doc;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path.string() + "'");
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("", std::string("malformed JSON in '") + path.string() + "': " + e.what());
  }
  return config_from_json(doc);
}

std::string config_hash(const RunConfig& config) {
  // Threads and output location do not affect results.
  json canonical = to_json(config);
  canonical.erase("threads");
  canonical.erase("output_dir");
  const std::string text = canonical.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace voi
