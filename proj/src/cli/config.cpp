#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "levy_optstop/cli.hpp"

namespace levy_optstop::cli {

namespace {

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "model.family",       "model.sigma",         "model.mu",
      "model.martingale",   "model.q",             "model.delta",
      "model.lambda",       "model.rho",           "model.jump_sign",
      "contract.kind",      "contract.strike",     "contract.spot",
      "contract.spot_min",  "contract.spot_max",   "contract.spot_points",
      "swing.n_rights",     "swing.refraction",    "swing.refraction_parameter",
      "swing.mc_paths",     "swing.seed",          "swing.grid_points",
      "swing.batches",      "mc.paths",            "mc.dt",
      "mc.horizon",         "mc.seed",             "mc.change_of_measure",
      "mc.validate_triples", "output.format",      "output.path",
  };
  return keys;
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void fail(const std::string& what) { throw Error(ErrorKind::Config, what); }

void check_key(const std::string& key) {
  if (!known_keys().count(key)) fail("unknown config key '" + key + "'");
}

const std::string* find(const KeyValues& kv, const std::string& key) {
  const auto it = kv.find(key);
  return it == kv.end() ? nullptr : &it->second;
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size() || !std::isfinite(out)) {
    fail(key + " must be a finite number, got '" + v + "'");
  }
  return out;
}

std::int64_t to_int(const std::string& key, const std::string& v) {
  std::int64_t out = 0;
  const auto r = std::from_chars(v.data(), v.data() + v.size(), out);
  if (r.ec != std::errc() || r.ptr != v.data() + v.size()) {
    fail(key + " must be an integer, got '" + v + "'");
  }
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(key + " must be true or false, got '" + v + "'");
}

double need_double(const KeyValues& kv, const std::string& key) {
  const std::string* v = find(kv, key);
  if (!v) fail("missing required key " + key);
  return to_double(key, *v);
}

double get_double(const KeyValues& kv, const std::string& key, double fallback) {
  const std::string* v = find(kv, key);
  return v ? to_double(key, *v) : fallback;
}

std::int64_t get_int(const KeyValues& kv, const std::string& key, std::int64_t fallback) {
  const std::string* v = find(kv, key);
  return v ? to_int(key, *v) : fallback;
}

std::string get_string(const KeyValues& kv, const std::string& key, const std::string& fallback) {
  const std::string* v = find(kv, key);
  return v ? *v : fallback;
}

// Library validation failures inside the config are config errors.
template <class F>
auto as_config_error(F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::InvalidParameter) fail(e.what());
    throw;
  }
}

}  // namespace

KeyValues parse_config(std::string_view text) {
  KeyValues out;
  std::string section;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cut = raw.find_first_of("#;");
    const std::string line = trim(cut == std::string::npos ? raw : raw.substr(0, cut));
    if (line.empty()) continue;
    const std::string where = "config line " + std::to_string(line_no);
    if (line.front() == '[') {
      if (line.back() != ']') fail(where + ": unterminated section header");
      section = trim(std::string_view(line).substr(1, line.size() - 2));
      if (section.empty()) fail(where + ": empty section name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(where + ": expected key = value");
    if (section.empty()) fail(where + ": key outside any section");
    const std::string key = section + "." + trim(std::string_view(line).substr(0, eq));
    check_key(key);
    out[key] = trim(std::string_view(line).substr(eq + 1));
  }
  return out;
}

KeyValues load_config(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) fail("cannot read config file " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

void merge_overrides(KeyValues& base, const KeyValues& overrides) {
  for (const auto& [k, v] : overrides) {
    check_key(k);
    base[k] = v;
  }
}

std::vector<double> SpotSweep::spots() const {
  std::vector<double> out(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    out[static_cast<std::size_t>(i)] =
        i == points - 1 ? max : min + (max - min) * i / (points - 1);
  }
  return out;
}

RunConfig build_run_config(const KeyValues& kv) {
  for (const auto& [k, v] : kv) check_key(k);
  RunConfig cfg;

  const std::string family = get_string(kv, "model.family", "");
  Family fam;
  if (family == "black_scholes" || family == "bs") {
    fam = Family::BlackScholes;
  } else if (family == "exp_jump_diffusion" || family == "jd") {
    fam = Family::ExpJumpDiffusion;
  } else {
    fail("model.family must be black_scholes or exp_jump_diffusion, got '" + family + "'");
  }
  const double sigma = need_double(kv, "model.sigma");
  const double q = need_double(kv, "model.q");
  const double delta = get_double(kv, "model.delta", 0.0);
  const std::string sign_s = get_string(kv, "model.jump_sign", "negative");
  JumpSign sign;
  if (sign_s == "negative") {
    sign = JumpSign::SpectrallyNegative;
  } else if (sign_s == "positive") {
    sign = JumpSign::SpectrallyPositive;
  } else {
    fail("model.jump_sign must be negative or positive, got '" + sign_s + "'");
  }
  double lambda = 0.0, rho = 1.0;
  if (fam == Family::ExpJumpDiffusion) {
    lambda = need_double(kv, "model.lambda");
    rho = need_double(kv, "model.rho");
  } else if (find(kv, "model.lambda") || find(kv, "model.rho")) {
    fail("model.lambda and model.rho apply to exp_jump_diffusion only");
  }
  const std::string* mu_s = find(kv, "model.mu");
  const std::string* mart_s = find(kv, "model.martingale");
  const bool martingale = mart_s && to_bool("model.martingale", *mart_s);
  if (!mu_s && !martingale) fail("model needs either mu or martingale = true");
  cfg.explicit_mu = mu_s != nullptr;
  const double mu = as_config_error([&] {
    return mu_s ? to_double("model.mu", *mu_s)
                : implied_drift(fam, sigma, lambda, rho, q, delta, sign);
  });
  cfg.model = as_config_error([&] {
    return fam == Family::BlackScholes
               ? LevyModel::black_scholes(mu, sigma)
               : LevyModel::exp_jump_diffusion(mu, sigma, lambda, rho, sign);
  });

  const std::string kind = get_string(kv, "contract.kind", "put");
  if (kind == "put") {
    cfg.contract.kind = OptionKind::Put;
  } else if (kind == "call") {
    cfg.contract.kind = OptionKind::Call;
  } else {
    fail("contract.kind must be put or call, got '" + kind + "'");
  }
  cfg.contract.strike = need_double(kv, "contract.strike");
  cfg.contract.q = q;
  cfg.contract.delta = delta;
  cfg.contract.spot = get_double(kv, "contract.spot", cfg.contract.strike);
  as_config_error([&] {
    cfg.contract.validate();
    return 0;
  });
  const bool any_sweep = find(kv, "contract.spot_min") || find(kv, "contract.spot_max") ||
                         find(kv, "contract.spot_points");
  if (any_sweep) {
    SpotSweep sw;
    sw.min = need_double(kv, "contract.spot_min");
    sw.max = need_double(kv, "contract.spot_max");
    sw.points = static_cast<int>(get_int(kv, "contract.spot_points", 300));
    if (!(sw.min > 0.0 && sw.max > sw.min && sw.points >= 2)) {
      fail("spot sweep needs 0 < spot_min < spot_max and spot_points >= 2");
    }
    cfg.sweep = sw;
  }

  const bool any_swing = std::any_of(kv.begin(), kv.end(), [](const auto& p) {
    return p.first.rfind("swing.", 0) == 0;
  });
  if (any_swing) {
    SwingSpec s;
    s.n_rights = static_cast<int>(get_int(kv, "swing.n_rights", 1));
    const std::string r = get_string(kv, "swing.refraction", "deterministic");
    const double par = get_double(kv, "swing.refraction_parameter", 0.5);
    if (r == "deterministic") {
      s.refraction = Refraction::deterministic(par);
    } else if (r == "exponential") {
      s.refraction = Refraction::exponential(par);
    } else {
      fail("swing.refraction must be deterministic or exponential, got '" + r + "'");
    }
    s.mc_paths = get_int(kv, "swing.mc_paths", 10000);
    s.seed = static_cast<std::uint64_t>(get_int(kv, "swing.seed", 20240601));
    s.batches = static_cast<int>(get_int(kv, "swing.batches", 8));
    if (const std::string* g = find(kv, "swing.grid_points")) {
      s.grid = LogGrid::covering(cfg.contract.log_strike(),
                                 static_cast<int>(to_int("swing.grid_points", *g)));
    }
    as_config_error([&] {
      s.validate(cfg.contract);
      return 0;
    });
    cfg.swing = s;
  }

  cfg.mc.paths = get_int(kv, "mc.paths", cfg.mc.paths);
  cfg.mc.dt = get_double(kv, "mc.dt", cfg.mc.dt);
  cfg.mc.horizon = get_double(kv, "mc.horizon", cfg.mc.horizon);
  cfg.mc.seed = static_cast<std::uint64_t>(get_int(kv, "mc.seed", static_cast<std::int64_t>(cfg.mc.seed)));
  if (const std::string* c = find(kv, "mc.change_of_measure")) {
    cfg.mc.change_of_measure = to_bool("mc.change_of_measure", *c);
  }
  cfg.validate_triples = static_cast<int>(get_int(kv, "mc.validate_triples", 3));
  if (cfg.validate_triples < 0) fail("mc.validate_triples must be >= 0");
  as_config_error([&] {
    cfg.mc.validate();
    return 0;
  });

  if (const std::string* f = find(kv, "output.format")) {
    if (*f == "json") {
      cfg.format = Format::Json;
    } else if (*f == "csv") {
      cfg.format = Format::Csv;
    } else if (*f == "table") {
      cfg.format = Format::Table;
    } else {
      fail("output.format must be json, csv or table, got '" + *f + "'");
    }
  }
  if (const std::string* p = find(kv, "output.path")) cfg.out_path = *p;
  return cfg;
}

}  // namespace levy_optstop::cli
