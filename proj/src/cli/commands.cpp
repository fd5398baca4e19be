#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <limits>
#include <memory>
#include <random>
#include <sstream>

#include <json.hpp>

#include "levy_optstop/cli.hpp"
#include "levy_optstop/scale.hpp"
#include "levy_optstop/symmetry.hpp"

namespace levy_optstop::cli {

namespace {

using nlohmann::json;

double round12(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  double out = v;
  std::from_chars(buf, r.ptr, out);
  return out;
}

json num(double v) { return std::isfinite(v) ? json(round12(v)) : json(nullptr); }
json num(const std::optional<double>& v) { return v ? num(*v) : json(nullptr); }

std::string cell(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// Two-column aligned table.
std::string table(const std::vector<std::pair<std::string, std::string>>& rows) {
  std::size_t w = 0;
  for (const auto& r : rows) w = std::max(w, r.first.size());
  std::string out;
  for (const auto& [k, v] : rows) out += k + std::string(w + 2 - k.size(), ' ') + v + "\n";
  return out;
}

std::string opt_text(const std::optional<double>& v) { return v ? format_number(*v) : "null"; }

std::optional<double> asset(const std::optional<double>& x) {
  if (!x) return std::nullopt;
  return std::exp(*x);
}

// A contract reduced to the put problem that is actually solved: the
// configured model for a put, the dual market for a call.
struct Priced {
  LevyModel put_model;
  OptionSpec put_spec;
  ValuationResult put_result;
  ValuationResult result;  // in the contract's own terms
  std::function<double(double)> value;  // V(s)
  std::function<bool(double)> stop;
};

bool inside(const ContinuationRegion& r, double x, bool call) {
  switch (r.regime) {
    case Regime::NoEarlyExercise:
      return false;
    case Regime::SingleHalfLine:
      return call ? x >= *r.l_star : x <= *r.u_star;
    case Regime::DoubleRegion:
    case Regime::DegeneratePoint:
      return x >= *r.l_star && x <= *r.u_star;
  }
  return false;
}

Priced price_contract(const RunConfig& cfg) {
  Priced p;
  const OptionSpec& c = cfg.contract;
  if (c.kind == OptionKind::Put) {
    p.put_model = cfg.model;
    p.put_spec = c;
    p.put_result = price_put(cfg.model, c);
    p.result = p.put_result;
    const ContinuationRegion reg = p.result.region;
    const bool none = reg.regime == Regime::NoEarlyExercise;
    const auto pv = std::make_shared<PutValuer>(cfg.model, c);
    p.value = [pv, reg, none](double s) {
      if (none) return std::numeric_limits<double>::quiet_NaN();
      return pv->value(reg.l_star.value_or(kNoLower), *reg.u_star, std::log(s));
    };
    p.stop = [reg](double s) { return inside(reg, std::log(s), false); };
    return p;
  }
  // V_call(s; K) = s V_put^dual(K / s; 1): one dual put at unit strike
  // serves every spot.
  const DualModel dual = dual_model(cfg.model, c.q, c.delta);
  OptionSpec unit = c;
  unit.spot = 1.0;
  p.put_model = dual.model;
  p.put_spec = dual_put_spec(unit);
  p.put_result = price_put(dual.model, p.put_spec);
  p.result = price_call(cfg.model, c);
  const ContinuationRegion preg = p.put_result.region;
  const ContinuationRegion creg = call_boundaries(preg, 1.0, c.strike);
  const bool none = preg.regime == Regime::NoEarlyExercise;
  const auto pv = std::make_shared<PutValuer>(dual.model, p.put_spec);
  const double k = c.strike;
  p.value = [pv, preg, none, k](double s) {
    if (none) return std::numeric_limits<double>::quiet_NaN();
    return s * pv->value(preg.l_star.value_or(kNoLower), *preg.u_star, std::log(k / s));
  };
  p.stop = [creg](double s) { return inside(creg, std::log(s), true); };
  return p;
}

std::string_view kind_label(OptionKind k) { return k == OptionKind::Put ? "put" : "call"; }

struct Check {
  std::string name;
  double value = 0.0;
  double tolerance = 0.0;
  bool pass = false;
  std::string detail;
};

Check check_le(std::string name, double value, double tol, std::string detail = {}) {
  return {std::move(name), value, tol, value <= tol, std::move(detail)};
}

double corrupt_shift() {
  const char* e = std::getenv("LEVY_OPTSTOP_CORRUPT_BOUNDARY");
  if (!e || !*e) return 0.0;
  char* end = nullptr;
  const double v = std::strtod(e, &end);
  return end && *end == '\0' && std::isfinite(v) ? v : 0.0;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, round12(v));
  return std::string(buf, r.ptr);
}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::FinitenessViolation: return kExitFiniteness;
    case ErrorKind::OptimizerFailure: return kExitOptimizer;
    default: return kExitConfig;
  }
}

CommandResult cmd_price(const RunConfig& cfg) {
  const Priced p = price_contract(cfg);
  const ValuationResult& r = p.result;
  CommandResult out;
  const Format f = cfg.format.value_or(Format::Json);
  if (f == Format::Json) {
    json j;
    j["price"] = num(r.price);
    j["regime"] = std::string(regime_label(r.region.regime));
    j["l_star"] = num(r.region.l_star);
    j["u_star"] = num(r.region.u_star);
    j["l_star_asset"] = num(asset(r.region.l_star));
    j["u_star_asset"] = num(asset(r.region.u_star));
    j["phi_q"] = num(r.phi_q);
    j["residuals"] = {{"l", num(r.smooth_fit_residual_l)}, {"u", num(r.smooth_fit_residual_u)}};
    json d = json::object();
    for (const auto& [k, v] : r.diagnostics) d[k] = num(v);
    d["kind"] = std::string(kind_label(cfg.contract.kind));
    d["spot"] = num(cfg.contract.spot);
    d["strike"] = num(cfg.contract.strike);
    d["mu"] = num(cfg.model.mu);
    d["explicit_mu"] = cfg.explicit_mu;
    j["diagnostics"] = d;
    out.output = dump(j);
  } else if (f == Format::Csv) {
    out.output =
        "price,regime,l_star,u_star,l_star_asset,u_star_asset,phi_q,residual_l,residual_u\n" +
        cell(r.price) + "," + std::string(regime_label(r.region.regime)) + "," +
        cell(r.region.l_star) + "," + cell(r.region.u_star) + "," + cell(asset(r.region.l_star)) +
        "," + cell(asset(r.region.u_star)) + "," + cell(r.phi_q) + "," +
        cell(r.smooth_fit_residual_l) + "," + cell(r.smooth_fit_residual_u) + "\n";
  } else {
    out.output = table({{"kind", std::string(kind_label(cfg.contract.kind))},
                        {"price", opt_text(r.price)},
                        {"regime", std::string(regime_label(r.region.regime))},
                        {"l_star", opt_text(r.region.l_star)},
                        {"u_star", opt_text(r.region.u_star)},
                        {"l_star_asset", opt_text(asset(r.region.l_star))},
                        {"u_star_asset", opt_text(asset(r.region.u_star))},
                        {"phi_q", opt_text(r.phi_q)},
                        {"residual_l", opt_text(r.smooth_fit_residual_l)},
                        {"residual_u", opt_text(r.smooth_fit_residual_u)}});
  }
  if (r.region.regime == Regime::NoEarlyExercise) {
    out.message = "no early exercise region: no entrance rule attains the value";
  }
  return out;
}

CommandResult cmd_sweep(const RunConfig& cfg) {
  if (!cfg.sweep) {
    throw Error(ErrorKind::Config, "sweep needs contract.spot_min, spot_max and spot_points");
  }
  const Priced p = price_contract(cfg);
  const std::vector<double> spots = cfg.sweep->spots();
  CommandResult out;
  const Format f = cfg.format.value_or(Format::Csv);
  if (f == Format::Json) {
    json rows = json::array();
    for (double s : spots) {
      rows.push_back({{"spot", num(s)},
                      {"intrinsic", num(cfg.contract.intrinsic(s))},
                      {"value", num(p.value(s))},
                      {"in_stopping_region", p.stop(s) ? 1 : 0}});
    }
    json j;
    j["regime"] = std::string(regime_label(p.result.region.regime));
    j["rows"] = rows;
    out.output = dump(j);
  } else {
    const char sep = f == Format::Csv ? ',' : ' ';
    std::string s = std::string("spot") + sep + "intrinsic" + sep + "value" + sep +
                    "in_stopping_region\n";
    for (double x : spots) {
      s += format_number(x) + sep + format_number(cfg.contract.intrinsic(x)) + sep +
           format_number(p.value(x)) + sep + (p.stop(x) ? "1" : "0") + "\n";
    }
    out.output = s;
  }
  if (p.result.region.regime == Regime::NoEarlyExercise) {
    out.message = "no early exercise region: value column is nan";
  }
  return out;
}

CommandResult cmd_swing(const RunConfig& cfg) {
  if (!cfg.swing) throw Error(ErrorKind::Config, "swing needs a [swing] section");
  if (cfg.contract.kind != OptionKind::Put) {
    throw Error(ErrorKind::Config, "swing valuation is defined for put contracts only");
  }
  const SwingResult r = solve_swing(cfg.model, cfg.contract, *cfg.swing);
  CommandResult out;
  const double s = cfg.contract.spot;
  bool warn = false;
  for (const auto& lv : r.levels) {
    if (lv.payoff.escape_warning) {
      warn = true;
      out.message += "level " + std::to_string(lv.k) + ": " +
                     format_number(100.0 * lv.payoff.escape_fraction) +
                     "% of refraction samples left the grid\n";
    }
    if (lv.solution.edge_optimum) {
      out.message += "level " + std::to_string(lv.k) +
                     ": optimum at the search box edge; the supremum may only be approached\n";
    }
  }
  const Format f = cfg.format.value_or(Format::Json);
  if (f == Format::Json) {
    json levels = json::array();
    for (const auto& lv : r.levels) {
      levels.push_back({{"k", lv.k},
                        {"l_star", num(lv.solution.l_star)},
                        {"u_star", num(lv.solution.u_star)},
                        {"l_star_asset", num(asset(lv.solution.l_star))},
                        {"u_star_asset", num(asset(lv.solution.u_star))},
                        {"se_l", num(lv.se_l)},
                        {"se_u", num(lv.se_u)},
                        {"value_at_spot", num(r.value(lv.k, s))},
                        {"escape_fraction", num(lv.payoff.escape_fraction)},
                        {"edge_optimum", lv.solution.edge_optimum}});
    }
    json j;
    j["regime"] = std::string(regime_label(r.regime));
    j["n_rights"] = cfg.swing->n_rights;
    j["spot"] = num(s);
    j["value"] = num(r.value(static_cast<int>(r.levels.size()), s));
    j["levels"] = levels;
    j["escape_warning"] = warn;
    out.output = dump(j);
  } else {
    const char sep = f == Format::Csv ? ',' : ' ';
    std::string t = std::string("k") + sep + "l_star" + sep + "u_star" + sep + "se_l" + sep +
                    "se_u" + sep + "value_at_spot\n";
    for (const auto& lv : r.levels) {
      t += std::to_string(lv.k) + sep + cell(lv.solution.l_star) + sep +
           cell(lv.solution.u_star) + sep + format_number(lv.se_l) + sep +
           format_number(lv.se_u) + sep + format_number(r.value(lv.k, s)) + "\n";
    }
    out.output = t;
  }
  return out;
}

CommandResult cmd_classify(const RunConfig& cfg) {
  const Regime reg = classify_region(cfg.model, cfg.contract);
  const std::optional<double> phi = phi_right_inverse(cfg.model, cfg.contract.q);
  CommandResult out;
  const Format f = cfg.format.value_or(Format::Json);
  const std::string kind(kind_label(cfg.contract.kind));
  if (f == Format::Json) {
    json j;
    j["kind"] = kind;
    j["regime"] = std::string(regime_label(reg));
    j["phi_q"] = num(phi);
    j["mean_increment"] = num(mean_increment(cfg.model));
    out.output = dump(j);
  } else if (f == Format::Csv) {
    out.output = "kind,regime,phi_q,mean_increment\n" + kind + "," +
                 std::string(regime_label(reg)) + "," + cell(phi) + "," +
                 format_number(mean_increment(cfg.model)) + "\n";
  } else {
    out.output = table({{"kind", kind},
                        {"regime", std::string(regime_label(reg))},
                        {"phi_q", opt_text(phi)},
                        {"mean_increment", format_number(mean_increment(cfg.model))}});
  }
  return out;
}

CommandResult cmd_validate(const RunConfig& cfg) {
  const Priced p = price_contract(cfg);
  const LevyModel& pm = p.put_model;
  const OptionSpec& ps = p.put_spec;
  const ContinuationRegion& pr = p.put_result.region;
  const bool none = pr.regime == Regime::NoEarlyExercise;
  std::vector<Check> checks;
  std::vector<std::string> skipped;

  if (const auto phi = phi_right_inverse(pm, ps.q)) {
    double worst = 0.0;
    for (double d : {0.25, 0.5, 1.0, 2.5, 5.0}) {
      worst = std::max(worst, laplace_identity_residual(pm, ps.q, *phi + d));
    }
    checks.push_back(check_le("laplace_identity", worst, 1e-8, "5 points right of Phi(q)"));
  } else {
    skipped.push_back("laplace_identity (no Phi(q))");
  }
  if (const auto it = p.put_result.diagnostics.find("root_residual");
      it != p.put_result.diagnostics.end()) {
    checks.push_back(check_le("root_residual", it->second, 1e-10, "|psi(theta) - q|"));
  } else {
    skipped.push_back("root_residual (no roots)");
  }

  if (!none) {
    const double k = cfg.contract.strike;
    const int n = 200;
    std::vector<double> s(n), v(n);
    for (int i = 0; i < n; ++i) {
      s[i] = 0.05 * k + (2.0 * k - 0.05 * k) * i / (n - 1);
      v[i] = p.value(s[i]);
    }
    double dom = 0.0, mono = 0.0, conv = 0.0;
    const bool put = cfg.contract.kind == OptionKind::Put;
    for (int i = 0; i < n; ++i) {
      dom = std::max(dom, cfg.contract.intrinsic(s[i]) - v[i]);
      if (i > 0) mono = std::max(mono, put ? v[i] - v[i - 1] : v[i - 1] - v[i]);
      if (i > 0 && i + 1 < n) conv = std::max(conv, -(v[i - 1] - 2.0 * v[i] + v[i + 1]));
    }
    checks.push_back(check_le("dominance", dom, 1e-12, "max (intrinsic - V) on 200 spots"));
    checks.push_back(check_le("monotonicity", mono, 1e-12, "max wrong-way step"));
    checks.push_back(check_le("convexity", conv, 1e-9, "max negative second difference"));

    ContinuationRegion fit = pr;
    const double shift = corrupt_shift();
    if (fit.u_star) *fit.u_star += shift;
    if (fit.l_star) *fit.l_star += shift;
    const PutValuer pv(pm, ps);
    double smooth = 0.0;
    const double l = fit.l_star.value_or(kNoLower), u = *fit.u_star;
    if (u < ps.log_strike()) {
      const auto du = pv.derivative(l, u, u);
      smooth = std::abs(du.first - du.second);
      if (std::isfinite(l)) {
        const auto dl = pv.derivative(l, u, l);
        smooth = std::max(smooth, std::abs(dl.first - dl.second));
      }
    } else {
      smooth = std::numeric_limits<double>::infinity();
    }
    checks.push_back(check_le("smooth_fit", smooth, 1e-6,
                              shift != 0.0 ? "boundaries shifted by LEVY_OPTSTOP_CORRUPT_BOUNDARY"
                                           : "one-sided derivative gaps"));
    const auto gap = continuous_fit_gap(pm, ps, pr);
    checks.push_back(check_le("continuous_fit", std::max(gap.first, gap.second), 1e-12,
                              "value gaps at the boundaries"));
  } else {
    skipped.push_back("value-function and fit checks (no early exercise region)");
  }

  if (cfg.validate_triples > 0) {
    std::mt19937_64 rng(cfg.mc.seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double lk = ps.log_strike();
    double worst_z = 0.0, worst_trunc = 0.0;
    bool bias = false;
    for (int t = 0; t < cfg.validate_triples; ++t) {
      const double l = lk - 2.0 + 1.2 * u01(rng);
      const double u = l + (lk - 0.05 - l) * u01(rng);
      const double x = u01(rng) < 0.5 ? l - 1.5 * u01(rng) - 0.01 : u + 1.5 * u01(rng) + 0.01;
      McConfig mc = cfg.mc;
      mc.stream = static_cast<std::uint64_t>(t);
      const McEstimate e = mc_entrance_value(pm, l, u, x, put_payoff(ps.strike), ps.q, mc);
      const double a = put_entrance_value(pm, ps, l, u, x);
      worst_z = std::max(worst_z, std::abs(e.mean - a) / std::max(e.std_error, 1e-300));
      worst_trunc = std::max(worst_trunc, e.truncation_bound / std::max(e.std_error, 1e-300));
      bias = bias || e.bias_warning;
    }
    checks.push_back(check_le("mc_agreement", worst_z, 3.0,
                              std::to_string(cfg.validate_triples) + " random (x, l, u), |z| max"));
    Check tr{"mc_truncation", worst_trunc, 1.0, worst_trunc < 1.0 && !bias,
             "truncation_bound / std_error max"};
    checks.push_back(tr);
  } else {
    skipped.push_back("mc_agreement (mc.validate_triples = 0)");
  }

  {
    const DualModel dual = dual_model(cfg.model, cfg.contract.q, cfg.contract.delta);
    const LevyModel& m = cfg.model;
    const double p1 = laplace_exponent(m, 1.0);
    double worst = 0.0;
    for (double phi : {-0.5, 0.0, 0.25, 0.5, 1.0, 1.5, 2.0}) {
      if (m.has_jumps() && !(phi > 1.1 - m.rho && phi < m.rho + 0.9)) continue;
      const double want = laplace_exponent(m, 1.0 - phi) - p1;
      const double got = laplace_exponent(dual.model, phi);
      worst = std::max(worst, std::abs(got - want) / std::max(1.0, std::abs(want)));
    }
    const DualModel back = dual_model(dual.model, dual.q_dual, dual.delta_dual);
    worst = std::max({worst, std::abs(back.model.mu - m.mu), std::abs(back.model.sigma - m.sigma),
                      std::abs(back.model.lambda - m.lambda), std::abs(back.model.rho - m.rho),
                      std::abs(back.q_dual - cfg.contract.q),
                      std::abs(back.delta_dual - cfg.contract.delta)});
    if (back.model.jump_sign != m.jump_sign) worst = std::numeric_limits<double>::infinity();
    checks.push_back(check_le("symmetry_round_trip", worst, 1e-12,
                              "dual exponent relation and involution"));
  }

  bool all = true;
  for (const auto& c : checks) all = all && c.pass;
  CommandResult out;
  out.exit_code = all ? kExitOk : kExitValidation;
  const Format f = cfg.format.value_or(Format::Table);
  if (f == Format::Json) {
    json arr = json::array();
    for (const auto& c : checks) {
      arr.push_back({{"name", c.name},
                     {"value", num(c.value)},
                     {"tolerance", num(c.tolerance)},
                     {"pass", c.pass},
                     {"detail", c.detail}});
    }
    json j;
    j["checks"] = arr;
    j["skipped"] = skipped;
    j["pass"] = all;
    out.output = dump(j);
  } else if (f == Format::Csv) {
    std::string t = "check,value,tolerance,pass\n";
    for (const auto& c : checks) {
      t += c.name + "," + format_number(c.value) + "," + format_number(c.tolerance) + "," +
           (c.pass ? "1" : "0") + "\n";
    }
    out.output = t;
  } else {
    std::size_t w = 0;
    for (const auto& c : checks) w = std::max(w, c.name.size());
    std::string t;
    for (const auto& c : checks) {
      t += std::string(c.pass ? "PASS  " : "FAIL  ") + c.name + std::string(w + 2 - c.name.size(), ' ') +
           format_number(c.value) + " (tol " + format_number(c.tolerance) + ")  " + c.detail + "\n";
    }
    for (const auto& sk : skipped) t += "SKIP  " + sk + "\n";
    t += all ? "all checks passed\n" : "validation failed\n";
    out.output = t;
  }
  return out;
}

CommandResult run_command(std::string_view command, const KeyValues& kv) {
  try {
    const RunConfig cfg = build_run_config(kv);
    if (command == "price") return cmd_price(cfg);
    if (command == "sweep") return cmd_sweep(cfg);
    if (command == "swing") return cmd_swing(cfg);
    if (command == "classify") return cmd_classify(cfg);
    if (command == "validate") return cmd_validate(cfg);
    return {kExitConfig, "", "unknown command '" + std::string(command) + "'"};
  } catch (const Error& e) {
    return {exit_code_for(e.kind()), "", e.what()};
  }
}

}  // namespace levy_optstop::cli
