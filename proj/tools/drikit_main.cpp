// drikit: batch driver around the dri library.  One JSON config in, one
// report.json (plus CSVs) out; exit codes encode the verdict so CI can gate
// on them: 0 verified/ok, 1 config or I/O error, 2 inconclusive, 3 diverges.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "dri/bounds.hpp"
#include "dri/convolution.hpp"
#include "dri/density.hpp"
#include "dri/grid.hpp"
#include "dri/renewal.hpp"
#include "dri/report.hpp"
#include "dri/riemann.hpp"

using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitInconclusive = 2;
constexpr int kExitDiverges = 3;

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config is not valid JSON: " + std::string(e.what()));
  }
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");
  return j;
}

// Unknown keys are rejected rather than ignored so that a typo cannot
// silently fall back to a default.
void check_keys(const json& obj, const std::string& where,
                const std::set<std::string>& allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw ConfigError("unknown config key \"" + it.key() + "\" in " + where);
  }
}

void validate_config(const json& cfg) {
  static const std::map<std::string, std::set<std::string>> allowed = {
      {"root", {"schema", "density", "dri", "conv", "chain", "renewal",
                "heavy", "local_clt", "simulate"}},
      {"density", {"family", "params", "epsilon", "csv"}},
      {"dri", {"window", "spacing", "ladder", "tolerance"}},
      {"conv", {"k", "window", "spacing"}},
      {"chain", {"n_max"}},
      {"renewal", {"N", "x_max", "h", "store_powers", "far", "defect_k"}},
      {"heavy", {"probes", "h", "N"}},
      {"local_clt", {"n_list"}},
      {"simulate", {"x", "delta", "paths"}},
  };
  check_keys(cfg, "the config root", allowed.at("root"));
  for (const auto& [section, keys] : allowed) {
    if (section == "root" || !cfg.contains(section)) continue;
    if (!cfg.at(section).is_object())
      throw ConfigError("config section \"" + section + "\" must be an object");
    check_keys(cfg.at(section), "\"" + section + "\"", keys);
  }
  if (cfg.contains("schema") && cfg.at("schema") != 1)
    throw ConfigError("unsupported config schema (expected 1)");
}

double jnum(const json& j, const char* where) {
  if (!j.is_number()) throw ConfigError(std::string(where) + " must be a number");
  return j.get<double>();
}

// Builds the density and echoes the fully resolved choice back into `out`.
dri::DensitySpec resolve_density(const json& cfg, const std::string& fallback,
                                 json& out) {
  json d = cfg.value("density", json::object());
  std::string family = d.value("family", fallback);
  std::vector<double> params;
  if (d.contains("params")) {
    if (!d.at("params").is_array()) throw ConfigError("density.params must be an array");
    for (const auto& v : d.at("params")) params.push_back(jnum(v, "density.params"));
  }
  auto want = [&](std::size_t n, std::initializer_list<double> defs) {
    if (params.empty()) params.assign(defs);
    if (params.size() != n)
      throw ConfigError("density.params for " + family + " needs " +
                        std::to_string(n) + " entries");
  };
  std::optional<double> eps;
  if (d.contains("epsilon")) eps = jnum(d.at("epsilon"), "density.epsilon");

  dri::DensitySpec spec = dri::DensitySpec::exponential(1.0);
  if (family == "exponential") {
    want(1, {1.0});
    spec = dri::DensitySpec::exponential(params[0]);
  } else if (family == "uniform") {
    want(2, {0.0, 1.0});
    spec = dri::DensitySpec::uniform(params[0], params[1]);
  } else if (family == "gamma") {
    want(2, {2.0, 1.0});
    spec = dri::DensitySpec::gamma(params[0], params[1]);
  } else if (family == "pareto") {
    want(2, {0.6, 1.0});
    spec = dri::DensitySpec::pareto(params[0], params[1], eps);
  } else if (family == "gaussian") {
    want(2, {0.0, 1.0});
    spec = dri::DensitySpec::gaussian(params[0], params[1]);
  } else if (family == "log_counterexample") {
    want(0, {});
    spec = dri::DensitySpec::log_counterexample();
  } else if (family == "sqrt_singular") {
    want(0, {});
    spec = dri::DensitySpec::sqrt_singular();
  } else if (family == "tabulated") {
    if (!d.contains("csv")) throw ConfigError("tabulated density needs density.csv");
    spec = dri::DensitySpec::tabulated_from_csv(d.at("csv").get<std::string>(), eps);
  } else {
    throw ConfigError("unknown density family \"" + family + "\"");
  }

  out["family"] = family;
  out["params"] = spec.params();
  if (spec.epsilon()) out["epsilon"] = *spec.epsilon();
  if (d.contains("csv")) out["csv"] = d.at("csv");
  return spec;
}

struct DriDefaults {
  double lo = 0.0, hi = 0.0, spacing = 0.0;
};

DriDefaults dri_defaults(const dri::DensitySpec& spec) {
  using dri::DensityKind;
  const auto& p = spec.params();
  switch (spec.kind()) {
    case DensityKind::log_counterexample:
      return {std::exp(1.0), 1e5, 1.0 / 512};
    case DensityKind::exponential:
      return {-1.0, 40.0 / p[0], 41.0 / p[0] / 16384};
    case DensityKind::gamma:
      return {-1.0, (40.0 + 8.0 * p[0]) / p[1], (41.0 + 8.0 * p[0]) / p[1] / 16384};
    case DensityKind::uniform:
      return {p[0] - 1.0, p[1] + 1.0, (p[1] - p[0]) / 2048};
    case DensityKind::pareto:
      return {-1.0, 1e4 * p[1], p[1] / 64};
    case DensityKind::sqrt_singular:
      return {-1.0, 2.0, 1.0 / 2048};
    case DensityKind::gaussian:
      return {p[0] - 12.0 * p[1], p[0] + 12.0 * p[1], p[1] / 128};
    case DensityKind::tabulated: {
      const dri::GridFunction& g = spec.tabulated_grid();
      double hi = g.origin + g.spacing * double(g.values.size() - 1);
      return {g.origin, hi, g.spacing};
    }
  }
  return {-1.0, 40.0, 41.0 / 16384};
}

std::string verdict_name(dri::Verdict v) {
  switch (v) {
    case dri::Verdict::DRI_verified: return "DRI_verified";
    case dri::Verdict::Inconclusive: return "Inconclusive";
    case dri::Verdict::UpperSumDiverges: return "UpperSumDiverges";
  }
  return "Inconclusive";
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

dri::GridFunction slice_nonnegative(const dri::GridFunction& g) {
  dri::GridFunction out = g;
  std::size_t first = 0;
  while (first < g.values.size() && g.origin + g.spacing * double(first) < -1e-12)
    ++first;
  out.origin = g.origin + g.spacing * double(first);
  out.values.assign(g.values.begin() + long(first), g.values.end());
  out.refresh_mass();
  return out;
}

struct Runner {
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 12345;
  int threads = 1;

  json cfg;
  json resolved;  // config with every default filled in

  void prepare(const std::string& command) {
    cfg = load_config(config_path);
    validate_config(cfg);
    std::filesystem::create_directories(out_dir);
    resolved = json::object();
    resolved["schema"] = 1;
    resolved["command"] = command;
    resolved["seed"] = seed;
    resolved["threads"] = threads;
  }

  void emit(const std::string& command, const json& result) const {
    json report;
    report["artifact_version"] = dri::kArtifactVersion;
    report["command"] = command;
    report["config"] = resolved;
    report["result"] = result;
    dri::write_json(report, out_dir + "/report.json");

    json meta;
    meta["command"] = command;
    meta["finished"] = dri::iso8601_now();
    meta["config_path"] = config_path;
    dri::write_json(meta, out_dir + "/run_meta.json");
  }

  int run_dri_check() {
    prepare("dri-check");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "log_counterexample", dens);
    resolved["density"] = dens;

    DriDefaults def = dri_defaults(spec);
    json dj = cfg.value("dri", json::object());
    double lo = def.lo, hi = def.hi, h = def.spacing;
    if (dj.contains("window")) {
      if (!dj.at("window").is_array() || dj.at("window").size() != 2)
        throw ConfigError("dri.window must be [lo, hi]");
      lo = jnum(dj.at("window")[0], "dri.window");
      hi = jnum(dj.at("window")[1], "dri.window");
    }
    if (dj.contains("spacing")) h = jnum(dj.at("spacing"), "dri.spacing");
    double tol = dj.contains("tolerance") ? jnum(dj.at("tolerance"), "dri.tolerance") : 0.15;
    std::vector<double> ladder;
    if (dj.contains("ladder")) {
      if (!dj.at("ladder").is_array()) throw ConfigError("dri.ladder must be an array");
      for (const auto& v : dj.at("ladder")) ladder.push_back(jnum(v, "dri.ladder"));
    } else {
      ladder = dri::default_ladder();
    }
    if (!(h > 0.0) || !(hi > lo)) throw ConfigError("dri window/spacing must be positive");

    // meshes below 8h cannot be resolved on the grid; drop them rather than
    // fail, and say so in the report
    std::string diagnostic;
    std::vector<double> usable;
    for (double d : ladder)
      if (d >= 8.0 * h * (1.0 - 1e-12)) usable.push_back(d);
    if (usable.size() != ladder.size()) {
      diagnostic = "ladder trimmed: meshes below 8*spacing = " +
                   dri::fmt_double(8.0 * h) + " cannot be certified on this grid";
      std::cerr << "drikit: " << diagnostic << "\n";
    }
    if (usable.empty()) usable.push_back(8.0 * h);

    dri::Discretization d = dri::discretize(spec, lo, hi, h);
    dri::RiemannReport rep = dri::dri_verdict(d.grid, d.envelope, usable, tol);

    {
      std::ofstream csv(out_dir + "/ladder.csv", std::ios::binary);
      csv << "mesh,lower,upper,tail\r\n";
      for (std::size_t i = 0; i < rep.mesh_ladder.size(); ++i)
        csv << dri::fmt_double(rep.mesh_ladder[i]) << ','
            << dri::fmt_double(rep.lower_sums[i]) << ','
            << dri::fmt_double(rep.upper_sums[i]) << ','
            << dri::fmt_double(rep.tail_bounds[i]) << "\r\n";
    }

    json rd;
    rd["window"] = {lo, hi};
    rd["spacing"] = h;
    rd["ladder"] = usable;
    rd["tolerance"] = tol;
    resolved["dri"] = rd;

    json res;
    res["verdict"] = verdict_name(rep.verdict);
    res["gap_at_finest"] = finite_or_string(rep.gap_at_finest);
    res["tail_at_finest"] = rep.tail_bounds.empty()
                                ? json(0.0)
                                : finite_or_string(rep.tail_bounds.back());
    json us = json::array(), ls = json::array();
    for (double v : rep.upper_sums) us.push_back(finite_or_string(v));
    for (double v : rep.lower_sums) ls.push_back(finite_or_string(v));
    res["upper_sums"] = us;
    res["lower_sums"] = ls;
    if (!diagnostic.empty()) res["diagnostic"] = diagnostic;
    emit("dri-check", res);

    switch (rep.verdict) {
      case dri::Verdict::DRI_verified: return kExitOk;
      case dri::Verdict::Inconclusive: return kExitInconclusive;
      case dri::Verdict::UpperSumDiverges: return kExitDiverges;
    }
    return kExitInconclusive;
  }

  int run_conv_power() {
    prepare("conv-power");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "uniform", dens);
    resolved["density"] = dens;

    json cj = cfg.value("conv", json::object());
    int k = cj.value("k", 8);
    dri::ConvolvePowerOptions opt;
    if (cj.contains("window")) {
      if (!cj.at("window").is_array() || cj.at("window").size() != 2)
        throw ConfigError("conv.window must be [lo, hi]");
      opt.window_lo = jnum(cj.at("window")[0], "conv.window");
      opt.window_hi = jnum(cj.at("window")[1], "conv.window");
    }
    if (cj.contains("spacing")) opt.spacing = jnum(cj.at("spacing"), "conv.spacing");

    dri::ConvolutionPower cp = dri::convolve_power(spec, k, opt);
    dri::write_grid_csv(cp.grid, out_dir + "/fk.csv");

    json rc;
    rc["k"] = k;
    rc["window"] = {cp.grid.origin,
                    cp.grid.origin + cp.grid.spacing * double(cp.grid.values.size() - 1)};
    rc["spacing"] = cp.grid.spacing;
    resolved["conv"] = rc;

    json res;
    res["k"] = cp.k;
    res["mass"] = cp.grid.mass;
    res["mass_drift"] = cp.mass_drift;
    res["eps"] = cp.eps_used;
    res["moment_constant"] = finite_or_string(cp.moment_constant);
    res["mass_envelope"] = dri::envelope_json(cp.envelope);
    res["value_envelope"] = dri::envelope_json(cp.value_envelope);
    emit("conv-power", res);
    return kExitOk;
  }

  int run_envelope_chain() {
    prepare("envelope-chain");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "pareto", dens);
    resolved["density"] = dens;

    json cj = cfg.value("chain", json::object());
    int n_max = cj.value("n_max", 6);
    resolved["chain"] = json{{"n_max", n_max}};

    dri::EnvelopeChain chain = dri::build_envelope_chain(spec, n_max);

    json levels = json::array();
    for (const auto& lv : chain.levels) {
      dri::write_grid_csv(lv.hbar,
                          out_dir + "/h_bar_" + std::to_string(lv.level) + ".csv");
      json l;
      l["level"] = lv.level;
      l["sup_bound"] = lv.sup_bound;
      l["l1_grid"] = lv.l1_grid;
      l["l1_tail"] = finite_or_string(lv.l1_tail);
      l["l1_total"] = finite_or_string(lv.l1_total);
      l["l1_certified"] = lv.l1_certified;
      l["fitted_exponent"] = lv.fitted_exponent;
      l["fit_r2"] = lv.fit_r2;
      l["envelope"] = dri::envelope_json(lv.envelope);
      levels.push_back(l);
    }

    json res;
    res["B"] = chain.B;
    res["D"] = chain.D;
    res["eps"] = chain.eps;
    res["moment_constant"] = chain.C;
    res["sup_f"] = chain.sup_f;
    res["levels"] = levels;
    res["l1_resolved_level"] = chain.l1_resolved_level;
    res["weighted_resolved_n"] = chain.weighted_resolved_n;
    res["weighted_bound"] = finite_or_string(chain.weighted_bound);
    if (chain.weighted_resolved_n >= 0)
      res["k_bar"] = 1 << chain.weighted_resolved_n;
    emit("envelope-chain", res);
    return chain.weighted_resolved_n >= 0 ? kExitOk : kExitInconclusive;
  }

  int run_renewal() {
    prepare("renewal");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "exponential", dens);
    resolved["density"] = dens;

    json rj = cfg.value("renewal", json::object());
    int N = rj.value("N", 200);
    double x_max = rj.contains("x_max") ? jnum(rj.at("x_max"), "renewal.x_max") : 30.0;
    double h = rj.contains("h") ? jnum(rj.at("h"), "renewal.h") : 0.0;
    int store = rj.value("store_powers", 8);
    int defect_k = rj.value("defect_k", 1);
    double far_lo = 2.0 * x_max / 3.0, far_hi = x_max;
    if (rj.contains("far")) {
      if (!rj.at("far").is_array() || rj.at("far").size() != 2)
        throw ConfigError("renewal.far must be [lo, hi]");
      far_lo = jnum(rj.at("far")[0], "renewal.far");
      far_hi = jnum(rj.at("far")[1], "renewal.far");
    }

    dri::RenewalSeries series = dri::renewal_density(spec, N, x_max, h, store);
    dri::DensityDefect defect =
        dri::density_defect(series, std::min(defect_k, int(series.powers.size()) + 1),
                            far_lo, std::min(far_hi, series.x_max));
    dri::write_grid_csv(slice_nonnegative(series.u), out_dir + "/u.csv");

    json rr;
    rr["N"] = series.N;
    rr["x_max"] = x_max;
    rr["h"] = series.u.spacing;
    rr["store_powers"] = store;
    rr["defect_k"] = defect.k;
    rr["far"] = {defect.far_lo, defect.far_hi};
    resolved["renewal"] = rr;

    json res;
    res["mu"] = finite_or_string(series.mu);
    res["inv_mu"] = defect.inv_mu;
    res["remainder_bound"] = series.remainder_bound;
    res["remainder_note"] = series.remainder_note;
    res["window_truncated"] = series.window_truncated;
    res["x_max_used"] = series.x_max;
    res["sup_far_dev"] = defect.sup_far_dev;
    emit("renewal", res);
    return series.window_truncated ? kExitInconclusive : kExitOk;
  }

  int run_heavy_tail() {
    prepare("heavy-tail");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "pareto", dens);
    resolved["density"] = dens;

    json hj = cfg.value("heavy", json::object());
    std::vector<double> probes;
    if (hj.contains("probes")) {
      if (!hj.at("probes").is_array()) throw ConfigError("heavy.probes must be an array");
      for (const auto& v : hj.at("probes")) probes.push_back(jnum(v, "heavy.probes"));
    } else {
      probes = {1000.0};
    }
    double h = hj.contains("h") ? jnum(hj.at("h"), "heavy.h") : 1.0 / 32;
    int N = hj.value("N", 0);

    dri::HeavyTailReport rep = dri::heavy_tail_check(spec, probes, h, N);

    {
      std::ofstream csv(out_dir + "/probes.csv", std::ios::binary);
      csv << "x,m_x,defect,value,ratio,remainder_band,inconclusive\r\n";
      for (const auto& p : rep.probes)
        csv << dri::fmt_double(p.x) << ',' << dri::fmt_double(p.m_x) << ','
            << dri::fmt_double(p.defect) << ',' << dri::fmt_double(p.value) << ','
            << dri::fmt_double(p.ratio) << ',' << dri::fmt_double(p.remainder_band)
            << ',' << (p.inconclusive ? 1 : 0) << "\r\n";
    }

    resolved["heavy"] = json{{"probes", probes}, {"h", rep.h}, {"N", rep.N}};

    json res;
    res["alpha"] = rep.alpha;
    res["k_bar"] = rep.k_bar;
    res["target"] = rep.target;
    res["N"] = rep.N;
    res["remainder_bound"] = rep.remainder_bound;
    res["liminf_only"] = rep.liminf_only;
    json pj = json::array();
    bool any_inconclusive = false;
    for (const auto& p : rep.probes) {
      json e;
      e["x"] = p.x;
      e["m_x"] = p.m_x;
      e["defect"] = p.defect;
      e["value"] = p.value;
      e["ratio"] = p.ratio;
      e["remainder_band"] = p.remainder_band;
      e["inconclusive"] = p.inconclusive;
      any_inconclusive = any_inconclusive || p.inconclusive;
      pj.push_back(e);
    }
    res["probes"] = pj;
    emit("heavy-tail", res);
    return any_inconclusive ? kExitInconclusive : kExitOk;
  }

  int run_local_clt() {
    prepare("local-clt");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "uniform", dens);
    resolved["density"] = dens;

    json lj = cfg.value("local_clt", json::object());
    std::vector<int> n_list = {2, 4, 8, 16};
    if (lj.contains("n_list")) {
      if (!lj.at("n_list").is_array()) throw ConfigError("local_clt.n_list must be an array");
      n_list.clear();
      for (const auto& v : lj.at("n_list"))
        n_list.push_back(int(jnum(v, "local_clt.n_list")));
    }
    resolved["local_clt"] = json{{"n_list", n_list}};

    dri::LocalCltReport rep = dri::local_clt_error(spec, n_list);
    {
      std::ofstream csv(out_dir + "/errors.csv", std::ios::binary);
      csv << "n,error\r\n";
      for (const auto& e : rep.entries)
        csv << e.n << ',' << dri::fmt_double(e.error) << "\r\n";
    }

    json res;
    json entries = json::array();
    for (const auto& e : rep.entries)
      entries.push_back(json{{"n", e.n}, {"error", e.error}});
    res["entries"] = entries;
    res["decreasing"] = rep.decreasing;
    emit("local-clt", res);
    return kExitOk;
  }

  int run_simulate() {
    prepare("simulate");
    json dens;
    dri::DensitySpec spec = resolve_density(cfg, "exponential", dens);
    resolved["density"] = dens;

    json sj = cfg.value("simulate", json::object());
    double x = sj.contains("x") ? jnum(sj.at("x"), "simulate.x") : 10.0;
    double delta = sj.contains("delta") ? jnum(sj.at("delta"), "simulate.delta") : 0.5;
    std::uint64_t paths = sj.value("paths", std::uint64_t(100000));
    resolved["simulate"] = json{{"x", x}, {"delta", delta}, {"paths", paths}};

    dri::SimulationResult res = dri::simulate_renewal_window(spec, x, delta, paths, seed);

    json out;
    out["estimate"] = res.estimate;
    out["std_error"] = res.std_error;
    out["paths"] = res.paths;
    out["seed"] = res.seed;
    out["step_capped"] = res.step_capped;
    emit("simulate", out);
    return res.step_capped ? kExitInconclusive : kExitOk;
  }
};

}  // namespace

int main(int argc, char** argv) {
  Runner runner;
  CLI::App app{"drikit: renewal densities, convolution powers, and direct "
               "Riemann integrability certificates"};
  app.require_subcommand(1);
  app.fallthrough();  // accept the global options after the subcommand too
  app.add_option("--config", runner.config_path, "JSON config path (schema 1)");
  app.add_option("--out", runner.out_dir, "output directory")->capture_default_str();
  app.add_option("--seed", runner.seed, "master seed for simulation paths")
      ->capture_default_str();
  app.add_option("--threads", runner.threads, "worker cap (kernels are single-threaded)")
      ->capture_default_str();

  int (Runner::*entry)() = nullptr;
  app.add_subcommand("dri-check",
                     "certify direct Riemann integrability on a mesh ladder")
      ->callback([&] { entry = &Runner::run_dri_check; });
  app.add_subcommand("conv-power", "k-fold self-convolution with envelopes")
      ->callback([&] { entry = &Runner::run_conv_power; });
  app.add_subcommand("envelope-chain", "regularization chain h_bar_j")
      ->callback([&] { entry = &Runner::run_envelope_chain; });
  app.add_subcommand("renewal", "renewal density series with certified remainder")
      ->callback([&] { entry = &Runner::run_renewal; });
  app.add_subcommand("heavy-tail", "infinite-mean renewal constant probes")
      ->callback([&] { entry = &Runner::run_heavy_tail; });
  app.add_subcommand("local-clt", "standardized local CLT error table")
      ->callback([&] { entry = &Runner::run_local_clt; });
  app.add_subcommand("simulate", "Monte Carlo renewal window counts")
      ->callback([&] { entry = &Runner::run_simulate; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (runner.threads < 1) runner.threads = 1;
    return (runner.*entry)();
  } catch (const std::exception& e) {
    std::cerr << "drikit: " << e.what() << "\n";
    return kExitConfig;
  }
}
