#include "inl/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "inl/collapse.hpp"
#include "inl/competition.hpp"
#include "inl/errors.hpp"
#include "inl/highdim.hpp"
#include "inl/kaon.hpp"
#include "inl/sampling.hpp"
#include "inl/state_algebra.hpp"
#include "inl/stats.hpp"

#ifndef INL_VERSION
#define INL_VERSION "0.0.0"
#endif

namespace inl {

using nlohmann::json;

namespace {

constexpr double kPi = std::numbers::pi;

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid number for " + key + ": '" + v + "'");
  }
  return x;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& v) {
  Int x{};
  const auto s = trim(v);
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || s.empty()) {
    throw ConfigError("invalid integer for " + key + ": '" + v + "'");
  }
  return x;
}

json summary_json(const Summary& s) {
  return {{"count", s.count}, {"mean", s.mean}, {"stddev", s.stddev},
          {"p05", s.p05},     {"p50", s.p50},   {"p95", s.p95}};
}

double eps_fact(const ExperimentConfig& c) {
  const auto it = c.tolerances.find("eps_fact");
  return it == c.tolerances.end() ? kFactorizationTol : it->second;
}

BipartiteState alpha_state(double alpha) {
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = std::sqrt(alpha);
  c(1, 1) = std::sqrt(1.0 - alpha);
  return BipartiteState::normalized(c);
}

EnsembleOptions ensemble_options(const ExperimentConfig& c) {
  EnsembleOptions o;
  o.collapse.dt = c.dt;
  o.collapse.eps_fact = eps_fact(c);
  o.threads = c.threads;
  return o;
}

ExperimentOutput run_born(const ExperimentConfig& c) {
  const auto m = MeasurementOperator::canonical(c.eta);
  const auto runs = run_ensemble(alpha_state(c.alpha), m, c.trajectories, c.seed, ensemble_options(c));
  const auto st = summarize_ensemble(runs, 2);
  ExperimentOutput out;
  out.table.columns = {"trajectory", "outcome", "termination_time", "plays", "tau"};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    const auto& r = runs[i];
    out.table.rows.push_back({i, r.outcome, r.termination_time, r.plays, r.tau});
  }
  const double p = st.outcome_frequency[0];
  const double sigma = std::sqrt(c.alpha * (1.0 - c.alpha) / static_cast<double>(st.count));
  out.summary = {{"count", st.count},
                 {"p_y0", p},
                 {"expected_p_y0", c.alpha},
                 {"sigma_binomial", sigma},
                 {"z_score", sigma > 0.0 ? (p - c.alpha) / sigma : 0.0},
                 {"collapse_time", summary_json(st.collapse_time)},
                 {"plays", summary_json(st.plays)}};
  return out;
}

ExperimentOutput run_collapse_time(const ExperimentConfig& c) {
  const auto m = MeasurementOperator::canonical(c.eta);
  const auto s0 = alpha_state(c.alpha);
  const double eta = std::abs(c.eta);
  const double t0 = termination_time(c.alpha, eta, 1);
  CollapseOptions co;
  co.dt = c.dt;
  co.eps_fact = eps_fact(c);
  for (int k = 0; k < 100; ++k) co.output_times.push_back(t0 * k / 100.0);
  const Trajectory det = flow_deterministic(s0, m, 1, co);
  double grid_err = 0.0;
  for (const auto& smp : det.samples) {
    if (smp.t > t0) continue;
    const double y0 = smp.c.row(0).squaredNorm();
    grid_err = std::max(grid_err, std::abs(y0 - analytic_y(c.alpha, eta, smp.t).first));
  }

  const auto runs = run_ensemble(s0, m, c.trajectories, c.seed, ensemble_options(c));
  const auto st = summarize_ensemble(runs, 2);
  ExperimentOutput out;
  out.table.columns = {"trajectory", "termination_time", "plays", "outcome"};
  for (std::size_t i = 0; i < runs.size(); ++i) {
    out.table.rows.push_back({i, runs[i].termination_time, runs[i].plays, runs[i].outcome});
  }
  out.summary = {{"deterministic_termination_time", det.termination_time.value_or(NAN)},
                 {"closed_form_termination_time", t0},
                 {"max_grid_error_y0", grid_err},
                 {"mean_collapse_time", st.collapse_time.mean},
                 {"bracket_low", kPi / (2.0 * eta)},
                 {"bracket_high", kPi / eta},
                 {"collapse_time", summary_json(st.collapse_time)},
                 {"plays", summary_json(st.plays)}};
  return out;
}

ExperimentOutput run_competition(const ExperimentConfig& c) {
  CompetitionOptions o;
  o.dt = c.dt;
  o.t_max = c.tmax;
  o.eps_fact = eps_fact(c);
  const auto r = simulate_competition({c.theta0, c.phi0}, c.eta, o);
  ExperimentOutput out;
  out.table.columns = competition_csv_header();
  const auto nan = std::numeric_limits<double>::quiet_NaN();
  out.table.rows.push_back({r.eta, r.start.theta, r.start.phi, to_string(r.regime), r.t_factorize.value_or(nan),
                            r.phi_final.value_or(nan), r.invariant_drift});
  auto opt_json = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  out.summary = {{"regime", to_string(r.regime)},
                 {"t_factorize", opt_json(r.t_factorize)},
                 {"phi_at_factorization", opt_json(r.phi_at_factorization)},
                 {"phi_final", opt_json(r.phi_final)},
                 {"invariant_drift", std::isnan(r.invariant_drift) ? json(nullptr) : json(r.invariant_drift)},
                 {"theta_monotone", r.theta_monotone},
                 {"ion_trap_delay_20MHz_ordinary_s",
                  ion_trap_delay_from_frequency(20e6, FrequencyConvention::Ordinary)},
                 {"ion_trap_delay_20MHz_angular_s", ion_trap_delay_from_frequency(20e6, FrequencyConvention::Angular)}};
  return out;
}

ExperimentOutput run_kaon(const ExperimentConfig&) {
  const KaonParams p;
  const auto r = kaon_pipeline(p);
  const auto s = sensitivity(p);
  ExperimentOutput out;
  out.table.columns = {"eta_eV", "delta_theory_re", "delta_theory_im", "delta_theory_abs", "delta_exp_abs", "ratio"};
  const auto& cmp = r.comparison;
  out.table.rows.push_back({r.eta_ev, cmp.delta_theory.real(), cmp.delta_theory.imag(), cmp.delta_theory_abs,
                            cmp.delta_exp_abs, cmp.ratio});
  out.summary = {{"eta_eV", r.eta_ev},
                 {"delta_theory_re", cmp.delta_theory.real()},
                 {"delta_theory_im", cmp.delta_theory.imag()},
                 {"delta_theory_abs", cmp.delta_theory_abs},
                 {"delta_exp_abs", cmp.delta_exp_abs},
                 {"ratio", cmp.ratio},
                 {"within_claim", cmp.within_claim},
                 {"delta_minus_abs", std::abs(r.delta_minus)},
                 {"elasticity_branching", s.elasticity_branching},
                 {"elasticity_tau_kl", s.elasticity_tau}};
  return out;
}

ExperimentOutput run_highdim(const ExperimentConfig& c) {
  ExperimentOutput out;
  out.table.columns = {"n", "m", "eta_t0_quadrature", "eta_t0_hypergeometric", "abs_diff"};
  const double eta = std::abs(c.eta);
  std::vector<int> dims;
  if ((c.n & (c.n - 1)) == 0) {
    for (int nn = 2; nn <= c.n; nn *= 2) dims.push_back(nn);
  } else {
    dims.push_back(c.n);
  }
  json ratios = json::array();
  for (int nn : dims) {
    std::vector<int> ms{1};
    if (nn / 2 != 1) ms.push_back(nn / 2);
    if (nn == c.n && c.m != 1 && c.m != nn / 2 && c.m < nn) ms.push_back(c.m);
    for (int m : ms) {
      const SubspaceFilter f{nn, m, eta};
      const auto y0 = DiagonalOccupation::uniform(nn);
      const double q = eta * time_of_tau(y0, f, termination_tau(y0, f));
      const double h = eta * termination_time_hyp(f);
      out.table.rows.push_back({nn, m, q, h, std::abs(q - h)});
      if (m == 1 && nn >= 64) ratios.push_back({{"n", nn}, {"eta_t0_over_n", h / nn}});
    }
  }
  out.summary["m1_ratio_eta_t0_over_n"] = ratios;

  if ((c.n & (c.n - 1)) == 0 && c.n <= 64) {
    StageOptions so;
    so.dt = c.dt;
    so.eps_fact = eps_fact(c);
    const int k = static_cast<int>(std::lround(std::log2(c.n)));
    const auto det = bisection_collapse(c.n, eta, BisectionMode::Deterministic, nullptr, so);
    const auto noisy = bisection_ensemble(c.n, eta, c.trajectories, c.seed, c.threads, so);
    const auto st = summarize(noisy);
    out.summary["bisection"] = {{"stages", det.stages.size()},
                                {"deterministic_total_time", det.total_time},
                                {"expected_total_time", k * kPi / (2.0 * eta)},
                                {"noisy_mean_total_time", st.mean},
                                {"bracket_low", k * kPi / (2.0 * eta)},
                                {"bracket_high", k * kPi / eta},
                                {"noisy", summary_json(st)}};
  }
  return out;
}

ExperimentOutput run_props(const ExperimentConfig& c) {
  RngStream rng(c.seed, 0);
  const std::size_t count = c.trajectories;
  double dual = 0, homog = 0, autom = 0, covar = 0, trev = 0, detb = 0;
  for (std::size_t i = 0; i < count; ++i) {
    const CMatrix a = random_state(2, rng).matrix();
    const CMatrix b = random_state(2, rng).matrix();
    const CMatrix u = haar_unitary(2, rng);
    const CMatrix v = haar_unitary(2, rng);
    const cplx lam(rng.normal(), rng.normal());
    const CMatrix ha = hat(a, 0.0);
    dual = std::max(dual, (hat(ha, 0.0) - a).cwiseAbs().maxCoeff());
    homog = std::max(homog, (hat(CMatrix(lam * a), 0.0) - lam * ha).cwiseAbs().maxCoeff());
    autom = std::max(autom, (hat(CMatrix(a * b), 0.0) - ha * hat(b, 0.0)).cwiseAbs().maxCoeff());
    covar = std::max(covar, (hat(CMatrix(u * a * v), 0.0) - u * ha * v).cwiseAbs().maxCoeff());
    const cplx ph = std::polar(1.0, kTimeReversalPhaseSign * std::arg(determinant(a)));
    trev = std::max(trev, (ha - ph * time_reversal(a)).cwiseAbs().maxCoeff());
    detb = std::max(detb, std::abs(determinant(a)) - 0.5);
  }
  ExperimentOutput out;
  out.table.columns = {"property", "samples", "max_deviation"};
  const std::pair<const char*, double> rows[] = {{"duality", dual},           {"homogeneity", homog},
                                                 {"automorphism", autom},     {"covariance", covar},
                                                 {"time_reversal", trev},     {"det_bound_excess", detb}};
  for (const auto& [name, v] : rows) {
    out.table.rows.push_back({name, count, v});
    out.summary[name] = v;
  }
  out.summary["time_reversal_phase_sign"] = kTimeReversalPhaseSign;
  return out;
}

std::string cell_text(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
  if (v.is_number_float()) return fmt17(v.get<double>());
  if (v.is_null()) return "nan";
  return v.dump();
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(p.parent_path(), ec);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << text;
  f.close();
  if (!f) throw IoError("failed writing " + path);
}

bool needs_trajectories(Experiment e) {
  return e == Experiment::Born || e == Experiment::CollapseTime || e == Experiment::Highdim ||
         e == Experiment::Props;
}

}  // namespace

const char* version_string() { return INL_VERSION; }

std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::Born: return "born";
    case Experiment::CollapseTime: return "collapse-time";
    case Experiment::Competition: return "competition";
    case Experiment::Kaon: return "kaon";
    case Experiment::Highdim: return "highdim";
    case Experiment::Props: return "props";
  }
  return "unknown";
}

Experiment parse_experiment(const std::string& name) {
  for (auto e : {Experiment::Born, Experiment::CollapseTime, Experiment::Competition, Experiment::Kaon,
                 Experiment::Highdim, Experiment::Props}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown experiment '" + name + "'");
}

void ExperimentConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
  if (needs_trajectories(experiment) && trajectories < 1) throw ConfigError("trajectories must be at least 1");
  if (!std::isfinite(eta) || !std::isfinite(alpha) || !std::isfinite(gamma)) {
    throw ConfigError("alpha, eta and gamma must be finite");
  }
  const double eps = tolerances.count("eps_fact") ? tolerances.at("eps_fact") : kFactorizationTol;
  if (!(eps > 0.0)) throw ConfigError("tolerance eps_fact must be positive");
  switch (experiment) {
    case Experiment::Born:
    case Experiment::CollapseTime:
      if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
      if (eta == 0.0) throw ConfigError("eta must be nonzero");
      break;
    case Experiment::Competition:
      if (!(theta0 > 0.0 && theta0 < kPi)) throw ConfigError("theta0 must lie in (0, pi)");
      if (!(tmax > 0.0)) throw ConfigError("tmax must be positive");
      break;
    case Experiment::Highdim:
      if (n < 2) throw ConfigError("n must be at least 2");
      if (m < 1 || m >= n) throw ConfigError("m must lie in [1, n-1]");
      if (eta == 0.0) throw ConfigError("eta must be nonzero");
      break;
    case Experiment::Kaon:
    case Experiment::Props: break;
  }
}

std::string ExperimentConfig::data_path() const {
  if (!out_path.empty()) return out_path;
  return "inl_" + to_string(experiment) + (format == OutputFormat::Csv ? ".csv" : ".json");
}

std::string ExperimentConfig::manifest_path() const { return data_path() + ".manifest.json"; }

json ExperimentConfig::to_json() const {
  return {{"experiment", to_string(experiment)},
          {"alpha", alpha},
          {"eta", eta},
          {"gamma", gamma},
          {"n", n},
          {"m", m},
          {"trajectories", trajectories},
          {"seed", seed},
          {"dt", dt},
          {"tolerances", tolerances},
          {"out", data_path()},
          {"format", format == OutputFormat::Csv ? "csv" : "json"},
          {"threads", threads},
          {"theta0", theta0},
          {"phi0", phi0},
          {"tmax", tmax}};
}

void apply_setting(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  const std::string v = trim(value);
  if (key == "experiment") cfg.experiment = parse_experiment(v);
  else if (key == "alpha") cfg.alpha = parse_double(key, v);
  else if (key == "eta") cfg.eta = parse_double(key, v);
  else if (key == "gamma") cfg.gamma = parse_double(key, v);
  else if (key == "n") cfg.n = parse_int<int>(key, v);
  else if (key == "m") cfg.m = parse_int<int>(key, v);
  else if (key == "trajectories") {
    if (!v.empty() && v[0] == '-') throw ConfigError("trajectories must be nonnegative");
    cfg.trajectories = parse_int<std::size_t>(key, v);
  } else if (key == "seed") cfg.seed = parse_int<std::uint64_t>(key, v);
  else if (key == "dt") cfg.dt = parse_double(key, v);
  else if (key == "out") cfg.out_path = v;
  else if (key == "format") {
    if (v == "csv") cfg.format = OutputFormat::Csv;
    else if (v == "json") cfg.format = OutputFormat::Json;
    else throw ConfigError("format must be csv or json");
  } else if (key == "threads") cfg.threads = parse_int<std::size_t>(key, v);
  else if (key == "theta0") cfg.theta0 = parse_double(key, v);
  else if (key == "phi0") cfg.phi0 = parse_double(key, v);
  else if (key == "tmax") cfg.tmax = parse_double(key, v);
  else if (key.rfind("tolerances.", 0) == 0) cfg.tolerances[key.substr(11)] = parse_double(key, v);
  else if (key == "eps_fact") cfg.tolerances["eps_fact"] = parse_double(key, v);
  else throw ConfigError("unknown setting '" + key + "'");
}

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    out[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return out;
}

json RunManifest::to_json() const {
  return {{"config", config},
          {"version", version},
          {"wall_seconds", wall_seconds},
          {"summary", summary},
          {"data_file", data_file}};
}

ExperimentOutput run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  switch (cfg.experiment) {
    case Experiment::Born: return run_born(cfg);
    case Experiment::CollapseTime: return run_collapse_time(cfg);
    case Experiment::Competition: return run_competition(cfg);
    case Experiment::Kaon: return run_kaon(cfg);
    case Experiment::Highdim: return run_highdim(cfg);
    case Experiment::Props: return run_props(cfg);
  }
  throw ConfigError("unknown experiment");
}

std::string render_csv(const DataTable& t, const std::string& manifest_name) {
  std::ostringstream os;
  os << "# manifest=" << manifest_name << "\n";
  for (std::size_t i = 0; i < t.columns.size(); ++i) os << (i ? "," : "") << t.columns[i];
  os << "\n";
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << cell_text(row[i]);
    os << "\n";
  }
  return os.str();
}

std::string render_json(const DataTable& t, const std::string& manifest_name, Experiment e) {
  json rows = json::array();
  for (const auto& row : t.rows) {
    json r = json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i) r[t.columns[i]] = row[i];
    rows.push_back(std::move(r));
  }
  const json doc = {{"experiment", to_string(e)}, {"manifest", manifest_name}, {"columns", t.columns}, {"rows", rows}};
  return doc.dump(2) + "\n";
}

RunManifest run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  const ExperimentOutput res = run_experiment(cfg);
  const std::string data = cfg.data_path();
  const std::string manifest_name = std::filesystem::path(cfg.manifest_path()).filename().string();
  write_file(data, cfg.format == OutputFormat::Csv ? render_csv(res.table, manifest_name)
                                                   : render_json(res.table, manifest_name, cfg.experiment));
  RunManifest man;
  man.config = cfg.to_json();
  man.version = version_string();
  man.summary = res.summary;
  man.data_file = std::filesystem::path(data).filename().string();
  man.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_file(cfg.manifest_path(), man.to_json().dump(2) + "\n");
  return man;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::string experiment_name;
  auto emit_error = [&](const char* kind, const std::string& msg) {
    json e = {{"error", {{"kind", kind}, {"message", msg}, {"experiment", experiment_name}}}};
    err << e.dump() << "\n";
  };

  CLI::App app{"Induced-nonlinearity collapse experiments", "inl"};
  app.set_version_flag("--version", std::string(version_string()));
  app.add_option("experiment", experiment_name, "born | collapse-time | competition | kaon | highdim | props")
      ->required();
  std::string config_path;
  app.add_option("--config", config_path, "key = value configuration file (flags override it)");

  const char* keys[] = {"alpha", "eta",    "gamma", "n",      "m",    "trajectories", "seed", "dt",
                        "out",   "format", "threads", "theta0", "phi0", "tmax",         "eps_fact"};
  std::map<std::string, std::string> flags;
  std::map<std::string, CLI::Option*> opts;
  for (const char* k : keys) opts[k] = app.add_option(std::string("--") + k, flags[k]);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << version_string() << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    emit_error("config", e.what());
    return kExitConfig;
  }

  ExperimentConfig cfg;
  try {
    cfg.experiment = parse_experiment(experiment_name);
    if (!config_path.empty()) {
      for (const auto& [k, v] : read_config_file(config_path)) {
        if (k != "experiment") apply_setting(cfg, k, v);
      }
    }
    for (const auto& [k, o] : opts) {
      if (o->count() > 0) apply_setting(cfg, k, flags[k]);
    }
    cfg.validate();
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return kExitConfig;
  }

  try {
    const RunManifest man = run(cfg);
    if (cfg.experiment == Experiment::Kaon) {
      json rec;
      for (const char* k : {"eta_eV", "delta_theory_re", "delta_theory_im", "delta_theory_abs", "delta_exp_abs", "ratio"}) {
        rec[k] = man.summary[k];
      }
      out << rec.dump() << "\n";
    } else {
      out << man.summary.dump() << "\n";
    }
    return kExitOk;
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return kExitConfig;
  } catch (const IoError& e) {
    emit_error("io", e.what());
    return kExitConfig;
  } catch (const DomainError& e) {
    emit_error("numeric", e.what());
    return kExitNumeric;
  } catch (const StepTooLarge& e) {
    emit_error("numeric", e.what());
    return kExitNumeric;
  } catch (const NumericError& e) {
    emit_error("numeric", e.what());
    return kExitNumeric;
  } catch (const std::exception& e) {
    emit_error("numeric", e.what());
    return kExitNumeric;
  }
}

}  // namespace inl
