// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "inl/collapse.hpp"
#include "inl/competition.hpp"
#include "inl/harness.hpp"
#include "inl/highdim.hpp"
#include "inl/kaon.hpp"
#include "inl/sampling.hpp"
#include "inl/state_algebra.hpp"
#include "inl/stats.hpp"

using namespace inl;

namespace {

constexpr double kPi = std::numbers::pi;
// Termination times are located to the integrator event tolerance and the
// factorization threshold; criteria on times use this margin.
constexpr double kTimeTol = 1e-6;

struct Check {
  std::string detail;
  bool ok = true;

  void require(bool cond, const std::string& what) {
    if (!detail.empty()) detail += "; ";
    detail += what;
    if (!cond) {
      ok = false;
      detail += " [X]";
    }
  }
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

BipartiteState alpha_state(double alpha) {
  CMatrix c = CMatrix::Zero(2, 2);
  c(0, 0) = std::sqrt(alpha);
  c(1, 1) = std::sqrt(1.0 - alpha);
  return BipartiteState(c);
}

double maxdev(const CMatrix& a, const CMatrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

// Hat map from its definition through a general inverse.
CMatrix hat_oracle(const CMatrix& c) { return std::abs(c.determinant()) * c.adjoint().inverse(); }

Check criterion1() {
  Check c;
  RngStream rng(2024, 1);
  double dual = 0, homog = 0, autom = 0, covar = 0, trev = 0, oracle = 0;
  const double sigma = kTimeReversalPhaseSign;
  for (int i = 0; i < 1000; ++i) {
    const CMatrix a = random_state(2, rng).matrix();
    const CMatrix b = random_state(2, rng).matrix();
    const CMatrix u = haar_unitary(2, rng);
    const CMatrix v = haar_unitary(2, rng);
    const cplx lam(rng.normal(), rng.normal());
    const CMatrix ha = hat(a, 0.0);
    oracle = std::max(oracle, maxdev(ha, hat_oracle(a)));
    dual = std::max(dual, maxdev(hat(ha, 0.0), a));
    homog = std::max(homog, maxdev(hat(CMatrix(lam * a), 0.0), lam * ha));
    autom = std::max(autom, maxdev(hat(CMatrix(a * b), 0.0), ha * hat(b, 0.0)));
    covar = std::max(covar, maxdev(hat(CMatrix(u * a * v), 0.0), u * ha * v));
    // Time reversal written out: eps conj(C) eps^T.
    CMatrix tr(2, 2);
    tr << std::conj(a(1, 1)), -std::conj(a(1, 0)), -std::conj(a(0, 1)), std::conj(a(0, 0));
    trev = std::max(trev, maxdev(ha, std::polar(1.0, sigma * std::arg(a.determinant())) * tr));
  }
  c.require(oracle < 1e-10, "oracle " + fmt("%.2e", oracle));
  c.require(dual < 1e-10, "duality " + fmt("%.2e", dual));
  c.require(homog < 1e-10, "homogeneity " + fmt("%.2e", homog));
  c.require(autom < 1e-10, "automorphism " + fmt("%.2e", autom));
  c.require(covar < 1e-10, "covariance " + fmt("%.2e", covar));
  c.require(trev < 1e-10, "time-reversal(sigma=" + std::to_string(kTimeReversalPhaseSign) + ") " + fmt("%.2e", trev));
  return c;
}

Check criterion2() {
  Check c;
  const auto m = MeasurementOperator::canonical(1.0);
  const auto half = flow_deterministic(alpha_state(0.5), m, 1);
  c.require(half.termination_time && std::abs(*half.termination_time - kPi / 2) < kTimeTol,
            "t0(0.5) - pi/2 = " + fmt("%.2e", half.termination_time.value_or(NAN) - kPi / 2));
  for (double alpha : {0.1, 0.25, 0.75}) {
    // Closed form: y0 = sin^2(t/2 + atan(sqrt(alpha/(1-alpha)))) reaches 1 at
    // t0 = pi - 2 atan(sqrt(alpha/(1-alpha))).
    const double t0 = kPi - 2.0 * std::atan(std::sqrt(alpha / (1.0 - alpha)));
    CollapseOptions o;
    for (int k = 0; k < 100; ++k) o.output_times.push_back(t0 * k / 100.0);
    const auto tr = flow_deterministic(alpha_state(alpha), m, 1, o);
    const double dt0 = tr.termination_time.value_or(NAN) - t0;
    c.require(std::abs(dt0) < kTimeTol, "t0(" + fmt("%.2f", alpha) + ") err " + fmt("%.2e", dt0));
    double dev = 0.0;
    std::size_t points = 0;
    const double phase = std::atan(std::sqrt(alpha / (1.0 - alpha)));
    for (const auto& s : tr.samples) {
      if (s.t >= t0) continue;
      const double y = std::pow(std::sin(0.5 * s.t + phase), 2);
      dev = std::max(dev, std::abs(std::norm(s.c(0, 0)) - y));
      ++points;
    }
    c.require(points >= 100 && dev < 1e-8, "grid(" + fmt("%.2f", alpha) + ") " + fmt("%.2e", dev));
  }
  return c;
}

Check criterion3() {
  Check c;
  const auto m = MeasurementOperator::canonical(1.0);
  const std::size_t n = 50000;
  for (double alpha : {0.1, 0.25, 0.5, 0.9}) {
    const auto runs = run_ensemble(alpha_state(alpha), m, n, 3000 + static_cast<std::uint64_t>(alpha * 100));
    std::size_t hits = 0;
    for (const auto& r : runs) hits += r.outcome == 0;
    const double p = static_cast<double>(hits) / n;
    const double sd = std::sqrt(alpha * (1 - alpha) / n);
    c.require(std::abs(p - alpha) <= 3 * sd,
              "alpha " + fmt("%.2f", alpha) + ": p " + fmt("%.4f", p) + " z " + fmt("%+.2f", (p - alpha) / sd));
  }
  return c;
}

// Expected number of plays when the smaller fortune is z: lose and stop, or
// double; a doubled stake of exactly one half leaves a single final play.
double expected_plays(double z, int depth = 0) {
  if (depth > 60) return 1.0;
  const double d = 2.0 * z;
  if (std::abs(d - 0.5) < 1e-15) return 1.0 + 0.5;
  const double next = std::min(d, 1.0 - d);
  return 1.0 + 0.5 * expected_plays(next, depth + 1);
}

Check criterion4() {
  Check c;
  const auto m = MeasurementOperator::canonical(1.0);
  const std::size_t n = 20000;
  const auto quarter = run_ensemble(alpha_state(0.25), m, n, 4001);
  double plays = 0.0;
  for (const auto& r : quarter) plays += static_cast<double>(r.plays);
  plays /= n;
  const double oracle = expected_plays(0.25);
  c.require(std::abs(oracle - 1.5) < 1e-15, "play-tree oracle " + fmt("%.4f", oracle));
  c.require(std::abs(plays - 1.5) <= 0.05, "mean plays(0.25) " + fmt("%.4f", plays));

  const auto half = run_ensemble(alpha_state(0.5), m, n, 4002);
  std::vector<double> times;
  for (const auto& r : half) times.push_back(r.termination_time);
  const auto s = summarize(times);
  c.require(s.mean >= kPi / 2 - kTimeTol && s.mean <= kPi + kTimeTol,
            "mean t(0.5) " + fmt("%.12f", s.mean) + " in [pi/2, pi]");
  return c;
}

Check criterion5() {
  Check c;
  CompetitionOptions o;
  o.dt = 1e-4;
  o.t_max = 5.0;
  double drift = 0.0;
  for (const BlochPoint p : {BlochPoint{kPi / 2, 0.0}, BlochPoint{1.0, 0.3}, BlochPoint{2.2, -0.6}}) {
    drift = std::max(drift, simulate_competition(p, 0.5, o).invariant_drift);
  }
  c.require(drift < 1e-6, "invariant drift " + fmt("%.2e", drift));

  double resid = 0.0;
  for (double eta : {-0.9, -0.5, 0.0, 0.5, 0.9}) resid = std::max(resid, stationary_residual(stationary_state(eta), eta));
  c.require(resid < 1e-12, "stationary residual " + fmt("%.2e", resid));

  const auto r = simulate_competition({kPi / 2, 0.0}, 5.0);
  const double dphi = r.phi_final.value_or(NAN) - kPi / 2;
  c.require(r.regime == Regime::Factorizing && std::abs(dphi) < 1e-3,
            "eta=5 phi - pi/2 = " + fmt("%.2e", dphi) + " (at eps: " +
                fmt("%.2e", r.phi_at_factorization.value_or(NAN) - kPi / 2) + ")");
  c.require(r.theta_monotone, "theta monotone");
  return c;
}

Check criterion6() {
  Check c;
  const KaonParams p;
  const double eta = kaon_eta(p);
  c.require(std::abs(eta / 2.6e-8 - 1) < 0.03, "eta " + fmt("%.4e", eta) + " eV");
  const double d = std::abs(kaon_delta(2.6e-8, p.gamma));
  c.require(std::abs(d / 5.25e-3 - 1) < 0.01, "|delta|(2.6e-8) " + fmt("%.4e", d));
  c.require(std::abs(d / 5.37e-3 - 1) < 0.03, "vs 5.37e-3 " + fmt("%+.2f%%", 100 * (d / 5.37e-3 - 1)));
  const auto rep = kaon_pipeline(p);
  const double ratio = rep.comparison.ratio;
  c.require(ratio >= 0.95 && ratio <= 1.25, "ratio " + fmt("%.4f", ratio));
  return c;
}

Check criterion7() {
  Check c;
  double worst = 0.0;
  for (int n : {2, 4, 8, 16}) {
    const SubspaceFilter f{n, n / 2, 1.0};
    const auto y = DiagonalOccupation::uniform(n);
    const double q = time_of_tau(y, f, termination_tau(y, f));
    const double h = termination_time_hyp(f);
    worst = std::max({worst, std::abs(q - kPi / 2), std::abs(h - kPi / 2), std::abs(q - h)});
  }
  c.require(worst < 1e-6, "m=n/2 max dev " + fmt("%.2e", worst));
  const double t2 = termination_time_hyp({2, 1, 1.0});
  const double t30 = termination_time(0.5, 1.0);
  c.require(std::abs(t2 - t30) < 1e-12, "n=2 vs two-level " + fmt("%.2e", t2 - t30));
  std::string ratios;
  for (int n : {64, 256, 1024}) {
    const SubspaceFilter f{n, 1, 1.0};
    const auto y = DiagonalOccupation::uniform(n);
    const double q = time_of_tau(y, f, termination_tau(y, f));
    ratios += (ratios.empty() ? "" : " ") + std::to_string(n) + ":" + fmt("%.5f", q / n);
  }
  c.require(true, "eta t0/n (m=1) " + ratios);
  return c;
}

Check criterion8() {
  Check c;
  for (int k = 1; k <= 4; ++k) {
    const int n = 1 << k;
    const auto r = bisection_collapse(n, 1.0, BisectionMode::Deterministic);
    c.require(std::abs(r.total_time - k * kPi / 2) < kTimeTol,
              "det k=" + std::to_string(k) + " err " + fmt("%.1e", r.total_time - k * kPi / 2));
  }
  for (int k = 1; k <= 4; ++k) {
    const int n = 1 << k;
    const auto times = bisection_ensemble(n, 1.0, 10000, 8000 + k);
    const double mean = summarize(times).mean;
    c.require(mean >= k * kPi / 2 - kTimeTol && mean <= k * kPi + kTimeTol,
              "noisy k=" + std::to_string(k) + " mean " + fmt("%.6f", mean));
  }
  return c;
}

Check criterion9() {
  Check c;
  const auto m = MeasurementOperator::canonical(1.0);
  const std::size_t n = 20000;
  RngStream rng(9000, 0);
  const CMatrix u = haar_unitary(2, rng);
  const auto s = alpha_state(0.3);
  const auto su = apply_local(CMatrix::Identity(2, 2), s, u);
  const auto a = run_ensemble(s, m, n, 9001);
  const auto b = run_ensemble(su, m, n, 9002);
  auto freq = [&](const std::vector<TrajectoryOutcome>& r) {
    double h = 0;
    for (const auto& x : r) h += x.outcome == 0;
    return h / n;
  };
  auto times = [](const std::vector<TrajectoryOutcome>& r) {
    std::vector<double> t;
    for (const auto& x : r) t.push_back(x.termination_time);
    return summarize(t);
  };
  const double pa = freq(a);
  const double pb = freq(b);
  const double pp = 0.5 * (pa + pb);
  const double zp = (pa - pb) / std::sqrt(pp * (1 - pp) * 2.0 / n);
  c.require(std::abs(zp) <= 3, "outcome z " + fmt("%+.2f", zp));
  const auto ta = times(a);
  const auto tb = times(b);
  const double zt = (ta.mean - tb.mean) / std::sqrt((ta.stddev * ta.stddev + tb.stddev * tb.stddev) / n);
  c.require(std::abs(zt) <= 3, "time z " + fmt("%+.2f", zt));
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

Check criterion10() {
  Check c;
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / ("inl_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  for (const char* name : {"born", "collapse-time", "competition", "kaon", "highdim", "props"}) {
    std::vector<std::string> files;
    for (std::size_t threads : {1u, 2u, 4u}) {
      for (int rep = 0; rep < 2; ++rep) {
        ExperimentConfig cfg;
        cfg.experiment = parse_experiment(name);
        cfg.trajectories = 500;
        cfg.n = 8;
        cfg.seed = 77;
        cfg.threads = threads;
        cfg.out_path = (dir / "data.csv").string();
        run(cfg);
        files.push_back(slurp(cfg.out_path));
      }
    }
    bool same = true;
    for (const auto& f : files) same = same && f == files.front();
    c.require(same && !files.front().empty(), name);
  }
  fs::remove_all(dir);
  return c;
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Check()>>> criteria = {
      {"hat-map algebra", criterion1},
      {"deterministic collapse", criterion2},
      {"Born rule", criterion3},
      {"noise timing", criterion4},
      {"competition", criterion5},
      {"kaon", criterion6},
      {"subspace filters", criterion7},
      {"bisection reduction", criterion8},
      {"EPR invariance", criterion9},
      {"reproducibility", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Check c;
    try {
      c = criteria[i].second();
    } catch (const std::exception& e) {
      c.ok = false;
      c.detail = std::string("exception: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %2zu %-22s %s (%.1fs)\n", c.ok ? "PASS" : "FAIL", i + 1, criteria[i].first, c.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !c.ok;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
