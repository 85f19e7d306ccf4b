#include "inl/highdim.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "inl/flow.hpp"
#include "inl/kernels.hpp"
#include "inl/parallel.hpp"

namespace inl {

namespace {

std::string fmt_g(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

constexpr double kTieTol = 1e-12;
// Relative gap below which a doubling would exhaust the other block.
constexpr double kTieGap = 1e-6;
constexpr double kMaxNormDrift = 1e-8;

void require_match(const DiagonalOccupation& y, const SubspaceFilter& f) {
  f.validate();
  y.validate();
  if (y.dim() != f.n) throw std::invalid_argument("occupation and filter dimensions differ");
}

void require_positive_eta(const SubspaceFilter& f) {
  if (!(f.eta > 0.0)) throw DomainError("eta must be positive for termination times");
}

bool is_power_of_two(int n) { return n >= 2 && (n & (n - 1)) == 0; }

}  // namespace

void SubspaceFilter::validate() const {
  if (n < 2) throw DomainError("SubspaceFilter: n must be at least 2");
  if (m < 1 || m > n - 1) throw DomainError("SubspaceFilter: m must lie in [1, n-1]");
  if (!std::isfinite(eta)) throw DomainError("SubspaceFilter: eta must be finite");
}

DiagonalOccupation DiagonalOccupation::uniform(int n) {
  if (n < 1) throw DomainError("DiagonalOccupation: n must be positive");
  return {std::vector<double>(static_cast<std::size_t>(n), 1.0 / n)};
}

void DiagonalOccupation::validate() const {
  if (y.empty()) throw DomainError("DiagonalOccupation: empty");
  double s = 0.0;
  for (double v : y) {
    if (!(v >= 0.0 && v <= 1.0)) throw DomainError("DiagonalOccupation: entries must lie in [0, 1]");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-12) throw DomainError("DiagonalOccupation: entries must sum to 1");
}

CMatrix lambda_matrix(const SubspaceFilter& f) {
  f.validate();
  CMatrix l = CMatrix::Zero(f.n, f.n);
  for (int j = 0; j < f.n; ++j) {
    l(j, j) = j < f.m ? 0.5 * f.eta / f.m : -0.5 * f.eta / (f.n - f.m);
  }
  return l;
}

double termination_tau(const DiagonalOccupation& y0, const SubspaceFilter& f) {
  require_match(y0, f);
  const double amin = *std::min_element(y0.y.begin() + f.m, y0.y.end());
  if (!(amin > 0.0)) throw DomainError("termination_tau: state is already factorized");
  return (1.0 - static_cast<double>(f.m) / f.n) * amin;
}

DiagonalOccupation highdim_flow_tau(const DiagonalOccupation& y0, const SubspaceFilter& f, double tau) {
  const double tend = termination_tau(y0, f);
  if (tau < 0.0 || tau > tend * (1.0 + 1e-12)) throw DomainError("highdim_flow_tau: tau outside [0, tau_end]");
  const auto n = static_cast<std::size_t>(f.n);
  std::vector<double> slope(n);
  for (std::size_t j = 0; j < n; ++j) {
    slope[j] = static_cast<int>(j) < f.m ? static_cast<double>(f.n) / f.m : -static_cast<double>(f.n) / (f.n - f.m);
  }
  DiagonalOccupation out{std::vector<double>(n)};
  kernels::affine_update(y0.y, slope, tau, out.y);
  for (double& v : out.y) v = std::max(v, 0.0);
  return out;
}

double time_of_tau(const DiagonalOccupation& y0, const SubspaceFilter& f, double tau) {
  const double tend = termination_tau(y0, f);
  require_positive_eta(f);
  if (tau < 0.0 || tau > tend * (1.0 + 1e-12)) throw DomainError("time_of_tau: tau outside [0, tau_end]");
  tau = std::min(tau, tend);
  if (tau == 0.0) return 0.0;

  const int n = f.n;
  const double s_plus = static_cast<double>(n) / f.m;
  const double s_minus = static_cast<double>(n) / (n - f.m);
  const double amin = *std::min_element(y0.y.begin() + f.m, y0.y.end());

  // With x = tau_end - s the surviving factors are affine in x.
  std::vector<double> off;
  std::vector<double> slope;
  int tied = 0;
  for (int j = 0; j < n; ++j) {
    const double a = y0.y[static_cast<std::size_t>(j)];
    if (j >= f.m && a - amin <= kTieTol * amin) {
      ++tied;
      continue;
    }
    const double s = j < f.m ? s_plus : -s_minus;
    off.push_back(a + s * tend);
    slope.push_back(-s);
  }
  const double beta = static_cast<double>(tied) / n;
  const double q = 1.0 / (1.0 - beta);
  const double pref = q * std::pow(s_minus, -beta);

  auto integrand = [&](double w) {
    const double x = std::pow(w, q);
    const double logs = off.empty() ? 0.0 : kernels::sum_log_affine(off, slope, x);
    return pref * std::exp(-logs / n);
  };
  const double w_lo = std::pow(tend - tau, 1.0 / q);
  const double w_hi = std::pow(tend, 1.0 / q);
  double err = 0.0;
  const double val = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, w_lo, w_hi, 15, 1e-12, &err);
  if (!std::isfinite(val) || err > 1e-10 * std::abs(val)) {
    throw NumericError("time_of_tau: quadrature did not converge (error estimate " + fmt_g(err) + ", value " + fmt_g(val) + ")");
  }
  return 2.0 / f.eta * val;
}

double hypergeometric_2f1_series(double a, double b, double c, double z, double rel_tol, std::size_t max_terms) {
  if (!(std::abs(z) < 1.0)) throw DomainError("hypergeometric_2f1_series: |z| must be below 1");
  double term = 1.0;
  double sum = 1.0;
  int small = 0;
  for (std::size_t k = 0; k < max_terms; ++k) {
    const double kk = static_cast<double>(k);
    term *= (a + kk) * (b + kk) / ((c + kk) * (kk + 1.0)) * z;
    sum += term;
    if (std::abs(term) <= rel_tol * std::abs(sum)) {
      if (++small == 2) return sum;
    } else {
      small = 0;
    }
  }
  throw NumericError("hypergeometric_2f1_series: no convergence within " + std::to_string(max_terms) + " terms");
}

double hypergeometric_2f1(double a, double b, double c, double z) {
  if (!(z > -1.0 && z < 1.0)) throw DomainError("hypergeometric_2f1: z must lie in (-1, 1)");
  const double s = c - a - b;
  if (z <= 0.9 || std::abs(s - std::round(s)) < 1e-12) {
    return hypergeometric_2f1_series(a, b, c, z);
  }
  const double w = 1.0 - z;
  const double g1 = std::tgamma(c) * std::tgamma(s) / (std::tgamma(c - a) * std::tgamma(c - b));
  const double g2 = std::tgamma(c) * std::tgamma(-s) / (std::tgamma(a) * std::tgamma(b));
  return g1 * hypergeometric_2f1_series(a, b, 1.0 - s, w) +
         std::pow(w, s) * g2 * hypergeometric_2f1_series(c - a, c - b, 1.0 + s, w);
}

double termination_time_hyp(const SubspaceFilter& f) {
  f.validate();
  require_positive_eta(f);
  const double r = static_cast<double>(f.m) / f.n;
  return 2.0 / f.eta * (1.0 - r) * hypergeometric_2f1(1.0, 1.0, 1.0 + r, 1.0 - r);
}

StageResult diagonal_stage(const Eigen::VectorXcd& c, int m, double eta, RngStream* rng, const StageOptions& opt) {
  const auto d = static_cast<int>(c.size());
  SubspaceFilter{d, m, eta}.validate();
  if (!(eta > 0.0)) throw DomainError("diagonal_stage: eta must be positive");
  if (std::abs(c.squaredNorm() - 1.0) > 1e-8) throw DomainError("diagonal_stage: amplitudes must be normalized");

  const double lp = 0.25 * eta * d / m;
  const double lm = -0.25 * eta * d / (d - m);
  Eigen::VectorXcd ref(d);
  for (int j = 0; j < d; ++j) {
    if (c(j) == cplx(0.0)) throw DomainError("diagonal_stage: zero amplitude");
    ref(j) = c(j) / std::abs(c(j));
  }

  std::vector<double> mod2(static_cast<std::size_t>(d));
  auto measure = [&](const Eigen::VectorXcd& x) {
    for (int j = 0; j < d; ++j) mod2[static_cast<std::size_t>(j)] = std::norm(x(j));
    return std::exp(kernels::sum_log(mod2) / d);
  };
  auto weights = [&](const Eigen::VectorXcd& x) {
    const double wp = x.head(m).squaredNorm();
    return std::pair<double, double>{wp, x.tail(d - m).squaredNorm()};
  };

  StageResult out;
  Eigen::VectorXcd x = c;
  double t = 0.0;
  FlowOptions fo;
  fo.dt = opt.dt;
  const double stage_scale = 1e3 * std::numbers::pi / eta;

  for (;;) {
    if (out.plays >= opt.max_plays) {
      throw NumericError("diagonal_stage: exceeded " + std::to_string(opt.max_plays) + " plays");
    }
    const int sign = rng ? rng->sign() : 1;
    const auto [wp0, wm0] = weights(x);
    const int small = wp0 <= wm0 ? 0 : 1;
    const double z = small == 0 ? wp0 : wm0;
    const bool game = rng != nullptr && (wp0 + wm0) - 2.0 * z > kTieGap * (wp0 + wm0);
    const double target = 2.0 * z;

    auto rhs = [&](double, const Eigen::VectorXcd& y) -> Eigen::VectorXcd {
      const double g = measure(y);
      if (!(g > 0.0)) throw DomainError("diagonal_stage: singular");
      Eigen::VectorXcd r(d);
      for (int j = 0; j < d; ++j) r(j) = sign * (j < m ? lp : lm) * g / std::conj(y(j));
      return r;
    };
    auto events = [&](const Eigen::VectorXcd& y) -> int {
      if (!(measure(y) > opt.eps_fact)) return 0;
      for (int j = 0; j < d; ++j) {
        if (std::real(y(j) * std::conj(ref(j))) <= 0.0) return 0;
      }
      if (game) {
        const auto [wp, wm] = weights(y);
        if ((small == 0 ? wp : wm) >= target) return 1;
      }
      return kNoEvent;
    };
    fo.t_max = t + stage_scale;
    DriftGuard<Eigen::VectorXcd, decltype(measure)> guard(kMaxNormDrift, opt.dt, measure);
    const auto res = integrate_rk4(rhs, x, t, events, fo, guard);
    if (res.stop == FlowStop::TimeLimit) throw NumericError("diagonal_stage: no boundary reached");
    ++out.plays;
    x = res.x;
    t = res.t;
    if (res.event != 1) break;
  }

  const auto [wp, wm] = weights(x);
  out.kept_block = wp >= wm ? 0 : 1;
  out.amplitudes = out.kept_block == 0 ? Eigen::VectorXcd(x.head(m)) : Eigen::VectorXcd(x.tail(d - m));
  out.amplitudes.normalize();
  out.t = t;
  return out;
}

BisectionResult bisection_collapse(int n, double eta, BisectionMode mode, RngStream* rng, const StageOptions& opt) {
  if (!is_power_of_two(n)) throw DomainError("bisection_collapse: n must be a power of two, at least 2");
  if (mode == BisectionMode::Noisy && rng == nullptr) {
    throw std::invalid_argument("bisection_collapse: noisy mode needs a random stream");
  }
  Eigen::VectorXcd c = Eigen::VectorXcd::Constant(n, cplx(1.0 / std::sqrt(static_cast<double>(n))));
  BisectionResult out;
  while (c.size() > 1) {
    const int d = static_cast<int>(c.size());
    const StageResult st = diagonal_stage(c, d / 2, eta, mode == BisectionMode::Noisy ? rng : nullptr, opt);
    StageLog log;
    log.dim_before = d;
    log.dim_after = static_cast<int>(st.amplitudes.size());
    log.t_start = out.total_time;
    log.t_end = out.total_time + st.t;
    log.plays = st.plays;
    log.kept_block = st.kept_block;
    out.stages.push_back(log);
    out.total_time = log.t_end;
    c = st.amplitudes;
  }
  return out;
}

std::vector<double> bisection_ensemble(int n, double eta, std::size_t count, std::uint64_t seed, std::size_t threads,
                                       const StageOptions& opt) {
  return parallel_map(count, threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    return bisection_collapse(n, eta, BisectionMode::Noisy, &rng, opt).total_time;
  });
}

}  // namespace inl
