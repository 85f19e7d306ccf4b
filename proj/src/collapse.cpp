#include "inl/collapse.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <Eigen/Eigenvalues>

#include "inl/flow.hpp"
#include "inl/parallel.hpp"

namespace inl {

namespace {

constexpr double kHermTol = 1e-12;

bool is_diagonal(const CMatrix& a) {
  for (Eigen::Index j = 0; j < a.cols(); ++j) {
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
      if (i != j && a(i, j) != cplx(0.0)) return false;
    }
  }
  return true;
}

// Projector onto the eigenspace of Lambda1 that grows under a positive-eta flow.
CMatrix growth_projector(const MeasurementOperator& m) {
  const double s = m.eta < 0.0 ? -1.0 : 1.0;
  const auto n = m.lambda1.rows();
  CMatrix p = CMatrix::Zero(n, n);
  if (is_diagonal(m.lambda1)) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (s * m.lambda1(i, i).real() > 0.0) p(i, i) = 1.0;
    }
    return p;
  }
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(s * m.lambda1);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (es.eigenvalues()(k) > 0.0) {
      p += es.eigenvectors().col(k) * es.eigenvectors().col(k).adjoint();
    }
  }
  return p;
}

CMatrix unitary_exp(const CMatrix& h, double t) {
  const Eigen::SelfAdjointEigenSolver<CMatrix> es(h);
  const Eigen::VectorXcd ph = (es.eigenvalues().cast<cplx>() * cplx(0.0, -t)).array().exp();
  return es.eigenvectors() * ph.asDiagonal() * es.eigenvectors().adjoint();
}

constexpr double kTieGap = 1e-6;

// Collapse game on a fixed matrix type; Matrix2cd for the common 2x2 case.
template <class M>
class Game {
 public:
  Game(const MeasurementOperator& m, const CollapseOptions& opt) : opt_(opt), n_(m.dim()) {
    m.validate();
    if (m.eta == 0.0) {
      throw DomainError("collapse: eta = 0 has no collapse dynamics");
    }
    const double s = m.eta < 0.0 ? -1.0 : 1.0;
    l1_ = M(s * m.lambda1);
    has_l2_ = m.lambda2.size() > 0 && !m.lambda2.isZero(0.0);
    if (has_l2_) l2_ = M(s * m.lambda2);
    proj_ = M(growth_projector(m));
    row0_ = n_ == 2 && is_diagonal(m.lambda1) && proj_(0, 0) == cplx(1.0) && proj_(1, 1) == cplx(0.0);
    stage_time_ = std::numbers::pi / std::abs(m.eta);
  }

  std::pair<double, double> fortunes(const M& c) const {
    const double total = c.squaredNorm();
    const double y0 = row0_ ? c.row(0).squaredNorm() : (proj_ * c).squaredNorm();
    return {y0, total - y0};
  }

  double measure(cplx d) const {
    return n_ == 2 ? std::abs(d) : std::pow(std::abs(d), 2.0 / n_);
  }

  bool at_boundary(const M& c) const {
    if (!(measure(detail::det_of(c)) > opt_.eps_fact)) return true;
    const auto [y0, y1] = fortunes(c);
    return std::min(y0, y1) <= opt_.eps_fact;
  }

  template <class Stop>
  FlowResult<M> flow(const M& c0, double t0, int sign, const Stop& stop, double t_max, std::size_t stride,
                     const std::vector<double>& outs) const {
    const cplx d0 = detail::det_of(c0);
    const cplx ref = std::abs(d0) > 0.0 ? d0 / std::abs(d0) : cplx(1.0);
    const double sg = static_cast<double>(sign);
    auto rhs = [&](double, const M& c) -> M {
      const M h = detail::hat_of(c, 0.0);
      if (has_l2_) return sg * (l1_ * h + h * l2_);
      return sg * (l1_ * h);
    };
    auto events = [&](const M& c) -> int {
      const cplx d = detail::det_of(c);
      if (!(measure(d) > opt_.eps_fact)) return 0;
      if (std::real(d * std::conj(ref)) <= 0.0) return 0;
      if (stop(c)) return 1;
      return kNoEvent;
    };
    FlowOptions fo;
    fo.dt = opt_.dt;
    fo.t_max = t_max;
    fo.sample_stride = stride;
    fo.output_times = outs;
    auto mu = [this](const M& c) { return measure(detail::det_of(c)); };
    DriftGuard<M, decltype(mu)> guard(opt_.max_norm_drift, opt_.dt, mu);
    return integrate_rk4(rhs, c0, t0, events, fo, guard);
  }

  M snap(const M& c) const { return M(factorized_projection(CMatrix(c))); }

  int outcome_of(const M& c) const {
    const auto [y0, y1] = fortunes(c);
    return y0 >= y1 ? 0 : 1;
  }

  // Advances (c, t) by one play. Returns true when the game ended.
  bool play(M& c, double& t, RngStream& rng, Trajectory& traj) const {
    const auto [y0, y1] = fortunes(c);
    if (at_boundary(c)) {
      throw DomainError("play: state is already factorized");
    }
    const int sign = rng.sign();
    const int small = y0 <= y1 ? 0 : 1;
    const double z = small == 0 ? y0 : y1;
    // A doubling that would exhaust the other fortune is a factorization.
    const double target = (y0 + y1) - 2.0 * z > kTieGap * (y0 + y1) ? 2.0 * z : std::numeric_limits<double>::infinity();
    auto stop = [&](const M& x) {
      const auto [a, b] = fortunes(x);
      return (small == 0 ? a : b) >= target;
    };
    const auto res = flow(c, t, sign, stop, t + 100.0 * stage_time_, opt_.sample_stride, {});
    if (res.stop == FlowStop::TimeLimit) {
      throw NumericError("play: no boundary reached within the time limit");
    }
    append(traj, res.samples);

    PlayRecord rec;
    rec.sign = sign;
    rec.stake = z;
    rec.t_start = t;
    rec.t_end = res.t;
    rec.tau_start = traj.tau;

    const bool terminal = res.event != 1 || at_boundary(res.x);
    c = terminal ? snap(res.x) : res.x;
    t = res.t;
    rec.tau_end = rec.tau_start + std::abs(fortunes(c).first - y0);
    traj.tau = rec.tau_end;
    traj.plays.push_back(rec);
    return terminal;
  }

  void finish(Trajectory& traj, const M& c, double t) const {
    traj.final_state = CMatrix(c);
    traj.outcome = outcome_of(c);
    traj.termination_time = t;
    push_sample(traj, t, c);
  }

  void run(M c, double t, RngStream& rng, Trajectory& traj) const {
    push_sample(traj, t, c);
    if (at_boundary(c)) {
      finish(traj, snap(c), t);
      return;
    }
    for (std::size_t p = 0;; ++p) {
      if (p >= opt_.max_plays) {
        throw NumericError("collapse: exceeded " + std::to_string(opt_.max_plays) + " plays");
      }
      if (play(c, t, rng, traj)) break;
    }
    finish(traj, c, t);
  }

  static void push_sample(Trajectory& traj, double t, const M& c) {
    if (!traj.samples.empty() && traj.samples.back().t == t) {
      traj.samples.back().c = CMatrix(c);
      return;
    }
    traj.samples.push_back({t, CMatrix(c)});
  }

  static void append(Trajectory& traj, const std::vector<FlowSample<M>>& s) {
    for (const auto& x : s) push_sample(traj, x.t, x.x);
  }

  const CollapseOptions& options() const { return opt_; }
  double stage_time() const { return stage_time_; }

 private:
  const CollapseOptions& opt_;
  int n_;
  M l1_;
  M l2_;
  bool has_l2_ = false;
  M proj_;
  bool row0_ = false;
  double stage_time_ = 0.0;
};

template <class M>
Trajectory flow_impl(const BipartiteState& s0, const MeasurementOperator& m, int sign, const CollapseOptions& opt,
                     const std::function<bool(const CMatrix&)>& stop) {
  const Game<M> g(m, opt);
  const M c0(s0.matrix());
  Trajectory traj;
  Game<M>::push_sample(traj, 0.0, c0);
  auto pred = [&](const M& c) { return stop ? stop(CMatrix(c)) : false; };
  const auto res = g.flow(c0, 0.0, sign, pred, 1e3 * g.stage_time(), opt.sample_stride, opt.output_times);
  if (res.stop == FlowStop::TimeLimit) {
    throw NumericError("flow_deterministic: no boundary reached within the time limit");
  }
  Game<M>::append(traj, res.samples);
  if (res.event == 1) {
    traj.final_state = CMatrix(res.x);
    Game<M>::push_sample(traj, res.t, res.x);
  } else {
    g.finish(traj, g.snap(res.x), res.t);
  }
  return traj;
}

template <class M>
PlayResult play_impl(const BipartiteState& s, const MeasurementOperator& m, RngStream& rng,
                     const CollapseOptions& opt) {
  const Game<M> g(m, opt);
  M c(s.matrix());
  double t = 0.0;
  PlayResult out;
  Game<M>::push_sample(out.segment, t, c);
  out.terminal = g.play(c, t, rng, out.segment);
  out.record = out.segment.plays.back();
  if (out.terminal) {
    g.finish(out.segment, c, t);
  } else {
    out.segment.final_state = CMatrix(c);
    Game<M>::push_sample(out.segment, t, c);
  }
  return out;
}

template <class M>
Trajectory collapse_impl(const BipartiteState& s0, const MeasurementOperator& m, RngStream& rng,
                         const CollapseOptions& opt) {
  const Game<M> g(m, opt);
  Trajectory traj;
  g.run(M(s0.matrix()), 0.0, rng, traj);
  return traj;
}

void check_dims(const BipartiteState& s, const MeasurementOperator& m) {
  if (s.dim() != m.dim()) {
    throw std::invalid_argument("state and measurement operator dimensions differ");
  }
}

}  // namespace

MeasurementOperator MeasurementOperator::canonical(double eta) {
  MeasurementOperator m;
  m.eta = eta;
  m.lambda1 = CMatrix::Zero(2, 2);
  m.lambda1(0, 0) = 0.5 * eta;
  m.lambda1(1, 1) = -0.5 * eta;
  m.lambda2 = CMatrix::Zero(2, 2);
  return m;
}

MeasurementOperator MeasurementOperator::one_sided(CMatrix lambda1, double eta) {
  MeasurementOperator m;
  m.eta = eta;
  m.lambda2 = CMatrix::Zero(lambda1.rows(), lambda1.cols());
  m.lambda1 = std::move(lambda1);
  m.validate();
  return m;
}

void MeasurementOperator::validate() const {
  if (lambda1.rows() == 0 || lambda1.rows() != lambda1.cols() || lambda2.rows() != lambda1.rows() ||
      lambda2.cols() != lambda1.cols()) {
    throw std::invalid_argument("MeasurementOperator: blocks must be square with equal dimension");
  }
  if (!is_hermitian(lambda1, kHermTol) || !is_hermitian(lambda2, kHermTol)) {
    throw std::invalid_argument("MeasurementOperator: blocks must be hermitian");
  }
  if (std::abs(lambda1.trace() + lambda2.trace()) > kHermTol) {
    throw std::invalid_argument("MeasurementOperator: Tr(lambda1) + Tr(lambda2) must vanish");
  }
}

HamiltonianPair HamiltonianPair::zero(int n) { return {CMatrix::Zero(n, n), CMatrix::Zero(n, n)}; }

void HamiltonianPair::validate() const {
  if (!is_hermitian(h1, kHermTol) || !is_hermitian(h2, kHermTol)) {
    throw std::invalid_argument("HamiltonianPair: both Hamiltonians must be hermitian");
  }
}

TwoBodyCoupling TwoBodyCoupling::spin_spin(double gamma) {
  TwoBodyCoupling r;
  r.n = 2;
  const cplx g(0.0, 0.5 * gamma);
  r.entries = {{0, 0, 1, 1, g}, {1, 1, 0, 0, g}};
  return r;
}

CMatrix TwoBodyCoupling::apply(const CMatrix& c) const {
  if (c.rows() != n || c.cols() != n) {
    throw std::invalid_argument("TwoBodyCoupling: dimension mismatch");
  }
  CMatrix out = CMatrix::Zero(n, n);
  for (const auto& e : entries) out(e.j, e.k) += e.value * c(e.l, e.m);
  return out;
}

CMatrix rhs_modified(const CMatrix& c, const MeasurementOperator& m, const HamiltonianPair& h,
                     const TwoBodyCoupling* r, double eps) {
  const auto n = c.rows();
  CMatrix out = CMatrix::Zero(n, n);
  if (m.eta != 0.0) {
    const CMatrix hc = hat(c, eps);
    out += m.lambda1 * hc + hc * m.lambda2;
  }
  if (h.h1.size() > 0) out -= cplx(0.0, 1.0) * (h.h1 * c);
  if (h.h2.size() > 0) out -= cplx(0.0, 1.0) * (c * h.h2);
  if (r != nullptr) out += r->apply(c);
  return out;
}

CMatrix rhs_modified(const BipartiteState& s, const MeasurementOperator& m, const HamiltonianPair& h,
                     const TwoBodyCoupling* r, double eps) {
  return rhs_modified(s.matrix(), m, h, r, eps);
}

BipartiteState to_interaction_picture(const BipartiteState& s, const HamiltonianPair& h, double t) {
  h.validate();
  return BipartiteState::normalized(unitary_exp(h.h1, t) * s.matrix() * unitary_exp(h.h2, t));
}

std::pair<double, double> fortunes(const CMatrix& c, const MeasurementOperator& m) {
  const CMatrix p = growth_projector(m);
  const double total = c.squaredNorm();
  const double y0 = (p * c).squaredNorm();
  return {y0, total - y0};
}

std::pair<double, double> fortunes(const BipartiteState& s, const MeasurementOperator& m) {
  return fortunes(s.matrix(), m);
}

Trajectory flow_deterministic(const BipartiteState& s0, const MeasurementOperator& m, int sign,
                              const CollapseOptions& opt, const std::function<bool(const CMatrix&)>& stop) {
  check_dims(s0, m);
  if (sign != 1 && sign != -1) throw std::invalid_argument("flow_deterministic: sign must be +1 or -1");
  if (!(opt.dt > 0.0)) throw std::invalid_argument("flow_deterministic: dt must be positive");
  if (s0.dim() == 2) return flow_impl<CMatrix2>(s0, m, sign, opt, stop);
  return flow_impl<CMatrix>(s0, m, sign, opt, stop);
}

std::pair<double, double> analytic_y(double alpha, double eta, double t, int sign) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("analytic_y: alpha must lie in (0, 1)");
  if (!(eta > 0.0)) throw DomainError("analytic_y: eta must be positive");
  const double t0 = termination_time(alpha, eta, sign);
  if (t < 0.0 || t > t0 * (1.0 + 1e-12)) throw DomainError("analytic_y: t outside [0, termination_time]");
  const double a = std::asin(1.0 - 2.0 * alpha);
  const double y0 = sign > 0 ? 0.5 * (1.0 + std::sin(eta * t - a)) : 0.5 * (1.0 - std::sin(eta * t + a));
  return {y0, 1.0 - y0};
}

double termination_time(double alpha, double eta, int sign) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("termination_time: alpha must lie in (0, 1)");
  if (!(eta > 0.0)) throw DomainError("termination_time: eta must be positive");
  const double a = std::asin(1.0 - 2.0 * alpha);
  return (0.5 * std::numbers::pi + (sign > 0 ? a : -a)) / eta;
}

PlayResult play(const BipartiteState& s, const MeasurementOperator& m, RngStream& rng, const CollapseOptions& opt) {
  check_dims(s, m);
  if (s.dim() == 2) return play_impl<CMatrix2>(s, m, rng, opt);
  return play_impl<CMatrix>(s, m, rng, opt);
}

Trajectory collapse(const BipartiteState& s0, const MeasurementOperator& m, RngStream& rng,
                    const CollapseOptions& opt) {
  check_dims(s0, m);
  if (s0.dim() == 2) return collapse_impl<CMatrix2>(s0, m, rng, opt);
  return collapse_impl<CMatrix>(s0, m, rng, opt);
}

CMatrix transfer_V(const CMatrix& c, double eps) {
  const double meas = det_measure(c);
  if (!(meas > eps)) throw DomainError("transfer_V: singular state");
  return meas * (c * c.adjoint()).inverse();
}

CMatrix transfer_Z(const CMatrix& c, const CMatrix& lambda1, double dt, double eps) {
  return CMatrix::Identity(c.rows(), c.cols()) + dt * lambda1 * transfer_V(c, eps);
}

CMatrix transfer_step(const CMatrix& c, const MeasurementOperator& m, double dt, double eps) {
  return transfer_Z(c, m.lambda1, dt, eps) * c;
}

CMatrix euler_step(const CMatrix& c, const MeasurementOperator& m, double dt, double eps) {
  return c + dt * (m.lambda1 * hat(c, eps));
}

CellSplit cell_split(const CMatrix& c) {
  if (c.rows() != 2 || c.cols() != 2) throw std::invalid_argument("cell_split: 2x2 states only");
  CellSplit out;
  out.diagonal = CMatrix::Zero(2, 2);
  out.anti_diagonal = CMatrix::Zero(2, 2);
  out.diagonal(0, 0) = c(0, 0);
  out.diagonal(1, 1) = c(1, 1);
  out.anti_diagonal(0, 1) = c(0, 1);
  out.anti_diagonal(1, 0) = c(1, 0);
  out.weight_diagonal = out.diagonal.squaredNorm();
  out.weight_anti_diagonal = out.anti_diagonal.squaredNorm();
  return out;
}

std::vector<TrajectoryOutcome> run_ensemble(const BipartiteState& s0, const MeasurementOperator& m,
                                            std::size_t count, std::uint64_t seed, const EnsembleOptions& opt) {
  check_dims(s0, m);
  CollapseOptions co = opt.collapse;
  co.sample_stride = 0;
  co.output_times.clear();
  return parallel_map(count, opt.threads, [&](std::size_t i) {
    RngStream rng(seed, i);
    const Trajectory tr = collapse(s0, m, rng, co);
    TrajectoryOutcome o;
    o.outcome = tr.outcome.value_or(-1);
    o.termination_time = tr.termination_time.value_or(0.0);
    o.plays = tr.plays.size();
    o.tau = tr.tau;
    return o;
  });
}

EnsembleStats summarize_ensemble(const std::vector<TrajectoryOutcome>& runs, int dim) {
  EnsembleStats st;
  st.count = runs.size();
  st.outcome_counts.assign(static_cast<std::size_t>(std::max(dim, 2)), 0);
  std::vector<double> times;
  std::vector<double> plays;
  times.reserve(runs.size());
  plays.reserve(runs.size());
  for (const auto& r : runs) {
    if (r.outcome >= 0 && static_cast<std::size_t>(r.outcome) < st.outcome_counts.size()) {
      ++st.outcome_counts[static_cast<std::size_t>(r.outcome)];
    }
    times.push_back(r.termination_time);
    plays.push_back(static_cast<double>(r.plays));
  }
  st.outcome_frequency.resize(st.outcome_counts.size());
  for (std::size_t k = 0; k < st.outcome_counts.size(); ++k) {
    st.outcome_frequency[k] =
        runs.empty() ? 0.0 : static_cast<double>(st.outcome_counts[k]) / static_cast<double>(runs.size());
  }
  if (!runs.empty()) {
    st.collapse_time = summarize(times);
    st.plays = summarize(plays);
  }
  return st;
}

EnsembleStats born_ensemble(const BipartiteState& s0, const MeasurementOperator& m, std::size_t count,
                            std::uint64_t seed, const EnsembleOptions& opt) {
  if (count == 0) throw std::invalid_argument("born_ensemble: count must be at least 1");
  return summarize_ensemble(run_ensemble(s0, m, count, seed, opt), s0.dim());
}

}  // namespace inl
