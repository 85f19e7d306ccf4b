#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "inl/errors.hpp"

namespace inl {

struct FlowOptions {
  double dt = 1e-3;
  double t_max = 1e3;
  /// Width to which event times are bisected; 0 selects min(dt^2, 1e-10).
  double event_tol = 0.0;
  /// Bound on the change of the squared norm over one full step (the final
  /// event-bracketed step is exempt). Infinite disables it.
  double max_norm_drift = std::numeric_limits<double>::infinity();
  /// Record every k-th accepted step (0 records none).
  std::size_t sample_stride = 0;
  /// Sorted times at which the integrator lands exactly and records a sample.
  std::vector<double> output_times;
};

enum class FlowStop { Event, TimeLimit };

/// Event code reported when the right-hand side threw DomainError.
inline constexpr int kDomainEvent = -2;
inline constexpr int kNoEvent = -1;

template <class State>
struct FlowSample {
  double t;
  State x;
};

template <class State>
struct FlowResult {
  State x;
  double t = 0.0;
  FlowStop stop = FlowStop::TimeLimit;
  int event = kNoEvent;
  std::size_t steps = 0;
  std::vector<FlowSample<State>> samples;
};

namespace detail {

inline std::string fmt_sci(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", x);
  return buf;
}

template <class State>
struct StepTrial {
  State x;
  int event = kNoEvent;
};

// One classical RK4 step of size h. Events are checked on every stage point
// before the right-hand side is evaluated there, so a step that would carry a
// stage across a boundary is reported as fired instead of being evaluated on
// the far side.
template <class State, class Rhs, class Events>
StepTrial<State> rk4_trial(const Rhs& rhs, const State& x, double t, double h, const Events& events) {
  StepTrial<State> out;
  try {
    const State k1 = rhs(t, x);
    State p = x + (0.5 * h) * k1;
    if ((out.event = events(p)) != kNoEvent) return out;
    const State k2 = rhs(t + 0.5 * h, p);
    p = x + (0.5 * h) * k2;
    if ((out.event = events(p)) != kNoEvent) return out;
    const State k3 = rhs(t + 0.5 * h, p);
    p = x + h * k3;
    if ((out.event = events(p)) != kNoEvent) return out;
    const State k4 = rhs(t + h, p);
    out.x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out.event = events(out.x);
  } catch (const DomainError&) {
    out.event = kDomainEvent;
  }
  return out;
}

}  // namespace detail

/// Fixed-step RK4 with event location.
///
/// `rhs(t, x)` returns dx/dt. `events(x)` returns the index of the first event
/// function that has fired at x, or kNoEvent. A step whose stages or end point
/// fire is bisected on its length until the bracket is narrower than the event
/// tolerance; the flow then stops on the last non-fired state. `observe(t, x)`
/// sees the initial state and every accepted step.
template <class State, class Rhs, class Events, class Observer>
FlowResult<State> integrate_rk4(const Rhs& rhs, State x0, double t0, const Events& events,
                                const FlowOptions& opt, Observer&& observe) {
  if (!(opt.dt > 0.0)) {
    throw std::invalid_argument("integrate_rk4: dt must be positive");
  }
  const double tol = opt.event_tol > 0.0 ? opt.event_tol : std::min(opt.dt * opt.dt, 1e-10);

  FlowResult<State> res;
  State x = std::move(x0);
  double t = t0;

  auto check_drift = [&](const State& before, const State& after) {
    if (std::isfinite(opt.max_norm_drift)) {
      const double drift = std::abs(after.squaredNorm() - before.squaredNorm());
      if (drift > opt.max_norm_drift) {
        throw StepTooLarge("integrate_rk4: norm drift " + detail::fmt_sci(drift) + " in one step at t = " +
                           std::to_string(t));
      }
    }
  };

  std::size_t next_out = 0;
  const auto& outs = opt.output_times;
  while (next_out < outs.size() && outs[next_out] < t0) ++next_out;
  if (opt.sample_stride > 0) res.samples.push_back({t, x});
  if (next_out < outs.size() && outs[next_out] == t0) {
    if (opt.sample_stride == 0) res.samples.push_back({t, x});
    ++next_out;
  }

  observe(t, x);
  if (const int e = events(x); e != kNoEvent) {
    res.stop = FlowStop::Event;
    res.event = e;
    res.x = std::move(x);
    res.t = t;
    return res;
  }

  while (true) {
    if (t >= opt.t_max) {
      res.stop = FlowStop::TimeLimit;
      break;
    }
    double target = std::min(t + opt.dt, opt.t_max);
    bool on_output = false;
    if (next_out < outs.size() && outs[next_out] <= target) {
      target = outs[next_out];
      on_output = true;
    }
    const double h = target - t;
    auto trial = detail::rk4_trial(rhs, x, t, h, events);
    if (trial.event == kNoEvent) {
      check_drift(x, trial.x);
      x = std::move(trial.x);
      t = target;
      ++res.steps;
      observe(t, x);
      if (on_output) {
        res.samples.push_back({t, x});
        ++next_out;
      } else if (opt.sample_stride > 0 && res.steps % opt.sample_stride == 0) {
        res.samples.push_back({t, x});
      }
      continue;
    }

    double lo = 0.0;
    double hi = h;
    int fired = trial.event;
    State x_lo = x;
    while (hi - lo > tol) {
      const double mid = 0.5 * (lo + hi);
      auto probe = detail::rk4_trial(rhs, x, t, mid, events);
      if (probe.event == kNoEvent) {
        lo = mid;
        x_lo = std::move(probe.x);
      } else {
        hi = mid;
        fired = probe.event;
      }
    }
    // The bracketed step ends next to the event surface, where the flow may be
    // singular; the drift guard covers full steps only.
    if (lo > 0.0) {
      x = std::move(x_lo);
      t += lo;
      ++res.steps;
      observe(t, x);
    }
    res.stop = FlowStop::Event;
    res.event = fired;
    break;
  }

  if (opt.sample_stride > 0 && (res.samples.empty() || res.samples.back().t != t)) {
    res.samples.push_back({t, x});
  }
  res.x = std::move(x);
  res.t = t;
  return res;
}

template <class State, class Rhs, class Events>
FlowResult<State> integrate_rk4(const Rhs& rhs, State x0, double t0, const Events& events,
                                const FlowOptions& opt) {
  return integrate_rk4(rhs, std::move(x0), t0, events, opt, [](double, const State&) {});
}

/// Observer enforcing a per-step norm-drift bound away from a singular
/// boundary. `measure(x)` vanishes on the boundary; a step is exempt when a
/// linear extrapolation of the measure reaches zero within `layer_steps`
/// steps of size dt, since the flow there is not smooth in t.
template <class State, class Measure>
class DriftGuard {
 public:
  DriftGuard(double limit, double dt, Measure measure, double layer_steps = 50.0)
      : limit_(limit), dt_(dt), layer_steps_(layer_steps), measure_(std::move(measure)) {}

  void operator()(double t, const State& x) {
    const double n2 = x.squaredNorm();
    const double mu = measure_(x);
    if (started_) {
      const double h = t - t_;
      const double rate = h > 0.0 ? (mu_ - mu) / h : 0.0;
      const bool in_layer = rate > 0.0 && mu < layer_steps_ * dt_ * rate;
      const double drift = std::abs(n2 - n2_);
      if (!in_layer && drift > limit_) {
        throw StepTooLarge("norm drift " + detail::fmt_sci(drift) + " in one step at t = " + detail::fmt_sci(t) +
                           "; reduce dt");
      }
    }
    started_ = true;
    t_ = t;
    n2_ = n2;
    mu_ = mu;
  }

 private:
  double limit_;
  double dt_;
  double layer_steps_;
  Measure measure_;
  bool started_ = false;
  double t_ = 0.0;
  double n2_ = 0.0;
  double mu_ = 0.0;
};

}  // namespace inl
