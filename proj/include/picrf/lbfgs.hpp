#pragma once

// Limited-memory BFGS minimizer with a strong-Wolfe line search.
//
// J. Nocedal, "Updating Quasi-Newton Matrices with Limited Storage",
// Mathematics of Computation 35(151), 1980; line search after Nocedal &
// Wright, Numerical Optimization, 2nd ed., algorithms 3.5 and 3.6.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <span>
#include <string>
#include <vector>

namespace picrf {

struct LbfgsOptions {
  std::size_t history = 7;
  std::size_t max_iterations = 500;
  double relative_tolerance = 1e-6;
  double gradient_tolerance = 1e-8;  // max-norm
  /// The relative-change test only counts once the gradient max-norm is
  /// below this; slow tails otherwise stop far from the optimum.
  double relative_tolerance_gradient = 1e-3;
  double c1 = 1e-4;
  double c2 = 0.9;
  std::size_t max_line_search = 40;
};

enum class Termination { RelativeTolerance, GradientTolerance, MaxIterations, LineSearchFailed };

inline std::string to_string(Termination t) {
  switch (t) {
    case Termination::RelativeTolerance: return "relative-tolerance";
    case Termination::GradientTolerance: return "gradient-tolerance";
    case Termination::MaxIterations: return "max-iterations";
    case Termination::LineSearchFailed: return "line-search-failed";
  }
  return "?";
}

struct LbfgsIteration {
  std::size_t iteration = 0;
  double value = 0;
  double gradient_max_norm = 0;
  std::size_t evaluations = 0;  // function evaluations spent in this iteration
};

struct LbfgsResult {
  Termination termination = Termination::MaxIterations;
  std::size_t iterations = 0;
  double value = 0;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_norm(std::span<const double> a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

// Minimizer of the cubic interpolating (a, fa, da) and (b, fb, db),
// safeguarded to stay well inside the bracket.
inline double cubic_step(double a, double fa, double da, double b, double fb, double db) {
  const double lo = std::min(a, b), hi = std::max(a, b), width = hi - lo;
  const double d1 = da + db - 3 * (fa - fb) / (a - b);
  const double disc = d1 * d1 - da * db;
  double x = 0.5 * (a + b);
  if (disc >= 0) {
    const double d2 = std::copysign(std::sqrt(disc), b - a);
    const double denom = db - da + 2 * d2;
    if (denom != 0) x = b - (b - a) * (db + d2 - d1) / denom;
  }
  if (!std::isfinite(x) || x < lo + 0.1 * width || x > hi - 0.1 * width) x = 0.5 * (a + b);
  return x;
}

}  // namespace detail

/// Minimizes `f`, which fills the gradient and returns the value:
///   double f(std::span<const double> x, std::span<double> grad)
/// `x` holds the start point and receives the last accepted iterate.
/// `on_iteration(const LbfgsIteration&)` runs after every accepted step.
template <class Fn, class Callback>
LbfgsResult lbfgs_minimize(Fn&& f, std::vector<double>& x, const LbfgsOptions& opt, Callback&& on_iteration) {
  const std::size_t n = x.size();
  std::vector<double> g(n), d(n), xt(n), gt(n);
  std::deque<std::vector<double>> s_hist, y_hist;
  std::deque<double> rho_hist;

  LbfgsResult result;
  double fx = f(std::span<const double>(x), std::span<double>(g));
  result.value = fx;
  if (detail::max_norm(g) < opt.gradient_tolerance) {
    result.termination = Termination::GradientTolerance;
    return result;
  }

  for (std::size_t iter = 1; iter <= opt.max_iterations; ++iter) {
    // Two-loop recursion: d = -H g.
    std::copy(g.begin(), g.end(), d.begin());
    std::vector<double> alpha(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alpha[i] = rho_hist[i] * detail::dot(s_hist[i], d);
      for (std::size_t k = 0; k < n; ++k) d[k] -= alpha[i] * y_hist[i][k];
    }
    double initial_step = 1.0;
    if (!s_hist.empty()) {
      const auto& y = y_hist.back();
      const double gamma = detail::dot(s_hist.back(), y) / detail::dot(y, y);
      for (auto& v : d) v *= gamma;
    } else {
      initial_step = 1.0 / std::max(1.0, std::sqrt(detail::dot(g, g)));
    }
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      const double beta = rho_hist[i] * detail::dot(y_hist[i], d);
      for (std::size_t k = 0; k < n; ++k) d[k] += s_hist[i][k] * (alpha[i] - beta);
    }
    for (auto& v : d) v = -v;
    double dg0 = detail::dot(d, g);
    if (!(dg0 < 0)) {
      // Not a descent direction: restart from steepest descent.
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
      for (std::size_t k = 0; k < n; ++k) d[k] = -g[k];
      dg0 = detail::dot(d, g);
      initial_step = 1.0 / std::max(1.0, std::sqrt(-dg0));
    }

    // Strong-Wolfe line search along d.
    std::size_t evals = 0;
    auto phi = [&](double step, double& dphi) {
      for (std::size_t k = 0; k < n; ++k) xt[k] = x[k] + step * d[k];
      const double v = f(std::span<const double>(xt), std::span<double>(gt));
      ++evals;
      dphi = detail::dot(gt, d);
      return v;
    };
    const double f0 = fx;
    auto armijo_fails = [&](double step, double v) { return !(v <= f0 + opt.c1 * step * dg0); };
    auto curvature_ok = [&](double dv) { return std::abs(dv) <= -opt.c2 * dg0; };

    bool accepted = false;
    double accepted_value = 0;
    // Trial state at xt/gt after an accepting return.
    auto zoom = [&](double lo, double flo, double dlo, double hi, double fhi, double dhi) {
      while (evals < opt.max_line_search) {
        const double step = detail::cubic_step(lo, flo, dlo, hi, fhi, dhi);
        double dv;
        const double v = phi(step, dv);
        if (armijo_fails(step, v) || v >= flo) {
          hi = step, fhi = v, dhi = dv;
        } else {
          if (curvature_ok(dv)) {
            accepted = true;
            accepted_value = v;
            return;
          }
          if (dv * (hi - lo) >= 0) hi = lo, fhi = flo, dhi = dlo;
          lo = step, flo = v, dlo = dv;
        }
        if (std::abs(hi - lo) < 1e-16 * std::max(1.0, std::abs(lo))) break;
      }
      // Fall back to the best sufficient-decrease point seen, if any.
      if (lo > 0 && !armijo_fails(lo, flo)) {
        double dv;
        accepted_value = phi(lo, dv);
        accepted = true;
      }
    };

    double prev_step = 0, prev_value = f0, prev_d = dg0;
    double step = initial_step;
    while (evals < opt.max_line_search) {
      double dv;
      const double v = phi(step, dv);
      if (!std::isfinite(v) || armijo_fails(step, v) || (prev_step > 0 && v >= prev_value)) {
        if (!std::isfinite(v)) {
          step = 0.5 * (prev_step + step);
          continue;
        }
        zoom(prev_step, prev_value, prev_d, step, v, dv);
        break;
      }
      if (curvature_ok(dv)) {
        accepted = true;
        accepted_value = v;
        break;
      }
      if (dv >= 0) {
        zoom(step, v, dv, prev_step, prev_value, prev_d);
        break;
      }
      prev_step = step, prev_value = v, prev_d = dv;
      step *= 2;
    }

    if (!accepted) {
      result.termination = Termination::LineSearchFailed;
      return result;
    }

    // Accept xt; update history.
    std::vector<double> s(n), y(n);
    for (std::size_t k = 0; k < n; ++k) {
      s[k] = xt[k] - x[k];
      y[k] = gt[k] - g[k];
    }
    const double sy = detail::dot(s, y);
    if (sy > 0) {
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
      if (s_hist.size() > opt.history) {
        s_hist.pop_front();
        y_hist.pop_front();
        rho_hist.pop_front();
      }
    }
    x.swap(xt);
    g.swap(gt);
    const double previous = fx;
    fx = accepted_value;
    result.iterations = iter;
    result.value = fx;
    const double gnorm = detail::max_norm(g);
    on_iteration(LbfgsIteration{iter, fx, gnorm, evals});

    if (gnorm < opt.gradient_tolerance) {
      result.termination = Termination::GradientTolerance;
      return result;
    }
    if (gnorm < opt.relative_tolerance_gradient &&
        std::abs(previous - fx) / std::max(1.0, std::abs(fx)) < opt.relative_tolerance) {
      result.termination = Termination::RelativeTolerance;
      return result;
    }
  }
  result.termination = Termination::MaxIterations;
  return result;
}

}  // namespace picrf
