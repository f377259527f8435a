// Copyright 2026 The vbsprep Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Limited-memory BFGS with simple bound constraints.
//
// Active-set variant: variables sitting on a bound with the gradient pushing
// outward are frozen for the iteration, the two-loop recursion supplies the
// direction on the free set, and a projected backtracking (Armijo) search
// keeps every iterate inside the box.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <span>
#include <string_view>
#include <vector>

#include "vbs/error.hpp"

namespace vbs {

struct BoxMinimizerOptions {
  int max_iterations = 600;
  int memory = 10;
  /// Stop when the projected gradient's infinity norm drops below this.
  double gradient_tolerance = 1e-10;
  /// Stop when (f_k - f_{k+1}) / max(|f_k|, |f_{k+1}|, 1) <= this.
  double relative_tolerance = 1e-13;
  /// Stop as soon as f < target_value.
  double target_value = -std::numeric_limits<double>::infinity();
  int max_line_search_steps = 40;
  double armijo_c1 = 1e-4;
};

enum class BoxStopReason {
  GradientTolerance,
  RelativeReduction,
  TargetReached,
  MaxIterations,
  LineSearchFailed,
};

inline std::string_view to_string(BoxStopReason r) {
  switch (r) {
    case BoxStopReason::GradientTolerance: return "gradient-tolerance";
    case BoxStopReason::RelativeReduction: return "relative-reduction";
    case BoxStopReason::TargetReached: return "target-reached";
    case BoxStopReason::MaxIterations: return "max-iterations";
    case BoxStopReason::LineSearchFailed: return "line-search-failed";
  }
  return "?";
}

struct BoxMinimizerResult {
  std::vector<double> x;
  double value = 0;
  int iterations = 0;
  int evaluations = 0;
  BoxStopReason reason = BoxStopReason::MaxIterations;
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm_inf(std::span<const double> a) {
  double m = 0;
  for (double v : a) m = std::max(m, std::abs(v));
  return m;
}

struct CurvaturePair {
  std::vector<double> s, y;
  double rho;
};

}  // namespace detail

/// Minimizes f over lower <= x <= upper.
///
/// fg(x, grad) must return f(x) and write the gradient into grad.
template <class Objective>
BoxMinimizerResult minimize_box(Objective&& fg, std::vector<double> x,
                                std::span<const double> lower,
                                std::span<const double> upper,
                                const BoxMinimizerOptions& opt = {}) {
  const std::size_t n = x.size();
  if (lower.size() != n || upper.size() != n) {
    throw InvalidArgument("minimize_box: bound sizes do not match x");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!(lower[i] <= upper[i])) throw InvalidArgument("minimize_box: empty box");
  }
  auto project = [&](std::vector<double>& v) {
    for (std::size_t i = 0; i < n; ++i) v[i] = std::clamp(v[i], lower[i], upper[i]);
  };

  BoxMinimizerResult res;
  project(x);
  std::vector<double> g(n), trial(n), g_trial(n), d(n), alpha_hist;
  double f = fg(std::span<const double>(x), std::span<double>(g));
  res.evaluations = 1;

  auto finish = [&](BoxStopReason why) {
    res.x = x;
    res.value = f;
    res.reason = why;
    return res;
  };
  if (f < opt.target_value) return finish(BoxStopReason::TargetReached);

  std::deque<detail::CurvaturePair> memory;
  std::vector<char> free(n);

  for (res.iterations = 0; res.iterations < opt.max_iterations;) {
    double pg_norm = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double step = std::clamp(x[i] - g[i], lower[i], upper[i]) - x[i];
      pg_norm = std::max(pg_norm, std::abs(step));
      free[i] = !((x[i] <= lower[i] && g[i] > 0) || (x[i] >= upper[i] && g[i] < 0));
    }
    if (pg_norm < opt.gradient_tolerance) return finish(BoxStopReason::GradientTolerance);

    bool accepted = false;
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      // Two-loop recursion: d = -H g restricted to the free set.
      for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -g[i] : 0.0;
      if (!memory.empty()) {
        alpha_hist.assign(memory.size(), 0.0);
        for (std::size_t k = memory.size(); k-- > 0;) {
          const auto& p = memory[k];
          alpha_hist[k] = p.rho * detail::dot(p.s, d);
          for (std::size_t i = 0; i < n; ++i) d[i] -= alpha_hist[k] * p.y[i];
        }
        const auto& last = memory.back();
        const double gamma = detail::dot(last.s, last.y) / detail::dot(last.y, last.y);
        for (double& v : d) v *= gamma;
        for (std::size_t k = 0; k < memory.size(); ++k) {
          const auto& p = memory[k];
          const double beta = p.rho * detail::dot(p.y, d);
          for (std::size_t i = 0; i < n; ++i) d[i] += (alpha_hist[k] - beta) * p.s[i];
        }
        for (std::size_t i = 0; i < n; ++i) {
          if (!free[i]) d[i] = 0.0;
        }
        if (detail::dot(g, d) >= 0) {
          memory.clear();
          for (std::size_t i = 0; i < n; ++i) d[i] = free[i] ? -g[i] : 0.0;
        }
      }

      const double dmax = detail::norm_inf(d);
      if (dmax == 0) return finish(BoxStopReason::GradientTolerance);
      double alpha = memory.empty() ? std::min(1.0, 1.0 / dmax) : 1.0;
      double f_trial = f;
      for (int ls = 0; ls < opt.max_line_search_steps; ++ls) {
        for (std::size_t i = 0; i < n; ++i) trial[i] = x[i] + alpha * d[i];
        project(trial);
        f_trial = fg(std::span<const double>(trial), std::span<double>(g_trial));
        ++res.evaluations;
        double decrease = 0;
        for (std::size_t i = 0; i < n; ++i) decrease += g[i] * (trial[i] - x[i]);
        if (std::isfinite(f_trial) && f_trial <= f + opt.armijo_c1 * decrease) {
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
      if (!accepted) {
        if (memory.empty()) return finish(BoxStopReason::LineSearchFailed);
        memory.clear();  // retry once along the projected steepest descent
      } else {
        ++res.iterations;
        detail::CurvaturePair pair{std::vector<double>(n), std::vector<double>(n), 0.0};
        for (std::size_t i = 0; i < n; ++i) {
          pair.s[i] = trial[i] - x[i];
          pair.y[i] = g_trial[i] - g[i];
        }
        const double sy = detail::dot(pair.s, pair.y);
        if (sy > 1e-12 * detail::dot(pair.y, pair.y)) {
          pair.rho = 1.0 / sy;
          memory.push_back(std::move(pair));
          if (static_cast<int>(memory.size()) > opt.memory) memory.pop_front();
        }
        const double rel = (f - f_trial) / std::max({std::abs(f), std::abs(f_trial), 1.0});
        x.swap(trial);
        g.swap(g_trial);
        f = f_trial;
        if (f < opt.target_value) return finish(BoxStopReason::TargetReached);
        if (rel <= opt.relative_tolerance) return finish(BoxStopReason::RelativeReduction);
      }
    }
  }
  return finish(BoxStopReason::MaxIterations);
}

}  // namespace vbs
