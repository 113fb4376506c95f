#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "peneo/optim.hpp"
#include "peneo/rng.hpp"

namespace peneo {

struct GradCheckOptions {
  double epsilon = 1e-5;
  // Coordinates whose relative error exceeds this get the reliability
  // re-probe below before they can fail the check.
  double fail_threshold = 1e-4;
  // Cap on checked coordinates per tensor; larger tensors are sampled
  // deterministically from the given seed.
  std::size_t max_coords_per_tensor = 256;
  std::uint64_t sample_seed = 17;
};

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t worst_coord = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t coords_checked = 0;
  // Coordinates where central differences at step eps and eps/2 disagree on
  // the order of the analytic mismatch. There the difference quotient itself
  // is unreliable (a ReLU kink inside the probe interval, or the roundoff
  // floor); a wrong backward pass instead yields two consistent quotients
  // that both contradict the analytic value, and still fails.
  std::size_t fd_unreliable_skipped = 0;
};

// Central-difference gradient check. loss_fn must be deterministic, evaluate
// the objective from the current parameter values, and leave the analytic
// gradients in the slots. Differences are formed in double regardless of T.
template <class T>
GradCheckReport grad_check(const std::function<double()>& loss_fn, ParamStoreT<T>& params,
                           const GradCheckOptions& opts = {}) {
  params.zero_grads();
  loss_fn();
  // Snapshot analytic gradients; FD evaluations below overwrite them.
  std::vector<TensorT<T>> analytic;
  analytic.reserve(params.slots.size());
  for (auto& s : params.slots) analytic.push_back(s->grad.clone());

  GradCheckReport report;
  Rng rng(opts.sample_seed);
  for (std::size_t si = 0; si < params.slots.size(); ++si) {
    auto& slot = *params.slots[si];
    const std::size_t n = slot.value.size();
    std::vector<std::size_t> coords;
    if (n <= opts.max_coords_per_tensor) {
      coords.resize(n);
      for (std::size_t i = 0; i < n; ++i) coords[i] = i;
    } else {
      for (std::size_t i = 0; i < opts.max_coords_per_tensor; ++i) {
        coords.push_back(static_cast<std::size_t>(rng.below(n)));
      }
    }
    for (std::size_t ci : coords) {
      const T saved = slot.value[ci];
      auto fd = [&](double eps) {
        slot.value[ci] = static_cast<T>(static_cast<double>(saved) + eps);
        params.zero_grads();
        const double up = loss_fn();
        slot.value[ci] = static_cast<T>(static_cast<double>(saved) - eps);
        params.zero_grads();
        const double down = loss_fn();
        slot.value[ci] = saved;
        return (up - down) / (2.0 * eps);
      };
      const double a = static_cast<double>(analytic[si][ci]);
      auto rel_of = [&](double numeric) {
        return std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      };
      const double numeric0 = fd(opts.epsilon);
      double numeric = numeric0;
      double rel = rel_of(numeric0);
      ++report.coords_checked;
      if (rel > opts.fail_threshold) {
        // The useful step size varies per coordinate: too small hits the
        // roundoff floor, too large straddles ReLU kinks. Accept the analytic
        // value if any scale confirms it; a wrong gradient matches at none.
        bool confirmed = false;
        for (double factor : {0.25, 4.0, 16.0}) {
          const double numeric_retry = fd(opts.epsilon * factor);
          const double rel_retry = rel_of(numeric_retry);
          if (rel_retry < rel) {
            rel = rel_retry;
            numeric = numeric_retry;
          }
          if (rel_retry <= opts.fail_threshold) {
            confirmed = true;
            break;
          }
        }
        if (!confirmed) {
          const double numeric_half = fd(opts.epsilon * 0.5);
          if (std::abs(numeric0 - numeric_half) > 0.3 * std::abs(a - numeric0)) {
            ++report.fd_unreliable_skipped;
            continue;
          }
        }
      }
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = slot.name;
        report.worst_coord = ci;
        report.worst_analytic = a;
        report.worst_numeric = numeric;
      }
    }
  }
  // Restore analytic gradients so callers can inspect them afterwards.
  for (std::size_t si = 0; si < params.slots.size(); ++si) {
    params.slots[si]->grad = analytic[si];
  }
  return report;
}

}  // namespace peneo
