#include "aad/eval/mesd.hpp"

#include <cmath>
#include <limits>

#include "aad/errors.hpp"

namespace aad::eval {

namespace {

constexpr double kNearOne = 1.0 - 1e-12;

}  // namespace

int comfort_state(int k, double comfort_gain) {
  // State j carries gain (j - 1) / (k - 1).
  const int j = 1 + static_cast<int>(
                        std::ceil(comfort_gain * static_cast<double>(k - 1) -
                                  1e-12));
  return std::min(k, std::max(1, j));
}

double stationary_comfort_mass(double p, int k, int k_bar) {
  if (p >= kNearOne) return 1.0;
  if (p <= 0.5) return static_cast<double>(k - k_bar + 1) / k;  // r <= 1 cap
  const double r = p / (1.0 - p);
  // pi_j proportional to r^j; normalize relative to the top state.
  double total = 0.0, comfort = 0.0;
  for (int j = 1; j <= k; ++j) {
    const double w = std::pow(r, static_cast<double>(j - k));
    total += w;
    if (j >= k_bar) comfort += w;
  }
  return comfort / total;
}

double expected_hitting_time(double p, int k_bar) {
  if (k_bar <= 1) return 0.0;
  if (p >= kNearOne) return static_cast<double>(k_bar - 1);
  if (p <= 0.5)
    throw_value("expected_hitting_time: needs p > 0.5, got ", p);
  const double q = 1.0 - p;
  const double rho = q / p;  // < 1
  // Sum over j of (1/p) (1 - rho^j) / (1 - rho), j = 1..k_bar-1.
  const double n = static_cast<double>(k_bar - 1);
  const double geo = rho * (1.0 - std::pow(rho, n)) / (1.0 - rho);
  return (n - geo) / (p * (1.0 - rho));
}

std::optional<int> minimal_state_count(double p, const MesdConfig& cfg) {
  if (p <= 0.5) return std::nullopt;
  for (int k = std::max(2, cfg.k_min); k <= cfg.k_max; ++k) {
    const int k_bar = comfort_state(k, cfg.comfort_gain);
    if (stationary_comfort_mass(p, k, k_bar) >= cfg.confidence) return k;
  }
  return std::nullopt;
}

std::optional<double> expected_switch_duration(double tau_s, double p,
                                               const MesdConfig& cfg) {
  const auto k = minimal_state_count(p, cfg);
  if (!k.has_value()) return std::nullopt;
  const int k_bar = comfort_state(*k, cfg.comfort_gain);
  return tau_s * expected_hitting_time(p, k_bar);
}

MesdResult mesd(const std::vector<AccuracyPoint>& points,
                const MesdConfig& cfg) {
  if (points.size() < 2)
    throw_value("mesd: need at least two (tau, p) points, got ",
                points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (points[i].tau_s <= 0.0)
      throw_value("mesd: tau must be positive, got ", points[i].tau_s);
    if (i > 0 && points[i].tau_s <= points[i - 1].tau_s)
      throw_value("mesd: tau grid must be strictly increasing (",
                  points[i - 1].tau_s, " then ", points[i].tau_s, ")");
    if (points[i].p < 0.0 || points[i].p > 1.0)
      throw_value("mesd: accuracy outside [0, 1]: ", points[i].p);
  }

  MesdResult result;
  double best = std::numeric_limits<double>::infinity();
  double best_tau = std::numeric_limits<double>::quiet_NaN();
  const int subdivisions = std::max(1, cfg.tau_subdivisions);
  for (std::size_t seg = 0; seg + 1 < points.size(); ++seg) {
    const auto& lo = points[seg];
    const auto& hi = points[seg + 1];
    const int last = seg + 2 == points.size() ? subdivisions : subdivisions - 1;
    for (int i = 0; i <= last; ++i) {
      const double frac = static_cast<double>(i) / subdivisions;
      const double tau = lo.tau_s + frac * (hi.tau_s - lo.tau_s);
      const double p = lo.p + frac * (hi.p - lo.p);
      const auto esd = expected_switch_duration(tau, p, cfg);
      if (esd.has_value() && *esd < best) {
        best = *esd;
        best_tau = tau;
      }
    }
  }

  if (!std::isfinite(best)) {
    result.mesd_s = std::numeric_limits<double>::quiet_NaN();
    result.tau_opt_s = std::numeric_limits<double>::quiet_NaN();
    result.censored = true;
    return result;
  }
  result.mesd_s = best;
  result.tau_opt_s = best_tau;
  result.censored = best > cfg.censor_threshold_s;
  return result;
}

}  // namespace aad::eval
