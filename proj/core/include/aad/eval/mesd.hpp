#pragma once

#include <optional>
#include <vector>

namespace aad::eval {

/// Accuracy measured at one analysis window length.
struct AccuracyPoint {
  double tau_s = 0.0;  // window length (decision time), seconds
  double p = 0.5;      // per-decision accuracy
};

/// Gain-control chain configuration. States 1..K carry gains spaced evenly
/// over [0, 1]; per decision the gain steps up with probability p and down
/// with 1 - p (reflecting ends). The design constraint asks the stationary
/// distribution to put at least `confidence` mass on states whose gain is at
/// least `comfort_gain`; among state counts in [k_min, k_max] satisfying it,
/// the smallest is used.
struct MesdConfig {
  double comfort_gain = 0.8;
  double confidence = 0.9;
  int k_min = 2;
  int k_max = 200;
  int tau_subdivisions = 100;     // interpolation points per measured segment
  double censor_threshold_s = 100.0;
};

struct MesdResult {
  double mesd_s = 0.0;     // NaN when undefined (p <= 0.5 everywhere)
  double tau_opt_s = 0.0;  // NaN when undefined
  bool censored = false;   // undefined, or MESD > censor threshold
};

/// Stationary probability mass on the comfort region {k_bar..K}.
double stationary_comfort_mass(double p, int k, int k_bar);

/// First state whose gain reaches the comfort level.
int comfort_state(int k, double comfort_gain);

/// Closed-form expected number of steps from the lowest state to state
/// k_bar for the reflecting birth-death chain with up-probability p > 0.5.
double expected_hitting_time(double p, int k_bar);

/// Smallest admissible state count for accuracy p, or nullopt if none in
/// [k_min, k_max] meets the comfort constraint.
std::optional<int> minimal_state_count(double p, const MesdConfig& cfg);

/// Expected switch duration at a single (tau, p) design point; nullopt when
/// no admissible chain exists.
std::optional<double> expected_switch_duration(double tau_s, double p,
                                               const MesdConfig& cfg);

/// Minimal expected switch duration over the (piecewise-linearly
/// interpolated) accuracy curve. Points must be given on a strictly
/// increasing tau grid with at least two entries.
MesdResult mesd(const std::vector<AccuracyPoint>& points,
                const MesdConfig& cfg = {});

}  // namespace aad::eval
