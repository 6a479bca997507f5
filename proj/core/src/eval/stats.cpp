#include "aad/eval/stats.hpp"

#include <algorithm>
#include <cmath>

#include "aad/errors.hpp"
#include "aad/rng.hpp"

namespace aad::eval {

double accuracy(const std::vector<int>& decisions,
                const std::vector<int>& labels) {
  if (decisions.size() != labels.size())
    throw_shape("accuracy: ", decisions.size(), " decisions vs ",
                labels.size(), " labels");
  if (decisions.empty()) throw_value("accuracy: empty input");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < decisions.size(); ++i)
    if (decisions[i] == labels[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(decisions.size());
}

double binomial_cdf_half(int n, int k) {
  if (k < 0) return 0.0;
  if (k >= n) return 1.0;
  const double log_half_n = static_cast<double>(n) * std::log(0.5);
  double cdf = 0.0;
  for (int i = 0; i <= k; ++i) {
    const double log_pmf = std::lgamma(n + 1.0) - std::lgamma(i + 1.0) -
                           std::lgamma(n - i + 1.0) + log_half_n;
    cdf += std::exp(log_pmf);
  }
  return std::min(1.0, cdf);
}

double chance_level(int n_windows) {
  if (n_windows < 1)
    throw_value("chance_level: need n >= 1, got ", n_windows);
  for (int k = (n_windows + 1) / 2; k <= n_windows; ++k) {
    if (binomial_cdf_half(n_windows, k) >= 0.95)
      return static_cast<double>(k) / static_cast<double>(n_windows);
  }
  return 1.0;
}

double paired_permutation_test(const std::vector<double>& a,
                               const std::vector<double>& b, int n_perm,
                               std::uint64_t seed) {
  if (a.size() != b.size())
    throw_shape("paired_permutation_test: sample sizes ", a.size(), " vs ",
                b.size());
  if (a.empty()) throw_value("paired_permutation_test: empty samples");
  if (n_perm < 1000)
    throw_value("paired_permutation_test: need n_perm >= 1000, got ", n_perm);

  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  double t_obs = 0.0;
  for (double d : diff) t_obs += d;
  t_obs = std::fabs(t_obs / static_cast<double>(diff.size()));

  RandomStream rng(derive_seed(seed, 0x9e2a));
  int at_least = 0;
  for (int p = 0; p < n_perm; ++p) {
    double t = 0.0;
    for (double d : diff) t += rng.uniform() < 0.5 ? d : -d;
    t = std::fabs(t / static_cast<double>(diff.size()));
    if (t >= t_obs) ++at_least;
  }
  return static_cast<double>(at_least + 1) / static_cast<double>(n_perm + 1);
}

std::vector<double> bonferroni(const std::vector<double>& p_values, int m) {
  if (m < 1) throw_value("bonferroni: need m >= 1, got ", m);
  std::vector<double> out(p_values.size());
  for (std::size_t i = 0; i < p_values.size(); ++i)
    out[i] = std::min(1.0, p_values[i] * static_cast<double>(m));
  return out;
}

}  // namespace aad::eval
