#pragma once

#include <cstdint>
#include <vector>

namespace aad::eval {

double accuracy(const std::vector<int>& decisions,
                const std::vector<int>& labels);

/// Binomial(n, 0.5) CDF at k, exact in log space.
double binomial_cdf_half(int n, int k);

/// 95th percentile point of Binomial(n, 0.5) divided by n: the smallest k/n
/// with CDF(k) >= 0.95. Non-increasing in n; chance_level(1) = 1.
double chance_level(int n_windows);

/// Two-sided paired permutation test by sign-flipping the differences of the
/// paired samples; p = (#{|T_perm| >= |T_obs|} + 1) / (n_perm + 1).
double paired_permutation_test(const std::vector<double>& a,
                               const std::vector<double>& b, int n_perm,
                               std::uint64_t seed);

/// Bonferroni adjustment: p * m clipped to 1.
std::vector<double> bonferroni(const std::vector<double>& p_values, int m);

}  // namespace aad::eval
