#include "aad/linear/pearson.hpp"

#include <cmath>

#include "aad/errors.hpp"

namespace aad::linear {

PearsonResult pearson_flagged(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b) {
  if (a.size() != b.size())
    throw_shape("pearson: length mismatch ", a.size(), " vs ", b.size());
  if (a.size() < 2)
    throw_value("pearson needs at least 2 samples, got ", a.size());

  const Eigen::Index n = a.size();
  const Eigen::VectorXd ac = a.array() - a.mean();
  const Eigen::VectorXd bc = b.array() - b.mean();
  const double ss_a = ac.squaredNorm();
  const double ss_b = bc.squaredNorm();

  // Constant input detection, relative to the input scale.
  const double scale_a = std::max(1.0, a.cwiseAbs().maxCoeff());
  const double scale_b = std::max(1.0, b.cwiseAbs().maxCoeff());
  const double tol = 1e-26 * static_cast<double>(n);
  PearsonResult out;
  if (ss_a <= tol * scale_a * scale_a || ss_b <= tol * scale_b * scale_b) {
    out.degenerate = true;
    return out;
  }
  out.r = ac.dot(bc) / std::sqrt(ss_a * ss_b);
  if (out.r > 1.0) out.r = 1.0;
  if (out.r < -1.0) out.r = -1.0;
  return out;
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return pearson_flagged(a, b).r;
}

}  // namespace aad::linear
