#pragma once

#include <Eigen/Dense>

namespace aad::linear {

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // a constant input; r reported as 0
};

PearsonResult pearson_flagged(const Eigen::VectorXd& a,
                              const Eigen::VectorXd& b);

/// Plain value; degenerate inputs yield 0.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

}  // namespace aad::linear
