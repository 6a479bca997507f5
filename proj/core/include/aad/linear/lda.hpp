#pragma once

#include <Eigen/Dense>
#include <vector>

namespace aad::linear {

/// Binary linear discriminant on pooled-covariance features. The decision
/// score is w . f + bias; class 1 when positive.
struct LdaClassifier {
  Eigen::VectorXd w;
  double bias = 0.0;
  double prior0 = 0.5;
  double prior1 = 0.5;
};

/// features: M x J, labels in {0, 1}; both classes must be present. The
/// pooled covariance receives the same relative diagonal shrinkage used for
/// CCA to stay invertible.
LdaClassifier lda_fit(const Eigen::MatrixXd& features,
                      const std::vector<int>& labels,
                      double shrinkage = 1e-6);

double lda_score(const LdaClassifier& lda, const Eigen::VectorXd& f);
int lda_predict(const LdaClassifier& lda, const Eigen::VectorXd& f);

}  // namespace aad::linear
