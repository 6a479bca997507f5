#include "aad/linear/lda.hpp"

#include <cmath>

#include "aad/errors.hpp"

namespace aad::linear {

LdaClassifier lda_fit(const Eigen::MatrixXd& features,
                      const std::vector<int>& labels, double shrinkage) {
  const Eigen::Index m = features.rows(), j = features.cols();
  if (static_cast<Eigen::Index>(labels.size()) != m)
    throw_shape("lda_fit: ", labels.size(), " labels for ", m, " rows");

  Eigen::VectorXd mu0 = Eigen::VectorXd::Zero(j);
  Eigen::VectorXd mu1 = Eigen::VectorXd::Zero(j);
  Eigen::Index n0 = 0, n1 = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (labels[static_cast<std::size_t>(i)] == 1) {
      mu1 += features.row(i).transpose();
      ++n1;
    } else {
      mu0 += features.row(i).transpose();
      ++n0;
    }
  }
  if (n0 == 0 || n1 == 0)
    throw_value("lda_fit: both classes must be present (counts ", n0, ", ",
                n1, ")");
  mu0 /= static_cast<double>(n0);
  mu1 /= static_cast<double>(n1);

  Eigen::MatrixXd pooled = Eigen::MatrixXd::Zero(j, j);
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd& mu =
        labels[static_cast<std::size_t>(i)] == 1 ? mu1 : mu0;
    const Eigen::VectorXd d = features.row(i).transpose() - mu;
    pooled.selfadjointView<Eigen::Lower>().rankUpdate(d);
  }
  pooled.triangularView<Eigen::StrictlyUpper>() =
      pooled.transpose().triangularView<Eigen::StrictlyUpper>();
  const Eigen::Index dof = std::max<Eigen::Index>(1, m - 2);
  pooled /= static_cast<double>(dof);
  const double gamma =
      shrinkage * pooled.trace() / static_cast<double>(j);
  pooled.diagonal().array() += gamma > 0.0 ? gamma : shrinkage;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(pooled);
  if (ldlt.info() != Eigen::Success)
    throw_value("lda_fit: pooled covariance not factorizable");

  LdaClassifier out;
  out.w = ldlt.solve(mu1 - mu0);
  out.prior0 = static_cast<double>(n0) / static_cast<double>(m);
  out.prior1 = static_cast<double>(n1) / static_cast<double>(m);
  out.bias = -0.5 * out.w.dot(mu0 + mu1) + std::log(out.prior1 / out.prior0);
  return out;
}

double lda_score(const LdaClassifier& lda, const Eigen::VectorXd& f) {
  if (f.size() != lda.w.size())
    throw_shape("lda_score: classifier expects ", lda.w.size(),
                " features, got ", f.size());
  return lda.w.dot(f) + lda.bias;
}

int lda_predict(const LdaClassifier& lda, const Eigen::VectorXd& f) {
  return lda_score(lda, f) > 0.0 ? 1 : 0;
}

}  // namespace aad::linear
