#include "aad/linear/ridge.hpp"

#include <cmath>

namespace aad::linear {

namespace {

Eigen::VectorXd solve_normal_equations(const Eigen::MatrixXd& a,
                                       const Eigen::VectorXd& b) {
  Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
  Eigen::VectorXd g = ldlt.solve(b);
  g += ldlt.solve(b - a * g);  // one refinement step
  return g;
}

}  // namespace

RidgeDecoder ridge_fit(const Eigen::MatrixXd& x, const Eigen::VectorXd& s,
                       double lambda) {
  if (x.rows() == 0) throw_value("ridge_fit: empty design matrix");
  if (x.rows() != s.size())
    throw_shape("ridge_fit: ", x.rows(), " design rows vs ", s.size(),
                " envelope samples");
  if (lambda < 0.0) throw_value("ridge_fit: negative lambda ", lambda);

  Eigen::MatrixXd a = x.transpose() * x;
  a.diagonal().array() += lambda;
  const Eigen::VectorXd b = x.transpose() * s;

  if (lambda == 0.0) {
    // The normal equations are consistent even when singular, so rank
    // deficiency has to be read off the factorization itself.
    const Eigen::LDLT<Eigen::MatrixXd> probe(a);
    const Eigen::VectorXd d = probe.vectorD();
    if (d.minCoeff() <= 1e-12 * std::max(1.0, d.maxCoeff()))
      throw_value("ridge_fit: singular normal equations at lambda=0; ",
                  "use lambda > 0");
  }

  Eigen::VectorXd g = solve_normal_equations(a, b);
  const double b_norm = b.norm();
  const double residual = (a * g - b).norm() / (b_norm > 0.0 ? b_norm : 1.0);
  if (!g.allFinite() || residual > 1e-8)
    throw_value("ridge_fit: normal equations not solved to tolerance ",
                "(residual ", residual, ", lambda ", lambda, ")");

  RidgeDecoder out;
  out.g = std::move(g);
  out.lambda = lambda;
  return out;
}

std::vector<double> ridge_lambda_grid() {
  std::vector<double> grid;
  grid.reserve(13);
  for (int e = -2; e <= 10; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

TrialGram trial_gram(const Trial& trial, int n_lags) {
  const LagMatrix lag = build_lag_matrix(trial.eeg, n_lags);
  const Eigen::VectorXd s = trial.attended_env().head(lag.x.rows());
  TrialGram g;
  g.gram = Eigen::MatrixXd::Zero(lag.x.cols(), lag.x.cols());
  g.gram.selfadjointView<Eigen::Lower>().rankUpdate(lag.x.transpose());
  g.gram.triangularView<Eigen::StrictlyUpper>() =
      g.gram.transpose().triangularView<Eigen::StrictlyUpper>();
  g.xty = lag.x.transpose() * s;
  g.rows = lag.x.rows();
  return g;
}

RidgeCvResult ridge_cv_fit(const std::vector<const Trial*>& trials,
                           int n_lags,
                           const std::vector<const TrialGram*>* grams) {
  if (trials.empty()) throw_value("ridge_cv_fit: empty training set");
  if (trials.size() < 2)
    throw_value("ridge_cv_fit needs >= 2 trials for leave-one-out, got ",
                trials.size());
  if (grams != nullptr && grams->size() != trials.size())
    throw_shape("ridge_cv_fit: ", grams->size(), " grams for ",
                trials.size(), " trials");

  std::vector<TrialGram> owned;
  std::vector<const TrialGram*> gs;
  if (grams == nullptr) {
    owned.reserve(trials.size());
    for (const Trial* t : trials) owned.push_back(trial_gram(*t, n_lags));
    for (const auto& g : owned) gs.push_back(&g);
  } else {
    gs = *grams;
  }

  const Eigen::Index d = gs.front()->gram.rows();
  Eigen::MatrixXd gram_all = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd xty_all = Eigen::VectorXd::Zero(d);
  for (const TrialGram* g : gs) {
    gram_all += g->gram;
    xty_all += g->xty;
  }

  RidgeCvResult result;
  result.grid = ridge_lambda_grid();
  result.mean_correlation.assign(result.grid.size(), 0.0);

  for (std::size_t i = 0; i < trials.size(); ++i) {
    Eigen::MatrixXd a = gram_all - gs[i]->gram;
    const Eigen::VectorXd b = xty_all - gs[i]->xty;
    const LagMatrix held = build_lag_matrix(trials[i]->eeg, n_lags);
    const Eigen::VectorXd s_held =
        trials[i]->attended_env().head(held.x.rows());
    for (std::size_t li = 0; li < result.grid.size(); ++li) {
      Eigen::MatrixXd a_l = a;
      a_l.diagonal().array() += result.grid[li];
      const Eigen::VectorXd g = solve_normal_equations(a_l, b);
      result.mean_correlation[li] += pearson(held.x * g, s_held);
    }
  }
  for (double& c : result.mean_correlation)
    c /= static_cast<double>(trials.size());

  std::size_t best = 0;
  for (std::size_t li = 1; li < result.grid.size(); ++li)
    if (result.mean_correlation[li] > result.mean_correlation[best]) best = li;

  Eigen::MatrixXd a = gram_all;
  a.diagonal().array() += result.grid[best];
  Eigen::VectorXd g = solve_normal_equations(a, xty_all);
  result.decoder.g = std::move(g);
  result.decoder.lambda = result.grid[best];
  result.decoder.n_lags = n_lags;
  result.decoder.n_channels =
      static_cast<int>(trials.front()->eeg.rows());
  return result;
}

LsrDecision lsr_classify(const RidgeDecoder& decoder,
                         const Eigen::MatrixXd& eeg_window,
                         const Eigen::VectorXd& env_a,
                         const Eigen::VectorXd& env_b) {
  if (env_a.size() != env_b.size())
    throw_shape("lsr_classify: envelope lengths differ, ", env_a.size(),
                " vs ", env_b.size());
  if (eeg_window.cols() != env_a.size())
    throw_shape("lsr_classify: eeg window has ", eeg_window.cols(),
                " samples, envelopes ", env_a.size());
  const LagMatrix lag = build_lag_matrix(eeg_window, decoder.n_lags);
  if (lag.x.cols() != decoder.g.size())
    throw_shape("lsr_classify: decoder expects ", decoder.g.size(),
                " features, window provides ", lag.x.cols());
  const Eigen::VectorXd s_hat = lag.x * decoder.g;

  LsrDecision d;
  const PearsonResult ra = pearson_flagged(s_hat, env_a.head(s_hat.size()));
  const PearsonResult rb = pearson_flagged(s_hat, env_b.head(s_hat.size()));
  d.r_a = ra.r;
  d.r_b = rb.r;
  d.degenerate = ra.degenerate || rb.degenerate || ra.r == rb.r;
  d.choice = rb.r > ra.r ? Stream::kB : Stream::kA;  // ties fall to A
  return d;
}

}  // namespace aad::linear
