#include "aad/linear/cca.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "aad/eval/windows.hpp"
#include "aad/linear/pearson.hpp"
#include "aad/rng.hpp"

namespace aad::linear {

namespace {

Eigen::MatrixXd shrunken_covariance(const Eigen::MatrixXd& centered,
                                    double denom, double shrinkage) {
  const Eigen::Index d = centered.cols();
  Eigen::MatrixXd r = Eigen::MatrixXd::Zero(d, d);
  r.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose());
  r.triangularView<Eigen::StrictlyUpper>() =
      r.transpose().triangularView<Eigen::StrictlyUpper>();
  r /= denom;
  const double gamma = shrinkage * r.trace() / static_cast<double>(d);
  r.diagonal().array() += gamma;
  return r;
}

Eigen::Index effective_rank(const Eigen::MatrixXd& sym) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  const double tol = 1e-12 * std::max(1.0, es.eigenvalues().maxCoeff());
  return (es.eigenvalues().array() > tol).count();
}

}  // namespace

CcaModel cca_fit(const Eigen::MatrixXd& x, const Eigen::MatrixXd& s,
                 double shrinkage) {
  if (x.rows() != s.rows())
    throw_shape("cca_fit: row mismatch ", x.rows(), " vs ", s.rows());
  if (x.rows() < 3) throw_value("cca_fit: too few rows (", x.rows(), ")");

  const double denom = static_cast<double>(x.rows() - 1);
  const Eigen::MatrixXd xc = x.rowwise() - x.colwise().mean();
  const Eigen::MatrixXd sc = s.rowwise() - s.colwise().mean();
  const Eigen::MatrixXd r_xx = shrunken_covariance(xc, denom, shrinkage);
  const Eigen::MatrixXd r_ss = shrunken_covariance(sc, denom, shrinkage);
  const Eigen::MatrixXd r_xs = xc.transpose() * sc / denom;

  Eigen::LLT<Eigen::MatrixXd> llt_ss(r_ss);
  if (llt_ss.info() != Eigen::Success)
    throw_value("cca_fit: envelope covariance rank deficient beyond ",
                "regularization (effective rank ", effective_rank(r_ss),
                " of ", r_ss.rows(), ")");
  // M = R_xs R_ss^-1 R_sx, symmetric PSD; pencil (M, R_xx).
  const Eigen::MatrixXd m = r_xs * llt_ss.solve(r_xs.transpose());
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> ges(m, r_xx);
  if (ges.info() != Eigen::Success)
    throw_value("cca_fit: EEG covariance rank deficient beyond ",
                "regularization (effective rank ", effective_rank(r_xx),
                " of ", r_xx.rows(), ")");

  const Eigen::Index dx = x.cols(), ds = s.cols();
  const Eigen::Index j_max = std::min(dx, ds);
  CcaModel model;
  model.w_x.resize(dx, j_max);
  model.w_s.resize(ds, j_max);
  model.correlations.resize(j_max);
  for (Eigen::Index j = 0; j < j_max; ++j) {
    const Eigen::Index src = dx - 1 - j;  // eigenvalues come back ascending
    Eigen::VectorXd wx = ges.eigenvectors().col(src);  // wx' R_xx wx = 1
    Eigen::VectorXd ws = llt_ss.solve(r_xs.transpose() * wx);
    const double var_s = ws.dot(r_ss * ws);
    if (var_s > 0.0) ws /= std::sqrt(var_s);
    double rho = wx.dot(r_xs * ws);
    if (rho < 0.0) {
      ws = -ws;
      rho = -rho;
    }
    model.w_x.col(j) = wx;
    model.w_s.col(j) = ws;
    model.correlations[j] = rho;
  }
  return model;
}

CcaModel cca_fit_trials(const std::vector<const Trial*>& trials,
                        int n_lags_eeg, int n_lags_env, double shrinkage) {
  if (trials.empty()) throw_value("cca_fit_trials: empty training set");
  Eigen::Index total_rows = 0;
  std::vector<CcaMatrices> parts;
  parts.reserve(trials.size());
  for (const Trial* t : trials) {
    parts.push_back(build_cca_matrices(t->eeg, t->attended_env(), n_lags_eeg,
                                       n_lags_env));
    total_rows += parts.back().x.rows();
  }
  Eigen::MatrixXd x(total_rows, parts.front().x.cols());
  Eigen::MatrixXd s(total_rows, parts.front().s.cols());
  Eigen::Index row = 0;
  for (const auto& p : parts) {
    x.middleRows(row, p.x.rows()) = p.x;
    s.middleRows(row, p.s.rows()) = p.s;
    row += p.x.rows();
  }
  CcaModel model = cca_fit(x, s, shrinkage);
  model.n_channels = static_cast<int>(trials.front()->eeg.rows());
  model.n_lags_eeg = n_lags_eeg;
  model.n_lags_env = n_lags_env;
  return model;
}

Eigen::VectorXd cca_features(const CcaModel& model,
                             const Eigen::MatrixXd& eeg_window,
                             const Eigen::VectorXd& env, int j) {
  if (j < 1 || j > model.max_components())
    throw_value("cca_features: J=", j, " outside [1, ",
                model.max_components(), "]");
  const CcaMatrices m = build_cca_matrices(eeg_window, env, model.n_lags_eeg,
                                           model.n_lags_env);
  Eigen::VectorXd feats(j);
  if (m.x.rows() < 2) {
    feats.setZero();
    return feats;
  }
  for (int c = 0; c < j; ++c)
    feats[c] = pearson(m.x * model.w_x.col(c), m.s * model.w_s.col(c));
  return feats;
}

Stream cca_classify(const CcaModel& model, const LdaClassifier& lda,
                    const Eigen::MatrixXd& eeg_window,
                    const Eigen::VectorXd& env_a, const Eigen::VectorXd& env_b,
                    int j) {
  if (lda.w.size() != j)
    throw_value("cca_classify: LDA trained for J=", lda.w.size(),
                ", requested J=", j);
  const Eigen::VectorXd diff = cca_features(model, eeg_window, env_a, j) -
                               cca_features(model, eeg_window, env_b, j);
  return lda_predict(lda, diff) == 1 ? Stream::kA : Stream::kB;
}

// ---------------------------------------------------------------------------

namespace {

/// Difference features (attended minus unattended and the negation) for all
/// windows of the given length across the trials.
void collect_difference_features(const std::vector<const Trial*>& trials,
                                 const CcaModel& model, int j_max,
                                 Eigen::Index win_samples, double overlap,
                                 std::vector<Eigen::VectorXd>* feats,
                                 std::vector<int>* labels) {
  for (const Trial* t : trials) {
    const auto wins = aad::eval::make_windows(t->samples(), win_samples,
                                              overlap);
    for (const auto& w : wins) {
      const Eigen::MatrixXd eeg = t->eeg.middleCols(w.start, w.length);
      const Eigen::VectorXd att =
          t->attended_env().segment(w.start, w.length);
      const Eigen::VectorXd unatt =
          t->unattended_env().segment(w.start, w.length);
      const Eigen::VectorXd diff = cca_features(model, eeg, att, j_max) -
                                   cca_features(model, eeg, unatt, j_max);
      feats->push_back(diff);
      labels->push_back(1);
      feats->push_back(-diff);
      labels->push_back(0);
    }
  }
}

}  // namespace

void cca_lda_training_set(const std::vector<const Trial*>& trials,
                          const CcaModel& model, int j,
                          Eigen::Index win_samples, double overlap,
                          Eigen::MatrixXd* features, std::vector<int>* labels) {
  std::vector<Eigen::VectorXd> rows;
  labels->clear();
  collect_difference_features(trials, model, j, win_samples, overlap, &rows,
                              labels);
  features->resize(static_cast<Eigen::Index>(rows.size()), j);
  for (std::size_t i = 0; i < rows.size(); ++i)
    features->row(static_cast<Eigen::Index>(i)) = rows[i].transpose();
}

std::vector<int> select_j_per_window(const std::vector<const Trial*>& trials,
                                     const SelectJConfig& cfg) {
  if (cfg.inner_folds < 2)
    throw_value("select_j: need >= 2 inner folds, got ", cfg.inner_folds);
  if (static_cast<int>(trials.size()) < cfg.inner_folds)
    throw_value("select_j: ", trials.size(), " trials cannot fill ",
                cfg.inner_folds, " inner folds");
  if (cfg.window_lengths_s.empty())
    throw_value("select_j: no analysis windows given");

  const int j_max = std::min(cfg.n_lags_eeg, cfg.n_lags_env);
  const double rate = trials.front()->rate;

  std::vector<std::size_t> order(trials.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  RandomStream rng(derive_seed(cfg.seed, 0x5e1ec7));
  rng.shuffle(order);

  // acc[w][j-1] accumulated over inner folds.
  std::vector<std::vector<double>> correct(
      cfg.window_lengths_s.size(), std::vector<double>(j_max, 0.0));
  std::vector<std::vector<double>> counted(
      cfg.window_lengths_s.size(), std::vector<double>(j_max, 0.0));

  for (int fold = 0; fold < cfg.inner_folds; ++fold) {
    std::vector<const Trial*> train, val;
    for (std::size_t i = 0; i < order.size(); ++i) {
      if (static_cast<int>(i % cfg.inner_folds) == fold)
        val.push_back(trials[order[i]]);
      else
        train.push_back(trials[order[i]]);
    }
    if (train.empty() || val.empty())
      throw_value("select_j: degenerate inner fold ", fold);
    const CcaModel model = cca_fit_trials(train, cfg.n_lags_eeg,
                                          cfg.n_lags_env, cfg.shrinkage);

    for (std::size_t wi = 0; wi < cfg.window_lengths_s.size(); ++wi) {
      const auto win_samples = static_cast<Eigen::Index>(
          std::llround(cfg.window_lengths_s[wi] * rate));
      if (win_samples <
          static_cast<Eigen::Index>(cfg.n_lags_eeg + cfg.n_lags_env + 1))
        continue;  // window cannot populate the lag matrices
      std::vector<Eigen::VectorXd> f_train, f_val;
      std::vector<int> l_train, l_val;
      collect_difference_features(train, model, j_max, win_samples,
                                  cfg.overlap, &f_train, &l_train);
      collect_difference_features(val, model, j_max, win_samples, cfg.overlap,
                                  &f_val, &l_val);
      if (f_train.empty() || f_val.empty()) continue;

      Eigen::MatrixXd ft(static_cast<Eigen::Index>(f_train.size()), j_max);
      for (std::size_t i = 0; i < f_train.size(); ++i)
        ft.row(static_cast<Eigen::Index>(i)) = f_train[i].transpose();

      for (int j = 1; j <= j_max; ++j) {
        const LdaClassifier lda = lda_fit(ft.leftCols(j), l_train);
        for (std::size_t i = 0; i < f_val.size(); ++i) {
          const int pred = lda_predict(lda, f_val[i].head(j));
          correct[wi][static_cast<std::size_t>(j - 1)] +=
              pred == l_val[i] ? 1.0 : 0.0;
          counted[wi][static_cast<std::size_t>(j - 1)] += 1.0;
        }
      }
    }
  }

  std::vector<int> j_per_window(cfg.window_lengths_s.size(), 1);
  for (std::size_t wi = 0; wi < cfg.window_lengths_s.size(); ++wi) {
    int best_j = 1;
    double best_acc = -1.0;
    for (int j = 1; j <= j_max; ++j) {
      const double cnt = counted[wi][static_cast<std::size_t>(j - 1)];
      if (cnt == 0.0) continue;
      const double acc = correct[wi][static_cast<std::size_t>(j - 1)] / cnt;
      if (acc > best_acc) {  // ties keep the smaller J
        best_acc = acc;
        best_j = j;
      }
    }
    j_per_window[wi] = best_j;
  }
  return j_per_window;
}

int select_j(const std::vector<const Trial*>& trials,
             const SelectJConfig& cfg) {
  const auto per_window = select_j_per_window(trials, cfg);
  return *std::min_element(per_window.begin(), per_window.end());
}

int finalize_j(const std::vector<std::vector<int>>& j_per_window_per_fold) {
  if (j_per_window_per_fold.empty())
    throw_value("finalize_j: no folds given");
  const std::size_t n_windows = j_per_window_per_fold.front().size();
  int result = std::numeric_limits<int>::max();
  for (std::size_t wi = 0; wi < n_windows; ++wi) {
    double sum = 0.0;
    for (const auto& fold : j_per_window_per_fold) {
      if (fold.size() != n_windows)
        throw_shape("finalize_j: ragged per-fold window counts");
      sum += fold[wi];
    }
    const double avg = sum / static_cast<double>(j_per_window_per_fold.size());
    const int rounded = static_cast<int>(std::floor(avg + 0.5));
    result = std::min(result, std::max(1, rounded));
  }
  return result;
}

}  // namespace aad::linear
