#include "aad/linear/lag.hpp"

namespace aad::linear {

LagMatrix build_lag_matrix(const Eigen::MatrixXd& eeg, int n_lags,
                           LagOrientation orientation) {
  const Eigen::Index n = eeg.rows(), t_len = eeg.cols();
  if (n_lags < 1) throw_value("lag matrix needs n_lags >= 1, got ", n_lags);
  if (t_len <= n_lags)
    throw_value("lag matrix needs more than ", n_lags, " samples, got ",
                t_len);
  const Eigen::Index rows = t_len - n_lags + 1;

  LagMatrix out;
  out.n_channels = static_cast<int>(n);
  out.n_lags = n_lags;
  out.orientation = orientation;
  out.t0 = orientation == LagOrientation::kAnticausal ? 0 : n_lags - 1;
  out.x.resize(rows, n * n_lags);
  for (Eigen::Index ch = 0; ch < n; ++ch) {
    for (int tau = 0; tau < n_lags; ++tau) {
      const Eigen::Index col = ch * n_lags + tau;
      if (orientation == LagOrientation::kAnticausal) {
        // row r: x(r + tau, ch)
        out.x.col(col) = eeg.row(ch).segment(tau, rows).transpose();
      } else {
        // row r: x(t0 + r - tau, ch)
        out.x.col(col) =
            eeg.row(ch).segment(out.t0 - tau, rows).transpose();
      }
    }
  }
  return out;
}

LagMatrix build_envelope_lag_matrix(const Eigen::VectorXd& env, int n_lags) {
  Eigen::MatrixXd m(1, env.size());
  m.row(0) = env.transpose();
  return build_lag_matrix(m, n_lags, LagOrientation::kCausal);
}

CcaMatrices build_cca_matrices(const Eigen::MatrixXd& eeg,
                               const Eigen::VectorXd& env, int n_lags_eeg,
                               int n_lags_env) {
  if (eeg.cols() != env.size())
    throw_shape("cca matrices: eeg has ", eeg.cols(), " samples, envelope ",
                env.size());
  const Eigen::Index t_len = eeg.cols();
  if (t_len < n_lags_eeg + n_lags_env)
    throw_value("window too short for cca lags: need >= ",
                n_lags_eeg + n_lags_env, " samples, got ", t_len);
  LagMatrix x = build_lag_matrix(eeg, n_lags_eeg);
  LagMatrix s = build_envelope_lag_matrix(env, n_lags_env);
  // Common trial-time range [n_lags_env - 1, t_len - n_lags_eeg].
  const Eigen::Index common = t_len - n_lags_eeg - n_lags_env + 2;
  CcaMatrices out;
  out.x = x.x.bottomRows(common);
  out.s = s.x.topRows(common);
  return out;
}

}  // namespace aad::linear
