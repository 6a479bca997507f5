#include "aad/linear/serialize.hpp"

namespace aad::linear {

namespace {

std::vector<double> matrix_data(const Eigen::MatrixXd& m) {
  std::vector<double> out(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      out[static_cast<std::size_t>(r * m.cols() + c)] = m(r, c);
  return out;
}

Eigen::MatrixXd matrix_from(const io::TensorEntry& e) {
  if (e.shape.size() != 2)
    throw_io("checkpoint tensor '", e.name, "' is not a matrix");
  Eigen::MatrixXd m(e.shape[0], e.shape[1]);
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = static_cast<double>(
          e.values[static_cast<std::size_t>(r * m.cols() + c)]);
  return m;
}

Eigen::VectorXd vector_from(const io::TensorEntry& e) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(e.values.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i)
    v[i] = static_cast<double>(e.values[static_cast<std::size_t>(i)]);
  return v;
}

}  // namespace

io::Checkpoint ridge_to_checkpoint(const RidgeDecoder& d) {
  io::Checkpoint ckpt;
  ckpt.put_doubles("g", {d.g.size()},
                   std::vector<double>(d.g.data(), d.g.data() + d.g.size()));
  ckpt.put_scalar("lambda", d.lambda);
  ckpt.put_scalar("n_channels", d.n_channels);
  ckpt.put_scalar("n_lags", d.n_lags);
  return ckpt;
}

RidgeDecoder ridge_from_checkpoint(const io::Checkpoint& ckpt) {
  RidgeDecoder d;
  d.g = vector_from(ckpt.get("g"));
  d.lambda = ckpt.get_scalar("lambda");
  d.n_channels = static_cast<int>(ckpt.get_scalar("n_channels"));
  d.n_lags = static_cast<int>(ckpt.get_scalar("n_lags"));
  return d;
}

io::Checkpoint cca_to_checkpoint(const CcaBundle& bundle) {
  io::Checkpoint ckpt;
  const CcaModel& m = bundle.model;
  ckpt.put_doubles("W_x", {m.w_x.rows(), m.w_x.cols()}, matrix_data(m.w_x));
  ckpt.put_doubles("W_s", {m.w_s.rows(), m.w_s.cols()}, matrix_data(m.w_s));
  ckpt.put_doubles("correlations", {m.correlations.size()},
                   std::vector<double>(m.correlations.data(),
                                       m.correlations.data() +
                                           m.correlations.size()));
  ckpt.put_scalar("n_channels", m.n_channels);
  ckpt.put_scalar("n_lags_eeg", m.n_lags_eeg);
  ckpt.put_scalar("n_lags_env", m.n_lags_env);
  ckpt.put_scalar("J", bundle.j);
  if (bundle.lda.has_value()) {
    ckpt.put_doubles("lda/weights", {bundle.lda->w.size()},
                     std::vector<double>(bundle.lda->w.data(),
                                         bundle.lda->w.data() +
                                             bundle.lda->w.size()));
    ckpt.put_scalar("lda/bias", bundle.lda->bias);
    ckpt.put_scalar("lda/prior0", bundle.lda->prior0);
    ckpt.put_scalar("lda/prior1", bundle.lda->prior1);
  }
  return ckpt;
}

CcaBundle cca_from_checkpoint(const io::Checkpoint& ckpt) {
  CcaBundle b;
  b.model.w_x = matrix_from(ckpt.get("W_x"));
  b.model.w_s = matrix_from(ckpt.get("W_s"));
  b.model.correlations = vector_from(ckpt.get("correlations"));
  b.model.n_channels = static_cast<int>(ckpt.get_scalar("n_channels"));
  b.model.n_lags_eeg = static_cast<int>(ckpt.get_scalar("n_lags_eeg"));
  b.model.n_lags_env = static_cast<int>(ckpt.get_scalar("n_lags_env"));
  b.j = static_cast<int>(ckpt.get_scalar("J"));
  if (ckpt.has("lda/weights")) {
    LdaClassifier lda;
    lda.w = vector_from(ckpt.get("lda/weights"));
    lda.bias = ckpt.get_scalar("lda/bias");
    lda.prior0 = ckpt.get_scalar("lda/prior0");
    lda.prior1 = ckpt.get_scalar("lda/prior1");
    b.lda = std::move(lda);
  }
  return b;
}

}  // namespace aad::linear
