#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "aad/errors.hpp"

namespace aad::dsp {

/// Multichannel time series; rows are channels, columns are samples.
struct Signal {
  Eigen::MatrixXd data;  // channels x samples
  double rate = 0.0;     // Hz
  std::vector<std::string> labels;

  Signal() = default;
  Signal(Eigen::MatrixXd d, double r, std::vector<std::string> l = {})
      : data(std::move(d)), rate(r), labels(std::move(l)) {
    if (rate <= 0.0) throw_value("signal rate must be positive, got ", rate);
    if (!labels.empty() &&
        static_cast<Eigen::Index>(labels.size()) != data.rows())
      throw_shape("signal has ", data.rows(), " channels but ", labels.size(),
                  " labels");
  }

  Eigen::Index channels() const { return data.rows(); }
  Eigen::Index samples() const { return data.cols(); }
  double duration_s() const {
    return static_cast<double>(samples()) / rate;
  }
};

inline Signal single_channel(Eigen::VectorXd v, double rate) {
  Eigen::MatrixXd m(1, v.size());
  m.row(0) = v.transpose();
  return Signal(std::move(m), rate);
}

}  // namespace aad::dsp
