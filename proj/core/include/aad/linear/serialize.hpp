#pragma once

#include <optional>

#include "aad/io/checkpoint.hpp"
#include "aad/linear/cca.hpp"
#include "aad/linear/ridge.hpp"

namespace aad::linear {

/// Linear models share the nn checkpoint container (named float32 tensors).

io::Checkpoint ridge_to_checkpoint(const RidgeDecoder& d);
RidgeDecoder ridge_from_checkpoint(const io::Checkpoint& ckpt);

struct CcaBundle {
  CcaModel model;
  int j = 1;
  std::optional<LdaClassifier> lda;
};

io::Checkpoint cca_to_checkpoint(const CcaBundle& bundle);
CcaBundle cca_from_checkpoint(const io::Checkpoint& ckpt);

}  // namespace aad::linear
