#ifndef INTENTSIEVE_OPTIM_HPP
#define INTENTSIEVE_OPTIM_HPP

#include <vector>

#include "intentsieve/tensor.hpp"

namespace isv::nn {

struct AdamConfig {
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Standard bias-corrected Adam over a fixed parameter list. Non-trainable
/// parameters (e.g. batchnorm running statistics) are skipped. A non-finite
/// gradient aborts the run with TrainingDiverged.
class Adam {
 public:
  explicit Adam(std::vector<Parameter*> params, AdamConfig cfg = {});

  void step();
  void zero_grad();
  long step_count() const { return step_; }

 private:
  std::vector<Parameter*> params_;
  AdamConfig cfg_;
  std::vector<std::vector<double>> m_, v_;
  long step_ = 0;
};

}  // namespace isv::nn

#endif  // INTENTSIEVE_OPTIM_HPP
