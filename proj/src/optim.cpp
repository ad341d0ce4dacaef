#include "intentsieve/optim.hpp"

#include <cmath>

#include "intentsieve/error.hpp"

namespace isv::nn {

Adam::Adam(std::vector<Parameter*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
  if (cfg_.lr <= 0.0) throw InvalidConfig("learning rate must be positive");
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Parameter* p : params_) {
    p->tensor.ensure_grad();
    m_.emplace_back(static_cast<std::size_t>(p->tensor.numel()), 0.0);
    v_.emplace_back(static_cast<std::size_t>(p->tensor.numel()), 0.0);
  }
}

void Adam::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));

  for (std::size_t pi = 0; pi < params_.size(); ++pi) {
    Parameter* p = params_[pi];
    if (!p->trainable) continue;
    double* val = p->tensor.data();
    const double* grad = p->tensor.grad_data();
    std::vector<double>& m = m_[pi];
    std::vector<double>& v = v_[pi];
    const std::int64_t n = p->tensor.numel();
    for (std::int64_t i = 0; i < n; ++i) {
      const double g = grad[i];
      if (!std::isfinite(g))
        throw TrainingDiverged("non-finite gradient in parameter " + p->name);
      const std::size_t k = static_cast<std::size_t>(i);
      m[k] = cfg_.beta1 * m[k] + (1.0 - cfg_.beta1) * g;
      v[k] = cfg_.beta2 * v[k] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[k] / bc1;
      const double vhat = v[k] / bc2;
      val[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void Adam::zero_grad() {
  for (Parameter* p : params_) p->tensor.zero_grad();
}

}  // namespace isv::nn
