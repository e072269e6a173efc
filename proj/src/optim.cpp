#include "nmc/optim.hpp"

#include <cmath>

#include "nmc/error.hpp"

namespace nmc {

AdamW::AdamW(std::vector<TensorPtr> params, AdamWConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const TensorPtr& p : params_) {
    m_.emplace_back(p->data.size(), 0.0f);
    v_.emplace_back(p->data.size(), 0.0f);
  }
}

void AdamW::step() {
  ++step_;
  const double bc1 = 1.0 - std::pow(double(config_.beta1), double(step_));
  const double bc2 = 1.0 - std::pow(double(config_.beta2), double(step_));
  for (size_t pi = 0; pi < params_.size(); ++pi) {
    Tensor& p = *params_[pi];
    if (p.grad.size() != p.data.size())
      throw op_error("optimizer step with a missing gradient");
    std::vector<float>& m = m_[pi];
    std::vector<float>& v = v_[pi];
    for (size_t i = 0; i < p.data.size(); ++i) {
      const double grad = p.grad[i];
      const double mi =
          double(config_.beta1) * m[i] + (1.0 - config_.beta1) * grad;
      const double vi =
          double(config_.beta2) * v[i] + (1.0 - config_.beta2) * grad * grad;
      m[i] = static_cast<float>(mi);
      v[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      const double vhat = vi / bc2;
      const double w = p.data[i];
      p.data[i] = static_cast<float>(
          w - double(config_.lr) * (mhat / (std::sqrt(vhat) + config_.epsilon)) -
          double(config_.lr) * config_.weight_decay * w);
    }
  }
}

void AdamW::zero_grad() {
  for (const TensorPtr& p : params_) {
    p->ensure_grad();
    p->zero_grad();
  }
}

}  // namespace nmc
