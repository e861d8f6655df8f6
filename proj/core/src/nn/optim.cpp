#include "murmur/nn/optim.h"

#include <cmath>

#include "murmur/error.h"

namespace murmur::nn {

void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 long t, const AdamConfig& config) {
  if (grad.size() != param.size() || m.size() != param.size() || v.size() != param.size())
    throw ShapeError("adam_update: parameter, gradient and moment sizes differ");
  if (t < 1) throw ArgumentError("adam_update: step count must be >= 1");
  const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (std::size_t i = 0; i < param.size(); ++i) {
    m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * grad[i];
    v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * grad[i] * grad[i];
    const double m_hat = m[i] / c1;
    const double v_hat = v[i] / c2;
    param[i] -= config.lr * m_hat / (std::sqrt(v_hat) + config.eps);
  }
}

Adam::Adam(std::vector<Variable> params, AdamConfig config) : params_(std::move(params)), config_(config) {
  for (const auto& p : params_) {
    m_.emplace_back(p.value().size(), 0.0);
    v_.emplace_back(p.value().size(), 0.0);
  }
}

void Adam::step() {
  ++t_;
  for (std::size_t k = 0; k < params_.size(); ++k) {
    auto& p = params_[k];
    const auto& g = p.grad_buffer();
    adam_update(p.value().span(), g.span(), m_[k], v_[k], t_, config_);
  }
}

void Adam::zero_grad() {
  for (auto& p : params_) p.zero_grad();
}

}  // namespace murmur::nn
