#pragma once

#include <span>
#include <vector>

#include "murmur/nn/variable.h"

namespace murmur::nn {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// One bias-corrected Adam update of a flat parameter array. t is the 1-based
// step count.
void adam_update(std::span<double> param, std::span<const double> grad, std::span<double> m, std::span<double> v,
                 long t, const AdamConfig& config);

// Adam over a fixed list of parameters, applied in list order.
class Adam {
 public:
  Adam(std::vector<Variable> params, AdamConfig config = {});

  // Uses each parameter's accumulated grad (missing grads count as zero).
  void step();
  void zero_grad();
  long steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<Variable> params_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  AdamConfig config_;
  long t_ = 0;
};

}  // namespace murmur::nn
