#pragma once

#include <random>
#include <span>
#include <vector>

#include "murmur/nn/variable.h"

namespace murmur::nn {

enum class Mode { kTrain, kInfer };

using Rng = std::mt19937_64;

// ---- elementary ops -------------------------------------------------------
// Tensors are viewed as matrices by collapsing all leading extents:
// rows = size / last extent, cols = last extent.

// [m x k] * [k x n] (or [n x k]^T when transpose_b) -> [m x n]
Variable matmul(const Variable& a, const Variable& b, bool transpose_b = false);
Variable add(const Variable& a, const Variable& b);
// Adds a bias vector (length = last extent of x) to every row of x.
Variable add_bias(const Variable& x, const Variable& bias);
Variable mul(const Variable& a, const Variable& b);
Variable scale(const Variable& x, double factor);
Variable sigmoid(const Variable& x);
Variable tanh(const Variable& x);
Variable relu(const Variable& x);
Variable reshape(const Variable& x, Shape shape);
// Columns [begin, end) of the last extent.
Variable slice_last(const Variable& x, std::size_t begin, std::size_t end);
// Concatenation along the last extent; leading extents must agree.
Variable concat_last(const Variable& a, const Variable& b);
// x [B x T x F] -> [B x F] at time t.
Variable select_step(const Variable& x, std::size_t t);
// T tensors of [B x F] -> [B x T x F].
Variable stack_steps(const std::vector<Variable>& steps);
Variable sum(const Variable& x);
Variable sum_squares(const Variable& x);

// ---- layers ---------------------------------------------------------------

// x [B x in], W [in x out], b [out] -> x W + b
Variable dense(const Variable& x, const Variable& W, const Variable& b);

// Cross-correlation with a 3x3 kernel, stride 1, zero "same" padding.
// x [B x C x H x W], K [O x C x 3 x 3], b [O] -> [B x O x H x W]
Variable conv2d(const Variable& x, const Variable& K, const Variable& b);

// 2x2 max pooling, stride 2; odd trailing row/column dropped. The gradient
// goes to the first maximal element in row-major window order.
Variable maxpool2(const Variable& x);

struct BatchNormState {
  Variable gamma;  // [C]
  Variable beta;   // [C]
  std::vector<double> running_mean;
  std::vector<double> running_var;
  double momentum = 0.1;
  double eps = 1e-5;

  static BatchNormState create(std::size_t channels);
  std::size_t channels() const { return running_mean.size(); }
};

// Per-channel normalization of x [B x C x ...]. Train mode uses biased batch
// statistics and updates the running estimates (unbiased variance) with
// `momentum`; infer mode uses the running estimates.
Variable batchnorm(const Variable& x, BatchNormState& state, Mode mode);

// Inverted dropout: in train mode each element is kept with probability
// keep_p and scaled by 1/keep_p. Infer mode is the identity.
Variable dropout(const Variable& x, double keep_p, Mode mode, Rng& rng);

// ---- output ---------------------------------------------------------------

// Row-wise max-subtracted softmax of [B x K] logits.
Tensor softmax(const Tensor& logits);

struct SoftmaxXent {
  double loss = 0.0;  // mean over the batch
  Tensor dlogits;     // (softmax - labels) / batch
};

// labels must be one-hot rows of the same shape as logits.
SoftmaxXent softmax_xent(const Tensor& logits, const Tensor& labels);
Variable cross_entropy(const Variable& logits, const Tensor& labels);
Tensor one_hot(std::span<const int> classes, std::size_t n_classes);

// x [B x T x 2H] -> [B x 2H]: forward half of the last step followed by the
// backward half of the first step.
Variable sequence_summary(const Variable& x);

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace murmur::nn
