#pragma once

#include <vector>

#include "murmur/nn/ops.h"

namespace murmur::nn {

// Gate order is fixed as (input i, forget f, cell g, output o) along the
// leading axis of W, U and b.
struct LstmParams {
  Variable W;  // [4 x hidden x input]
  Variable U;  // [4 x hidden x hidden]
  Variable b;  // [4 x hidden]

  std::size_t input_size() const { return W.shape()[2]; }
  std::size_t hidden_size() const { return U.shape()[2]; }
  std::vector<Variable> parameters() const { return {W, U, b}; }

  // Xavier-uniform W and U (per-gate fans), forget-gate bias +1, other biases 0.
  static LstmParams create(std::size_t input, std::size_t hidden, Rng& rng);
  static LstmParams zeros(std::size_t input, std::size_t hidden);
};

struct LstmStep {
  Variable h;
  Variable c;
};

// One cell update composed from elementary graph ops:
//   i, f, o = sigmoid(.), g = tanh(.)
//   c_t = f * c_prev + i * g,  h_t = o * tanh(c_t)
LstmStep lstm_step(const Variable& x_t, const Variable& h_prev, const Variable& c_prev, const LstmParams& p);

// x [B x T x in] -> [B x T x H] by chaining lstm_step from zero state.
// With reverse = true the sequence is consumed right to left; the output
// stays in input time order.
Variable lstm_unrolled(const Variable& x, const LstmParams& p, bool reverse);

// x [B x T x in] -> [B x T x 2H]: forward-direction features first. A single
// graph node with hand-written backpropagation through time.
Variable bilstm_layer(const Variable& x, const LstmParams& fwd, const LstmParams& bwd);

}  // namespace murmur::nn
