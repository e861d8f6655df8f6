#include "murmur/nn/ops.h"

#include <algorithm>
#include <cmath>

#include "eigen_maps.h"
#include "murmur/error.h"

namespace murmur::nn {

using detail::as_matrix;
using detail::as_vector;
using detail::cols_of;
using detail::MatR;
using detail::rows_of;

namespace {

// Gradient buffer of a tracked input, or nullptr.
Tensor* grad_of(Variable& v) { return v.requires_grad() ? &v.grad_buffer() : nullptr; }

void require(bool ok, const std::string& what) {
  if (!ok) throw ShapeError(what);
}

template <typename Fn, typename Deriv>
Variable unary(const Variable& x, Fn fn, Deriv deriv_from_output) {
  Tensor out(x.shape());
  const auto& in = x.value();
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = fn(in[i]);
  return Variable::make(std::move(out), {x}, [deriv_from_output](detail::Node& self) {
    Tensor* gx = grad_of(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < gx->size(); ++i) (*gx)[i] += self.grad[i] * deriv_from_output(self.value[i]);
  });
}

}  // namespace

Variable matmul(const Variable& a, const Variable& b, bool transpose_b) {
  const auto& A = a.value();
  const auto& B = b.value();
  const std::size_t k = cols_of(A);
  const std::size_t bk = transpose_b ? cols_of(B) : rows_of(B);
  require(k == bk, "matmul: inner dimensions " + shape_string(A.shape()) + " vs " + shape_string(B.shape()));
  const std::size_t m = rows_of(A);
  const std::size_t n = transpose_b ? rows_of(B) : cols_of(B);
  Tensor out({m, n});
  if (transpose_b) as_matrix(out).noalias() = as_matrix(A) * as_matrix(B).transpose();
  else as_matrix(out).noalias() = as_matrix(A) * as_matrix(B);

  return Variable::make(std::move(out), {a, b}, [transpose_b](detail::Node& self) {
    auto& va = self.inputs[0];
    auto& vb = self.inputs[1];
    const auto dY = as_matrix(self.grad);
    if (Tensor* ga = grad_of(va)) {
      if (transpose_b) as_matrix(*ga).noalias() += dY * as_matrix(vb.value());
      else as_matrix(*ga).noalias() += dY * as_matrix(vb.value()).transpose();
    }
    if (Tensor* gb = grad_of(vb)) {
      if (transpose_b) as_matrix(*gb).noalias() += dY.transpose() * as_matrix(va.value());
      else as_matrix(*gb).noalias() += as_matrix(va.value()).transpose() * dY;
    }
  });
}

Variable add(const Variable& a, const Variable& b) {
  require(a.shape() == b.shape(), "add: shape mismatch");
  Tensor out(a.shape());
  as_vector(out) = as_vector(a.value()) + as_vector(b.value());
  return Variable::make(std::move(out), {a, b}, [](detail::Node& self) {
    for (auto& in : self.inputs)
      if (Tensor* g = grad_of(in)) as_vector(*g) += as_vector(self.grad);
  });
}

Variable add_bias(const Variable& x, const Variable& bias) {
  require(bias.value().size() == cols_of(x.value()), "add_bias: bias length must equal the last extent");
  Tensor out = x.value();
  as_matrix(out).rowwise() += as_vector(bias.value()).transpose();
  return Variable::make(std::move(out), {x, bias}, [](detail::Node& self) {
    if (Tensor* gx = grad_of(self.inputs[0])) as_vector(*gx) += as_vector(self.grad);
    if (Tensor* gb = grad_of(self.inputs[1])) as_vector(*gb) += as_matrix(self.grad).colwise().sum().transpose();
  });
}

Variable mul(const Variable& a, const Variable& b) {
  require(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor out(a.shape());
  as_vector(out) = as_vector(a.value()).cwiseProduct(as_vector(b.value()));
  return Variable::make(std::move(out), {a, b}, [](detail::Node& self) {
    auto& va = self.inputs[0];
    auto& vb = self.inputs[1];
    if (Tensor* ga = grad_of(va)) as_vector(*ga) += as_vector(self.grad).cwiseProduct(as_vector(vb.value()));
    if (Tensor* gb = grad_of(vb)) as_vector(*gb) += as_vector(self.grad).cwiseProduct(as_vector(va.value()));
  });
}

Variable scale(const Variable& x, double factor) {
  Tensor out(x.shape());
  as_vector(out) = as_vector(x.value()) * factor;
  return Variable::make(std::move(out), {x}, [factor](detail::Node& self) {
    if (Tensor* g = grad_of(self.inputs[0])) as_vector(*g) += as_vector(self.grad) * factor;
  });
}

Variable sigmoid(const Variable& x) {
  return unary(
      x, [](double v) { return 1.0 / (1.0 + std::exp(-v)); }, [](double y) { return y * (1.0 - y); });
}

Variable tanh(const Variable& x) {
  return unary(
      x, [](double v) { return std::tanh(v); }, [](double y) { return 1.0 - y * y; });
}

Variable relu(const Variable& x) {
  return unary(
      x, [](double v) { return v > 0.0 ? v : 0.0; }, [](double y) { return y > 0.0 ? 1.0 : 0.0; });
}

Variable reshape(const Variable& x, Shape shape) {
  Tensor out = x.value().reshaped(std::move(shape));
  return Variable::make(std::move(out), {x}, [](detail::Node& self) {
    if (Tensor* g = grad_of(self.inputs[0])) as_vector(*g) += as_vector(self.grad);
  });
}

Variable slice_last(const Variable& x, std::size_t begin, std::size_t end) {
  const auto& in = x.value();
  const std::size_t cols = cols_of(in);
  require(begin < end && end <= cols, "slice_last: range out of bounds");
  Shape shape = in.shape();
  shape.back() = end - begin;
  Tensor out(shape);
  as_matrix(out) = as_matrix(in).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin));
  return Variable::make(std::move(out), {x}, [begin, end](detail::Node& self) {
    if (Tensor* g = grad_of(self.inputs[0]))
      as_matrix(*g).middleCols(static_cast<Eigen::Index>(begin), static_cast<Eigen::Index>(end - begin)) +=
          as_matrix(self.grad);
  });
}

Variable concat_last(const Variable& a, const Variable& b) {
  const auto& A = a.value();
  const auto& B = b.value();
  require(A.ndim() == B.ndim() && rows_of(A) == rows_of(B) &&
              std::equal(A.shape().begin(), A.shape().end() - 1, B.shape().begin()),
          "concat_last: leading extents differ");
  const std::size_t ca = cols_of(A);
  const std::size_t cb = cols_of(B);
  Shape shape = A.shape();
  shape.back() = ca + cb;
  Tensor out(shape);
  auto M = as_matrix(out);
  M.leftCols(static_cast<Eigen::Index>(ca)) = as_matrix(A);
  M.rightCols(static_cast<Eigen::Index>(cb)) = as_matrix(B);
  return Variable::make(std::move(out), {a, b}, [ca, cb](detail::Node& self) {
    const auto G = as_matrix(self.grad);
    if (Tensor* ga = grad_of(self.inputs[0])) as_matrix(*ga) += G.leftCols(static_cast<Eigen::Index>(ca));
    if (Tensor* gb = grad_of(self.inputs[1])) as_matrix(*gb) += G.rightCols(static_cast<Eigen::Index>(cb));
  });
}

Variable select_step(const Variable& x, std::size_t t) {
  const auto& X = x.value();
  require(X.ndim() == 3 && t < X.dim(1), "select_step: input must be [B x T x F] with t < T");
  const std::size_t B = X.dim(0), T = X.dim(1), F = X.dim(2);
  Tensor out({B, F});
  for (std::size_t b = 0; b < B; ++b) std::copy_n(X.data() + (b * T + t) * F, F, out.data() + b * F);
  return Variable::make(std::move(out), {x}, [B, T, F, t](detail::Node& self) {
    Tensor* g = grad_of(self.inputs[0]);
    if (!g) return;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t f = 0; f < F; ++f) (*g)[(b * T + t) * F + f] += self.grad[b * F + f];
  });
}

Variable stack_steps(const std::vector<Variable>& steps) {
  require(!steps.empty(), "stack_steps: empty sequence");
  const auto& first = steps.front().value();
  require(first.ndim() == 2, "stack_steps: steps must be [B x F]");
  const std::size_t B = first.dim(0), F = first.dim(1), T = steps.size();
  Tensor out({B, T, F});
  for (std::size_t t = 0; t < T; ++t) {
    require(steps[t].shape() == first.shape(), "stack_steps: step shapes differ");
    const auto& s = steps[t].value();
    for (std::size_t b = 0; b < B; ++b) std::copy_n(s.data() + b * F, F, out.data() + (b * T + t) * F);
  }
  return Variable::make(std::move(out), steps, [B, T, F](detail::Node& self) {
    for (std::size_t t = 0; t < T; ++t) {
      Tensor* g = grad_of(self.inputs[t]);
      if (!g) continue;
      for (std::size_t b = 0; b < B; ++b)
        for (std::size_t f = 0; f < F; ++f) (*g)[b * F + f] += self.grad[(b * T + t) * F + f];
    }
  });
}

// Reductions over tensor storage run sequentially: Eigen's redux peels to the next
// aligned address, which would make the summation order depend on heap layout.
namespace {
double ordered_sum(const double* p, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += p[i];
  return s;
}
}  // namespace

Variable sum(const Variable& x) {
  Tensor out = Tensor::scalar(ordered_sum(x.value().data(), x.value().size()));
  return Variable::make(std::move(out), {x}, [](detail::Node& self) {
    if (Tensor* g = grad_of(self.inputs[0])) as_vector(*g).array() += self.grad[0];
  });
}

Variable sum_squares(const Variable& x) {
  double ss = 0.0;
  for (double v : x.value().span()) ss += v * v;
  Tensor out = Tensor::scalar(ss);
  return Variable::make(std::move(out), {x}, [](detail::Node& self) {
    auto& in = self.inputs[0];
    if (Tensor* g = grad_of(in)) as_vector(*g) += 2.0 * self.grad[0] * as_vector(in.value());
  });
}

Variable dense(const Variable& x, const Variable& W, const Variable& b) {
  require(x.value().ndim() == 2 && W.value().ndim() == 2 && x.shape()[1] == W.shape()[0],
          "dense: x " + shape_string(x.shape()) + " incompatible with W " + shape_string(W.shape()));
  require(b.value().size() == W.shape()[1], "dense: bias length must equal output width");
  return add_bias(matmul(x, W), b);
}

namespace {

// col [(C*9) x (H*W)] for one image [C x H x W].
void im2col(const double* img, std::size_t C, std::size_t H, std::size_t W, double* col) {
  const std::size_t hw = H * W;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        double* row = col + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          for (std::size_t x = 0; x < W; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            const bool inside = sy >= 0 && sy < static_cast<std::ptrdiff_t>(H) && sx >= 0 &&
                                sx < static_cast<std::ptrdiff_t>(W);
            row[y * W + x] = inside ? img[(c * H + static_cast<std::size_t>(sy)) * W + static_cast<std::size_t>(sx)] : 0.0;
          }
        }
      }
}

void col2im_add(const double* col, std::size_t C, std::size_t H, std::size_t W, double* img) {
  const std::size_t hw = H * W;
  for (std::size_t c = 0; c < C; ++c)
    for (std::size_t ky = 0; ky < 3; ++ky)
      for (std::size_t kx = 0; kx < 3; ++kx) {
        const double* row = col + ((c * 3 + ky) * 3 + kx) * hw;
        for (std::size_t y = 0; y < H; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - 1;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
          for (std::size_t x = 0; x < W; ++x) {
            const std::ptrdiff_t sx = static_cast<std::ptrdiff_t>(x + kx) - 1;
            if (sx < 0 || sx >= static_cast<std::ptrdiff_t>(W)) continue;
            img[(c * H + static_cast<std::size_t>(sy)) * W + static_cast<std::size_t>(sx)] += row[y * W + x];
          }
        }
      }
}

}  // namespace

Variable conv2d(const Variable& x, const Variable& K, const Variable& b) {
  const auto& X = x.value();
  const auto& Kv = K.value();
  require(X.ndim() == 4, "conv2d: input must be [B x C x H x W]");
  require(Kv.ndim() == 4 && Kv.dim(2) == 3 && Kv.dim(3) == 3, "conv2d: kernel must be [O x C x 3 x 3]");
  require(Kv.dim(1) == X.dim(1), "conv2d: kernel input channels " + std::to_string(Kv.dim(1)) +
                                     " != input channels " + std::to_string(X.dim(1)));
  require(b.value().size() == Kv.dim(0), "conv2d: bias length must equal output channels");
  const std::size_t B = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3), O = Kv.dim(0);
  const std::size_t hw = H * W;
  const auto kmat = Eigen::Index(O);
  const auto kcols = Eigen::Index(C * 9);

  Tensor out({B, O, H, W});
  MatR col(kcols, Eigen::Index(hw));
  const detail::CMapR Kmat(Kv.data(), kmat, kcols);
  const auto bias = as_vector(b.value());
  for (std::size_t n = 0; n < B; ++n) {
    im2col(X.data() + n * C * hw, C, H, W, col.data());
    detail::MapR Y(out.data() + n * O * hw, kmat, Eigen::Index(hw));
    Y.noalias() = Kmat * col;
    Y.colwise() += bias;
  }

  return Variable::make(std::move(out), {x, K, b}, [B, C, H, W, O, hw, kmat, kcols](detail::Node& self) {
    auto& vx = self.inputs[0];
    auto& vk = self.inputs[1];
    Tensor* gx = grad_of(vx);
    Tensor* gk = grad_of(vk);
    Tensor* gb = grad_of(self.inputs[2]);
    const detail::CMapR Kmat(vk.value().data(), kmat, kcols);
    MatR col(kcols, Eigen::Index(hw));
    MatR dcol(kcols, Eigen::Index(hw));
    for (std::size_t n = 0; n < B; ++n) {
      const detail::CMapR dY(self.grad.data() + n * O * hw, kmat, Eigen::Index(hw));
      if (gb)
        for (Eigen::Index o = 0; o < kmat; ++o) (*gb)[o] += ordered_sum(dY.data() + o * hw, hw);
      if (gk) {
        im2col(vx.value().data() + n * C * hw, C, H, W, col.data());
        detail::MapR(gk->data(), kmat, kcols).noalias() += dY * col.transpose();
      }
      if (gx) {
        dcol.noalias() = Kmat.transpose() * dY;
        col2im_add(dcol.data(), C, H, W, gx->data() + n * C * hw);
      }
    }
  });
}

Variable maxpool2(const Variable& x) {
  const auto& X = x.value();
  require(X.ndim() == 4, "maxpool2: input must be [B x C x H x W]");
  const std::size_t B = X.dim(0), C = X.dim(1), H = X.dim(2), W = X.dim(3);
  require(H >= 2 && W >= 2, "maxpool2: spatial extents must be at least 2");
  const std::size_t Ho = H / 2, Wo = W / 2;
  Tensor out({B, C, Ho, Wo});
  std::vector<std::size_t> argmax(out.size());
  for (std::size_t plane = 0; plane < B * C; ++plane) {
    const double* in = X.data() + plane * H * W;
    for (std::size_t y = 0; y < Ho; ++y)
      for (std::size_t xo = 0; xo < Wo; ++xo) {
        std::size_t best = (2 * y) * W + 2 * xo;
        for (std::size_t dy = 0; dy < 2; ++dy)
          for (std::size_t dx = 0; dx < 2; ++dx) {
            const std::size_t idx = (2 * y + dy) * W + 2 * xo + dx;
            if (in[idx] > in[best]) best = idx;
          }
        const std::size_t o = plane * Ho * Wo + y * Wo + xo;
        out[o] = in[best];
        argmax[o] = plane * H * W + best;
      }
  }
  return Variable::make(std::move(out), {x}, [argmax = std::move(argmax)](detail::Node& self) {
    Tensor* gx = grad_of(self.inputs[0]);
    if (!gx) return;
    for (std::size_t o = 0; o < argmax.size(); ++o) (*gx)[argmax[o]] += self.grad[o];
  });
}

BatchNormState BatchNormState::create(std::size_t channels) {
  BatchNormState s;
  s.gamma = Variable(Tensor({channels}, 1.0), true);
  s.beta = Variable(Tensor({channels}, 0.0), true);
  s.running_mean.assign(channels, 0.0);
  s.running_var.assign(channels, 1.0);
  return s;
}

Variable batchnorm(const Variable& x, BatchNormState& state, Mode mode) {
  const auto& X = x.value();
  require(X.ndim() >= 2, "batchnorm: input must be [B x C x ...]");
  const std::size_t B = X.dim(0), C = X.dim(1);
  require(C == state.channels(), "batchnorm: channel count mismatch");
  if (mode == Mode::kTrain && B < 2) throw ArgumentError("batchnorm: train mode needs a batch of at least 2");
  const std::size_t S = X.size() / (B * C);
  const double N = static_cast<double>(B * S);

  std::vector<double> mean(C, 0.0), inv_std(C, 0.0);
  if (mode == Mode::kTrain) {
    for (std::size_t c = 0; c < C; ++c) {
      double acc = 0.0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t s = 0; s < S; ++s) acc += X[(n * C + c) * S + s];
      mean[c] = acc / N;
      double var = 0.0;
      for (std::size_t n = 0; n < B; ++n)
        for (std::size_t s = 0; s < S; ++s) {
          const double d = X[(n * C + c) * S + s] - mean[c];
          var += d * d;
        }
      var /= N;
      inv_std[c] = 1.0 / std::sqrt(var + state.eps);
      state.running_mean[c] = (1.0 - state.momentum) * state.running_mean[c] + state.momentum * mean[c];
      state.running_var[c] = (1.0 - state.momentum) * state.running_var[c] + state.momentum * var * N / (N - 1.0);
    }
  } else {
    for (std::size_t c = 0; c < C; ++c) {
      mean[c] = state.running_mean[c];
      inv_std[c] = 1.0 / std::sqrt(state.running_var[c] + state.eps);
    }
  }

  const auto& gamma = state.gamma.value();
  const auto& beta = state.beta.value();
  Tensor xhat(X.shape());
  Tensor out(X.shape());
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t s = 0; s < S; ++s) {
        const std::size_t i = (n * C + c) * S + s;
        xhat[i] = (X[i] - mean[c]) * inv_std[c];
        out[i] = gamma[c] * xhat[i] + beta[c];
      }

  const bool train = mode == Mode::kTrain;
  return Variable::make(std::move(out), {x, state.gamma, state.beta},
                        [B, C, S, N, train, inv_std = std::move(inv_std), xhat = std::move(xhat)](detail::Node& self) {
                          Tensor* gx = grad_of(self.inputs[0]);
                          Tensor* gg = grad_of(self.inputs[1]);
                          Tensor* gbeta = grad_of(self.inputs[2]);
                          const auto& gamma = self.inputs[1].value();
                          const auto& dy = self.grad;
                          for (std::size_t c = 0; c < C; ++c) {
                            double sum_dy = 0.0, sum_dy_xhat = 0.0;
                            for (std::size_t n = 0; n < B; ++n)
                              for (std::size_t s = 0; s < S; ++s) {
                                const std::size_t i = (n * C + c) * S + s;
                                sum_dy += dy[i];
                                sum_dy_xhat += dy[i] * xhat[i];
                              }
                            if (gg) (*gg)[c] += sum_dy_xhat;
                            if (gbeta) (*gbeta)[c] += sum_dy;
                            if (!gx) continue;
                            const double k = gamma[c] * inv_std[c];
                            for (std::size_t n = 0; n < B; ++n)
                              for (std::size_t s = 0; s < S; ++s) {
                                const std::size_t i = (n * C + c) * S + s;
                                if (train)
                                  (*gx)[i] += k / N * (N * dy[i] - sum_dy - xhat[i] * sum_dy_xhat);
                                else
                                  (*gx)[i] += k * dy[i];
                              }
                          }
                        });
}

Variable dropout(const Variable& x, double keep_p, Mode mode, Rng& rng) {
  if (!(keep_p > 0.0) || keep_p > 1.0) throw ArgumentError("dropout: keep probability must lie in (0, 1]");
  if (mode == Mode::kInfer || keep_p == 1.0) return x;
  const auto& X = x.value();
  std::vector<double> mask(X.size());
  // Keep iff a 53-bit uniform draw falls below keep_p; mt19937_64 output is
  // fully specified, so masks are identical across standard libraries.
  const double inv = 1.0 / keep_p;
  for (auto& m : mask) m = static_cast<double>(rng() >> 11) * 0x1.0p-53 < keep_p ? inv : 0.0;
  Tensor out(X.shape());
  for (std::size_t i = 0; i < X.size(); ++i) out[i] = X[i] * mask[i];
  return Variable::make(std::move(out), {x}, [mask = std::move(mask)](detail::Node& self) {
    Tensor* gx = grad_of(self.inputs[0]);
    if (!gx) return;
    for (std::size_t i = 0; i < mask.size(); ++i) (*gx)[i] += self.grad[i] * mask[i];
  });
}

Tensor softmax(const Tensor& logits) {
  require(logits.ndim() == 2, "softmax: logits must be [B x K]");
  Tensor out(logits.shape());
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  for (std::size_t n = 0; n < B; ++n) {
    const double* z = logits.data() + n * K;
    double* p = out.data() + n * K;
    const double m = *std::max_element(z, z + K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += (p[k] = std::exp(z[k] - m));
    for (std::size_t k = 0; k < K; ++k) p[k] /= total;
  }
  return out;
}

SoftmaxXent softmax_xent(const Tensor& logits, const Tensor& labels) {
  require(logits.ndim() == 2 && labels.shape() == logits.shape(), "softmax_xent: labels must match logits");
  const std::size_t B = logits.dim(0), K = logits.dim(1);
  if (B == 0) throw ArgumentError("softmax_xent: empty batch");
  for (std::size_t n = 0; n < B; ++n) {
    int ones = 0;
    for (std::size_t k = 0; k < K; ++k) {
      const double v = labels[n * K + k];
      if (v == 1.0) ++ones;
      else if (v != 0.0) throw ArgumentError("softmax_xent: labels must be one-hot");
    }
    if (ones != 1) throw ArgumentError("softmax_xent: labels must be one-hot");
  }

  SoftmaxXent r;
  r.dlogits = softmax(logits);
  for (std::size_t n = 0; n < B; ++n) {
    const double* z = logits.data() + n * K;
    const double m = *std::max_element(z, z + K);
    double total = 0.0;
    for (std::size_t k = 0; k < K; ++k) total += std::exp(z[k] - m);
    const double log_norm = m + std::log(total);
    for (std::size_t k = 0; k < K; ++k)
      if (labels[n * K + k] == 1.0) r.loss += log_norm - z[k];
  }
  r.loss /= static_cast<double>(B);
  for (std::size_t i = 0; i < r.dlogits.size(); ++i)
    r.dlogits[i] = (r.dlogits[i] - labels[i]) / static_cast<double>(B);
  return r;
}

Variable cross_entropy(const Variable& logits, const Tensor& labels) {
  auto r = softmax_xent(logits.value(), labels);
  return Variable::make(Tensor::scalar(r.loss), {logits}, [d = std::move(r.dlogits)](detail::Node& self) {
    if (Tensor* g = grad_of(self.inputs[0])) as_vector(*g) += self.grad[0] * as_vector(d);
  });
}

Tensor one_hot(std::span<const int> classes, std::size_t n_classes) {
  Tensor out({classes.size(), n_classes});
  for (std::size_t n = 0; n < classes.size(); ++n) {
    if (classes[n] < 0 || static_cast<std::size_t>(classes[n]) >= n_classes)
      throw ArgumentError("one_hot: class index out of range");
    out[n * n_classes + static_cast<std::size_t>(classes[n])] = 1.0;
  }
  return out;
}

Variable sequence_summary(const Variable& x) {
  const auto& X = x.value();
  require(X.ndim() == 3 && X.dim(2) % 2 == 0 && X.dim(1) >= 1, "sequence_summary: input must be [B x T x 2H]");
  const std::size_t B = X.dim(0), T = X.dim(1), F = X.dim(2), H = F / 2;
  Tensor out({B, F});
  for (std::size_t b = 0; b < B; ++b) {
    std::copy_n(X.data() + (b * T + T - 1) * F, H, out.data() + b * F);
    std::copy_n(X.data() + (b * T) * F + H, H, out.data() + b * F + H);
  }
  return Variable::make(std::move(out), {x}, [B, T, F, H](detail::Node& self) {
    Tensor* gx = grad_of(self.inputs[0]);
    if (!gx) return;
    for (std::size_t b = 0; b < B; ++b)
      for (std::size_t h = 0; h < H; ++h) {
        (*gx)[(b * T + T - 1) * F + h] += self.grad[b * F + h];
        (*gx)[(b * T) * F + H + h] += self.grad[b * F + H + h];
      }
  });
}

Tensor xavier_uniform(Shape shape, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  Tensor t(std::move(shape));
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (auto& v : t.span()) v = dist(rng);
  return t;
}

}  // namespace murmur::nn
