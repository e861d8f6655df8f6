#include "murmur/nn/lstm.h"

#include <memory>

#include "eigen_maps.h"
#include "murmur/error.h"

namespace murmur::nn {

using detail::CStridedR;
using detail::MatR;

LstmParams LstmParams::create(std::size_t input, std::size_t hidden, Rng& rng) {
  LstmParams p;
  p.W = Variable(xavier_uniform({4, hidden, input}, input, hidden, rng), true);
  p.U = Variable(xavier_uniform({4, hidden, hidden}, hidden, hidden, rng), true);
  Tensor b({4, hidden});
  for (std::size_t j = 0; j < hidden; ++j) b[hidden + j] = 1.0;
  p.b = Variable(std::move(b), true);
  return p;
}

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
  LstmParams p;
  p.W = Variable(Tensor({4, hidden, input}), true);
  p.U = Variable(Tensor({4, hidden, hidden}), true);
  p.b = Variable(Tensor({4, hidden}), true);
  return p;
}

namespace {

// tanh through the vectorized exp; Eigen has no packet tanh for double.
template <typename A>
auto fast_tanh(const A& x) {
  return 1.0 - 2.0 / (1.0 + (2.0 * x).exp());
}

void check_params(const LstmParams& p) {
  const auto& W = p.W.shape();
  const auto& U = p.U.shape();
  const auto& b = p.b.shape();
  if (W.size() != 3 || W[0] != 4 || U.size() != 3 || U[0] != 4 || U[1] != W[1] || U[2] != W[1] || b.size() != 2 ||
      b[0] != 4 || b[1] != W[1])
    throw ShapeError("lstm: parameters must be W [4 x H x in], U [4 x H x H], b [4 x H]");
}

}  // namespace

LstmStep lstm_step(const Variable& x_t, const Variable& h_prev, const Variable& c_prev, const LstmParams& p) {
  check_params(p);
  const std::size_t H = p.hidden_size();
  if (x_t.value().ndim() != 2 || x_t.shape()[1] != p.input_size())
    throw ShapeError("lstm_step: x_t must be [B x input]");
  const Shape state{x_t.shape()[0], H};
  if (h_prev.shape() != state || c_prev.shape() != state) throw ShapeError("lstm_step: state must be [B x hidden]");

  const Variable pre = add_bias(add(matmul(x_t, p.W, true), matmul(h_prev, p.U, true)), p.b);
  const Variable i = sigmoid(slice_last(pre, 0, H));
  const Variable f = sigmoid(slice_last(pre, H, 2 * H));
  const Variable g = tanh(slice_last(pre, 2 * H, 3 * H));
  const Variable o = sigmoid(slice_last(pre, 3 * H, 4 * H));
  Variable c = add(mul(f, c_prev), mul(i, g));
  Variable h = mul(o, tanh(c));
  return {std::move(h), std::move(c)};
}

Variable lstm_unrolled(const Variable& x, const LstmParams& p, bool reverse) {
  check_params(p);
  const auto& X = x.value();
  if (X.ndim() != 3 || X.dim(1) == 0 || X.dim(2) != p.input_size())
    throw ShapeError("lstm_unrolled: input must be [B x T x input] with T >= 1");
  const std::size_t B = X.dim(0), T = X.dim(1), H = p.hidden_size();
  Variable h(Tensor({B, H}));
  Variable c(Tensor({B, H}));
  std::vector<Variable> outputs(T);
  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    auto step = lstm_step(select_step(x, t), h, c, p);
    h = step.h;
    c = step.c;
    outputs[t] = h;
  }
  return stack_steps(outputs);
}

namespace {

// Eigen evaluates the unaligned head of an array expression with scalar exp and the
// rest with its packet exp; the two differ in the last ulp. Fixing the base alignment
// makes that split depend on offsets only, so results do not depend on heap layout.
using AlignedBuf = std::vector<double, Eigen::aligned_allocator<double>>;

// All buffers are time-major: row (t, b) at index t * B + b.
struct DirectionCache {
  AlignedBuf gates;  // activated (i, f, g, o), width 4H
  AlignedBuf cells;  // c_t, width H
  AlignedBuf hidden;  // h_t, width H
};

struct BilstmCache {
  std::size_t B = 0, T = 0, in = 0, H = 0;
  AlignedBuf x_tm;  // input, width in
  DirectionCache dir[2];
};

using Idx = Eigen::Index;

// [B x T x w] batch-major <-> [T x B x w] time-major.
void to_time_major(const double* src, double* dst, std::size_t B, std::size_t T, std::size_t w) {
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t t = 0; t < T; ++t) std::copy_n(src + (b * T + t) * w, w, dst + (t * B + b) * w);
}

void run_direction(const BilstmCache& cache, const LstmParams& p, bool reverse, DirectionCache& dc) {
  const std::size_t B = cache.B, T = cache.T, H = cache.H, in = cache.in;
  const Idx G4 = static_cast<Idx>(4 * H), Hi = static_cast<Idx>(H), Bi = static_cast<Idx>(B);
  const detail::CMapR Wm(p.W.value().data(), G4, static_cast<Idx>(in));
  const detail::CMapR Um(p.U.value().data(), G4, Hi);
  const auto bias = detail::as_vector(p.b.value());

  dc.gates.resize(B * T * 4 * H);
  dc.cells.resize(B * T * H);
  dc.hidden.resize(B * T * H);
  detail::MapR gx(dc.gates.data(), static_cast<Idx>(B * T), G4);
  gx.noalias() = detail::CMapR(cache.x_tm.data(), static_cast<Idx>(B * T), static_cast<Idx>(in)) * Wm.transpose();
  gx.rowwise() += bias.transpose();

  for (std::size_t s = 0; s < T; ++s) {
    const std::size_t t = reverse ? T - 1 - s : s;
    const std::size_t tp = reverse ? t + 1 : t - 1;
    detail::MapR G(dc.gates.data() + t * B * 4 * H, Bi, G4);
    if (s > 0) G.noalias() += detail::CMapR(dc.hidden.data() + tp * B * H, Bi, Hi) * Um.transpose();
    auto ifo = G.leftCols(2 * Hi).array();
    ifo = 1.0 / (1.0 + (-ifo).exp());
    auto g = G.middleCols(2 * Hi, Hi).array();
    g = fast_tanh(g);
    auto o = G.rightCols(Hi).array();
    o = 1.0 / (1.0 + (-o).exp());

    detail::MapR C(dc.cells.data() + t * B * H, Bi, Hi);
    if (s > 0)
      C.array() = G.middleCols(Hi, Hi).array() * detail::CMapR(dc.cells.data() + tp * B * H, Bi, Hi).array() +
                  G.leftCols(Hi).array() * G.middleCols(2 * Hi, Hi).array();
    else
      C.array() = G.leftCols(Hi).array() * G.middleCols(2 * Hi, Hi).array();
    detail::MapR(dc.hidden.data() + t * B * H, Bi, Hi).array() = G.rightCols(Hi).array() * fast_tanh(C.array());
  }
}

// Writes h_t of one direction into columns [offset, offset + H) of Y.
void scatter_output(const DirectionCache& dc, std::size_t offset, Tensor& Y, std::size_t B, std::size_t T,
                    std::size_t H) {
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t b = 0; b < B; ++b)
      std::copy_n(dc.hidden.data() + (t * B + b) * H, H, Y.data() + (b * T + t) * 2 * H + offset);
}

// dA_tm receives dL/d(pre-activation gates), time-major.
void backprop_direction(const BilstmCache& cache, const Tensor& dY, const LstmParams& p, bool reverse,
                        std::size_t offset, const DirectionCache& dc, AlignedBuf& dA_tm, Tensor* dW,
                        Tensor* dU, Tensor* db) {
  const std::size_t B = cache.B, T = cache.T, H = cache.H, in = cache.in;
  const Idx G4 = static_cast<Idx>(4 * H), Hi = static_cast<Idx>(H), Bi = static_cast<Idx>(B);
  const detail::CMapR Um(p.U.value().data(), G4, Hi);
  const Eigen::OuterStride<> out_stride(static_cast<Idx>(T * 2 * H));

  dA_tm.resize(B * T * 4 * H);
  MatR dU_acc = MatR::Zero(G4, Hi);
  MatR dh_next = MatR::Zero(Bi, Hi);
  MatR dc_next = MatR::Zero(Bi, Hi);
  MatR dh(Bi, Hi), dc_t(Bi, Hi), tc(Bi, Hi);

  for (std::size_t s = T; s-- > 0;) {
    const std::size_t t = reverse ? T - 1 - s : s;
    const std::size_t tp = reverse ? t + 1 : t - 1;  // previous step in processing order
    const bool first = s == 0;
    const detail::CMapR G(dc.gates.data() + t * B * 4 * H, Bi, G4);
    const detail::CMapR C(dc.cells.data() + t * B * H, Bi, Hi);
    const CStridedR dYt(dY.data() + t * 2 * H + offset, Bi, Hi, out_stride);

    const auto i = G.leftCols(Hi).array();
    const auto f = G.middleCols(Hi, Hi).array();
    const auto g = G.middleCols(2 * Hi, Hi).array();
    const auto o = G.rightCols(Hi).array();

    dh = dYt + dh_next;
    tc.array() = fast_tanh(C.array());
    dc_t.array() = dc_next.array() + dh.array() * o * (1.0 - tc.array().square());

    detail::MapR dA(dA_tm.data() + t * B * 4 * H, Bi, G4);
    dA.leftCols(Hi).array() = dc_t.array() * g * i * (1.0 - i);
    if (first)
      dA.middleCols(Hi, Hi).setZero();
    else
      dA.middleCols(Hi, Hi).array() =
          dc_t.array() * detail::CMapR(dc.cells.data() + tp * B * H, Bi, Hi).array() * f * (1.0 - f);
    dA.middleCols(2 * Hi, Hi).array() = dc_t.array() * i * (1.0 - g.square());
    dA.rightCols(Hi).array() = dh.array() * tc.array() * o * (1.0 - o);

    dc_next.array() = dc_t.array() * f;
    if (!first) {
      dh_next.noalias() = dA * Um;
      dU_acc.noalias() += dA.transpose() * detail::CMapR(dc.hidden.data() + tp * B * H, Bi, Hi);
    }
  }

  const detail::CMapR dAll(dA_tm.data(), static_cast<Idx>(B * T), G4);
  if (dU) detail::MapR(dU->data(), G4, Hi) += dU_acc;
  if (dW)
    detail::MapR(dW->data(), G4, static_cast<Idx>(in)).noalias() +=
        dAll.transpose() * detail::CMapR(cache.x_tm.data(), static_cast<Idx>(B * T), static_cast<Idx>(in));
  if (db) detail::as_vector(*db) += dAll.colwise().sum().transpose();
}

}  // namespace

Variable bilstm_layer(const Variable& x, const LstmParams& fwd, const LstmParams& bwd) {
  check_params(fwd);
  check_params(bwd);
  const auto& X = x.value();
  if (X.ndim() != 3 || X.dim(1) == 0) throw ShapeError("bilstm_layer: input must be [B x T x in] with T >= 1");
  if (X.dim(2) != fwd.input_size() || X.dim(2) != bwd.input_size())
    throw ShapeError("bilstm_layer: input width does not match parameters");
  if (fwd.hidden_size() != bwd.hidden_size()) throw ShapeError("bilstm_layer: directions differ in hidden size");

  auto cache = std::make_shared<BilstmCache>();
  cache->B = X.dim(0);
  cache->T = X.dim(1);
  cache->in = X.dim(2);
  cache->H = fwd.hidden_size();
  const std::size_t B = cache->B, T = cache->T, H = cache->H, in = cache->in;
  cache->x_tm.resize(B * T * in);
  to_time_major(X.data(), cache->x_tm.data(), B, T, in);

  Tensor Y({B, T, 2 * H});
  run_direction(*cache, fwd, false, cache->dir[0]);
  run_direction(*cache, bwd, true, cache->dir[1]);
  scatter_output(cache->dir[0], 0, Y, B, T, H);
  scatter_output(cache->dir[1], H, Y, B, T, H);

  std::vector<Variable> inputs{x, fwd.W, fwd.U, fwd.b, bwd.W, bwd.U, bwd.b};
  return Variable::make(std::move(Y), std::move(inputs), [cache](detail::Node& self) {
    auto grad = [](Variable& v) -> Tensor* { return v.requires_grad() ? &v.grad_buffer() : nullptr; };
    auto& in = self.inputs;
    const LstmParams fwd{in[1], in[2], in[3]};
    const LstmParams bwd{in[4], in[5], in[6]};
    const std::size_t B = cache->B, T = cache->T, H = cache->H, width = cache->in;
    const Idx rows = static_cast<Idx>(B * T), G4 = static_cast<Idx>(4 * H);

    AlignedBuf dA;
    MatR dX_tm;
    Tensor* dX = grad(in[0]);
    if (dX) dX_tm = MatR::Zero(rows, static_cast<Idx>(width));
    const LstmParams* params[2] = {&fwd, &bwd};
    for (int d = 0; d < 2; ++d) {
      const auto& p = *params[d];
      backprop_direction(*cache, self.grad, p, d == 1, d == 0 ? 0 : H, cache->dir[d], dA, grad(in[1 + 3 * d]),
                         grad(in[2 + 3 * d]), grad(in[3 + 3 * d]));
      if (dX)
        dX_tm.noalias() += detail::CMapR(dA.data(), rows, G4) *
                           detail::CMapR(p.W.value().data(), G4, static_cast<Idx>(width));
    }
    if (dX) {
      double* out = dX->data();
      for (std::size_t t = 0; t < T; ++t)
        for (std::size_t b = 0; b < B; ++b) {
          const double* src = dX_tm.data() + (t * B + b) * width;
          double* dst = out + (b * T + t) * width;
          for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
        }
    }
  });
}

}  // namespace murmur::nn
