#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <memory>
#include <vector>

#include "nbf/tensor.hpp"

namespace nbf {

namespace detail {

template <class S>
using MatMap = Eigen::Map<Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <class S>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// C[rows x cols] (+)= A[rows x k] * B[k x cols], all row-major.
template <class S>
void gemm_nn(int64_t rows, int64_t k, int64_t cols, const S* a, const S* b, S* c, bool acc) {
  const int64_t blocks = std::max<int64_t>(1, std::min<int64_t>(threads(), rows));
#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < blocks; ++blk) {
    const int64_t r0 = rows * blk / blocks, r1 = rows * (blk + 1) / blocks;
    if (r0 == r1) continue;
    ConstMatMap<S> am(a + r0 * k, r1 - r0, k);
    ConstMatMap<S> bm(b, k, cols);
    MatMap<S> cm(c + r0 * cols, r1 - r0, cols);
    if (acc)
      cm.noalias() += am * bm;
    else
      cm.noalias() = am * bm;
  }
}

/// C[rows x cols] (+)= A[rows x k] * B^T, with B stored row-major [cols x k].
template <class S>
void gemm_nt(int64_t rows, int64_t k, int64_t cols, const S* a, const S* b, S* c, bool acc) {
  const int64_t blocks = std::max<int64_t>(1, std::min<int64_t>(threads(), rows));
#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < blocks; ++blk) {
    const int64_t r0 = rows * blk / blocks, r1 = rows * (blk + 1) / blocks;
    if (r0 == r1) continue;
    ConstMatMap<S> am(a + r0 * k, r1 - r0, k);
    ConstMatMap<S> bm(b, cols, k);
    MatMap<S> cm(c + r0 * cols, r1 - r0, cols);
    if (acc)
      cm.noalias() += am * bm.transpose();
    else
      cm.noalias() = am * bm.transpose();
  }
}

/// C[rows x cols] (+)= A^T * B, with A stored row-major [k x rows].
template <class S>
void gemm_tn(int64_t rows, int64_t k, int64_t cols, const S* a, const S* b, S* c, bool acc) {
  const int64_t blocks = std::max<int64_t>(1, std::min<int64_t>(threads(), rows));
#pragma omp parallel for schedule(static)
  for (int64_t blk = 0; blk < blocks; ++blk) {
    const int64_t r0 = rows * blk / blocks, r1 = rows * (blk + 1) / blocks;
    if (r0 == r1) continue;
    ConstMatMap<S> am(a, k, rows);
    ConstMatMap<S> bm(b, k, cols);
    MatMap<S> cm(c + r0 * cols, r1 - r0, cols);
    if (acc)
      cm.noalias() += am.middleCols(r0, r1 - r0).transpose() * bm;
    else
      cm.noalias() = am.middleCols(r0, r1 - r0).transpose() * bm;
  }
}

}  // namespace detail

/// Precomputed one-sided IDFT + synthesis-window tables for the
/// differentiable overlap-add synthesis.
template <class S>
struct IstftPlan {
  int bins = 0, window = 0, hop = 0;
  std::vector<S> idft;       // [2F x window]: re rows then im rows
  std::vector<S> synthesis;  // [window]

  IstftPlan() = default;
  IstftPlan(int fft_size, int window_length, int hop_size, const std::vector<double>& synthesis_win)
      : bins(fft_size / 2 + 1), window(window_length), hop(hop_size) {
    const int pad = (fft_size - window_length) / 2;
    idft.assign(size_t(2 * bins) * size_t(window), S(0));
    for (int f = 0; f < bins; ++f) {
      const double alpha = (f == 0 || f == bins - 1) ? 1.0 : 2.0;
      for (int n = 0; n < window; ++n) {
        const double theta = 2.0 * kPi * double(f) * double(pad + n) / double(fft_size);
        idft[size_t(f) * size_t(window) + size_t(n)] = S(alpha * std::cos(theta) / fft_size);
        // imaginary parts of DC and Nyquist do not contribute to a real signal
        if (f != 0 && f != bins - 1)
          idft[size_t(bins + f) * size_t(window) + size_t(n)] =
              S(-alpha * std::sin(theta) / fft_size);
      }
    }
    synthesis.resize(size_t(window));
    for (int n = 0; n < window; ++n) synthesis[size_t(n)] = S(synthesis_win[size_t(n)]);
  }

  int64_t output_length(int64_t frames) const { return (frames - 1) * hop + window; }
};

/// Define-by-run reverse-mode tape. Ops execute eagerly and push a backward
/// closure; backward() walks the tape in reverse and accumulates bound
/// parameter gradients.
template <class S>
class Graph {
 public:
  using Var = int;

  struct Node {
    Tensor<S> t;
    std::vector<S> g;
    std::function<void(Graph&)> back;
    Parameter<S>* bound = nullptr;
  };

  Var constant(Tensor<S> t) { return push(std::move(t), nullptr, nullptr); }

  Var param(Parameter<S>& p) {
    Tensor<S> t = p.value;  // copy in; gradient flows back through `bound`
    return push(std::move(t), nullptr, &p);
  }

  const Tensor<S>& value(Var id) const { return nodes_[size_t(id)]->t; }
  std::vector<S>& grad(Var id) { return nodes_[size_t(id)]->g; }
  size_t size() const { return nodes_.size(); }

  // ---------------------------------------------------------------- basics

  Var add(Var a, Var b) {
    const Tensor<S>&ta = value(a), &tb = value(b);
    NBF_REQUIRE(ta.numel() == tb.numel(), "add: size mismatch");
    Tensor<S> out = ta;
    for (int64_t i = 0; i < out.numel(); ++i) out.v[size_t(i)] += tb.v[size_t(i)];
    return push(std::move(out), [a, b](Graph& g, Node& n) {
      auto &ga = g.grad(a), &gb = g.grad(b);
      for (size_t i = 0; i < n.g.size(); ++i) {
        ga[i] += n.g[i];
        gb[i] += n.g[i];
      }
    });
  }

  Var mul(Var a, Var b) {
    const Tensor<S>&ta = value(a), &tb = value(b);
    NBF_REQUIRE(ta.numel() == tb.numel(), "mul: size mismatch");
    Tensor<S> out = ta;
    for (int64_t i = 0; i < out.numel(); ++i) out.v[size_t(i)] *= tb.v[size_t(i)];
    return push(std::move(out), [a, b](Graph& g, Node& n) {
      const auto &va = g.value(a).v, &vb = g.value(b).v;
      auto &ga = g.grad(a), &gb = g.grad(b);
      for (size_t i = 0; i < n.g.size(); ++i) {
        ga[i] += n.g[i] * vb[i];
        gb[i] += n.g[i] * va[i];
      }
    });
  }

  Var scale(Var a, S k) {
    Tensor<S> out = value(a);
    for (S& x : out.v) x *= k;
    return push(std::move(out), [a, k](Graph& g, Node& n) {
      auto& ga = g.grad(a);
      for (size_t i = 0; i < n.g.size(); ++i) ga[i] += k * n.g[i];
    });
  }

  /// Sum of all entries, as a scalar.
  Var sum(Var a) {
    Tensor<S> out({1});
    for (S x : value(a).v) out.v[0] += x;
    return push(std::move(out), [a](Graph& g, Node& n) {
      auto& ga = g.grad(a);
      for (S& x : ga) x += n.g[0];
    });
  }

  Var concat_last(Var a, Var b) {
    const Tensor<S>&ta = value(a), &tb = value(b);
    const int64_t la = ta.last_dim(), lb = tb.last_dim();
    const int64_t rows = ta.rows();
    NBF_REQUIRE(rows == tb.rows(), "concat_last: leading shape mismatch");
    std::vector<int64_t> shape = ta.shape;
    shape.back() = la + lb;
    Tensor<S> out(shape);
    for (int64_t r = 0; r < rows; ++r) {
      std::copy_n(ta.v.data() + r * la, la, out.v.data() + r * (la + lb));
      std::copy_n(tb.v.data() + r * lb, lb, out.v.data() + r * (la + lb) + la);
    }
    return push(std::move(out), [a, b, la, lb, rows](Graph& g, Node& n) {
      auto &ga = g.grad(a), &gb = g.grad(b);
      for (int64_t r = 0; r < rows; ++r) {
        for (int64_t i = 0; i < la; ++i) ga[size_t(r * la + i)] += n.g[size_t(r * (la + lb) + i)];
        for (int64_t i = 0; i < lb; ++i)
          gb[size_t(r * lb + i)] += n.g[size_t(r * (la + lb) + la + i)];
      }
    });
  }

  Var slice_last(Var x, int64_t offset, int64_t len) {
    const Tensor<S>& tx = value(x);
    const int64_t last = tx.last_dim(), rows = tx.rows();
    NBF_REQUIRE(offset >= 0 && len >= 1 && offset + len <= last, "slice_last: out of range");
    std::vector<int64_t> shape = tx.shape;
    shape.back() = len;
    Tensor<S> out(shape);
    for (int64_t r = 0; r < rows; ++r)
      std::copy_n(tx.v.data() + r * last + offset, len, out.v.data() + r * len);
    return push(std::move(out), [x, offset, len, last, rows](Graph& g, Node& n) {
      auto& gx = g.grad(x);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < len; ++i)
          gx[size_t(r * last + offset + i)] += n.g[size_t(r * len + i)];
    });
  }

  Var gather_last(Var x, std::vector<int64_t> idx) {
    const Tensor<S>& tx = value(x);
    const int64_t last = tx.last_dim(), rows = tx.rows(), k = int64_t(idx.size());
    for (int64_t i : idx) NBF_REQUIRE(i >= 0 && i < last, "gather_last: index out of range");
    std::vector<int64_t> shape = tx.shape;
    shape.back() = k;
    Tensor<S> out(shape);
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t i = 0; i < k; ++i) out.v[size_t(r * k + i)] = tx.v[size_t(r * last + idx[size_t(i)])];
    return push(std::move(out), [x, idx = std::move(idx), last, rows, k](Graph& g, Node& n) {
      auto& gx = g.grad(x);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < k; ++i)
          gx[size_t(r * last + idx[size_t(i)])] += n.g[size_t(r * k + i)];
    });
  }

  /// Same data, new shape. numel must match.
  Var reshape(Var x, std::vector<int64_t> shape) {
    const Tensor<S>& tx = value(x);
    NBF_REQUIRE(Tensor<S>::count(shape) == tx.numel(), "reshape: numel mismatch");
    Tensor<S> out(std::move(shape), tx.v);
    return push(std::move(out), [x](Graph& g, Node& n) {
      auto& gx = g.grad(x);
      for (size_t i = 0; i < n.g.size(); ++i) gx[i] += n.g[i];
    });
  }

  // ----------------------------------------------------------- dense layers

  /// x [.., in] * W^T + b with W [out x in], b [out].
  Var affine(Var x, Var w, Var b) {
    const Tensor<S>& tx = value(x);
    const Tensor<S>& tw = value(w);
    const int64_t in = tw.shape[1], out_dim = tw.shape[0];
    NBF_REQUIRE(tx.last_dim() == in, "affine: input dim mismatch");
    const int64_t rows = tx.rows();
    std::vector<int64_t> shape = tx.shape;
    shape.back() = out_dim;
    Tensor<S> out(shape);
    detail::gemm_nt<S>(rows, in, out_dim, tx.v.data(), tw.v.data(), out.v.data(), false);
    if (b >= 0) {
      const Tensor<S>& tb = value(b);
      NBF_REQUIRE(tb.numel() == out_dim, "affine: bias dim mismatch");
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t c = 0; c < out_dim; ++c) out.v[size_t(r * out_dim + c)] += tb.v[size_t(c)];
    }
    return push(std::move(out), [x, w, b, rows, in, out_dim](Graph& g, Node& n) {
      const auto& vx = g.value(x).v;
      const auto& vw = g.value(w).v;
      detail::gemm_nn<S>(rows, out_dim, in, n.g.data(), vw.data(), g.grad(x).data(), true);
      detail::gemm_tn<S>(out_dim, rows, in, n.g.data(), vx.data(), g.grad(w).data(), true);
      if (b >= 0) {
        auto& gb = g.grad(b);
        for (int64_t r = 0; r < rows; ++r)
          for (int64_t c = 0; c < out_dim; ++c) gb[size_t(c)] += n.g[size_t(r * out_dim + c)];
      }
    });
  }

  /// PReLU with one learnable slope per channel of the last dimension.
  Var prelu(Var x, Var alpha) {
    const Tensor<S>& tx = value(x);
    const int64_t c = tx.last_dim(), rows = tx.rows();
    NBF_REQUIRE(value(alpha).numel() == c, "prelu: slope count mismatch");
    Tensor<S> out = tx;
    const auto& va = value(alpha).v;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r)
      for (int64_t i = 0; i < c; ++i) {
        S& y = out.v[size_t(r * c + i)];
        if (y < S(0)) y *= va[size_t(i)];
      }
    return push(std::move(out), [x, alpha, rows, c](Graph& g, Node& n) {
      const auto& vx = g.value(x).v;
      const auto& va = g.value(alpha).v;
      auto &gx = g.grad(x), &ga = g.grad(alpha);
      for (int64_t r = 0; r < rows; ++r)
        for (int64_t i = 0; i < c; ++i) {
          const size_t k = size_t(r * c + i);
          if (vx[k] >= S(0)) {
            gx[k] += n.g[k];
          } else {
            gx[k] += n.g[k] * va[size_t(i)];
            ga[size_t(i)] += n.g[k] * vx[k];
          }
        }
    });
  }

  Var sigmoid(Var x) {
    Tensor<S> out = value(x);
    for (S& v : out.v) v = S(1) / (S(1) + std::exp(-v));
    return push(std::move(out), [x](Graph& g, Node& n) {
      auto& gx = g.grad(x);
      for (size_t i = 0; i < n.g.size(); ++i) {
        const S y = n.t.v[i];
        gx[i] += n.g[i] * y * (S(1) - y);
      }
    });
  }

  Var tanh_op(Var x) {
    Tensor<S> out = value(x);
    for (S& v : out.v) v = std::tanh(v);
    return push(std::move(out), [x](Graph& g, Node& n) {
      auto& gx = g.grad(x);
      for (size_t i = 0; i < n.g.size(); ++i) {
        const S y = n.t.v[i];
        gx[i] += n.g[i] * (S(1) - y * y);
      }
    });
  }

  /// Normalize over the last dimension, then apply the learnable affine.
  Var layer_norm(Var x, Var gamma, Var beta, S eps = S(1e-5)) {
    const Tensor<S>& tx = value(x);
    const int64_t d = tx.last_dim(), rows = tx.rows();
    NBF_REQUIRE(value(gamma).numel() == d && value(beta).numel() == d,
                "layer_norm: affine dim mismatch");
    Tensor<S> out = tx;
    auto stats = std::make_shared<std::vector<S>>(size_t(rows) * 2);  // mean, inv_std per row
    const auto& vg = value(gamma).v;
    const auto& vb = value(beta).v;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
      S* row = out.v.data() + r * d;
      S mean = S(0);
      for (int64_t i = 0; i < d; ++i) mean += row[i];
      mean /= S(d);
      S var = S(0);
      for (int64_t i = 0; i < d; ++i) var += (row[i] - mean) * (row[i] - mean);
      var /= S(d);
      const S inv_std = S(1) / std::sqrt(var + eps);
      (*stats)[size_t(r) * 2] = mean;
      (*stats)[size_t(r) * 2 + 1] = inv_std;
      for (int64_t i = 0; i < d; ++i)
        row[i] = vg[size_t(i)] * (row[i] - mean) * inv_std + vb[size_t(i)];
    }
    return push(std::move(out), [x, gamma, beta, rows, d, stats](Graph& g, Node& n) {
      const auto& vx = g.value(x).v;
      const auto& vg = g.value(gamma).v;
      auto &gx = g.grad(x), &gg = g.grad(gamma), &gb = g.grad(beta);
      for (int64_t r = 0; r < rows; ++r) {
        const S mean = (*stats)[size_t(r) * 2], inv_std = (*stats)[size_t(r) * 2 + 1];
        const S* xr = vx.data() + r * d;
        const S* gr = n.g.data() + r * d;
        S sum_gy = S(0), sum_gyx = S(0);
        for (int64_t i = 0; i < d; ++i) {
          const S xhat = (xr[i] - mean) * inv_std;
          const S gy = gr[i] * vg[size_t(i)];
          sum_gy += gy;
          sum_gyx += gy * xhat;
          gg[size_t(i)] += gr[i] * xhat;
          gb[size_t(i)] += gr[i];
        }
        for (int64_t i = 0; i < d; ++i) {
          const S xhat = (xr[i] - mean) * inv_std;
          const S gy = gr[i] * vg[size_t(i)];
          gx[size_t(r * d + i)] += inv_std * (gy - sum_gy / S(d) - xhat * sum_gyx / S(d));
        }
      }
    });
  }

  /// Dilated 1-D convolution over [T x c_in] with kernel [c_out x c_in x k].
  /// Centered taps at offsets (tap - k/2) * dilation; causal mode shifts all
  /// taps into the past. T is preserved via zero padding.
  Var conv1d(Var x, Var w, Var b, int dilation, bool causal = false) {
    const Tensor<S>& tx = value(x);
    const Tensor<S>& tw = value(w);
    NBF_REQUIRE(tw.shape.size() == 3, "conv1d: kernel must be [out x in x k]");
    const int64_t t_len = tx.shape[0], c_in = tx.last_dim();
    const int64_t c_out = tw.shape[0], k = tw.shape[2];
    NBF_REQUIRE(tw.shape[1] == c_in, "conv1d: channel mismatch");
    NBF_REQUIRE(k % 2 == 1, "conv1d: kernel size must be odd");
    NBF_REQUIRE(dilation >= 1, "conv1d: dilation must be >= 1");

    // im2col: [T x c_in*k], tap-major within a channel group
    auto cols = std::make_shared<std::vector<S>>(size_t(t_len) * size_t(c_in) * size_t(k), S(0));
    const int64_t center = causal ? k - 1 : k / 2;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < t_len; ++t) {
      S* dst = cols->data() + t * c_in * k;
      for (int64_t tap = 0; tap < k; ++tap) {
        const int64_t src_t = t + (tap - center) * dilation;
        if (src_t < 0 || src_t >= t_len) continue;
        const S* src = tx.v.data() + src_t * c_in;
        for (int64_t c = 0; c < c_in; ++c) dst[c * k + tap] = src[c];
      }
    }
    Tensor<S> out({t_len, c_out});
    detail::gemm_nt<S>(t_len, c_in * k, c_out, cols->data(), tw.v.data(), out.v.data(), false);
    if (b >= 0) {
      const auto& vb = value(b).v;
      for (int64_t t = 0; t < t_len; ++t)
        for (int64_t c = 0; c < c_out; ++c) out.v[size_t(t * c_out + c)] += vb[size_t(c)];
    }
    return push(std::move(out),
                [x, w, b, dilation, t_len, c_in, c_out, k, center, cols](Graph& g, Node& n) {
      const auto& vw = g.value(w).v;
      std::vector<S> dcols(size_t(t_len) * size_t(c_in) * size_t(k));
      detail::gemm_nn<S>(t_len, c_out, c_in * k, n.g.data(), vw.data(), dcols.data(), false);
      auto& gx = g.grad(x);
      for (int64_t t = 0; t < t_len; ++t) {  // col2im scatter-add, serial by design
        const S* src = dcols.data() + t * c_in * k;
        for (int64_t tap = 0; tap < k; ++tap) {
          const int64_t src_t = t + (tap - center) * dilation;
          if (src_t < 0 || src_t >= t_len) continue;
          for (int64_t c = 0; c < c_in; ++c) gx[size_t(src_t * c_in + c)] += src[c * k + tap];
        }
      }
      detail::gemm_tn<S>(c_out, t_len, c_in * k, n.g.data(), cols->data(), g.grad(w).data(), true);
      if (b >= 0) {
        auto& gb = g.grad(b);
        for (int64_t t = 0; t < t_len; ++t)
          for (int64_t c = 0; c < c_out; ++c) gb[size_t(c)] += n.g[size_t(t * c_out + c)];
      }
    });
  }

  /// One unidirectional GRU layer over x [T x B x D] -> [T x B x H].
  /// Gates in [r | z | c] order; candidate uses r (.) (U_c h_prev), the
  /// fused-gate variant. h0 defaults to zeros.
  Var gru(Var x, Var w_ih, Var w_hh, Var bias, Var h0 = -1) {
    const Tensor<S>& tx = value(x);
    NBF_REQUIRE(tx.shape.size() == 3, "gru: input must be [T x B x D]");
    const int64_t t_len = tx.shape[0], batch = tx.shape[1], d_in = tx.shape[2];
    const Tensor<S>& tw = value(w_ih);
    const int64_t h_dim = tw.shape[0] / 3;
    NBF_REQUIRE(tw.shape[0] == 3 * h_dim && tw.shape[1] == d_in, "gru: w_ih must be [3H x D]");
    NBF_REQUIRE(value(w_hh).shape[0] == 3 * h_dim && value(w_hh).shape[1] == h_dim,
                "gru: w_hh must be [3H x H]");
    NBF_REQUIRE(value(bias).numel() == 3 * h_dim, "gru: bias must be [3H]");
    if (h0 >= 0) NBF_REQUIRE(value(h0).numel() == batch * h_dim, "gru: h0 must be [B x H]");

    const int64_t bh = batch * h_dim;
    struct Cache {
      std::vector<S> r, z, c, uc_h, h;  // gate activations, U_c h_prev, outputs
    };
    auto cache = std::make_shared<Cache>();
    cache->r.resize(size_t(t_len * bh));
    cache->z.resize(size_t(t_len * bh));
    cache->c.resize(size_t(t_len * bh));
    cache->uc_h.resize(size_t(t_len * bh));
    cache->h.resize(size_t(t_len * bh));

    // input-to-hidden for every step in a single GEMM: [T*B x 3H]
    std::vector<S> gx(size_t(t_len * batch * 3 * h_dim));
    detail::gemm_nt<S>(t_len * batch, d_in, 3 * h_dim, tx.v.data(), tw.v.data(), gx.data(), false);
    {
      const auto& vb = value(bias).v;
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < t_len * batch; ++r)
        for (int64_t i = 0; i < 3 * h_dim; ++i) gx[size_t(r * 3 * h_dim + i)] += vb[size_t(i)];
    }

    const auto& vwhh = value(w_hh).v;
    std::vector<S> h_prev(size_t(bh), S(0));
    if (h0 >= 0) h_prev = value(h0).v;
    std::vector<S> gh(size_t(batch * 3 * h_dim));
    for (int64_t t = 0; t < t_len; ++t) {
      detail::gemm_nt<S>(batch, h_dim, 3 * h_dim, h_prev.data(), vwhh.data(), gh.data(), false);
      const S* gx_t = gx.data() + t * batch * 3 * h_dim;
      S* r_t = cache->r.data() + t * bh;
      S* z_t = cache->z.data() + t * bh;
      S* c_t = cache->c.data() + t * bh;
      S* u_t = cache->uc_h.data() + t * bh;
      S* h_t = cache->h.data() + t * bh;
#pragma omp parallel for schedule(static)
      for (int64_t bi = 0; bi < batch; ++bi) {
        const S* gxr = gx_t + bi * 3 * h_dim;
        const S* ghr = gh.data() + bi * 3 * h_dim;
        for (int64_t i = 0; i < h_dim; ++i) {
          const S r = S(1) / (S(1) + std::exp(-(gxr[i] + ghr[i])));
          const S z = S(1) / (S(1) + std::exp(-(gxr[h_dim + i] + ghr[h_dim + i])));
          const S uc = ghr[2 * h_dim + i];
          const S c = std::tanh(gxr[2 * h_dim + i] + r * uc);
          const S hp = h_prev[size_t(bi * h_dim + i)];
          r_t[bi * h_dim + i] = r;
          z_t[bi * h_dim + i] = z;
          u_t[bi * h_dim + i] = uc;
          c_t[bi * h_dim + i] = c;
          h_t[bi * h_dim + i] = (S(1) - z) * hp + z * c;
        }
      }
      std::copy_n(h_t, bh, h_prev.data());
    }

    Tensor<S> out({t_len, batch, h_dim}, cache->h);
    return push(std::move(out), [x, w_ih, w_hh, bias, h0, t_len, batch, d_in, h_dim, bh,
                                 cache](Graph& g, Node& n) {
      const auto& vx = g.value(x).v;
      const auto& vwih = g.value(w_ih).v;
      const auto& vwhh = g.value(w_hh).v;
      std::vector<S> da(size_t(t_len * batch * 3 * h_dim));   // [r|z|c] pre-activation grads
      std::vector<S> dgh(size_t(batch * 3 * h_dim));          // [da_r|da_z|dUc_h] per step
      std::vector<S> dh(size_t(bh), S(0));
      std::vector<S> dh_prev(static_cast<size_t>(bh));
      std::vector<S> h0_buf;
      const S* h0_ptr = nullptr;
      if (h0 >= 0) h0_ptr = g.value(h0).v.data();

      for (int64_t t = t_len - 1; t >= 0; --t) {
        const S* r_t = cache->r.data() + t * bh;
        const S* z_t = cache->z.data() + t * bh;
        const S* c_t = cache->c.data() + t * bh;
        const S* u_t = cache->uc_h.data() + t * bh;
        const S* hp_t = t > 0 ? cache->h.data() + (t - 1) * bh : h0_ptr;
        S* da_t = da.data() + t * batch * 3 * h_dim;
#pragma omp parallel for schedule(static)
        for (int64_t bi = 0; bi < batch; ++bi) {
          for (int64_t i = 0; i < h_dim; ++i) {
            const size_t k = size_t(bi * h_dim + i);
            const S dhv = dh[k] + n.g[size_t(t * bh) + k];
            const S r = r_t[k], z = z_t[k], c = c_t[k], uc = u_t[k];
            const S hp = hp_t ? hp_t[k] : S(0);
            const S dz = dhv * (c - hp);
            const S dc = dhv * z;
            const S da_c = dc * (S(1) - c * c);
            const S duc = da_c * r;
            const S dr = da_c * uc;
            const S da_r = dr * r * (S(1) - r);
            const S da_z = dz * z * (S(1) - z);
            da_t[bi * 3 * h_dim + i] = da_r;
            da_t[bi * 3 * h_dim + h_dim + i] = da_z;
            da_t[bi * 3 * h_dim + 2 * h_dim + i] = da_c;
            dgh[size_t(bi * 3 * h_dim + i)] = da_r;
            dgh[size_t(bi * 3 * h_dim + h_dim + i)] = da_z;
            dgh[size_t(bi * 3 * h_dim + 2 * h_dim + i)] = duc;
            dh_prev[k] = dhv * (S(1) - z);
          }
        }
        // dh_prev += dgh * Whh ; dWhh += dgh^T * h_prev
        detail::gemm_nn<S>(batch, 3 * h_dim, h_dim, dgh.data(), vwhh.data(), dh_prev.data(), true);
        if (hp_t != nullptr)
          detail::gemm_tn<S>(3 * h_dim, batch, h_dim, dgh.data(), hp_t, g.grad(w_hh).data(), true);
        if (t == 0 && h0 >= 0) {
          auto& gh0 = g.grad(h0);
          for (size_t k = 0; k < size_t(bh); ++k) gh0[k] += dh_prev[k];
        }
        std::swap(dh, dh_prev);
      }
      // input-side gradients in bulk
      detail::gemm_nn<S>(t_len * batch, 3 * h_dim, d_in, da.data(), vwih.data(), g.grad(x).data(),
                         true);
      detail::gemm_tn<S>(3 * h_dim, t_len * batch, d_in, da.data(), vx.data(), g.grad(w_ih).data(),
                         true);
      auto& gb = g.grad(bias);
      for (int64_t rr = 0; rr < t_len * batch; ++rr)
        for (int64_t i = 0; i < 3 * h_dim; ++i) gb[size_t(i)] += da[size_t(rr * 3 * h_dim + i)];
    });
  }

  // ----------------------------------------------- complex-as-real T-F ops

  /// Estimated multichannel spectrum from a complex ratio filter.
  /// crf [T x F x 2K2] with taps [re(K2) | im(K2)], K2 = (2k+1)^2;
  /// y [T x F x 2M] packed [re(M) | im(M)] and constant (no gradient).
  /// out(t,f,m) = sum_taps crf(t+t1, f+t2)[tap] * y(t+t1, f+t2, m).
  Var apply_crf(Var crf, Var y, int64_t bins, int64_t mics, int half_width) {
    const Tensor<S>& tc = value(crf);
    const Tensor<S>& ty = value(y);
    const int64_t k = 2 * int64_t(half_width) + 1, k2 = k * k;
    const int64_t t_len = tc.numel() / (bins * 2 * k2);
    NBF_REQUIRE(tc.numel() == t_len * bins * 2 * k2, "apply_crf: crf shape mismatch");
    NBF_REQUIRE(ty.numel() == t_len * bins * 2 * mics, "apply_crf: spectrogram shape mismatch");

    Tensor<S> out({t_len, bins, 2 * mics});
    const S* cv = tc.v.data();
    const S* yv = ty.v.data();
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < t_len; ++t) {
      for (int64_t f = 0; f < bins; ++f) {
        S* o = out.v.data() + (t * bins + f) * 2 * mics;
        for (int64_t t1 = -half_width; t1 <= half_width; ++t1) {
          const int64_t tt = t + t1;
          if (tt < 0 || tt >= t_len) continue;
          for (int64_t t2 = -half_width; t2 <= half_width; ++t2) {
            const int64_t ff = f + t2;
            if (ff < 0 || ff >= bins) continue;
            const int64_t tap = (t1 + half_width) * k + (t2 + half_width);
            const S cr = cv[(tt * bins + ff) * 2 * k2 + tap];
            const S ci = cv[(tt * bins + ff) * 2 * k2 + k2 + tap];
            const S* yy = yv + (tt * bins + ff) * 2 * mics;
            for (int64_t m = 0; m < mics; ++m) {
              o[m] += cr * yy[m] - ci * yy[mics + m];
              o[mics + m] += cr * yy[mics + m] + ci * yy[m];
            }
          }
        }
      }
    }
    return push(std::move(out),
                [crf, y, bins, mics, half_width, k, k2, t_len](Graph& g, Node& n) {
      // gather form: for each crf location, sum over the outputs it fed
      const S* yv = g.value(y).v.data();
      auto& gc = g.grad(crf);
#pragma omp parallel for schedule(static)
      for (int64_t tt = 0; tt < t_len; ++tt) {
        for (int64_t ff = 0; ff < bins; ++ff) {
          const S* yy = yv + (tt * bins + ff) * 2 * mics;
          for (int64_t t1 = -half_width; t1 <= half_width; ++t1) {
            const int64_t t = tt - t1;
            if (t < 0 || t >= t_len) continue;
            for (int64_t t2 = -half_width; t2 <= half_width; ++t2) {
              const int64_t f = ff - t2;
              if (f < 0 || f >= bins) continue;
              const int64_t tap = (t1 + half_width) * k + (t2 + half_width);
              const S* go = n.g.data() + (t * bins + f) * 2 * mics;
              S dcr = S(0), dci = S(0);
              for (int64_t m = 0; m < mics; ++m) {
                dcr += go[m] * yy[m] + go[mics + m] * yy[mics + m];
                dci += -go[m] * yy[mics + m] + go[mics + m] * yy[m];
              }
              gc[size_t((tt * bins + ff) * 2 * k2 + tap)] += dcr;
              gc[size_t((tt * bins + ff) * 2 * k2 + k2 + tap)] += dci;
            }
          }
        }
      }
    });
  }

  /// Frame-wise covariance outer product: s [.. x 2M] -> [.. x 2M^2],
  /// phi_ij = s_i * conj(s_j), re block then im block, row-major (i, j).
  Var outer_covariance(Var s, int64_t mics) {
    const Tensor<S>& ts = value(s);
    const int64_t rows = ts.numel() / (2 * mics);
    NBF_REQUIRE(ts.numel() == rows * 2 * mics, "outer_covariance: shape mismatch");
    std::vector<int64_t> shape = ts.shape;
    shape.back() = 2 * mics * mics;
    Tensor<S> out(shape);
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
      const S* a = ts.v.data() + r * 2 * mics;          // re
      const S* b = a + mics;                            // im
      S* o = out.v.data() + r * 2 * mics * mics;
      for (int64_t i = 0; i < mics; ++i)
        for (int64_t j = 0; j < mics; ++j) {
          o[i * mics + j] = a[i] * a[j] + b[i] * b[j];
          o[mics * mics + i * mics + j] = b[i] * a[j] - a[i] * b[j];
        }
    }
    return push(std::move(out), [s, mics, rows](Graph& g, Node& n) {
      const auto& vs = g.value(s).v;
      auto& gs = g.grad(s);
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r) {
        const S* a = vs.data() + r * 2 * mics;
        const S* b = a + mics;
        const S* gre = n.g.data() + r * 2 * mics * mics;
        const S* gim = gre + mics * mics;
        S* da = gs.data() + r * 2 * mics;
        S* db = da + mics;
        for (int64_t i = 0; i < mics; ++i)
          for (int64_t j = 0; j < mics; ++j) {
            const S gr = gre[i * mics + j], gi = gim[i * mics + j];
            da[i] += gr * a[j] - gi * b[j];
            da[j] += gr * a[i] + gi * b[i];
            db[i] += gr * b[j] + gi * a[j];
            db[j] += gr * b[i] - gi * a[i];
          }
      }
    });
  }

  /// Mask normalization: divide phi(t,f) by d(f) = sum_t |crm(t,f)|^2.
  /// cov [T x F x C], crm [T x F x 2]. Throws on degenerate masks.
  Var mask_normalize(Var cov, Var crm, int64_t bins) {
    const Tensor<S>& tc = value(cov);
    const Tensor<S>& tm = value(crm);
    const int64_t c = tc.last_dim();
    const int64_t t_len = tc.numel() / (bins * c);
    NBF_REQUIRE(tc.numel() == t_len * bins * c, "mask_normalize: cov shape mismatch");
    NBF_REQUIRE(tm.numel() == t_len * bins * 2, "mask_normalize: crm shape mismatch");

    auto denom = std::make_shared<std::vector<S>>(size_t(bins), S(0));
    for (int64_t t = 0; t < t_len; ++t)
      for (int64_t f = 0; f < bins; ++f) {
        const S re = tm.v[size_t((t * bins + f) * 2)];
        const S im = tm.v[size_t((t * bins + f) * 2 + 1)];
        (*denom)[size_t(f)] += re * re + im * im;
      }
    for (int64_t f = 0; f < bins; ++f)
      if (!((*denom)[size_t(f)] >= S(1e-10)))
        throw Error("mask_normalize: degenerate mask at frequency " + std::to_string(f));

    Tensor<S> out = tc;
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < t_len; ++t)
      for (int64_t f = 0; f < bins; ++f) {
        S* o = out.v.data() + (t * bins + f) * c;
        const S inv = S(1) / (*denom)[size_t(f)];
        for (int64_t i = 0; i < c; ++i) o[i] *= inv;
      }
    return push(std::move(out), [cov, crm, bins, c, t_len, denom](Graph& g, Node& n) {
      const auto& vm = g.value(crm).v;
      auto &gcov = g.grad(cov), &gcrm = g.grad(crm);
      std::vector<S> ddenom(size_t(bins), S(0));
      for (int64_t t = 0; t < t_len; ++t)
        for (int64_t f = 0; f < bins; ++f) {
          const S inv = S(1) / (*denom)[size_t(f)];
          const S* go = n.g.data() + (t * bins + f) * c;
          const S* ov = n.t.v.data() + (t * bins + f) * c;
          S* gcv = gcov.data() + (t * bins + f) * c;
          S acc = S(0);
          for (int64_t i = 0; i < c; ++i) {
            gcv[i] += go[i] * inv;
            acc += go[i] * ov[i];
          }
          ddenom[size_t(f)] -= acc * inv;
        }
      for (int64_t t = 0; t < t_len; ++t)
        for (int64_t f = 0; f < bins; ++f) {
          const size_t k = size_t((t * bins + f) * 2);
          gcrm[k] += ddenom[size_t(f)] * S(2) * vm[k];
          gcrm[k + 1] += ddenom[size_t(f)] * S(2) * vm[k + 1];
        }
    });
  }

  /// Per-(t,f) complex matrix product of two [.. x 2M^2] tensors.
  Var complex_matmul(Var a, Var b, int64_t mics) {
    const Tensor<S>& ta = value(a);
    const Tensor<S>& tb = value(b);
    const int64_t mm = mics * mics;
    const int64_t rows = ta.numel() / (2 * mm);
    NBF_REQUIRE(ta.numel() == rows * 2 * mm && tb.numel() == ta.numel(),
                "complex_matmul: shape mismatch");
    Tensor<S> out = ta;
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
      const S* ar = ta.v.data() + r * 2 * mm;
      const S* ai = ar + mm;
      const S* br = tb.v.data() + r * 2 * mm;
      const S* bi = br + mm;
      S* cr = out.v.data() + r * 2 * mm;
      S* ci = cr + mm;
      for (int64_t i = 0; i < mics; ++i)
        for (int64_t j = 0; j < mics; ++j) {
          S sr = S(0), si = S(0);
          for (int64_t l = 0; l < mics; ++l) {
            const S arl = ar[i * mics + l], ail = ai[i * mics + l];
            const S brl = br[l * mics + j], bil = bi[l * mics + j];
            sr += arl * brl - ail * bil;
            si += arl * bil + ail * brl;
          }
          cr[i * mics + j] = sr;
          ci[i * mics + j] = si;
        }
    }
    return push(std::move(out), [a, b, mics, mm, rows](Graph& g, Node& n) {
      const auto& va = g.value(a).v;
      const auto& vb = g.value(b).v;
      auto &ga = g.grad(a), &gb = g.grad(b);
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r) {
        const S* ar = va.data() + r * 2 * mm;
        const S* ai = ar + mm;
        const S* br = vb.data() + r * 2 * mm;
        const S* bi = br + mm;
        const S* gr = n.g.data() + r * 2 * mm;
        const S* gi = gr + mm;
        S* dar = ga.data() + r * 2 * mm;
        S* dai = dar + mm;
        S* dbr = gb.data() + r * 2 * mm;
        S* dbi = dbr + mm;
        // dA = G * B^T with complex pieces expanded; dB = A^T * G likewise
        for (int64_t i = 0; i < mics; ++i)
          for (int64_t l = 0; l < mics; ++l) {
            S sr = S(0), si = S(0);
            for (int64_t j = 0; j < mics; ++j) {
              const S grj = gr[i * mics + j], gij = gi[i * mics + j];
              const S brj = br[l * mics + j], bij = bi[l * mics + j];
              sr += grj * brj + gij * bij;
              si += -grj * bij + gij * brj;
            }
            dar[i * mics + l] += sr;
            dai[i * mics + l] += si;
          }
        for (int64_t l = 0; l < mics; ++l)
          for (int64_t j = 0; j < mics; ++j) {
            S sr = S(0), si = S(0);
            for (int64_t i = 0; i < mics; ++i) {
              const S grj = gr[i * mics + j], gij = gi[i * mics + j];
              const S arl = ar[i * mics + l], ail = ai[i * mics + l];
              sr += arl * grj + ail * gij;
              si += arl * gij - ail * grj;
            }
            dbr[l * mics + j] += sr;
            dbi[l * mics + j] += si;
          }
      }
    });
  }

  /// Beamformer application s(t,f) = w(t,f)^H y(t,f); y is constant.
  /// w, y [T x F x 2M] -> out [T x F x 2].
  Var beamform(Var w, Var y, int64_t mics) {
    const Tensor<S>& twv = value(w);
    const Tensor<S>& ty = value(y);
    const int64_t rows = twv.numel() / (2 * mics);
    NBF_REQUIRE(twv.numel() == rows * 2 * mics && ty.numel() == twv.numel(),
                "beamform: shape mismatch");
    std::vector<int64_t> shape = twv.shape;
    shape.back() = 2;
    Tensor<S> out(shape);
#pragma omp parallel for schedule(static)
    for (int64_t r = 0; r < rows; ++r) {
      const S* wr = twv.v.data() + r * 2 * mics;
      const S* wi = wr + mics;
      const S* yr = ty.v.data() + r * 2 * mics;
      const S* yi = yr + mics;
      S sr = S(0), si = S(0);
      for (int64_t m = 0; m < mics; ++m) {
        sr += wr[m] * yr[m] + wi[m] * yi[m];
        si += wr[m] * yi[m] - wi[m] * yr[m];
      }
      out.v[size_t(r * 2)] = sr;
      out.v[size_t(r * 2 + 1)] = si;
    }
    return push(std::move(out), [w, y, mics, rows](Graph& g, Node& n) {
      const auto& vy = g.value(y).v;
      auto& gw = g.grad(w);
#pragma omp parallel for schedule(static)
      for (int64_t r = 0; r < rows; ++r) {
        const S* yr = vy.data() + r * 2 * mics;
        const S* yi = yr + mics;
        const S gre = n.g[size_t(r * 2)], gim = n.g[size_t(r * 2 + 1)];
        S* dwr = gw.data() + r * 2 * mics;
        S* dwi = dwr + mics;
        for (int64_t m = 0; m < mics; ++m) {
          dwr[m] += gre * yr[m] + gim * yi[m];
          dwi[m] += gre * yi[m] - gim * yr[m];
        }
      }
    });
  }

  /// Differentiable overlap-add synthesis of a single-channel spectrogram
  /// [T x F x 2] -> waveform [(T-1)*hop + window].
  Var istft(Var x, const IstftPlan<S>& plan) {
    const Tensor<S>& tx = value(x);
    const int64_t f2 = 2 * plan.bins;
    const int64_t t_len = tx.numel() / f2;
    NBF_REQUIRE(tx.numel() == t_len * f2, "istft: shape mismatch");
    NBF_REQUIRE(t_len >= 1, "istft: empty spectrogram");

    // packed [re(F) | im(F)] rows for the IDFT GEMM
    std::vector<S> packed(size_t(t_len) * size_t(f2));
#pragma omp parallel for schedule(static)
    for (int64_t t = 0; t < t_len; ++t)
      for (int64_t f = 0; f < plan.bins; ++f) {
        packed[size_t(t * f2 + f)] = tx.v[size_t((t * plan.bins + f) * 2)];
        packed[size_t(t * f2 + plan.bins + f)] = tx.v[size_t((t * plan.bins + f) * 2 + 1)];
      }
    std::vector<S> frames(size_t(t_len) * size_t(plan.window));
    detail::gemm_nn<S>(t_len, f2, plan.window, packed.data(), plan.idft.data(), frames.data(),
                       false);
    const int64_t out_len = plan.output_length(t_len);
    Tensor<S> out({out_len});
    for (int64_t t = 0; t < t_len; ++t) {
      const S* fr = frames.data() + t * plan.window;
      S* o = out.v.data() + t * plan.hop;
      for (int64_t n = 0; n < plan.window; ++n) o[n] += plan.synthesis[size_t(n)] * fr[n];
    }
    return push(std::move(out), [x, &plan, t_len, f2](Graph& g, Node& n) {
      std::vector<S> dframes(size_t(t_len) * size_t(plan.window));
#pragma omp parallel for schedule(static)
      for (int64_t t = 0; t < t_len; ++t) {
        const S* go = n.g.data() + t * plan.hop;
        S* df = dframes.data() + t * plan.window;
        for (int64_t k = 0; k < plan.window; ++k) df[k] = plan.synthesis[size_t(k)] * go[k];
      }
      std::vector<S> dpacked(size_t(t_len) * size_t(f2));
      detail::gemm_nt<S>(t_len, plan.window, f2, dframes.data(), plan.idft.data(), dpacked.data(),
                         false);
      auto& gx = g.grad(x);
#pragma omp parallel for schedule(static)
      for (int64_t t = 0; t < t_len; ++t)
        for (int64_t f = 0; f < plan.bins; ++f) {
          gx[size_t((t * plan.bins + f) * 2)] += dpacked[size_t(t * f2 + f)];
          gx[size_t((t * plan.bins + f) * 2 + 1)] += dpacked[size_t(t * f2 + plan.bins + f)];
        }
    });
  }

  /// Negative Si-SNR between the estimate and a constant reference, both
  /// mean-removed. No clamp: this is the training objective.
  Var si_snr_loss(Var est, Var ref) {
    const Tensor<S>& te = value(est);
    const Tensor<S>& tr = value(ref);
    NBF_REQUIRE(te.numel() == tr.numel(), "si_snr_loss: length mismatch");
    const int64_t n_samp = te.numel();
    NBF_REQUIRE(n_samp >= 2, "si_snr_loss: too short");

    auto ctx = std::make_shared<std::vector<S>>();  // [u | s | e], then alpha, p, eden
    ctx->resize(size_t(3 * n_samp) + 3);
    S* u = ctx->data();
    S* s0 = u + n_samp;
    S* e = s0 + n_samp;

    S mean_e = S(0), mean_r = S(0);
    for (int64_t i = 0; i < n_samp; ++i) {
      mean_e += te.v[size_t(i)];
      mean_r += tr.v[size_t(i)];
    }
    mean_e /= S(n_samp);
    mean_r /= S(n_samp);
    S dot = S(0), ss = S(0);
    for (int64_t i = 0; i < n_samp; ++i) {
      u[i] = te.v[size_t(i)] - mean_e;
      s0[i] = tr.v[size_t(i)] - mean_r;
      dot += u[i] * s0[i];
      ss += s0[i] * s0[i];
    }
    NBF_REQUIRE(ss > S(0), "si_snr_loss: zero-energy reference");
    const S alpha = dot / ss;
    S p = S(0), eden = S(0);
    for (int64_t i = 0; i < n_samp; ++i) {
      e[i] = u[i] - alpha * s0[i];
      p += alpha * s0[i] * alpha * s0[i];
      eden += e[i] * e[i];
    }
    const S eps = S(1e-12);
    const S loss = S(-10) * (std::log10(p + eps) - std::log10(eden + eps));
    (*ctx)[size_t(3 * n_samp)] = alpha;
    (*ctx)[size_t(3 * n_samp) + 1] = p;
    (*ctx)[size_t(3 * n_samp) + 2] = eden;

    Tensor<S> out({1});
    out.v[0] = loss;
    return push(std::move(out), [est, n_samp, ctx](Graph& g, Node& n) {
      const S go = n.g[0];
      const S* u = ctx->data();
      const S* s0 = u + n_samp;
      const S* e = s0 + n_samp;
      const S alpha = (*ctx)[size_t(3 * n_samp)];
      const S p = (*ctx)[size_t(3 * n_samp) + 1];
      const S eden = (*ctx)[size_t(3 * n_samp) + 2];
      const S eps = S(1e-12);
      const S c = S(10) / S(std::log(S(10)));
      // dL/du = -c * (2 alpha s / (p+eps) - 2e / (eden+eps)); e is orthogonal
      // to s, so alpha's dependence on u drops out of the error term.
      std::vector<S> du(static_cast<size_t>(n_samp));
      S mean_du = S(0);
      for (int64_t i = 0; i < n_samp; ++i) {
        du[size_t(i)] = -c * (S(2) * alpha * s0[i] / (p + eps) - S(2) * e[i] / (eden + eps));
        mean_du += du[size_t(i)];
      }
      mean_du /= S(n_samp);
      auto& ge = g.grad(est);
      for (int64_t i = 0; i < n_samp; ++i) ge[size_t(i)] += go * (du[size_t(i)] - mean_du);
    });
  }

  // ------------------------------------------------------------- backward

  void backward(Var loss) {
    NBF_REQUIRE(value(loss).numel() == 1, "backward: loss must be scalar");
    for (auto& n : nodes_) n->g.assign(n->t.v.size(), S(0));
    nodes_[size_t(loss)]->g[0] = S(1);
    for (int64_t i = int64_t(nodes_.size()) - 1; i >= 0; --i) {
      Node& n = *nodes_[size_t(i)];
      if (n.back) n.back(*this);
    }
    for (auto& n : nodes_)
      if (n->bound)
        for (size_t i = 0; i < n->g.size(); ++i) n->bound->grad[i] += n->g[i];
  }

 private:
  Var push(Tensor<S> t, std::function<void(Graph&, Node&)> back, Parameter<S>* bound = nullptr) {
    auto node = std::make_unique<Node>();
    node->t = std::move(t);
    node->bound = bound;
    nodes_.push_back(std::move(node));
    const Var id = Var(nodes_.size() - 1);
    if (back) {
      Node* raw = nodes_.back().get();
      raw->back = [raw, fn = std::move(back)](Graph& g) { fn(g, *raw); };
    }
    return id;
  }

  std::vector<std::unique_ptr<Node>> nodes_;
};

}  // namespace nbf
