// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Layer kernels: convolution (im2col + gemm), batch norm, pooling, linear,
// bilinear resize, cosine distance, and the attention gate. Each op records
// its backward rule on the tape from tensor.hpp.

#ifndef EGT_NN_OPS_HPP_
#define EGT_NN_OPS_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <memory>
#include <vector>

#include "egt/gemm.hpp"
#include "egt/parallel.hpp"
#include "egt/tensor.hpp"

namespace egt {

template <typename S>
struct Conv2dParams {
  Tensor<S> weight;  // [C_out, C_in, k, k]
  Tensor<S> bias;    // [C_out]
  int stride = 1;
  int padding = 0;
};

template <typename S>
struct BatchNormParams {
  Tensor<S> gamma;         // [C]
  Tensor<S> beta;          // [C]
  Tensor<S> running_mean;  // [C], buffer
  Tensor<S> running_var;   // [C], buffer
  double momentum = 0.1;
  double epsilon = 1e-5;
};

namespace detail {

inline std::int64_t conv_out_extent(std::int64_t in, int k, int stride,
                                    int padding) {
  return (in + 2 * static_cast<std::int64_t>(padding) - k) / stride + 1;
}

// col layout: [C_in*k*k, N*P] with column index n*P + (y*w_out + x).
template <typename S>
void im2col(const S* x, std::int64_t n, std::int64_t c_in, std::int64_t h,
            std::int64_t w, int k, int stride, int padding, std::int64_t h_out,
            std::int64_t w_out, S* col) {
  const std::int64_t p_total = h_out * w_out;
  const std::int64_t cols = n * p_total;
  parallel_for(c_in, [=](std::int64_t c_begin, std::int64_t c_end) {
    for (std::int64_t c = c_begin; c < c_end; ++c) {
      for (int ky = 0; ky < k; ++ky) {
        for (int kx = 0; kx < k; ++kx) {
          const std::int64_t row = (c * k + ky) * k + kx;
          S* dst = col + row * cols;
          for (std::int64_t b = 0; b < n; ++b) {
            const S* src = x + (b * c_in + c) * h * w;
            S* d = dst + b * p_total;
            for (std::int64_t oy = 0; oy < h_out; ++oy) {
              const std::int64_t sy = oy * stride - padding + ky;
              if (sy < 0 || sy >= h) {
                for (std::int64_t ox = 0; ox < w_out; ++ox) *d++ = S(0);
                continue;
              }
              const S* srow = src + sy * w;
              std::int64_t sx = -padding + kx;
              for (std::int64_t ox = 0; ox < w_out; ++ox, sx += stride) {
                *d++ = (sx >= 0 && sx < w) ? srow[sx] : S(0);
              }
            }
          }
        }
      }
    }
  });
}

// Transposed scatter of im2col; accumulates into dx.
template <typename S>
void col2im(const S* col, std::int64_t n, std::int64_t c_in, std::int64_t h,
            std::int64_t w, int k, int stride, int padding, std::int64_t h_out,
            std::int64_t w_out, S* dx) {
  const std::int64_t p_total = h_out * w_out;
  const std::int64_t cols = n * p_total;
  parallel_for(n, [=](std::int64_t b_begin, std::int64_t b_end) {
    for (std::int64_t b = b_begin; b < b_end; ++b) {
      for (std::int64_t c = 0; c < c_in; ++c) {
        S* dst = dx + (b * c_in + c) * h * w;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const std::int64_t row = (c * k + ky) * k + kx;
            const S* src = col + row * cols + b * p_total;
            for (std::int64_t oy = 0; oy < h_out; ++oy) {
              const std::int64_t sy = oy * stride - padding + ky;
              if (sy < 0 || sy >= h) {
                src += w_out;
                continue;
              }
              S* drow = dst + sy * w;
              std::int64_t sx = -padding + kx;
              for (std::int64_t ox = 0; ox < w_out; ++ox, sx += stride) {
                if (sx >= 0 && sx < w) drow[sx] += src[ox];
              }
              src += w_out;
            }
          }
        }
      }
    }
  });
}

}  // namespace detail

// ---------------------------------------------------------------------------
// conv2d: [N,C_in,H,W] -> [N,C_out,H',W'], cross-correlation convention.

template <typename S>
Tensor<S> conv2d(const Tensor<S>& x, const Conv2dParams<S>& p) {
  if (x.rank() != 4) {
    throw ShapeError("conv2d expects [N,C,H,W] input, got " +
                     shape_str(x.shape()));
  }
  const auto& ws = p.weight.shape();
  if (ws.size() != 4 || ws[2] != ws[3]) {
    throw ShapeError("conv2d weight must be [C_out,C_in,k,k], got " +
                     shape_str(ws));
  }
  if (x.dim(1) != ws[1]) {
    throw ShapeError("conv2d channel mismatch: input has " +
                     std::to_string(x.dim(1)) + ", weight expects " +
                     std::to_string(ws[1]));
  }
  const std::int64_t n = x.dim(0), c_in = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::int64_t c_out = ws[0];
  const int k = static_cast<int>(ws[2]);
  const int stride = p.stride, padding = p.padding;
  if (p.bias.numel() != c_out) {
    throw ShapeError("conv2d bias size " + std::to_string(p.bias.numel()) +
                     " != C_out " + std::to_string(c_out));
  }
  if (h + 2 * padding < k || w + 2 * padding < k) {
    throw ShapeError("conv2d kernel " + std::to_string(k) +
                     " larger than padded input " + shape_str(x.shape()));
  }
  const std::int64_t h_out = detail::conv_out_extent(h, k, stride, padding);
  const std::int64_t w_out = detail::conv_out_extent(w, k, stride, padding);
  const std::int64_t p_total = h_out * w_out;
  const std::int64_t ck = c_in * k * k;
  const std::int64_t cols = n * p_total;

  std::vector<S> col(static_cast<std::size_t>(ck * cols));
  detail::im2col(x.value().data(), n, c_in, h, w, k, stride, padding, h_out,
                 w_out, col.data());
  std::vector<S> out_mat(static_cast<std::size_t>(c_out * cols));
  gemm_nn<S>(c_out, cols, ck, p.weight.value().data(), col.data(),
             out_mat.data());
  col.clear();
  col.shrink_to_fit();

  std::vector<S> out(static_cast<std::size_t>(n * c_out * p_total));
  const auto& bias = p.bias.value();
  for (std::int64_t b = 0; b < n; ++b) {
    for (std::int64_t c = 0; c < c_out; ++c) {
      const S* src = out_mat.data() + c * cols + b * p_total;
      S* dst = out.data() + (b * c_out + c) * p_total;
      const S bv = bias[static_cast<std::size_t>(c)];
      for (std::int64_t i = 0; i < p_total; ++i) dst[i] = src[i] + bv;
    }
  }

  return detail::make_op<S>(
      Shape{n, c_out, h_out, w_out}, std::move(out), "conv2d",
      {x, p.weight, p.bias},
      [n, c_in, c_out, h, w, k, stride, padding, h_out, w_out,
       p_total](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        auto& gw = *self.parents[1];
        auto& gb = *self.parents[2];
        const std::int64_t ck = c_in * k * k;
        const std::int64_t cols = n * p_total;

        // dY as [C_out, N*P]
        std::vector<S> dy_mat(static_cast<std::size_t>(c_out * cols));
        for (std::int64_t b = 0; b < n; ++b) {
          for (std::int64_t c = 0; c < c_out; ++c) {
            const S* src = self.grad.data() + (b * c_out + c) * p_total;
            S* dst = dy_mat.data() + c * cols + b * p_total;
            std::copy(src, src + p_total, dst);
          }
        }
        if (gb.tracked) {
          auto& db = gb.ensure_grad();
          for (std::int64_t c = 0; c < c_out; ++c) {
            S total = S(0);
            const S* row = dy_mat.data() + c * cols;
            for (std::int64_t i = 0; i < cols; ++i) total += row[i];
            db[static_cast<std::size_t>(c)] += total;
          }
        }
        if (gw.tracked) {
          // dW = dY * col^T  (col recomputed from the saved input)
          std::vector<S> col(static_cast<std::size_t>(ck * cols));
          detail::im2col(gx.value.data(), n, c_in, h, w, k, stride, padding,
                         h_out, w_out, col.data());
          std::vector<S> colt(static_cast<std::size_t>(cols * ck));
          transpose<S>(ck, cols, col.data(), colt.data());
          col.clear();
          col.shrink_to_fit();
          std::vector<S> dw(static_cast<std::size_t>(c_out * ck));
          gemm_nn<S>(c_out, ck, cols, dy_mat.data(), colt.data(), dw.data());
          gw.accumulate_grad(dw.data(), c_out * ck);
        }
        if (gx.tracked) {
          // dX = col2im(W^T * dY)
          std::vector<S> wt(static_cast<std::size_t>(ck * c_out));
          transpose<S>(c_out, ck, gw.value.data(), wt.data());
          std::vector<S> dcol(static_cast<std::size_t>(ck * cols));
          gemm_nn<S>(ck, cols, c_out, wt.data(), dy_mat.data(), dcol.data());
          auto& dx = gx.ensure_grad();
          detail::col2im(dcol.data(), n, c_in, h, w, k, stride, padding, h_out,
                         w_out, dx.data());
        }
      });
}

// ---------------------------------------------------------------------------
// batchnorm2d

template <typename S>
Tensor<S> batchnorm2d(const Tensor<S>& x, BatchNormParams<S>& p,
                      bool training) {
  if (x.rank() != 4) {
    throw ShapeError("batchnorm2d expects [N,C,H,W], got " +
                     shape_str(x.shape()));
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (p.gamma.numel() != c || p.beta.numel() != c) {
    throw ShapeError("batchnorm2d parameter size != channels " +
                     std::to_string(c));
  }
  const std::int64_t m = n * h * w;  // reduction set per channel
  if (training && m < 2) {
    throw ShapeError("batchnorm2d train mode needs N*H*W >= 2 per channel");
  }
  const std::int64_t plane = h * w;
  const auto& xv = x.value();
  const auto& gamma = p.gamma.value();
  const auto& beta = p.beta.value();

  auto xhat = std::make_shared<std::vector<S>>(xv.size());
  auto inv_std = std::make_shared<std::vector<S>>(static_cast<std::size_t>(c));
  std::vector<S> out(xv.size());

  for (std::int64_t ch = 0; ch < c; ++ch) {
    S mean, var;
    if (training) {
      S sum = S(0);
      for (std::int64_t b = 0; b < n; ++b) {
        const S* src = xv.data() + (b * c + ch) * plane;
        for (std::int64_t i = 0; i < plane; ++i) sum += src[i];
      }
      mean = sum / static_cast<S>(m);
      S sq = S(0);
      for (std::int64_t b = 0; b < n; ++b) {
        const S* src = xv.data() + (b * c + ch) * plane;
        for (std::int64_t i = 0; i < plane; ++i) {
          const S d = src[i] - mean;
          sq += d * d;
        }
      }
      var = sq / static_cast<S>(m);  // biased, also used for running stats
      auto& rm = p.running_mean.mutable_value();
      auto& rv = p.running_var.mutable_value();
      const S mom = static_cast<S>(p.momentum);
      rm[static_cast<std::size_t>(ch)] =
          (S(1) - mom) * rm[static_cast<std::size_t>(ch)] + mom * mean;
      rv[static_cast<std::size_t>(ch)] =
          (S(1) - mom) * rv[static_cast<std::size_t>(ch)] + mom * var;
    } else {
      mean = p.running_mean.value()[static_cast<std::size_t>(ch)];
      var = p.running_var.value()[static_cast<std::size_t>(ch)];
    }
    const S istd = S(1) / std::sqrt(var + static_cast<S>(p.epsilon));
    (*inv_std)[static_cast<std::size_t>(ch)] = istd;
    const S g = gamma[static_cast<std::size_t>(ch)];
    const S bt = beta[static_cast<std::size_t>(ch)];
    for (std::int64_t b = 0; b < n; ++b) {
      const S* src = xv.data() + (b * c + ch) * plane;
      S* xh = xhat->data() + (b * c + ch) * plane;
      S* dst = out.data() + (b * c + ch) * plane;
      for (std::int64_t i = 0; i < plane; ++i) {
        xh[i] = (src[i] - mean) * istd;
        dst[i] = g * xh[i] + bt;
      }
    }
  }

  return detail::make_op<S>(
      x.shape(), std::move(out), "batchnorm2d", {x, p.gamma, p.beta},
      [n, c, plane, m, training, xhat, inv_std](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        auto& gg = *self.parents[1];
        auto& gb = *self.parents[2];
        for (std::int64_t ch = 0; ch < c; ++ch) {
          S sum_dy = S(0), sum_dy_xhat = S(0);
          for (std::int64_t b = 0; b < n; ++b) {
            const S* dy = self.grad.data() + (b * c + ch) * plane;
            const S* xh = xhat->data() + (b * c + ch) * plane;
            for (std::int64_t i = 0; i < plane; ++i) {
              sum_dy += dy[i];
              sum_dy_xhat += dy[i] * xh[i];
            }
          }
          if (gg.tracked)
            gg.ensure_grad()[static_cast<std::size_t>(ch)] += sum_dy_xhat;
          if (gb.tracked)
            gb.ensure_grad()[static_cast<std::size_t>(ch)] += sum_dy;
          if (gx.tracked) {
            const S g = gg.value[static_cast<std::size_t>(ch)];
            const S istd = (*inv_std)[static_cast<std::size_t>(ch)];
            auto& dx = gx.ensure_grad();
            if (training) {
              const S mean_dy = sum_dy / static_cast<S>(m);
              const S mean_dy_xhat = sum_dy_xhat / static_cast<S>(m);
              for (std::int64_t b = 0; b < n; ++b) {
                const S* dy = self.grad.data() + (b * c + ch) * plane;
                const S* xh = xhat->data() + (b * c + ch) * plane;
                S* d = dx.data() + (b * c + ch) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  d[i] += g * istd * (dy[i] - mean_dy - xh[i] * mean_dy_xhat);
                }
              }
            } else {
              for (std::int64_t b = 0; b < n; ++b) {
                const S* dy = self.grad.data() + (b * c + ch) * plane;
                S* d = dx.data() + (b * c + ch) * plane;
                for (std::int64_t i = 0; i < plane; ++i) {
                  d[i] += g * istd * dy[i];
                }
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// maxpool2d: window maxima; gradient routes to the first max in scan order.

template <typename S>
Tensor<S> maxpool2d(const Tensor<S>& x, int k, int stride) {
  if (x.rank() != 4) {
    throw ShapeError("maxpool2d expects [N,C,H,W], got " +
                     shape_str(x.shape()));
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h < k || w < k) {
    throw ShapeError("maxpool2d window " + std::to_string(k) +
                     " larger than input " + shape_str(x.shape()));
  }
  const std::int64_t h_out = (h - k) / stride + 1;
  const std::int64_t w_out = (w - k) / stride + 1;
  const std::int64_t p_out = h_out * w_out;
  std::vector<S> out(static_cast<std::size_t>(n * c * p_out));
  auto argmax =
      std::make_shared<std::vector<std::int64_t>>(out.size());
  const auto& xv = x.value();
  for (std::int64_t bc = 0; bc < n * c; ++bc) {
    const S* src = xv.data() + bc * h * w;
    S* dst = out.data() + bc * p_out;
    std::int64_t* arg = argmax->data() + bc * p_out;
    for (std::int64_t oy = 0; oy < h_out; ++oy) {
      for (std::int64_t ox = 0; ox < w_out; ++ox) {
        const std::int64_t y0 = oy * stride, x0 = ox * stride;
        S best = src[y0 * w + x0];
        std::int64_t best_idx = y0 * w + x0;
        for (int ky = 0; ky < k; ++ky) {
          for (int kx = 0; kx < k; ++kx) {
            const std::int64_t idx = (y0 + ky) * w + (x0 + kx);
            if (src[idx] > best) {  // strict: first occurrence wins ties
              best = src[idx];
              best_idx = idx;
            }
          }
        }
        dst[oy * w_out + ox] = best;
        arg[oy * w_out + ox] = bc * h * w + best_idx;
      }
    }
  }
  return detail::make_op<S>(
      Shape{n, c, h_out, w_out}, std::move(out), "maxpool2d", {x},
      [argmax](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        if (!gx.tracked) return;
        auto& dx = gx.ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) {
          dx[static_cast<std::size_t>((*argmax)[i])] += self.grad[i];
        }
      });
}

// ---------------------------------------------------------------------------
// adaptive_avgpool2d: bin i covers [floor(i*H/h), floor((i+1)*H/h)).

template <typename S>
Tensor<S> adaptive_avgpool2d(const Tensor<S>& x, std::int64_t oh,
                             std::int64_t ow) {
  if (x.rank() != 4) {
    throw ShapeError("adaptive_avgpool2d expects [N,C,H,W], got " +
                     shape_str(x.shape()));
  }
  const std::int64_t n = x.dim(0), c = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (oh < 1 || ow < 1 || oh > h || ow > w) {
    throw ShapeError("adaptive_avgpool2d target (" + std::to_string(oh) + "," +
                     std::to_string(ow) + ") invalid for input " +
                     shape_str(x.shape()));
  }
  auto bin_lo = [](std::int64_t i, std::int64_t in, std::int64_t out) {
    return (i * in) / out;
  };
  std::vector<S> out(static_cast<std::size_t>(n * c * oh * ow));
  const auto& xv = x.value();
  for (std::int64_t bc = 0; bc < n * c; ++bc) {
    const S* src = xv.data() + bc * h * w;
    S* dst = out.data() + bc * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      const std::int64_t y0 = bin_lo(oy, h, oh), y1 = bin_lo(oy + 1, h, oh);
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const std::int64_t x0 = bin_lo(ox, w, ow), x1 = bin_lo(ox + 1, w, ow);
        S total = S(0);
        for (std::int64_t y = y0; y < y1; ++y) {
          for (std::int64_t xx = x0; xx < x1; ++xx) total += src[y * w + xx];
        }
        dst[oy * ow + ox] =
            total / static_cast<S>((y1 - y0) * (x1 - x0));
      }
    }
  }
  return detail::make_op<S>(
      Shape{n, c, oh, ow}, std::move(out), "adaptive_avgpool2d", {x},
      [n, c, h, w, oh, ow, bin_lo](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        if (!gx.tracked) return;
        auto& dx = gx.ensure_grad();
        for (std::int64_t bc = 0; bc < n * c; ++bc) {
          const S* dy = self.grad.data() + bc * oh * ow;
          S* d = dx.data() + bc * h * w;
          for (std::int64_t oy = 0; oy < oh; ++oy) {
            const std::int64_t y0 = bin_lo(oy, h, oh),
                               y1 = bin_lo(oy + 1, h, oh);
            for (std::int64_t ox = 0; ox < ow; ++ox) {
              const std::int64_t x0 = bin_lo(ox, w, ow),
                                 x1 = bin_lo(ox + 1, w, ow);
              const S g = dy[oy * ow + ox] /
                          static_cast<S>((y1 - y0) * (x1 - x0));
              for (std::int64_t y = y0; y < y1; ++y) {
                for (std::int64_t xx = x0; xx < x1; ++xx) d[y * w + xx] += g;
              }
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// linear: x[N,D] * W[K,D]^T + b[K]

template <typename S>
Tensor<S> linear(const Tensor<S>& x, const Tensor<S>& weight,
                 const Tensor<S>& bias) {
  if (x.rank() != 2 || weight.rank() != 2 || x.dim(1) != weight.dim(1)) {
    throw ShapeError("linear: incompatible shapes " + shape_str(x.shape()) +
                     " and weight " + shape_str(weight.shape()));
  }
  const std::int64_t n = x.dim(0), d = x.dim(1), k = weight.dim(0);
  if (bias.numel() != k) {
    throw ShapeError("linear bias size " + std::to_string(bias.numel()) +
                     " != " + std::to_string(k));
  }
  std::vector<S> wt(static_cast<std::size_t>(d * k));
  transpose<S>(k, d, weight.value().data(), wt.data());
  std::vector<S> out(static_cast<std::size_t>(n * k));
  gemm_nn<S>(n, k, d, x.value().data(), wt.data(), out.data());
  const auto& bv = bias.value();
  for (std::int64_t r = 0; r < n; ++r) {
    S* row = out.data() + r * k;
    for (std::int64_t j = 0; j < k; ++j) row[j] += bv[static_cast<std::size_t>(j)];
  }
  return detail::make_op<S>(
      Shape{n, k}, std::move(out), "linear", {x, weight, bias},
      [n, d, k](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        auto& gw = *self.parents[1];
        auto& gb = *self.parents[2];
        if (gb.tracked) {
          auto& db = gb.ensure_grad();
          for (std::int64_t r = 0; r < n; ++r) {
            const S* dy = self.grad.data() + r * k;
            for (std::int64_t j = 0; j < k; ++j)
              db[static_cast<std::size_t>(j)] += dy[j];
          }
        }
        if (gx.tracked) {
          // dX = dY * W
          std::vector<S> dx(static_cast<std::size_t>(n * d));
          gemm_nn<S>(n, d, k, self.grad.data(), gw.value.data(), dx.data());
          gx.accumulate_grad(dx.data(), n * d);
        }
        if (gw.tracked) {
          // dW = dY^T * X
          std::vector<S> dyt(static_cast<std::size_t>(k * n));
          transpose<S>(n, k, self.grad.data(), dyt.data());
          std::vector<S> dw(static_cast<std::size_t>(k * d));
          gemm_nn<S>(k, d, n, dyt.data(), gx.value.data(), dw.data());
          gw.accumulate_grad(dw.data(), k * d);
        }
      });
}

// ---------------------------------------------------------------------------
// bilinear_resize: half-pixel centers, clamped; source s = (d+0.5)*in/out-0.5.

namespace detail {
template <typename S>
struct ResizeAxis {
  std::vector<std::int64_t> i0, i1;
  std::vector<S> frac;
};

template <typename S>
ResizeAxis<S> resize_axis(std::int64_t in, std::int64_t out) {
  ResizeAxis<S> ax;
  ax.i0.resize(static_cast<std::size_t>(out));
  ax.i1.resize(static_cast<std::size_t>(out));
  ax.frac.resize(static_cast<std::size_t>(out));
  const double ratio = static_cast<double>(in) / static_cast<double>(out);
  for (std::int64_t d = 0; d < out; ++d) {
    double s = (static_cast<double>(d) + 0.5) * ratio - 0.5;
    s = std::min(std::max(s, 0.0), static_cast<double>(in - 1));
    const std::int64_t lo = static_cast<std::int64_t>(std::floor(s));
    ax.i0[static_cast<std::size_t>(d)] = lo;
    ax.i1[static_cast<std::size_t>(d)] = std::min(lo + 1, in - 1);
    ax.frac[static_cast<std::size_t>(d)] = static_cast<S>(s - static_cast<double>(lo));
  }
  return ax;
}
}  // namespace detail

template <typename S>
Tensor<S> bilinear_resize(const Tensor<S>& a, std::int64_t oh, std::int64_t ow) {
  if (a.rank() != 4) {
    throw ShapeError("bilinear_resize expects [N,C,H,W], got " +
                     shape_str(a.shape()));
  }
  if (oh < 1 || ow < 1) throw ShapeError("bilinear_resize target must be >= 1");
  const std::int64_t n = a.dim(0), c = a.dim(1), h = a.dim(2), w = a.dim(3);
  const auto ay = detail::resize_axis<S>(h, oh);
  const auto ax = detail::resize_axis<S>(w, ow);
  std::vector<S> out(static_cast<std::size_t>(n * c * oh * ow));
  const auto& av = a.value();
  for (std::int64_t bc = 0; bc < n * c; ++bc) {
    const S* src = av.data() + bc * h * w;
    S* dst = out.data() + bc * oh * ow;
    for (std::int64_t oy = 0; oy < oh; ++oy) {
      const std::int64_t y0 = ay.i0[static_cast<std::size_t>(oy)];
      const std::int64_t y1 = ay.i1[static_cast<std::size_t>(oy)];
      const S fy = ay.frac[static_cast<std::size_t>(oy)];
      for (std::int64_t ox = 0; ox < ow; ++ox) {
        const std::int64_t x0 = ax.i0[static_cast<std::size_t>(ox)];
        const std::int64_t x1 = ax.i1[static_cast<std::size_t>(ox)];
        const S fx = ax.frac[static_cast<std::size_t>(ox)];
        const S v00 = src[y0 * w + x0], v01 = src[y0 * w + x1];
        const S v10 = src[y1 * w + x0], v11 = src[y1 * w + x1];
        dst[oy * ow + ox] = (S(1) - fy) * ((S(1) - fx) * v00 + fx * v01) +
                            fy * ((S(1) - fx) * v10 + fx * v11);
      }
    }
  }
  return detail::make_op<S>(
      Shape{n, c, oh, ow}, std::move(out), "bilinear_resize", {a},
      [n, c, h, w, oh, ow, ay, ax](TensorNode<S>& self) {
        auto& ga = *self.parents[0];
        if (!ga.tracked) return;
        auto& dx = ga.ensure_grad();
        for (std::int64_t bc = 0; bc < n * c; ++bc) {
          const S* dy = self.grad.data() + bc * oh * ow;
          S* d = dx.data() + bc * h * w;
          for (std::int64_t oy = 0; oy < oh; ++oy) {
            const std::int64_t y0 = ay.i0[static_cast<std::size_t>(oy)];
            const std::int64_t y1 = ay.i1[static_cast<std::size_t>(oy)];
            const S fy = ay.frac[static_cast<std::size_t>(oy)];
            for (std::int64_t ox = 0; ox < ow; ++ox) {
              const std::int64_t x0 = ax.i0[static_cast<std::size_t>(ox)];
              const std::int64_t x1 = ax.i1[static_cast<std::size_t>(ox)];
              const S fx = ax.frac[static_cast<std::size_t>(ox)];
              const S g = dy[oy * ow + ox];
              d[y0 * w + x0] += g * (S(1) - fy) * (S(1) - fx);
              d[y0 * w + x1] += g * (S(1) - fy) * fx;
              d[y1 * w + x0] += g * fy * (S(1) - fx);
              d[y1 * w + x1] += g * fy * fx;
            }
          }
        }
      });
}

// ---------------------------------------------------------------------------
// cosine distance

// Row-wise d_cos between X[N,D] and Y[N,D] -> [N].
// d = 1 - x.y / (max(|x|,eps) * max(|y|,eps)).
template <typename S>
Tensor<S> cosine_distance_rows(const Tensor<S>& x, const Tensor<S>& y, S eps) {
  detail::require_same_shape(x, y, "cosine_distance_rows");
  if (x.rank() != 2) {
    throw ShapeError("cosine_distance_rows expects [N,D], got " +
                     shape_str(x.shape()));
  }
  const std::int64_t n = x.dim(0), d = x.dim(1);
  std::vector<S> out(static_cast<std::size_t>(n));
  auto saved = std::make_shared<std::vector<S>>(static_cast<std::size_t>(3 * n));
  const auto& xv = x.value();
  const auto& yv = y.value();
  for (std::int64_t r = 0; r < n; ++r) {
    const S* xr = xv.data() + r * d;
    const S* yr = yv.data() + r * d;
    S dot = S(0), nx2 = S(0), ny2 = S(0);
    for (std::int64_t j = 0; j < d; ++j) {
      dot += xr[j] * yr[j];
      nx2 += xr[j] * xr[j];
      ny2 += yr[j] * yr[j];
    }
    const S nx = std::sqrt(nx2), ny = std::sqrt(ny2);
    (*saved)[static_cast<std::size_t>(3 * r)] = dot;
    (*saved)[static_cast<std::size_t>(3 * r + 1)] = nx;
    (*saved)[static_cast<std::size_t>(3 * r + 2)] = ny;
    out[static_cast<std::size_t>(r)] =
        S(1) - dot / (std::max(nx, eps) * std::max(ny, eps));
  }
  return detail::make_op<S>(
      Shape{n}, std::move(out), "cosine_distance", {x, y},
      [n, d, eps, saved](TensorNode<S>& self) {
        auto& gx = *self.parents[0];
        auto& gy = *self.parents[1];
        for (std::int64_t r = 0; r < n; ++r) {
          const S g = self.grad[static_cast<std::size_t>(r)];
          if (g == S(0)) continue;
          const S dot = (*saved)[static_cast<std::size_t>(3 * r)];
          const S nx = (*saved)[static_cast<std::size_t>(3 * r + 1)];
          const S ny = (*saved)[static_cast<std::size_t>(3 * r + 2)];
          const S mx = std::max(nx, eps), my = std::max(ny, eps);
          const S inv = S(1) / (mx * my);
          const S* xr = gx.value.data() + r * d;
          const S* yr = gy.value.data() + r * d;
          if (gx.tracked) {
            auto& dst = gx.ensure_grad();
            S* dr = dst.data() + r * d;
            const S coef = nx > eps ? dot / (nx * mx * mx * my) : S(0);
            for (std::int64_t j = 0; j < d; ++j) {
              dr[j] += g * (coef * xr[j] - yr[j] * inv);
            }
          }
          if (gy.tracked) {
            auto& dst = gy.ensure_grad();
            S* dr = dst.data() + r * d;
            const S coef = ny > eps ? dot / (ny * my * my * mx) : S(0);
            for (std::int64_t j = 0; j < d; ++j) {
              dr[j] += g * (coef * yr[j] - xr[j] * inv);
            }
          }
        }
      });
}

// Vector form: x[D], y[D] -> scalar.
template <typename S>
Tensor<S> cosine_distance(const Tensor<S>& x, const Tensor<S>& y, S eps) {
  if (x.rank() != 1 || y.rank() != 1) {
    throw ShapeError("cosine_distance expects rank-1 vectors");
  }
  const std::int64_t d = x.dim(0);
  auto rows = cosine_distance_rows(reshape(x, {1, d}), reshape(y, {1, d}), eps);
  return reshape(rows, {1});
}

// ---------------------------------------------------------------------------
// attention gate: out[n,c,:] = f[n,c,:] * a[n,0,:] (broadcast over channels).

template <typename S>
Tensor<S> attention_gate(const Tensor<S>& f, const Tensor<S>& a) {
  if (f.rank() != 4 || a.rank() != 4 || a.dim(1) != 1 || f.dim(0) != a.dim(0) ||
      f.dim(2) != a.dim(2) || f.dim(3) != a.dim(3)) {
    throw ShapeError("attention_gate: features " + shape_str(f.shape()) +
                     " vs map " + shape_str(a.shape()));
  }
  const std::int64_t n = f.dim(0), c = f.dim(1), plane = f.dim(2) * f.dim(3);
  std::vector<S> out(f.value().size());
  const auto& fv = f.value();
  const auto& av = a.value();
  for (std::int64_t b = 0; b < n; ++b) {
    const S* amap = av.data() + b * plane;
    for (std::int64_t ch = 0; ch < c; ++ch) {
      const S* src = fv.data() + (b * c + ch) * plane;
      S* dst = out.data() + (b * c + ch) * plane;
      for (std::int64_t i = 0; i < plane; ++i) dst[i] = src[i] * amap[i];
    }
  }
  return detail::make_op<S>(
      f.shape(), std::move(out), "attention_gate", {f, a},
      [n, c, plane](TensorNode<S>& self) {
        auto& gf = *self.parents[0];
        auto& ga = *self.parents[1];
        if (gf.tracked) {
          auto& df = gf.ensure_grad();
          for (std::int64_t b = 0; b < n; ++b) {
            const S* amap = ga.value.data() + b * plane;
            for (std::int64_t ch = 0; ch < c; ++ch) {
              const S* dy = self.grad.data() + (b * c + ch) * plane;
              S* d = df.data() + (b * c + ch) * plane;
              for (std::int64_t i = 0; i < plane; ++i) d[i] += dy[i] * amap[i];
            }
          }
        }
        if (ga.tracked) {
          auto& da = ga.ensure_grad();
          for (std::int64_t b = 0; b < n; ++b) {
            S* d = da.data() + b * plane;
            for (std::int64_t ch = 0; ch < c; ++ch) {  // fixed reduction order
              const S* dy = self.grad.data() + (b * c + ch) * plane;
              const S* src = gf.value.data() + (b * c + ch) * plane;
              for (std::int64_t i = 0; i < plane; ++i) d[i] += dy[i] * src[i];
            }
          }
        }
      });
}

}  // namespace egt

#endif  // EGT_NN_OPS_HPP_
