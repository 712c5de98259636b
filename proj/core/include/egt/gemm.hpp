// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0
//
// Row-major matrix multiply used by the conv/linear kernels. The kernel is
// blocked over columns for cache reuse, but every output element is always
// accumulated in ascending-k order by exactly one thread, so the result is
// bitwise identical for any thread count.

#ifndef EGT_GEMM_HPP_
#define EGT_GEMM_HPP_

#include <cstdint>
#include <vector>

#include "egt/parallel.hpp"

namespace egt {

// C[M,N] = A[M,K] * B[K,N] (or += when accumulate). Blocked over columns and
// the inner dimension so the active B panel stays cache resident; per output
// element the additions still run in ascending-k order.
template <typename S>
void gemm_nn(std::int64_t m, std::int64_t n, std::int64_t k, const S* a,
             const S* b, S* c, bool accumulate = false) {
  constexpr std::int64_t kColBlock = 256;
  constexpr std::int64_t kInnerBlock = 256;
  parallel_for(m, [=](std::int64_t row_begin, std::int64_t row_end) {
    std::vector<S> acc(static_cast<std::size_t>(std::min(kColBlock, n)));
    S* const acc_ptr = acc.data();
    for (std::int64_t jb = 0; jb < n; jb += kColBlock) {
      const std::int64_t jw = std::min(kColBlock, n - jb);
      for (std::int64_t kb = 0; kb < k; kb += kInnerBlock) {
        const std::int64_t ke = std::min(kb + kInnerBlock, k);
        const bool first = kb == 0;
        for (std::int64_t i = row_begin; i < row_end; ++i) {
          S* c_row = c + i * n + jb;
          if (first) {
            if (accumulate) {
              for (std::int64_t j = 0; j < jw; ++j) acc_ptr[j] = c_row[j];
            } else {
              for (std::int64_t j = 0; j < jw; ++j) acc_ptr[j] = S(0);
            }
          } else {
            for (std::int64_t j = 0; j < jw; ++j) acc_ptr[j] = c_row[j];
          }
          const S* a_row = a + i * k;
          for (std::int64_t p = kb; p < ke; ++p) {
            const S a_ip = a_row[p];
            const S* b_row = b + p * n + jb;
            for (std::int64_t j = 0; j < jw; ++j) {
              acc_ptr[j] += a_ip * b_row[j];
            }
          }
          for (std::int64_t j = 0; j < jw; ++j) c_row[j] = acc_ptr[j];
        }
      }
    }
  });
}

// Out-of-place transpose: dst[N,M] = src[M,N]^T.
template <typename S>
void transpose(std::int64_t m, std::int64_t n, const S* src, S* dst) {
  constexpr std::int64_t kTile = 32;
  for (std::int64_t ib = 0; ib < m; ib += kTile) {
    const std::int64_t ie = std::min(ib + kTile, m);
    for (std::int64_t jb = 0; jb < n; jb += kTile) {
      const std::int64_t je = std::min(jb + kTile, n);
      for (std::int64_t i = ib; i < ie; ++i) {
        for (std::int64_t j = jb; j < je; ++j) {
          dst[j * m + i] = src[i * n + j];
        }
      }
    }
  }
}

}  // namespace egt

#endif  // EGT_GEMM_HPP_
