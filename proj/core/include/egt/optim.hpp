// Copyright 2026 The EGT Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef EGT_OPTIM_HPP_
#define EGT_OPTIM_HPP_

#include <cmath>
#include <cstdint>
#include <vector>

#include "egt/tensor.hpp"

namespace egt {

// Bias-corrected Adam. Moments are kept per parameter tensor in census order.
template <typename S>
struct AdamState {
  struct Slot {
    std::vector<S> m, v;
  };
  std::vector<Slot> slots;
  std::int64_t t = 0;
  S beta1 = S(0.9);
  S beta2 = S(0.999);
  S eps = S(1e-8);
  S pow_beta1 = S(1);  // beta1^t, advanced incrementally
  S pow_beta2 = S(1);

  static AdamState init(const std::vector<Tensor<S>>& params) {
    AdamState st;
    st.slots.resize(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
      st.slots[i].m.assign(params[i].value().size(), S(0));
      st.slots[i].v.assign(params[i].value().size(), S(0));
    }
    return st;
  }
};

template <typename S>
void adam_step(std::vector<Tensor<S>>& params, AdamState<S>& state, double lr) {
  if (params.size() != state.slots.size()) {
    throw ContractError("adam state does not match parameter list");
  }
  state.t += 1;
  state.pow_beta1 *= state.beta1;
  state.pow_beta2 *= state.beta2;
  const S bc1 = S(1) - state.pow_beta1;
  const S bc2 = S(1) - state.pow_beta2;
  const S step = static_cast<S>(lr);
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& p = params[pi];
    if (!p.has_grad()) {
      throw ContractError("parameter " + std::to_string(pi) +
                          " has no gradient before adam_step");
    }
    const auto& g = p.grad();
    auto& value = p.mutable_value();
    auto& m = state.slots[pi].m;
    auto& v = state.slots[pi].v;
    if (m.size() != value.size()) {
      throw ContractError("adam slot size mismatch at parameter " +
                          std::to_string(pi));
    }
    for (std::size_t i = 0; i < value.size(); ++i) {
      m[i] = state.beta1 * m[i] + (S(1) - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (S(1) - state.beta2) * g[i] * g[i];
      const S mhat = m[i] / bc1;
      const S vhat = v[i] / bc2;
      value[i] -= step * mhat / (std::sqrt(vhat) + state.eps);
    }
  }
}

// lr0 * gamma^floor(epoch / step_size), evaluated by repeated multiplication
// so halving schedules stay exact in binary floating point.
inline double lr_schedule(int epoch, double lr0, int step_size, double gamma) {
  double lr = lr0;
  for (int i = 0, decays = epoch / step_size; i < decays; ++i) lr *= gamma;
  return lr;
}

}  // namespace egt

#endif  // EGT_OPTIM_HPP_
