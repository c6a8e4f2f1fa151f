#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "hosc/graph.hpp"

namespace hosc {

/// Adam with global gradient-norm clipping.
struct AdamState {
  std::vector<Matrix> m, v;
  long long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

inline AdamState make_adam_state(const std::vector<Matrix*>& params) {
  AdamState st;
  for (auto* p : params) {
    st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  return st;
}

inline double global_grad_norm(const std::vector<Matrix>& grads) {
  double sq = 0.0;
  for (auto& g : grads) sq += g.squaredNorm();
  return std::sqrt(sq);
}

/// One Adam step; gradients are first scaled so the global norm is at most
/// `grad_clip` (clip <= 0 disables clipping).
inline void optimizer_step(const std::vector<Matrix*>& params, std::vector<Matrix> grads,
                           AdamState& st, double lr, double grad_clip) {
  if (params.size() != grads.size() || params.size() != st.m.size())
    throw std::invalid_argument("optimizer_step: parameter/gradient count mismatch");
  if (grad_clip > 0) {
    double norm = global_grad_norm(grads);
    if (norm > grad_clip) {
      double scale = grad_clip / norm;
      for (auto& g : grads) g *= scale;
    }
  }
  st.step++;
  double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * grads[i];
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * grads[i].cwiseProduct(grads[i]);
    Matrix m_hat = st.m[i] / bc1;
    Matrix v_hat = st.v[i] / bc2;
    params[i]->array() -= lr * m_hat.array() / (v_hat.array().sqrt() + st.eps);
  }
}

}  // namespace hosc
