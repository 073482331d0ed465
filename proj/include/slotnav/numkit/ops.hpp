#pragma once

#include <string>

#include "slotnav/numkit/params.hpp"
#include "slotnav/numkit/tape.hpp"

namespace slotnav::numkit {

/// y = x Wᵀ + b, row-batched: x is N×d_in, W is d_out×d_in, b is 1×d_out.
Var linear(Tape& tape, Var x, Var w, Var b);

/// Nine GRU tensors living in a ParamSet. W_* act on the input, U_* on the
/// previous state.
struct GruParams {
  Parameter* w_z = nullptr;
  Parameter* u_z = nullptr;
  Parameter* b_z = nullptr;
  Parameter* w_r = nullptr;
  Parameter* u_r = nullptr;
  Parameter* b_r = nullptr;
  Parameter* w_h = nullptr;
  Parameter* u_h = nullptr;
  Parameter* b_h = nullptr;

  std::size_t dim() const { return b_z->value.cols(); }
};

GruParams add_gru_params(ParamSet& set, const std::string& prefix, std::size_t dim, Rng& rng);

struct GruVars {
  Var w_z, u_z, b_z, w_r, u_r, b_r, w_h, u_h, b_h;
};
GruVars bind(Tape& tape, const GruParams& p);

/// Cho-style GRU, applied independently to every row of h_prev / x:
///   z = σ(x W_zᵀ + h U_zᵀ + b_z)
///   r = σ(x W_rᵀ + h U_rᵀ + b_r)
///   ĥ = tanh(x W_hᵀ + (r ⊙ h) U_hᵀ + b_h)
///   h' = (1 − z) ⊙ ĥ + z ⊙ h
Var gru_cell(Tape& tape, Var h_prev, Var x, const GruVars& p);

/// Two-layer perceptron φ(W₂ φ(W₁x + b₁) + b₂) with φ = ReLU. The outer φ is
/// optional (`outer_relu`).
struct Mlp2Params {
  Parameter* w1 = nullptr;
  Parameter* b1 = nullptr;
  Parameter* w2 = nullptr;
  Parameter* b2 = nullptr;
};

Mlp2Params add_mlp2_params(ParamSet& set, const std::string& prefix, std::size_t in,
                           std::size_t hidden, std::size_t out, Rng& rng);

struct Mlp2Vars {
  Var w1, b1, w2, b2;
};
Mlp2Vars bind(Tape& tape, const Mlp2Params& p);

Var mlp2(Tape& tape, Var x, const Mlp2Vars& p, bool outer_relu);

/// Plain (tape-free) row softmax, used where no gradient is needed.
Matrix softmax_rows(const Matrix& m);

}  // namespace slotnav::numkit
