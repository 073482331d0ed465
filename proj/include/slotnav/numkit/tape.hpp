#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "slotnav/numkit/matrix.hpp"
#include "slotnav/numkit/params.hpp"

namespace slotnav::numkit {

/// Handle to a value recorded on a Tape.
struct Var {
  static constexpr std::uint32_t kInvalid = std::numeric_limits<std::uint32_t>::max();
  std::uint32_t id = kInvalid;
  bool valid() const noexcept { return id != kInvalid; }
};

/// Reverse-mode gradient tape.
///
/// Every op records its output value and, when any input needs a gradient, a
/// closure that pushes the output gradient back to its inputs. Nodes are
/// appended in evaluation order, so a single reverse sweep visits each node
/// after all of its consumers. Values reachable only from constants are
/// folded: no closure, no gradient storage.
///
/// A tape is single-owner and single-use: backward() may be called once.
class Tape {
 public:
  Tape() = default;
  /// With `record_grads` false, param() yields constants and nothing is
  /// recorded for a backward pass. Used for inference.
  explicit Tape(bool record_grads) : record_grads_(record_grads) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  /// Leaf that receives a gradient but is not bound to a parameter.
  Var input(Matrix value);
  /// Leaf bound to `p`. Repeated calls with the same parameter return the
  /// same Var so its gradient is accumulated in one place.
  Var param(const Parameter& p);

  const Matrix& value(Var v) const;
  /// Gradient of the backward() output w.r.t. `v`; zeros when `v` did not
  /// contribute.
  Matrix grad(Var v) const;
  bool requires_grad(Var v) const;
  std::size_t size() const noexcept { return nodes_.size(); }
  bool records_grads() const noexcept { return record_grads_; }

  /// Seeds d(out)/d(out) = 1 and sweeps the tape in reverse. `out` must be 1×1.
  void backward(Var out);
  /// Adds `scale` × each bound parameter's gradient into `out`.
  void accumulate_param_grads(GradBuffer& out, double scale = 1.0) const;

  // Linear algebra. Shapes are checked; mismatches raise a config error.
  Var matmul(Var a, Var b);     // (m×k)(k×n)
  Var matmul_nt(Var a, Var b);  // (m×k)(n×k)ᵀ
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);        // elementwise
  Var add_row(Var a, Var row);  // broadcast a 1×n row over every row of a
  Var scale(Var a, double s);
  Var affine(Var a, double s, double shift);  // s·a + shift

  // Elementwise nonlinearities.
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var relu(Var a);

  /// Row-wise softmax with per-row max subtraction.
  Var softmax_rows(Var a);
  /// Per-row normalization to zero mean / unit variance, then gain and bias.
  Var layer_norm_rows(Var a, Var gain, Var bias, double eps = 1e-5);

  // Structural ops.
  Var concat_rows(std::span<const Var> parts);
  Var slice_rows(Var a, std::size_t begin, std::size_t count);
  Var concat_cols(std::span<const Var> parts);
  Var slice_cols(Var a, std::size_t begin, std::size_t count);
  Var gather_rows(Var table, std::vector<std::size_t> rows);

  // Reductions to 1×1.
  Var sum(Var a);
  Var sum_squares(Var a);
  /// Numerically stable binary cross-entropy on a 1×1 logit.
  Var bce_with_logits(Var logit, double target);

 private:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  struct Node {
    Matrix value;
    Matrix grad;
    Backward backward;
    bool requires_grad = false;
    std::int64_t param_index = -1;
  };

  Var push(Matrix value, bool requires_grad, Backward backward);
  Matrix& grad_ref(std::uint32_t id);
  const Node& node(Var v) const;
  bool any_requires(std::initializer_list<Var> vars) const;

  std::vector<Node> nodes_;
  std::vector<std::uint32_t> param_vars_;  // parameter index -> node id
  bool record_grads_ = true;
  bool backward_done_ = false;
};

}  // namespace slotnav::numkit
