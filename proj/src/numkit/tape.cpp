#include "slotnav/numkit/tape.hpp"

#include <algorithm>
#include <cmath>

#include "slotnav/error.hpp"
#include "slotnav/numkit/kernels.hpp"

namespace slotnav::numkit {

namespace {

void require(bool ok, const char* op, const Matrix& a, const Matrix& b) {
  if (!ok) {
    fail(ErrorKind::Config,
         std::string(op) + ": dimension mismatch " + a.shape_string() + " vs " + b.shape_string());
  }
}

double sigmoid_scalar(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::push(Matrix value, bool requires_grad, Backward backward) {
  if (nodes_.size() >= Var::kInvalid) fail(ErrorKind::Config, "tape overflow");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) fail(ErrorKind::Config, "invalid tape variable");
  return nodes_[v.id];
}

bool Tape::any_requires(std::initializer_list<Var> vars) const {
  for (Var v : vars) {
    if (node(v).requires_grad) return true;
  }
  return false;
}

Matrix& Tape::grad_ref(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.grad.empty() && !n.value.empty()) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) { return push(std::move(value), false, nullptr); }

Var Tape::input(Matrix value) {
  Var v = push(std::move(value), true, nullptr);
  nodes_[v.id].requires_grad = true;
  return v;
}

Var Tape::param(const Parameter& p) {
  if (p.index < param_vars_.size() && param_vars_[p.index] != Var::kInvalid) {
    return Var{param_vars_[p.index]};
  }
  Var v = record_grads_ ? input(p.value) : constant(p.value);
  if (record_grads_) nodes_[v.id].param_index = static_cast<std::int64_t>(p.index);
  if (param_vars_.size() <= p.index) param_vars_.resize(p.index + 1, Var::kInvalid);
  param_vars_[p.index] = v.id;
  return v;
}

const Matrix& Tape::value(Var v) const { return node(v).value; }

Matrix Tape::grad(Var v) const {
  const Node& n = node(v);
  if (n.grad.empty()) return Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

bool Tape::requires_grad(Var v) const { return node(v).requires_grad; }

void Tape::backward(Var out) {
  if (backward_done_) fail(ErrorKind::Config, "tape backward() called twice");
  const Node& o = node(out);
  if (o.value.rows() != 1 || o.value.cols() != 1) {
    fail(ErrorKind::Config, "backward() needs a 1x1 output, got " + o.value.shape_string());
  }
  backward_done_ = true;
  if (!o.requires_grad) return;
  grad_ref(out.id)(0, 0) = 1.0;
  for (std::int64_t i = out.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (n.backward && !n.grad.empty()) n.backward(*this, n.grad);
  }
}

void Tape::accumulate_param_grads(GradBuffer& out, double scale) const {
  for (std::size_t p = 0; p < param_vars_.size(); ++p) {
    const std::uint32_t id = param_vars_[p];
    if (id == Var::kInvalid) continue;
    const Node& n = nodes_[id];
    if (n.grad.empty()) continue;
    if (p >= out.size()) fail(ErrorKind::Config, "gradient buffer smaller than parameter set");
    Matrix& dst = out[p];
    require(dst.same_shape(n.grad), "accumulate_param_grads", dst, n.grad);
    kernels::axpy(scale, n.grad.data(), dst.data(), dst.size());
  }
}

namespace {

Matrix transposed(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  }
  return t;
}

}  // namespace

Var Tape::matmul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.cols() == B.rows(), "matmul", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
  Matrix C(m, n);
  for (std::size_t i = 0; i < m; ++i) kernels::axpy_rows(A.data() + i * k, B.data(), k, n, C.data() + i * n);
  return push(std::move(C), any_requires({a, b}), [a, b, m, k, n](Tape& t, const Matrix& g) {
    const Matrix& A = t.nodes_[a.id].value;
    const Matrix& B = t.nodes_[b.id].value;
    if (t.nodes_[a.id].requires_grad) {
      Matrix& dA = t.grad_ref(a.id);
      for (std::size_t i = 0; i < m; ++i) kernels::dot_rows(g.data() + i * n, B.data(), k, n, dA.data() + i * k);
    }
    if (t.nodes_[b.id].requires_grad) {
      Matrix& dB = t.grad_ref(b.id);
      const Matrix At = transposed(A);
      for (std::size_t p = 0; p < k; ++p) kernels::axpy_rows(At.data() + p * m, g.data(), m, n, dB.data() + p * n);
    }
  });
}

Var Tape::matmul_nt(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.cols() == B.cols(), "matmul_nt", A, B);
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  Matrix C(m, n);
  for (std::size_t i = 0; i < m; ++i) kernels::dot_rows(A.data() + i * k, B.data(), n, k, C.data() + i * n);
  return push(std::move(C), any_requires({a, b}), [a, b, m, k, n](Tape& t, const Matrix& g) {
    const Matrix& A = t.nodes_[a.id].value;
    const Matrix& B = t.nodes_[b.id].value;
    if (t.nodes_[a.id].requires_grad) {
      Matrix& dA = t.grad_ref(a.id);
      for (std::size_t i = 0; i < m; ++i) kernels::axpy_rows(g.data() + i * n, B.data(), n, k, dA.data() + i * k);
    }
    if (t.nodes_[b.id].requires_grad) {
      Matrix& dB = t.grad_ref(b.id);
      const Matrix gt = transposed(g);
      for (std::size_t j = 0; j < n; ++j) kernels::axpy_rows(gt.data() + j * m, A.data(), m, k, dB.data() + j * k);
    }
  });
}

Var Tape::add(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.same_shape(B), "add", A, B);
  Matrix C = A;
  kernels::axpy(1.0, B.data(), C.data(), C.size());
  return push(std::move(C), any_requires({a, b}), [a, b](Tape& t, const Matrix& g) {
    for (Var v : {a, b}) {
      if (t.nodes_[v.id].requires_grad) kernels::axpy(1.0, g.data(), t.grad_ref(v.id).data(), g.size());
    }
  });
}

Var Tape::sub(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.same_shape(B), "sub", A, B);
  Matrix C = A;
  kernels::axpy(-1.0, B.data(), C.data(), C.size());
  return push(std::move(C), any_requires({a, b}), [a, b](Tape& t, const Matrix& g) {
    if (t.nodes_[a.id].requires_grad) kernels::axpy(1.0, g.data(), t.grad_ref(a.id).data(), g.size());
    if (t.nodes_[b.id].requires_grad) kernels::axpy(-1.0, g.data(), t.grad_ref(b.id).data(), g.size());
  });
}

Var Tape::mul(Var a, Var b) {
  const Matrix& A = value(a);
  const Matrix& B = value(b);
  require(A.same_shape(B), "mul", A, B);
  Matrix C(A.rows(), A.cols());
  for (std::size_t i = 0; i < C.size(); ++i) C[i] = A[i] * B[i];
  return push(std::move(C), any_requires({a, b}), [a, b](Tape& t, const Matrix& g) {
    const Matrix& A = t.nodes_[a.id].value;
    const Matrix& B = t.nodes_[b.id].value;
    if (t.nodes_[a.id].requires_grad) {
      Matrix& dA = t.grad_ref(a.id);
      for (std::size_t i = 0; i < g.size(); ++i) dA[i] += g[i] * B[i];
    }
    if (t.nodes_[b.id].requires_grad) {
      Matrix& dB = t.grad_ref(b.id);
      for (std::size_t i = 0; i < g.size(); ++i) dB[i] += g[i] * A[i];
    }
  });
}

Var Tape::add_row(Var a, Var row) {
  const Matrix& A = value(a);
  const Matrix& R = value(row);
  require(R.rows() == 1 && R.cols() == A.cols(), "add_row", A, R);
  Matrix C = A;
  for (std::size_t i = 0; i < C.rows(); ++i) {
    kernels::axpy(1.0, R.data(), C.data() + i * C.cols(), C.cols());
  }
  return push(std::move(C), any_requires({a, row}), [a, row](Tape& t, const Matrix& g) {
    if (t.nodes_[a.id].requires_grad) kernels::axpy(1.0, g.data(), t.grad_ref(a.id).data(), g.size());
    if (t.nodes_[row.id].requires_grad) {
      Matrix& dR = t.grad_ref(row.id);
      for (std::size_t i = 0; i < g.rows(); ++i) {
        kernels::axpy(1.0, g.data() + i * g.cols(), dR.data(), g.cols());
      }
    }
  });
}

Var Tape::scale(Var a, double s) { return affine(a, s, 0.0); }

Var Tape::affine(Var a, double s, double shift) {
  Matrix C = value(a);
  for (double& v : C.values()) v = s * v + shift;
  return push(std::move(C), any_requires({a}), [a, s](Tape& t, const Matrix& g) {
    kernels::axpy(s, g.data(), t.grad_ref(a.id).data(), g.size());
  });
}

Var Tape::sigmoid(Var a) {
  Matrix C = value(a);
  for (double& v : C.values()) v = sigmoid_scalar(v);
  const std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(C), any_requires({a}), [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[self].value;
    Matrix& dA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) dA[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::tanh(Var a) {
  Matrix C = value(a);
  for (double& v : C.values()) v = std::tanh(v);
  const std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(C), any_requires({a}), [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[self].value;
    Matrix& dA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) dA[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::relu(Var a) {
  Matrix C = value(a);
  for (double& v : C.values()) v = v > 0.0 ? v : 0.0;
  return push(std::move(C), any_requires({a}), [a](Tape& t, const Matrix& g) {
    const Matrix& x = t.nodes_[a.id].value;
    Matrix& dA = t.grad_ref(a.id);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) dA[i] += g[i];
    }
  });
}

Var Tape::softmax_rows(Var a) {
  const Matrix& A = value(a);
  Matrix C(A.rows(), A.cols());
  for (std::size_t r = 0; r < A.rows(); ++r) {
    auto in = A.row_span(r);
    auto out = C.row_span(r);
    const double mx = *std::max_element(in.begin(), in.end());
    double total = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      out[j] = std::exp(in[j] - mx);
      total += out[j];
    }
    for (double& v : out) v /= total;
  }
  const std::uint32_t self = static_cast<std::uint32_t>(nodes_.size());
  return push(std::move(C), any_requires({a}), [a, self](Tape& t, const Matrix& g) {
    const Matrix& y = t.nodes_[self].value;
    Matrix& dA = t.grad_ref(a.id);
    const std::size_t n = y.cols();
    for (std::size_t r = 0; r < y.rows(); ++r) {
      const double inner = kernels::dot(g.data() + r * n, y.data() + r * n, n);
      for (std::size_t j = 0; j < n; ++j) dA(r, j) += y(r, j) * (g(r, j) - inner);
    }
  });
}

Var Tape::layer_norm_rows(Var a, Var gain, Var bias, double eps) {
  const Matrix& A = value(a);
  const Matrix& G = value(gain);
  const Matrix& B = value(bias);
  require(G.rows() == 1 && G.cols() == A.cols(), "layer_norm gain", A, G);
  require(B.same_shape(G), "layer_norm bias", G, B);
  const std::size_t n = A.cols();
  Matrix normalized(A.rows(), n);
  std::vector<double> inv_std(A.rows());
  Matrix C(A.rows(), n);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    auto x = A.row_span(r);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : x) var += (v - mean) * (v - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < n; ++j) {
      normalized(r, j) = (x[j] - mean) * inv_std[r];
      C(r, j) = normalized(r, j) * G[j] + B[j];
    }
  }
  return push(std::move(C), any_requires({a, gain, bias}),
              [a, gain, bias, n, normalized = std::move(normalized),
               inv_std = std::move(inv_std)](Tape& t, const Matrix& g) {
                const Matrix& G = t.nodes_[gain.id].value;
                if (t.nodes_[gain.id].requires_grad) {
                  Matrix& dG = t.grad_ref(gain.id);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    for (std::size_t j = 0; j < n; ++j) dG[j] += g(r, j) * normalized(r, j);
                  }
                }
                if (t.nodes_[bias.id].requires_grad) {
                  Matrix& dB = t.grad_ref(bias.id);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    kernels::axpy(1.0, g.data() + r * n, dB.data(), n);
                  }
                }
                if (t.nodes_[a.id].requires_grad) {
                  Matrix& dA = t.grad_ref(a.id);
                  std::vector<double> dxhat(n);
                  for (std::size_t r = 0; r < g.rows(); ++r) {
                    double mean_d = 0.0, mean_dx = 0.0;
                    for (std::size_t j = 0; j < n; ++j) {
                      dxhat[j] = g(r, j) * G[j];
                      mean_d += dxhat[j];
                      mean_dx += dxhat[j] * normalized(r, j);
                    }
                    mean_d /= static_cast<double>(n);
                    mean_dx /= static_cast<double>(n);
                    for (std::size_t j = 0; j < n; ++j) {
                      dA(r, j) += inv_std[r] * (dxhat[j] - mean_d - normalized(r, j) * mean_dx);
                    }
                  }
                }
              });
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::Config, "concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  bool needs = false;
  for (Var p : parts) {
    require(value(p).cols() == cols, "concat_rows", value(parts[0]), value(p));
    rows += value(p).rows();
    needs = needs || requires_grad(p);
  }
  Matrix C(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& P = value(p);
    std::copy(P.values().begin(), P.values().end(), C.data() + offset * cols);
    offset += P.rows();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(C), needs, [ids = std::move(ids), cols](Tape& t, const Matrix& g) {
    std::size_t offset = 0;
    for (Var p : ids) {
      const std::size_t r = t.nodes_[p.id].value.rows();
      if (t.nodes_[p.id].requires_grad) {
        kernels::axpy(1.0, g.data() + offset * cols, t.grad_ref(p.id).data(), r * cols);
      }
      offset += r;
    }
  });
}

Var Tape::slice_rows(Var a, std::size_t begin, std::size_t count) {
  const Matrix& A = value(a);
  if (begin + count > A.rows()) {
    fail(ErrorKind::Config, "slice_rows out of range on " + A.shape_string());
  }
  const std::size_t cols = A.cols();
  Matrix C(count, cols);
  std::copy(A.data() + begin * cols, A.data() + (begin + count) * cols, C.data());
  return push(std::move(C), any_requires({a}), [a, begin, cols](Tape& t, const Matrix& g) {
    kernels::axpy(1.0, g.data(), t.grad_ref(a.id).data() + begin * cols, g.size());
  });
}

Var Tape::concat_cols(std::span<const Var> parts) {
  if (parts.empty()) fail(ErrorKind::Config, "concat_cols: no inputs");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool needs = false;
  for (Var p : parts) {
    require(value(p).rows() == rows, "concat_cols", value(parts[0]), value(p));
    cols += value(p).cols();
    needs = needs || requires_grad(p);
  }
  Matrix C(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Matrix& P = value(p);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(P.row_span(r).begin(), P.row_span(r).end(), C.data() + r * cols + offset);
    }
    offset += P.cols();
  }
  std::vector<Var> ids(parts.begin(), parts.end());
  return push(std::move(C), needs, [ids = std::move(ids), rows, cols](Tape& t, const Matrix& g) {
    std::size_t offset = 0;
    for (Var p : ids) {
      const std::size_t c = t.nodes_[p.id].value.cols();
      if (t.nodes_[p.id].requires_grad) {
        Matrix& dP = t.grad_ref(p.id);
        for (std::size_t r = 0; r < rows; ++r) {
          kernels::axpy(1.0, g.data() + r * cols + offset, dP.data() + r * c, c);
        }
      }
      offset += c;
    }
  });
}

Var Tape::slice_cols(Var a, std::size_t begin, std::size_t count) {
  const Matrix& A = value(a);
  if (begin + count > A.cols()) {
    fail(ErrorKind::Config, "slice_cols out of range on " + A.shape_string());
  }
  const std::size_t cols = A.cols();
  Matrix C(A.rows(), count);
  for (std::size_t r = 0; r < A.rows(); ++r) {
    std::copy(A.data() + r * cols + begin, A.data() + r * cols + begin + count,
              C.data() + r * count);
  }
  return push(std::move(C), any_requires({a}), [a, begin, count, cols](Tape& t, const Matrix& g) {
    Matrix& dA = t.grad_ref(a.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      kernels::axpy(1.0, g.data() + r * count, dA.data() + r * cols + begin, count);
    }
  });
}

Var Tape::gather_rows(Var table, std::vector<std::size_t> rows) {
  const Matrix& T = value(table);
  const std::size_t cols = T.cols();
  Matrix C(rows.size(), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] >= T.rows()) fail(ErrorKind::Config, "gather_rows index out of range");
    std::copy(T.row_span(rows[i]).begin(), T.row_span(rows[i]).end(), C.data() + i * cols);
  }
  return push(std::move(C), any_requires({table}),
              [table, rows = std::move(rows), cols](Tape& t, const Matrix& g) {
                Matrix& dT = t.grad_ref(table.id);
                for (std::size_t i = 0; i < rows.size(); ++i) {
                  kernels::axpy(1.0, g.data() + i * cols, dT.data() + rows[i] * cols, cols);
                }
              });
}

Var Tape::sum(Var a) {
  double s = 0.0;
  for (double v : value(a).values()) s += v;
  return push(Matrix(1, 1, s), any_requires({a}), [a](Tape& t, const Matrix& g) {
    Matrix& dA = t.grad_ref(a.id);
    for (double& v : dA.values()) v += g[0];
  });
}

Var Tape::sum_squares(Var a) {
  const Matrix& A = value(a);
  const double s = kernels::dot(A.data(), A.data(), A.size());
  return push(Matrix(1, 1, s), any_requires({a}), [a](Tape& t, const Matrix& g) {
    const Matrix& A = t.nodes_[a.id].value;
    kernels::axpy(2.0 * g[0], A.data(), t.grad_ref(a.id).data(), A.size());
  });
}

Var Tape::bce_with_logits(Var logit, double target) {
  const Matrix& L = value(logit);
  if (L.rows() != 1 || L.cols() != 1) {
    fail(ErrorKind::Config, "bce_with_logits expects a 1x1 logit, got " + L.shape_string());
  }
  const double x = L[0];
  // max(x,0) - x*y + log(1 + exp(-|x|))
  const double loss = std::max(x, 0.0) - x * target + std::log1p(std::exp(-std::abs(x)));
  return push(Matrix(1, 1, loss), any_requires({logit}), [logit, target](Tape& t, const Matrix& g) {
    const double x = t.nodes_[logit.id].value[0];
    t.grad_ref(logit.id)[0] += g[0] * (sigmoid_scalar(x) - target);
  });
}

}  // namespace slotnav::numkit
