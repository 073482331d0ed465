#include "slotnav/numkit/params.hpp"

#include "slotnav/error.hpp"

namespace slotnav::numkit {

Parameter& ParamSet::add(std::string name, Matrix init) {
  if (find(name) != nullptr) fail(ErrorKind::Config, "duplicate parameter name " + name);
  Parameter& p = params_.emplace_back();
  p.name = std::move(name);
  p.value = std::move(init);
  p.index = params_.size() - 1;
  return p;
}

Parameter* ParamSet::find(const std::string& name) {
  for (auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const Parameter* ParamSet::find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

GradBuffer::GradBuffer(const ParamSet& params) {
  grads_.reserve(params.size());
  for (const auto& p : params) grads_.emplace_back(p.value.rows(), p.value.cols());
}

void GradBuffer::zero() {
  for (auto& g : grads_) g.fill(0.0);
}

void GradBuffer::add_scaled(const GradBuffer& other, double scale) {
  if (other.size() != size()) fail(ErrorKind::Config, "gradient buffer size mismatch");
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    auto dst = grads_[i].values();
    auto src = other.grads_[i].values();
    for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += scale * src[j];
  }
}

void GradBuffer::scale(double s) {
  for (auto& g : grads_) {
    for (double& v : g.values()) v *= s;
  }
}

bool GradBuffer::all_finite() const {
  for (const auto& g : grads_) {
    if (!g.all_finite()) return false;
  }
  return true;
}

Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = stddev * rng.normal();
  return m;
}

Matrix random_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi) {
  Matrix m(rows, cols);
  for (double& v : m.values()) v = rng.uniform(lo, hi);
  return m;
}

}  // namespace slotnav::numkit
