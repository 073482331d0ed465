#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <vector>

#include "slotnav/numkit/matrix.hpp"
#include "slotnav/numkit/rng.hpp"

namespace slotnav::numkit {

/// A named trainable tensor. `index` is its position in the owning ParamSet
/// and is how tapes and gradient buffers refer to it.
struct Parameter {
  std::string name;
  Matrix value;
  std::size_t index = 0;
};

/// Owning registry of trainable tensors. References returned by add() stay
/// valid for the lifetime of the set.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) = default;
  ParamSet& operator=(ParamSet&&) = default;

  Parameter& add(std::string name, Matrix init);

  std::size_t size() const noexcept { return params_.size(); }
  Parameter& operator[](std::size_t i) { return params_[i]; }
  const Parameter& operator[](std::size_t i) const { return params_[i]; }
  Parameter* find(const std::string& name);
  const Parameter* find(const std::string& name) const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

  std::size_t scalar_count() const;

 private:
  std::deque<Parameter> params_;
};

/// Gradients for every parameter of a ParamSet, index-aligned.
class GradBuffer {
 public:
  GradBuffer() = default;
  explicit GradBuffer(const ParamSet& params);

  Matrix& operator[](std::size_t i) { return grads_[i]; }
  const Matrix& operator[](std::size_t i) const { return grads_[i]; }
  std::size_t size() const noexcept { return grads_.size(); }

  void zero();
  void add_scaled(const GradBuffer& other, double scale);
  void scale(double s);
  bool all_finite() const;

 private:
  std::vector<Matrix> grads_;
};

/// Scaled Gaussian init (std = gain / sqrt(fan_in)).
Matrix random_normal(Rng& rng, std::size_t rows, std::size_t cols, double stddev);
Matrix random_uniform(Rng& rng, std::size_t rows, std::size_t cols, double lo, double hi);

}  // namespace slotnav::numkit
