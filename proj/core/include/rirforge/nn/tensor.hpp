#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace rirforge::nn {

// Dense row-major array of doubles. Activations are rank 3: (batch, channels,
// length); parameters use whatever rank their layer needs.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(std::vector<std::size_t> shape_, double fill = 0.0);
  Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  std::size_t numel() const noexcept { return data.size(); }

  std::span<double> view() noexcept { return data; }
  std::span<const double> view() const noexcept { return data; }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

std::size_t element_count(const std::vector<std::size_t>& shape);
std::string shape_string(const std::vector<std::size_t>& shape);

// Named, ordered collection of tensors. Used for both weights and gradients.
struct ParameterSet {
  std::vector<std::string> names;
  std::vector<Tensor> tensors;

  std::size_t size() const noexcept { return tensors.size(); }
  std::size_t scalar_count() const noexcept;
  std::size_t index_of(const std::string& name) const;  // throws if absent
  const Tensor& at(const std::string& name) const { return tensors[index_of(name)]; }
  Tensor& at(const std::string& name) { return tensors[index_of(name)]; }

  // Same names and shapes, all zeros.
  ParameterSet zeros_like() const;
  bool all_finite() const;

  friend bool operator==(const ParameterSet&, const ParameterSet&) = default;
};

using Gradients = ParameterSet;

// a += scale * b; names and shapes must match.
void accumulate(ParameterSet& a, const ParameterSet& b, double scale = 1.0);
double squared_norm(const ParameterSet& p);

}  // namespace rirforge::nn
