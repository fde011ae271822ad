#include "rirforge/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "rirforge/error.hpp"

namespace rirforge::nn {

std::size_t element_count(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i > 0) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(std::vector<std::size_t> shape_, double fill)
    : shape(std::move(shape_)), data(element_count(shape), fill) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
  if (data.size() != element_count(shape)) {
    throw Error(ErrorKind::kShapeMismatch,
                "tensor data does not match shape " + shape_string(shape));
  }
}

std::size_t ParameterSet::scalar_count() const noexcept {
  std::size_t total = 0;
  for (const Tensor& t : tensors) total += t.numel();
  return total;
}

std::size_t ParameterSet::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown parameter '" + name + "'");
}

ParameterSet ParameterSet::zeros_like() const {
  ParameterSet out;
  out.names = names;
  out.tensors.reserve(tensors.size());
  for (const Tensor& t : tensors) out.tensors.emplace_back(t.shape, 0.0);
  return out;
}

bool ParameterSet::all_finite() const {
  for (const Tensor& t : tensors) {
    for (double v : t.data) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

void accumulate(ParameterSet& a, const ParameterSet& b, double scale) {
  if (a.names != b.names) {
    throw Error(ErrorKind::kShapeMismatch, "parameter sets differ in layout");
  }
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    auto& dst = a.tensors[i];
    const auto& src = b.tensors[i];
    if (dst.shape != src.shape) {
      throw Error(ErrorKind::kShapeMismatch, "parameter '" + a.names[i] + "' shape differs");
    }
    for (std::size_t k = 0; k < dst.data.size(); ++k) dst.data[k] += scale * src.data[k];
  }
}

double squared_norm(const ParameterSet& p) {
  double total = 0.0;
  for (const Tensor& t : p.tensors) {
    for (double v : t.data) total += v * v;
  }
  return total;
}

}  // namespace rirforge::nn
