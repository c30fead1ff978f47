// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/tensor.hpp"

#include <cmath>
#include <sstream>

#include "vnsgru/kernels.hpp"

namespace vnsgru {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

} // namespace

Tensor::Tensor(std::vector<std::size_t> s, std::vector<double> d)
    : shape(std::move(s)), data(std::move(d)) {
  if (shape_product(shape) != data.size())
    throw DimensionError("tensor: shape " + shape_str(*this) + " does not hold " +
                         std::to_string(data.size()) + " values");
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0));
}

Tensor Tensor::full(std::vector<std::size_t> shape, double value) {
  std::size_t n = shape_product(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::vec(std::vector<double> values) {
  std::size_t n = values.size();
  return Tensor({n}, std::move(values));
}

Tensor Tensor::mat(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor({rows, cols}, std::move(values));
}

std::size_t Tensor::rows() const {
  if (rank() != 2) throw DimensionError("rows(): tensor has shape " + shape_str(*this));
  return shape[0];
}

std::size_t Tensor::cols() const {
  if (rank() != 2) throw DimensionError("cols(): tensor has shape " + shape_str(*this));
  return shape[1];
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

std::string shape_str(const Tensor& t) {
  std::ostringstream os;
  os << '{';
  for (std::size_t i = 0; i < t.shape.size(); ++i) {
    if (i) os << ',';
    os << t.shape[i];
  }
  os << '}';
  return os.str();
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (!a.same_shape(b))
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2)
    throw DimensionError("matmul: left operand has shape " + shape_str(a));
  if (b.rank() == 1) {
    if (a.cols() != b.size())
      throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
    Tensor y = Tensor::zeros({a.rows()});
    kernels::matvec(a.data.data(), b.data.data(), y.data.data(), a.rows(), a.cols());
    return y;
  }
  if (b.rank() == 2) {
    if (a.cols() != b.rows())
      throw DimensionError("matmul: " + shape_str(a) + " * " + shape_str(b));
    Tensor y = Tensor::zeros({a.rows(), b.cols()});
    kernels::matmul(a.data.data(), b.data.data(), y.data.data(), a.rows(), a.cols(),
                    b.cols());
    return y;
  }
  throw DimensionError("matmul: right operand has shape " + shape_str(b));
}

Tensor matvec_t(const Tensor& w, const Tensor& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.rows() != x.size())
    throw DimensionError("matvec_t: " + shape_str(w) + "^T * " + shape_str(x));
  Tensor y = Tensor::zeros({w.cols()});
  kernels::matvec_t(w.data.data(), x.data.data(), y.data.data(), w.rows(), w.cols());
  return y;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor y = a;
  kernels::vadd(a.data.data(), b.data.data(), y.data.data(), a.size());
  return y;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor y = a;
  kernels::vsub(a.data.data(), b.data.data(), y.data.data(), a.size());
  return y;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor y = a;
  kernels::vmul(a.data.data(), b.data.data(), y.data.data(), a.size());
  return y;
}

Tensor scale(const Tensor& a, double c) { return affine(a, c, 0.0); }

Tensor affine(const Tensor& a, double m, double c) {
  Tensor y = a;
  kernels::vaffine(a.data.data(), m, c, y.data.data(), a.size());
  return y;
}

Tensor sigmoid(const Tensor& a) {
  Tensor y = a;
  kernels::map_sigmoid(a.data.data(), y.data.data(), a.size());
  return y;
}

Tensor tanh(const Tensor& a) {
  Tensor y = a;
  kernels::map_tanh(a.data.data(), y.data.data(), a.size());
  return y;
}

Tensor softmax(const Tensor& x) {
  if (x.rank() != 1 || x.size() == 0)
    throw DomainError("softmax: expected non-empty vector, got " + shape_str(x));
  Tensor y = x;
  double mx = x.data[0];
  for (double v : x.data) mx = std::max(mx, v);
  double total = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    y.data[i] = std::exp(x.data[i] - mx);
    total += y.data[i];
  }
  for (double& v : y.data) v /= total;
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  if (x.rank() != 1 || x.size() < 2)
    throw DimensionError("layer_norm: expected vector of length >= 2, got " + shape_str(x));
  require_same_shape("layer_norm gain", x, gain);
  require_same_shape("layer_norm bias", x, bias);
  const std::size_t n = x.size();
  double mean = 0.0;
  for (double v : x.data) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : x.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / std::sqrt(var + eps);
  Tensor y = x;
  for (std::size_t i = 0; i < n; ++i)
    y.data[i] = (x.data[i] - mean) * inv * gain.data[i] + bias.data[i];
  return y;
}

double sum(const Tensor& a) {
  double acc = 0.0;
  for (double v : a.data) acc += v;
  return acc;
}

double dot(const Tensor& a, const Tensor& b) {
  require_same_shape("dot", a, b);
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data[i] * b.data[i];
  return acc;
}

void round_to_storage_precision(Tensor& t) {
  for (double& v : t.data) v = static_cast<double>(static_cast<float>(v));
}

} // namespace vnsgru
