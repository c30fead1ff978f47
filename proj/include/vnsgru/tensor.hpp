// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "vnsgru/errors.hpp"

namespace vnsgru {

/// Dense row-major tensor of doubles. Rank 1 and 2 cover everything the
/// decoder needs; higher ranks are allowed but only exercised by storage.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> s, std::vector<double> d);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, double value);
  static Tensor ones(std::vector<std::size_t> shape) { return full(std::move(shape), 1.0); }
  static Tensor scalar(double value) { return Tensor({1}, {value}); }
  static Tensor vec(std::vector<double> values);
  static Tensor mat(std::size_t rows, std::size_t cols, std::vector<double> values);

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double operator()(std::size_t i) const { return data[i]; }
  double& operator()(std::size_t i) { return data[i]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data[r * cols() + c]; }

  bool same_shape(const Tensor& other) const { return shape == other.shape; }
  bool all_finite() const;
};

std::string shape_str(const Tensor& t);

/// Throws DimensionError naming `op` unless both shapes match.
void require_same_shape(const char* op, const Tensor& a, const Tensor& b);

// ---- forward building blocks -------------------------------------------
//
// All of these allocate their result; gradients live on the tape, these are
// the shared forward routines (also used eagerly by decoding and tests).

/// a{m,n} * b{n,k} -> {m,k}, or a{m,n} * b{n} -> {m}.
Tensor matmul(const Tensor& a, const Tensor& b);

/// w{m,n}^T * x{m} -> {n}. Used for the output projection.
Tensor matvec_t(const Tensor& w, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
/// Elementwise m*x + c. Covers negation and (1 - x) without extra ops.
Tensor affine(const Tensor& a, double m, double c);

Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);

/// Numerically stable softmax over a rank-1 tensor.
Tensor softmax(const Tensor& x);

/// (x - mean) / sqrt(var + eps) * gain + bias with population variance.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = 1e-5);

double sum(const Tensor& a);
double dot(const Tensor& a, const Tensor& b);

/// Rounds every entry to the nearest binary32 value. Parameters and stored
/// features live in 32-bit files, so anything persisted goes through this
/// to keep in-memory state identical to what a save/load cycle produces.
void round_to_storage_precision(Tensor& t);

} // namespace vnsgru
