// SPDX-License-Identifier: Apache-2.0

#include "vnsgru/tape.hpp"

#include <cmath>

#include "vnsgru/kernels.hpp"

namespace vnsgru {

Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> backward) {
  nodes_.push_back({std::move(value), std::move(backward)});
  return Var{static_cast<std::int32_t>(nodes_.size() - 1)};
}

void Tape::check(Var v, const char* op) const {
  if (!v.valid() || static_cast<std::size_t>(v.id) >= nodes_.size())
    throw DimensionError(std::string(op) + ": var is not on this tape");
}

void Tape::accum(std::int32_t id, const Tensor& g) {
  Tensor& slot = grads_[id];
  if (slot.data.empty()) {
    slot = g;
    return;
  }
  kernels::vadd(slot.data.data(), g.data.data(), slot.data.data(), slot.size());
}

Var Tape::leaf(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::matmul(Var a, Var b) {
  check(a, "matmul");
  check(b, "matmul");
  Tensor y = vnsgru::matmul(value(a), value(b));
  return push(std::move(y), [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.value(a);
    const Tensor& bv = t.value(b);
    if (bv.rank() == 1) {
      // y{m} = A{m,n} x{n}:  dA += g (outer) x,  dx += A^T g
      Tensor da = Tensor::zeros(av.shape);
      kernels::outer_acc(da.data.data(), g.data.data(), bv.data.data(), av.rows(),
                         av.cols());
      t.accum(a.id, da);
      Tensor db = Tensor::zeros(bv.shape);
      kernels::matvec_t(av.data.data(), g.data.data(), db.data.data(), av.rows(),
                        av.cols());
      t.accum(b.id, db);
      return;
    }
    // C{m,k} = A{m,n} B{n,k}:  dA += G B^T,  dB += A^T G
    const std::size_t m = av.rows(), n = av.cols(), k = bv.cols();
    Tensor da = Tensor::zeros(av.shape);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < n; ++p) {
        double acc = 0.0;
        for (std::size_t j = 0; j < k; ++j) acc += g.data[i * k + j] * bv.data[p * k + j];
        da.data[i * n + p] = acc;
      }
    t.accum(a.id, da);
    Tensor db = Tensor::zeros(bv.shape);
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t j = 0; j < k; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < m; ++i) acc += av.data[i * n + p] * g.data[i * k + j];
        db.data[p * k + j] = acc;
      }
    t.accum(b.id, db);
  });
}

Var Tape::matvec_t(Var w, Var x) {
  check(w, "matvec_t");
  check(x, "matvec_t");
  Tensor y = vnsgru::matvec_t(value(w), value(x));
  return push(std::move(y), [w, x](Tape& t, const Tensor& g) {
    const Tensor& wv = t.value(w);
    const Tensor& xv = t.value(x);
    // y{n} = W{m,n}^T x{m}:  dW += x (outer) g,  dx += W g
    Tensor dw = Tensor::zeros(wv.shape);
    kernels::outer_acc(dw.data.data(), xv.data.data(), g.data.data(), wv.rows(),
                       wv.cols());
    t.accum(w.id, dw);
    Tensor dx = Tensor::zeros(xv.shape);
    kernels::matvec(wv.data.data(), g.data.data(), dx.data.data(), wv.rows(), wv.cols());
    t.accum(x.id, dx);
  });
}

Var Tape::add(Var a, Var b) {
  check(a, "add");
  check(b, "add");
  Tensor y = vnsgru::add(value(a), value(b));
  return push(std::move(y), [a, b](Tape& t, const Tensor& g) {
    t.accum(a.id, g);
    t.accum(b.id, g);
  });
}

Var Tape::sub(Var a, Var b) {
  check(a, "sub");
  check(b, "sub");
  Tensor y = vnsgru::sub(value(a), value(b));
  return push(std::move(y), [a, b](Tape& t, const Tensor& g) {
    t.accum(a.id, g);
    Tensor neg = vnsgru::scale(g, -1.0);
    t.accum(b.id, neg);
  });
}

Var Tape::mul(Var a, Var b) {
  check(a, "mul");
  check(b, "mul");
  Tensor y = vnsgru::mul(value(a), value(b));
  return push(std::move(y), [a, b](Tape& t, const Tensor& g) {
    Tensor da = vnsgru::mul(g, t.value(b));
    t.accum(a.id, da);
    Tensor db = vnsgru::mul(g, t.value(a));
    t.accum(b.id, db);
  });
}

Var Tape::sigmoid(Var a) {
  check(a, "sigmoid");
  Tensor y = vnsgru::sigmoid(value(a));
  Var out = push(std::move(y), nullptr);
  nodes_.back().backward = [a, out](Tape& t, const Tensor& g) {
    const Tensor& yv = t.value(out);
    Tensor da = yv;
    for (std::size_t i = 0; i < da.size(); ++i)
      da.data[i] = g.data[i] * yv.data[i] * (1.0 - yv.data[i]);
    t.accum(a.id, da);
  };
  return out;
}

Var Tape::tanh(Var a) {
  check(a, "tanh");
  Tensor y = vnsgru::tanh(value(a));
  Var out = push(std::move(y), nullptr);
  nodes_.back().backward = [a, out](Tape& t, const Tensor& g) {
    const Tensor& yv = t.value(out);
    Tensor da = yv;
    for (std::size_t i = 0; i < da.size(); ++i)
      da.data[i] = g.data[i] * (1.0 - yv.data[i] * yv.data[i]);
    t.accum(a.id, da);
  };
  return out;
}

Var Tape::softmax(Var a) {
  check(a, "softmax");
  Tensor y = vnsgru::softmax(value(a));
  Var out = push(std::move(y), nullptr);
  nodes_.back().backward = [a, out](Tape& t, const Tensor& g) {
    const Tensor& yv = t.value(out);
    double gy = 0.0;
    for (std::size_t i = 0; i < yv.size(); ++i) gy += g.data[i] * yv.data[i];
    Tensor da = yv;
    for (std::size_t i = 0; i < da.size(); ++i)
      da.data[i] = yv.data[i] * (g.data[i] - gy);
    t.accum(a.id, da);
  };
  return out;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
  check(x, "layer_norm");
  check(gain, "layer_norm");
  check(bias, "layer_norm");
  const Tensor& xv = value(x);
  if (xv.rank() != 1 || xv.size() < 2)
    throw DimensionError("layer_norm: expected vector of length >= 2, got " +
                         shape_str(xv));
  require_same_shape("layer_norm gain", xv, value(gain));
  require_same_shape("layer_norm bias", xv, value(bias));
  const std::size_t n = xv.size();
  double mean = 0.0;
  for (double v : xv.data) mean += v;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double v : xv.data) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);
  const double inv = 1.0 / std::sqrt(var + eps);
  Tensor normed = xv;
  for (std::size_t i = 0; i < n; ++i) normed.data[i] = (xv.data[i] - mean) * inv;
  Tensor y = xv;
  const Tensor& gv = value(gain);
  const Tensor& bv = value(bias);
  for (std::size_t i = 0; i < n; ++i)
    y.data[i] = normed.data[i] * gv.data[i] + bv.data[i];
  return push(std::move(y),
              [x, gain, bias, normed, inv, n](Tape& t, const Tensor& g) {
                const Tensor& gv = t.value(gain);
                t.accum(bias.id, g);
                Tensor dgain = g;
                for (std::size_t i = 0; i < n; ++i) dgain.data[i] = g.data[i] * normed.data[i];
                t.accum(gain.id, dgain);
                // dx = inv * (dn - mean(dn) - normed * mean(dn .* normed))
                Tensor dn = g;
                for (std::size_t i = 0; i < n; ++i) dn.data[i] = g.data[i] * gv.data[i];
                double mean_dn = 0.0, mean_dn_normed = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                  mean_dn += dn.data[i];
                  mean_dn_normed += dn.data[i] * normed.data[i];
                }
                mean_dn /= static_cast<double>(n);
                mean_dn_normed /= static_cast<double>(n);
                Tensor dx = dn;
                for (std::size_t i = 0; i < n; ++i)
                  dx.data[i] = inv * (dn.data[i] - mean_dn - normed.data[i] * mean_dn_normed);
                t.accum(x.id, dx);
              });
}

Var Tape::log(Var a) {
  check(a, "log");
  const Tensor& xv = value(a);
  Tensor y = xv;
  for (std::size_t i = 0; i < y.size(); ++i) y.data[i] = std::log(xv.data[i]);
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    const Tensor& xv = t.value(a);
    Tensor da = g;
    for (std::size_t i = 0; i < da.size(); ++i) da.data[i] = g.data[i] / xv.data[i];
    t.accum(a.id, da);
  });
}

Var Tape::pick(Var x, std::size_t index) {
  check(x, "pick");
  const Tensor& xv = value(x);
  if (index >= xv.size())
    throw DimensionError("pick: index " + std::to_string(index) + " out of " +
                         shape_str(xv));
  Tensor y = Tensor::scalar(xv.data[index]);
  return push(std::move(y), [x, index](Tape& t, const Tensor& g) {
    Tensor dx = Tensor::zeros(t.value(x).shape);
    dx.data[index] = g.data[0];
    t.accum(x.id, dx);
  });
}

Var Tape::row(Var m, std::size_t r) {
  check(m, "row");
  const Tensor& mv = value(m);
  if (mv.rank() != 2 || r >= mv.rows())
    throw DimensionError("row: index " + std::to_string(r) + " out of " + shape_str(mv));
  const std::size_t c = mv.cols();
  Tensor y = Tensor::zeros({c});
  for (std::size_t j = 0; j < c; ++j) y.data[j] = mv.data[r * c + j];
  return push(std::move(y), [m, r, c](Tape& t, const Tensor& g) {
    Tensor dm = Tensor::zeros(t.value(m).shape);
    for (std::size_t j = 0; j < c; ++j) dm.data[r * c + j] = g.data[j];
    t.accum(m.id, dm);
  });
}

Var Tape::sum(Var a) {
  check(a, "sum");
  Tensor y = Tensor::scalar(vnsgru::sum(value(a)));
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    Tensor da = Tensor::full(t.value(a).shape, g.data[0]);
    t.accum(a.id, da);
  });
}

Var Tape::mean(Var a) {
  check(a, "mean");
  const std::size_t n = value(a).size();
  if (n == 0) throw DimensionError("mean: empty tensor");
  Tensor y = Tensor::scalar(vnsgru::sum(value(a)) / static_cast<double>(n));
  return push(std::move(y), [a, n](Tape& t, const Tensor& g) {
    Tensor da = Tensor::full(t.value(a).shape, g.data[0] / static_cast<double>(n));
    t.accum(a.id, da);
  });
}

Var Tape::scale(Var a, double c) { return affine(a, c, 0.0); }

Var Tape::affine(Var a, double m, double c) {
  check(a, "affine");
  Tensor y = vnsgru::affine(value(a), m, c);
  return push(std::move(y), [a, m](Tape& t, const Tensor& g) {
    Tensor da = vnsgru::scale(g, m);
    t.accum(a.id, da);
  });
}

std::vector<Tensor> Tape::gradients(Var loss, const std::vector<Var>& wrt) {
  check(loss, "gradients");
  if (value(loss).size() != 1)
    throw DimensionError("gradients: loss must be scalar, got " + shape_str(value(loss)));
  grads_.assign(nodes_.size(), Tensor{});
  grads_[loss.id] = Tensor::scalar(1.0);
  for (std::int32_t i = loss.id; i >= 0; --i) {
    if (grads_[i].data.empty()) continue;
    if (nodes_[i].backward) nodes_[i].backward(*this, grads_[i]);
  }
  std::vector<Tensor> out;
  out.reserve(wrt.size());
  for (Var v : wrt) {
    check(v, "gradients");
    if (grads_[v.id].data.empty()) out.push_back(Tensor::zeros(value(v).shape));
    else out.push_back(std::move(grads_[v.id]));
  }
  grads_.clear();
  return out;
}

} // namespace vnsgru
