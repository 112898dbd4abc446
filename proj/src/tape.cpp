#include "diul/tape.hpp"

#include <algorithm>
#include <cmath>

#include "diul/error.hpp"
#include "diul/kernels.hpp"

namespace diul {

namespace kp = kernels::parallel;

const DenseTensor& Var::value() const { return tape_->node(id_).value; }
const DenseTensor& Var::grad() const { return tape_->node(id_).grad; }

Var Tape::constant(DenseTensor value) {
  Node n;
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::parameter(std::string name, DenseTensor value) {
  if (name.empty()) throw ContractError("parameter name must not be empty");
  Node n;
  n.value = std::move(value);
  n.requires_grad = true;
  n.param = std::move(name);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

Var Tape::push(DenseTensor value, std::vector<std::size_t> parents, const char* rule_name,
               Rule rule) {
  Node n;
  n.value = std::move(value);
  n.rule_name = rule_name;
  for (std::size_t p : parents) {
    if (p >= nodes_.size()) throw ContractError("tape parent does not precede its child");
    n.requires_grad = n.requires_grad || nodes_[p].requires_grad;
  }
  n.parents = std::move(parents);
  if (n.requires_grad) n.rule = std::move(rule);
  nodes_.push_back(std::move(n));
  return Var(this, nodes_.size() - 1);
}

void Tape::accumulate(std::size_t parent, std::span<const double> g) {
  Node& p = nodes_[parent];
  if (!p.requires_grad) return;
  if (p.grad.numel() != p.value.numel() || p.grad.shape() != p.value.shape())
    p.grad = DenseTensor(p.value.shape(), 0.0);
  if (g.size() != p.grad.numel()) throw DimensionError("gradient size mismatch on accumulate");
  auto dst = p.grad.data();
  for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
}

void Tape::accumulate(std::size_t parent, const DenseTensor& g) { accumulate(parent, g.data()); }

GradientMap Tape::backward(Var loss) {
  if (loss.tape() != this) throw ContractError("loss belongs to a different tape");
  if (loss.value().numel() != 1)
    throw ContractError("backward requires a scalar loss, got shape " +
                        shape_str(loss.value().shape()));
  if (backward_done_) throw ContractError("backward already ran on this tape");
  backward_done_ = true;

  for (auto& n : nodes_)
    if (n.requires_grad) n.grad = DenseTensor(n.value.shape(), 0.0);
  nodes_[loss.id()].grad = DenseTensor(loss.value().shape(), 1.0);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.rule) continue;
    n.rule(*this, i);
  }

  GradientMap out;
  for (const auto& n : nodes_) {
    if (n.param.empty()) continue;
    auto it = out.find(n.param);
    if (it == out.end()) {
      out.emplace(n.param, n.grad);
    } else {
      if (it->second.shape() != n.grad.shape())
        throw DimensionError("parameter '" + n.param + "' registered with two shapes");
      for (std::size_t k = 0; k < n.grad.numel(); ++k) it->second[k] += n.grad[k];
    }
  }
  return out;
}

namespace {

void require_same_tape(Var a, Var b) {
  if (a.tape() != b.tape() || a.tape() == nullptr)
    throw ContractError("operands live on different tapes");
}

void require_matrix(const DenseTensor& t, const char* op) {
  if (t.rank() != 2)
    throw DimensionError(std::string(op) + ": expected a matrix, got " + shape_str(t.shape()));
}

void require_same_shape(const DenseTensor& a, const DenseTensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw DimensionError(std::string(op) + ": shape " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
}

// Views any rank<=2 tensor as [rows, cols] with the last axis as columns.
std::pair<std::size_t, std::size_t> as_rows(const DenseTensor& t) {
  if (t.rank() == 0) return {1, 1};
  if (t.rank() == 1) return {1, t.shape()[0]};
  if (t.rank() == 2) return {t.shape()[0], t.shape()[1]};
  throw DimensionError("expected rank <= 2, got " + shape_str(t.shape()));
}

template <class F>
DenseTensor map_values(const DenseTensor& a, F f) {
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < a.numel(); ++i) out[i] = f(a[i]);
  return out;
}

}  // namespace

// ---- plain evaluations ----------------------------------------------------------

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k)
    throw DimensionError("matmul: inner dimensions differ, " + shape_str(a.shape()) + " x " +
                         shape_str(b.shape()));
  DenseTensor c(Shape{m, n});
  kp::matmul_nn(a.data(), b.data(), c.data(), m, k, n);
  return c;
}

double log_sum_exp(const DenseTensor& v) {
  if (v.numel() == 0) throw DimensionError("log_sum_exp of an empty vector");
  double out = 0.0;
  kp::row_log_sum_exp(v.data(), std::span<double>(&out, 1), 1, v.numel());
  return out;
}

DenseTensor l2_normalize(const DenseTensor& v, double eps) {
  double norm = 0.0;
  kp::row_norms(v.data(), std::span<double>(&norm, 1), 1, v.numel());
  if (!(norm > eps)) throw DegenerateVectorError("l2_normalize: norm " + std::to_string(norm) +
                                                 " is not above " + std::to_string(eps));
  return map_values(v, [norm](double x) { return x / norm; });
}

DenseTensor l2_normalize_rows(const DenseTensor& a, double eps) {
  require_matrix(a, "l2_normalize_rows");
  const std::size_t m = a.rows(), n = a.cols();
  std::vector<double> norms(m);
  kp::row_norms(a.data(), norms, m, n);
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < m; ++i) {
    if (!(norms[i] > eps))
      throw DegenerateVectorError("l2_normalize_rows: row " + std::to_string(i) + " has norm " +
                                  std::to_string(norms[i]));
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = a[i * n + j] / norms[i];
  }
  return out;
}

DenseTensor softmax_rows(const DenseTensor& a) {
  auto [m, n] = as_rows(a);
  DenseTensor out(a.shape());
  kp::row_softmax(a.data(), out.data(), m, n);
  return out;
}

// ---- differentiable primitives --------------------------------------------------

Var matmul(Var a, Var b) {
  require_same_tape(a, b);
  DenseTensor c = matmul(a.value(), b.value());
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(c), {ia, ib}, "matmul", [ia, ib](Tape& t, std::size_t self) {
    const DenseTensor& A = t.node(ia).value;
    const DenseTensor& B = t.node(ib).value;
    const DenseTensor& G = t.node(self).grad;
    const std::size_t m = A.rows(), k = A.cols(), n = B.cols();
    if (t.node(ia).requires_grad) {
      DenseTensor dA(Shape{m, k});
      kp::matmul_nt(G.data(), B.data(), dA.data(), m, n, k);
      t.accumulate(ia, dA);
    }
    if (t.node(ib).requires_grad) {
      DenseTensor dB(Shape{k, n});
      kp::matmul_tn(A.data(), G.data(), dB.data(), k, m, n);
      t.accumulate(ib, dB);
    }
  });
}

Var matmul_nt(Var a, Var b) {
  require_same_tape(a, b);
  const DenseTensor& A = a.value();
  const DenseTensor& B = b.value();
  require_matrix(A, "matmul_nt");
  require_matrix(B, "matmul_nt");
  const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
  if (B.cols() != k)
    throw DimensionError("matmul_nt: inner dimensions differ, " + shape_str(A.shape()) + " x " +
                         shape_str(B.shape()) + "^T");
  DenseTensor c(Shape{m, n});
  kp::matmul_nt(A.data(), B.data(), c.data(), m, k, n);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(c), {ia, ib}, "matmul_nt", [ia, ib](Tape& t, std::size_t self) {
    const DenseTensor& A = t.node(ia).value;
    const DenseTensor& B = t.node(ib).value;
    const DenseTensor& G = t.node(self).grad;
    const std::size_t m = A.rows(), k = A.cols(), n = B.rows();
    if (t.node(ia).requires_grad) {
      DenseTensor dA(Shape{m, k});
      kp::matmul_nn(G.data(), B.data(), dA.data(), m, n, k);
      t.accumulate(ia, dA);
    }
    if (t.node(ib).requires_grad) {
      DenseTensor dB(Shape{n, k});
      kp::matmul_tn(G.data(), A.data(), dB.data(), n, m, k);
      t.accumulate(ib, dB);
    }
  });
}

Var transpose(Var a) {
  const DenseTensor& A = a.value();
  require_matrix(A, "transpose");
  const std::size_t m = A.rows(), n = A.cols();
  DenseTensor out(Shape{n, m});
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = A[i * n + j];
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {ia}, "transpose", [ia, m, n](Tape& t, std::size_t self) {
    const DenseTensor& G = t.node(self).grad;
    DenseTensor d(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = G[j * m + i];
    t.accumulate(ia, d);
  });
}

Var add(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] + b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {ia, ib}, "add", [ia, ib](Tape& t, std::size_t self) {
    const DenseTensor g = t.node(self).grad;
    t.accumulate(ia, g);
    t.accumulate(ib, g);
  });
}

Var sub(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] - b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {ia, ib}, "sub", [ia, ib](Tape& t, std::size_t self) {
    const DenseTensor g = t.node(self).grad;
    t.accumulate(ia, g);
    t.accumulate(ib, map_values(g, [](double x) { return -x; }));
  });
}

Var mul(Var a, Var b) {
  require_same_tape(a, b);
  require_same_shape(a.value(), b.value(), "mul");
  DenseTensor out(a.shape());
  for (std::size_t i = 0; i < out.numel(); ++i) out[i] = a.value()[i] * b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {ia, ib}, "mul", [ia, ib](Tape& t, std::size_t self) {
    const DenseTensor& g = t.node(self).grad;
    const DenseTensor& A = t.node(ia).value;
    const DenseTensor& B = t.node(ib).value;
    DenseTensor da(g.shape()), db(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) {
      da[i] = g[i] * B[i];
      db[i] = g[i] * A[i];
    }
    t.accumulate(ia, da);
    t.accumulate(ib, db);
  });
}

Var scale(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape()->push(map_values(a.value(), [s](double x) { return s * x; }), {ia}, "scale",
                        [ia, s](Tape& t, std::size_t self) {
                          t.accumulate(ia, map_values(t.node(self).grad,
                                                      [s](double g) { return s * g; }));
                        });
}

Var add_scalar(Var a, double s) {
  const std::size_t ia = a.id();
  return a.tape()->push(map_values(a.value(), [s](double x) { return x + s; }), {ia},
                        "add_scalar",
                        [ia](Tape& t, std::size_t self) { t.accumulate(ia, t.node(self).grad); });
}

Var neg(Var a) { return scale(a, -1.0); }

Var add_row_bias(Var a, Var bias) {
  require_same_tape(a, bias);
  const DenseTensor& A = a.value();
  require_matrix(A, "add_row_bias");
  const std::size_t m = A.rows(), n = A.cols();
  if (bias.value().numel() != n || bias.value().rank() > 2 ||
      (bias.value().rank() == 2 && bias.value().shape()[0] != 1))
    throw DimensionError("add_row_bias: bias " + shape_str(bias.shape()) + " for rows of width " +
                         std::to_string(n));
  DenseTensor out(A.shape());
  const DenseTensor& b = bias.value();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = A[i * n + j] + b[j];
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape()->push(std::move(out), {ia, ib}, "add_row_bias",
                        [ia, ib, m, n](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          t.accumulate(ia, g);
                          if (!t.node(ib).requires_grad) return;
                          std::vector<double> db(n, 0.0);
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) db[j] += g[i * n + j];
                          t.accumulate(ib, db);
                        });
}

Var relu(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(map_values(a.value(), [](double x) { return x > 0.0 ? x : 0.0; }), {ia},
                        "relu", [ia](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& x = t.node(ia).value;
                          DenseTensor d(g.shape());
                          for (std::size_t i = 0; i < g.numel(); ++i)
                            d[i] = x[i] > 0.0 ? g[i] : 0.0;
                          t.accumulate(ia, d);
                        });
}

Var log(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(map_values(a.value(), [](double x) { return std::log(x); }), {ia}, "log",
                        [ia](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& x = t.node(ia).value;
                          DenseTensor d(g.shape());
                          for (std::size_t i = 0; i < g.numel(); ++i) d[i] = g[i] / x[i];
                          t.accumulate(ia, d);
                        });
}

Var exp(Var a) {
  const std::size_t ia = a.id();
  return a.tape()->push(map_values(a.value(), [](double x) { return std::exp(x); }), {ia}, "exp",
                        [ia](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& y = t.node(self).value;
                          DenseTensor d(g.shape());
                          for (std::size_t i = 0; i < g.numel(); ++i) d[i] = g[i] * y[i];
                          t.accumulate(ia, d);
                        });
}

Var softmax(Var a) {
  auto [m, n] = as_rows(a.value());
  const std::size_t ia = a.id();
  return a.tape()->push(softmax_rows(a.value()), {ia}, "softmax",
                        [ia, m = m, n = n](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& y = t.node(self).value;
                          DenseTensor d(g.shape());
                          for (std::size_t i = 0; i < m; ++i) {
                            double dot = 0.0;
                            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
                            for (std::size_t j = 0; j < n; ++j)
                              d[i * n + j] = y[i * n + j] * (g[i * n + j] - dot);
                          }
                          t.accumulate(ia, d);
                        });
}

Var log_sum_exp(Var v) {
  if (v.value().rank() > 1 && !(v.value().rank() == 2 && v.value().shape()[0] == 1))
    throw DimensionError("log_sum_exp expects a vector, got " + shape_str(v.shape()));
  const double y = log_sum_exp(v.value());
  const std::size_t iv = v.id();
  return v.tape()->push(DenseTensor::scalar(y), {iv}, "log_sum_exp",
                        [iv](Tape& t, std::size_t self) {
                          const double g = t.node(self).grad.item();
                          const double y = t.node(self).value.item();
                          const DenseTensor& x = t.node(iv).value;
                          DenseTensor d(x.shape());
                          for (std::size_t i = 0; i < x.numel(); ++i)
                            d[i] = g * std::exp(x[i] - y);
                          t.accumulate(iv, d);
                        });
}

Var log_sum_exp_rows(Var a) {
  const DenseTensor& A = a.value();
  require_matrix(A, "log_sum_exp_rows");
  const std::size_t m = A.rows(), n = A.cols();
  if (n == 0) throw DimensionError("log_sum_exp_rows on rows of width 0");
  DenseTensor out(Shape{m});
  kp::row_log_sum_exp(A.data(), out.data(), m, n);
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {ia}, "log_sum_exp_rows",
                        [ia, m, n](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& y = t.node(self).value;
                          const DenseTensor& x = t.node(ia).value;
                          DenseTensor d(x.shape());
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j)
                              d[i * n + j] = g[i] * std::exp(x[i * n + j] - y[i]);
                          t.accumulate(ia, d);
                        });
}

Var l2_normalize(Var v, double eps) {
  DenseTensor y = l2_normalize(v.value(), eps);
  double norm = 0.0;
  kp::row_norms(v.value().data(), std::span<double>(&norm, 1), 1, v.value().numel());
  const std::size_t iv = v.id();
  return v.tape()->push(std::move(y), {iv}, "l2_normalize", [iv, norm](Tape& t, std::size_t self) {
    const DenseTensor& g = t.node(self).grad;
    const DenseTensor& y = t.node(self).value;
    double dot = 0.0;
    for (std::size_t i = 0; i < g.numel(); ++i) dot += g[i] * y[i];
    DenseTensor d(g.shape());
    for (std::size_t i = 0; i < g.numel(); ++i) d[i] = (g[i] - y[i] * dot) / norm;
    t.accumulate(iv, d);
  });
}

Var l2_normalize_rows(Var a, double eps) {
  DenseTensor y = l2_normalize_rows(a.value(), eps);
  const std::size_t m = a.value().rows(), n = a.value().cols();
  std::vector<double> norms(m);
  kp::row_norms(a.value().data(), norms, m, n);
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(y), {ia}, "l2_normalize_rows",
                        [ia, m, n, norms = std::move(norms)](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& y = t.node(self).value;
                          DenseTensor d(g.shape());
                          for (std::size_t i = 0; i < m; ++i) {
                            double dot = 0.0;
                            for (std::size_t j = 0; j < n; ++j) dot += g[i * n + j] * y[i * n + j];
                            for (std::size_t j = 0; j < n; ++j)
                              d[i * n + j] = (g[i * n + j] - y[i * n + j] * dot) / norms[i];
                          }
                          t.accumulate(ia, d);
                        });
}

Var sum(Var a) {
  double s = 0.0;
  for (double x : a.value().data()) s += x;
  const std::size_t ia = a.id();
  return a.tape()->push(DenseTensor::scalar(s), {ia}, "sum", [ia](Tape& t, std::size_t self) {
    const double g = t.node(self).grad.item();
    t.accumulate(ia, DenseTensor(t.node(ia).value.shape(), g));
  });
}

Var mean(Var a) {
  const std::size_t count = a.value().numel();
  if (count == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(a), 1.0 / static_cast<double>(count));
}

Var row_mean(Var a) {
  const DenseTensor& A = a.value();
  require_matrix(A, "row_mean");
  const std::size_t m = A.rows(), n = A.cols();
  if (n == 0) throw DimensionError("row_mean on rows of width 0");
  DenseTensor out(Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += A[i * n + j];
    out[i] = s / static_cast<double>(n);
  }
  const std::size_t ia = a.id();
  return a.tape()->push(std::move(out), {ia}, "row_mean", [ia, m, n](Tape& t, std::size_t self) {
    const DenseTensor& g = t.node(self).grad;
    DenseTensor d(Shape{m, n});
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j) d[i * n + j] = g[i] / static_cast<double>(n);
    t.accumulate(ia, d);
  });
}

Var rowwise_dot(Var a, Var b) {
  require_same_tape(a, b);
  require_matrix(a.value(), "rowwise_dot");
  require_same_shape(a.value(), b.value(), "rowwise_dot");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  DenseTensor out(Shape{m});
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a.value()[i * n + j] * b.value()[i * n + j];
    out[i] = s;
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->push(std::move(out), {ia, ib}, "rowwise_dot",
                        [ia, ib, m, n](Tape& t, std::size_t self) {
                          const DenseTensor& g = t.node(self).grad;
                          const DenseTensor& A = t.node(ia).value;
                          const DenseTensor& B = t.node(ib).value;
                          DenseTensor da(A.shape()), db(B.shape());
                          for (std::size_t i = 0; i < m; ++i)
                            for (std::size_t j = 0; j < n; ++j) {
                              da[i * n + j] = g[i] * B[i * n + j];
                              db[i * n + j] = g[i] * A[i * n + j];
                            }
                          t.accumulate(ia, da);
                          t.accumulate(ib, db);
                        });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols of nothing");
  Tape* tape = parts.front().tape();
  std::size_t m = 0;
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const DenseTensor& v = parts[p].value();
    if (parts[p].tape() != tape) throw ContractError("operands live on different tapes");
    std::size_t rows = 0, w = 0;
    if (v.rank() == 1) {
      rows = v.shape()[0];
      w = 1;
    } else if (v.rank() == 2) {
      rows = v.shape()[0];
      w = v.shape()[1];
    } else {
      throw DimensionError("concat_cols: piece of shape " + shape_str(v.shape()));
    }
    if (p == 0) m = rows;
    if (rows != m) throw DimensionError("concat_cols: row counts differ");
    widths.push_back(w);
    ids.push_back(parts[p].id());
  }
  std::size_t total = 0;
  for (std::size_t w : widths) total += w;
  DenseTensor out(Shape{m, total});
  std::size_t off = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const DenseTensor& v = parts[p].value();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < widths[p]; ++j) out[i * total + off + j] = v[i * widths[p] + j];
    off += widths[p];
  }
  return tape->push(std::move(out), ids, "concat_cols",
                    [ids, widths, m, total](Tape& t, std::size_t self) {
                      const DenseTensor& g = t.node(self).grad;
                      std::size_t off = 0;
                      for (std::size_t p = 0; p < ids.size(); ++p) {
                        std::vector<double> d(m * widths[p]);
                        for (std::size_t i = 0; i < m; ++i)
                          for (std::size_t j = 0; j < widths[p]; ++j)
                            d[i * widths[p] + j] = g[i * total + off + j];
                        t.accumulate(ids[p], d);
                        off += widths[p];
                      }
                    });
}

Var cross_entropy(Var logits, std::span<const int> targets) {
  const DenseTensor& L = logits.value();
  require_matrix(L, "cross_entropy");
  const std::size_t m = L.rows(), c = L.cols();
  if (targets.size() != m)
    throw DimensionError("cross_entropy: " + std::to_string(targets.size()) + " targets for " +
                         std::to_string(m) + " rows");
  if (m == 0 || c == 0) throw DimensionError("cross_entropy on an empty batch");
  std::vector<double> lse(m);
  kp::row_log_sum_exp(L.data(), lse, m, c);
  double total = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const int y = targets[i];
    if (y < 0 || static_cast<std::size_t>(y) >= c)
      throw ContractError("cross_entropy: target " + std::to_string(y) + " outside [0," +
                          std::to_string(c) + ")");
    total += lse[i] - L[i * c + static_cast<std::size_t>(y)];
  }
  std::vector<int> tgt(targets.begin(), targets.end());
  const std::size_t il = logits.id();
  return logits.tape()->push(
      DenseTensor::scalar(total / static_cast<double>(m)), {il}, "cross_entropy",
      [il, m, c, tgt = std::move(tgt), lse = std::move(lse)](Tape& t, std::size_t self) {
        const double g = t.node(self).grad.item() / static_cast<double>(m);
        const DenseTensor& L = t.node(il).value;
        DenseTensor d(L.shape());
        for (std::size_t i = 0; i < m; ++i) {
          for (std::size_t j = 0; j < c; ++j) d[i * c + j] = g * std::exp(L[i * c + j] - lse[i]);
          d[i * c + static_cast<std::size_t>(tgt[i])] -= g;
        }
        t.accumulate(il, d);
      });
}

}  // namespace diul
