#pragma once

// Define-by-run reverse-mode differentiation over DenseTensor values.
//
// A Tape records every operation as a node appended in evaluation order, so
// node order is already a topological order; backward() walks it once in
// reverse. Tapes are rebuilt for each training step and are not thread-safe.

#include <cstddef>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "diul/tensor.hpp"

namespace diul {

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const DenseTensor& value() const;
  const DenseTensor& grad() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t id() const noexcept { return id_; }
  Tape* tape() const noexcept { return tape_; }

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using GradientMap = std::map<std::string, DenseTensor>;

class Tape {
 public:
  /// Backward rule: reads the node's gradient and accumulates into its parents.
  using Rule = std::function<void(Tape&, std::size_t self)>;

  struct Node {
    DenseTensor value;
    std::vector<std::size_t> parents;
    const char* rule_name = "leaf";
    Rule rule;
    DenseTensor grad;
    bool requires_grad = false;
    std::string param;  // non-empty for named parameter leaves
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that never receives a gradient.
  Var constant(DenseTensor value);
  /// Named trainable leaf. The same name may be registered more than once;
  /// backward() sums the contributions.
  Var parameter(std::string name, DenseTensor value);

  /// Appends an interior node. Used by the op implementations.
  Var push(DenseTensor value, std::vector<std::size_t> parents, const char* rule_name, Rule rule);

  /// Reverse sweep from a scalar loss. Returns d(loss)/d(param) for every
  /// named parameter reachable from the loss (zero tensors otherwise).
  GradientMap backward(Var loss);

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  Node& node(std::size_t id) { return nodes_.at(id); }
  std::size_t size() const noexcept { return nodes_.size(); }

  /// grad(parent) += g, allocating the accumulator on first use.
  void accumulate(std::size_t parent, const DenseTensor& g);
  void accumulate(std::size_t parent, std::span<const double> g);

 private:
  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

inline constexpr double kNormEpsilon = 1e-12;

// ---- differentiable primitives -------------------------------------------

Var matmul(Var a, Var b);     // [m,k] x [k,n]
Var matmul_nt(Var a, Var b);  // [m,k] x [n,k]^T
Var transpose(Var a);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
Var add_scalar(Var a, double s);
Var neg(Var a);
/// [m,n] + [n] (or [1,n]) broadcast over rows.
Var add_row_bias(Var a, Var bias);

Var relu(Var a);
Var log(Var a);
Var exp(Var a);

/// Softmax over the last axis of a vector or matrix.
Var softmax(Var a);
/// log sum exp of a vector, returned as a scalar.
Var log_sum_exp(Var v);
/// Row-wise log sum exp: [m,n] -> [m].
Var log_sum_exp_rows(Var a);

/// Unit-norm vector; throws DegenerateVectorError when ||v|| <= eps.
Var l2_normalize(Var v, double eps = kNormEpsilon);
/// Each row scaled to unit norm.
Var l2_normalize_rows(Var a, double eps = kNormEpsilon);

Var sum(Var a);
Var mean(Var a);
/// [m,n] -> [m]
Var row_mean(Var a);
/// [m,n],[m,n] -> [m], dot product of matching rows.
Var rowwise_dot(Var a, Var b);
/// Horizontal concatenation of [m] or [m,k] pieces into [m, sum k].
Var concat_cols(std::span<const Var> parts);

/// Mean softmax cross-entropy of [m,C] logits against integer targets.
Var cross_entropy(Var logits, std::span<const int> targets);

// ---- plain evaluations ------------------------------------------------------

DenseTensor matmul(const DenseTensor& a, const DenseTensor& b);
double log_sum_exp(const DenseTensor& v);
DenseTensor l2_normalize(const DenseTensor& v, double eps = kNormEpsilon);
DenseTensor l2_normalize_rows(const DenseTensor& a, double eps = kNormEpsilon);
DenseTensor softmax_rows(const DenseTensor& a);

}  // namespace diul
