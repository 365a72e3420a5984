#pragma once

// Tape-based reverse-mode differentiation over dense vectors and matrices.
//
// A Graph records every operation in construction order, so the tape is a
// topological order by construction and cycles cannot be expressed. Parameter
// leaves alias the Tensor they were created from: reading them reads the
// tensor's data and backward() accumulates straight into the tensor's grad.
// The Tensor must outlive the Graph.

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "strata/tensor.hpp"

namespace strata {

struct Var {
  static constexpr std::uint32_t kNone = 0xffffffffu;
  std::uint32_t id = kNone;
  bool valid() const { return id != kNone; }
};

class Graph {
 public:
  Graph() = default;
  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;
  Graph(Graph&&) = default;
  Graph& operator=(Graph&&) = default;

  // Leaves.
  Var parameter(Tensor& param);
  Var constant(std::vector<std::size_t> shape, std::vector<double> values);
  Var constant(const Tensor& t) { return constant(t.shape(), {t.data().begin(), t.data().end()}); }
  Var scalar(double v) { return constant({1}, {v}); }
  Var zeros(std::vector<std::size_t> shape);

  // Linear algebra.
  Var matvec(Var w, Var x);       // [r,c] x [c] -> [r]
  Var matvec_t(Var m, Var w);     // [k,c]^T x [k] -> [c]
  Var matmul_nt(Var a, Var b);    // [k,n] x [r,n]^T -> [k,r]
  Var outer(Var u, Var v);        // [k] x [c] -> [k,c]
  Var add_row(Var m, Var v);      // [k,c] + broadcast [c]

  // Elementwise.
  Var add(Var a, Var b);
  Var mul(Var a, Var b);
  Var minimum(Var a, Var b);
  Var scale(Var v, Var s);                       // v * s, s scalar
  Var affine(Var v, double mul, double shift);   // mul * v + shift
  Var tanh(Var v);
  Var sigmoid(Var v);
  Var relu(Var v);
  Var log(Var v);  // log(max(v, 1e-12))

  // Normalization.
  Var softmax_masked(Var logits, const std::vector<bool>& mask);

  // Structure.
  Var concat(std::span<const Var> parts);
  Var concat(std::initializer_list<Var> parts) { return concat(std::span<const Var>(parts.begin(), parts.size())); }
  Var slice(Var v, std::size_t offset, std::size_t len);
  Var stack_rows(std::span<const Var> rows);
  Var lookup(Var table, std::size_t row);                              // row of [r,c] -> [c]
  Var gather(Var v, std::span<const std::size_t> index);               // out[k] = v[index[k]]
  Var scatter_add(Var v, std::span<const std::size_t> index, std::size_t size);  // out[index[k]] += v[k]
  Var pick(Var v, std::size_t i);                                      // -> [1]

  // Reductions.
  Var sum(Var v);
  Var add_n(std::span<const Var> scalars);

  // Access.
  std::span<const double> value(Var v) const;
  const std::vector<std::size_t>& shape(Var v) const { return nodes_.at(v.id).shape; }
  std::size_t size(Var v) const { return value(v).size(); }
  double item(Var v) const;
  std::vector<double> copy(Var v) const { auto s = value(v); return {s.begin(), s.end()}; }
  /// Gradient of the last backward() target w.r.t. v (zeros if v was not reached).
  std::vector<double> grad(Var v) const;
  std::size_t node_count() const { return nodes_.size(); }

  /// Accumulates d(loss)/d(param) into every reachable parameter's grad.
  /// loss must be a finite scalar.
  void backward(Var loss);

 private:
  struct Node {
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    Tensor* param = nullptr;
    bool needs_grad = false;
    std::function<void(Graph&, std::uint32_t)> back;
  };

  Var push(std::vector<std::size_t> shape, std::vector<double> value, bool needs_grad,
           std::function<void(Graph&, std::uint32_t)> back);
  bool needs(Var v) const { return nodes_[v.id].needs_grad; }
  std::span<double> grad_buf(std::uint32_t id);
  std::span<const double> out_grad(std::uint32_t id) const { return nodes_[id].grad; }
  void check(Var v) const;

  std::vector<Node> nodes_;
};

/// Registry of named trainable tensors in a fixed order (the checkpoint order).
class ParameterStore {
 public:
  Tensor& add(const std::string& name, std::vector<std::size_t> shape);
  Tensor& get(const std::string& name);
  const Tensor& get(const std::string& name) const;
  bool contains(const std::string& name) const { return index_.count(name) != 0; }

  std::size_t size() const { return names_.size(); }
  const std::string& name(std::size_t i) const { return names_[i]; }
  Tensor& at(std::size_t i) { return tensors_[i]; }
  const Tensor& at(std::size_t i) const { return tensors_[i]; }

  void zero_grad();
  std::size_t parameter_count() const;

 private:
  std::vector<std::string> names_;
  std::deque<Tensor> tensors_;  // deque: Graph nodes hold pointers into it
  std::map<std::string, std::size_t> index_;

 public:
  ParameterStore() = default;
  ParameterStore(const ParameterStore&) = delete;
  ParameterStore& operator=(const ParameterStore&) = delete;
  ParameterStore(ParameterStore&&) = default;
  ParameterStore& operator=(ParameterStore&&) = default;
};

/// Zeroes all parameter grads, backpropagates `loss`, and returns a copy of
/// each parameter's gradient keyed by name.
std::map<std::string, std::vector<double>> gradients(Graph& graph, Var loss, ParameterStore& params);

}  // namespace strata
