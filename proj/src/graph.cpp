#include "strata/graph.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "strata/kernels.hpp"

namespace strata {

namespace {

constexpr double kLogFloor = 1e-12;

[[noreturn]] void shape_error(const char* op, const std::vector<std::size_t>& a,
                              const std::vector<std::size_t>& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_string(a) +
                              " and " + shape_string(b));
}

bool is_matrix(const std::vector<std::size_t>& s) { return s.size() == 2; }

void axpy(std::span<const double> x, std::span<double> y) {
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += x[i];
}

}  // namespace

Var Graph::push(std::vector<std::size_t> shape, std::vector<double> value, bool needs_grad,
                std::function<void(Graph&, std::uint32_t)> back) {
  Node n;
  n.shape = std::move(shape);
  n.value = std::move(value);
  n.needs_grad = needs_grad;
  if (needs_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Graph::check(Var v) const {
  if (!v.valid() || v.id >= nodes_.size()) throw std::invalid_argument("graph: invalid variable");
}

std::span<const double> Graph::value(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  if (n.param) return n.param->data();
  return n.value;
}

double Graph::item(Var v) const {
  auto s = value(v);
  if (s.size() != 1) throw std::invalid_argument("graph: item() on non-scalar " + shape_string(shape(v)));
  return s[0];
}

std::vector<double> Graph::grad(Var v) const {
  check(v);
  const Node& n = nodes_[v.id];
  if (n.param) {
    auto g = n.param->grad();
    return {g.begin(), g.end()};
  }
  if (n.grad.empty()) return std::vector<double>(n.value.size(), 0.0);
  return n.grad;
}

std::span<double> Graph::grad_buf(std::uint32_t id) {
  Node& n = nodes_[id];
  if (n.param) return n.param->grad();
  if (n.grad.empty()) n.grad.assign(n.value.size(), 0.0);
  return n.grad;
}

Var Graph::parameter(Tensor& param) {
  Node n;
  n.shape = param.shape();
  n.param = &param;
  n.needs_grad = param.requires_grad();
  nodes_.push_back(std::move(n));
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Graph::constant(std::vector<std::size_t> shape, std::vector<double> values) {
  if (values.size() != shape_size(shape) || shape.empty())
    throw std::invalid_argument("graph: constant data does not match shape " + shape_string(shape));
  return push(std::move(shape), std::move(values), false, nullptr);
}

Var Graph::zeros(std::vector<std::size_t> shape) {
  auto n = shape_size(shape);
  return constant(std::move(shape), std::vector<double>(n, 0.0));
}

Var Graph::matvec(Var w, Var x) {
  check(w), check(x);
  const auto& ws = shape(w);
  if (!is_matrix(ws) || size(x) != ws[1]) shape_error("matvec", ws, shape(x));
  const std::size_t rows = ws[0], cols = ws[1];
  std::vector<double> out(rows, 0.0);
  kernels::gemv(value(w), rows, cols, value(x), out);
  return push({rows}, std::move(out), needs(w) || needs(x), [w, x, rows, cols](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(w)) kernels::ger(go, g.value(x), g.grad_buf(w.id));
    if (g.needs(x)) kernels::gemv_t(g.value(w), rows, cols, go, g.grad_buf(x.id));
  });
}

Var Graph::matvec_t(Var m, Var w) {
  check(m), check(w);
  const auto& ms = shape(m);
  if (!is_matrix(ms) || size(w) != ms[0]) shape_error("matvec_t", ms, shape(w));
  const std::size_t rows = ms[0], cols = ms[1];
  std::vector<double> out(cols, 0.0);
  kernels::gemv_t(value(m), rows, cols, value(w), out);
  return push({cols}, std::move(out), needs(m) || needs(w), [m, w, rows, cols](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(m)) kernels::ger(g.value(w), go, g.grad_buf(m.id));
    if (g.needs(w)) kernels::gemv(g.value(m), rows, cols, go, g.grad_buf(w.id));
  });
}

Var Graph::matmul_nt(Var a, Var b) {
  check(a), check(b);
  const auto& as = shape(a);
  const auto& bs = shape(b);
  if (!is_matrix(as) || !is_matrix(bs) || as[1] != bs[1]) shape_error("matmul_nt", as, bs);
  const std::size_t k = as[0], n = as[1], r = bs[0];
  std::vector<double> out(k * r, 0.0);
  kernels::gemm_nt(value(a), k, n, value(b), r, out);
  return push({k, r}, std::move(out), needs(a) || needs(b), [a, b, k, n, r](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);  // [k, r]
    if (g.needs(a)) kernels::gemm_nn(go, k, r, g.value(b), n, g.grad_buf(a.id));
    if (g.needs(b)) kernels::gemm_tn(go, k, r, g.value(a), n, g.grad_buf(b.id));
  });
}

Var Graph::outer(Var u, Var v) {
  check(u), check(v);
  const std::size_t k = size(u), c = size(v);
  std::vector<double> out(k * c, 0.0);
  kernels::ger(value(u), value(v), out);
  return push({k, c}, std::move(out), needs(u) || needs(v), [u, v, k, c](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(u)) kernels::gemv(go, k, c, g.value(v), g.grad_buf(u.id));
    if (g.needs(v)) kernels::gemv_t(go, k, c, g.value(u), g.grad_buf(v.id));
  });
}

Var Graph::add_row(Var m, Var v) {
  check(m), check(v);
  const auto& ms = shape(m);
  if (!is_matrix(ms) || size(v) != ms[1]) shape_error("add_row", ms, shape(v));
  const std::size_t k = ms[0], c = ms[1];
  auto mv = value(m);
  auto vv = value(v);
  std::vector<double> out(mv.begin(), mv.end());
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] += vv[j];
  return push({k, c}, std::move(out), needs(m) || needs(v), [m, v, k, c](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(m)) axpy(go, g.grad_buf(m.id));
    if (g.needs(v)) {
      auto gv = g.grad_buf(v.id);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < c; ++j) gv[j] += go[i * c + j];
    }
  });
}

Var Graph::add(Var a, Var b) {
  check(a), check(b);
  if (size(a) != size(b)) shape_error("add", shape(a), shape(b));
  auto av = value(a);
  auto bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] + bv[i];
  return push(shape(a), std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(a)) axpy(go, g.grad_buf(a.id));
    if (g.needs(b)) axpy(go, g.grad_buf(b.id));
  });
}

Var Graph::mul(Var a, Var b) {
  check(a), check(b);
  if (size(a) != size(b)) shape_error("mul", shape(a), shape(b));
  auto av = value(a);
  auto bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = av[i] * bv[i];
  return push(shape(a), std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(a)) {
      auto ga = g.grad_buf(a.id);
      auto bv = g.value(b);
      for (std::size_t i = 0; i < go.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (g.needs(b)) {
      auto gb = g.grad_buf(b.id);
      auto av = g.value(a);
      for (std::size_t i = 0; i < go.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var Graph::minimum(Var a, Var b) {
  check(a), check(b);
  if (size(a) != size(b)) shape_error("minimum", shape(a), shape(b));
  auto av = value(a);
  auto bv = value(b);
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::min(av[i], bv[i]);
  return push(shape(a), std::move(out), needs(a) || needs(b), [a, b](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto av = g.value(a);
    auto bv = g.value(b);
    // Ties route the gradient to the first argument.
    if (g.needs(a)) {
      auto ga = g.grad_buf(a.id);
      for (std::size_t i = 0; i < go.size(); ++i)
        if (av[i] <= bv[i]) ga[i] += go[i];
    }
    if (g.needs(b)) {
      auto gb = g.grad_buf(b.id);
      for (std::size_t i = 0; i < go.size(); ++i)
        if (bv[i] < av[i]) gb[i] += go[i];
    }
  });
}

Var Graph::scale(Var v, Var s) {
  check(v), check(s);
  if (size(s) != 1) shape_error("scale", shape(v), shape(s));
  const double sv = item(s);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vv[i] * sv;
  return push(shape(v), std::move(out), needs(v) || needs(s), [v, s](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    if (g.needs(v)) {
      auto gv = g.grad_buf(v.id);
      const double sv = g.item(s);
      for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i] * sv;
    }
    if (g.needs(s)) {
      auto vv = g.value(v);
      double acc = 0.0;
      for (std::size_t i = 0; i < go.size(); ++i) acc += go[i] * vv[i];
      g.grad_buf(s.id)[0] += acc;
    }
  });
}

Var Graph::affine(Var v, double mul, double shift) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = mul * vv[i] + shift;
  return push(shape(v), std::move(out), needs(v), [v, mul](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto gv = g.grad_buf(v.id);
    for (std::size_t i = 0; i < go.size(); ++i) gv[i] += mul * go[i];
  });
}

Var Graph::tanh(Var v) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(vv[i]);
  return push(shape(v), std::move(out), needs(v), [v](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    const auto& y = g.nodes_[self].value;
    auto gv = g.grad_buf(v.id);
    for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i] * (1.0 - y[i] * y[i]);
  });
}

Var Graph::sigmoid(Var v) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-vv[i]));
  return push(shape(v), std::move(out), needs(v), [v](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    const auto& y = g.nodes_[self].value;
    auto gv = g.grad_buf(v.id);
    for (std::size_t i = 0; i < go.size(); ++i) gv[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

Var Graph::relu(Var v) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = vv[i] > 0.0 ? vv[i] : 0.0;
  return push(shape(v), std::move(out), needs(v), [v](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto vv = g.value(v);
    auto gv = g.grad_buf(v.id);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (vv[i] > 0.0) gv[i] += go[i];
  });
}

Var Graph::log(Var v) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(vv.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::log(std::max(vv[i], kLogFloor));
  return push(shape(v), std::move(out), needs(v), [v](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto vv = g.value(v);
    auto gv = g.grad_buf(v.id);
    for (std::size_t i = 0; i < go.size(); ++i)
      if (vv[i] > kLogFloor) gv[i] += go[i] / vv[i];
  });
}

Var Graph::softmax_masked(Var logits, const std::vector<bool>& mask) {
  check(logits);
  auto lv = value(logits);
  if (mask.size() != lv.size())
    throw std::invalid_argument("softmax_masked: mask length " + std::to_string(mask.size()) +
                                " does not match logits length " + std::to_string(lv.size()));
  double mx = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < lv.size(); ++i)
    if (mask[i]) mx = std::max(mx, lv[i]), any = true;
  if (!any) throw std::invalid_argument("empty attention support");
  std::vector<double> out(lv.size(), 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < lv.size(); ++i)
    if (mask[i]) total += (out[i] = std::exp(lv[i] - mx));
  for (std::size_t i = 0; i < lv.size(); ++i)
    if (mask[i]) out[i] /= total;
  return push(shape(logits), std::move(out), needs(logits), [logits](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    const auto& y = g.nodes_[self].value;
    double dot = 0.0;
    for (std::size_t i = 0; i < go.size(); ++i) dot += go[i] * y[i];
    auto gl = g.grad_buf(logits.id);
    // Masked entries have y == 0 and so receive nothing.
    for (std::size_t i = 0; i < go.size(); ++i) gl[i] += y[i] * (go[i] - dot);
  });
}

Var Graph::concat(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat: no inputs");
  std::vector<double> out;
  std::vector<Var> ins(parts.begin(), parts.end());
  bool any = false;
  for (Var p : ins) {
    check(p);
    auto pv = value(p);
    out.insert(out.end(), pv.begin(), pv.end());
    any = any || needs(p);
  }
  const std::size_t n = out.size();
  return push({n}, std::move(out), any, [ins](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    std::size_t off = 0;
    for (Var p : ins) {
      const std::size_t len = g.size(p);
      if (g.needs(p)) axpy(go.subspan(off, len), g.grad_buf(p.id));
      off += len;
    }
  });
}

Var Graph::slice(Var v, std::size_t offset, std::size_t len) {
  check(v);
  auto vv = value(v);
  if (len == 0 || offset + len > vv.size())
    throw std::invalid_argument("slice: range out of bounds for " + shape_string(shape(v)));
  std::vector<double> out(vv.begin() + static_cast<std::ptrdiff_t>(offset),
                          vv.begin() + static_cast<std::ptrdiff_t>(offset + len));
  return push({len}, std::move(out), needs(v), [v, offset, len](Graph& g, std::uint32_t self) {
    axpy(g.out_grad(self), g.grad_buf(v.id).subspan(offset, len));
  });
}

Var Graph::stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no inputs");
  const std::size_t c = size(rows[0]);
  std::vector<double> out;
  out.reserve(rows.size() * c);
  std::vector<Var> ins(rows.begin(), rows.end());
  bool any = false;
  for (Var r : ins) {
    check(r);
    if (size(r) != c) shape_error("stack_rows", shape(rows[0]), shape(r));
    auto rv = value(r);
    out.insert(out.end(), rv.begin(), rv.end());
    any = any || needs(r);
  }
  return push({ins.size(), c}, std::move(out), any, [ins, c](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    for (std::size_t i = 0; i < ins.size(); ++i)
      if (g.needs(ins[i])) axpy(go.subspan(i * c, c), g.grad_buf(ins[i].id));
  });
}

Var Graph::lookup(Var table, std::size_t row) {
  check(table);
  const auto& ts = shape(table);
  if (!is_matrix(ts) || row >= ts[0])
    throw std::invalid_argument("lookup: row " + std::to_string(row) + " outside table " + shape_string(ts));
  const std::size_t c = ts[1];
  auto tv = value(table).subspan(row * c, c);
  return push({c}, {tv.begin(), tv.end()}, needs(table), [table, row, c](Graph& g, std::uint32_t self) {
    axpy(g.out_grad(self), g.grad_buf(table.id).subspan(row * c, c));
  });
}

Var Graph::gather(Var v, std::span<const std::size_t> index) {
  check(v);
  auto vv = value(v);
  std::vector<double> out(index.size());
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= vv.size()) throw std::invalid_argument("gather: index out of range");
    out[k] = vv[index[k]];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return push({idx.size()}, std::move(out), needs(v), [v, idx](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto gv = g.grad_buf(v.id);
    for (std::size_t k = 0; k < idx.size(); ++k) gv[idx[k]] += go[k];
  });
}

Var Graph::scatter_add(Var v, std::span<const std::size_t> index, std::size_t size_out) {
  check(v);
  auto vv = value(v);
  if (index.size() != vv.size()) throw std::invalid_argument("scatter_add: index length mismatch");
  std::vector<double> out(size_out, 0.0);
  for (std::size_t k = 0; k < index.size(); ++k) {
    if (index[k] >= size_out) throw std::invalid_argument("scatter_add: index out of range");
    out[index[k]] += vv[k];
  }
  std::vector<std::size_t> idx(index.begin(), index.end());
  return push({size_out}, std::move(out), needs(v), [v, idx](Graph& g, std::uint32_t self) {
    auto go = g.out_grad(self);
    auto gv = g.grad_buf(v.id);
    for (std::size_t k = 0; k < idx.size(); ++k) gv[k] += go[idx[k]];
  });
}

Var Graph::pick(Var v, std::size_t i) {
  check(v);
  auto vv = value(v);
  if (i >= vv.size()) throw std::invalid_argument("pick: index out of range");
  return push({1}, {vv[i]}, needs(v), [v, i](Graph& g, std::uint32_t self) {
    g.grad_buf(v.id)[i] += g.out_grad(self)[0];
  });
}

Var Graph::sum(Var v) {
  check(v);
  double acc = 0.0;
  for (double x : value(v)) acc += x;
  return push({1}, {acc}, needs(v), [v](Graph& g, std::uint32_t self) {
    const double go = g.out_grad(self)[0];
    for (double& x : g.grad_buf(v.id)) x += go;
  });
}

Var Graph::add_n(std::span<const Var> scalars) {
  if (scalars.empty()) throw std::invalid_argument("add_n: no inputs");
  std::vector<Var> ins(scalars.begin(), scalars.end());
  double acc = 0.0;
  bool any = false;
  for (Var s : ins) {
    acc += item(s);
    any = any || needs(s);
  }
  return push({1}, {acc}, any, [ins](Graph& g, std::uint32_t self) {
    const double go = g.out_grad(self)[0];
    for (Var s : ins)
      if (g.needs(s)) g.grad_buf(s.id)[0] += go;
  });
}

void Graph::backward(Var loss) {
  check(loss);
  const double l = item(loss);
  if (!std::isfinite(l)) throw std::runtime_error("backward: non-finite loss");
  for (auto& n : nodes_)
    if (!n.param) n.grad.clear();
  if (!needs(loss)) return;
  grad_buf(loss.id)[0] += 1.0;
  for (std::uint32_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (n.param || !n.back || n.grad.empty()) continue;
    n.back(*this, i);
  }
}

Tensor& ParameterStore::add(const std::string& name, std::vector<std::size_t> shape) {
  if (contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
  index_[name] = tensors_.size();
  names_.push_back(name);
  tensors_.emplace_back(std::move(shape));
  tensors_.back().set_requires_grad(true);
  return tensors_.back();
}

Tensor& ParameterStore::get(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return tensors_[it->second];
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) throw std::out_of_range("unknown parameter: " + name);
  return tensors_[it->second];
}

void ParameterStore::zero_grad() {
  for (auto& t : tensors_) t.zero_grad();
}

std::size_t ParameterStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += t.size();
  return n;
}

std::map<std::string, std::vector<double>> gradients(Graph& graph, Var loss, ParameterStore& params) {
  params.zero_grad();
  graph.backward(loss);
  std::map<std::string, std::vector<double>> out;
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params.at(i).grad();
    out[params.name(i)] = {g.begin(), g.end()};
  }
  return out;
}

}  // namespace strata
