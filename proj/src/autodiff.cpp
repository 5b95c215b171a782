#include "stack_order/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "stack_order/simd/kernels.hpp"

namespace stack_order {
namespace {

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, const Tensor& b) {
  throw std::invalid_argument(std::string(op) + ": incompatible shapes " + shape_string(a.shape()) + " and " +
                              shape_string(b.shape()));
}

[[noreturn]] void shape_error(std::string_view op, const Tensor& a, std::string_view what) {
  throw std::invalid_argument(std::string(op) + ": shape " + shape_string(a.shape()) + " " + std::string(what));
}

bool is_matrix_or_vector(const Tensor& t) { return t.rank() == 1 || t.rank() == 2; }

}  // namespace

Var Tape::record(Tensor value, bool requires_grad, std::function<void(Tape&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{nodes_.size() - 1};
}

Tape::Node& Tape::node(Var v) {
  if (v.id >= nodes_.size()) throw std::out_of_range("Tape: variable does not belong to this tape");
  return nodes_[v.id];
}

const Tape::Node& Tape::node(Var v) const {
  if (v.id >= nodes_.size()) throw std::out_of_range("Tape: variable does not belong to this tape");
  return nodes_[v.id];
}

Var Tape::leaf(Tensor value) { return record(std::move(value), true, [](Tape&) {}); }

Var Tape::constant(Tensor value) { return record(std::move(value), false, {}); }

const Tensor& Tape::value(Var v) const { return node(v).value; }

const Tensor& Tape::grad(Var v) const { return node(v).grad; }

void Tape::backward(Var loss) {
  const Tensor& lv = node(loss).value;
  if (lv.rank() != 0) shape_error("backward", lv, "is not a scalar loss");
  for (auto& n : nodes_) n.grad = Tensor(n.value.shape());
  nodes_[loss.id].grad[0] = 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    if (nodes_[i].requires_grad && nodes_[i].backward) nodes_[i].backward(*this);
  }
}

Var Tape::matmul_nt(Var x, Var w) {
  const Tensor& xv = value(x);
  const Tensor& wv = value(w);
  if (!is_matrix_or_vector(xv) || wv.rank() != 2 || xv.cols() != wv.cols()) shape_error("matmul_nt", xv, wv);
  const std::size_t m = xv.rows(), k = xv.cols(), n = wv.rows();
  Tensor out = xv.rank() == 1 ? Tensor({n}) : Tensor({m, n});
  const auto& kern = simd::active();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) out[i * n + j] = kern.dot(xv.data() + i * k, wv.data() + j * k, k);
  }
  Var res = record(std::move(out), needs(x) || needs(w), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [x, w, res, m, k, n](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    if (t.needs(x)) {
      Tensor& gx = t.g(x);
      const Tensor& wv = t.value(w);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) kern.axpy(go[i * n + j], wv.data() + j * k, gx.data() + i * k, k);
    }
    if (t.needs(w)) {
      Tensor& gw = t.g(w);
      const Tensor& xv = t.value(x);
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) kern.axpy(go[i * n + j], xv.data() + i * k, gw.data() + j * k, k);
    }
  };
  return res;
}

Var Tape::matvec(Var m, Var v) {
  const Tensor& mv = value(m);
  const Tensor& vv = value(v);
  if (mv.rank() != 2 || vv.rank() != 1 || mv.cols() != vv.size()) shape_error("matvec", mv, vv);
  const std::size_t rows = mv.rows(), d = mv.cols();
  Tensor out({rows});
  const auto& kern = simd::active();
  for (std::size_t p = 0; p < rows; ++p) out[p] = kern.dot(mv.data() + p * d, vv.data(), d);
  Var res = record(std::move(out), needs(m) || needs(v), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [m, v, res, rows, d](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    if (t.needs(m)) {
      Tensor& gm = t.g(m);
      for (std::size_t p = 0; p < rows; ++p) kern.axpy(go[p], t.value(v).data(), gm.data() + p * d, d);
    }
    if (t.needs(v)) {
      Tensor& gv = t.g(v);
      for (std::size_t p = 0; p < rows; ++p) kern.axpy(go[p], t.value(m).data() + p * d, gv.data(), d);
    }
  };
  return res;
}

Var Tape::dot(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() != 1 || av.shape() != bv.shape()) shape_error("dot", av, bv);
  const std::size_t n = av.size();
  Var res = record(Tensor::scalar(simd::active().dot(av.data(), bv.data(), n)), needs(a) || needs(b), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [a, b, res, n](Tape& t) {
    const auto& kern = simd::active();
    const double go = t.g(res)[0];
    if (t.needs(a)) kern.axpy(go, t.value(b).data(), t.g(a).data(), n);
    if (t.needs(b)) kern.axpy(go, t.value(a).data(), t.g(b).data(), n);
  };
  return res;
}

Var Tape::add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape() != bv.shape()) shape_error("add", av, bv);
  Tensor out = av;
  simd::active().axpy(1.0, bv.data(), out.data(), out.size());
  Var res = record(std::move(out), needs(a) || needs(b), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [a, b, res](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    if (t.needs(a)) kern.axpy(1.0, go.data(), t.g(a).data(), go.size());
    if (t.needs(b)) kern.axpy(1.0, go.data(), t.g(b).data(), go.size());
  };
  return res;
}

Var Tape::sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.shape() != bv.shape()) shape_error("sub", av, bv);
  Tensor out(av.shape());
  simd::active().sub(av.data(), bv.data(), out.data(), out.size());
  Var res = record(std::move(out), needs(a) || needs(b), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [a, b, res](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    if (t.needs(a)) kern.axpy(1.0, go.data(), t.g(a).data(), go.size());
    if (t.needs(b)) kern.axpy(-1.0, go.data(), t.g(b).data(), go.size());
  };
  return res;
}

Var Tape::relu(Var x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  simd::active().relu(xv.data(), out.data(), out.size());
  Var res = record(std::move(out), needs(x), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [x, res](Tape& t) {
    const Tensor& go = t.g(res);
    simd::active().relu_backward(t.value(x).data(), go.data(), t.g(x).data(), go.size());
  };
  return res;
}

Var Tape::sin(Var x) {
  const Tensor& xv = value(x);
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::sin(xv[i]);
  Var res = record(std::move(out), needs(x), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [x, res](Tape& t) {
    const Tensor& go = t.g(res);
    const Tensor& xv = t.value(x);
    Tensor& gx = t.g(x);
    for (std::size_t i = 0; i < go.size(); ++i) gx[i] += go[i] * std::cos(xv[i]);
  };
  return res;
}

Var Tape::concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const std::size_t cols = value(parts[0]).cols();
  std::size_t rows = 0;
  bool grad = false;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    if (!is_matrix_or_vector(pv) || pv.cols() != cols) shape_error("concat_rows", value(parts[0]), pv);
    rows += pv.rows();
    grad = grad || needs(p);
  }
  Tensor out({rows, cols});
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    std::copy(pv.data(), pv.data() + pv.size(), out.data() + offset);
    offset += pv.size();
  }
  Var res = record(std::move(out), grad, {});
  if (!needs(res)) return res;
  std::vector<Var> inputs(parts.begin(), parts.end());
  nodes_[res.id].backward = [inputs, res](Tape& t) {
    const Tensor& go = t.g(res);
    std::size_t offset = 0;
    for (Var p : inputs) {
      const std::size_t n = t.value(p).size();
      if (t.needs(p)) simd::active().axpy(1.0, go.data() + offset, t.g(p).data(), n);
      offset += n;
    }
  };
  return res;
}

Var Tape::concat_cols(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.rank() != 2 || bv.rank() != 2 || av.rows() != bv.rows()) shape_error("concat_cols", av, bv);
  const std::size_t rows = av.rows(), ca = av.cols(), cb = bv.cols();
  Tensor out({rows, ca + cb});
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy(av.data() + r * ca, av.data() + (r + 1) * ca, out.data() + r * (ca + cb));
    std::copy(bv.data() + r * cb, bv.data() + (r + 1) * cb, out.data() + r * (ca + cb) + ca);
  }
  Var res = record(std::move(out), needs(a) || needs(b), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [a, b, res, rows, ca, cb](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    for (std::size_t r = 0; r < rows; ++r) {
      if (t.needs(a)) kern.axpy(1.0, go.data() + r * (ca + cb), t.g(a).data() + r * ca, ca);
      if (t.needs(b)) kern.axpy(1.0, go.data() + r * (ca + cb) + ca, t.g(b).data() + r * cb, cb);
    }
  };
  return res;
}

Var Tape::slice_rows(Var x, std::size_t begin, std::size_t end) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2 || begin > end || end > xv.rows()) {
    shape_error("slice_rows", xv, "cannot be sliced to rows [" + std::to_string(begin) + ", " + std::to_string(end) + ")");
  }
  const std::size_t cols = xv.cols();
  Tensor out({end - begin, cols});
  std::copy(xv.data() + begin * cols, xv.data() + end * cols, out.data());
  Var res = record(std::move(out), needs(x), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [x, res, begin, cols](Tape& t) {
    const Tensor& go = t.g(res);
    simd::active().axpy(1.0, go.data(), t.g(x).data() + begin * cols, go.size());
  };
  return res;
}

Var Tape::neighbor_mean(Var x, std::span<const std::vector<std::size_t>> sources) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2) shape_error("neighbor_mean", xv, "is not a matrix");
  const std::size_t cols = xv.cols();
  const auto& kern = simd::active();
  Tensor out({sources.size(), cols});
  for (std::size_t i = 0; i < sources.size(); ++i) {
    if (sources[i].empty()) continue;
    const double inv = 1.0 / static_cast<double>(sources[i].size());
    for (std::size_t j : sources[i]) {
      if (j >= xv.rows()) shape_error("neighbor_mean", xv, "has no source row " + std::to_string(j));
      kern.axpy(inv, xv.data() + j * cols, out.data() + i * cols, cols);
    }
  }
  Var res = record(std::move(out), needs(x), {});
  if (!needs(res)) return res;
  std::vector<std::vector<std::size_t>> lists(sources.begin(), sources.end());
  nodes_[res.id].backward = [x, res, lists = std::move(lists), cols](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    Tensor& gx = t.g(x);
    for (std::size_t i = 0; i < lists.size(); ++i) {
      if (lists[i].empty()) continue;
      const double inv = 1.0 / static_cast<double>(lists[i].size());
      for (std::size_t j : lists[i]) kern.axpy(inv, go.data() + i * cols, gx.data() + j * cols, cols);
    }
  };
  return res;
}

Var Tape::pair_difference(Var x, std::span<const IndexPair> pairs) {
  const Tensor& xv = value(x);
  if (xv.rank() != 2) shape_error("pair_difference", xv, "is not a matrix");
  const std::size_t cols = xv.cols();
  Tensor out({pairs.size(), cols});
  const auto& kern = simd::active();
  for (std::size_t p = 0; p < pairs.size(); ++p) {
    const auto [a, b] = pairs[p];
    if (a >= xv.rows() || b >= xv.rows()) {
      shape_error("pair_difference", xv, "has no row pair (" + std::to_string(a) + ", " + std::to_string(b) + ")");
    }
    kern.sub(xv.data() + a * cols, xv.data() + b * cols, out.data() + p * cols, cols);
  }
  Var res = record(std::move(out), needs(x), {});
  if (!needs(res)) return res;
  std::vector<IndexPair> saved(pairs.begin(), pairs.end());
  nodes_[res.id].backward = [x, res, saved = std::move(saved), cols](Tape& t) {
    const auto& kern = simd::active();
    const Tensor& go = t.g(res);
    Tensor& gx = t.g(x);
    for (std::size_t p = 0; p < saved.size(); ++p) {
      kern.axpy(1.0, go.data() + p * cols, gx.data() + saved[p].first * cols, cols);
      kern.axpy(-1.0, go.data() + p * cols, gx.data() + saved[p].second * cols, cols);
    }
  };
  return res;
}

Var Tape::pair_softmax(Var scores) {
  const Tensor& sv = value(scores);
  Tensor out(sv.shape());
  for (std::size_t i = 0; i < sv.size(); ++i) {
    // softmax over (f, -f) evaluated from the side that cannot overflow
    const double f = sv[i];
    const double e = std::exp(-2.0 * std::abs(f));
    out[i] = f >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
  }
  Var res = record(std::move(out), needs(scores), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [scores, res](Tape& t) {
    const Tensor& go = t.g(res);
    const Tensor& p = t.value(res);
    Tensor& gs = t.g(scores);
    for (std::size_t i = 0; i < go.size(); ++i) gs[i] += go[i] * 2.0 * p[i] * (1.0 - p[i]);
  };
  return res;
}

Var Tape::bce_mean(Var probabilities, double eps) {
  const Tensor& pv = value(probabilities);
  if (pv.size() == 0) throw std::invalid_argument("bce_mean: empty edge set");
  double total = 0.0;
  for (std::size_t i = 0; i < pv.size(); ++i) total += -std::log(std::clamp(pv[i], eps, 1.0 - eps));
  const double count = static_cast<double>(pv.size());
  Var res = record(Tensor::scalar(total / count), needs(probabilities), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [probabilities, res, eps, count](Tape& t) {
    const double go = t.g(res)[0];
    const Tensor& pv = t.value(probabilities);
    Tensor& gp = t.g(probabilities);
    for (std::size_t i = 0; i < pv.size(); ++i) {
      if (pv[i] > eps && pv[i] < 1.0 - eps) gp[i] += -go / (count * pv[i]);
    }
  };
  return res;
}

Var Tape::mean(Var x) {
  const Tensor& xv = value(x);
  if (xv.size() == 0) throw std::invalid_argument("mean: empty tensor");
  double total = 0.0;
  for (double v : xv.values()) total += v;
  const double count = static_cast<double>(xv.size());
  Var res = record(Tensor::scalar(total / count), needs(x), {});
  if (!needs(res)) return res;
  nodes_[res.id].backward = [x, res, count](Tape& t) {
    const double go = t.g(res)[0] / count;
    for (double& gv : t.g(x).values()) gv += go;
  };
  return res;
}

}  // namespace stack_order
