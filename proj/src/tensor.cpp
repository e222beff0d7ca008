#include "text2lip/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

#include "text2lip/errors.hpp"
#include "text2lip/kernels.hpp"

namespace t2l {

namespace {
bool g_finite_checks = false;

void check_finite(const TensorNode& n, const char* op) {
  if (!g_finite_checks) return;
  for (double v : n.value)
    if (!std::isfinite(v))
      throw NumericError(std::string("non-finite value produced by ") + op);
}

std::shared_ptr<TensorNode> make_node(Shape shape, std::vector<double> value,
                                      std::vector<std::shared_ptr<TensorNode>> parents) {
  auto n = std::make_shared<TensorNode>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  n->parents = std::move(parents);
  for (const auto& p : n->parents)
    if (p->requires_grad) n->requires_grad = true;
  return n;
}

void require_rank2(const Tensor& t, const char* op) {
  if (t.rank() != 2)
    throw ShapeMismatch(std::string(op) + " expects a 2-D tensor, got " +
                        shape_str(t.shape()));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape())
    throw ShapeMismatch(std::string(op) + ": " + shape_str(a.shape()) +
                        " vs " + shape_str(b.shape()));
}
}  // namespace

std::string shape_str(const Shape& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  out += ")";
  return out;
}

void set_finite_checks(bool on) { g_finite_checks = on; }
bool finite_checks() { return g_finite_checks; }

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::full(Shape shape, double v, bool requires_grad) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  auto node = make_node(std::move(shape), std::vector<double>(n, v), {});
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::from_data(Shape shape, std::vector<double> data,
                         bool requires_grad) {
  std::int64_t n = 1;
  for (int d : shape) n *= d;
  if (n != static_cast<std::int64_t>(data.size()))
    throw ShapeMismatch("from_data: " + shape_str(shape) + " needs " +
                        std::to_string(n) + " values, got " +
                        std::to_string(data.size()));
  auto node = make_node(std::move(shape), std::move(data), {});
  node->requires_grad = requires_grad;
  return Tensor(node);
}

Tensor Tensor::scalar(double v) { return from_data({1}, {v}); }

double Tensor::item() const {
  if (numel() != 1)
    throw ShapeMismatch("item() on tensor of shape " + shape_str(shape()));
  return node->value[0];
}

void backward(const Tensor& root) {
  if (root.numel() != 1)
    throw ShapeMismatch("backward expects a scalar root, got " +
                        shape_str(root.shape()));
  // iterative post-order DFS over the grad-requiring subgraph
  std::vector<TensorNode*> order;
  std::unordered_set<TensorNode*> visited;
  std::vector<std::pair<TensorNode*, std::size_t>> stack;
  if (!root.node->requires_grad) return;
  stack.push_back({root.node.get(), 0});
  visited.insert(root.node.get());
  while (!stack.empty()) {
    auto& [n, i] = stack.back();
    if (i < n->parents.size()) {
      TensorNode* p = n->parents[i++].get();
      if (p->requires_grad && !visited.count(p)) {
        visited.insert(p);
        stack.push_back({p, 0});
      }
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  root.node->ensure_grad();
  root.node->grad[0] += 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    TensorNode* n = *it;
    if (n->backward_fn) {
      for (auto& p : n->parents)
        if (p->requires_grad) p->ensure_grad();
      n->backward_fn(*n);
    }
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  int m = a.dim(0), k = a.dim(1), k2 = b.dim(0), n = b.dim(1);
  if (k != k2)
    throw ShapeMismatch("matmul: " + shape_str(a.shape()) + " x " +
                        shape_str(b.shape()));
  auto node = make_node({m, n}, std::vector<double>(static_cast<std::size_t>(m) * n),
                        {a.node, b.node});
  kernels::matmul(a.data().data(), b.data().data(), node->value.data(), m, k, n);
  if (node->requires_grad) {
    node->backward_fn = [m, k, n](TensorNode& self) {
      auto& pa = self.parents[0];
      auto& pb = self.parents[1];
      if (pa->requires_grad)
        kernels::matmul_transb(self.grad.data(), pb->value.data(),
                               pa->grad.data(), m, n, k, true);
      if (pb->requires_grad)
        kernels::matmul_transa(pa->value.data(), self.grad.data(),
                               pb->grad.data(), m, k, n, true);
    };
  }
  check_finite(*node, "matmul");
  return Tensor(node);
}

Tensor transpose(const Tensor& a) {
  require_rank2(a, "transpose");
  int m = a.dim(0), n = a.dim(1);
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  const auto& v = a.data();
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      out[static_cast<std::size_t>(j) * m + i] = v[static_cast<std::size_t>(i) * n + j];
  auto node = make_node({n, m}, std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [m, n](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j)
          p->grad[static_cast<std::size_t>(j) * n + i] +=
              self.grad[static_cast<std::size_t>(i) * m + j];
    };
  }
  return Tensor(node);
}

namespace {
template <class FwdFn, class BwdFn>
Tensor elementwise2(const Tensor& a, const Tensor& b, const char* op,
                    FwdFn fwd, BwdFn bwd) {
  require_same_shape(a, b, op);
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = fwd(a.data()[i], b.data()[i]);
  auto node = make_node(a.shape(), std::move(out), {a.node, b.node});
  if (node->requires_grad) {
    node->backward_fn = [bwd](TensorNode& self) {
      auto& pa = self.parents[0];
      auto& pb = self.parents[1];
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        double da, db;
        bwd(pa->value[i], pb->value[i], &da, &db);
        if (pa->requires_grad) pa->grad[i] += self.grad[i] * da;
        if (pb->requires_grad) pb->grad[i] += self.grad[i] * db;
      }
    };
  }
  check_finite(*node, op);
  return Tensor(node);
}
}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, "add", [](double x, double y) { return x + y; },
                      [](double, double, double* da, double* db) {
                        *da = 1.0;
                        *db = 1.0;
                      });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, "sub", [](double x, double y) { return x - y; },
                      [](double, double, double* da, double* db) {
                        *da = 1.0;
                        *db = -1.0;
                      });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  return elementwise2(a, b, "mul", [](double x, double y) { return x * y; },
                      [](double x, double y, double* da, double* db) {
                        *da = y;
                        *db = x;
                      });
}

Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * c;
  auto node = make_node(a.shape(), std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [c](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        p->grad[i] += self.grad[i] * c;
    };
  }
  check_finite(*node, "scale");
  return Tensor(node);
}

Tensor add_rows(const Tensor& m, const Tensor& row) {
  require_rank2(m, "add_rows");
  if (row.rank() != 1 || row.dim(0) != m.dim(1))
    throw ShapeMismatch("add_rows: " + shape_str(m.shape()) + " + " +
                        shape_str(row.shape()));
  int rows = m.dim(0), d = m.dim(1);
  std::vector<double> out(m.data().size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i) * d + j] =
          m.data()[static_cast<std::size_t>(i) * d + j] + row.data()[j];
  auto node = make_node(m.shape(), std::move(out), {m.node, row.node});
  if (node->requires_grad) {
    node->backward_fn = [rows, d](TensorNode& self) {
      auto& pm = self.parents[0];
      auto& pr = self.parents[1];
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < d; ++j) {
          double g = self.grad[static_cast<std::size_t>(i) * d + j];
          if (pm->requires_grad)
            pm->grad[static_cast<std::size_t>(i) * d + j] += g;
          if (pr->requires_grad) pr->grad[j] += g;
        }
    };
  }
  check_finite(*node, "add_rows");
  return Tensor(node);
}

Tensor scale_rows(const Tensor& m, const Tensor& v) {
  require_rank2(m, "scale_rows");
  if (v.rank() != 1 || v.dim(0) != m.dim(0))
    throw ShapeMismatch("scale_rows: " + shape_str(m.shape()) + " * " +
                        shape_str(v.shape()));
  int rows = m.dim(0), d = m.dim(1);
  std::vector<double> out(m.data().size());
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < d; ++j)
      out[static_cast<std::size_t>(i) * d + j] =
          m.data()[static_cast<std::size_t>(i) * d + j] * v.data()[i];
  auto node = make_node(m.shape(), std::move(out), {m.node, v.node});
  if (node->requires_grad) {
    node->backward_fn = [rows, d](TensorNode& self) {
      auto& pm = self.parents[0];
      auto& pv = self.parents[1];
      for (int i = 0; i < rows; ++i) {
        double dv = 0.0;
        for (int j = 0; j < d; ++j) {
          std::size_t at = static_cast<std::size_t>(i) * d + j;
          if (pm->requires_grad) pm->grad[at] += self.grad[at] * pv->value[i];
          dv += self.grad[at] * pm->value[at];
        }
        if (pv->requires_grad) pv->grad[i] += dv;
      }
    };
  }
  check_finite(*node, "scale_rows");
  return Tensor(node);
}

Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = 1.0 / (1.0 + std::exp(-a.data()[i]));
  auto node = make_node(a.shape(), std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        double s = self.value[i];
        p->grad[i] += self.grad[i] * s * (1.0 - s);
      }
    };
  }
  check_finite(*node, "sigmoid");
  return Tensor(node);
}

Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.data().size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.data()[i]);
  auto node = make_node(a.shape(), std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (std::size_t i = 0; i < self.grad.size(); ++i) {
        double t = self.value[i];
        p->grad[i] += self.grad[i] * (1.0 - t * t);
      }
    };
  }
  check_finite(*node, "tanh");
  return Tensor(node);
}

namespace {
// softmax / layer_norm over the rows of a 2-D tensor (or over a 1-D vector)
Tensor softmax_rows(const Tensor& a) {
  int rows = a.rank() == 1 ? 1 : a.dim(0);
  int d = a.rank() == 1 ? a.dim(0) : a.dim(1);
  if (d == 0) throw ShapeMismatch("softmax over empty axis");
  std::vector<double> out(a.data().size());
  for (int i = 0; i < rows; ++i) {
    const double* x = a.data().data() + static_cast<std::size_t>(i) * d;
    double* y = out.data() + static_cast<std::size_t>(i) * d;
    double mx = x[0];
    for (int j = 1; j < d; ++j) mx = std::max(mx, x[j]);
    double s = 0.0;
    for (int j = 0; j < d; ++j) {
      y[j] = std::exp(x[j] - mx);
      s += y[j];
    }
    for (int j = 0; j < d; ++j) y[j] /= s;
  }
  auto node = make_node(a.shape(), std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [rows, d](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (int i = 0; i < rows; ++i) {
        const double* y = self.value.data() + static_cast<std::size_t>(i) * d;
        const double* g = self.grad.data() + static_cast<std::size_t>(i) * d;
        double dot = 0.0;
        for (int j = 0; j < d; ++j) dot += g[j] * y[j];
        double* pg = p->grad.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j) pg[j] += y[j] * (g[j] - dot);
      }
    };
  }
  check_finite(*node, "softmax");
  return Tensor(node);
}

Tensor layer_norm_rows(const Tensor& a, double eps) {
  int rows = a.rank() == 1 ? 1 : a.dim(0);
  int d = a.rank() == 1 ? a.dim(0) : a.dim(1);
  if (d == 0) throw ShapeMismatch("layer_norm over empty axis");
  std::vector<double> out(a.data().size());
  std::vector<double> inv_std(rows);
  for (int i = 0; i < rows; ++i) {
    const double* x = a.data().data() + static_cast<std::size_t>(i) * d;
    double* y = out.data() + static_cast<std::size_t>(i) * d;
    double mu = 0.0;
    for (int j = 0; j < d; ++j) mu += x[j];
    mu /= d;
    double var = 0.0;
    for (int j = 0; j < d; ++j) var += (x[j] - mu) * (x[j] - mu);
    var /= d;
    double inv = 1.0 / std::sqrt(var + eps);
    inv_std[i] = inv;
    for (int j = 0; j < d; ++j) y[j] = (x[j] - mu) * inv;
  }
  auto node = make_node(a.shape(), std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [rows, d, inv_std](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (int i = 0; i < rows; ++i) {
        const double* xhat = self.value.data() + static_cast<std::size_t>(i) * d;
        const double* g = self.grad.data() + static_cast<std::size_t>(i) * d;
        double mean_g = 0.0, mean_gx = 0.0;
        for (int j = 0; j < d; ++j) {
          mean_g += g[j];
          mean_gx += g[j] * xhat[j];
        }
        mean_g /= d;
        mean_gx /= d;
        double* pg = p->grad.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < d; ++j)
          pg[j] += inv_std[i] * (g[j] - mean_g - xhat[j] * mean_gx);
      }
    };
  }
  check_finite(*node, "layer_norm");
  return Tensor(node);
}
}  // namespace

Tensor softmax(const Tensor& a, int axis) {
  if (a.rank() == 1) return softmax_rows(a);
  require_rank2(a, "softmax");
  if (axis == -1) axis = 1;
  if (axis == 1) return softmax_rows(a);
  if (axis == 0) return transpose(softmax_rows(transpose(a)));
  throw ShapeMismatch("softmax: invalid axis " + std::to_string(axis));
}

Tensor layer_norm(const Tensor& a, int axis, double eps) {
  if (a.rank() == 1) return layer_norm_rows(a, eps);
  require_rank2(a, "layer_norm");
  if (axis == -1) axis = 1;
  if (axis == 1) return layer_norm_rows(a, eps);
  if (axis == 0) return transpose(layer_norm_rows(transpose(a), eps));
  throw ShapeMismatch("layer_norm: invalid axis " + std::to_string(axis));
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  require_rank2(table, "embedding_lookup");
  int vocab = table.dim(0), d = table.dim(1);
  int n = static_cast<int>(ids.size());
  std::vector<double> out(static_cast<std::size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    if (ids[i] < 0 || ids[i] >= vocab)
      throw IndexOutOfVocab("id " + std::to_string(ids[i]) +
                            " outside vocab of size " + std::to_string(vocab));
    const double* src = table.data().data() + static_cast<std::size_t>(ids[i]) * d;
    std::copy(src, src + d, out.begin() + static_cast<std::size_t>(i) * d);
  }
  auto node = make_node({n, d}, std::move(out), {table.node});
  if (node->requires_grad) {
    node->backward_fn = [ids, d](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (std::size_t i = 0; i < ids.size(); ++i) {
        double* dst = p->grad.data() + static_cast<std::size_t>(ids[i]) * d;
        const double* g = self.grad.data() + i * d;
        for (int j = 0; j < d; ++j) dst[j] += g[j];
      }
    };
  }
  return Tensor(node);
}

Tensor concat(const std::vector<Tensor>& parts, int axis) {
  if (parts.empty()) throw ShapeMismatch("concat of zero tensors");
  if (parts[0].rank() == 1 && axis == 0) {
    int total = 0;
    for (const auto& p : parts) {
      if (p.rank() != 1) throw ShapeMismatch("concat: mixed ranks");
      total += p.dim(0);
    }
    std::vector<double> out;
    out.reserve(total);
    std::vector<std::shared_ptr<TensorNode>> parents;
    for (const auto& p : parts) {
      out.insert(out.end(), p.data().begin(), p.data().end());
      parents.push_back(p.node);
    }
    auto node = make_node({total}, std::move(out), std::move(parents));
    if (node->requires_grad) {
      node->backward_fn = [](TensorNode& self) {
        std::size_t at = 0;
        for (auto& p : self.parents) {
          std::size_t n = p->value.size();
          if (p->requires_grad)
            for (std::size_t i = 0; i < n; ++i) p->grad[i] += self.grad[at + i];
          at += n;
        }
      };
    }
    return Tensor(node);
  }
  for (const auto& p : parts) require_rank2(p, "concat");
  if (axis != 0 && axis != 1)
    throw ShapeMismatch("concat: invalid axis " + std::to_string(axis));
  int rows = parts[0].dim(0), cols = parts[0].dim(1);
  int total = 0;
  for (const auto& p : parts) {
    if (axis == 0 && p.dim(1) != cols)
      throw ShapeMismatch("concat axis 0: " + shape_str(p.shape()));
    if (axis == 1 && p.dim(0) != rows)
      throw ShapeMismatch("concat axis 1: " + shape_str(p.shape()));
    total += p.dim(axis);
  }
  Shape out_shape = axis == 0 ? Shape{total, cols} : Shape{rows, total};
  std::vector<double> out(static_cast<std::size_t>(out_shape[0]) * out_shape[1]);
  std::vector<std::shared_ptr<TensorNode>> parents;
  if (axis == 0) {
    std::size_t at = 0;
    for (const auto& p : parts) {
      std::copy(p.data().begin(), p.data().end(), out.begin() + at);
      at += p.data().size();
      parents.push_back(p.node);
    }
  } else {
    int at_col = 0;
    for (const auto& p : parts) {
      int w = p.dim(1);
      for (int i = 0; i < rows; ++i)
        std::copy(p.data().begin() + static_cast<std::size_t>(i) * w,
                  p.data().begin() + static_cast<std::size_t>(i + 1) * w,
                  out.begin() + static_cast<std::size_t>(i) * total + at_col);
      at_col += w;
      parents.push_back(p.node);
    }
  }
  auto node = make_node(out_shape, std::move(out), std::move(parents));
  if (node->requires_grad) {
    if (axis == 0) {
      node->backward_fn = [](TensorNode& self) {
        std::size_t at = 0;
        for (auto& p : self.parents) {
          std::size_t n = p->value.size();
          if (p->requires_grad)
            for (std::size_t i = 0; i < n; ++i) p->grad[i] += self.grad[at + i];
          at += n;
        }
      };
    } else {
      node->backward_fn = [rows, total](TensorNode& self) {
        int at_col = 0;
        for (auto& p : self.parents) {
          int w = p->shape[1];
          if (p->requires_grad)
            for (int i = 0; i < rows; ++i)
              for (int j = 0; j < w; ++j)
                p->grad[static_cast<std::size_t>(i) * w + j] +=
                    self.grad[static_cast<std::size_t>(i) * total + at_col + j];
          at_col += w;
        }
      };
    }
  }
  return Tensor(node);
}

Tensor slice(const Tensor& a, int axis, int begin, int end) {
  if (a.rank() == 1) {
    if (axis != 0 || begin < 0 || end > a.dim(0) || begin >= end)
      throw ShapeMismatch("slice: [" + std::to_string(begin) + ", " +
                          std::to_string(end) + ") of " + shape_str(a.shape()));
    std::vector<double> out(a.data().begin() + begin, a.data().begin() + end);
    auto node = make_node({end - begin}, std::move(out), {a.node});
    if (node->requires_grad) {
      node->backward_fn = [begin](TensorNode& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          p->grad[begin + i] += self.grad[i];
      };
    }
    return Tensor(node);
  }
  require_rank2(a, "slice");
  int rows = a.dim(0), cols = a.dim(1);
  if (axis != 0 && axis != 1)
    throw ShapeMismatch("slice: invalid axis " + std::to_string(axis));
  int limit = axis == 0 ? rows : cols;
  if (begin < 0 || end > limit || begin >= end)
    throw ShapeMismatch("slice axis " + std::to_string(axis) + ": [" +
                        std::to_string(begin) + ", " + std::to_string(end) +
                        ") of " + shape_str(a.shape()));
  if (axis == 0) {
    std::vector<double> out(a.data().begin() + static_cast<std::size_t>(begin) * cols,
                            a.data().begin() + static_cast<std::size_t>(end) * cols);
    auto node = make_node({end - begin, cols}, std::move(out), {a.node});
    if (node->requires_grad) {
      node->backward_fn = [begin, cols](TensorNode& self) {
        auto& p = self.parents[0];
        if (!p->requires_grad) return;
        std::size_t off = static_cast<std::size_t>(begin) * cols;
        for (std::size_t i = 0; i < self.grad.size(); ++i)
          p->grad[off + i] += self.grad[i];
      };
    }
    return Tensor(node);
  }
  int w = end - begin;
  std::vector<double> out(static_cast<std::size_t>(rows) * w);
  for (int i = 0; i < rows; ++i)
    std::copy(a.data().begin() + static_cast<std::size_t>(i) * cols + begin,
              a.data().begin() + static_cast<std::size_t>(i) * cols + end,
              out.begin() + static_cast<std::size_t>(i) * w);
  auto node = make_node({rows, w}, std::move(out), {a.node});
  if (node->requires_grad) {
    node->backward_fn = [rows, cols, begin, w](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < w; ++j)
          p->grad[static_cast<std::size_t>(i) * cols + begin + j] +=
              self.grad[static_cast<std::size_t>(i) * w + j];
    };
  }
  return Tensor(node);
}

Tensor sum_all(const Tensor& a) {
  double s = 0.0;
  for (double v : a.data()) s += v;
  auto node = make_node({1}, {s}, {a.node});
  if (node->requires_grad) {
    node->backward_fn = [](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (double& g : p->grad) g += self.grad[0];
    };
  }
  check_finite(*node, "sum_all");
  return Tensor(node);
}

Tensor mean_all(const Tensor& a) {
  if (a.data().empty()) throw ShapeMismatch("mean_all of empty tensor");
  double s = 0.0;
  for (double v : a.data()) s += v;
  double inv = 1.0 / static_cast<double>(a.data().size());
  auto node = make_node({1}, {s * inv}, {a.node});
  if (node->requires_grad) {
    node->backward_fn = [inv](TensorNode& self) {
      auto& p = self.parents[0];
      if (!p->requires_grad) return;
      for (double& g : p->grad) g += self.grad[0] * inv;
    };
  }
  check_finite(*node, "mean_all");
  return Tensor(node);
}

Tensor& ParamStore::add(const std::string& name, Tensor t) {
  if (index.count(name)) throw DataError("duplicate parameter name " + name);
  index[name] = items.size();
  items.emplace_back(name, std::move(t));
  return items.back().second;
}

Tensor& ParamStore::at(const std::string& name) {
  auto it = index.find(name);
  if (it == index.end()) throw DataError("unknown parameter " + name);
  return items[it->second].second;
}

const Tensor& ParamStore::at(const std::string& name) const {
  auto it = index.find(name);
  if (it == index.end()) throw DataError("unknown parameter " + name);
  return items[it->second].second;
}

bool ParamStore::contains(const std::string& name) const {
  return index.count(name) != 0;
}

void ParamStore::zero_grad() {
  for (auto& [name, t] : items) {
    t.node->ensure_grad();
    std::fill(t.node->grad.begin(), t.node->grad.end(), 0.0);
  }
}

double ParamStore::grad_norm() const {
  double s = 0.0;
  for (const auto& [name, t] : items)
    for (double g : t.node->grad) s += g * g;
  return std::sqrt(s);
}

bool ParamStore::clip_grad_norm(double max_norm) {
  double n = grad_norm();
  if (n <= max_norm || n == 0.0) return false;
  double f = max_norm / n;
  for (auto& [name, t] : items)
    for (double& g : t.node->grad) g *= f;
  return true;
}

std::int64_t ParamStore::param_count() const {
  std::int64_t n = 0;
  for (const auto& [name, t] : items) n += t.numel();
  return n;
}

void Adam::step(ParamStore& params) {
  ++t_;
  double bc1 = 1.0 - std::pow(beta1, static_cast<double>(t_));
  double bc2 = 1.0 - std::pow(beta2, static_cast<double>(t_));
  for (auto& [name, t] : params.items) {
    auto& st = state_[name];
    std::size_t n = t.data().size();
    if (st.m.size() != n) {
      st.m.assign(n, 0.0);
      st.v.assign(n, 0.0);
    }
    t.node->ensure_grad();
    for (std::size_t i = 0; i < n; ++i) {
      double g = t.node->grad[i];
      st.m[i] = beta1 * st.m[i] + (1.0 - beta1) * g;
      st.v[i] = beta2 * st.v[i] + (1.0 - beta2) * g * g;
      double mhat = st.m[i] / bc1;
      double vhat = st.v[i] / bc2;
      t.node->value[i] -= lr * mhat / (std::sqrt(vhat) + eps);
    }
  }
}

}  // namespace t2l
