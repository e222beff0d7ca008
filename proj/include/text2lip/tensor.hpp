#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace t2l {

using Shape = std::vector<int>;

std::string shape_str(const Shape& s);

struct TensorNode {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on demand, same size as value
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  std::function<void(TensorNode&)> backward_fn;  // accumulates into parents

  std::int64_t numel() const {
    std::int64_t n = 1;
    for (int d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

// Value-semantics handle onto a graph node. Ops build the graph as they run;
// backward() replays it in reverse topological order.
class Tensor {
public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorNode> n) : node(std::move(n)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double v, bool requires_grad = false);
  static Tensor from_data(Shape shape, std::vector<double> data,
                          bool requires_grad = false);
  static Tensor scalar(double v);

  bool defined() const { return node != nullptr; }
  const Shape& shape() const { return node->shape; }
  int rank() const { return static_cast<int>(node->shape.size()); }
  int dim(int i) const { return node->shape[static_cast<std::size_t>(i)]; }
  std::int64_t numel() const { return node->numel(); }
  std::vector<double>& data() { return node->value; }
  const std::vector<double>& data() const { return node->value; }
  std::vector<double>& grad() {
    node->ensure_grad();
    return node->grad;
  }
  bool requires_grad() const { return node->requires_grad; }
  double item() const;

  std::shared_ptr<TensorNode> node;
};

// When enabled, every op validates that its output is finite and throws
// NumericError otherwise. Off by default (costs a pass over each result).
void set_finite_checks(bool on);
bool finite_checks();

// Reverse-mode sweep from a scalar root. Gradients accumulate additively
// into every reachable node with requires_grad set.
void backward(const Tensor& root);

// ---- ops ----
Tensor matmul(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double c);
// (N, d) + (d): adds the vector to every row. Explicit rank-matching helper;
// there is no implicit broadcasting anywhere.
Tensor add_rows(const Tensor& m, const Tensor& row);
// (N, d) with row i scaled by v[i]; v is length N.
Tensor scale_rows(const Tensor& m, const Tensor& v);
Tensor sigmoid(const Tensor& a);
Tensor tanh(const Tensor& a);
// softmax along `axis` (0 or 1) of a 2-D tensor; -1 = last axis
Tensor softmax(const Tensor& a, int axis = -1);
// layer normalization along `axis` of a 2-D tensor (no affine parameters)
Tensor layer_norm(const Tensor& a, int axis = -1, double eps = 1e-5);
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);
Tensor concat(const std::vector<Tensor>& parts, int axis);
Tensor slice(const Tensor& a, int axis, int begin, int end);
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);

// ---- parameters & optimizer ----

struct ParamStore {
  // insertion-ordered so checkpoints serialize deterministically
  std::vector<std::pair<std::string, Tensor>> items;
  std::map<std::string, std::size_t> index;

  Tensor& add(const std::string& name, Tensor t);
  Tensor& at(const std::string& name);
  const Tensor& at(const std::string& name) const;
  bool contains(const std::string& name) const;
  void zero_grad();
  double grad_norm() const;
  // scales all gradients so their global norm is at most max_norm;
  // returns true when clipping actually fired
  bool clip_grad_norm(double max_norm);
  std::int64_t param_count() const;
};

class Adam {
public:
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  explicit Adam(double lr_ = 1e-3) : lr(lr_) {}
  void step(ParamStore& params);

private:
  struct State {
    std::vector<double> m, v;
  };
  std::map<std::string, State> state_;
  std::int64_t t_ = 0;
};

}  // namespace t2l
