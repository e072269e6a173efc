#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace nmc {

// Row-major float32 buffer. Leaf tensors (parameters, constants) have no
// owner; activation tensors are tagged with the graph that produced them.
struct Tensor {
  std::vector<size_t> shape;
  std::vector<float> data;
  std::vector<float> grad;  // allocated on first use
  bool requires_grad = false;
  const void* owner = nullptr;

  size_t numel() const {
    size_t n = 1;
    for (size_t d : shape) n *= d;
    return n;
  }
  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
  }
  void zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
  }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(std::vector<size_t> shape, bool requires_grad = false);

std::string shape_str(const std::vector<size_t>& shape);

// Reverse-mode tape. One graph per forward/backward pass; a graph and its
// activations stay on a single thread.
class Graph {
 public:
  explicit Graph(bool grad_enabled = true) : grad_enabled_(grad_enabled) {}

  bool grad_enabled() const { return grad_enabled_; }

  TensorPtr make(std::vector<size_t> shape, bool requires_grad) {
    TensorPtr t = make_tensor(std::move(shape), requires_grad);
    t->owner = this;
    return t;
  }

  void record(std::function<void()> backward_fn) {
    tape_.push_back(std::move(backward_fn));
  }

  // Seeds d(loss)/d(loss) = 1 and runs the tape in reverse. Throws op_error
  // when loss is not a scalar produced by this graph with a grad path, or
  // when called a second time.
  void backward(const TensorPtr& loss);

 private:
  std::vector<std::function<void()>> tape_;
  bool grad_enabled_;
  bool backward_done_ = false;
};

}  // namespace nmc
