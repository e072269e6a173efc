#include "nmc/tensor.hpp"

#include <sstream>

#include "nmc/error.hpp"

namespace nmc {

TensorPtr make_tensor(std::vector<size_t> shape, bool requires_grad) {
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->data.assign(t->numel(), 0.0f);
  t->requires_grad = requires_grad;
  return t;
}

std::string shape_str(const std::vector<size_t>& shape) {
  std::ostringstream out;
  out << "[";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ",";
    out << shape[i];
  }
  out << "]";
  return out.str();
}

void Graph::backward(const TensorPtr& loss) {
  if (backward_done_) throw op_error("backward called twice on one graph");
  if (!loss || loss->owner != this)
    throw op_error("loss was not produced by this graph");
  if (loss->numel() != 1)
    throw op_error("backward requires a scalar, got " + shape_str(loss->shape));
  if (!loss->requires_grad)
    throw op_error("loss has no gradient path (detached)");
  backward_done_ = true;
  loss->ensure_grad();
  loss->grad[0] = 1.0f;
  for (auto it = tape_.rbegin(); it != tape_.rend(); ++it) (*it)();
}

}  // namespace nmc
