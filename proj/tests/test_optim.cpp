#include <cmath>

#include "doctest.h"
#include "nmc/error.hpp"
#include "nmc/optim.hpp"
#include "nmc/tensor.hpp"

using nmc::AdamW;
using nmc::AdamWConfig;
using nmc::TensorPtr;

namespace {

TensorPtr param(float value) {
  TensorPtr t = nmc::make_tensor({1}, true);
  t->data[0] = value;
  t->ensure_grad();
  return t;
}

}  // namespace

TEST_CASE("constant unit gradient moves the weight by about lr each step") {
  TensorPtr w = param(1.0f);
  AdamWConfig config;
  config.lr = 0.1f;
  config.weight_decay = 0.0f;
  AdamW opt({w}, config);

  w->grad[0] = 1.0f;
  opt.step();
  // mhat = vhat = 1 after bias correction, so the step is lr/(1+eps).
  CHECK(w->data[0] == doctest::Approx(0.9).epsilon(1e-6));

  w->grad[0] = 1.0f;
  opt.step();
  CHECK(w->data[0] == doctest::Approx(0.8).epsilon(1e-5));
  CHECK(opt.step_count() == 2);
}

TEST_CASE("zero gradient leaves only decoupled decay") {
  TensorPtr w = param(1.0f);
  AdamWConfig config;
  config.lr = 0.1f;
  config.weight_decay = 0.1f;
  AdamW opt({w}, config);

  w->grad[0] = 0.0f;
  opt.step();
  CHECK(w->data[0] == doctest::Approx(0.99).epsilon(1e-6));
}

TEST_CASE("decay applies to the pre-update weight alongside the step") {
  TensorPtr w = param(1.0f);
  AdamWConfig config;
  config.lr = 0.1f;
  config.weight_decay = 0.5f;
  AdamW opt({w}, config);

  w->grad[0] = 1.0f;
  opt.step();
  // 1 - 0.1*1 - 0.1*0.5*1
  CHECK(w->data[0] == doctest::Approx(0.85).epsilon(1e-5));
}

TEST_CASE("missing gradient is an error") {
  TensorPtr w = nmc::make_tensor({2}, true);  // grad never allocated
  AdamW opt({w}, AdamWConfig{});
  CHECK_THROWS_AS(opt.step(), nmc::op_error);
}

TEST_CASE("zero_grad clears accumulated gradients") {
  TensorPtr w = param(1.0f);
  w->grad[0] = 7.0f;
  AdamW opt({w}, AdamWConfig{});
  opt.zero_grad();
  CHECK(w->grad[0] == 0.0f);
}

TEST_CASE("negative gradients move the weight up") {
  TensorPtr w = param(1.0f);
  AdamWConfig config;
  config.lr = 0.05f;
  config.weight_decay = 0.0f;
  AdamW opt({w}, config);
  w->grad[0] = -2.0f;
  opt.step();
  CHECK(w->data[0] == doctest::Approx(1.05).epsilon(1e-5));
}
