#pragma once

#include <stdexcept>
#include <string>

namespace nmc {

// Failure categories map to documented CLI exit codes: data 2, config 3.
struct data_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct config_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Contract violations inside the numeric core (shape mismatch, reused graph,
// non-finite op output). Not reachable from well-formed CLI input.
struct op_error : std::logic_error {
  using std::logic_error::logic_error;
};

}  // namespace nmc
