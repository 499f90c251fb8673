#pragma once

#include <string>
#include <vector>

#include "absa/tensor.hpp"

namespace absa {

// Ordered name -> tensor registry. Collection order is fixed by construction
// so optimizer state and checkpoints line up across runs.
struct NamedParam {
  std::string name;
  Tensor tensor;
};

using ParamList = std::vector<NamedParam>;

}  // namespace absa
