#pragma once

#include <functional>

namespace typei {

// A forward value together with its vector-Jacobian product: backward(g)
// maps a gradient with respect to `value` onto the input.
template <class Input, class Output>
struct Pullback {
  Output value;
  std::function<Input(const Output&)> backward;
};

}  // namespace typei
