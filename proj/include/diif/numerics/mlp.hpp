#pragma once

#include <cstddef>
#include <span>
#include <type_traits>
#include <vector>

#include "diif/numerics/matrix.hpp"

namespace diif {

/// One linear layer: weight is [in x out], bias has `out` entries.
template <typename T>
struct Layer {
  Matrix<T> weight;
  std::vector<T> bias;

  Layer() = default;
  Layer(std::size_t in, std::size_t out) : weight(in, out), bias(out, T{0}) {}

  std::size_t in() const noexcept { return weight.rows(); }
  std::size_t out() const noexcept { return weight.cols(); }
  std::size_t parameter_count() const noexcept { return weight.size() + bias.size(); }

  template <typename U>
  Layer<U> cast() const {
    Layer<U> l;
    l.weight = weight.template cast<U>();
    l.bias.assign(bias.begin(), bias.end());
    return l;
  }

  friend bool operator==(const Layer&, const Layer&) = default;
};

/// Whether the last layer of a stack is followed by ReLU.
enum class OutputActivation { relu, linear };

/// Per-layer activations kept for the backward pass. inputs[l] feeds layer l;
/// outputs[l] is layer l's post-activation output.
template <typename T>
struct MlpCache {
  std::vector<Matrix<T>> inputs;
  std::vector<Matrix<T>> outputs;
};

template <typename T>
Matrix<T> mlp_forward(std::span<const Layer<T>> layers, Matrix<T> input, OutputActivation last,
                      std::type_identity_t<MlpCache<T>>* cache = nullptr, MacCounter* counter = nullptr);

/// Propagates dy back through the stack, accumulating into grads (shaped like
/// layers). Returns the gradient with respect to the stack input.
template <typename T>
Matrix<T> mlp_backward(std::span<const Layer<T>> layers, const MlpCache<T>& cache, Matrix<T> dy,
                       OutputActivation last, std::span<Layer<T>> grads, bool want_input_grad);

/// Zero-valued layers with the same shapes.
template <typename T>
std::vector<Layer<T>> zeros_like(std::span<const Layer<T>> layers);

std::size_t forward_macs(std::span<const Layer<float>> layers) noexcept;
std::size_t forward_macs(std::span<const Layer<double>> layers) noexcept;

}  // namespace diif
