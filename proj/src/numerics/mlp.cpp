#include "diif/numerics/mlp.hpp"

#include <utility>

#include "diif/errors.hpp"

namespace diif {

template <typename T>
Matrix<T> mlp_forward(std::span<const Layer<T>> layers, Matrix<T> input, OutputActivation last,
                      std::type_identity_t<MlpCache<T>>* cache, MacCounter* counter) {
  if (cache != nullptr) {
    cache->inputs.resize(layers.size());
    cache->outputs.resize(layers.size());
  }
  Matrix<T> x = std::move(input);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer<T>& layer = layers[l];
    Matrix<T> y;
    matmul_add_bias_into(x, layer.weight, std::span<const T>(layer.bias), y, counter);
    const bool is_last = l + 1 == layers.size();
    if (!is_last || last == OutputActivation::relu) relu_inplace(y);
    if (cache != nullptr) {
      cache->inputs[l] = std::move(x);
      cache->outputs[l] = y;
    }
    x = std::move(y);
  }
  return x;
}

template <typename T>
Matrix<T> mlp_backward(std::span<const Layer<T>> layers, const MlpCache<T>& cache, Matrix<T> dy,
                       OutputActivation last, std::span<Layer<T>> grads, bool want_input_grad) {
  if (cache.inputs.size() != layers.size() || cache.outputs.size() != layers.size()) {
    throw StateError("backward called without a matching forward cache");
  }
  if (grads.size() != layers.size()) throw ShapeError("gradient buffer layer count mismatch");
  for (std::size_t l = layers.size(); l-- > 0;) {
    const bool is_last = l + 1 == layers.size();
    if (!is_last || last == OutputActivation::relu) relu_backward_inplace(cache.outputs[l], dy);
    Matrix<T> dx;
    const bool need_dx = l > 0 || want_input_grad;
    linear_backward(cache.inputs[l], layers[l].weight, dy, grads[l].weight,
                    std::span<T>(grads[l].bias), need_dx ? &dx : nullptr);
    dy = std::move(dx);
  }
  return dy;
}

template <typename T>
std::vector<Layer<T>> zeros_like(std::span<const Layer<T>> layers) {
  std::vector<Layer<T>> out;
  out.reserve(layers.size());
  for (const auto& l : layers) out.emplace_back(l.in(), l.out());
  return out;
}

namespace {

template <typename T>
std::size_t macs_of(std::span<const Layer<T>> layers) noexcept {
  std::size_t n = 0;
  for (const auto& l : layers) n += l.in() * l.out();
  return n;
}

}  // namespace

std::size_t forward_macs(std::span<const Layer<float>> layers) noexcept { return macs_of(layers); }
std::size_t forward_macs(std::span<const Layer<double>> layers) noexcept { return macs_of(layers); }

#define DIIF_INSTANTIATE_MLP(T)                                                                \
  template Matrix<T> mlp_forward<T>(std::span<const Layer<T>>, Matrix<T>, OutputActivation,    \
                                    MlpCache<T>*, MacCounter*);                                \
  template Matrix<T> mlp_backward<T>(std::span<const Layer<T>>, const MlpCache<T>&, Matrix<T>, \
                                     OutputActivation, std::span<Layer<T>>, bool);             \
  template std::vector<Layer<T>> zeros_like<T>(std::span<const Layer<T>>);

DIIF_INSTANTIATE_MLP(float)
DIIF_INSTANTIATE_MLP(double)

#undef DIIF_INSTANTIATE_MLP

}  // namespace diif
