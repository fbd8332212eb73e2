#include "diif/numerics/adam.hpp"

#include <cmath>

#include "diif/errors.hpp"

namespace diif {

template <typename T>
void adam_step(std::span<const ParamView<T>> params, AdamState& state) {
  if (!(state.beta1 > 0.0 && state.beta1 < 1.0) || !(state.beta2 > 0.0 && state.beta2 < 1.0)) {
    throw ArgumentError("Adam betas must lie in (0, 1)");
  }
  if (state.step < 0) throw ArgumentError("Adam step must be non-negative");

  if (state.first_moment.empty()) {
    state.first_moment.resize(params.size());
    state.second_moment.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.first_moment[p].assign(params[p].value.size(), 0.0);
      state.second_moment[p].assign(params[p].value.size(), 0.0);
    }
  }
  if (state.first_moment.size() != params.size()) {
    throw ShapeError("Adam state tracks " + std::to_string(state.first_moment.size()) +
                     " tensors, got " + std::to_string(params.size()));
  }
  for (std::size_t p = 0; p < params.size(); ++p) {
    const auto& pv = params[p];
    if (pv.grad.size() != pv.value.size() || state.first_moment[p].size() != pv.value.size()) {
      throw ShapeError("Adam shape mismatch for parameter '" + pv.name + "'");
    }
    for (T g : pv.grad) {
      if (!std::isfinite(static_cast<double>(g))) {
        throw TrainingError(pv.name, "non-finite gradient");
      }
    }
  }

  const std::int64_t t = state.step + 1;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(t));
  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& m = state.first_moment[p];
    auto& v = state.second_moment[p];
    const auto& pv = params[p];
    for (std::size_t i = 0; i < pv.value.size(); ++i) {
      const double g = static_cast<double>(pv.grad[i]);
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g;
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      pv.value[i] = static_cast<T>(static_cast<double>(pv.value[i]) -
                                   state.lr * m_hat / (std::sqrt(v_hat) + state.eps));
    }
  }
  state.step = t;
}

template void adam_step<float>(std::span<const ParamView<float>>, AdamState&);
template void adam_step<double>(std::span<const ParamView<double>>, AdamState&);

}  // namespace diif
