#pragma once

#include <cstdint>
#include <vector>

#include "ball3d/nn/tensor.hpp"

namespace ball3d::nn {

struct AdamState {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    std::int64_t step = 0;
    std::vector<Matrix> m;
    std::vector<Matrix> v;

    AdamState() = default;
    explicit AdamState(const ParameterSet& params, double lr_ = 1e-3);
};

/// One bias-corrected Adam update of every parameter. Throws ShapeMismatch when the
/// moments or gradients do not mirror `params`.
void adam_step(AdamState& state, ParameterSet& params, const GradientStore& grads);

}  // namespace ball3d::nn
