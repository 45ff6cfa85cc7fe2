#include "ball3d/nn/adam.hpp"

#include <cmath>

#include "ball3d/errors.hpp"

namespace ball3d::nn {

AdamState::AdamState(const ParameterSet& params, double lr_) : lr(lr_) {
    for (const Parameter& p : params) {
        m.push_back(Matrix::Zero(p.tensor.values.rows(), p.tensor.values.cols()));
        v.push_back(Matrix::Zero(p.tensor.values.rows(), p.tensor.values.cols()));
    }
}

void adam_step(AdamState& state, ParameterSet& params, const GradientStore& grads) {
    const auto n = static_cast<std::size_t>(params.size());
    if (state.m.size() != n || state.v.size() != n || static_cast<std::size_t>(grads.size()) != n) {
        throw ShapeMismatch("adam_step: optimizer state does not match the parameter set");
    }
    for (int id = 0; id < params.size(); ++id) {
        const Matrix& w = params.value(id);
        const Matrix& gr = grads[id];
        const auto k = static_cast<std::size_t>(id);
        if (gr.rows() != w.rows() || gr.cols() != w.cols() || state.m[k].rows() != w.rows() ||
            state.m[k].cols() != w.cols()) {
            throw ShapeMismatch("adam_step: shape mismatch for " + params[id].name);
        }
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
    for (int id = 0; id < params.size(); ++id) {
        const auto k = static_cast<std::size_t>(id);
        const auto g = grads[id].array();
        state.m[k].array() = state.beta1 * state.m[k].array() + (1.0 - state.beta1) * g;
        state.v[k].array() = state.beta2 * state.v[k].array() + (1.0 - state.beta2) * g.square();
        params.value(id).array() -=
            state.lr * (state.m[k].array() / c1) / ((state.v[k].array() / c2).sqrt() + state.eps);
    }
}

}  // namespace ball3d::nn
