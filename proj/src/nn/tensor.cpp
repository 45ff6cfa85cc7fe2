#include "ball3d/nn/tensor.hpp"

#include <numeric>

#include "ball3d/errors.hpp"

namespace ball3d::nn {
namespace {

std::pair<Index, Index> matrix_extents(const std::vector<Index>& shape) {
    if (shape.empty() || shape.size() > 2) {
        throw ShapeMismatch("tensors must have rank 1 or 2");
    }
    return {shape[0], shape.size() == 2 ? shape[1] : 1};
}

}  // namespace

Tensor::Tensor(std::vector<Index> shape_) : shape(std::move(shape_)) {
    const auto [r, c] = matrix_extents(shape);
    values = Matrix::Zero(r, c);
}

void Tensor::ensure_grad() {
    if (!has_grad()) grad = Matrix::Zero(values.rows(), values.cols());
}

void Tensor::check() const {
    const auto [r, c] = matrix_extents(shape);
    if (values.rows() != r || values.cols() != c) {
        throw ShapeMismatch("tensor values do not match its shape");
    }
    if (has_grad() && (grad.rows() != r || grad.cols() != c)) {
        throw ShapeMismatch("tensor gradient does not match its shape");
    }
}

int ParameterSet::add(std::string name, std::vector<Index> shape) {
    if (find(name) >= 0) {
        throw InvalidArgument("duplicate parameter name " + name);
    }
    params_.push_back({std::move(name), Tensor(std::move(shape))});
    return static_cast<int>(params_.size()) - 1;
}

int ParameterSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name == name) return static_cast<int>(i);
    }
    return -1;
}

Index ParameterSet::scalar_count() const {
    return std::accumulate(params_.begin(), params_.end(), Index{0},
                           [](Index acc, const Parameter& p) { return acc + p.tensor.size(); });
}

void ParameterSet::set_zero() {
    for (auto& p : params_) p.tensor.values.setZero();
}

GradientStore::GradientStore(const ParameterSet& params) {
    grads_.reserve(static_cast<std::size_t>(params.size()));
    for (const auto& p : params) {
        grads_.push_back(Matrix::Zero(p.tensor.values.rows(), p.tensor.values.cols()));
    }
}

void GradientStore::set_zero() {
    for (auto& g : grads_) g.setZero();
}

void GradientStore::scale(double factor) {
    for (auto& g : grads_) g *= factor;
}

GradientStore& GradientStore::operator+=(const GradientStore& other) {
    if (other.grads_.size() != grads_.size()) {
        throw ShapeMismatch("gradient stores belong to different parameter sets");
    }
    for (std::size_t i = 0; i < grads_.size(); ++i) grads_[i] += other.grads_[i];
    return *this;
}

bool GradientStore::all_finite() const {
    for (const auto& g : grads_) {
        if (!g.allFinite()) return false;
    }
    return true;
}

}  // namespace ball3d::nn
