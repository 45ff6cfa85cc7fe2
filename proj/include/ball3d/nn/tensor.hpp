#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace ball3d::nn {

using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Dense float64 tensor of rank 1 or 2, stored column-major.
///
/// `shape` is the logical shape; values are held as a shape[0] x product(rest) matrix
/// so Eigen kernels operate on them directly.
struct Tensor {
    std::vector<Index> shape;
    Matrix values;
    Matrix grad;  ///< empty, or the same shape as values

    Tensor() = default;
    explicit Tensor(std::vector<Index> shape_);

    Index size() const { return values.size(); }
    bool has_grad() const { return grad.size() != 0; }
    void ensure_grad();
    void check() const;  ///< throws ShapeMismatch when buffers disagree with `shape`
};

struct Parameter {
    std::string name;
    Tensor tensor;
};

/// Ordered, named parameter collection; a parameter's id is its position.
class ParameterSet {
public:
    int add(std::string name, std::vector<Index> shape);
    int find(const std::string& name) const;  ///< -1 when absent

    Parameter& operator[](int id) { return params_[static_cast<std::size_t>(id)]; }
    const Parameter& operator[](int id) const { return params_[static_cast<std::size_t>(id)]; }
    const Matrix& value(int id) const { return params_[static_cast<std::size_t>(id)].tensor.values; }
    Matrix& value(int id) { return params_[static_cast<std::size_t>(id)].tensor.values; }

    int size() const { return static_cast<int>(params_.size()); }
    Index scalar_count() const;
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    void set_zero();

private:
    std::vector<Parameter> params_;
};

/// Gradient accumulator aligned with a ParameterSet.
class GradientStore {
public:
    GradientStore() = default;
    explicit GradientStore(const ParameterSet& params);

    Matrix& operator[](int id) { return grads_[static_cast<std::size_t>(id)]; }
    const Matrix& operator[](int id) const { return grads_[static_cast<std::size_t>(id)]; }
    int size() const { return static_cast<int>(grads_.size()); }

    void set_zero();
    void scale(double factor);
    GradientStore& operator+=(const GradientStore& other);
    bool all_finite() const;

private:
    std::vector<Matrix> grads_;
};

}  // namespace ball3d::nn
