#pragma once

#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "ball3d/nn/tensor.hpp"

namespace ball3d::nn {

class Graph;

/// Handle to a node of a Graph.
struct Var {
    Graph* graph = nullptr;
    int id = -1;

    const Matrix& value() const;
    Index rows() const { return value().rows(); }
    Index cols() const { return value().cols(); }
    double scalar() const { return value()(0, 0); }
};

/// Reverse-mode tape. Nodes are appended in evaluation order, so a reverse sweep
/// visits every consumer before its inputs.
class Graph {
public:
    using Backward = std::function<void(Graph&, int self)>;

    Var constant(Matrix value);
    Var constant_scalar(double value);
    /// Leaf bound to parameter `id`; the ParameterSet must outlive the graph unchanged.
    /// Repeated requests for the same parameter return the same node.
    Var parameter(const ParameterSet& params, int id);

    /// Appends an op node. `backward` runs only when some input requires a gradient.
    Var record(Matrix value, std::initializer_list<Var> inputs, Backward backward);
    Var record(Matrix value, std::span<const Var> inputs, Backward backward);

    const Matrix& value(int id) const;
    bool requires_grad(int id) const { return nodes_[static_cast<std::size_t>(id)].requires_grad; }
    /// Gradient buffer of node `id`, zero-initialised on first access.
    Matrix& grad(int id);

    /// Propagates d(loss)/d(node) to every node and adds parameter gradients into `grads`.
    /// Throws GraphNotRecorded if `loss` is not a 1x1 node of this graph or the tape was
    /// already consumed.
    void backward(Var loss, GradientStore& grads);

    std::size_t size() const { return nodes_.size(); }

private:
    struct Node {
        Matrix value;
        const Matrix* external = nullptr;
        Matrix grad;
        Backward backward;
        int param = -1;
        bool requires_grad = false;
    };

    std::deque<Node> nodes_;
    const ParameterSet* bound_params_ = nullptr;
    std::vector<int> param_nodes_;
    bool consumed_ = false;
};

// ---- ops ---------------------------------------------------------------------------

Var matmul(Var a, Var b);
/// weight * x + bias, with bias (rows x 1) broadcast across columns.
Var linear(Var weight, Var x, Var bias);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var hadamard(Var a, Var b);
Var scale(Var a, double factor);
/// Elementwise a * mul + offset with constant coefficient matrices of a's shape.
Var affine(Var a, const Matrix& mul, const Matrix& offset);
Var sigmoid(Var a);
Var tanh(Var a);
Var leaky_relu(Var a, double slope = 0.01);
Var concat_rows(std::span<const Var> parts);
Var concat_cols(std::span<const Var> parts);
Var slice_rows(Var a, Index start, Index count);
Var slice_cols(Var a, Index start, Index count);
Var sum(Var a);
Var square(Var a);

/// Full-sequence LSTM layer (columns are time steps) with zero initial state.
/// Gate rows are ordered input, forget, cell, output. `reverse` runs right to left.
Var lstm_sequence(Var x, Var w_ih, Var w_hh, Var bias, bool reverse);

/// One LSTM step. Returns the new hidden and cell state as a single [h; c] column.
Var lstm_cell(Var x, Var h, Var c, Var w_ih, Var w_hh, Var bias);

// ---- losses ------------------------------------------------------------------------

/// -(1/N) sum(gamma * t * log p + (1 - gamma) * (1 - t) * log(1 - p)), p clamped to [clamp, 1-clamp].
Var weighted_bce(Var prob, const Matrix& target, double gamma, double clamp = 1e-7);
/// (1/N) sum_t ||target_t - pred_t||^2 over columns.
Var mean_squared_distance(Var pred, const Matrix& target);
/// Mean of y^2 over entries with y < 0; zero when there are none.
Var below_ground(Var y);

}  // namespace ball3d::nn
