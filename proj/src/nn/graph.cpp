#include "ball3d/nn/graph.hpp"

#include "ball3d/errors.hpp"

namespace ball3d::nn {

const Matrix& Var::value() const { return graph->value(id); }

Var Graph::constant(Matrix value) {
    Node n;
    n.value = std::move(value);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Graph::constant_scalar(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Graph::parameter(const ParameterSet& params, int id) {
    if (bound_params_ == nullptr) {
        bound_params_ = &params;
        param_nodes_.assign(static_cast<std::size_t>(params.size()), -1);
    }
    const bool cacheable = bound_params_ == &params && id >= 0 && id < params.size();
    if (cacheable && param_nodes_[static_cast<std::size_t>(id)] >= 0) {
        return {this, param_nodes_[static_cast<std::size_t>(id)]};
    }
    Node n;
    n.external = &params.value(id);
    n.param = id;
    n.requires_grad = true;
    nodes_.push_back(std::move(n));
    const int node = static_cast<int>(nodes_.size()) - 1;
    if (cacheable) param_nodes_[static_cast<std::size_t>(id)] = node;
    return {this, node};
}

Var Graph::record(Matrix value, std::initializer_list<Var> inputs, Backward backward) {
    return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                  std::move(backward));
}

Var Graph::record(Matrix value, std::span<const Var> inputs, Backward backward) {
    Node n;
    n.value = std::move(value);
    for (const Var& in : inputs) {
        if (in.graph != this) throw GraphNotRecorded("op mixes nodes from different graphs");
        n.requires_grad = n.requires_grad || requires_grad(in.id);
    }
    if (n.requires_grad) n.backward = std::move(backward);
    nodes_.push_back(std::move(n));
    return {this, static_cast<int>(nodes_.size()) - 1};
}

const Matrix& Graph::value(int id) const {
    const Node& n = nodes_[static_cast<std::size_t>(id)];
    return n.external ? *n.external : n.value;
}

Matrix& Graph::grad(int id) {
    Node& n = nodes_[static_cast<std::size_t>(id)];
    if (n.grad.size() == 0) {
        const Matrix& v = value(id);
        n.grad = Matrix::Zero(v.rows(), v.cols());
    }
    return n.grad;
}

void Graph::backward(Var loss, GradientStore& grads) {
    if (consumed_) throw GraphNotRecorded("graph was already differentiated");
    if (loss.graph != this || loss.id < 0 || static_cast<std::size_t>(loss.id) >= nodes_.size()) {
        throw GraphNotRecorded("loss node is not part of this graph");
    }
    const Matrix& lv = value(loss.id);
    if (lv.rows() != 1 || lv.cols() != 1) throw GraphNotRecorded("loss must be a scalar node");
    consumed_ = true;
    if (!requires_grad(loss.id)) return;

    grad(loss.id)(0, 0) = 1.0;
    for (int id = loss.id; id >= 0; --id) {
        Node& n = nodes_[static_cast<std::size_t>(id)];
        if (!n.requires_grad || n.grad.size() == 0) continue;
        if (n.param >= 0) {
            grads[n.param] += n.grad;
        } else if (n.backward) {
            n.backward(*this, id);
        }
        // Inputs always precede their consumers, so this buffer is no longer needed.
        n.grad.resize(0, 0);
    }
}

}  // namespace ball3d::nn
