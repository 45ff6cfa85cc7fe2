#include "ball3d/nn/layers.hpp"

#include <cmath>

#include "ball3d/errors.hpp"

namespace ball3d::nn {

LstmLayerParams LstmLayerParams::create(ParameterSet& params, const std::string& prefix,
                                        Index input_size, Index hidden_size, Direction direction) {
    if (input_size <= 0 || hidden_size <= 0) throw InvalidArgument("LSTM sizes must be positive");
    LstmLayerParams p;
    p.w_ih = params.add(prefix + ".w_ih", {4 * hidden_size, input_size});
    p.w_hh = params.add(prefix + ".w_hh", {4 * hidden_size, hidden_size});
    p.bias = params.add(prefix + ".bias", {4 * hidden_size});
    p.input_size = input_size;
    p.hidden_size = hidden_size;
    p.direction = direction;
    return p;
}

Var lstm_forward(Graph& g, const ParameterSet& params, const LstmLayerParams& layer, Var x) {
    if (x.rows() != layer.input_size) throw ShapeMismatch("lstm_forward: input width differs");
    return lstm_sequence(x, g.parameter(params, layer.w_ih), g.parameter(params, layer.w_hh),
                         g.parameter(params, layer.bias), layer.direction == Direction::Backward);
}

BiLstmStack BiLstmStack::create(ParameterSet& params, const std::string& prefix, Index input_size,
                                Index hidden_size) {
    BiLstmStack s;
    s.input_size = input_size;
    s.hidden_size = hidden_size;
    for (int k = 0; k < kLayers; ++k) {
        const Index in = k == 0 ? input_size : 2 * hidden_size;
        const std::string name = prefix + ".bilstm" + std::to_string(k);
        s.forward.push_back(LstmLayerParams::create(params, name + ".fwd", in, hidden_size, Direction::Forward));
        s.backward.push_back(LstmLayerParams::create(params, name + ".bwd", in, hidden_size, Direction::Backward));
    }
    return s;
}

Var BiLstmStack::run(Graph& g, const ParameterSet& params, Var x) const {
    if (x.rows() != input_size) throw ShapeMismatch("BiLstmStack: input width differs");
    Var in = x;
    Var first{};
    for (int k = 0; k < kLayers; ++k) {
        if (k == 2) in = add(in, first);
        const Var both[] = {lstm_forward(g, params, forward[k], in), lstm_forward(g, params, backward[k], in)};
        in = concat_rows(both);
        if (k == 0) first = in;
    }
    return in;
}

UniLstmStack UniLstmStack::create(ParameterSet& params, const std::string& prefix, Index input_size,
                                  int num_layers, Index hidden_size, Residual residual) {
    if (num_layers < 1) throw InvalidArgument("stack needs at least one layer");
    UniLstmStack s;
    s.input_size = input_size;
    s.hidden_size = hidden_size;
    s.residual = residual;
    for (int k = 0; k < num_layers; ++k) {
        const Index in = k == 0 ? input_size : hidden_size;
        s.layers.push_back(LstmLayerParams::create(params, prefix + ".lstm" + std::to_string(k), in,
                                                   hidden_size, Direction::Forward));
    }
    return s;
}

namespace {

/// Input of layer `k` given the outputs of layers 0..k-1.
Var layer_input(const std::vector<Var>& outputs, std::size_t k, Residual residual, Var x) {
    if (k == 0) return x;
    Var in = outputs[k - 1];
    if (residual == Residual::Dense && k >= 2) {
        for (std::size_t j = 0; j + 1 < k; ++j) in = add(in, outputs[j]);
    }
    return in;
}

}  // namespace

Var UniLstmStack::run(Graph& g, const ParameterSet& params, Var x) const {
    if (x.rows() != input_size) throw ShapeMismatch("UniLstmStack: input width differs");
    std::vector<Var> outputs;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        outputs.push_back(lstm_forward(g, params, layers[k], layer_input(outputs, k, residual, x)));
    }
    return outputs.back();
}

StackState UniLstmStack::initial_state(Graph& g) const {
    StackState s;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        s.h.push_back(g.constant(Matrix::Zero(hidden_size, 1)));
        s.c.push_back(g.constant(Matrix::Zero(hidden_size, 1)));
    }
    return s;
}

Var UniLstmStack::step(Graph& g, const ParameterSet& params, Var x, StackState& state) const {
    if (x.rows() != input_size || x.cols() != 1) throw ShapeMismatch("UniLstmStack::step: bad input");
    std::vector<Var> outputs;
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const LstmLayerParams& L = layers[k];
        const Var hc = lstm_cell(layer_input(outputs, k, residual, x), state.h[k], state.c[k],
                                 g.parameter(params, L.w_ih), g.parameter(params, L.w_hh),
                                 g.parameter(params, L.bias));
        state.h[k] = slice_rows(hc, 0, hidden_size);
        state.c[k] = slice_rows(hc, hidden_size, hidden_size);
        outputs.push_back(state.h[k]);
    }
    return outputs.back();
}

MlpHead MlpHead::create(ParameterSet& params, const std::string& prefix, std::vector<Index> sizes,
                        OutputActivation output) {
    if (sizes.size() < 2) throw InvalidArgument("MLP needs an input and at least one layer");
    MlpHead m;
    m.sizes = std::move(sizes);
    m.output = output;
    for (std::size_t k = 0; k + 1 < m.sizes.size(); ++k) {
        const std::string name = prefix + ".fc" + std::to_string(k);
        m.weights.push_back(params.add(name + ".weight", {m.sizes[k + 1], m.sizes[k]}));
        m.biases.push_back(params.add(name + ".bias", {m.sizes[k + 1]}));
    }
    return m;
}

Var MlpHead::run(Graph& g, const ParameterSet& params, Var x) const {
    if (x.rows() != sizes.front()) throw ShapeMismatch("MlpHead: input width differs");
    Var y = x;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        y = linear(g.parameter(params, weights[k]), y, g.parameter(params, biases[k]));
        if (k + 1 < weights.size()) {
            y = leaky_relu(y, kLeakySlope);
        } else if (output == OutputActivation::Sigmoid) {
            y = sigmoid(y);
        }
    }
    return y;
}

void initialize_uniform(ParameterSet& params, Rng& rng) {
    // LSTM tensors are recognised by name; a dense bias shares its weight's fan-in.
    Index fan_in = 1;
    for (int id = 0; id < params.size(); ++id) {
        Parameter& p = params[id];
        const bool lstm = p.name.find(".lstm") != std::string::npos ||
                          p.name.find(".bilstm") != std::string::npos;
        double bound;
        if (lstm) {
            bound = 1.0 / std::sqrt(static_cast<double>(p.tensor.values.rows() / 4));
        } else {
            if (p.tensor.shape.size() == 2) fan_in = p.tensor.shape[1];
            bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        }
        for (Index i = 0; i < p.tensor.values.size(); ++i) p.tensor.values(i) = uniform(rng, -bound, bound);
    }
}

}  // namespace ball3d::nn
