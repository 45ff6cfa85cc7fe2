#pragma once

#include <string>
#include <vector>

#include "ball3d/nn/graph.hpp"
#include "ball3d/rng.hpp"

namespace ball3d::nn {

enum class Direction { Forward, Backward };

/// Parameter ids of one LSTM layer inside a ParameterSet.
struct LstmLayerParams {
    int w_ih = -1;  ///< 4H x input_size
    int w_hh = -1;  ///< 4H x H
    int bias = -1;  ///< 4H x 1
    Index input_size = 0;
    Index hidden_size = 0;
    Direction direction = Direction::Forward;

    static LstmLayerParams create(ParameterSet& params, const std::string& prefix, Index input_size,
                                  Index hidden_size, Direction direction);
};

/// Runs a whole layer over `x` (input_size x L). Backward layers read the sequence right to
/// left; their outputs stay aligned with the input columns.
Var lstm_forward(Graph& g, const ParameterSet& params, const LstmLayerParams& layer, Var x);

/// Three bidirectional layers; layer 2 consumes layer1_out + layer0_out.
struct BiLstmStack {
    std::vector<LstmLayerParams> forward;
    std::vector<LstmLayerParams> backward;
    Index input_size = 0;
    Index hidden_size = 0;

    static constexpr int kLayers = 3;

    static BiLstmStack create(ParameterSet& params, const std::string& prefix, Index input_size,
                              Index hidden_size = 64);
    Index output_size() const { return 2 * hidden_size; }

    /// x: input_size x L  ->  2H x L (forward rows first).
    Var run(Graph& g, const ParameterSet& params, Var x) const;
};

/// Shortcut wiring of a unidirectional stack.
enum class Residual {
    None,   ///< plain chain
    Dense,  ///< layer k >= 2 consumes the sum of every earlier layer's output
};

/// Recurrent state of a UniLstmStack, one [h; c] pair per layer.
struct StackState {
    std::vector<Var> h;
    std::vector<Var> c;
};

struct UniLstmStack {
    std::vector<LstmLayerParams> layers;
    Residual residual = Residual::None;
    Index input_size = 0;
    Index hidden_size = 0;

    static UniLstmStack create(ParameterSet& params, const std::string& prefix, Index input_size,
                               int num_layers, Index hidden_size, Residual residual);
    Index output_size() const { return hidden_size; }

    /// Whole-sequence evaluation (inputs known in advance).
    Var run(Graph& g, const ParameterSet& params, Var x) const;

    StackState initial_state(Graph& g) const;
    /// One time step for autoregressive use; `x` is input_size x 1. Returns the top hidden state.
    Var step(Graph& g, const ParameterSet& params, Var x, StackState& state) const;
};

enum class OutputActivation { Linear, Sigmoid };

struct MlpHead {
    std::vector<int> weights;
    std::vector<int> biases;
    std::vector<Index> sizes;  ///< input size followed by each layer's width
    OutputActivation output = OutputActivation::Linear;

    static constexpr double kLeakySlope = 0.01;

    static MlpHead create(ParameterSet& params, const std::string& prefix, std::vector<Index> sizes,
                          OutputActivation output);
    Index output_size() const { return sizes.back(); }

    /// Applies the head to every column of `x`.
    Var run(Graph& g, const ParameterSet& params, Var x) const;
};

/// Default initialisation: LSTM tensors uniform in +-1/sqrt(hidden), dense layers uniform in
/// +-1/sqrt(fan_in). Parameters are visited in id order so the result depends only on `rng`.
void initialize_uniform(ParameterSet& params, Rng& rng);

}  // namespace ball3d::nn
