#include <cmath>
#include <fstream>
#include <functional>

#include <gtest/gtest.h>

#include "ball3d/errors.hpp"
#include "ball3d/nn/adam.hpp"
#include "ball3d/nn/checkpoint.hpp"
#include "ball3d/nn/layers.hpp"
#include "test_support.hpp"

using namespace ball3d;
using namespace ball3d::nn;

namespace {

using LossFn = std::function<Var(Graph&)>;

double relative_error(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6});
}

/// Max relative error between reverse-mode and central-difference gradients over every scalar.
double max_gradient_error(ParameterSet& params, const LossFn& loss, double step = 1e-5) {
    GradientStore grads(params);
    {
        Graph g;
        g.backward(loss(g), grads);
    }
    double worst = 0.0;
    for (int id = 0; id < params.size(); ++id) {
        for (Index k = 0; k < params.value(id).size(); ++k) {
            double& x = params.value(id)(k);
            const double saved = x;
            x = saved + step;
            double up = 0.0;
            {
                Graph g;
                up = loss(g).scalar();
            }
            x = saved - step;
            double down = 0.0;
            {
                Graph g;
                down = loss(g).scalar();
            }
            x = saved;
            worst = std::max(worst, relative_error(grads[id](k), (up - down) / (2.0 * step)));
        }
    }
    return worst;
}

void fill_uniform(ParameterSet& params, Rng& rng, double bound) {
    for (int id = 0; id < params.size(); ++id)
        for (Index k = 0; k < params.value(id).size(); ++k) params.value(id)(k) = uniform(rng, -bound, bound);
}

Matrix random_matrix(Rng& rng, Index rows, Index cols, double bound = 1.0) {
    Matrix m(rows, cols);
    for (Index k = 0; k < m.size(); ++k) m(k) = uniform(rng, -bound, bound);
    return m;
}

/// Projects an arbitrary node onto a scalar with fixed random weights.
Var contract(Graph& g, Var x, const Matrix& weights) { return sum(hadamard(x, g.constant(weights))); }

double sigmoid_ref(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Textbook LSTM written element by element, gate order i, f, g, o.
Matrix lstm_reference(const Matrix& x, const Matrix& w_ih, const Matrix& w_hh, const Matrix& b, bool reverse) {
    const Index hidden = w_hh.cols();
    const Index len = x.cols();
    Matrix out(hidden, len);
    std::vector<double> h(hidden, 0.0), c(hidden, 0.0);
    for (Index step = 0; step < len; ++step) {
        const Index t = reverse ? len - 1 - step : step;
        std::vector<double> pre(4 * hidden);
        for (Index r = 0; r < 4 * hidden; ++r) {
            double acc = b(r, 0);
            for (Index k = 0; k < x.rows(); ++k) acc += w_ih(r, k) * x(k, t);
            for (Index k = 0; k < hidden; ++k) acc += w_hh(r, k) * h[k];
            pre[r] = acc;
        }
        for (Index j = 0; j < hidden; ++j) {
            const double i = sigmoid_ref(pre[j]);
            const double f = sigmoid_ref(pre[hidden + j]);
            const double gg = std::tanh(pre[2 * hidden + j]);
            const double o = sigmoid_ref(pre[3 * hidden + j]);
            c[j] = f * c[j] + i * gg;
            h[j] = o * std::tanh(c[j]);
            out(j, t) = h[j];
        }
    }
    return out;
}

}  // namespace

TEST(Graph, SquareDerivative) {
    ParameterSet p;
    const int x = p.add("x", {1});
    p.value(x)(0) = 3.0;
    GradientStore grads(p);
    Graph g;
    g.backward(sum(square(g.parameter(p, x))), grads);
    EXPECT_DOUBLE_EQ(grads[x](0), 6.0);
}

TEST(Graph, OffPathParameterHasZeroGradient) {
    ParameterSet p;
    const int a = p.add("a", {2});
    const int b = p.add("b", {2});
    p.value(a).setConstant(1.5);
    p.value(b).setConstant(-2.0);
    GradientStore grads(p);
    Graph g;
    g.parameter(p, b);
    g.backward(sum(square(g.parameter(p, a))), grads);
    EXPECT_EQ(grads[b], Matrix::Zero(2, 1));
    EXPECT_EQ(grads[a], Matrix::Constant(2, 1, 3.0));
}

TEST(Graph, FanOutAccumulates) {
    ParameterSet p;
    const int x = p.add("x", {1});
    p.value(x)(0) = 2.0;
    GradientStore grads(p);
    Graph g;
    const Var v = g.parameter(p, x);
    EXPECT_EQ(v.id, g.parameter(p, x).id);
    // x*x + 3x + x^2 -> 4x + 3
    const Var y = add(add(hadamard(v, v), scale(v, 3.0)), square(g.parameter(p, x)));
    g.backward(sum(y), grads);
    EXPECT_DOUBLE_EQ(grads[x](0), 11.0);
}

TEST(Graph, BackwardErrors) {
    ParameterSet p;
    const int x = p.add("x", {3});
    GradientStore grads(p);
    Graph g;
    const Var v = g.parameter(p, x);
    EXPECT_THROW(g.backward(v, grads), GraphNotRecorded);  // not a scalar
    const Var s = sum(v);
    g.backward(s, grads);
    EXPECT_THROW(g.backward(s, grads), GraphNotRecorded);  // tape consumed
    Graph other;
    EXPECT_THROW(other.backward(s, grads), GraphNotRecorded);
}

TEST(Ops, ShapeMismatches) {
    Graph g;
    const Var a = g.constant(Matrix::Zero(2, 3));
    const Var b = g.constant(Matrix::Zero(3, 2));
    EXPECT_THROW(add(a, b), ShapeMismatch);
    EXPECT_THROW(matmul(a, a), ShapeMismatch);
    EXPECT_THROW(slice_rows(a, 1, 2), ShapeMismatch);
    EXPECT_THROW(weighted_bce(a, Matrix::Zero(1, 3), 0.5), ShapeMismatch);
}

TEST(Ops, LeakyReluSlope) {
    Graph g;
    const Var y = leaky_relu(g.constant(Matrix::Constant(1, 1, -1.0)));
    EXPECT_DOUBLE_EQ(y.scalar(), -0.01);
}

TEST(Ops, ElementwiseAndStructuralGradients) {
    Rng rng = make_stream(1, "ops-grad");
    ParameterSet p;
    const int a = p.add("a", {3, 4});
    const int b = p.add("b", {3, 4});
    const int w = p.add("w", {2, 3});
    const int bias = p.add("bias", {2});
    fill_uniform(p, rng, 1.0);
    const Matrix r1 = random_matrix(rng, 2, 4);
    const Matrix r2 = random_matrix(rng, 6, 4);
    const Matrix r3 = random_matrix(rng, 3, 8);
    const Matrix mul = random_matrix(rng, 3, 4);
    const Matrix off = random_matrix(rng, 3, 4);
    const LossFn loss = [&](Graph& g) {
        const Var va = g.parameter(p, a);
        const Var vb = g.parameter(p, b);
        const Var act = add(sigmoid(va), sub(tanh(vb), leaky_relu(hadamard(va, vb))));
        const Var lin = linear(g.parameter(p, w), affine(act, mul, off), g.parameter(p, bias));
        const Var rows[] = {slice_rows(act, 1, 2), lin, matmul(g.parameter(p, w), va)};
        const Var cols[] = {slice_cols(va, 0, 4), scale(vb, -0.7)};
        return add(add(contract(g, lin, r1), contract(g, concat_rows(rows), r2)),
                   add(contract(g, concat_cols(cols), r3), sum(square(slice_cols(vb, 1, 2)))));
    };
    EXPECT_LT(max_gradient_error(p, loss), 1e-6);
}

TEST(Lstm, ZeroWeightsGiveZeroStates) {
    ParameterSet p;
    const auto layer = LstmLayerParams::create(p, "l", 3, 5, Direction::Forward);
    Graph g;
    const Var out = lstm_forward(g, p, layer, g.constant(Matrix::Zero(3, 7)));
    EXPECT_EQ(out.value(), Matrix::Zero(5, 7));
}

TEST(Lstm, MatchesScalarReference) {
    Rng rng = make_stream(2, "lstm-ref");
    for (bool reverse : {false, true}) {
        ParameterSet p;
        const auto layer = LstmLayerParams::create(p, "l", 3, 4, reverse ? Direction::Backward : Direction::Forward);
        fill_uniform(p, rng, 0.8);
        const Matrix x = random_matrix(rng, 3, 9, 2.0);
        Graph g;
        const Var out = lstm_forward(g, p, layer, g.constant(x));
        const Matrix ref = lstm_reference(x, p.value(layer.w_ih), p.value(layer.w_hh), p.value(layer.bias), reverse);
        EXPECT_LT((out.value() - ref).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(Lstm, SingleStepEqualsCell) {
    Rng rng = make_stream(3, "lstm-cell");
    ParameterSet p;
    const auto layer = LstmLayerParams::create(p, "l", 2, 3, Direction::Forward);
    fill_uniform(p, rng, 1.0);
    const Matrix x = random_matrix(rng, 2, 1);
    Graph g;
    const Var seq = lstm_forward(g, p, layer, g.constant(x));
    const Var zero = g.constant(Matrix::Zero(3, 1));
    const Var cell = lstm_cell(g.constant(x), zero, zero, g.parameter(p, layer.w_ih), g.parameter(p, layer.w_hh),
                               g.parameter(p, layer.bias));
    EXPECT_LT((seq.value() - cell.value().topRows(3)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lstm, BackwardOnPalindromeIsReversedForward) {
    Rng rng = make_stream(4, "palindrome");
    ParameterSet p;
    const auto fwd = LstmLayerParams::create(p, "f", 2, 3, Direction::Forward);
    fill_uniform(p, rng, 1.0);
    LstmLayerParams bwd = fwd;
    bwd.direction = Direction::Backward;
    Matrix x = random_matrix(rng, 2, 7);
    for (Index t = 0; t < 3; ++t) x.col(6 - t) = x.col(t);
    Graph g;
    const Matrix a = lstm_forward(g, p, fwd, g.constant(x)).value();
    const Matrix b = lstm_forward(g, p, bwd, g.constant(x)).value();
    EXPECT_LT((a.rowwise().reverse() - b).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Lstm, GradientsMatchFiniteDifferences) {
    Rng rng = make_stream(5, "lstm-grad");
    for (bool reverse : {false, true}) {
        ParameterSet p;
        const auto layer = LstmLayerParams::create(p, "l", 3, 4, reverse ? Direction::Backward : Direction::Forward);
        const int xin = p.add("x", {3, 6});
        fill_uniform(p, rng, 0.9);
        const Matrix r = random_matrix(rng, 4, 6);
        const LossFn loss = [&](Graph& g) { return contract(g, lstm_forward(g, p, layer, g.parameter(p, xin)), r); };
        EXPECT_LT(max_gradient_error(p, loss), 1e-5);
    }
}

TEST(Lstm, CellGradientsMatchFiniteDifferences) {
    Rng rng = make_stream(6, "cell-grad");
    ParameterSet p;
    const auto layer = LstmLayerParams::create(p, "l", 2, 3, Direction::Forward);
    const int x = p.add("x", {2});
    const int h = p.add("h", {3});
    const int c = p.add("c", {3});
    fill_uniform(p, rng, 1.0);
    const Matrix r = random_matrix(rng, 6, 1);
    const LossFn loss = [&](Graph& g) {
        // Two chained steps so the state inputs are exercised through a second cell.
        const Var w_ih = g.parameter(p, layer.w_ih);
        const Var w_hh = g.parameter(p, layer.w_hh);
        const Var b = g.parameter(p, layer.bias);
        const Var s1 = lstm_cell(g.parameter(p, x), g.parameter(p, h), g.parameter(p, c), w_ih, w_hh, b);
        const Var s2 = lstm_cell(g.parameter(p, x), slice_rows(s1, 0, 3), slice_rows(s1, 3, 3), w_ih, w_hh, b);
        return contract(g, s2, r);
    };
    EXPECT_LT(max_gradient_error(p, loss), 1e-5);
}

TEST(BiLstmStack, ZeroWeightsAndWidth) {
    ParameterSet p;
    const auto stack = BiLstmStack::create(p, "s", 4);
    Graph g;
    const Var out = stack.run(g, p, g.constant(Matrix::Ones(4, 5)));
    EXPECT_EQ(out.rows(), 128);
    EXPECT_EQ(out.value(), Matrix::Zero(128, 5));
}

TEST(BiLstmStack, ResidualWiring) {
    Rng rng = make_stream(7, "residual");
    ParameterSet p;
    const auto stack = BiLstmStack::create(p, "s", 3, 5);
    fill_uniform(p, rng, 0.7);
    // Zero layer 1: its output is zero, so layer 2 sees exactly layer 0's output.
    for (const auto* layer : {&stack.forward[1], &stack.backward[1]})
        for (int id : {layer->w_ih, layer->w_hh, layer->bias}) p.value(id).setZero();
    const Matrix x = random_matrix(rng, 3, 6);
    Graph g;
    const Var out = stack.run(g, p, g.constant(x));
    const Var xc = g.constant(x);
    const Var l0_parts[] = {lstm_forward(g, p, stack.forward[0], xc), lstm_forward(g, p, stack.backward[0], xc)};
    const Var l0 = concat_rows(l0_parts);
    const Var l2_parts[] = {lstm_forward(g, p, stack.forward[2], l0), lstm_forward(g, p, stack.backward[2], l0)};
    EXPECT_LT((concat_rows(l2_parts).value() - out.value()).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(BiLstmStack, GradientsMatchFiniteDifferences) {
    Rng rng = make_stream(8, "bistack-grad");
    ParameterSet p;
    const auto stack = BiLstmStack::create(p, "s", 2, 3);
    const int xin = p.add("x", {2, 5});
    fill_uniform(p, rng, 0.8);
    const Matrix r = random_matrix(rng, 6, 5);
    const LossFn loss = [&](Graph& g) { return contract(g, stack.run(g, p, g.parameter(p, xin)), r); };
    EXPECT_LT(max_gradient_error(p, loss), 1e-5);
}

TEST(UniLstmStack, StepwiseEqualsWholeSequenceAndGradients) {
    Rng rng = make_stream(9, "unistack");
    ParameterSet p;
    const auto stack = UniLstmStack::create(p, "u", 2, 4, 3, Residual::Dense);
    const int xin = p.add("x", {2, 6});
    fill_uniform(p, rng, 0.8);
    Graph g;
    const Var whole = stack.run(g, p, g.parameter(p, xin));
    StackState state = stack.initial_state(g);
    for (Index t = 0; t < 6; ++t) {
        const Var h = stack.step(g, p, slice_cols(g.parameter(p, xin), t, 1), state);
        EXPECT_LT((h.value() - whole.value().col(t)).cwiseAbs().maxCoeff(), 1e-14);
    }
    const Matrix r = random_matrix(rng, 3, 6);
    const LossFn loss = [&](Graph& gg) { return contract(gg, stack.run(gg, p, gg.parameter(p, xin)), r); };
    EXPECT_LT(max_gradient_error(p, loss), 1e-5);
}

TEST(MlpHead, ZeroSigmoidAndManualChain) {
    ParameterSet p;
    const auto zero_head = MlpHead::create(p, "z", {4, 3, 1}, OutputActivation::Sigmoid);
    {
        Graph g;
        EXPECT_EQ(zero_head.run(g, p, g.constant(Matrix::Ones(4, 3))).value(), Matrix::Constant(1, 3, 0.5));
    }
    Rng rng = make_stream(10, "mlp");
    ParameterSet q;
    const auto head = MlpHead::create(q, "m", {3, 5, 2}, OutputActivation::Linear);
    fill_uniform(q, rng, 1.0);
    const Matrix x = random_matrix(rng, 3, 4);
    Graph g;
    const Matrix out = head.run(g, q, g.constant(x)).value();
    Matrix hidden = (q.value(head.weights[0]) * x).colwise() + q.value(head.biases[0]).col(0);
    hidden = hidden.unaryExpr([](double v) { return v > 0.0 ? v : 0.01 * v; });
    const Matrix expected = (q.value(head.weights[1]) * hidden).colwise() + q.value(head.biases[1]).col(0);
    EXPECT_LT((out - expected).cwiseAbs().maxCoeff(), 1e-14);

    const int xin = q.add("x", {3, 4});
    q.value(xin) = x;
    const Matrix r = random_matrix(rng, 2, 4);
    const LossFn loss = [&](Graph& gg) { return contract(gg, head.run(gg, q, gg.parameter(q, xin)), r); };
    EXPECT_LT(max_gradient_error(q, loss), 1e-5);
}

TEST(Losses, WeightedBceMatchesFormulaAndGradient) {
    ParameterSet p;
    const int logits = p.add("z", {1, 6});
    Rng rng = make_stream(11, "bce");
    fill_uniform(p, rng, 2.0);
    Matrix target(1, 6);
    target << 0, 1, 0, 0, 1, 0;
    const double gamma = 0.8;
    Graph g;
    const Var prob = sigmoid(g.parameter(p, logits));
    const double value = weighted_bce(prob, target, gamma).scalar();
    double expected = 0.0;
    for (Index t = 0; t < 6; ++t) {
        const double q = prob.value()(0, t);
        expected -= gamma * target(0, t) * std::log(q) + (1.0 - gamma) * (1.0 - target(0, t)) * std::log(1.0 - q);
    }
    EXPECT_NEAR(value, expected / 6.0, 1e-14);
    const LossFn loss = [&](Graph& gg) { return weighted_bce(sigmoid(gg.parameter(p, logits)), target, gamma); };
    EXPECT_LT(max_gradient_error(p, loss), 1e-6);
}

TEST(Losses, BceClampStopsGradient) {
    ParameterSet p;
    const int prob = p.add("p", {1, 2});
    p.value(prob) << 0.0, 1.0;
    Matrix target(1, 2);
    target << 1, 0;
    GradientStore grads(p);
    Graph g;
    const Var l = weighted_bce(g.parameter(p, prob), target, 0.5);
    EXPECT_NEAR(l.scalar(), -0.5 * std::log(1e-7), 1e-9);
    g.backward(l, grads);
    EXPECT_EQ(grads[prob], Matrix::Zero(1, 2));
}

TEST(Losses, SquaredDistanceAndBelowGround) {
    ParameterSet p;
    const int pts = p.add("pts", {3, 4});
    p.value(pts) << 1, 0, 2, 0,  //
        -0.5, 0.2, -1.0, 0.0,    //
        0, 3, 0, 1;
    Graph g;
    const Var v = g.parameter(p, pts);
    const double msd = mean_squared_distance(v, Matrix::Zero(3, 4)).scalar();
    EXPECT_NEAR(msd, (1 + 0.25 + 0.04 + 9 + 4 + 1 + 1) / 4.0, 1e-14);
    const double below = below_ground(slice_rows(v, 1, 1)).scalar();
    EXPECT_NEAR(below, (0.25 + 1.0) / 2.0, 1e-14);
    Graph h;
    EXPECT_EQ(below_ground(h.constant(Matrix::Ones(1, 3))).scalar(), 0.0);

    Rng rng = make_stream(12, "losses");
    fill_uniform(p, rng, 1.0);
    const Matrix target = random_matrix(rng, 3, 4);
    const LossFn loss = [&](Graph& gg) {
        const Var x = gg.parameter(p, pts);
        return add(mean_squared_distance(x, target), below_ground(slice_rows(x, 1, 1)));
    };
    EXPECT_LT(max_gradient_error(p, loss), 1e-6);
}

TEST(Adam, ZeroGradientLeavesParameters) {
    ParameterSet p;
    const int x = p.add("x", {3});
    p.value(x) << 1, 2, 3;
    AdamState s(p);
    GradientStore grads(p);
    adam_step(s, p, grads);
    EXPECT_EQ(p.value(x), Eigen::Vector3d(1, 2, 3));
}

TEST(Adam, FirstStepMovesByLearningRate) {
    ParameterSet p;
    const int x = p.add("x", {4});
    p.value(x).setConstant(0.3);
    AdamState s(p, 1e-3);
    GradientStore grads(p);
    grads[x].setOnes();
    adam_step(s, p, grads);
    for (Index k = 0; k < 4; ++k) EXPECT_NEAR(p.value(x)(k), 0.3 - 1e-3, 1e-10);
}

TEST(Adam, ConvexQuadraticConverges) {
    ParameterSet p;
    const int x = p.add("x", {3});
    const Eigen::Vector3d target(0.7, -0.4, 0.2);
    AdamState s(p, 0.05);
    for (int step = 0; step < 400; ++step) {
        GradientStore grads(p);
        Graph g;
        g.backward(sum(square(sub(g.parameter(p, x), g.constant(target)))), grads);
        adam_step(s, p, grads);
    }
    EXPECT_LT((p.value(x) - Matrix(target)).cwiseAbs().maxCoeff(), 1e-3);
}

TEST(Adam, ShapeMismatchThrows) {
    ParameterSet p;
    p.add("x", {3});
    AdamState s(p);
    ParameterSet other;
    other.add("x", {4});
    GradientStore grads(other);
    EXPECT_THROW(adam_step(s, p, grads), ShapeMismatch);
}

TEST(Initialization, BoundsFollowFanIn) {
    ParameterSet p;
    const auto layer = LstmLayerParams::create(p, "enc.lstm0", 4, 16, Direction::Forward);
    const auto head = MlpHead::create(p, "enc.head", {16, 25, 1}, OutputActivation::Linear);
    Rng rng = make_stream(13, "init");
    initialize_uniform(p, rng);
    EXPECT_LE(p.value(layer.w_ih).cwiseAbs().maxCoeff(), 0.25);
    EXPECT_GT(p.value(layer.w_ih).cwiseAbs().maxCoeff(), 0.2);
    EXPECT_LE(p.value(head.weights[0]).cwiseAbs().maxCoeff(), 0.25);
    EXPECT_LE(p.value(head.weights[1]).cwiseAbs().maxCoeff(), 0.2);
    EXPECT_LE(p.value(head.biases[1]).cwiseAbs().maxCoeff(), 0.2);
}

TEST(Checkpoint, RoundTripWithOptimizer) {
    Rng rng = make_stream(14, "ckpt");
    ParameterSet p;
    LstmLayerParams::create(p, "a.lstm0", 3, 4, Direction::Forward);
    MlpHead::create(p, "a.head", {4, 2}, OutputActivation::Linear);
    fill_uniform(p, rng, 1.0);
    AdamState adam(p);
    GradientStore grads(p);
    for (int id = 0; id < p.size(); ++id) grads[id] = random_matrix(rng, grads[id].rows(), grads[id].cols());
    adam_step(adam, p, grads);

    const auto path = test::temp_path("model.ckpt");
    save_checkpoint(path, p, {{"kind", "test"}, {"epoch", 3}}, &adam);
    EXPECT_EQ(read_checkpoint_header(path)["metadata"]["epoch"], 3);

    ParameterSet q;
    LstmLayerParams::create(q, "a.lstm0", 3, 4, Direction::Forward);
    MlpHead::create(q, "a.head", {4, 2}, OutputActivation::Linear);
    AdamState restored(q);
    const auto meta = load_checkpoint(path, q, &restored);
    EXPECT_EQ(meta["kind"], "test");
    for (int id = 0; id < p.size(); ++id) {
        EXPECT_EQ(q.value(id), p.value(id));
        EXPECT_EQ(restored.m[static_cast<std::size_t>(id)], adam.m[static_cast<std::size_t>(id)]);
        EXPECT_EQ(restored.v[static_cast<std::size_t>(id)], adam.v[static_cast<std::size_t>(id)]);
    }
    EXPECT_EQ(restored.step, adam.step);
}

TEST(Checkpoint, RejectsMismatches) {
    ParameterSet p;
    p.add("w", {2, 3});
    const auto path = test::temp_path("w.ckpt");
    save_checkpoint(path, p, nlohmann::json::object());
    ParameterSet wrong_shape;
    wrong_shape.add("w", {3, 2});
    EXPECT_THROW(load_checkpoint(path, wrong_shape), CheckpointError);
    ParameterSet wrong_name;
    wrong_name.add("v", {2, 3});
    EXPECT_THROW(load_checkpoint(path, wrong_name), CheckpointError);
    EXPECT_THROW(read_checkpoint_header(test::temp_path("absent.ckpt")), CheckpointError);
    {
        std::ofstream junk(test::temp_path("junk.ckpt"), std::ios::binary);
        junk << "NOTACKPT and more bytes";
    }
    EXPECT_THROW(read_checkpoint_header(test::temp_path("junk.ckpt")), CheckpointError);
}
