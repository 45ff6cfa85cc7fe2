#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "ball3d/errors.hpp"
#include "ball3d/nn/graph.hpp"

namespace ball3d::nn {
namespace {

void require_same_shape(const Var& a, const Var& b, const char* op) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw ShapeMismatch(std::string(op) + ": operand shapes differ");
    }
}

/// Adds `delta` into the gradient of `id` when that node participates in differentiation.
template <typename Expr>
void accumulate(Graph& g, int id, const Expr& delta) {
    if (g.requires_grad(id)) g.grad(id) += delta;
}

// Both activations go through Eigen's vectorised exp; the absolute error stays at rounding level.
template <typename Derived>
auto sigmoid_of(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 / (1.0 + (-x).exp());
}

template <typename Derived>
auto tanh_of(const Eigen::ArrayBase<Derived>& x) {
    return 1.0 - 2.0 / ((2.0 * x).exp() + 1.0);
}

}  // namespace

Var matmul(Var a, Var b) {
    if (a.cols() != b.rows()) throw ShapeMismatch("matmul: inner dimensions differ");
    Matrix out = a.value() * b.value();
    const int ia = a.id;
    const int ib = b.id;
    return a.graph->record(std::move(out), {a, b}, [ia, ib](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        if (g.requires_grad(ia)) g.grad(ia).noalias() += d * g.value(ib).transpose();
        if (g.requires_grad(ib)) g.grad(ib).noalias() += g.value(ia).transpose() * d;
    });
}

Var linear(Var weight, Var x, Var bias) {
    if (weight.cols() != x.rows()) throw ShapeMismatch("linear: weight/input sizes differ");
    if (bias.rows() != weight.rows() || bias.cols() != 1) throw ShapeMismatch("linear: bad bias shape");
    Matrix out(weight.rows(), x.cols());
    out.noalias() = weight.value() * x.value();
    out.colwise() += bias.value().col(0);
    const int iw = weight.id;
    const int ix = x.id;
    const int ib = bias.id;
    return x.graph->record(std::move(out), {weight, x, bias}, [iw, ix, ib](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        if (g.requires_grad(iw)) g.grad(iw).noalias() += d * g.value(ix).transpose();
        if (g.requires_grad(ix)) g.grad(ix).noalias() += g.value(iw).transpose() * d;
        if (g.requires_grad(ib)) g.grad(ib) += d.rowwise().sum();
    });
}

Var add(Var a, Var b) {
    require_same_shape(a, b, "add");
    const int ia = a.id;
    const int ib = b.id;
    return a.graph->record(a.value() + b.value(), {a, b}, [ia, ib](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        accumulate(g, ia, d);
        accumulate(g, ib, d);
    });
}

Var sub(Var a, Var b) {
    require_same_shape(a, b, "sub");
    const int ia = a.id;
    const int ib = b.id;
    return a.graph->record(a.value() - b.value(), {a, b}, [ia, ib](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        accumulate(g, ia, d);
        accumulate(g, ib, -d);
    });
}

Var hadamard(Var a, Var b) {
    require_same_shape(a, b, "hadamard");
    const int ia = a.id;
    const int ib = b.id;
    return a.graph->record(a.value().cwiseProduct(b.value()), {a, b}, [ia, ib](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        accumulate(g, ia, d.cwiseProduct(g.value(ib)));
        accumulate(g, ib, d.cwiseProduct(g.value(ia)));
    });
}

Var scale(Var a, double factor) {
    const int ia = a.id;
    return a.graph->record(a.value() * factor, {a}, [ia, factor](Graph& g, int self) {
        accumulate(g, ia, g.grad(self) * factor);
    });
}

Var affine(Var a, const Matrix& mul, const Matrix& offset) {
    if (mul.rows() != a.rows() || mul.cols() != a.cols() || offset.rows() != a.rows() ||
        offset.cols() != a.cols()) {
        throw ShapeMismatch("affine: coefficient shapes differ from operand");
    }
    const int ia = a.id;
    Matrix out = a.value().cwiseProduct(mul) + offset;
    return a.graph->record(std::move(out), {a}, [ia, mul](Graph& g, int self) {
        accumulate(g, ia, g.grad(self).cwiseProduct(mul));
    });
}

Var sigmoid(Var a) {
    const int ia = a.id;
    Matrix out = sigmoid_of(a.value().array()).matrix();
    return a.graph->record(std::move(out), {a}, [ia](Graph& g, int self) {
        const Matrix& y = g.value(self);
        accumulate(g, ia, g.grad(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
    });
}

Var tanh(Var a) {
    const int ia = a.id;
    Matrix out = tanh_of(a.value().array()).matrix();
    return a.graph->record(std::move(out), {a}, [ia](Graph& g, int self) {
        const Matrix& y = g.value(self);
        accumulate(g, ia, (g.grad(self).array() * (1.0 - y.array().square())).matrix());
    });
}

Var leaky_relu(Var a, double slope) {
    const int ia = a.id;
    Matrix out = a.value().unaryExpr([slope](double x) { return x > 0.0 ? x : slope * x; });
    return a.graph->record(std::move(out), {a}, [ia, slope](Graph& g, int self) {
        const Matrix& x = g.value(ia);
        const Matrix& d = g.grad(self);
        accumulate(g, ia, d.binaryExpr(x, [slope](double dy, double xv) {
            return xv > 0.0 ? dy : slope * dy;
        }));
    });
}

Var concat_rows(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_rows: no operands");
    const Index cols = parts.front().cols();
    Index rows = 0;
    for (const Var& p : parts) {
        if (p.cols() != cols) throw ShapeMismatch("concat_rows: column counts differ");
        rows += p.rows();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<int, Index>> layout;  // id, row offset
    Index r = 0;
    for (const Var& p : parts) {
        out.middleRows(r, p.rows()) = p.value();
        layout.emplace_back(p.id, r);
        r += p.rows();
    }
    return parts.front().graph->record(std::move(out), parts, [layout](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        for (const auto& [id, offset] : layout) {
            if (g.requires_grad(id)) g.grad(id) += d.middleRows(offset, g.value(id).rows());
        }
    });
}

Var concat_cols(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeMismatch("concat_cols: no operands");
    const Index rows = parts.front().rows();
    Index cols = 0;
    for (const Var& p : parts) {
        if (p.rows() != rows) throw ShapeMismatch("concat_cols: row counts differ");
        cols += p.cols();
    }
    Matrix out(rows, cols);
    std::vector<std::pair<int, Index>> layout;
    Index c = 0;
    for (const Var& p : parts) {
        out.middleCols(c, p.cols()) = p.value();
        layout.emplace_back(p.id, c);
        c += p.cols();
    }
    return parts.front().graph->record(std::move(out), parts, [layout](Graph& g, int self) {
        const Matrix& d = g.grad(self);
        for (const auto& [id, offset] : layout) {
            if (g.requires_grad(id)) g.grad(id) += d.middleCols(offset, g.value(id).cols());
        }
    });
}

Var slice_rows(Var a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.rows()) throw ShapeMismatch("slice_rows out of range");
    const int ia = a.id;
    return a.graph->record(a.value().middleRows(start, count), {a}, [ia, start, count](Graph& g, int self) {
        if (g.requires_grad(ia)) g.grad(ia).middleRows(start, count) += g.grad(self);
    });
}

Var slice_cols(Var a, Index start, Index count) {
    if (start < 0 || count < 0 || start + count > a.cols()) throw ShapeMismatch("slice_cols out of range");
    const int ia = a.id;
    return a.graph->record(a.value().middleCols(start, count), {a}, [ia, start, count](Graph& g, int self) {
        if (g.requires_grad(ia)) g.grad(ia).middleCols(start, count) += g.grad(self);
    });
}

Var sum(Var a) {
    const int ia = a.id;
    return a.graph->record(Matrix::Constant(1, 1, a.value().sum()), {a}, [ia](Graph& g, int self) {
        if (g.requires_grad(ia)) g.grad(ia).array() += g.grad(self)(0, 0);
    });
}

Var square(Var a) {
    const int ia = a.id;
    return a.graph->record(a.value().array().square().matrix(), {a}, [ia](Graph& g, int self) {
        accumulate(g, ia, (2.0 * g.grad(self).array() * g.value(ia).array()).matrix());
    });
}

// ---- LSTM ---------------------------------------------------------------------------

namespace {

struct LstmTape {
    Matrix gates;   // 4H x L, post-activation (i, f, g, o)
    Matrix cells;   // H x L
    Matrix tanh_c;  // H x L
    Matrix h_prev;  // H x L, hidden state entering each step
    Matrix c_prev;  // H x L
};

void check_lstm_shapes(const Var& x, const Var& w_ih, const Var& w_hh, const Var& bias) {
    const Index hidden = w_hh.cols();
    if (w_hh.rows() != 4 * hidden || w_ih.rows() != 4 * hidden || bias.rows() != 4 * hidden ||
        bias.cols() != 1) {
        throw ShapeMismatch("lstm: gate parameter shapes are inconsistent");
    }
    if (w_ih.cols() != x.rows()) throw ShapeMismatch("lstm: input width differs from input_size");
}

/// Applies gate nonlinearities to pre-activations `z` in place.
inline void activate_gates(Eigen::Ref<Eigen::VectorXd> z, Index hidden) {
    z.head(2 * hidden) = sigmoid_of(z.head(2 * hidden).array()).matrix();
    z.segment(2 * hidden, hidden) = tanh_of(z.segment(2 * hidden, hidden).array()).matrix();
    z.tail(hidden) = sigmoid_of(z.tail(hidden).array()).matrix();
}

/// Pre-activation gradient for one step given d(h) and d(c) flowing into the cell output.
inline void cell_backward(const Eigen::VectorXd& gates, const Eigen::VectorXd& tanh_c,
                          const Eigen::VectorXd& c_prev, const Eigen::VectorXd& dh,
                          const Eigen::VectorXd& dc_in, Index hidden, Eigen::Ref<Eigen::VectorXd> dz,
                          Eigen::VectorXd& dc_prev) {
    const auto i = gates.segment(0, hidden).array();
    const auto f = gates.segment(hidden, hidden).array();
    const auto gg = gates.segment(2 * hidden, hidden).array();
    const auto o = gates.segment(3 * hidden, hidden).array();
    const auto tc = tanh_c.array();
    const Eigen::ArrayXd dc = dh.array() * o * (1.0 - tc.square()) + dc_in.array();
    dz.segment(0, hidden) = (dc * gg * i * (1.0 - i)).matrix();
    dz.segment(hidden, hidden) = (dc * c_prev.array() * f * (1.0 - f)).matrix();
    dz.segment(2 * hidden, hidden) = (dc * i * (1.0 - gg.square())).matrix();
    dz.segment(3 * hidden, hidden) = (dh.array() * tc * o * (1.0 - o)).matrix();
    dc_prev = (dc * f).matrix();
}

}  // namespace

Var lstm_sequence(Var x, Var w_ih, Var w_hh, Var bias, bool reverse) {
    check_lstm_shapes(x, w_ih, w_hh, bias);
    const Index hidden = w_hh.cols();
    const Index steps = x.cols();

    auto tape = std::make_shared<LstmTape>();
    tape->gates.resize(4 * hidden, steps);
    tape->gates.noalias() = w_ih.value() * x.value();
    tape->gates.colwise() += bias.value().col(0);
    tape->cells.resize(hidden, steps);
    tape->tanh_c.resize(hidden, steps);
    tape->h_prev.resize(hidden, steps);
    tape->c_prev.resize(hidden, steps);
    Matrix out(hidden, steps);

    Eigen::VectorXd h = Eigen::VectorXd::Zero(hidden);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(hidden);
    const Matrix& whh = w_hh.value();
    for (Index k = 0; k < steps; ++k) {
        const Index t = reverse ? steps - 1 - k : k;
        tape->h_prev.col(t) = h;
        tape->c_prev.col(t) = c;
        auto z = tape->gates.col(t);
        z.noalias() += whh * h;
        activate_gates(z, hidden);
        c = z.segment(hidden, hidden).cwiseProduct(c) +
            z.segment(0, hidden).cwiseProduct(z.segment(2 * hidden, hidden));
        tape->cells.col(t) = c;
        tape->tanh_c.col(t) = tanh_of(c.array()).matrix();
        h = z.tail(hidden).cwiseProduct(tape->tanh_c.col(t));
        out.col(t) = h;
    }

    const int ix = x.id;
    const int iwih = w_ih.id;
    const int iwhh = w_hh.id;
    const int ib = bias.id;
    return x.graph->record(
        std::move(out), {x, w_ih, w_hh, bias},
        [tape, ix, iwih, iwhh, ib, hidden, steps, reverse](Graph& g, int self) {
            const Matrix& d_out = g.grad(self);
            const Matrix& whh = g.value(iwhh);
            Matrix dz(4 * hidden, steps);
            Eigen::VectorXd dh_next = Eigen::VectorXd::Zero(hidden);
            Eigen::VectorXd dc_next = Eigen::VectorXd::Zero(hidden);
            Eigen::VectorXd dh(hidden);
            Eigen::VectorXd dc_prev(hidden);
            for (Index k = steps - 1; k >= 0; --k) {
                const Index t = reverse ? steps - 1 - k : k;
                dh = d_out.col(t) + dh_next;
                cell_backward(tape->gates.col(t), tape->tanh_c.col(t), tape->c_prev.col(t), dh,
                              dc_next, hidden, dz.col(t), dc_prev);
                dc_next = dc_prev;
                dh_next.noalias() = whh.transpose() * dz.col(t);
            }
            if (g.requires_grad(iwih)) g.grad(iwih).noalias() += dz * g.value(ix).transpose();
            if (g.requires_grad(iwhh)) g.grad(iwhh).noalias() += dz * tape->h_prev.transpose();
            if (g.requires_grad(ib)) g.grad(ib) += dz.rowwise().sum();
            if (g.requires_grad(ix)) g.grad(ix).noalias() += g.value(iwih).transpose() * dz;
        });
}

Var lstm_cell(Var x, Var h, Var c, Var w_ih, Var w_hh, Var bias) {
    check_lstm_shapes(x, w_ih, w_hh, bias);
    const Index hidden = w_hh.cols();
    if (x.cols() != 1 || h.rows() != hidden || c.rows() != hidden || h.cols() != 1 || c.cols() != 1) {
        throw ShapeMismatch("lstm_cell: state shapes are inconsistent");
    }
    auto gates = std::make_shared<Eigen::VectorXd>(4 * hidden);
    gates->noalias() = w_ih.value() * x.value();
    gates->noalias() += w_hh.value() * h.value();
    *gates += bias.value();
    activate_gates(*gates, hidden);

    Matrix out(2 * hidden, 1);
    auto c_new = out.col(0).tail(hidden);
    c_new = gates->segment(hidden, hidden).cwiseProduct(c.value().col(0)) +
            gates->segment(0, hidden).cwiseProduct(gates->segment(2 * hidden, hidden));
    auto tanh_c = std::make_shared<Eigen::VectorXd>(tanh_of(c_new.array()).matrix());
    out.col(0).head(hidden) = gates->tail(hidden).cwiseProduct(*tanh_c);

    const int ix = x.id;
    const int ih = h.id;
    const int ic = c.id;
    const int iwih = w_ih.id;
    const int iwhh = w_hh.id;
    const int ib = bias.id;
    return x.graph->record(
        std::move(out), {x, h, c, w_ih, w_hh, bias},
        [gates, tanh_c, ix, ih, ic, iwih, iwhh, ib, hidden](Graph& g, int self) {
            const Matrix& d = g.grad(self);
            const Eigen::VectorXd dh = d.col(0).head(hidden);
            const Eigen::VectorXd dc_in = d.col(0).tail(hidden);
            const Eigen::VectorXd c_prev = g.value(ic).col(0);
            Eigen::VectorXd dz(4 * hidden);
            Eigen::VectorXd dc_prev(hidden);
            cell_backward(*gates, *tanh_c, c_prev, dh, dc_in, hidden, dz, dc_prev);
            if (g.requires_grad(ic)) g.grad(ic) += dc_prev;
            if (g.requires_grad(ix)) g.grad(ix).noalias() += g.value(iwih).transpose() * dz;
            if (g.requires_grad(ih)) g.grad(ih).noalias() += g.value(iwhh).transpose() * dz;
            if (g.requires_grad(iwih)) g.grad(iwih).noalias() += dz * g.value(ix).transpose();
            if (g.requires_grad(iwhh)) g.grad(iwhh).noalias() += dz * g.value(ih).transpose();
            if (g.requires_grad(ib)) g.grad(ib) += dz;
        });
}

// ---- losses -------------------------------------------------------------------------

Var weighted_bce(Var prob, const Matrix& target, double gamma, double clamp) {
    if (target.rows() != prob.rows() || target.cols() != prob.cols()) {
        throw ShapeMismatch("weighted_bce: target shape differs");
    }
    const double n = static_cast<double>(prob.value().size());
    const Matrix& p = prob.value();
    double total = 0.0;
    for (Index i = 0; i < p.size(); ++i) {
        const double q = std::clamp(p(i), clamp, 1.0 - clamp);
        total += gamma * target(i) * std::log(q) + (1.0 - gamma) * (1.0 - target(i)) * std::log(1.0 - q);
    }
    const int ip = prob.id;
    return prob.graph->record(Matrix::Constant(1, 1, -total / n), {prob},
                              [ip, target, gamma, clamp, n](Graph& g, int self) {
        if (!g.requires_grad(ip)) return;
        const double scale = g.grad(self)(0, 0);
        const Matrix& p = g.value(ip);
        Matrix& dp = g.grad(ip);
        for (Index i = 0; i < p.size(); ++i) {
            if (p(i) < clamp || p(i) > 1.0 - clamp) continue;  // clamped: flat
            const double d = -(gamma * target(i) / p(i) - (1.0 - gamma) * (1.0 - target(i)) / (1.0 - p(i))) / n;
            dp(i) += scale * d;
        }
    });
}

Var mean_squared_distance(Var pred, const Matrix& target) {
    if (target.rows() != pred.rows() || target.cols() != pred.cols()) {
        throw ShapeMismatch("mean_squared_distance: target shape differs");
    }
    const double n = static_cast<double>(pred.cols());
    const double value = (pred.value() - target).squaredNorm() / n;
    const int ip = pred.id;
    return pred.graph->record(Matrix::Constant(1, 1, value), {pred}, [ip, target, n](Graph& g, int self) {
        accumulate(g, ip, (2.0 * g.grad(self)(0, 0) / n) * (g.value(ip) - target));
    });
}

Var below_ground(Var y) {
    const Matrix& v = y.value();
    double total = 0.0;
    Index count = 0;
    for (Index i = 0; i < v.size(); ++i) {
        if (v(i) < 0.0) {
            total += v(i) * v(i);
            ++count;
        }
    }
    const double value = count > 0 ? total / static_cast<double>(count) : 0.0;
    const int iy = y.id;
    return y.graph->record(Matrix::Constant(1, 1, value), {y}, [iy, count](Graph& g, int self) {
        if (count == 0 || !g.requires_grad(iy)) return;
        const double scale = g.grad(self)(0, 0) * 2.0 / static_cast<double>(count);
        const Matrix& v = g.value(iy);
        Matrix& d = g.grad(iy);
        for (Index i = 0; i < v.size(); ++i) {
            if (v(i) < 0.0) d(i) += scale * v(i);
        }
    });
}

}  // namespace ball3d::nn
