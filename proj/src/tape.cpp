#include "cloudedge/tape.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cloudedge/error.hpp"

namespace cloudedge::numerics {

namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace

Var Tape::record(Matrix value, bool needs_grad, Backward backward) {
    nodes_.push_back(Node{std::move(value), Matrix{}, needs_grad, needs_grad ? std::move(backward) : Backward{}});
    return Var{nodes_.size() - 1};
}

Var Tape::constant(Matrix value) { return record(std::move(value), false, {}); }

Var Tape::parameter(Matrix value) { return record(std::move(value), true, {}); }

Matrix Tape::grad(Var v) const {
    const auto& n = nodes_.at(v.id);
    return n.grad.empty() ? Matrix::zeros_like(n.value) : n.grad;
}

void Tape::accumulate(Var v, const Matrix& g) {
    auto& n = nodes_[v.id];
    if (!n.needs_grad) return;
    if (n.grad.empty())
        n.grad = g;
    else
        n.grad += g;
}

void Tape::backward(Var loss) {
    if (value(loss).rows() != 1 || value(loss).cols() != 1)
        throw ShapeError("backward: loss must be 1x1, got " + value(loss).shape());
    for (auto& n : nodes_) n.grad = Matrix{};
    nodes_[loss.id].grad = Matrix(1, 1, 1.0);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
        auto& n = nodes_[i];
        if (n.grad.empty() || !n.backward) continue;
        n.backward(*this, n.grad);
    }
}

Var Tape::matmul(Var a, Var b) {
    auto out = numerics::matmul(value(a), value(b));
    return record(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
        if (t.needs(a)) t.accumulate(a, matmul_bt(g, t.value(b)));
        if (t.needs(b)) t.accumulate(b, matmul_at(t.value(a), g));
    });
}

Var Tape::add(Var a, Var b) {
    require_same_shape(value(a), value(b), "add");
    Matrix out = value(a);
    out += value(b);
    return record(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        t.accumulate(b, g);
    });
}

Var Tape::add_row(Var a, Var row) {
    const auto& av = value(a);
    const auto& rv = value(row);
    if (rv.rows() != 1 || rv.cols() != av.cols())
        throw ShapeError("add_row: shape mismatch " + av.shape() + " + " + rv.shape());
    Matrix out = av;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) += rv(0, c);
    return record(std::move(out), needs(a) || needs(row), [a, row](Tape& t, const Matrix& g) {
        t.accumulate(a, g);
        if (t.needs(row)) {
            Matrix s(1, g.cols());
            for (std::size_t r = 0; r < g.rows(); ++r)
                for (std::size_t c = 0; c < g.cols(); ++c) s(0, c) += g(r, c);
            t.accumulate(row, s);
        }
    });
}

Var Tape::hadamard(Var a, Var b) {
    require_same_shape(value(a), value(b), "hadamard");
    Matrix out = value(a);
    const auto& bv = value(b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
    return record(std::move(out), needs(a) || needs(b), [a, b](Tape& t, const Matrix& g) {
        if (t.needs(a)) {
            Matrix ga = g;
            const auto& bv = t.value(b);
            for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= bv[i];
            t.accumulate(a, ga);
        }
        if (t.needs(b)) {
            Matrix gb = g;
            const auto& av = t.value(a);
            for (std::size_t i = 0; i < gb.size(); ++i) gb[i] *= av[i];
            t.accumulate(b, gb);
        }
    });
}

Var Tape::sigmoid(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(out[i]);
    const std::size_t self = nodes_.size();
    return record(std::move(out), needs(a), [a, self](Tape& t, const Matrix& g) {
        const auto& y = t.nodes_[self].value;
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= y[i] * (1.0 - y[i]);
        t.accumulate(a, ga);
    });
}

Var Tape::tanh(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
    const std::size_t self = nodes_.size();
    return record(std::move(out), needs(a), [a, self](Tape& t, const Matrix& g) {
        const auto& y = t.nodes_[self].value;
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i) ga[i] *= 1.0 - y[i] * y[i];
        t.accumulate(a, ga);
    });
}

Var Tape::relu(Var a) {
    Matrix out = value(a);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = out[i] > 0.0 ? out[i] : 0.0;
    return record(std::move(out), needs(a), [a](Tape& t, const Matrix& g) {
        const auto& x = t.value(a);
        Matrix ga = g;
        for (std::size_t i = 0; i < ga.size(); ++i)
            if (!(x[i] > 0.0)) ga[i] = 0.0;
        t.accumulate(a, ga);
    });
}

Var Tape::columns(Var a, std::size_t start, std::size_t count) {
    const auto& av = value(a);
    if (start + count > av.cols()) {
        std::ostringstream os;
        os << "columns: [" << start << ", " << start + count << ") out of range for " << av.shape();
        throw ShapeError(os.str());
    }
    Matrix out(av.rows(), count);
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = av(r, start + c);
    return record(std::move(out), needs(a), [a, start, count](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::zeros_like(t.value(a));
        for (std::size_t r = 0; r < g.rows(); ++r)
            for (std::size_t c = 0; c < count; ++c) ga(r, start + c) = g(r, c);
        t.accumulate(a, ga);
    });
}

Var Tape::concat_columns(std::span<const Var> parts) {
    if (parts.empty()) throw ShapeError("concat_columns: no inputs");
    const std::size_t rows = value(parts[0]).rows();
    std::size_t cols = 0;
    bool any = false;
    for (auto p : parts) {
        if (value(p).rows() != rows)
            throw ShapeError("concat_columns: row mismatch " + value(parts[0]).shape() + " vs " + value(p).shape());
        cols += value(p).cols();
        any = any || needs(p);
    }
    Matrix out(rows, cols);
    std::size_t offset = 0;
    for (auto p : parts) {
        const auto& pv = value(p);
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < pv.cols(); ++c) out(r, offset + c) = pv(r, c);
        offset += pv.cols();
    }
    std::vector<Var> inputs(parts.begin(), parts.end());
    return record(std::move(out), any, [inputs](Tape& t, const Matrix& g) {
        std::size_t offset = 0;
        for (auto p : inputs) {
            const auto& pv = t.value(p);
            if (t.needs(p)) {
                Matrix gp(pv.rows(), pv.cols());
                for (std::size_t r = 0; r < pv.rows(); ++r)
                    for (std::size_t c = 0; c < pv.cols(); ++c) gp(r, c) = g(r, offset + c);
                t.accumulate(p, gp);
            }
            offset += pv.cols();
        }
    });
}

Var Tape::propagate(const Matrix& p, Var x) {
    const auto& xv = value(x);
    const std::size_t n = p.rows();
    if (p.cols() != n || n == 0 || xv.rows() % n != 0)
        throw ShapeError("propagate: shape mismatch " + p.shape() + " over " + xv.shape());
    const std::size_t blocks = xv.rows() / n;
    const std::size_t k = xv.cols();
    Matrix out(xv.rows(), k);
    for (std::size_t b = 0; b < blocks; ++b)
        for (std::size_t i = 0; i < n; ++i) {
            double* o = &out(b * n + i, 0);
            for (std::size_t j = 0; j < n; ++j) {
                const double pij = p(i, j);
                if (pij == 0.0) continue;
                const double* xr = xv.row(b * n + j).data();
                for (std::size_t c = 0; c < k; ++c) o[c] += pij * xr[c];
            }
        }
    return record(std::move(out), needs(x), [p, x, n, blocks, k](Tape& t, const Matrix& g) {
        Matrix gx(g.rows(), k);
        for (std::size_t b = 0; b < blocks; ++b)
            for (std::size_t i = 0; i < n; ++i) {
                const double* gr = g.row(b * n + i).data();
                for (std::size_t j = 0; j < n; ++j) {
                    const double pij = p(i, j);
                    if (pij == 0.0) continue;
                    double* o = &gx(b * n + j, 0);
                    for (std::size_t c = 0; c < k; ++c) o[c] += pij * gr[c];
                }
            }
        t.accumulate(x, gx);
    });
}

Var Tape::mean_pool_rows(Var a, std::size_t group) {
    const auto& av = value(a);
    if (group == 0 || av.rows() % group != 0) {
        std::ostringstream os;
        os << "mean_pool_rows: " << av.shape() << " not divisible into groups of " << group;
        throw ShapeError(os.str());
    }
    const std::size_t out_rows = av.rows() / group;
    const double inv = 1.0 / static_cast<double>(group);
    Matrix out(out_rows, av.cols());
    for (std::size_t r = 0; r < av.rows(); ++r)
        for (std::size_t c = 0; c < av.cols(); ++c) out(r / group, c) += av(r, c);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] *= inv;
    return record(std::move(out), needs(a), [a, group, inv](Tape& t, const Matrix& g) {
        Matrix ga = Matrix::zeros_like(t.value(a));
        for (std::size_t r = 0; r < ga.rows(); ++r)
            for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) = g(r / group, c) * inv;
        t.accumulate(a, ga);
    });
}

Var Tape::softmax_cross_entropy(Var logits, std::span<const int> targets) {
    const auto& z = value(logits);
    if (targets.size() != z.rows()) {
        std::ostringstream os;
        os << "softmax_cross_entropy: " << targets.size() << " targets for logits " << z.shape();
        throw ShapeError(os.str());
    }
    Matrix probs(z.rows(), z.cols());
    double loss = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) {
        const int y = targets[r];
        if (y < 0 || static_cast<std::size_t>(y) >= z.cols())
            throw ShapeError("softmax_cross_entropy: target class out of range");
        double mx = z(r, 0);
        for (std::size_t c = 1; c < z.cols(); ++c) mx = std::max(mx, z(r, c));
        double sum = 0.0;
        for (std::size_t c = 0; c < z.cols(); ++c) sum += std::exp(z(r, c) - mx);
        const double log_sum = mx + std::log(sum);
        for (std::size_t c = 0; c < z.cols(); ++c) probs(r, c) = std::exp(z(r, c) - log_sum);
        loss += log_sum - z(r, static_cast<std::size_t>(y));
    }
    const double inv = 1.0 / static_cast<double>(z.rows());
    std::vector<int> labels(targets.begin(), targets.end());
    return record(Matrix(1, 1, loss * inv), needs(logits),
                  [logits, probs = std::move(probs), labels = std::move(labels), inv](Tape& t, const Matrix& g) {
                      Matrix gz = probs;
                      for (std::size_t r = 0; r < gz.rows(); ++r) gz(r, static_cast<std::size_t>(labels[r])) -= 1.0;
                      const double scale = g(0, 0) * inv;
                      for (std::size_t i = 0; i < gz.size(); ++i) gz[i] *= scale;
                      t.accumulate(logits, gz);
                  });
}

}  // namespace cloudedge::numerics
