#pragma once

#include <functional>
#include <span>
#include <vector>

#include "cloudedge/matrix.hpp"

namespace cloudedge::numerics {

/// Handle to a value recorded on a Tape. Only meaningful for the tape that issued it.
struct Var {
    std::size_t id = 0;
};

/// Reverse-mode differentiation tape. Every primitive records its value and a
/// closure that pushes the output gradient back to its inputs. Single owner
/// for the duration of one forward/backward pass.
class Tape {
public:
    Var constant(Matrix value);
    Var parameter(Matrix value);

    const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
    /// Gradient accumulated by the last backward(); zeros if the node was not reached.
    Matrix grad(Var v) const;
    std::size_t size() const noexcept { return nodes_.size(); }

    /// Seeds d(loss)/d(loss) = 1 for a 1x1 loss and runs the tape backwards.
    void backward(Var loss);

    Var matmul(Var a, Var b);
    Var add(Var a, Var b);
    /// a (n x k) + row (1 x k) broadcast over rows.
    Var add_row(Var a, Var row);
    Var hadamard(Var a, Var b);
    Var sigmoid(Var a);
    Var tanh(Var a);
    Var relu(Var a);
    Var columns(Var a, std::size_t start, std::size_t count);
    Var concat_columns(std::span<const Var> parts);
    /// Left-multiplies every consecutive block of `p.rows()` rows of `x` by the constant `p`.
    Var propagate(const Matrix& p, Var x);
    /// Means of consecutive groups of `group` rows.
    Var mean_pool_rows(Var a, std::size_t group);
    /// Mean over rows of -log softmax(logits)[target]; 1x1 result.
    Var softmax_cross_entropy(Var logits, std::span<const int> targets);

private:
    using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

    struct Node {
        Matrix value;
        Matrix grad;
        bool needs_grad = false;
        Backward backward;
    };

    Var record(Matrix value, bool needs_grad, Backward backward);
    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    void accumulate(Var v, const Matrix& g);

    std::vector<Node> nodes_;
};

}  // namespace cloudedge::numerics
