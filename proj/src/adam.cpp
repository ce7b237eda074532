#include "cloudedge/adam.hpp"

#include <cmath>

#include "cloudedge/error.hpp"

namespace cloudedge::numerics {

AdamState AdamState::for_params(std::span<const NamedMatrix> params, AdamOptions options) {
    AdamState s;
    s.options = options;
    for (const auto& p : params) {
        s.first_moment.push_back(Matrix::zeros_like(p.value));
        s.second_moment.push_back(Matrix::zeros_like(p.value));
    }
    return s;
}

void adam_step(std::span<NamedMatrix> params, std::span<const Matrix> grads, AdamState& state) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size())
        throw ShapeError("adam_step: parameter, gradient and moment counts differ");
    const auto& o = state.options;
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double correction1 = 1.0 - std::pow(o.beta1, t);
    const double correction2 = 1.0 - std::pow(o.beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        auto& p = params[k].value;
        const auto& g = grads[k];
        auto& m = state.first_moment[k];
        auto& v = state.second_moment[k];
        require_same_shape(p, g, "adam_step");
        require_same_shape(p, m, "adam_step");
        for (std::size_t i = 0; i < p.size(); ++i) {
            m[i] = o.beta1 * m[i] + (1.0 - o.beta1) * g[i];
            v[i] = o.beta2 * v[i] + (1.0 - o.beta2) * g[i] * g[i];
            const double m_hat = m[i] / correction1;
            const double v_hat = v[i] / correction2;
            p[i] -= o.learning_rate * m_hat / (std::sqrt(v_hat) + o.epsilon);
        }
    }
}

}  // namespace cloudedge::numerics
