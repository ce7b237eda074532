#pragma once

#include <span>
#include <vector>

#include "cloudedge/matrix.hpp"

namespace cloudedge::numerics {

struct AdamOptions {
    double learning_rate = 0.01;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

struct AdamState {
    AdamOptions options;
    std::size_t step = 0;
    std::vector<Matrix> first_moment;
    std::vector<Matrix> second_moment;

    /// Zero moments shaped like `params`.
    static AdamState for_params(std::span<const NamedMatrix> params, AdamOptions options = {});
};

/// One bias-corrected Adam update applied in place.
void adam_step(std::span<NamedMatrix> params, std::span<const Matrix> grads, AdamState& state);

}  // namespace cloudedge::numerics
