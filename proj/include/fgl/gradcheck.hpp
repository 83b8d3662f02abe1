#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fgl/autograd.hpp"

namespace fgl::nn {

struct GradCheckOptions {
    double step = 1e-3;       // central-difference step on unit-scale parameters
    double tolerance = 1e-4;  // PASS iff max relative error <= tolerance
    // Components checked per parameter tensor; 0 checks every component.
    // Larger tensors are subsampled deterministically from `seed`.
    int samples_per_param = 0;
    std::uint64_t seed = 0;
    // When nonempty, only parameters whose name starts with one of these
    // prefixes are checked.
    std::vector<std::string> name_prefixes;
};

struct ParamGradEntry {
    std::string name;
    double max_relative_error = 0.0;
    int components_checked = 0;
};

struct GradCheckReport {
    double max_relative_error = 0.0;
    bool pass = true;
    std::vector<ParamGradEntry> per_parameter;  // trainable parameters only
};

// Compares the analytic gradient of `loss_fn` against central differences for
// every trainable parameter in `params`. `loss_fn` must rebuild the forward
// pass from the current parameter values and return a scalar. Per parameter
// the relative error is ||a - n|| / max(||a||, ||n||, 1e-8) over the checked
// components; the floor guards near-zero gradients.
GradCheckReport grad_check(Params& params, const std::function<Var()>& loss_fn,
                           const GradCheckOptions& opts = {});

}  // namespace fgl::nn
