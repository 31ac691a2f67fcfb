#pragma once

#include "vqcnir/rng.hpp"
#include "vqcnir/tensor.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace vqcnir {

/// Leaves whose gradients are checked and a forward pass producing a tensor
/// of any shape; the checked objective is sum(forward() * R) for a fixed
/// random R.
///
/// Ops with stop-gradient semantics supply `reference`, a function whose
/// plain derivative is the intended gradient; finite differences are then
/// taken on it instead of `forward`.
struct GradcheckProblem {
    std::vector<Tensor> leaves;
    std::function<Tensor()> forward;
    std::function<Tensor()> reference = {};
};

struct GradcheckCase {
    std::string op;
    /// Builds the problem for shape variant `variant` (0-based).
    std::function<GradcheckProblem(int variant, Rng& rng)> build;
    int variants = 3;
};

struct GradcheckOptions {
    double tolerance = 1e-4;
    double step = 1e-5;
    double floor = 1e-3;
    std::size_t samples_per_leaf = 24;
};

struct GradcheckResult {
    std::string op;
    double max_rel_error = 0.0;
    int variants = 0;
    bool passed = false;
};

/// |analytic - numeric| / max(|analytic|, |numeric|, floor), maximised over
/// sampled coordinates of every leaf.
double gradcheck_problem(const GradcheckProblem& problem, Rng& rng, const GradcheckOptions& options);

GradcheckResult run_gradcheck_case(const GradcheckCase& c, std::uint64_t seed,
                                   const GradcheckOptions& options = {});

/// Every differentiable op and module of the library.
std::vector<GradcheckCase> standard_gradcheck_cases();

} // namespace vqcnir
