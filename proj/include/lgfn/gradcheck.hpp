#pragma once

#include "lgfn/autograd.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace lgfn {

// Scalar function of the given inputs. Called once with tape parameters and
// many times with constants while probing finite differences.
using ScalarFn = std::function<Var<double>(const std::vector<Var<double>>&)>;

struct GradcheckResult {
    double max_rel_error = 0;
    std::size_t worst_input = 0;
    Index worst_index = 0;
    double analytic = 0;
    double numeric = 0;
};

// Central differences (f(x+eps e) - f(x-eps e)) / (2 eps) against tape
// gradients, componentwise over every input. Relative error uses the
// denominator max(|analytic|, |numeric|, 1e-8).
GradcheckResult gradcheck_detailed(const ScalarFn& f, const std::vector<Tensor<double>>& point, double eps = 1e-4);

inline double gradcheck(const ScalarFn& f, const std::vector<Tensor<double>>& point, double eps = 1e-4) {
    return gradcheck_detailed(f, point, eps).max_rel_error;
}

struct GradcheckCase {
    std::string name;
    double max_rel_error = 0;
    double tolerance = 0;
    bool passed() const { return max_rel_error <= tolerance; }
};

// Gradient checks for every differentiable op (tolerance 1e-4), the three
// attention/extraction blocks and the tiny end-to-end model under the combined
// loss (tolerance 1e-3). Inputs are drawn so no probe straddles a kink.
std::vector<GradcheckCase> run_gradcheck_suite(std::uint64_t seed, bool include_model = true);

} // namespace lgfn
