#pragma once

#include "lgfn/config.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace lgfn {

struct InputSpec {
    Index U = 5;
    Index V = 5;
    Index H = 32;
    Index W = 32;
    Index scale = 4;
};

struct CostReport {
    Index params_total = 0;
    // Fixed order: shallow, dgce, esam, ecam, fusion, upsampler.
    std::vector<std::pair<std::string, Index>> params_by_group;

    std::uint64_t macs_total = 0;
    std::uint64_t flops_total = 0;  // 2 * macs_total
    // Activations, pooling, resampling, additions and gating, one per output
    // element; reported beside the MAC-based figure, not folded into it.
    std::uint64_t elementwise_total = 0;
    InputSpec input;
    std::string convention = "FLOPs = 2 x MACs (1 MAC = 2 FLOPs); elementwise ops reported separately";

    Index group(const std::string& name) const;
    std::uint64_t flops_with_elementwise() const { return flops_total + elementwise_total; }
};

// Closed-form per-layer parameter counts (weights + biases) by group.
CostReport count_params(const LgfnConfig& cfg);

// Parameters plus closed-form MAC and elementwise counts for one forward
// pass at the given input. The input scale must equal cfg.scale.
CostReport count_flops(const LgfnConfig& cfg, const InputSpec& input);

// Ablation variants: cascade and parallel attention, then each module removed.
std::vector<std::pair<std::string, LgfnConfig>> ablation_configs(const LgfnConfig& base);

} // namespace lgfn
