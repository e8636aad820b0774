#pragma once

#include "lgfn/config.hpp"
#include "lgfn/light_field.hpp"
#include "lgfn/losses.hpp"
#include "lgfn/params.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace lgfn {

struct TrainConfig {
    double lr0 = 2e-4;
    Index halve_every = 15;
    Index epochs = 100;
    Index batch = 1;
    LossWeights loss;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    // 0 means one pass over the samples per epoch.
    Index steps_per_epoch = 0;
    bool augment = true;
    Index checkpoint_every = 1;  // epochs; 0 disables intermediate checkpoints

    void validate() const;
};

template <typename T>
struct OptimState {
    std::vector<Tensor<T>> m;
    std::vector<Tensor<T>> v;
    std::int64_t t = 0;
};

// lr0 * 0.5^floor(epoch / halve_every).
double lr_at(Index epoch, const TrainConfig& cfg);

// Bias-corrected Adam over the store's canonical parameter order.
template <typename T>
void adam_step(ParamStore<T>& p, const std::vector<Tensor<T>>& grads, OptimState<T>& state, double lr,
               const TrainConfig& cfg);

struct StepLog {
    Index step = 0;  // 1-based
    Index epoch = 0;
    double lr = 0;
    double l1 = 0;
    double fft_charbonnier = 0;
    double total = 0;
};

struct TrainOutputs {
    std::filesystem::path log_path;        // JSONL, one object per step; empty disables
    std::filesystem::path checkpoint_dir;  // empty disables checkpoints
};

struct TrainResult {
    ParamStore<float> params;
    std::vector<StepLog> steps;
    std::vector<double> epoch_mean_loss;
};

// Batch-1 Adam training with on-the-fly joint augmentation. Sample order
// and augmentation codes come from one mt19937_64 seeded with cfg.seed.
TrainResult train_loop(const std::vector<SamplePair>& samples, const LgfnConfig& cfg, const TrainConfig& tcfg,
                       ParamStore<float> init, const TrainOutputs& outputs = {});

} // namespace lgfn
