#include "lgfn/train.hpp"

#include "lgfn/model.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

namespace lgfn {

void TrainConfig::validate() const {
    if (!(lr0 > 0)) throw ConfigError("lr0 must be positive");
    if (halve_every < 1) throw ConfigError("halve_every must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch != 1) throw ConfigError("only batch size 1 is supported");
    if (loss.l1 < 0 || loss.fft < 0) throw ConfigError("loss weights must be >= 0");
    if (!(loss.charbonnier_eps > 0)) throw ConfigError("Charbonnier eps must be positive");
    if (beta1 < 0 || beta1 >= 1 || beta2 < 0 || beta2 >= 1) throw ConfigError("Adam betas must lie in [0, 1)");
    if (!(adam_eps > 0)) throw ConfigError("Adam eps must be positive");
    if (steps_per_epoch < 0) throw ConfigError("steps_per_epoch must be >= 0");
    if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
}

double lr_at(Index epoch, const TrainConfig& cfg) {
    if (epoch < 0) throw InvalidInputError("epoch must be >= 0");
    return cfg.lr0 * std::ldexp(1.0, -static_cast<int>(epoch / cfg.halve_every));
}

template <typename T>
void adam_step(ParamStore<T>& p, const std::vector<Tensor<T>>& grads, OptimState<T>& state, double lr,
               const TrainConfig& cfg) {
    auto& entries = p.entries();
    if (grads.size() != entries.size())
        throw ShapeError("adam_step: " + std::to_string(grads.size()) + " gradients for " +
                         std::to_string(entries.size()) + " parameters");
    if (state.m.empty()) {
        for (const auto& e : entries) {
            state.m.emplace_back(e.second.shape());
            state.v.emplace_back(e.second.shape());
        }
    }
    if (state.m.size() != entries.size()) throw ShapeError("adam_step: optimizer state does not match parameters");
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (grads[i].shape() != entries[i].second.shape() || state.m[i].shape() != entries[i].second.shape())
            throw ShapeError("adam_step: gradient for '" + entries[i].first + "' has shape " +
                             shape_str(grads[i].shape()) + ", parameter is " + shape_str(entries[i].second.shape()));
    ++state.t;
    const double c1 = 1.0 - std::pow(cfg.beta1, double(state.t));
    const double c2 = 1.0 - std::pow(cfg.beta2, double(state.t));
    for (std::size_t i = 0; i < entries.size(); ++i) {
        Tensor<T>& w = entries[i].second;
        Tensor<T>& m = state.m[i];
        Tensor<T>& v = state.v[i];
        const Tensor<T>& g = grads[i];
        for (Index k = 0; k < w.numel(); ++k) {
            const double gk = g[k];
            const double mk = cfg.beta1 * double(m[k]) + (1.0 - cfg.beta1) * gk;
            const double vk = cfg.beta2 * double(v[k]) + (1.0 - cfg.beta2) * gk * gk;
            m[k] = static_cast<T>(mk);
            v[k] = static_cast<T>(vk);
            const double update = lr * (mk / c1) / (std::sqrt(vk / c2) + cfg.adam_eps);
            w[k] = static_cast<T>(double(w[k]) - update);
        }
    }
}

template void adam_step(ParamStore<float>&, const std::vector<Tensor<float>>&, OptimState<float>&, double,
                        const TrainConfig&);
template void adam_step(ParamStore<double>&, const std::vector<Tensor<double>>&, OptimState<double>&, double,
                        const TrainConfig&);

namespace {

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(9);
    os << v;
    return os.str();
}

} // namespace

TrainResult train_loop(const std::vector<SamplePair>& samples, const LgfnConfig& cfg, const TrainConfig& tcfg,
                       ParamStore<float> init, const TrainOutputs& outputs) {
    cfg.validate();
    tcfg.validate();
    if (samples.empty()) throw InvalidInputError("train_loop: no training samples");
    for (const auto& s : samples) {
        s.validate();
        if (s.scale != cfg.scale)
            throw InvalidInputError("train_loop: sample scale " + std::to_string(s.scale) + " differs from model scale " +
                                    std::to_string(cfg.scale));
        if (s.lr.C() != 1) throw InvalidInputError("train_loop: samples must be single-channel luma fields");
    }

    std::ofstream log;
    if (!outputs.log_path.empty()) {
        log.open(outputs.log_path, std::ios::trunc);
        if (!log) throw InvalidInputError("cannot write training log " + outputs.log_path.string());
    }
    if (!outputs.checkpoint_dir.empty()) std::filesystem::create_directories(outputs.checkpoint_dir);

    TrainResult result;
    result.params = std::move(init);
    OptimState<float> state;
    std::mt19937_64 rng(tcfg.seed);
    const Index per_epoch = tcfg.steps_per_epoch > 0 ? tcfg.steps_per_epoch : static_cast<Index>(samples.size());
    std::vector<std::size_t> order(samples.size());
    Index step = 0;

    for (Index epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const double lr = lr_at(epoch, tcfg);
        double epoch_sum = 0;
        for (Index k = 0; k < per_epoch; ++k) {
            const std::size_t slot = static_cast<std::size_t>(k) % samples.size();
            if (slot == 0) {
                std::iota(order.begin(), order.end(), std::size_t{0});
                for (std::size_t i = order.size(); i > 1; --i)
                    std::swap(order[i - 1], order[static_cast<std::size_t>(rng() % i)]);
            }
            const SamplePair& base = samples[order[slot]];
            int code = 0;
            if (tcfg.augment) {
                const bool square = base.lr.U() == base.lr.V() && base.lr.H() == base.lr.W();
                code = static_cast<int>(rng() % (square ? 8 : 4));
            }
            const SamplePair sample = code == 0 ? base : augment(base, code);

            GradTape<float> tape;
            const ParamVars<float> vars = ParamVars<float>::on_tape(result.params, tape);
            const Var<float> sr = lgfn_forward(Var<float>(to_feature_layout<float>(sample.lr)), sample.lr.U(),
                                               sample.lr.V(), vars, cfg);
            const Var<float> hr(to_feature_layout<float>(sample.hr));
            const LossTerms<float> terms = combined_loss(sr, hr, tcfg.loss);
            ++step;
            StepLog entry{step, epoch, lr, terms.l1.value()[0], terms.fft_charbonnier.value()[0], terms.total.value()[0]};
            if (!std::isfinite(entry.total) || !std::isfinite(entry.l1) || !std::isfinite(entry.fft_charbonnier))
                throw TrainingError("non-finite loss at step " + std::to_string(step) + " (epoch " +
                                    std::to_string(epoch) + "): l1=" + format_double(entry.l1) + " fft_charbonnier=" +
                                    format_double(entry.fft_charbonnier) + " total=" + format_double(entry.total));
            tape.backward(terms.total);
            std::vector<Tensor<float>> grads;
            grads.reserve(vars.entries().size());
            for (const auto& [name, v] : vars.entries()) grads.push_back(v.grad());
            adam_step(result.params, grads, state, lr, tcfg);

            epoch_sum += entry.total;
            result.steps.push_back(entry);
            if (log.is_open()) {
                nlohmann::json j{{"step", entry.step}, {"epoch", entry.epoch}, {"lr", entry.lr}, {"l1", entry.l1},
                                 {"fft_charbonnier", entry.fft_charbonnier}, {"total", entry.total}};
                log << j.dump() << '\n';
            }
        }
        result.epoch_mean_loss.push_back(epoch_sum / double(per_epoch));
        if (!outputs.checkpoint_dir.empty() && tcfg.checkpoint_every > 0 && (epoch + 1) % tcfg.checkpoint_every == 0)
            checkpoint_save(result.params, outputs.checkpoint_dir / ("epoch_" + std::to_string(epoch + 1) + ".lgfn"));
    }
    if (!outputs.checkpoint_dir.empty()) checkpoint_save(result.params, outputs.checkpoint_dir / "final.lgfn");
    return result;
}

} // namespace lgfn
