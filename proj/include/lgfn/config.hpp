#pragma once

#include "lgfn/tensor.hpp"

#include <string>
#include <vector>

namespace lgfn {

enum class AttentionMode { parallel, cascade };
enum class Direction { horizontal, vertical };

std::string to_string(AttentionMode m);
AttentionMode parse_attention_mode(const std::string& s);
char direction_letter(Direction d);

struct LgfnConfig {
    Index channels = 64;
    Index num_lgfm = 7;
    Index scale = 4;
    Index angular = 5;  // U = V

    // The DGCE input projection emits channels * num / den before the split.
    Index dgce_expansion_num = 5;
    Index dgce_expansion_den = 2;

    Index esam_reduction = 4;
    // Total ESAM downsampling: a stride-2 depthwise 3x3 conv followed by a
    // (esam_downscale / 2)-window max pool.
    Index esam_downscale = 4;
    Index lka_kernel = 5;
    Index lka_dilated_kernel = 7;
    Index lka_dilation = 3;

    Index ecam_kernel = 3;

    AttentionMode attention_mode = AttentionMode::parallel;
    bool enable_dgce = true;
    bool enable_esam = true;
    bool enable_ecam = true;

    // One entry per LGFM; each letter (H or V) is one directional pass run in
    // order inside that LGFM, each pass with its own weights.
    std::vector<std::string> direction_schedule = std::vector<std::string>(7, "HV");

    Index dgce_hidden() const;  // width of each split half
    Index esam_channels() const;
    std::vector<Direction> directions(Index lgfm) const;

    // Throws ConfigError describing the first violated invariant.
    void validate() const;

    // Resets the schedule to `n` copies of `entry` and sets num_lgfm.
    void set_uniform_schedule(Index n, const std::string& entry = "HV");

    // Small configuration used for gradient checks and smoke tests.
    static LgfnConfig tiny();
};

} // namespace lgfn
