#include "lgfn/config.hpp"

namespace lgfn {

std::string to_string(AttentionMode m) { return m == AttentionMode::parallel ? "parallel" : "cascade"; }

AttentionMode parse_attention_mode(const std::string& s) {
    if (s == "parallel") return AttentionMode::parallel;
    if (s == "cascade") return AttentionMode::cascade;
    throw ConfigError("attention mode must be 'parallel' or 'cascade', got '" + s + "'");
}

char direction_letter(Direction d) { return d == Direction::horizontal ? 'h' : 'v'; }

Index LgfnConfig::dgce_hidden() const { return channels * dgce_expansion_num / (2 * dgce_expansion_den); }

Index LgfnConfig::esam_channels() const { return channels / esam_reduction; }

std::vector<Direction> LgfnConfig::directions(Index lgfm) const {
    if (lgfm < 0 || lgfm >= static_cast<Index>(direction_schedule.size()))
        throw ConfigError("no schedule entry for LGFM " + std::to_string(lgfm));
    std::vector<Direction> out;
    for (char c : direction_schedule[static_cast<std::size_t>(lgfm)]) {
        if (c == 'H' || c == 'h')
            out.push_back(Direction::horizontal);
        else if (c == 'V' || c == 'v')
            out.push_back(Direction::vertical);
        else
            throw ConfigError(std::string("direction schedule letters must be H or V, got '") + c + "'");
    }
    return out;
}

void LgfnConfig::validate() const {
    auto fail = [](const std::string& m) { throw ConfigError(m); };
    if (channels < 1) fail("channels must be >= 1");
    if (num_lgfm < 1) fail("num_lgfm must be >= 1");
    if (scale != 2 && scale != 4) fail("scale must be 2 or 4, got " + std::to_string(scale));
    if (angular < 1) fail("angular extent must be >= 1");
    if (dgce_expansion_num < 1 || dgce_expansion_den < 1) fail("DGCE expansion must be a positive ratio");
    if (channels % (2 * dgce_expansion_den) != 0)
        fail("channels (" + std::to_string(channels) + ") must be divisible by 2 * expansion denominator (" +
             std::to_string(2 * dgce_expansion_den) + ")");
    if (esam_reduction < 1 || channels % esam_reduction != 0)
        fail("channels (" + std::to_string(channels) + ") must be divisible by esam_reduction (" +
             std::to_string(esam_reduction) + ")");
    if (esam_downscale < 2 || esam_downscale % 2 != 0) fail("esam_downscale must be an even number >= 2");
    if (lka_kernel < 1 || lka_kernel % 2 == 0 || lka_dilated_kernel < 1 || lka_dilated_kernel % 2 == 0)
        fail("LKA kernels must be odd and positive");
    if (lka_dilation < 1) fail("LKA dilation must be >= 1");
    if (ecam_kernel < 1 || ecam_kernel % 2 == 0) fail("ECAM kernel must be odd and positive");
    if (enable_ecam && channels < ecam_kernel)
        fail("ECAM needs at least " + std::to_string(ecam_kernel) + " channels, got " + std::to_string(channels));
    if (static_cast<Index>(direction_schedule.size()) != num_lgfm)
        fail("direction schedule has " + std::to_string(direction_schedule.size()) + " entries for " +
             std::to_string(num_lgfm) + " LGFMs");
    for (Index i = 0; i < num_lgfm; ++i)
        if (directions(i).empty()) fail("direction schedule entry " + std::to_string(i) + " is empty");
}

void LgfnConfig::set_uniform_schedule(Index n, const std::string& entry) {
    num_lgfm = n;
    direction_schedule.assign(static_cast<std::size_t>(std::max<Index>(n, 0)), entry);
}

LgfnConfig LgfnConfig::tiny() {
    LgfnConfig c;
    c.channels = 8;
    c.scale = 2;
    c.angular = 2;
    c.set_uniform_schedule(1);
    return c;
}

} // namespace lgfn
