#include "lgfn/params.hpp"

#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>
#include <random>

namespace lgfn {

template <typename T>
void ParamStore<T>::add(const std::string& name, Tensor<T> t) {
    if (index_.count(name)) throw ConfigError("duplicate parameter name '" + name + "'");
    index_[name] = entries_.size();
    entries_.emplace_back(name, std::move(t));
}

template <typename T>
const Tensor<T>& ParamStore<T>::get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
    return entries_[it->second].second;
}

template <typename T>
Tensor<T>& ParamStore<T>::get(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ConfigError("missing parameter '" + name + "'");
    return entries_[it->second].second;
}

template <typename T>
Index ParamStore<T>::scalar_count() const {
    Index n = 0;
    for (const auto& e : entries_) n += e.second.numel();
    return n;
}

template <typename T>
bool ParamStore<T>::bit_equal(const ParamStore& o) const {
    if (entries_.size() != o.entries_.size()) return false;
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].first != o.entries_[i].first || !entries_[i].second.bit_equal(o.entries_[i].second))
            return false;
    return true;
}

template class ParamStore<float>;
template class ParamStore<double>;

std::string pass_prefix(Index lgfm, std::size_t pass, Direction d) {
    return "lgfm" + std::to_string(lgfm) + "." + direction_letter(d) + std::to_string(pass);
}

namespace {

void conv_spec(std::vector<ParamSpec>& out, const std::string& name, Index cout, Index cin_per_group, Index kh,
               Index kw, bool depth_axis = false) {
    Shape w = depth_axis ? Shape{cout, cin_per_group, 1, kh, kw} : Shape{cout, cin_per_group, kh, kw};
    out.push_back({name + ".weight", w, cin_per_group * kh * kw});
    out.push_back({name + ".bias", {cout}, 0});
}

} // namespace

std::vector<ParamSpec> param_specs(const LgfnConfig& cfg) {
    cfg.validate();
    const Index c = cfg.channels, h = cfg.dgce_hidden(), r = cfg.esam_channels(), s = cfg.scale;
    std::vector<ParamSpec> out;
    conv_spec(out, "shallow", c, 1, 3, 3, true);
    for (Index i = 0; i < cfg.num_lgfm; ++i) {
        const auto dirs = cfg.directions(i);
        for (std::size_t j = 0; j < dirs.size(); ++j) {
            const std::string p = pass_prefix(i, j, dirs[j]);
            if (cfg.enable_dgce) {
                conv_spec(out, p + ".dgce.expand", 2 * h, c, 1, 1);
                conv_spec(out, p + ".dgce.dw_a", h, 1, 3, 3);
                conv_spec(out, p + ".dgce.dw_b", h, 1, 3, 3);
                conv_spec(out, p + ".dgce.fuse", c, h, 1, 1);
                conv_spec(out, p + ".dgce.out", c, c, 1, 1);
            }
            if (cfg.enable_esam) {
                conv_spec(out, p + ".esam.reduce", r, c, 1, 1);
                conv_spec(out, p + ".esam.stride_dw", r, 1, 3, 3);
                conv_spec(out, p + ".esam.lka_dw", r, 1, cfg.lka_kernel, cfg.lka_kernel);
                conv_spec(out, p + ".esam.lka_dilated", r, 1, cfg.lka_dilated_kernel, cfg.lka_dilated_kernel);
                conv_spec(out, p + ".esam.lka_pw", r, r, 1, 1);
                conv_spec(out, p + ".esam.expand", c, r, 1, 1);
            }
            if (cfg.enable_ecam) {
                for (const char* path : {"max", "avg"}) {
                    const std::string n = p + ".ecam." + path;
                    out.push_back({n + ".weight", {cfg.ecam_kernel}, cfg.ecam_kernel});
                    out.push_back({n + ".bias", {1}, 0});
                }
            }
        }
    }
    conv_spec(out, "fusion", c, c, 3, 3, true);
    conv_spec(out, "upsampler.expand", c * s * s, c, 1, 1);
    conv_spec(out, "upsampler.out", 1, c, 3, 3);
    return out;
}

std::string param_group(const std::string& name) {
    if (name.rfind("lgfm", 0) == 0) {
        for (const char* g : {"dgce", "esam", "ecam"})
            if (name.find(std::string(".") + g + ".") != std::string::npos) return g;
        throw ConfigError("cannot group parameter '" + name + "'");
    }
    for (const char* g : {"shallow", "fusion", "upsampler"})
        if (name.rfind(g, 0) == 0) return g;
    throw ConfigError("cannot group parameter '" + name + "'");
}

ParamStore<float> init_params(const LgfnConfig& cfg, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ParamStore<float> store;
    for (const ParamSpec& spec : param_specs(cfg)) {
        if (spec.fan_in == 0) {
            store.add(spec.name, Tensor<float>(spec.shape));
        } else {
            const double bound = 1.0 / std::sqrt(double(spec.fan_in));
            store.add(spec.name, Tensor<float>::uniform(spec.shape, rng, -bound, bound));
        }
    }
    return store;
}

// ---- checkpoint file ----

namespace {

constexpr char kMagic[4] = {'L', 'G', 'F', 'N'};
constexpr std::uint32_t kVersion = 1;

template <typename U>
void put_le(std::string& out, U v) {
    for (std::size_t i = 0; i < sizeof(U); ++i) out.push_back(static_cast<char>((std::uint64_t(v) >> (8 * i)) & 0xFF));
}

struct Reader {
    const std::string& bytes;
    std::size_t pos = 0;
    std::string where;

    template <typename U>
    U get() {
        if (pos + sizeof(U) > bytes.size()) throw CheckpointError(where + ": truncated checkpoint");
        std::uint64_t v = 0;
        for (std::size_t i = 0; i < sizeof(U); ++i) v |= std::uint64_t(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
        pos += sizeof(U);
        return static_cast<U>(v);
    }
};

} // namespace

void checkpoint_save(const ParamStore<float>& p, const std::filesystem::path& path) {
    std::string bytes(kMagic, kMagic + 4);
    put_le<std::uint32_t>(bytes, kVersion);
    put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(p.size()));
    for (const auto& [name, t] : p.entries()) {
        if (name.size() > 0xFFFF) throw CheckpointError("parameter name too long: " + name.substr(0, 32));
        put_le<std::uint16_t>(bytes, static_cast<std::uint16_t>(name.size()));
        bytes += name;
        put_le<std::uint8_t>(bytes, static_cast<std::uint8_t>(t.rank()));
        for (Index e : t.shape()) put_le<std::uint32_t>(bytes, static_cast<std::uint32_t>(e));
        for (float v : t.span()) put_le<std::uint32_t>(bytes, std::bit_cast<std::uint32_t>(v));
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot write checkpoint " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CheckpointError("write failed for checkpoint " + path.string());
}

ParamStore<float> checkpoint_load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (bytes.size() < 4 || !std::equal(kMagic, kMagic + 4, bytes.begin()))
        throw CheckpointError(path.string() + ": not an LGFN checkpoint (bad magic)");
    Reader r{bytes, 4, path.string()};
    const auto version = r.get<std::uint32_t>();
    if (version != kVersion) throw CheckpointError(path.string() + ": unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>();
    ParamStore<float> store;
    for (std::uint32_t i = 0; i < count; ++i) {
        const auto len = r.get<std::uint16_t>();
        if (r.pos + len > bytes.size()) throw CheckpointError(path.string() + ": truncated checkpoint");
        std::string name = bytes.substr(r.pos, len);
        r.pos += len;
        const auto rank = r.get<std::uint8_t>();
        if (rank == 0) throw CheckpointError(path.string() + ": tensor '" + name + "' has rank 0");
        Shape shape;
        for (int d = 0; d < rank; ++d) {
            const auto e = r.get<std::uint32_t>();
            if (e == 0) throw CheckpointError(path.string() + ": tensor '" + name + "' has a zero extent");
            shape.push_back(e);
        }
        const Index n = shape_numel(shape);
        if (r.pos + 4 * static_cast<std::size_t>(n) > bytes.size())
            throw CheckpointError(path.string() + ": truncated payload for '" + name + "'");
        Tensor<float> t(shape);
        for (Index k = 0; k < n; ++k) t[k] = std::bit_cast<float>(r.get<std::uint32_t>());
        store.add(name, std::move(t));
    }
    if (r.pos != bytes.size()) throw CheckpointError(path.string() + ": trailing bytes after last tensor");
    return store;
}

ParamStore<float> checkpoint_load(const std::filesystem::path& path, const LgfnConfig& cfg) {
    ParamStore<float> store = checkpoint_load(path);
    const auto specs = param_specs(cfg);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        const ParamSpec& s = specs[i];
        if (i >= store.size())
            throw CheckpointError("checkpoint lacks tensor '" + s.name + "' required by the configuration");
        const auto& [name, t] = store.entries()[i];
        if (name != s.name)
            throw CheckpointError("checkpoint tensor '" + name + "' found where the configuration expects '" + s.name + "'");
        if (t.shape() != s.shape)
            throw CheckpointError("checkpoint tensor '" + name + "' has shape " + shape_str(t.shape()) +
                                  ", configuration expects " + shape_str(s.shape));
    }
    if (store.size() > specs.size())
        throw CheckpointError("checkpoint tensor '" + store.entries()[specs.size()].first +
                              "' is not part of the configuration");
    return store;
}

std::size_t checkpoint_size_bytes(const ParamStore<float>& p) {
    std::size_t n = 12;
    for (const auto& [name, t] : p.entries()) n += 2 + name.size() + 1 + 4 * t.shape().size() + 4 * t.numel();
    return n;
}

} // namespace lgfn
