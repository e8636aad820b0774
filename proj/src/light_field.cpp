#include "lgfn/light_field.hpp"

#include "lgfn/kernels.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <fstream>
#include <iterator>

namespace lgfn {

LightField::LightField(Tensor<float> t) : data(std::move(t)) {
    if (data.rank() != 5) throw ShapeError("light field tensor must be [U,V,C,H,W], got " + shape_str(data.shape()));
}

LightField::LightField(Index u, Index v, Index c, Index h, Index w, float fill) : data({u, v, c, h, w}, fill) {}

Tensor<float> LightField::view(Index u, Index v) const {
    if (u < 0 || u >= U() || v < 0 || v >= V()) throw BoundsError("view index out of range");
    const Index n = C() * H() * W();
    Tensor<float> out({C(), H(), W()});
    std::copy_n(data.data() + (u * V() + v) * n, n, out.data());
    return out;
}

void SamplePair::validate() const {
    if (scale < 1) throw InvalidInputError("sample pair scale must be >= 1");
    if (lr.U() != hr.U() || lr.V() != hr.V() || lr.C() != hr.C())
        throw InvalidInputError("sample pair angular/channel extents differ: lr " + shape_str(lr.data.shape()) +
                                " hr " + shape_str(hr.data.shape()));
    if (hr.H() != scale * lr.H() || hr.W() != scale * lr.W())
        throw InvalidInputError("sample pair hr extents are not " + std::to_string(scale) + "x lr: lr " +
                                shape_str(lr.data.shape()) + " hr " + shape_str(hr.data.shape()));
}

// ---- .lf4 container ----

namespace {

constexpr std::array<char, 4> kLf4Magic{'L', 'F', '4', 'D'};
constexpr std::uint32_t kLf4Version = 1;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint32_t get_u32(const unsigned char* p) {
    return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) | (std::uint32_t(p[2]) << 16) |
           (std::uint32_t(p[3]) << 24);
}

std::string read_all(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInputError("cannot open " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_all(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InvalidInputError("cannot write " + path.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InvalidInputError("write failed for " + path.string());
}

} // namespace

void lf_store(const LightField& lf, const std::filesystem::path& path) {
    std::string bytes(kLf4Magic.begin(), kLf4Magic.end());
    put_u32(bytes, kLf4Version);
    for (Index e : lf.data.shape()) put_u32(bytes, static_cast<std::uint32_t>(e));
    bytes.reserve(bytes.size() + 4 * static_cast<std::size_t>(lf.data.numel()));
    for (float v : lf.data.span()) put_u32(bytes, std::bit_cast<std::uint32_t>(v));
    write_all(path, bytes);
}

LightField lf_load(const std::filesystem::path& path) {
    const std::string bytes = read_all(path);
    if (bytes.size() < 4 || !std::equal(kLf4Magic.begin(), kLf4Magic.end(), bytes.begin()))
        throw FormatError(path.string() + ": not an LF4D file (bad magic)");
    if (bytes.size() < kLf4HeaderBytes) throw CorruptionError(path.string() + ": truncated header");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    const std::uint32_t version = get_u32(p + 4);
    if (version != kLf4Version)
        throw FormatError(path.string() + ": unsupported LF4D version " + std::to_string(version));
    Shape shape;
    for (int i = 0; i < 5; ++i) {
        const std::uint32_t e = get_u32(p + 8 + 4 * i);
        if (e == 0) throw CorruptionError(path.string() + ": zero extent in header");
        shape.push_back(static_cast<Index>(e));
    }
    const std::size_t expected = kLf4HeaderBytes + 4 * static_cast<std::size_t>(shape_numel(shape));
    if (bytes.size() != expected)
        throw CorruptionError(path.string() + ": payload is " + std::to_string(bytes.size() - kLf4HeaderBytes) +
                              " bytes, header implies " + std::to_string(expected - kLf4HeaderBytes));
    Tensor<float> t(shape);
    for (Index i = 0; i < t.numel(); ++i) {
        const float v = std::bit_cast<float>(get_u32(p + kLf4HeaderBytes + 4 * i));
        if (!std::isfinite(v)) throw CorruptionError(path.string() + ": non-finite sample at index " + std::to_string(i));
        t[i] = std::clamp(v, 0.0f, 1.0f);
    }
    return LightField(std::move(t));
}

// ---- netpbm ----

namespace {

struct NetpbmHeader {
    char kind = 0;
    Index width = 0, height = 0, maxval = 0;
    std::size_t data_offset = 0;
};

NetpbmHeader parse_netpbm_header(const std::string& bytes, const std::string& name) {
    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6'))
        throw IngestError(name + ": not a binary PGM/PPM (P5/P6) file");
    NetpbmHeader h;
    h.kind = bytes[1];
    std::size_t pos = 2;
    auto next_int = [&]() -> Index {
        while (pos < bytes.size()) {
            const char c = bytes[pos];
            if (c == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++pos;
            } else {
                break;
            }
        }
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos])))
            throw IngestError(name + ": malformed netpbm header");
        Index v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > (Index{1} << 30)) throw IngestError(name + ": header value too large");
            ++pos;
        }
        return v;
    };
    h.width = next_int();
    h.height = next_int();
    h.maxval = next_int();
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw IngestError(name + ": malformed netpbm header");
    h.data_offset = pos + 1;
    if (h.width < 1 || h.height < 1) throw IngestError(name + ": zero image extent");
    if (h.maxval != 255) throw IngestError(name + ": only 8-bit samples (maxval 255) are supported");
    return h;
}

} // namespace

Tensor<float> read_netpbm(const std::filesystem::path& path) {
    const std::string name = path.filename().string();
    std::string bytes;
    try {
        bytes = read_all(path);
    } catch (const InvalidInputError&) {
        throw IngestError("cannot read " + path.string());
    }
    const NetpbmHeader h = parse_netpbm_header(bytes, name);
    const Index c = h.kind == '5' ? 1 : 3;
    const std::size_t need = static_cast<std::size_t>(c * h.width * h.height);
    if (bytes.size() - h.data_offset < need) throw IngestError(name + ": truncated pixel data");
    Tensor<float> img({c, h.height, h.width});
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
    for (Index y = 0; y < h.height; ++y)
        for (Index x = 0; x < h.width; ++x)
            for (Index ch = 0; ch < c; ++ch)
                img[(ch * h.height + y) * h.width + x] = float(p[(y * h.width + x) * c + ch]) / 255.0f;
    return img;
}

void write_netpbm(const Tensor<float>& image, const std::filesystem::path& path) {
    if (image.rank() != 3 || (image.dim(0) != 1 && image.dim(0) != 3))
        throw ShapeError("write_netpbm: image must be [1|3,H,W], got " + shape_str(image.shape()));
    const Index c = image.dim(0), h = image.dim(1), w = image.dim(2);
    std::string bytes = std::string(c == 1 ? "P5" : "P6") + "\n" + std::to_string(w) + " " + std::to_string(h) +
                        "\n255\n";
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < w; ++x)
            for (Index ch = 0; ch < c; ++ch) {
                const float v = std::clamp(image[(ch * h + y) * w + x], 0.0f, 1.0f);
                bytes.push_back(static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0f))));
            }
    write_all(path, bytes);
}

LightField import_views(const std::filesystem::path& directory, Index U, Index V) {
    if (U < 1 || V < 1) throw InvalidInputError("import_views: angular extents must be >= 1");
    LightField lf;
    for (Index u = 0; u < U; ++u)
        for (Index v = 0; v < V; ++v) {
            const std::string stem = "view_" + std::to_string(u) + "_" + std::to_string(v);
            std::filesystem::path file = directory / (stem + ".pgm");
            if (!std::filesystem::exists(file)) file = directory / (stem + ".ppm");
            if (!std::filesystem::exists(file))
                throw IngestError("missing view " + stem + ".pgm/.ppm in " + directory.string());
            const Tensor<float> img = read_netpbm(file);
            if (u == 0 && v == 0) {
                lf = LightField(U, V, img.dim(0), img.dim(1), img.dim(2));
            } else if (img.dim(0) != lf.C() || img.dim(1) != lf.H() || img.dim(2) != lf.W()) {
                throw IngestError(file.filename().string() + ": dimensions " + std::to_string(img.dim(2)) + "x" +
                                  std::to_string(img.dim(1)) + "x" + std::to_string(img.dim(0)) +
                                  " differ from view_0_0 (" + std::to_string(lf.W()) + "x" +
                                  std::to_string(lf.H()) + "x" + std::to_string(lf.C()) + ")");
            }
            std::copy(img.span().begin(), img.span().end(), lf.data.data() + (u * V + v) * img.numel());
        }
    for (float& x : lf.data.span()) x = std::clamp(x, 0.0f, 1.0f);
    return lf;
}

float luma_bt601(float r, float g, float b) {
    const double y = (65.481 * r + 128.553 * g + 24.966 * b + 16.0) / 255.0;
    return static_cast<float>(std::clamp(y, 0.0, 1.0));
}

LightField rgb_to_y(const LightField& lf) {
    if (lf.C() != 3) throw InvalidInputError("rgb_to_y: expected 3 channels, got " + std::to_string(lf.C()));
    LightField out(lf.U(), lf.V(), 1, lf.H(), lf.W());
    const Index plane = lf.H() * lf.W();
    for (Index view = 0; view < lf.U() * lf.V(); ++view) {
        const float* src = lf.data.data() + view * 3 * plane;
        float* dst = out.data.data() + view * plane;
        for (Index i = 0; i < plane; ++i) dst[i] = luma_bt601(src[i], src[plane + i], src[2 * plane + i]);
    }
    return out;
}

EpiImage extract_epi(const LightField& field, EpiOrientation orientation, Index fixed_angular, Index fixed_spatial) {
    const LightField luma = field.C() == 1 ? field : rgb_to_y(field);
    EpiImage epi;
    epi.orientation = orientation;
    epi.fixed_angular = fixed_angular;
    epi.fixed_spatial = fixed_spatial;
    if (orientation == EpiOrientation::horizontal) {
        if (fixed_angular < 0 || fixed_angular >= luma.U() || fixed_spatial < 0 || fixed_spatial >= luma.H())
            throw BoundsError("extract_epi: (u,h) = (" + std::to_string(fixed_angular) + "," +
                              std::to_string(fixed_spatial) + ") outside field " + shape_str(luma.data.shape()));
        epi.pixels = Tensor<float>({luma.V(), luma.W()});
        for (Index v = 0; v < luma.V(); ++v)
            for (Index w = 0; w < luma.W(); ++w)
                epi.pixels[v * luma.W() + w] = luma.at(fixed_angular, v, 0, fixed_spatial, w);
    } else {
        if (fixed_angular < 0 || fixed_angular >= luma.V() || fixed_spatial < 0 || fixed_spatial >= luma.W())
            throw BoundsError("extract_epi: (v,w) = (" + std::to_string(fixed_angular) + "," +
                              std::to_string(fixed_spatial) + ") outside field " + shape_str(luma.data.shape()));
        epi.pixels = Tensor<float>({luma.U(), luma.H()});
        for (Index u = 0; u < luma.U(); ++u)
            for (Index h = 0; h < luma.H(); ++h)
                epi.pixels[u * luma.H() + h] = luma.at(u, fixed_angular, 0, h, fixed_spatial);
    }
    return epi;
}

LightField degrade_bicubic(const LightField& hr, Index s) {
    if (s < 1) throw InvalidInputError("degrade_bicubic: scale must be >= 1");
    if (hr.H() % s != 0 || hr.W() % s != 0)
        throw InvalidInputError("degrade_bicubic: spatial extents " + std::to_string(hr.H()) + "x" +
                                std::to_string(hr.W()) + " not divisible by " + std::to_string(s));
    return LightField(kernels::resize(hr.data, hr.H() / s, hr.W() / s, kernels::ResizeMode::bicubic));
}

LightField disparity_field(Index U, Index V, Index H, Index W, double disparity, double taper) {
    if (U < 1 || V < 1 || H < 1 || W < 1) throw InvalidInputError("disparity_field: extents must be >= 1");
    if (taper < 0) throw InvalidInputError("disparity_field: taper must be >= 0");
    const double pi = std::acos(-1.0);
    auto fade = [&](Index p, Index n) {
        if (taper == 0) return 1.0;
        const double t = std::clamp(double(std::min(p, n - 1 - p)) / taper, 0.0, 1.0);
        return 0.5 - 0.5 * std::cos(pi * t);
    };
    LightField lf(U, V, 1, H, W);
    for (Index u = 0; u < U; ++u)
        for (Index v = 0; v < V; ++v)
            for (Index y = 0; y < H; ++y)
                for (Index x = 0; x < W; ++x) {
                    const double yy = double(y) - disparity * (double(u) - 0.5 * double(U - 1));
                    const double xx = double(x) - disparity * (double(v) - 0.5 * double(V - 1));
                    const double texture = 0.2 * std::sin(0.8 * xx + 0.24 * yy) + 0.15 * std::cos(0.6 * yy - 0.15 * xx);
                    lf.at(u, v, 0, y, x) = static_cast<float>(0.5 + fade(y, H) * fade(x, W) * texture);
                }
    return lf;
}

Index patch_grid_count(Index extent, Index patch, Index stride) {
    if (stride < 1) throw InvalidInputError("patch stride must be >= 1");
    if (patch < 1 || patch > extent)
        throw InvalidInputError("patch size " + std::to_string(patch) + " does not fit extent " + std::to_string(extent));
    return (extent - patch) / stride + 1;
}

std::vector<SamplePair> extract_patches(const SamplePair& source, Index lr_patch, Index stride) {
    source.validate();
    const Index ny = patch_grid_count(source.lr.H(), lr_patch, stride);
    const Index nx = patch_grid_count(source.lr.W(), lr_patch, stride);
    const Index s = source.scale;
    auto crop = [](const LightField& lf, Index y0, Index x0, Index size) {
        LightField out(lf.U(), lf.V(), lf.C(), size, size);
        for (Index p = 0; p < lf.U() * lf.V() * lf.C(); ++p)
            for (Index y = 0; y < size; ++y)
                std::copy_n(lf.data.data() + (p * lf.H() + y0 + y) * lf.W() + x0, size,
                            out.data.data() + (p * size + y) * size);
        return out;
    };
    std::vector<SamplePair> out;
    out.reserve(static_cast<std::size_t>(ny * nx));
    for (Index iy = 0; iy < ny; ++iy)
        for (Index ix = 0; ix < nx; ++ix) {
            const Index y0 = iy * stride, x0 = ix * stride;
            out.push_back({crop(source.lr, y0, x0, lr_patch), crop(source.hr, y0 * s, x0 * s, lr_patch * s), s});
        }
    return out;
}

namespace {

// Maps out[u,v,c,h,w] = in[src(u,v,h,w)] for a geometric transform.
template <typename Map>
LightField remap(const LightField& in, Index U, Index V, Index H, Index W, Map map) {
    LightField out(U, V, in.C(), H, W);
    for (Index u = 0; u < U; ++u)
        for (Index v = 0; v < V; ++v)
            for (Index c = 0; c < in.C(); ++c)
                for (Index h = 0; h < H; ++h)
                    for (Index w = 0; w < W; ++w) {
                        const auto [su, sv, sh, sw] = map(u, v, h, w);
                        out.at(u, v, c, h, w) = in.at(su, sv, c, sh, sw);
                    }
    return out;
}

using Coord = std::array<Index, 4>;

} // namespace

LightField augment(const LightField& lf, int code) {
    if (code < 0 || code > 7) throw InvalidInputError("augment code must be in 0..7, got " + std::to_string(code));
    const bool rotate = code & 4;
    if (rotate && (lf.U() != lf.V() || lf.H() != lf.W()))
        throw InvalidInputError("augment: rotation needs square angular and spatial extents, got " +
                                shape_str(lf.data.shape()));
    LightField cur = lf;
    const Index U = lf.U(), V = lf.V(), H = lf.H(), W = lf.W();
    if (code & 1)
        cur = remap(cur, U, V, H, W, [&](Index u, Index v, Index h, Index w) { return Coord{u, V - 1 - v, h, W - 1 - w}; });
    if (code & 2)
        cur = remap(cur, U, V, H, W, [&](Index u, Index v, Index h, Index w) { return Coord{U - 1 - u, v, H - 1 - h, w}; });
    if (rotate)
        cur = remap(cur, U, V, H, W, [&](Index u, Index v, Index h, Index w) { return Coord{v, U - 1 - u, w, H - 1 - h}; });
    return cur;
}

SamplePair augment(const SamplePair& pair, int code) {
    return {augment(pair.lr, code), augment(pair.hr, code), pair.scale};
}

int inverse_code(int code) {
    if (code < 0 || code > 7) throw InvalidInputError("augment code must be in 0..7, got " + std::to_string(code));
    static const std::array<int, 8> table = [] {
        LightField probe(2, 2, 1, 2, 2);
        for (Index i = 0; i < probe.data.numel(); ++i) probe.data[i] = float(i);
        std::array<int, 8> t{};
        for (int c = 0; c < 8; ++c) {
            const LightField moved = augment(probe, c);
            t[c] = -1;
            for (int k = 0; k < 8 && t[c] < 0; ++k)
                if (augment(moved, k).data == probe.data) t[c] = k;
        }
        return t;
    }();
    return table[static_cast<std::size_t>(code)];
}

template <typename T>
Tensor<T> to_feature_layout(const LightField& lf) {
    if (lf.C() != 1) throw InvalidInputError("feature layout needs a single-channel field, got C=" + std::to_string(lf.C()));
    return lf.data.template cast<T>().reshaped({1, lf.U() * lf.V(), lf.H(), lf.W()});
}

template <typename T>
LightField from_feature_layout(const Tensor<T>& t, Index U, Index V) {
    if (t.rank() != 4 || t.dim(0) != 1 || t.dim(1) != U * V)
        throw ShapeError("feature layout tensor " + shape_str(t.shape()) + " does not hold " + std::to_string(U) + "x" +
                         std::to_string(V) + " views");
    return LightField(t.template cast<float>().reshaped({U, V, 1, t.dim(2), t.dim(3)}));
}

template Tensor<float> to_feature_layout<float>(const LightField&);
template Tensor<double> to_feature_layout<double>(const LightField&);
template LightField from_feature_layout<float>(const Tensor<float>&, Index, Index);
template LightField from_feature_layout<double>(const Tensor<double>&, Index, Index);

} // namespace lgfn
