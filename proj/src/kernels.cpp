#include "lgfn/kernels.hpp"

#include <cmath>
#include <numbers>

namespace lgfn {

namespace {
thread_local OpCounter* g_active_counter = nullptr;
}

OpCounter::OpCounter() : previous_(g_active_counter) { g_active_counter = this; }
OpCounter::~OpCounter() { g_active_counter = previous_; }

void OpCounter::add_macs(std::uint64_t n) {
    if (g_active_counter) g_active_counter->counts_.macs += n;
}

void OpCounter::add_elementwise(std::uint64_t n) {
    if (g_active_counter) g_active_counter->counts_.elementwise += n;
}

} // namespace lgfn

namespace lgfn::kernels {

namespace {

Index floor_div(Index a, Index b) {
    Index q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

Index ceil_div(Index a, Index b) { return -floor_div(-a, b); }

// Valid output range [lo, hi) such that in = o*stride + offset lies in [0, extent).
std::pair<Index, Index> valid_range(Index out_extent, Index stride, Index offset, Index extent) {
    Index lo = std::max<Index>(0, ceil_div(-offset, stride));
    Index hi = std::min<Index>(out_extent, floor_div(extent - 1 - offset, stride) + 1);
    if (hi < lo) hi = lo;
    return {lo, hi};
}

void require_rank(const Shape& s, Index r, const char* what) {
    if (static_cast<Index>(s.size()) != r)
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(r) + ", got " + shape_str(s));
}

struct ConvGeometry {
    Index n, cin, h, w, cout, cin_g, cout_g, ho, wo;
};

template <typename T>
ConvGeometry conv_geometry(const Tensor<T>& x, const Tensor<T>& w, const ConvSpec& spec) {
    spec.validate();
    require_rank(x.shape(), 4, "conv2d input");
    require_rank(w.shape(), 4, "conv2d weight");
    ConvGeometry g{};
    g.n = x.dim(0);
    g.cin = x.dim(1);
    g.h = x.dim(2);
    g.w = x.dim(3);
    g.cout = w.dim(0);
    g.cin_g = w.dim(1);
    if (w.dim(2) != spec.kernel_h || w.dim(3) != spec.kernel_w)
        throw ShapeError("conv2d: weight kernel " + shape_str(w.shape()) + " disagrees with spec " +
                         std::to_string(spec.kernel_h) + "x" + std::to_string(spec.kernel_w));
    if (g.cin % spec.groups != 0 || g.cout % spec.groups != 0)
        throw ShapeError("conv2d: groups=" + std::to_string(spec.groups) + " must divide Cin=" +
                         std::to_string(g.cin) + " and Cout=" + std::to_string(g.cout));
    if (g.cin_g != g.cin / spec.groups)
        throw ShapeError("conv2d: weight expects " + std::to_string(g.cin_g * spec.groups) +
                         " input channels, input has " + std::to_string(g.cin));
    g.cout_g = g.cout / spec.groups;
    g.ho = conv_output_extent(g.h, spec.kernel_h, spec.stride, spec.dilation, spec.pad_h);
    g.wo = conv_output_extent(g.w, spec.kernel_w, spec.stride, spec.dilation, spec.pad_w);
    return g;
}

} // namespace

ConvSpec ConvSpec::same(Index kh, Index kw, Index dilation, Index groups, Index stride) {
    if (kh % 2 == 0 || kw % 2 == 0) throw InvalidSpecError("'same' padding requires odd kernels");
    ConvSpec s;
    s.kernel_h = kh;
    s.kernel_w = kw;
    s.dilation = dilation;
    s.groups = groups;
    s.stride = stride;
    s.pad_h = dilation * (kh - 1) / 2;
    s.pad_w = dilation * (kw - 1) / 2;
    return s;
}

void ConvSpec::validate() const {
    if (kernel_h < 1 || kernel_w < 1) throw InvalidSpecError("convolution kernel extents must be >= 1");
    if (stride < 1 || dilation < 1 || groups < 1)
        throw InvalidSpecError("convolution stride, dilation and groups must be >= 1");
    if (pad_h < 0 || pad_w < 0) throw InvalidSpecError("convolution padding must be >= 0");
}

Index conv_output_extent(Index in, Index kernel, Index stride, Index dilation, Index pad) {
    const Index span = dilation * (kernel - 1) + 1;
    if (in + 2 * pad < span)
        throw ShapeError("convolution window (" + std::to_string(span) + ") exceeds padded input (" +
                         std::to_string(in + 2 * pad) + ")");
    return (in + 2 * pad - span) / stride + 1;
}

template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, const ConvSpec& spec) {
    const ConvGeometry g = conv_geometry(x, w, spec);
    if (b && (b->rank() != 1 || b->dim(0) != g.cout))
        throw ShapeError("conv2d: bias shape " + shape_str(b->shape()) + " does not match Cout=" +
                         std::to_string(g.cout));
    Tensor<T> y({g.n, g.cout, g.ho, g.wo});
    const Index kh = spec.kernel_h, kw = spec.kernel_w, s = spec.stride, d = spec.dilation;
    const Index plane_in = g.h * g.w, plane_out = g.ho * g.wo;
    for (Index n = 0; n < g.n; ++n) {
        for (Index oc = 0; oc < g.cout; ++oc) {
            T* out = y.data() + (n * g.cout + oc) * plane_out;
            if (b) std::fill(out, out + plane_out, (*b)[oc]);
            const Index grp = oc / g.cout_g;
            for (Index icg = 0; icg < g.cin_g; ++icg) {
                const Index ic = grp * g.cin_g + icg;
                const T* in = x.data() + (n * g.cin + ic) * plane_in;
                const T* wk = w.data() + ((oc * g.cin_g + icg) * kh) * kw;
                for (Index ki = 0; ki < kh; ++ki) {
                    const auto [oh_lo, oh_hi] = valid_range(g.ho, s, ki * d - spec.pad_h, g.h);
                    for (Index kj = 0; kj < kw; ++kj) {
                        const T wv = wk[ki * kw + kj];
                        const Index off_w = kj * d - spec.pad_w;
                        const auto [ow_lo, ow_hi] = valid_range(g.wo, s, off_w, g.w);
                        for (Index oh = oh_lo; oh < oh_hi; ++oh) {
                            const T* irow = in + (oh * s + ki * d - spec.pad_h) * g.w + off_w;
                            T* orow = out + oh * g.wo;
                            if (s == 1) {
                                for (Index ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wv * irow[ow];
                            } else {
                                for (Index ow = ow_lo; ow < ow_hi; ++ow) orow[ow] += wv * irow[ow * s];
                            }
                        }
                    }
                }
            }
        }
    }
    OpCounter::add_macs(static_cast<std::uint64_t>(g.n * g.cout * plane_out * g.cin_g * kh * kw));
    return y;
}

template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, const ConvSpec& spec,
                     Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb) {
    const ConvGeometry g = conv_geometry(x, w, spec);
    if (gy.shape() != Shape{g.n, g.cout, g.ho, g.wo})
        throw ShapeError("conv2d_backward: output gradient shape " + shape_str(gy.shape()));
    const Index kh = spec.kernel_h, kw = spec.kernel_w, s = spec.stride, d = spec.dilation;
    const Index plane_in = g.h * g.w, plane_out = g.ho * g.wo;
    if (gx) *gx = Tensor<T>(x.shape());
    if (gw) *gw = Tensor<T>(w.shape());
    if (gb) {
        *gb = Tensor<T>({g.cout});
        for (Index oc = 0; oc < g.cout; ++oc) {
            double acc = 0;
            for (Index n = 0; n < g.n; ++n) {
                const T* go = gy.data() + (n * g.cout + oc) * plane_out;
                for (Index i = 0; i < plane_out; ++i) acc += go[i];
            }
            (*gb)[oc] = static_cast<T>(acc);
        }
    }
    if (!gx && !gw) return;
    for (Index oc = 0; oc < g.cout; ++oc) {
        const Index grp = oc / g.cout_g;
        for (Index icg = 0; icg < g.cin_g; ++icg) {
            const Index ic = grp * g.cin_g + icg;
            for (Index ki = 0; ki < kh; ++ki) {
                const auto [oh_lo, oh_hi] = valid_range(g.ho, s, ki * d - spec.pad_h, g.h);
                for (Index kj = 0; kj < kw; ++kj) {
                    const Index widx = ((oc * g.cin_g + icg) * kh + ki) * kw + kj;
                    const T wv = w[widx];
                    const Index off_w = kj * d - spec.pad_w;
                    const auto [ow_lo, ow_hi] = valid_range(g.wo, s, off_w, g.w);
                    double wacc = 0;
                    for (Index n = 0; n < g.n; ++n) {
                        const T* go = gy.data() + (n * g.cout + oc) * plane_out;
                        const T* in = x.data() + (n * g.cin + ic) * plane_in;
                        T* gin = gx ? gx->data() + (n * g.cin + ic) * plane_in : nullptr;
                        for (Index oh = oh_lo; oh < oh_hi; ++oh) {
                            const Index row = (oh * s + ki * d - spec.pad_h) * g.w + off_w;
                            const T* grow = go + oh * g.wo;
                            if (gin) {
                                T* girow = gin + row;
                                for (Index ow = ow_lo; ow < ow_hi; ++ow) girow[ow * s] += wv * grow[ow];
                            }
                            if (gw) {
                                const T* irow = in + row;
                                T acc = 0;
                                for (Index ow = ow_lo; ow < ow_hi; ++ow) acc += grow[ow] * irow[ow * s];
                                wacc += acc;
                            }
                        }
                    }
                    if (gw) (*gw)[widx] = static_cast<T>(wacc);
                }
            }
        }
    }
}

namespace {

template <typename T>
Index pooled_channels(const Tensor<T>& x, const char* what) {
    if (x.rank() < 2) throw ShapeError(std::string(what) + ": needs rank >= 2, got " + shape_str(x.shape()));
    return x.numel() / (x.dim(-1) * x.dim(-2));
}

void check_channel_pooled(const Shape& s, const char* what) {
    if (s.size() < 2) throw ShapeError(std::string(what) + ": needs [N,C,...] input");
    for (std::size_t i = 2; i < s.size(); ++i)
        if (s[i] != 1) throw ShapeError(std::string(what) + ": expected pooled [N,C,1,1] input, got " + shape_str(s));
}

} // namespace

template <typename T>
Tensor<T> channel_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b) {
    check_channel_pooled(x.shape(), "channel_conv1d");
    if (w.rank() != 1 || w.dim(0) % 2 == 0) throw InvalidSpecError("channel_conv1d: kernel must be 1-D and odd");
    if (b.numel() != 1) throw ShapeError("channel_conv1d: bias must hold one scalar");
    const Index n = x.dim(0), c = x.dim(1), k = w.dim(0), half = k / 2;
    Tensor<T> y(x.shape());
    for (Index i = 0; i < n; ++i)
        for (Index ch = 0; ch < c; ++ch) {
            T acc = b[0];
            for (Index j = 0; j < k; ++j) {
                const Index src = ch + j - half;
                if (src >= 0 && src < c) acc += w[j] * x[i * c + src];
            }
            y[i * c + ch] = acc;
        }
    OpCounter::add_macs(static_cast<std::uint64_t>(n * c * k));
    return y;
}

template <typename T>
void channel_conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>* gx,
                             Tensor<T>* gw, Tensor<T>* gb) {
    const Index n = x.dim(0), c = x.dim(1), k = w.dim(0), half = k / 2;
    if (gx) *gx = Tensor<T>(x.shape());
    if (gw) *gw = Tensor<T>(w.shape());
    if (gb) *gb = Tensor<T>({1});
    double bacc = 0;
    std::vector<double> wacc(static_cast<std::size_t>(k), 0.0);
    for (Index i = 0; i < n; ++i)
        for (Index ch = 0; ch < c; ++ch) {
            const T g = gy[i * c + ch];
            bacc += g;
            for (Index j = 0; j < k; ++j) {
                const Index src = ch + j - half;
                if (src < 0 || src >= c) continue;
                if (gx) (*gx)[i * c + src] += w[j] * g;
                wacc[static_cast<std::size_t>(j)] += double(g) * double(x[i * c + src]);
            }
        }
    if (gb) (*gb)[0] = static_cast<T>(bacc);
    if (gw)
        for (Index j = 0; j < k; ++j) (*gw)[j] = static_cast<T>(wacc[static_cast<std::size_t>(j)]);
}

template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, PoolKind kind, Index kernel, Index stride, Index pad,
                 std::vector<Index>* argmax) {
    if (kernel < 1 || stride < 1) throw InvalidSpecError("pool2d: kernel and stride must be >= 1");
    if (pad < 0 || 2 * pad > kernel) throw InvalidSpecError("pool2d: padding must be in [0, kernel/2]");
    const Index planes = pooled_channels(x, "pool2d");
    const Index h = x.dim(-2), w = x.dim(-1);
    if (kernel > h + 2 * pad || kernel > w + 2 * pad)
        throw InvalidSpecError("pool2d: kernel " + std::to_string(kernel) + " larger than padded input " +
                               shape_str(x.shape()));
    const Index ho = (h + 2 * pad - kernel) / stride + 1, wo = (w + 2 * pad - kernel) / stride + 1;
    Shape os = x.shape();
    os[os.size() - 2] = ho;
    os[os.size() - 1] = wo;
    Tensor<T> y(os);
    if (argmax) argmax->assign(static_cast<std::size_t>(y.numel()), -1);
    for (Index p = 0; p < planes; ++p) {
        const T* in = x.data() + p * h * w;
        for (Index oh = 0; oh < ho; ++oh)
            for (Index ow = 0; ow < wo; ++ow) {
                const Index h0 = std::max<Index>(0, oh * stride - pad), h1 = std::min(h, oh * stride - pad + kernel);
                const Index w0 = std::max<Index>(0, ow * stride - pad), w1 = std::min(w, ow * stride - pad + kernel);
                const Index oidx = (p * ho + oh) * wo + ow;
                if (kind == PoolKind::max) {
                    Index best = h0 * w + w0;
                    for (Index i = h0; i < h1; ++i)
                        for (Index j = w0; j < w1; ++j)
                            if (in[i * w + j] > in[best]) best = i * w + j;
                    y[oidx] = in[best];
                    if (argmax) (*argmax)[static_cast<std::size_t>(oidx)] = p * h * w + best;
                } else {
                    double acc = 0;
                    for (Index i = h0; i < h1; ++i)
                        for (Index j = w0; j < w1; ++j) acc += in[i * w + j];
                    y[oidx] = static_cast<T>(acc / double((h1 - h0) * (w1 - w0)));
                }
            }
    }
    OpCounter::add_elementwise(static_cast<std::uint64_t>(y.numel()));
    return y;
}

template <typename T>
Tensor<T> pool2d_backward(const Shape& x_shape, const Tensor<T>& gy, PoolKind kind, Index kernel, Index stride,
                          Index pad, const std::vector<Index>& argmax) {
    Tensor<T> gx(x_shape);
    if (kind == PoolKind::max) {
        for (Index i = 0; i < gy.numel(); ++i) gx[argmax[static_cast<std::size_t>(i)]] += gy[i];
        return gx;
    }
    const Index h = x_shape[x_shape.size() - 2], w = x_shape[x_shape.size() - 1];
    const Index ho = gy.dim(-2), wo = gy.dim(-1);
    const Index planes = gx.numel() / (h * w);
    for (Index p = 0; p < planes; ++p)
        for (Index oh = 0; oh < ho; ++oh)
            for (Index ow = 0; ow < wo; ++ow) {
                const Index h0 = std::max<Index>(0, oh * stride - pad), h1 = std::min(h, oh * stride - pad + kernel);
                const Index w0 = std::max<Index>(0, ow * stride - pad), w1 = std::min(w, ow * stride - pad + kernel);
                const T g = static_cast<T>(gy[(p * ho + oh) * wo + ow] / double((h1 - h0) * (w1 - w0)));
                for (Index i = h0; i < h1; ++i)
                    for (Index j = w0; j < w1; ++j) gx[p * h * w + i * w + j] += g;
            }
    return gx;
}

namespace {
// Adaptive pooling bin edges: [floor(i*in/out), ceil((i+1)*in/out)).
std::pair<Index, Index> adaptive_bin(Index i, Index in, Index out) {
    return {(i * in) / out, ((i + 1) * in + out - 1) / out};
}
} // namespace

template <typename T>
Tensor<T> adaptive_pool2d(const Tensor<T>& x, PoolKind kind, Index out_h, Index out_w, std::vector<Index>* argmax) {
    if (out_h < 1 || out_w < 1) throw InvalidSpecError("adaptive_pool2d: output extents must be >= 1");
    const Index planes = pooled_channels(x, "adaptive_pool2d");
    const Index h = x.dim(-2), w = x.dim(-1);
    if (out_h > h || out_w > w)
        throw InvalidSpecError("adaptive_pool2d: output " + std::to_string(out_h) + "x" + std::to_string(out_w) +
                               " larger than input " + shape_str(x.shape()));
    Shape os = x.shape();
    os[os.size() - 2] = out_h;
    os[os.size() - 1] = out_w;
    Tensor<T> y(os);
    if (argmax) argmax->assign(static_cast<std::size_t>(y.numel()), -1);
    for (Index p = 0; p < planes; ++p) {
        const T* in = x.data() + p * h * w;
        for (Index oh = 0; oh < out_h; ++oh) {
            const auto [h0, h1] = adaptive_bin(oh, h, out_h);
            for (Index ow = 0; ow < out_w; ++ow) {
                const auto [w0, w1] = adaptive_bin(ow, w, out_w);
                const Index oidx = (p * out_h + oh) * out_w + ow;
                if (kind == PoolKind::max) {
                    Index best = h0 * w + w0;
                    for (Index i = h0; i < h1; ++i)
                        for (Index j = w0; j < w1; ++j)
                            if (in[i * w + j] > in[best]) best = i * w + j;
                    y[oidx] = in[best];
                    if (argmax) (*argmax)[static_cast<std::size_t>(oidx)] = p * h * w + best;
                } else {
                    double acc = 0;
                    for (Index i = h0; i < h1; ++i)
                        for (Index j = w0; j < w1; ++j) acc += in[i * w + j];
                    y[oidx] = static_cast<T>(acc / double((h1 - h0) * (w1 - w0)));
                }
            }
        }
    }
    OpCounter::add_elementwise(static_cast<std::uint64_t>(y.numel()));
    return y;
}

template <typename T>
Tensor<T> adaptive_pool2d_backward(const Shape& x_shape, const Tensor<T>& gy, PoolKind kind,
                                   const std::vector<Index>& argmax) {
    Tensor<T> gx(x_shape);
    if (kind == PoolKind::max) {
        for (Index i = 0; i < gy.numel(); ++i) gx[argmax[static_cast<std::size_t>(i)]] += gy[i];
        return gx;
    }
    const Index h = x_shape[x_shape.size() - 2], w = x_shape[x_shape.size() - 1];
    const Index oh_n = gy.dim(-2), ow_n = gy.dim(-1);
    const Index planes = gx.numel() / (h * w);
    for (Index p = 0; p < planes; ++p)
        for (Index oh = 0; oh < oh_n; ++oh) {
            const auto [h0, h1] = adaptive_bin(oh, h, oh_n);
            for (Index ow = 0; ow < ow_n; ++ow) {
                const auto [w0, w1] = adaptive_bin(ow, w, ow_n);
                const T g = static_cast<T>(gy[(p * oh_n + oh) * ow_n + ow] / double((h1 - h0) * (w1 - w0)));
                for (Index i = h0; i < h1; ++i)
                    for (Index j = w0; j < w1; ++j) gx[p * h * w + i * w + j] += g;
            }
        }
    return gx;
}

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, Index r) {
    require_rank(x.shape(), 4, "pixel_shuffle");
    if (r < 1) throw InvalidSpecError("pixel_shuffle: factor must be >= 1");
    const Index n = x.dim(0), cr = x.dim(1), h = x.dim(2), w = x.dim(3);
    if (cr % (r * r) != 0)
        throw InvalidSpecError("pixel_shuffle: channels " + std::to_string(cr) + " not divisible by r^2=" +
                               std::to_string(r * r));
    const Index c = cr / (r * r);
    Tensor<T> y({n, c, h * r, w * r});
    for (Index b = 0; b < n; ++b)
        for (Index ch = 0; ch < c; ++ch)
            for (Index i = 0; i < r; ++i)
                for (Index j = 0; j < r; ++j) {
                    const T* in = x.data() + ((b * cr) + ch * r * r + i * r + j) * h * w;
                    T* out = y.data() + (b * c + ch) * h * r * w * r;
                    for (Index hh = 0; hh < h; ++hh)
                        for (Index ww = 0; ww < w; ++ww) out[(hh * r + i) * w * r + ww * r + j] = in[hh * w + ww];
                }
    return y;
}

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, Index r) {
    require_rank(x.shape(), 4, "pixel_unshuffle");
    if (r < 1) throw InvalidSpecError("pixel_unshuffle: factor must be >= 1");
    const Index n = x.dim(0), c = x.dim(1), hr = x.dim(2), wr = x.dim(3);
    if (hr % r != 0 || wr % r != 0)
        throw InvalidSpecError("pixel_unshuffle: spatial extents not divisible by " + std::to_string(r));
    const Index h = hr / r, w = wr / r;
    Tensor<T> y({n, c * r * r, h, w});
    for (Index b = 0; b < n; ++b)
        for (Index ch = 0; ch < c; ++ch)
            for (Index i = 0; i < r; ++i)
                for (Index j = 0; j < r; ++j) {
                    T* out = y.data() + ((b * c * r * r) + ch * r * r + i * r + j) * h * w;
                    const T* in = x.data() + (b * c + ch) * hr * wr;
                    for (Index hh = 0; hh < h; ++hh)
                        for (Index ww = 0; ww < w; ++ww) out[hh * w + ww] = in[(hh * r + i) * wr + ww * r + j];
                }
    return y;
}

double keys_cubic(double x) {
    constexpr double a = -0.5;
    const double ax = std::abs(x), ax2 = ax * ax, ax3 = ax2 * ax;
    if (ax <= 1.0) return (a + 2.0) * ax3 - (a + 3.0) * ax2 + 1.0;
    if (ax < 2.0) return a * ax3 - 5.0 * a * ax2 + 8.0 * a * ax - 4.0 * a;
    return 0.0;
}

Index scaled_extent(Index in, Index num, Index den) {
    if (num < 1 || den < 1) throw InvalidSpecError("resize: scale must be a positive rational");
    const Index out = (in * num + den - 1) / den;
    if (out < 1) throw InvalidSpecError("resize: output extent must be >= 1");
    return out;
}

AxisTaps make_axis_taps(Index in, Index out, ResizeMode mode) {
    if (in < 1 || out < 1) throw InvalidSpecError("resize: extents must be >= 1");
    AxisTaps taps;
    taps.in = in;
    taps.out = out;
    taps.start.reserve(static_cast<std::size_t>(out + 1));
    auto push_normalized = [&](std::vector<std::pair<Index, double>>& list) {
        // First tap absorbs the rounding residue so weights sum to exactly 1
        // in the pivot form used by resize().
        double rest = 0;
        for (std::size_t t = 1; t < list.size(); ++t) rest += list[t].second;
        list[0].second = 1.0 - rest;
        for (auto& [i, wgt] : list) {
            taps.idx.push_back(i);
            taps.weight.push_back(wgt);
        }
    };
    if (mode == ResizeMode::bilinear) {
        const double ratio = double(in) / double(out);
        for (Index o = 0; o < out; ++o) {
            taps.start.push_back(static_cast<Index>(taps.idx.size()));
            double src = (double(o) + 0.5) * ratio - 0.5;
            if (src < 0) src = 0;
            Index i0 = static_cast<Index>(src);
            if (i0 > in - 1) i0 = in - 1;
            const Index i1 = i0 < in - 1 ? i0 + 1 : i0;
            const double l1 = src - double(i0);
            std::vector<std::pair<Index, double>> list{{i0, 1.0 - l1}};
            if (l1 != 0.0) list.emplace_back(i1, l1);
            push_normalized(list);
        }
    } else {
        const double scale = double(out) / double(in);
        const bool shrink = scale < 1.0;
        const double width = shrink ? 4.0 / scale : 4.0;
        const Index count = static_cast<Index>(std::ceil(width)) + 2;
        auto mirror = [in](Index j) {
            const Index period = 2 * in;
            Index m = ((j % period) + period) % period;
            return m < in ? m : period - 1 - m;
        };
        for (Index o = 0; o < out; ++o) {
            taps.start.push_back(static_cast<Index>(taps.idx.size()));
            const double u = (double(o) + 0.5) / scale - 0.5;
            const Index left = static_cast<Index>(std::floor(u - width / 2.0));
            std::vector<std::pair<Index, double>> list;
            double total = 0;
            for (Index p = 0; p < count; ++p) {
                const Index j = left + p;
                const double dist = u - double(j);
                const double wgt = shrink ? scale * keys_cubic(scale * dist) : keys_cubic(dist);
                if (wgt == 0.0) continue;
                list.emplace_back(mirror(j), wgt);
                total += wgt;
            }
            for (auto& e : list) e.second /= total;
            push_normalized(list);
        }
    }
    taps.start.push_back(static_cast<Index>(taps.idx.size()));
    return taps;
}

namespace {

// Applies taps along the last axis of a [rows, in] view (pivot form, so a
// constant row maps to exactly that constant).
template <typename T>
void apply_taps_last(const T* src, T* dst, Index rows, const AxisTaps& t) {
    for (Index r = 0; r < rows; ++r) {
        const T* s = src + r * t.in;
        T* d = dst + r * t.out;
        for (Index o = 0; o < t.out; ++o) {
            const Index b = t.start[static_cast<std::size_t>(o)], e = t.start[static_cast<std::size_t>(o + 1)];
            const T pivot = s[t.idx[static_cast<std::size_t>(b)]];
            T acc = 0;
            for (Index k = b + 1; k < e; ++k)
                acc += static_cast<T>(t.weight[static_cast<std::size_t>(k)]) * (s[t.idx[static_cast<std::size_t>(k)]] - pivot);
            d[o] = pivot + acc;
        }
    }
}

// Applies taps along the second-to-last axis of [planes, in, cols].
template <typename T>
void apply_taps_rows(const T* src, T* dst, Index planes, Index cols, const AxisTaps& t) {
    std::vector<T> acc(static_cast<std::size_t>(cols));
    for (Index p = 0; p < planes; ++p) {
        const T* s = src + p * t.in * cols;
        T* d = dst + p * t.out * cols;
        for (Index o = 0; o < t.out; ++o) {
            const Index b = t.start[static_cast<std::size_t>(o)], e = t.start[static_cast<std::size_t>(o + 1)];
            const T* pivot = s + t.idx[static_cast<std::size_t>(b)] * cols;
            std::fill(acc.begin(), acc.end(), T(0));
            for (Index k = b + 1; k < e; ++k) {
                const T wgt = static_cast<T>(t.weight[static_cast<std::size_t>(k)]);
                const T* row = s + t.idx[static_cast<std::size_t>(k)] * cols;
                for (Index c = 0; c < cols; ++c) acc[static_cast<std::size_t>(c)] += wgt * (row[c] - pivot[c]);
            }
            for (Index c = 0; c < cols; ++c) d[o * cols + c] = pivot[c] + acc[static_cast<std::size_t>(c)];
        }
    }
}

// Transposed application: scatter gradient of [.., out] back onto [.., in].
template <typename T>
void scatter_taps_last(const T* g, T* dst, Index rows, const AxisTaps& t) {
    for (Index r = 0; r < rows; ++r) {
        const T* s = g + r * t.out;
        T* d = dst + r * t.in;
        for (Index o = 0; o < t.out; ++o) {
            const Index b = t.start[static_cast<std::size_t>(o)], e = t.start[static_cast<std::size_t>(o + 1)];
            for (Index k = b; k < e; ++k)
                d[t.idx[static_cast<std::size_t>(k)]] += static_cast<T>(t.weight[static_cast<std::size_t>(k)]) * s[o];
        }
    }
}

template <typename T>
void scatter_taps_rows(const T* g, T* dst, Index planes, Index cols, const AxisTaps& t) {
    for (Index p = 0; p < planes; ++p) {
        const T* s = g + p * t.out * cols;
        T* d = dst + p * t.in * cols;
        for (Index o = 0; o < t.out; ++o) {
            const Index b = t.start[static_cast<std::size_t>(o)], e = t.start[static_cast<std::size_t>(o + 1)];
            for (Index k = b; k < e; ++k) {
                const T wgt = static_cast<T>(t.weight[static_cast<std::size_t>(k)]);
                T* row = d + t.idx[static_cast<std::size_t>(k)] * cols;
                const T* grow = s + o * cols;
                for (Index c = 0; c < cols; ++c) row[c] += wgt * grow[c];
            }
        }
    }
}

} // namespace

template <typename T>
Tensor<T> resize(const Tensor<T>& x, Index out_h, Index out_w, ResizeMode mode) {
    if (x.rank() < 2) throw ShapeError("resize: input must have rank >= 2");
    if (out_h < 1 || out_w < 1) throw InvalidSpecError("resize: output extents must be >= 1");
    const Index h = x.dim(-2), w = x.dim(-1), planes = x.numel() / (h * w);
    const AxisTaps tw = make_axis_taps(w, out_w, mode);
    const AxisTaps th = make_axis_taps(h, out_h, mode);
    std::vector<T> tmp(static_cast<std::size_t>(planes * h * out_w));
    apply_taps_last(x.data(), tmp.data(), planes * h, tw);
    Shape os = x.shape();
    os[os.size() - 2] = out_h;
    os[os.size() - 1] = out_w;
    Tensor<T> y(os);
    apply_taps_rows(tmp.data(), y.data(), planes, out_w, th);
    OpCounter::add_elementwise(static_cast<std::uint64_t>(y.numel()));
    return y;
}

template <typename T>
Tensor<T> resize_backward(const Tensor<T>& gy, Index in_h, Index in_w, ResizeMode mode) {
    const Index out_h = gy.dim(-2), out_w = gy.dim(-1), planes = gy.numel() / (out_h * out_w);
    const AxisTaps tw = make_axis_taps(in_w, out_w, mode);
    const AxisTaps th = make_axis_taps(in_h, out_h, mode);
    std::vector<T> tmp(static_cast<std::size_t>(planes * in_h * out_w), T(0));
    scatter_taps_rows(gy.data(), tmp.data(), planes, out_w, th);
    Shape is = gy.shape();
    is[is.size() - 2] = in_h;
    is[is.size() - 1] = in_w;
    Tensor<T> gx(is);
    scatter_taps_last(tmp.data(), gx.data(), planes * in_h, tw);
    return gx;
}

double activate(Activation kind, double x) {
    switch (kind) {
    case Activation::gelu: return 0.5 * x * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
    case Activation::leaky_relu: return x >= 0 ? x : kLeakySlope * x;
    case Activation::sigmoid:
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        else {
            const double e = std::exp(x);
            return e / (1.0 + e);
        }
    }
    return x;
}

double activate_grad(Activation kind, double x) {
    switch (kind) {
    case Activation::gelu: {
        const double cdf = 0.5 * (1.0 + std::erf(x * std::numbers::sqrt2 / 2.0));
        const double pdf = std::exp(-0.5 * x * x) * (std::numbers::inv_sqrtpi / std::numbers::sqrt2);
        return cdf + x * pdf;
    }
    case Activation::leaky_relu: return x >= 0 ? 1.0 : kLeakySlope;
    case Activation::sigmoid: {
        const double s = activate(Activation::sigmoid, x);
        return s * (1.0 - s);
    }
    }
    return 1.0;
}

namespace {
template <typename T>
T activate_t(Activation kind, T x) {
    if constexpr (std::is_same_v<T, double>) {
        return activate(kind, x);
    } else {
        switch (kind) {
        case Activation::gelu: return T(0.5) * x * (T(1) + std::erf(x * T(0.70710678118654752)));
        case Activation::leaky_relu: return x >= 0 ? x : T(kLeakySlope) * x;
        case Activation::sigmoid:
            if (x >= 0) return T(1) / (T(1) + std::exp(-x));
            else {
                const T e = std::exp(x);
                return e / (T(1) + e);
            }
        }
        return x;
    }
}
} // namespace

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind) {
    Tensor<T> y(x.shape());
    for (Index i = 0; i < x.numel(); ++i) y[i] = activate_t(kind, x[i]);
    OpCounter::add_elementwise(static_cast<std::uint64_t>(y.numel()));
    return y;
}

namespace {

struct Twiddles {
    std::vector<double> c, s;
    explicit Twiddles(Index n) : c(static_cast<std::size_t>(n)), s(static_cast<std::size_t>(n)) {
        for (Index m = 0; m < n; ++m) {
            const double th = 2.0 * std::numbers::pi * double(m) / double(n);
            c[static_cast<std::size_t>(m)] = std::cos(th);
            s[static_cast<std::size_t>(m)] = std::sin(th);
        }
    }
};

// In-place-free complex 2-D DFT (e^{-i}) of planes of [h,w] stored in double.
void dft2d_planes(const std::vector<double>& in_re, const std::vector<double>& in_im, std::vector<double>& out_re,
                  std::vector<double>& out_im, Index planes, Index h, Index w) {
    const Twiddles tw(w), th(h);
    std::vector<double> row_re(static_cast<std::size_t>(h * w)), row_im(static_cast<std::size_t>(h * w));
    out_re.assign(in_re.size(), 0.0);
    out_im.assign(in_re.size(), 0.0);
    for (Index p = 0; p < planes; ++p) {
        const double* xr = in_re.data() + p * h * w;
        const double* xi = in_im.data() + p * h * w;
        for (Index r = 0; r < h; ++r)
            for (Index k = 0; k < w; ++k) {
                double ar = 0, ai = 0;
                for (Index n = 0; n < w; ++n) {
                    const std::size_t m = static_cast<std::size_t>((k * n) % w);
                    const double c = tw.c[m], s = tw.s[m];
                    const double vr = xr[r * w + n], vi = xi[r * w + n];
                    ar += vr * c + vi * s;
                    ai += vi * c - vr * s;
                }
                row_re[static_cast<std::size_t>(r * w + k)] = ar;
                row_im[static_cast<std::size_t>(r * w + k)] = ai;
            }
        double* yr = out_re.data() + p * h * w;
        double* yi = out_im.data() + p * h * w;
        for (Index k = 0; k < h; ++k)
            for (Index r = 0; r < h; ++r) {
                const std::size_t m = static_cast<std::size_t>((k * r) % h);
                const double c = th.c[m], s = th.s[m];
                for (Index col = 0; col < w; ++col) {
                    const double vr = row_re[static_cast<std::size_t>(r * w + col)];
                    const double vi = row_im[static_cast<std::size_t>(r * w + col)];
                    yr[k * w + col] += vr * c + vi * s;
                    yi[k * w + col] += vi * c - vr * s;
                }
            }
    }
}

} // namespace

template <typename T>
std::pair<Tensor<T>, Tensor<T>> fft2d(const Tensor<T>& x) {
    if (x.rank() < 2) throw ShapeError("fft2d: input must have rank >= 2");
    const Index h = x.dim(-2), w = x.dim(-1), planes = x.numel() / (h * w);
    std::vector<double> re(x.vec().begin(), x.vec().end()), im(re.size(), 0.0), ore, oim;
    dft2d_planes(re, im, ore, oim, planes, h, w);
    Tensor<T> out_re(x.shape()), out_im(x.shape());
    for (Index i = 0; i < x.numel(); ++i) {
        out_re[i] = static_cast<T>(ore[static_cast<std::size_t>(i)]);
        out_im[i] = static_cast<T>(oim[static_cast<std::size_t>(i)]);
    }
    return {std::move(out_re), std::move(out_im)};
}

template <typename T>
Tensor<T> fft2d_backward(const Tensor<T>& g_re, const Tensor<T>& g_im) {
    require_same_shape(g_re, g_im, "fft2d_backward");
    const Index h = g_re.dim(-2), w = g_re.dim(-1), planes = g_re.numel() / (h * w);
    // d/dx of sum(gRe*Re X + gIm*Im X) = Re(F conj(G) F) with G = gRe + i gIm.
    std::vector<double> re(g_re.vec().begin(), g_re.vec().end()), im(re.size()), ore, oim;
    for (Index i = 0; i < g_im.numel(); ++i) im[static_cast<std::size_t>(i)] = -double(g_im[i]);
    dft2d_planes(re, im, ore, oim, planes, h, w);
    Tensor<T> gx(g_re.shape());
    for (Index i = 0; i < gx.numel(); ++i) gx[i] = static_cast<T>(ore[static_cast<std::size_t>(i)]);
    return gx;
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
    std::vector<int> inv(perm.size(), -1);
    for (std::size_t i = 0; i < perm.size(); ++i) {
        const int p = perm[i];
        if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || inv[static_cast<std::size_t>(p)] != -1)
            throw InvalidSpecError("permute: not a permutation");
        inv[static_cast<std::size_t>(p)] = static_cast<int>(i);
    }
    return inv;
}

template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& perm) {
    if (static_cast<Index>(perm.size()) != x.rank()) throw ShapeError("permute: permutation rank mismatch");
    (void)inverse_permutation(perm);
    const std::size_t r = perm.size();
    Shape os(r);
    std::vector<Index> in_stride(r), step(r);
    Index st = 1;
    for (std::size_t d = r; d-- > 0;) {
        in_stride[d] = st;
        st *= x.shape()[d];
    }
    for (std::size_t d = 0; d < r; ++d) {
        os[d] = x.shape()[static_cast<std::size_t>(perm[d])];
        step[d] = in_stride[static_cast<std::size_t>(perm[d])];
    }
    Tensor<T> y(os);
    std::vector<Index> idx(r, 0);
    Index src = 0;
    const Index total = y.numel();
    const Index inner = os[r - 1], inner_step = step[r - 1];
    for (Index o = 0; o < total; o += inner) {
        for (Index k = 0; k < inner; ++k) y[o + k] = x[src + k * inner_step];
        // advance odometer over all but the innermost axis
        for (std::size_t d = r - 1; d-- > 0;) {
            ++idx[d];
            src += step[d];
            if (idx[d] < os[d]) break;
            src -= step[d] * os[d];
            idx[d] = 0;
        }
    }
    return y;
}

#define LGFN_INSTANTIATE(T)                                                                                         \
    template Tensor<T> conv2d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>*, const ConvSpec&);              \
    template void conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, const ConvSpec&,          \
                                  Tensor<T>*, Tensor<T>*, Tensor<T>*);                                             \
    template Tensor<T> channel_conv1d(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);                      \
    template void channel_conv1d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, Tensor<T>*,        \
                                          Tensor<T>*, Tensor<T>*);                                                 \
    template Tensor<T> pool2d(const Tensor<T>&, PoolKind, Index, Index, Index, std::vector<Index>*);               \
    template Tensor<T> pool2d_backward(const Shape&, const Tensor<T>&, PoolKind, Index, Index, Index,              \
                                       const std::vector<Index>&);                                                 \
    template Tensor<T> adaptive_pool2d(const Tensor<T>&, PoolKind, Index, Index, std::vector<Index>*);            \
    template Tensor<T> adaptive_pool2d_backward(const Shape&, const Tensor<T>&, PoolKind,                         \
                                                const std::vector<Index>&);                                        \
    template Tensor<T> pixel_shuffle(const Tensor<T>&, Index);                                                     \
    template Tensor<T> pixel_unshuffle(const Tensor<T>&, Index);                                                   \
    template Tensor<T> resize(const Tensor<T>&, Index, Index, ResizeMode);                                         \
    template Tensor<T> resize_backward(const Tensor<T>&, Index, Index, ResizeMode);                                \
    template Tensor<T> activation(const Tensor<T>&, Activation);                                                   \
    template std::pair<Tensor<T>, Tensor<T>> fft2d(const Tensor<T>&);                                              \
    template Tensor<T> fft2d_backward(const Tensor<T>&, const Tensor<T>&);                                         \
    template Tensor<T> permute(const Tensor<T>&, const std::vector<int>&);

LGFN_INSTANTIATE(float)
LGFN_INSTANTIATE(double)

#undef LGFN_INSTANTIATE

} // namespace lgfn::kernels
