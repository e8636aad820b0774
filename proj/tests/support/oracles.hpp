#pragma once

// Naive reference implementations used by the unit and acceptance tests.
// They are written from the operator definitions with plain loops and share
// no code with the library kernels.

#include "lgfn/kernels.hpp"
#include "lgfn/light_field.hpp"

#include <cmath>
#include <complex>
#include <random>
#include <vector>

namespace oracle {

using lgfn::Index;
using TD = lgfn::Tensor<double>;

inline double max_rel_diff(const TD& a, const TD& b) {
    if (a.shape() != b.shape()) return INFINITY;
    double worst = 0;
    for (Index i = 0; i < a.numel(); ++i) {
        const double d = std::abs(a[i] - b[i]);
        worst = std::max(worst, d / std::max({std::abs(a[i]), std::abs(b[i]), 1.0}));
    }
    return worst;
}

// Cross-correlation with zero padding, stride, dilation and groups.
inline TD conv2d(const TD& x, const TD& w, const TD* b, Index stride, Index dil, Index groups, Index ph, Index pw) {
    const Index n = x.dim(0), cin = x.dim(1), h = x.dim(2), wd = x.dim(3);
    const Index cout = w.dim(0), cpg = w.dim(1), kh = w.dim(2), kw = w.dim(3);
    const Index ho = (h + 2 * ph - dil * (kh - 1) - 1) / stride + 1;
    const Index wo = (wd + 2 * pw - dil * (kw - 1) - 1) / stride + 1;
    const Index opg = cout / groups;
    (void)cin;
    TD y({n, cout, ho, wo});
    for (Index bi = 0; bi < n; ++bi)
        for (Index o = 0; o < cout; ++o)
            for (Index oy = 0; oy < ho; ++oy)
                for (Index ox = 0; ox < wo; ++ox) {
                    double acc = b ? (*b)[o] : 0.0;
                    const Index g = o / opg;
                    for (Index ci = 0; ci < cpg; ++ci)
                        for (Index ky = 0; ky < kh; ++ky)
                            for (Index kx = 0; kx < kw; ++kx) {
                                const Index iy = oy * stride - ph + ky * dil, ix = ox * stride - pw + kx * dil;
                                if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                acc += w.at({o, ci, ky, kx}) * x.at({bi, g * cpg + ci, iy, ix});
                            }
                    y.at({bi, o, oy, ox}) = acc;
                }
    return y;
}

// x [N,C,D,H,W], w [Cout,C,1,k,k]: spatial k x k "same" conv on every depth slice.
inline TD conv3d_1xkxk(const TD& x, const TD& w, const TD* b) {
    const Index n = x.dim(0), c = x.dim(1), d = x.dim(2), h = x.dim(3), wd = x.dim(4);
    const Index cout = w.dim(0), k = w.dim(3), p = (k - 1) / 2;
    TD y({n, cout, d, h, wd});
    for (Index bi = 0; bi < n; ++bi)
        for (Index o = 0; o < cout; ++o)
            for (Index z = 0; z < d; ++z)
                for (Index yy = 0; yy < h; ++yy)
                    for (Index xx = 0; xx < wd; ++xx) {
                        double acc = b ? (*b)[o] : 0.0;
                        for (Index ci = 0; ci < c; ++ci)
                            for (Index ky = 0; ky < k; ++ky)
                                for (Index kx = 0; kx < k; ++kx) {
                                    const Index iy = yy - p + ky, ix = xx - p + kx;
                                    if (iy < 0 || iy >= h || ix < 0 || ix >= wd) continue;
                                    acc += w.at({o, ci, 0, ky, kx}) * x.at({bi, ci, z, iy, ix});
                                }
                        y.at({bi, o, z, yy, xx}) = acc;
                    }
    return y;
}

// Window scan over a [P,H,W] stack; avg divides by the in-bounds cell count.
inline TD pool2d(const TD& x, bool is_max, Index k, Index s, Index pad) {
    const Index planes = x.dim(0), h = x.dim(1), w = x.dim(2);
    const Index ho = (h + 2 * pad - k) / s + 1, wo = (w + 2 * pad - k) / s + 1;
    TD y({planes, ho, wo});
    for (Index p = 0; p < planes; ++p)
        for (Index oy = 0; oy < ho; ++oy)
            for (Index ox = 0; ox < wo; ++ox) {
                double best = -INFINITY, sum = 0;
                Index cells = 0;
                for (Index dy = 0; dy < k; ++dy)
                    for (Index dx = 0; dx < k; ++dx) {
                        const Index iy = oy * s - pad + dy, ix = ox * s - pad + dx;
                        if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                        const double v = x.at({p, iy, ix});
                        best = std::max(best, v);
                        sum += v;
                        ++cells;
                    }
                y.at({p, oy, ox}) = is_max ? best : sum / double(cells);
            }
    return y;
}

// Adaptive bins [floor(i*in/out), ceil((i+1)*in/out)) evaluated in floating point.
inline TD adaptive_pool2d(const TD& x, bool is_max, Index oh, Index ow) {
    const Index planes = x.dim(0), h = x.dim(1), w = x.dim(2);
    TD y({planes, oh, ow});
    for (Index p = 0; p < planes; ++p)
        for (Index i = 0; i < oh; ++i)
            for (Index j = 0; j < ow; ++j) {
                const Index y0 = Index(std::floor(double(i) * h / oh)), y1 = Index(std::ceil(double(i + 1) * h / oh));
                const Index x0 = Index(std::floor(double(j) * w / ow)), x1 = Index(std::ceil(double(j + 1) * w / ow));
                double best = -INFINITY, sum = 0;
                for (Index a = y0; a < y1; ++a)
                    for (Index b = x0; b < x1; ++b) {
                        best = std::max(best, x.at({p, a, b}));
                        sum += x.at({p, a, b});
                    }
                y.at({p, i, j}) = is_max ? best : sum / double((y1 - y0) * (x1 - x0));
            }
    return y;
}

// out[n, c, y*r + i, x*r + j] = in[n, c*r*r + i*r + j, y, x]
inline TD pixel_shuffle(const TD& x, Index r) {
    const Index n = x.dim(0), c = x.dim(1) / (r * r), h = x.dim(2), w = x.dim(3);
    TD y({n, c, h * r, w * r});
    for (Index b = 0; b < n; ++b)
        for (Index ch = 0; ch < c; ++ch)
            for (Index i = 0; i < r; ++i)
                for (Index j = 0; j < r; ++j)
                    for (Index yy = 0; yy < h; ++yy)
                        for (Index xx = 0; xx < w; ++xx)
                            y.at({b, ch, yy * r + i, xx * r + j}) = x.at({b, ch * r * r + i * r + j, yy, xx});
    return y;
}

inline double cubic(double t) {
    const double a = -0.5, u = std::abs(t);
    if (u <= 1) return (a + 2) * u * u * u - (a + 3) * u * u + 1;
    if (u < 2) return a * u * u * u - 5 * a * u * u + 8 * a * u - 4 * a;
    return 0;
}

// Weights of output sample `o` (0-based) over input indices for one axis.
// Bicubic follows the antialiased imresize construction: 1-based centre
// u = o'/scale + 0.5 (1 - 1/scale), kernel stretched by 1/scale when
// shrinking, indices mirrored at the borders, weights normalised.
// Bilinear uses half-pixel centres with the source coordinate clamped at 0.
inline std::vector<std::pair<Index, double>> axis_weights(Index in, Index out, Index o, bool bicubic) {
    std::vector<std::pair<Index, double>> taps;
    const double scale = double(out) / double(in);
    if (!bicubic) {
        double src = (o + 0.5) / scale - 0.5;
        if (src < 0) src = 0;
        const Index i0 = Index(std::floor(src));
        const Index i1 = std::min(i0 + 1, in - 1);
        const double f = src - double(i0);
        taps.emplace_back(std::min(i0, in - 1), 1 - f);
        taps.emplace_back(i1, f);
        return taps;
    }
    const double width = scale < 1 ? 4.0 / scale : 4.0;
    const double u = double(o + 1) / scale + 0.5 * (1 - 1 / scale);
    const Index left = Index(std::floor(u - width / 2));
    const Index count = Index(std::ceil(width)) + 2;
    double total = 0;
    for (Index j = 0; j < count; ++j) {
        const Index idx1 = left + j;  // 1-based
        const double wgt = scale < 1 ? scale * cubic(scale * (u - double(idx1))) : cubic(u - double(idx1));
        Index m = ((idx1 - 1) % (2 * in) + 2 * in) % (2 * in);
        if (m >= in) m = 2 * in - 1 - m;
        taps.emplace_back(m, wgt);
        total += wgt;
    }
    for (auto& t : taps) t.second /= total;
    return taps;
}

// Separable resize of a [P,H,W] stack by direct kernel summation.
inline TD resize(const TD& x, Index oh, Index ow, bool bicubic) {
    const Index planes = x.dim(0), h = x.dim(1), w = x.dim(2);
    TD y({planes, oh, ow});
    for (Index p = 0; p < planes; ++p)
        for (Index i = 0; i < oh; ++i) {
            const auto ty = axis_weights(h, oh, i, bicubic);
            for (Index j = 0; j < ow; ++j) {
                const auto tx = axis_weights(w, ow, j, bicubic);
                double acc = 0;
                for (const auto& [iy, wy] : ty)
                    for (const auto& [ix, wx] : tx) acc += wy * wx * x.at({p, iy, ix});
                y.at({p, i, j}) = acc;
            }
        }
    return y;
}

// Quadratic-sum DFT of a [P,H,W] stack: X[k,l] = sum x[y,x] e^{-2 pi i (ky/H + lx/W)}.
inline std::pair<TD, TD> dft2d(const TD& x) {
    const Index planes = x.dim(0), h = x.dim(1), w = x.dim(2);
    const double tau = 2 * std::acos(-1.0);
    TD re({planes, h, w}), im({planes, h, w});
    for (Index p = 0; p < planes; ++p)
        for (Index k = 0; k < h; ++k)
            for (Index l = 0; l < w; ++l) {
                std::complex<double> acc = 0;
                for (Index a = 0; a < h; ++a)
                    for (Index b = 0; b < w; ++b)
                        acc += x.at({p, a, b}) * std::polar(1.0, -tau * (double(k * a) / h + double(l * b) / w));
                re.at({p, k, l}) = acc.real();
                im.at({p, k, l}) = acc.imag();
            }
    return {re, im};
}

inline double psnr_closed_form(double mse, double peak = 1.0) { return 10.0 * std::log10(peak * peak / mse); }

} // namespace oracle
