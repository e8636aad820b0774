#include "lgfn/autograd.hpp"

#include <cmath>

namespace lgfn {

template <typename T>
void Node<T>::accumulate(const Tensor<T>& g) {
    if (g.shape() != value.shape())
        throw ShapeError("gradient shape " + shape_str(g.shape()) + " does not match value " + shape_str(value.shape()));
    if (grad.empty()) {
        grad = g;
        return;
    }
    for (Index i = 0; i < g.numel(); ++i) grad[i] += g[i];
}

template <typename T>
Var<T>::Var(Tensor<T> value) : node_(std::make_shared<Node<T>>()) {
    node_->value = std::move(value);
}

template <typename T>
Tensor<T> Var<T>::grad() const {
    if (!node_) throw Error("grad() on an undefined Var");
    if (node_->grad.empty()) return Tensor<T>(node_->value.shape());
    return node_->grad;
}

template <typename T>
Var<T> GradTape<T>::parameter(Tensor<T> value) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->tape = this;
    nodes_.push_back(node);
    return Var<T>(node);
}

template <typename T>
Var<T> GradTape<T>::record(Tensor<T> value, std::function<void(const Tensor<T>&)> backward) {
    auto node = std::make_shared<Node<T>>();
    node->value = std::move(value);
    node->requires_grad = true;
    node->tape = this;
    node->backward = std::move(backward);
    nodes_.push_back(node);
    return Var<T>(node);
}

template <typename T>
void GradTape<T>::backward(const Var<T>& root) {
    if (root.numel() != 1) throw ShapeError("backward: root must be a scalar, got " + shape_str(root.shape()));
    backward(root, Tensor<T>(root.shape(), T(1)));
}

template <typename T>
void GradTape<T>::backward(const Var<T>& root, const Tensor<T>& seed) {
    if (root.tape() != this) throw Error("backward: root was not recorded on this tape");
    root.node()->accumulate(seed);
    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        Node<T>& n = **it;
        if (n.backward && !n.grad.empty()) n.backward(n.grad);
    }
}

namespace {

template <typename T>
GradTape<T>* tape_of(std::initializer_list<const Var<T>*> inputs) {
    GradTape<T>* tape = nullptr;
    for (const Var<T>* v : inputs) {
        if (!v || !v->requires_grad()) continue;
        if (tape && tape != v->tape()) throw Error("op mixes vars from different tapes");
        tape = v->tape();
    }
    return tape;
}

template <typename T, typename F>
Var<T> make_var(Tensor<T> value, GradTape<T>* tape, F&& backward) {
    if (!tape) return Var<T>(std::move(value));
    return tape->record(std::move(value), std::forward<F>(backward));
}

template <typename T>
void flow(const std::shared_ptr<Node<T>>& n, const Tensor<T>& g) {
    if (n && n->requires_grad) n->accumulate(g);
}

template <typename T>
bool wants(const std::shared_ptr<Node<T>>& n) {
    return n && n->requires_grad;
}

void count_elementwise(Index n) { OpCounter::add_elementwise(static_cast<std::uint64_t>(n)); }

} // namespace

template <typename T>
Var<T> add(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a.value(), b.value(), "add");
    Tensor<T> y(a.shape());
    for (Index i = 0; i < y.numel(); ++i) y[i] = a.value()[i] + b.value()[i];
    count_elementwise(y.numel());
    auto na = a.node(), nb = b.node();
    return make_var(std::move(y), tape_of({&a, &b}), [na, nb](const Tensor<T>& g) {
        flow(na, g);
        flow(nb, g);
    });
}

template <typename T>
Var<T> sub(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a.value(), b.value(), "sub");
    Tensor<T> y(a.shape());
    for (Index i = 0; i < y.numel(); ++i) y[i] = a.value()[i] - b.value()[i];
    count_elementwise(y.numel());
    auto na = a.node(), nb = b.node();
    return make_var(std::move(y), tape_of({&a, &b}), [na, nb](const Tensor<T>& g) {
        flow(na, g);
        if (wants(nb)) {
            Tensor<T> ng(g.shape());
            for (Index i = 0; i < g.numel(); ++i) ng[i] = -g[i];
            nb->accumulate(ng);
        }
    });
}

template <typename T>
Var<T> mul(const Var<T>& a, const Var<T>& b) {
    require_same_shape(a.value(), b.value(), "mul");
    Tensor<T> y(a.shape());
    for (Index i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * b.value()[i];
    count_elementwise(y.numel());
    auto na = a.node(), nb = b.node();
    return make_var(std::move(y), tape_of({&a, &b}), [na, nb](const Tensor<T>& g) {
        if (wants(na)) {
            Tensor<T> ga(g.shape());
            for (Index i = 0; i < g.numel(); ++i) ga[i] = g[i] * nb->value[i];
            na->accumulate(ga);
        }
        if (wants(nb)) {
            Tensor<T> gb(g.shape());
            for (Index i = 0; i < g.numel(); ++i) gb[i] = g[i] * na->value[i];
            nb->accumulate(gb);
        }
    });
}

template <typename T>
Var<T> scale(const Var<T>& a, double s) {
    Tensor<T> y(a.shape());
    const T st = static_cast<T>(s);
    for (Index i = 0; i < y.numel(); ++i) y[i] = a.value()[i] * st;
    count_elementwise(y.numel());
    auto na = a.node();
    return make_var(std::move(y), tape_of({&a}), [na, st](const Tensor<T>& g) {
        Tensor<T> ga(g.shape());
        for (Index i = 0; i < g.numel(); ++i) ga[i] = g[i] * st;
        flow(na, ga);
    });
}

template <typename T>
Var<T> mul_channel_gate(const Var<T>& x, const Var<T>& gate) {
    const Shape& xs = x.shape();
    if (xs.size() < 2) throw ShapeError("mul_channel_gate: input needs [N,C,...]");
    const Index planes = xs[0] * xs[1];
    if (gate.numel() != planes || gate.shape()[0] != xs[0] || gate.shape().size() < 2 || gate.shape()[1] != xs[1])
        throw ShapeError("mul_channel_gate: gate " + shape_str(gate.shape()) + " does not match input " + shape_str(xs));
    const Index inner = x.numel() / planes;
    Tensor<T> y(xs);
    for (Index p = 0; p < planes; ++p) {
        const T gv = gate.value()[p];
        for (Index i = 0; i < inner; ++i) y[p * inner + i] = x.value()[p * inner + i] * gv;
    }
    count_elementwise(y.numel());
    auto nx = x.node(), ng = gate.node();
    return make_var(std::move(y), tape_of({&x, &gate}), [nx, ng, planes, inner](const Tensor<T>& g) {
        if (wants(nx)) {
            Tensor<T> gx(nx->value.shape());
            for (Index p = 0; p < planes; ++p)
                for (Index i = 0; i < inner; ++i) gx[p * inner + i] = g[p * inner + i] * ng->value[p];
            nx->accumulate(gx);
        }
        if (wants(ng)) {
            Tensor<T> gg(ng->value.shape());
            for (Index p = 0; p < planes; ++p) {
                double acc = 0;
                for (Index i = 0; i < inner; ++i) acc += double(g[p * inner + i]) * double(nx->value[p * inner + i]);
                gg[p] = static_cast<T>(acc);
            }
            ng->accumulate(gg);
        }
    });
}

template <typename T>
Var<T> slice_channels(const Var<T>& x, Index begin, Index count) {
    const Shape& xs = x.shape();
    if (xs.size() < 2) throw ShapeError("slice_channels: input needs [N,C,...]");
    if (begin < 0 || count < 1 || begin + count > xs[1])
        throw ShapeError("slice_channels: range [" + std::to_string(begin) + "," + std::to_string(begin + count) +
                         ") outside " + std::to_string(xs[1]) + " channels");
    const Index n = xs[0], c = xs[1], inner = x.numel() / (n * c);
    Shape ys = xs;
    ys[1] = count;
    Tensor<T> y(ys);
    for (Index b = 0; b < n; ++b)
        std::copy_n(x.value().data() + (b * c + begin) * inner, count * inner, y.data() + b * count * inner);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx, n, c, inner, begin, count](const Tensor<T>& g) {
        if (!wants(nx)) return;
        Tensor<T> gx(nx->value.shape());
        for (Index b = 0; b < n; ++b)
            std::copy_n(g.data() + b * count * inner, count * inner, gx.data() + (b * c + begin) * inner);
        nx->accumulate(gx);
    });
}

template <typename T>
Var<T> abs(const Var<T>& x) {
    Tensor<T> y(x.shape());
    for (Index i = 0; i < y.numel(); ++i) y[i] = std::abs(x.value()[i]);
    count_elementwise(y.numel());
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx](const Tensor<T>& g) {
        Tensor<T> gx(g.shape());
        for (Index i = 0; i < g.numel(); ++i) {
            const T v = nx->value[i];
            gx[i] = v > 0 ? g[i] : (v < 0 ? -g[i] : T(0));
        }
        flow(nx, gx);
    });
}

template <typename T>
Var<T> sum(const Var<T>& x) {
    long double acc = 0;
    for (Index i = 0; i < x.numel(); ++i) acc += x.value()[i];
    count_elementwise(x.numel());
    auto nx = x.node();
    return make_var(Tensor<T>({1}, static_cast<T>(acc)), tape_of({&x}),
                    [nx](const Tensor<T>& g) { flow(nx, Tensor<T>(nx->value.shape(), g[0])); });
}

template <typename T>
Var<T> mean(const Var<T>& x) {
    long double acc = 0;
    for (Index i = 0; i < x.numel(); ++i) acc += x.value()[i];
    const double n = double(x.numel());
    count_elementwise(x.numel());
    auto nx = x.node();
    return make_var(Tensor<T>({1}, static_cast<T>(acc / n)), tape_of({&x}), [nx, n](const Tensor<T>& g) {
        flow(nx, Tensor<T>(nx->value.shape(), static_cast<T>(double(g[0]) / n)));
    });
}

template <typename T>
Var<T> reshape(const Var<T>& x, Shape shape) {
    Tensor<T> y = x.value().reshaped(std::move(shape));
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}),
                    [nx](const Tensor<T>& g) { flow(nx, g.reshaped(nx->value.shape())); });
}

template <typename T>
Var<T> permute(const Var<T>& x, const std::vector<int>& perm) {
    Tensor<T> y = kernels::permute(x.value(), perm);
    auto nx = x.node();
    auto inv = kernels::inverse_permutation(perm);
    return make_var(std::move(y), tape_of({&x}),
                    [nx, inv](const Tensor<T>& g) { flow(nx, kernels::permute(g, inv)); });
}

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>* b, const ConvSpec& spec) {
    Tensor<T> y = kernels::conv2d(x.value(), w.value(), b ? &b->value() : nullptr, spec);
    auto nx = x.node(), nw = w.node();
    std::shared_ptr<Node<T>> nb = b ? b->node() : nullptr;
    return make_var(std::move(y), tape_of<T>({&x, &w, b}), [nx, nw, nb, spec](const Tensor<T>& g) {
        Tensor<T> gx, gw, gb;
        kernels::conv2d_backward(nx->value, nw->value, g, spec, wants(nx) ? &gx : nullptr,
                                 wants(nw) ? &gw : nullptr, wants(nb) ? &gb : nullptr);
        if (wants(nx)) nx->accumulate(gx);
        if (wants(nw)) nw->accumulate(gw);
        if (wants(nb)) nb->accumulate(gb);
    });
}

template <typename T>
Var<T> conv3d_1xkxk(const Var<T>& x, const Var<T>& w, const Var<T>* b, Index k) {
    if (x.shape().size() != 5) throw ShapeError("conv3d_1xkxk: input must be [N,C,D,H,W], got " + shape_str(x.shape()));
    if (w.shape().size() != 5) throw ShapeError("conv3d_1xkxk: weight must be [Cout,Cin,1,k,k]");
    if (w.shape()[2] != 1) throw InvalidSpecError("conv3d_1xkxk: depth kernel extent must be 1");
    if (k < 1) throw InvalidSpecError("conv3d_1xkxk: zero-extent kernel");
    if (w.shape()[3] != k || w.shape()[4] != k)
        throw ShapeError("conv3d_1xkxk: weight " + shape_str(w.shape()) + " is not 1x" + std::to_string(k) + "x" +
                         std::to_string(k));
    const Index n = x.shape()[0], c = x.shape()[1], d = x.shape()[2], h = x.shape()[3], wd = x.shape()[4];
    const Index cout = w.shape()[0];
    Var<T> slices = reshape(permute(x, {0, 2, 1, 3, 4}), {n * d, c, h, wd});
    Var<T> w2 = reshape(w, {cout, w.shape()[1], k, k});
    Var<T> y = conv2d(slices, w2, b, ConvSpec::same(k, k));
    return permute(reshape(y, {n, d, cout, h, wd}), {0, 2, 1, 3, 4});
}

template <typename T>
Var<T> channel_conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b) {
    Tensor<T> y = kernels::channel_conv1d(x.value(), w.value(), b.value());
    auto nx = x.node(), nw = w.node(), nb = b.node();
    return make_var(std::move(y), tape_of({&x, &w, &b}), [nx, nw, nb](const Tensor<T>& g) {
        Tensor<T> gx, gw, gb;
        kernels::channel_conv1d_backward(nx->value, nw->value, g, wants(nx) ? &gx : nullptr,
                                         wants(nw) ? &gw : nullptr, wants(nb) ? &gb : nullptr);
        if (wants(nx)) nx->accumulate(gx);
        if (wants(nw)) nw->accumulate(gw);
        if (wants(nb)) nb->accumulate(gb);
    });
}

template <typename T>
Var<T> pool2d(const Var<T>& x, PoolKind kind, Index kernel, Index stride, Index pad) {
    std::vector<Index> argmax;
    Tensor<T> y = kernels::pool2d(x.value(), kind, kernel, stride, pad, kind == PoolKind::max ? &argmax : nullptr);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx, kind, kernel, stride, pad, argmax](const Tensor<T>& g) {
        flow(nx, kernels::pool2d_backward(nx->value.shape(), g, kind, kernel, stride, pad, argmax));
    });
}

template <typename T>
Var<T> adaptive_pool2d(const Var<T>& x, PoolKind kind, Index out_h, Index out_w) {
    std::vector<Index> argmax;
    Tensor<T> y = kernels::adaptive_pool2d(x.value(), kind, out_h, out_w, kind == PoolKind::max ? &argmax : nullptr);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx, kind, argmax](const Tensor<T>& g) {
        flow(nx, kernels::adaptive_pool2d_backward(nx->value.shape(), g, kind, argmax));
    });
}

template <typename T>
Var<T> pixel_shuffle(const Var<T>& x, Index r) {
    Tensor<T> y = kernels::pixel_shuffle(x.value(), r);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}),
                    [nx, r](const Tensor<T>& g) { flow(nx, kernels::pixel_unshuffle(g, r)); });
}

template <typename T>
Var<T> pixel_unshuffle(const Var<T>& x, Index r) {
    Tensor<T> y = kernels::pixel_unshuffle(x.value(), r);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}),
                    [nx, r](const Tensor<T>& g) { flow(nx, kernels::pixel_shuffle(g, r)); });
}

template <typename T>
Var<T> resize(const Var<T>& x, Index out_h, Index out_w, ResizeMode mode) {
    Tensor<T> y = kernels::resize(x.value(), out_h, out_w, mode);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx, mode](const Tensor<T>& g) {
        flow(nx, kernels::resize_backward(g, nx->value.dim(-2), nx->value.dim(-1), mode));
    });
}

template <typename T>
Var<T> activation(const Var<T>& x, Activation kind) {
    Tensor<T> y = kernels::activation(x.value(), kind);
    auto nx = x.node();
    return make_var(std::move(y), tape_of({&x}), [nx, kind](const Tensor<T>& g) {
        Tensor<T> gx(g.shape());
        for (Index i = 0; i < g.numel(); ++i)
            gx[i] = static_cast<T>(double(g[i]) * kernels::activate_grad(kind, double(nx->value[i])));
        flow(nx, gx);
    });
}

template <typename T>
ComplexVar<T> fft2d(const Var<T>& x) {
    auto [re, im] = kernels::fft2d(x.value());
    GradTape<T>* tape = tape_of({&x});
    auto nx = x.node();
    Var<T> vre = make_var(std::move(re), tape, [nx](const Tensor<T>& g) {
        flow(nx, kernels::fft2d_backward(g, Tensor<T>(g.shape())));
    });
    Var<T> vim = make_var(std::move(im), tape, [nx](const Tensor<T>& g) {
        flow(nx, kernels::fft2d_backward(Tensor<T>(g.shape()), g));
    });
    return {vre, vim};
}

template <typename T>
Var<T> charbonnier_mean(const ComplexVar<T>& z, double eps) {
    require_same_shape(z.real.value(), z.imag.value(), "charbonnier_mean");
    const Index n = z.real.numel();
    const double e2 = eps * eps;
    long double acc = 0;
    for (Index i = 0; i < n; ++i) {
        const double r = z.real.value()[i], m = z.imag.value()[i];
        acc += std::sqrt(r * r + m * m + e2);
    }
    auto nr = z.real.node(), ni = z.imag.node();
    return make_var(Tensor<T>({1}, static_cast<T>(acc / double(n))), tape_of({&z.real, &z.imag}),
                    [nr, ni, n, e2](const Tensor<T>& g) {
                        Tensor<T> gr(nr->value.shape()), gi(ni->value.shape());
                        const double s = double(g[0]) / double(n);
                        for (Index i = 0; i < n; ++i) {
                            const double r = nr->value[i], m = ni->value[i];
                            const double mag = std::sqrt(r * r + m * m + e2);
                            gr[i] = static_cast<T>(s * r / mag);
                            gi[i] = static_cast<T>(s * m / mag);
                        }
                        flow(nr, gr);
                        flow(ni, gi);
                    });
}

#define LGFN_INSTANTIATE(T)                                                                                  \
    template struct Node<T>;                                                                                 \
    template class Var<T>;                                                                                   \
    template class GradTape<T>;                                                                              \
    template Var<T> add(const Var<T>&, const Var<T>&);                                                       \
    template Var<T> sub(const Var<T>&, const Var<T>&);                                                       \
    template Var<T> mul(const Var<T>&, const Var<T>&);                                                       \
    template Var<T> scale(const Var<T>&, double);                                                            \
    template Var<T> mul_channel_gate(const Var<T>&, const Var<T>&);                                          \
    template Var<T> slice_channels(const Var<T>&, Index, Index);                                             \
    template Var<T> abs(const Var<T>&);                                                                      \
    template Var<T> sum(const Var<T>&);                                                                      \
    template Var<T> mean(const Var<T>&);                                                                     \
    template Var<T> reshape(const Var<T>&, Shape);                                                           \
    template Var<T> permute(const Var<T>&, const std::vector<int>&);                                         \
    template Var<T> conv2d(const Var<T>&, const Var<T>&, const Var<T>*, const ConvSpec&);                    \
    template Var<T> conv3d_1xkxk(const Var<T>&, const Var<T>&, const Var<T>*, Index);                        \
    template Var<T> channel_conv1d(const Var<T>&, const Var<T>&, const Var<T>&);                             \
    template Var<T> pool2d(const Var<T>&, PoolKind, Index, Index, Index);                                    \
    template Var<T> adaptive_pool2d(const Var<T>&, PoolKind, Index, Index);                                  \
    template Var<T> pixel_shuffle(const Var<T>&, Index);                                                     \
    template Var<T> pixel_unshuffle(const Var<T>&, Index);                                                   \
    template Var<T> resize(const Var<T>&, Index, Index, ResizeMode);                                         \
    template Var<T> activation(const Var<T>&, Activation);                                                   \
    template ComplexVar<T> fft2d(const Var<T>&);                                                             \
    template Var<T> charbonnier_mean(const ComplexVar<T>&, double);

LGFN_INSTANTIATE(float)
LGFN_INSTANTIATE(double)

#undef LGFN_INSTANTIATE

} // namespace lgfn
