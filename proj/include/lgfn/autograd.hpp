#pragma once

#include "lgfn/kernels.hpp"
#include "lgfn/tensor.hpp"

#include <functional>
#include <memory>
#include <optional>
#include <vector>

namespace lgfn {

template <typename T>
class GradTape;

template <typename T>
struct Node {
    Tensor<T> value;
    Tensor<T> grad;  // empty until something flows into it
    bool requires_grad = false;
    GradTape<T>* tape = nullptr;
    std::function<void(const Tensor<T>&)> backward;

    void accumulate(const Tensor<T>& g);
};

// Handle to a value that may participate in reverse-mode differentiation.
// A Var built from a bare Tensor is a constant; vars produced from tape
// parameters record their op on that tape.
template <typename T>
class Var {
public:
    Var() = default;
    explicit Var(Tensor<T> value);
    explicit Var(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

    bool defined() const { return static_cast<bool>(node_); }
    const Tensor<T>& value() const { return node_->value; }
    const Shape& shape() const { return node_->value.shape(); }
    Index numel() const { return node_->value.numel(); }
    bool requires_grad() const { return node_ && node_->requires_grad; }
    GradTape<T>* tape() const { return node_ ? node_->tape : nullptr; }
    const std::shared_ptr<Node<T>>& node() const { return node_; }

    // Accumulated gradient; zeros when nothing reached this var.
    Tensor<T> grad() const;

private:
    std::shared_ptr<Node<T>> node_;
};

template <typename T>
class GradTape {
public:
    GradTape() = default;
    GradTape(const GradTape&) = delete;
    GradTape& operator=(const GradTape&) = delete;

    Var<T> parameter(Tensor<T> value);

    // Runs every recorded backward rule once, newest first. The root must be
    // a single scalar unless an explicit seed is given.
    void backward(const Var<T>& root);
    void backward(const Var<T>& root, const Tensor<T>& seed);

    std::size_t size() const { return nodes_.size(); }

    // Used by op implementations.
    Var<T> record(Tensor<T> value, std::function<void(const Tensor<T>&)> backward);

private:
    std::vector<std::shared_ptr<Node<T>>> nodes_;
};

template <typename T>
struct ComplexTensor {
    Tensor<T> real;
    Tensor<T> imag;
};

template <typename T>
struct ComplexVar {
    Var<T> real;
    Var<T> imag;
};

using kernels::Activation;
using kernels::ConvSpec;
using kernels::PoolKind;
using kernels::ResizeMode;

// Differentiable operations. Elementwise binary ops require equal shapes.
template <typename T> Var<T> add(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> sub(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> mul(const Var<T>& a, const Var<T>& b);
template <typename T> Var<T> scale(const Var<T>& a, double s);
// x [N,C,...] times gate [N,C,1,...,1] broadcast over trailing dims.
template <typename T> Var<T> mul_channel_gate(const Var<T>& x, const Var<T>& gate);
template <typename T> Var<T> slice_channels(const Var<T>& x, Index begin, Index count);
template <typename T> Var<T> abs(const Var<T>& x);
template <typename T> Var<T> sum(const Var<T>& x);
template <typename T> Var<T> mean(const Var<T>& x);
template <typename T> Var<T> reshape(const Var<T>& x, Shape shape);
template <typename T> Var<T> permute(const Var<T>& x, const std::vector<int>& perm);

template <typename T>
Var<T> conv2d(const Var<T>& x, const Var<T>& w, const Var<T>* b, const ConvSpec& spec);
// x [N,C,D,H,W], w [Cout,Cin,1,k,k]: a k x k spatial convolution shared over D.
template <typename T>
Var<T> conv3d_1xkxk(const Var<T>& x, const Var<T>& w, const Var<T>* b, Index k);
template <typename T>
Var<T> channel_conv1d(const Var<T>& x, const Var<T>& w, const Var<T>& b);

template <typename T>
Var<T> pool2d(const Var<T>& x, PoolKind kind, Index kernel, Index stride, Index pad = 0);
template <typename T>
Var<T> adaptive_pool2d(const Var<T>& x, PoolKind kind, Index out_h, Index out_w);
template <typename T> Var<T> pixel_shuffle(const Var<T>& x, Index r);
template <typename T> Var<T> pixel_unshuffle(const Var<T>& x, Index r);
template <typename T> Var<T> resize(const Var<T>& x, Index out_h, Index out_w, ResizeMode mode);
template <typename T> Var<T> activation(const Var<T>& x, Activation kind);
template <typename T> Var<T> gelu(const Var<T>& x) { return activation(x, Activation::gelu); }
template <typename T> Var<T> leaky_relu(const Var<T>& x) { return activation(x, Activation::leaky_relu); }
template <typename T> Var<T> sigmoid(const Var<T>& x) { return activation(x, Activation::sigmoid); }

template <typename T> ComplexVar<T> fft2d(const Var<T>& x);
// mean over all bins of sqrt(re^2 + im^2 + eps^2); returns a scalar.
template <typename T> Var<T> charbonnier_mean(const ComplexVar<T>& z, double eps);

template <typename T>
ComplexTensor<T> fft2d(const Tensor<T>& x) {
    auto [re, im] = kernels::fft2d(x);
    return {std::move(re), std::move(im)};
}

} // namespace lgfn
