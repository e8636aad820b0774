#pragma once

#include "lgfn/tensor.hpp"

#include <cstdint>
#include <optional>
#include <utility>

// Raw (non-differentiable) numeric kernels. The autograd layer in
// autograd.hpp wraps these; tests compare them against naive loops.
namespace lgfn::kernels {

struct ConvSpec {
    Index kernel_h = 1;
    Index kernel_w = 1;
    Index stride = 1;
    Index dilation = 1;
    Index groups = 1;
    Index pad_h = 0;
    Index pad_w = 0;

    // Zero padding that preserves extent for stride 1 and odd kernels.
    static ConvSpec same(Index kh, Index kw, Index dilation = 1, Index groups = 1, Index stride = 1);

    void validate() const;
};

Index conv_output_extent(Index in, Index kernel, Index stride, Index dilation, Index pad);

// x [N,Cin,H,W], w [Cout,Cin/groups,kh,kw], b [Cout] or null.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>* b, const ConvSpec& spec);

// Any of gx/gw/gb may be null; non-null outputs are overwritten.
template <typename T>
void conv2d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, const ConvSpec& spec,
                     Tensor<T>* gx, Tensor<T>* gw, Tensor<T>* gb);

// 1-D convolution along the channel axis of a pooled [N,C,1,1] tensor with a
// single odd kernel w [k] and scalar bias b [1]; zero padding, no wrap-around.
template <typename T>
Tensor<T> channel_conv1d(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b);

template <typename T>
void channel_conv1d_backward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& gy, Tensor<T>* gx,
                             Tensor<T>* gw, Tensor<T>* gb);

enum class PoolKind { max, avg };

// Pooling over the trailing two dims of a rank >= 2 tensor. For max pooling
// `argmax` (if non-null) receives the flat input index chosen for each output.
template <typename T>
Tensor<T> pool2d(const Tensor<T>& x, PoolKind kind, Index kernel, Index stride, Index pad,
                 std::vector<Index>* argmax);

template <typename T>
Tensor<T> pool2d_backward(const Shape& x_shape, const Tensor<T>& gy, PoolKind kind, Index kernel, Index stride,
                          Index pad, const std::vector<Index>& argmax);

template <typename T>
Tensor<T> adaptive_pool2d(const Tensor<T>& x, PoolKind kind, Index out_h, Index out_w, std::vector<Index>* argmax);

template <typename T>
Tensor<T> adaptive_pool2d_backward(const Shape& x_shape, const Tensor<T>& gy, PoolKind kind,
                                   const std::vector<Index>& argmax);

template <typename T>
Tensor<T> pixel_shuffle(const Tensor<T>& x, Index r);

template <typename T>
Tensor<T> pixel_unshuffle(const Tensor<T>& x, Index r);

enum class ResizeMode { bilinear, bicubic };

// Per-axis sampling taps for a resize from `in` to `out` samples.
struct AxisTaps {
    Index in = 0;
    Index out = 0;
    std::vector<Index> start;  // out+1 offsets into idx/weight
    std::vector<Index> idx;
    std::vector<double> weight;
};

// bilinear: half-pixel centers, source clamped at 0, edge replicate.
// bicubic:  Keys a = -0.5, half-pixel centers, kernel widened by 1/scale when
//           shrinking, normalized weights, symmetric border reflection.
AxisTaps make_axis_taps(Index in, Index out, ResizeMode mode);

double keys_cubic(double x);

template <typename T>
Tensor<T> resize(const Tensor<T>& x, Index out_h, Index out_w, ResizeMode mode);

template <typename T>
Tensor<T> resize_backward(const Tensor<T>& gy, Index in_h, Index in_w, ResizeMode mode);

// Output extent for a rational scale num/den: ceil(in * num / den).
Index scaled_extent(Index in, Index num, Index den);

enum class Activation { gelu, leaky_relu, sigmoid };

inline constexpr double kLeakySlope = 0.1;

double activate(Activation kind, double x);
double activate_grad(Activation kind, double x);

template <typename T>
Tensor<T> activation(const Tensor<T>& x, Activation kind);

// Unnormalized forward DFT over the trailing two dims. Returns (real, imag).
template <typename T>
std::pair<Tensor<T>, Tensor<T>> fft2d(const Tensor<T>& x);

// Adjoint of fft2d for a real input: gradient with respect to x given the
// gradients of the real and imaginary outputs.
template <typename T>
Tensor<T> fft2d_backward(const Tensor<T>& g_re, const Tensor<T>& g_im);

// General axis permutation: out.dim(i) = x.dim(perm[i]).
template <typename T>
Tensor<T> permute(const Tensor<T>& x, const std::vector<int>& perm);

std::vector<int> inverse_permutation(const std::vector<int>& perm);

} // namespace lgfn::kernels

namespace lgfn {

// Runtime operation counter fed by the forward kernels. Convolutions add
// (output elements x taps x in-channels/groups) MACs; value-producing
// non-convolution kernels add one op per output element; pure data movement
// adds nothing.
struct OpCounts {
    std::uint64_t macs = 0;
    std::uint64_t elementwise = 0;
};

class OpCounter {
public:
    OpCounter();
    ~OpCounter();
    OpCounter(const OpCounter&) = delete;
    OpCounter& operator=(const OpCounter&) = delete;

    const OpCounts& counts() const { return counts_; }

    static void add_macs(std::uint64_t n);
    static void add_elementwise(std::uint64_t n);

private:
    OpCounts counts_;
    OpCounter* previous_;
};

} // namespace lgfn
