#pragma once

#include "lgfn/autograd.hpp"

namespace lgfn {

struct LossWeights {
    double l1 = 0.01;
    double fft = 1.0;
    double charbonnier_eps = 1e-3;
};

template <typename T>
struct LossTerms {
    Var<T> l1;
    Var<T> fft_charbonnier;
    Var<T> total;
};

// Mean absolute difference over all elements.
template <typename T>
Var<T> l1_loss(const Var<T>& sr, const Var<T>& hr);

// Mean over every spectral bin of every trailing 2-D plane of
// sqrt(|DFT(sr) - DFT(hr)|^2 + eps^2), unnormalized forward DFT.
template <typename T>
Var<T> fft_charbonnier_loss(const Var<T>& sr, const Var<T>& hr, double eps = 1e-3);

template <typename T>
LossTerms<T> combined_loss(const Var<T>& sr, const Var<T>& hr, const LossWeights& w = {});

} // namespace lgfn
