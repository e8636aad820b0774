#include "lgfn/losses.hpp"

namespace lgfn {

template <typename T>
Var<T> l1_loss(const Var<T>& sr, const Var<T>& hr) {
    require_same_shape(sr.value(), hr.value(), "l1_loss");
    return mean(abs(sub(sr, hr)));
}

template <typename T>
Var<T> fft_charbonnier_loss(const Var<T>& sr, const Var<T>& hr, double eps) {
    require_same_shape(sr.value(), hr.value(), "fft_charbonnier_loss");
    if (sr.shape().size() < 2) throw ShapeError("fft_charbonnier_loss: inputs need two trailing spatial dims");
    // The transform is linear, so the spectrum of the difference equals the
    // difference of the spectra.
    return charbonnier_mean(fft2d(sub(sr, hr)), eps);
}

template <typename T>
LossTerms<T> combined_loss(const Var<T>& sr, const Var<T>& hr, const LossWeights& w) {
    if (w.l1 < 0 || w.fft < 0) throw InvalidInputError("loss weights must be >= 0");
    LossTerms<T> out;
    out.l1 = l1_loss(sr, hr);
    out.fft_charbonnier = fft_charbonnier_loss(sr, hr, w.charbonnier_eps);
    out.total = add(scale(out.l1, w.l1), scale(out.fft_charbonnier, w.fft));
    return out;
}

template Var<float> l1_loss(const Var<float>&, const Var<float>&);
template Var<double> l1_loss(const Var<double>&, const Var<double>&);
template Var<float> fft_charbonnier_loss(const Var<float>&, const Var<float>&, double);
template Var<double> fft_charbonnier_loss(const Var<double>&, const Var<double>&, double);
template LossTerms<float> combined_loss(const Var<float>&, const Var<float>&, const LossWeights&);
template LossTerms<double> combined_loss(const Var<double>&, const Var<double>&, const LossWeights&);

} // namespace lgfn
