#pragma once

// EPI-level description of the eight augmentation codes. An augmentation is
// a sequence of elementary moves (flip v/w, flip u/h, rotate); for each move
// the EPI of the moved field is an EPI of the previous field, possibly at
// other fixed coordinates, possibly turned by 180 degrees. Resolving the
// moves backwards predicts every EPI of augment(lf, code) from EPIs of lf.

#include "lgfn/light_field.hpp"

#include <vector>

namespace epi_oracle {

using lgfn::EpiOrientation;
using lgfn::Index;
using lgfn::LightField;
using Img = lgfn::Tensor<float>;

enum class Move { flip_vw, flip_uh, rotate };

inline std::vector<Move> moves(int code) {
    std::vector<Move> m;
    if (code & 1) m.push_back(Move::flip_vw);
    if (code & 2) m.push_back(Move::flip_uh);
    if (code & 4) m.push_back(Move::rotate);
    return m;
}

inline Img turn180(const Img& e) {
    Img out(e.shape());
    const Index r = e.dim(0), c = e.dim(1);
    for (Index i = 0; i < r; ++i)
        for (Index j = 0; j < c; ++j) out.at({i, j}) = e.at({r - 1 - i, c - 1 - j});
    return out;
}

inline Img epi(const LightField& lf, EpiOrientation o, Index a, Index s) {
    return lgfn::extract_epi(lf, o, a, s).pixels;
}

// EPI of the field after applying moves[0..n) to `lf`.
inline Img predicted(const LightField& lf, const std::vector<Move>& ms, std::size_t n, EpiOrientation o, Index a,
                     Index s) {
    if (n == 0) return epi(lf, o, a, s);
    const Index U = lf.U(), V = lf.V(), H = lf.H(), W = lf.W();
    const bool horiz = o == EpiOrientation::horizontal;
    switch (ms[n - 1]) {
    case Move::flip_vw:
        // Horizontal EPIs (fixed u,h) are turned; vertical ones move to the mirrored (v,w).
        return horiz ? turn180(predicted(lf, ms, n - 1, o, a, s)) : predicted(lf, ms, n - 1, o, V - 1 - a, W - 1 - s);
    case Move::flip_uh:
        return horiz ? predicted(lf, ms, n - 1, o, U - 1 - a, H - 1 - s) : turn180(predicted(lf, ms, n - 1, o, a, s));
    case Move::rotate:
        // Rotation exchanges the roles of the two EPI families.
        return horiz ? predicted(lf, ms, n - 1, EpiOrientation::vertical, U - 1 - a, H - 1 - s)
                     : turn180(predicted(lf, ms, n - 1, EpiOrientation::horizontal, a, s));
    }
    return {};
}

// True when every horizontal and vertical EPI of augment(lf, code) equals
// the prediction bit for bit.
inline bool commutes(const LightField& lf, int code) {
    const LightField moved = lgfn::augment(lf, code);
    const auto ms = moves(code);
    for (Index a = 0; a < moved.U(); ++a)
        for (Index s = 0; s < moved.H(); ++s)
            if (!epi(moved, EpiOrientation::horizontal, a, s).bit_equal(
                    predicted(lf, ms, ms.size(), EpiOrientation::horizontal, a, s)))
                return false;
    for (Index a = 0; a < moved.V(); ++a)
        for (Index s = 0; s < moved.W(); ++s)
            if (!epi(moved, EpiOrientation::vertical, a, s).bit_equal(
                    predicted(lf, ms, ms.size(), EpiOrientation::vertical, a, s)))
                return false;
    return true;
}

} // namespace epi_oracle
