#pragma once

#include "lgfn/tensor.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lgfn {

// 4D array of sub-aperture views stored as data[U,V,C,H,W], values in [0,1].
struct LightField {
    Tensor<float> data;

    LightField() = default;
    explicit LightField(Tensor<float> t);
    LightField(Index u, Index v, Index c, Index h, Index w, float fill = 0.0f);

    Index U() const { return data.dim(0); }
    Index V() const { return data.dim(1); }
    Index C() const { return data.dim(2); }
    Index H() const { return data.dim(3); }
    Index W() const { return data.dim(4); }

    float& at(Index u, Index v, Index c, Index h, Index w) { return data.at({u, v, c, h, w}); }
    float at(Index u, Index v, Index c, Index h, Index w) const { return data.at({u, v, c, h, w}); }

    // View (u, v) as a [C,H,W] tensor copy.
    Tensor<float> view(Index u, Index v) const;
};

struct SamplePair {
    LightField lr;
    LightField hr;
    Index scale = 1;

    // Throws InvalidInputError unless hr is exactly scale x lr spatially with
    // identical angular and channel extents.
    void validate() const;
};

enum class EpiOrientation { horizontal, vertical };

// Horizontal: fixed (u, h), pixels[v, w]. Vertical: fixed (v, w), pixels[u, h].
struct EpiImage {
    EpiOrientation orientation = EpiOrientation::horizontal;
    Index fixed_angular = 0;
    Index fixed_spatial = 0;
    Tensor<float> pixels;
};

void lf_store(const LightField& lf, const std::filesystem::path& path);
LightField lf_load(const std::filesystem::path& path);

inline constexpr std::size_t kLf4HeaderBytes = 4 + 4 + 5 * 4;

// Reads U*V files named view_{u}_{v}.pgm (P5) or view_{u}_{v}.ppm (P6).
LightField import_views(const std::filesystem::path& directory, Index U, Index V);

// Netpbm helpers: image tensor is [C,H,W] in [0,1], C = 1 (P5) or 3 (P6).
Tensor<float> read_netpbm(const std::filesystem::path& path);
void write_netpbm(const Tensor<float>& image, const std::filesystem::path& path);

float luma_bt601(float r, float g, float b);
LightField rgb_to_y(const LightField& lf);

// Luma fields are sliced directly; RGB fields are converted first.
EpiImage extract_epi(const LightField& lf, EpiOrientation orientation, Index fixed_angular, Index fixed_spatial);

LightField degrade_bicubic(const LightField& hr, Index s);

// Luma field of two sinusoids seen with a constant disparity: view (u, v)
// samples the scene at (y - d*(u - c), x - d*(v - c)), c the angular centre.
// The texture fades to 0.5 over `taper` pixels at every spatial border
// (taper 0 disables the fade).
LightField disparity_field(Index U, Index V, Index H, Index W, double disparity = 1.0, double taper = 10.0);

// Number of patch origins along one axis.
Index patch_grid_count(Index extent, Index patch, Index stride);

std::vector<SamplePair> extract_patches(const SamplePair& source, Index lr_patch = 32, Index stride = 32);

// Codes 0..7: bit 0 flips W together with V, bit 1 flips H together with U,
// bit 2 then rotates both the spatial and the angular planes by 90 degrees.
LightField augment(const LightField& lf, int code);
SamplePair augment(const SamplePair& pair, int code);
int inverse_code(int code);

// [1, U*V, H, W] with view (u, v) at slice u*V + v. Requires C = 1.
template <typename T = float>
Tensor<T> to_feature_layout(const LightField& lf);
template <typename T = float>
LightField from_feature_layout(const Tensor<T>& t, Index U, Index V);

} // namespace lgfn
