#pragma once

#include "lgfn/kernels.hpp"
#include "lgfn/light_field.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace lgfn {

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(peak^2 / MSE) over all elements, capped at 100 dB.
template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak = 1.0);

// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5), K1 = 0.01,
// K2 = 0.03, dynamic range 1, averaged over valid window positions. Leading
// dims are treated as independent planes and averaged.
template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b);

struct SceneScore {
    std::string id;
    double psnr = 0;
    double ssim = 0;
};

struct DatasetReport {
    std::vector<SceneScore> scenes;
    double mean_psnr = 0;
    double mean_ssim = 0;
};

// Per scene: mean over all U*V views. Dataset: unweighted mean over scenes.
DatasetReport evaluate(const std::vector<LightField>& sr, const std::vector<LightField>& hr,
                       const std::vector<std::string>& ids = {});

LightField baseline_sr(const LightField& lr, Index s, kernels::ResizeMode mode);

// Reference dataset averages for the interpolation baselines, printed next to
// measured values for manual comparison only.
struct ReferenceScore {
    const char* method;
    double psnr;
    double ssim;
};
inline constexpr ReferenceScore kReferenceBicubic{"Bicubic", 27.58, 0.8701};
inline constexpr ReferenceScore kReferenceBilinear{"Bilinear", 26.95, 0.8566};

std::string format_score(double psnr, double ssim);  // "27.58 / 0.8701"
nlohmann::json report_json(const DatasetReport& r);
std::string report_table(const DatasetReport& r, const std::string& method);

} // namespace lgfn
