#include "lgfn/metrics.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace lgfn {

template <typename T>
double psnr(const Tensor<T>& a, const Tensor<T>& b, double peak) {
    require_same_shape(a, b, "psnr");
    if (!(peak > 0)) throw InvalidInputError("psnr: peak must be positive");
    double se = 0;
    for (Index i = 0; i < a.numel(); ++i) {
        const double d = double(a[i]) - double(b[i]);
        se += d * d;
    }
    const double mse = se / double(a.numel());
    if (mse == 0) return kPsnrCapDb;
    return std::min(kPsnrCapDb, 10.0 * std::log10(peak * peak / mse));
}

namespace {

constexpr Index kWindow = 11;

std::vector<double> gaussian_window() {
    std::vector<double> g(kWindow);
    double total = 0;
    for (Index i = 0; i < kWindow; ++i) {
        const double x = double(i - kWindow / 2);
        g[static_cast<std::size_t>(i)] = std::exp(-x * x / (2.0 * 1.5 * 1.5));
        total += g[static_cast<std::size_t>(i)];
    }
    for (double& v : g) v /= total;
    return g;
}

// Valid-mode separable filtering of an h x w plane.
std::vector<double> filter_valid(const std::vector<double>& img, Index h, Index w, const std::vector<double>& g) {
    const Index oh = h - kWindow + 1, ow = w - kWindow + 1;
    std::vector<double> tmp(static_cast<std::size_t>(h * ow), 0.0), out(static_cast<std::size_t>(oh * ow), 0.0);
    for (Index y = 0; y < h; ++y)
        for (Index x = 0; x < ow; ++x) {
            double acc = 0;
            for (Index k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * img[static_cast<std::size_t>(y * w + x + k)];
            tmp[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    for (Index y = 0; y < oh; ++y)
        for (Index x = 0; x < ow; ++x) {
            double acc = 0;
            for (Index k = 0; k < kWindow; ++k) acc += g[static_cast<std::size_t>(k)] * tmp[static_cast<std::size_t>((y + k) * ow + x)];
            out[static_cast<std::size_t>(y * ow + x)] = acc;
        }
    return out;
}

} // namespace

template <typename T>
double ssim(const Tensor<T>& a, const Tensor<T>& b) {
    require_same_shape(a, b, "ssim");
    if (a.rank() < 2) throw InvalidInputError("ssim: images need two spatial dims");
    const Index h = a.dim(-2), w = a.dim(-1), planes = a.numel() / (h * w);
    if (h < kWindow || w < kWindow)
        throw InvalidInputError("ssim: image " + std::to_string(h) + "x" + std::to_string(w) + " is smaller than the " +
                                std::to_string(kWindow) + "x" + std::to_string(kWindow) + " window");
    const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
    const auto g = gaussian_window();
    double sum = 0;
    Index count = 0;
    for (Index p = 0; p < planes; ++p) {
        std::vector<double> x(static_cast<std::size_t>(h * w)), y(x.size()), xx(x.size()), yy(x.size()), xy(x.size());
        for (Index i = 0; i < h * w; ++i) {
            const double av = a[p * h * w + i], bv = b[p * h * w + i];
            const auto k = static_cast<std::size_t>(i);
            x[k] = av;
            y[k] = bv;
            xx[k] = av * av;
            yy[k] = bv * bv;
            xy[k] = av * bv;
        }
        const auto mx = filter_valid(x, h, w, g), my = filter_valid(y, h, w, g);
        const auto sxx = filter_valid(xx, h, w, g), syy = filter_valid(yy, h, w, g), sxy = filter_valid(xy, h, w, g);
        for (std::size_t i = 0; i < mx.size(); ++i) {
            const double vx = sxx[i] - mx[i] * mx[i], vy = syy[i] - my[i] * my[i], cov = sxy[i] - mx[i] * my[i];
            const double num = (2 * mx[i] * my[i] + c1) * (2 * cov + c2);
            const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
            sum += num / den;
            ++count;
        }
    }
    return sum / double(count);
}

template double psnr(const Tensor<float>&, const Tensor<float>&, double);
template double psnr(const Tensor<double>&, const Tensor<double>&, double);
template double ssim(const Tensor<float>&, const Tensor<float>&);
template double ssim(const Tensor<double>&, const Tensor<double>&);

DatasetReport evaluate(const std::vector<LightField>& sr, const std::vector<LightField>& hr,
                       const std::vector<std::string>& ids) {
    if (sr.size() != hr.size())
        throw InvalidInputError("evaluate: " + std::to_string(sr.size()) + " SR scenes vs " + std::to_string(hr.size()) +
                                " HR scenes");
    if (sr.empty()) throw InvalidInputError("evaluate: no scenes");
    if (!ids.empty() && ids.size() != sr.size()) throw InvalidInputError("evaluate: scene id count mismatch");
    DatasetReport rep;
    for (std::size_t s = 0; s < sr.size(); ++s) {
        const LightField& a = sr[s];
        const LightField& b = hr[s];
        const std::string id = ids.empty() ? "scene" + std::to_string(s) : ids[s];
        if (a.data.shape() != b.data.shape())
            throw InvalidInputError("evaluate: scene '" + id + "' shapes differ: " + shape_str(a.data.shape()) + " vs " +
                                    shape_str(b.data.shape()));
        if (a.C() != 1) throw InvalidInputError("evaluate: scene '" + id + "' is not a luma field");
        SceneScore sc{id, 0, 0};
        for (Index u = 0; u < a.U(); ++u)
            for (Index v = 0; v < a.V(); ++v) {
                const Tensor<float> va = a.view(u, v), vb = b.view(u, v);
                sc.psnr += psnr(va, vb);
                sc.ssim += ssim(va, vb);
            }
        const double views = double(a.U() * a.V());
        sc.psnr /= views;
        sc.ssim /= views;
        rep.scenes.push_back(sc);
    }
    for (const auto& sc : rep.scenes) {
        rep.mean_psnr += sc.psnr;
        rep.mean_ssim += sc.ssim;
    }
    rep.mean_psnr /= double(rep.scenes.size());
    rep.mean_ssim /= double(rep.scenes.size());
    return rep;
}

LightField baseline_sr(const LightField& lr, Index s, kernels::ResizeMode mode) {
    if (s < 1) throw InvalidInputError("baseline_sr: scale must be >= 1");
    return LightField(kernels::resize(lr.data, s * lr.H(), s * lr.W(), mode));
}

std::string format_score(double p, double s) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f / %.4f", p, s);
    return buf;
}

nlohmann::json report_json(const DatasetReport& r) {
    nlohmann::json scenes = nlohmann::json::array();
    for (const auto& s : r.scenes) scenes.push_back({{"id", s.id}, {"psnr", s.psnr}, {"ssim", s.ssim}});
    return {{"scenes", scenes},
            {"mean_psnr", r.mean_psnr},
            {"mean_ssim", r.mean_ssim},
            {"channel", "Y"},
            {"border_crop", 0},
            {"psnr_cap_db", kPsnrCapDb},
            {"averaging", "mean over views per scene, then mean over scenes"}};
}

std::string report_table(const DatasetReport& r, const std::string& method) {
    std::ostringstream os;
    std::size_t width = 7;
    for (const auto& s : r.scenes) width = std::max(width, s.id.size());
    auto row = [&](const std::string& name, const std::string& cell) {
        os << name << std::string(width + 2 - std::min(width + 1, name.size()), ' ') << cell << '\n';
    };
    row("scene", method + " (PSNR / SSIM)");
    for (const auto& s : r.scenes) row(s.id, format_score(s.psnr, s.ssim));
    row("average", format_score(r.mean_psnr, r.mean_ssim));
    os << "(Y channel, no border crop)\n";
    return os.str();
}

} // namespace lgfn
