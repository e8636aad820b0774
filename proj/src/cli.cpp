#include "lgfn/cli.hpp"

#include "lgfn/cost.hpp"
#include "lgfn/gradcheck.hpp"
#include "lgfn/metrics.hpp"
#include "lgfn/model.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdarg>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>

namespace lgfn {

namespace {

using nlohmann::json;

std::string strf(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// ---- strict JSON reading ----

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> known) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (const auto& item : j.items()) {
        const bool ok = std::any_of(known.begin(), known.end(), [&](const char* k) { return item.key() == k; });
        if (!ok) throw ConfigError("unknown config key '" + (where.empty() ? "" : where + ".") + item.key() + "'");
    }
}

template <typename V>
void read(const json& j, const char* key, V& dst, const std::string& where) {
    if (!j.contains(key)) return;
    const json& v = j.at(key);
    const std::string name = where + "." + key;
    if constexpr (std::is_same_v<V, bool>) {
        if (!v.is_boolean()) throw ConfigError(name + ": expected a boolean");
        dst = v.get<bool>();
    } else if constexpr (std::is_same_v<V, std::uint64_t>) {
        if (!v.is_number_unsigned()) throw ConfigError(name + ": expected a non-negative integer");
        dst = v.get<std::uint64_t>();
    } else if constexpr (std::is_integral_v<V>) {
        if (!v.is_number_integer()) throw ConfigError(name + ": expected an integer");
        dst = v.get<V>();
    } else if constexpr (std::is_floating_point_v<V>) {
        if (!v.is_number()) throw ConfigError(name + ": expected a number");
        dst = v.get<V>();
    } else if constexpr (std::is_same_v<V, std::string>) {
        if (!v.is_string()) throw ConfigError(name + ": expected a string");
        dst = v.get<std::string>();
    } else {
        if (!v.is_array() || !std::all_of(v.begin(), v.end(), [](const json& e) { return e.is_string(); }))
            throw ConfigError(name + ": expected an array of strings");
        dst = v.get<V>();
    }
}

// ---- shared flags ----

struct ModelFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<Index> scale;
    std::optional<std::string> mode;
    bool no_dgce = false;
    bool no_esam = false;
    bool no_ecam = false;
};

void add_model_flags(CLI::App* app, ModelFlags& f) {
    app->add_option("--config", f.config, "JSON config file")->check(CLI::ExistingFile);
    app->add_option("--seed", f.seed, "Seed for every random draw");
    app->add_option("--scale", f.scale, "Upsampling factor")->check(CLI::IsMember({2, 4}));
    app->add_option("--mode", f.mode, "Attention combination")->check(CLI::IsMember({"parallel", "cascade"}));
    app->add_flag("--no-dgce", f.no_dgce, "Disable the DGCE block");
    app->add_flag("--no-esam", f.no_esam, "Disable spatial attention");
    app->add_flag("--no-ecam", f.no_ecam, "Disable channel attention");
}

CliConfig resolve(const ModelFlags& f) {
    CliConfig c = f.config.empty() ? CliConfig{} : load_cli_config(f.config);
    if (f.seed) c.seed = *f.seed;
    if (f.scale) c.model.scale = *f.scale;
    if (f.mode) c.model.attention_mode = parse_attention_mode(*f.mode);
    if (f.no_dgce) c.model.enable_dgce = false;
    if (f.no_esam) c.model.enable_esam = false;
    if (f.no_ecam) c.model.enable_ecam = false;
    c.train.seed = c.seed;
    c.model.validate();
    c.train.validate();
    return c;
}

// .lf4 file, or a directory of view images with U = V = angular.
LightField load_field(const std::string& path, Index angular) {
    LightField lf = std::filesystem::is_directory(path) ? import_views(path, angular, angular) : lf_load(path);
    return lf.C() == 3 ? rgb_to_y(lf) : lf;
}

void write_json_file(const json& j, const std::filesystem::path& path) {
    std::ofstream os(path);
    if (!os) throw EvaluationError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

std::string mode_line(const LgfnConfig& c) {
    return strf("channels=%lld lgfm=%lld scale=%lld mode=%s dgce=%s esam=%s ecam=%s", (long long)c.channels,
                (long long)c.num_lgfm, (long long)c.scale, to_string(c.attention_mode).c_str(),
                c.enable_dgce ? "on" : "off", c.enable_esam ? "on" : "off", c.enable_ecam ? "on" : "off");
}

json cost_json(const CostReport& r) {
    json groups = json::object();
    for (const auto& [g, n] : r.params_by_group) groups[g] = n;
    return {{"params_total", r.params_total},
            {"params_by_group", groups},
            {"macs", r.macs_total},
            {"flops", r.flops_total},
            {"elementwise_ops", r.elementwise_total},
            {"input", {{"U", r.input.U}, {"V", r.input.V}, {"H", r.input.H}, {"W", r.input.W}, {"scale", r.input.scale}}},
            {"convention", r.convention}};
}

// ---- subcommands ----

struct AnalyzeArgs {
    ModelFlags model;
    Index height = 32;
    Index width = 32;
    bool as_json = false;
};

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
    const CliConfig c = resolve(a.model);
    const InputSpec in{c.model.angular, c.model.angular, a.height, a.width, c.model.scale};
    const CostReport r = count_flops(c.model, in);
    if (a.as_json) {
        out << cost_json(r).dump(2) << '\n';
        return 0;
    }
    out << "config: " << mode_line(c.model) << '\n';
    out << strf("input: %lldx%lld views of %lldx%lld, x%lld\n", (long long)in.U, (long long)in.V, (long long)in.H,
                (long long)in.W, (long long)in.scale);
    out << strf("params: %lld (%.1fk)\n", (long long)r.params_total, r.params_total / 1e3);
    for (const auto& [g, n] : r.params_by_group) out << strf("  %-10s %lld\n", g.c_str(), (long long)n);
    out << strf("MACs: %.3fG\n", r.macs_total / 1e9);
    out << strf("FLOPs: %.3fG\n", r.flops_total / 1e9);
    out << strf("elementwise ops: %.3fG (not included in FLOPs)\n", r.elementwise_total / 1e9);
    out << "convention: " << r.convention << '\n';
    return 0;
}

struct AblateArgs {
    ModelFlags model;
    bool as_json = false;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
    const CliConfig c = resolve(a.model);
    const InputSpec in{c.model.angular, c.model.angular, 32, 32, c.model.scale};
    const auto variants = ablation_configs(c.model);
    Index full = 0;
    std::vector<CostReport> reports;
    for (const auto& [name, cfg] : variants) {
        reports.push_back(count_flops(cfg, in));
        if (name.rfind("LGFN-P", 0) == 0) full = reports.back().params_total;
    }
    if (a.as_json) {
        json rows = json::array();
        for (std::size_t i = 0; i < variants.size(); ++i) {
            json row = cost_json(reports[i]);
            row["variant"] = variants[i].first;
            row["delta_params"] = reports[i].params_total - full;
            rows.push_back(row);
        }
        out << rows.dump(2) << '\n';
        return 0;
    }
    out << strf("%-26s %10s %10s %10s\n", "variant", "params", "delta", "FLOPs(G)");
    for (std::size_t i = 0; i < variants.size(); ++i)
        out << strf("%-26s %10lld %10lld %10.3f\n", variants[i].first.c_str(), (long long)reports[i].params_total,
                    (long long)(reports[i].params_total - full), reports[i].flops_total / 1e9);
    out << "input: " << in.U << "x" << in.V << " views of " << in.H << "x" << in.W << ", " << reports[0].convention
        << '\n';
    return 0;
}

struct GradcheckArgs {
    std::uint64_t seed = 0;
    bool skip_model = false;
};

int cmd_gradcheck(const GradcheckArgs& a, std::ostream& out) {
    const auto cases = run_gradcheck_suite(a.seed, !a.skip_model);
    std::size_t failed = 0;
    for (const auto& c : cases) {
        out << strf("%-30s max_rel_error %.3e  tol %.0e  %s\n", c.name.c_str(), c.max_rel_error, c.tolerance,
                    c.passed() ? "PASS" : "FAIL");
        failed += !c.passed();
    }
    out << strf("%zu/%zu cases passed\n", cases.size() - failed, cases.size());
    return failed == 0 ? 0 : 1;
}

struct TrainArgs {
    ModelFlags model;
    std::string out_dir;
    std::string init_checkpoint;
    std::vector<std::string> data;
    std::optional<Index> synthetic;
    std::optional<Index> epochs;
    std::optional<Index> steps_per_epoch;
    bool no_augment = false;
};

int cmd_train(const TrainArgs& a, std::ostream& out) {
    CliConfig c = resolve(a.model);
    if (!a.out_dir.empty()) c.paths.out_dir = a.out_dir;
    if (a.epochs) c.train.epochs = *a.epochs;
    if (a.steps_per_epoch) c.train.steps_per_epoch = *a.steps_per_epoch;
    if (a.no_augment) c.train.augment = false;
    c.paths.train_hr.insert(c.paths.train_hr.end(), a.data.begin(), a.data.end());
    c.train.validate();

    std::vector<LightField> fields;
    for (const auto& p : c.paths.train_hr) fields.push_back(load_field(p, c.model.angular));
    if (a.synthetic) fields.push_back(disparity_field(c.model.angular, c.model.angular, *a.synthetic, *a.synthetic));
    if (fields.empty()) throw ConfigError("no training data: set paths.train_hr or pass --data / --synthetic");

    std::vector<SamplePair> samples;
    for (const LightField& hr : fields) {
        const SamplePair whole{degrade_bicubic(hr, c.model.scale), hr, c.model.scale};
        for (auto& p : extract_patches(whole, c.patch, c.patch_stride)) samples.push_back(std::move(p));
    }

    const std::filesystem::path dir = c.paths.out_dir;
    std::filesystem::create_directories(dir);
    write_json_file(to_json(c), dir / "config.json");
    ParamStore<float> init =
        a.init_checkpoint.empty() ? init_params(c.model, c.seed) : checkpoint_load(a.init_checkpoint, c.model);
    const TrainResult r = train_loop(samples, c.model, c.train, std::move(init), {dir / "train_log.jsonl", dir});
    out << strf("trained %zu steps on %zu patches\n", r.steps.size(), samples.size());
    if (!r.steps.empty())
        out << strf("loss: first %.6f, last %.6f\n", r.steps.front().total, r.steps.back().total);
    out << "checkpoint: " << (dir / "final.lgfn").string() << '\n';
    out << "log: " << (dir / "train_log.jsonl").string() << '\n';
    return 0;
}

struct SrArgs {
    ModelFlags model;
    std::string checkpoint;
    std::string input;
    std::string output;
    std::string views_dir;
};

int cmd_sr(const SrArgs& a, std::ostream& out) {
    const CliConfig c = resolve(a.model);
    const ParamStore<float> params = checkpoint_load(a.checkpoint, c.model);
    const LightField lr = load_field(a.input, c.model.angular);
    LightField sr = lgfn_forward(lr, params, c.model);
    for (float& v : sr.data.span()) v = std::clamp(v, 0.0f, 1.0f);
    lf_store(sr, a.output);
    std::filesystem::path views = a.views_dir;
    if (views.empty()) views = std::filesystem::path(a.output).replace_extension("").string() + "_views";
    std::filesystem::create_directories(views);
    for (Index u = 0; u < sr.U(); ++u)
        for (Index v = 0; v < sr.V(); ++v)
            write_netpbm(sr.view(u, v), views / ("view_" + std::to_string(u) + "_" + std::to_string(v) + ".pgm"));
    out << strf("%lldx%lld views %lldx%lld -> %lldx%lld\n", (long long)lr.U(), (long long)lr.V(), (long long)lr.H(),
                (long long)lr.W(), (long long)sr.H(), (long long)sr.W());
    out << "field: " << a.output << "\nviews: " << views.string() << '\n';
    return 0;
}

struct EvalArgs {
    std::vector<std::string> sr;
    std::vector<std::string> hr;
    std::vector<std::string> ids;
    std::string baseline;
    Index scale = 4;
    Index angular = 5;
    std::string output;
};

int cmd_eval(const EvalArgs& a, std::ostream& out) {
    if (a.hr.empty()) throw InvalidInputError("eval: at least one --hr field is required");
    if (a.baseline.empty() && a.sr.size() != a.hr.size())
        throw InvalidInputError(strf("eval: %zu --sr fields for %zu --hr fields", a.sr.size(), a.hr.size()));
    if (!a.baseline.empty() && !a.sr.empty()) throw InvalidInputError("eval: --baseline replaces --sr");
    if (!a.ids.empty() && a.ids.size() != a.hr.size()) throw InvalidInputError("eval: one --id per --hr field");

    std::vector<LightField> sr, hr;
    for (std::size_t i = 0; i < a.hr.size(); ++i) {
        hr.push_back(load_field(a.hr[i], a.angular));
        if (a.baseline.empty()) {
            sr.push_back(load_field(a.sr[i], a.angular));
        } else {
            const auto mode = a.baseline == "bicubic" ? kernels::ResizeMode::bicubic : kernels::ResizeMode::bilinear;
            sr.push_back(baseline_sr(degrade_bicubic(hr.back(), a.scale), a.scale, mode));
        }
    }
    std::vector<std::string> ids = a.ids;
    if (ids.empty())
        for (const auto& p : a.hr) ids.push_back(std::filesystem::path(p).stem().string());
    const DatasetReport r = evaluate(sr, hr, ids);
    const std::string method = a.baseline.empty() ? "SR" : a.baseline;
    out << report_table(r, method);
    json j = report_json(r);
    j["method"] = method;
    if (!a.baseline.empty()) {
        const ReferenceScore& ref = a.baseline == "bicubic" ? kReferenceBicubic : kReferenceBilinear;
        out << strf("reference %s average over five benchmark datasets (x4): %s (manual comparison only)\n",
                    ref.method, format_score(ref.psnr, ref.ssim).c_str());
        j["reference"] = {{"method", ref.method}, {"psnr", ref.psnr}, {"ssim", ref.ssim}};
    }
    if (!a.output.empty()) write_json_file(j, a.output);
    return 0;
}

struct EpiArgs {
    std::string input;
    std::string orientation = "h";
    Index angular_index = 0;
    Index spatial_index = 0;
    Index angular = 5;
    std::string output;
};

int cmd_epi(const EpiArgs& a, std::ostream& out) {
    const LightField lf = load_field(a.input, a.angular);
    const EpiOrientation o = a.orientation == "h" ? EpiOrientation::horizontal : EpiOrientation::vertical;
    const EpiImage epi = extract_epi(lf, o, a.angular_index, a.spatial_index);
    write_netpbm(epi.pixels.reshaped({1, epi.pixels.dim(0), epi.pixels.dim(1)}), a.output);
    out << strf("%s EPI %lldx%lld -> %s\n", a.orientation == "h" ? "horizontal" : "vertical",
                (long long)epi.pixels.dim(0), (long long)epi.pixels.dim(1), a.output.c_str());
    return 0;
}

} // namespace

CliConfig parse_cli_config(const json& doc) {
    CliConfig c;
    check_keys(doc, "", {"model", "train", "paths", "seed"});
    if (doc.contains("seed")) read(doc, "seed", c.seed, "config");
    if (doc.contains("model")) {
        const json& m = doc.at("model");
        check_keys(m, "model",
                   {"channels", "num_lgfm", "scale", "angular", "dgce_expansion_num", "dgce_expansion_den",
                    "esam_reduction", "esam_downscale", "lka_kernel", "lka_dilated_kernel", "lka_dilation",
                    "ecam_kernel", "attention_mode", "enable_dgce", "enable_esam", "enable_ecam",
                    "direction_schedule"});
        LgfnConfig& x = c.model;
        read(m, "channels", x.channels, "model");
        read(m, "scale", x.scale, "model");
        read(m, "angular", x.angular, "model");
        read(m, "dgce_expansion_num", x.dgce_expansion_num, "model");
        read(m, "dgce_expansion_den", x.dgce_expansion_den, "model");
        read(m, "esam_reduction", x.esam_reduction, "model");
        read(m, "esam_downscale", x.esam_downscale, "model");
        read(m, "lka_kernel", x.lka_kernel, "model");
        read(m, "lka_dilated_kernel", x.lka_dilated_kernel, "model");
        read(m, "lka_dilation", x.lka_dilation, "model");
        read(m, "ecam_kernel", x.ecam_kernel, "model");
        read(m, "enable_dgce", x.enable_dgce, "model");
        read(m, "enable_esam", x.enable_esam, "model");
        read(m, "enable_ecam", x.enable_ecam, "model");
        std::string mode = to_string(x.attention_mode);
        read(m, "attention_mode", mode, "model");
        x.attention_mode = parse_attention_mode(mode);
        Index n = x.num_lgfm;
        read(m, "num_lgfm", n, "model");
        if (m.contains("direction_schedule")) {
            read(m, "direction_schedule", x.direction_schedule, "model");
            x.num_lgfm = m.contains("num_lgfm") ? n : static_cast<Index>(x.direction_schedule.size());
        } else if (n != x.num_lgfm) {
            x.set_uniform_schedule(n);
        }
        x.validate();
    }
    if (doc.contains("train")) {
        const json& t = doc.at("train");
        check_keys(t, "train",
                   {"lr0", "halve_every", "epochs", "batch", "l1_weight", "fft_weight", "charbonnier_eps", "beta1",
                    "beta2", "adam_eps", "steps_per_epoch", "augment", "checkpoint_every", "patch", "patch_stride"});
        TrainConfig& x = c.train;
        read(t, "lr0", x.lr0, "train");
        read(t, "halve_every", x.halve_every, "train");
        read(t, "epochs", x.epochs, "train");
        read(t, "batch", x.batch, "train");
        read(t, "l1_weight", x.loss.l1, "train");
        read(t, "fft_weight", x.loss.fft, "train");
        read(t, "charbonnier_eps", x.loss.charbonnier_eps, "train");
        read(t, "beta1", x.beta1, "train");
        read(t, "beta2", x.beta2, "train");
        read(t, "adam_eps", x.adam_eps, "train");
        read(t, "steps_per_epoch", x.steps_per_epoch, "train");
        read(t, "augment", x.augment, "train");
        read(t, "checkpoint_every", x.checkpoint_every, "train");
        read(t, "patch", c.patch, "train");
        read(t, "patch_stride", c.patch_stride, "train");
        x.validate();
        if (c.patch < 1 || c.patch_stride < 1) throw ConfigError("train.patch and train.patch_stride must be >= 1");
    }
    if (doc.contains("paths")) {
        const json& p = doc.at("paths");
        check_keys(p, "paths", {"train_hr", "out_dir"});
        read(p, "train_hr", c.paths.train_hr, "paths");
        read(p, "out_dir", c.paths.out_dir, "paths");
    }
    c.train.seed = c.seed;
    return c;
}

CliConfig load_cli_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot open config " + path.string());
    json doc;
    try {
        doc = json::parse(is);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_cli_config(doc);
}

json to_json(const CliConfig& c) {
    const LgfnConfig& m = c.model;
    const TrainConfig& t = c.train;
    return {{"seed", c.seed},
            {"model",
             {{"channels", m.channels},
              {"num_lgfm", m.num_lgfm},
              {"scale", m.scale},
              {"angular", m.angular},
              {"dgce_expansion_num", m.dgce_expansion_num},
              {"dgce_expansion_den", m.dgce_expansion_den},
              {"esam_reduction", m.esam_reduction},
              {"esam_downscale", m.esam_downscale},
              {"lka_kernel", m.lka_kernel},
              {"lka_dilated_kernel", m.lka_dilated_kernel},
              {"lka_dilation", m.lka_dilation},
              {"ecam_kernel", m.ecam_kernel},
              {"attention_mode", to_string(m.attention_mode)},
              {"enable_dgce", m.enable_dgce},
              {"enable_esam", m.enable_esam},
              {"enable_ecam", m.enable_ecam},
              {"direction_schedule", m.direction_schedule}}},
            {"train",
             {{"lr0", t.lr0},
              {"halve_every", t.halve_every},
              {"epochs", t.epochs},
              {"batch", t.batch},
              {"l1_weight", t.loss.l1},
              {"fft_weight", t.loss.fft},
              {"charbonnier_eps", t.loss.charbonnier_eps},
              {"beta1", t.beta1},
              {"beta2", t.beta2},
              {"adam_eps", t.adam_eps},
              {"steps_per_epoch", t.steps_per_epoch},
              {"augment", t.augment},
              {"checkpoint_every", t.checkpoint_every},
              {"patch", c.patch},
              {"patch_stride", c.patch_stride}}},
            {"paths", {{"train_hr", c.paths.train_hr}, {"out_dir", c.paths.out_dir}}}};
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Light-field super-resolution toolkit", "lgfn"};
    app.require_subcommand(1);

    AnalyzeArgs analyze;
    auto* s_analyze = app.add_subcommand("analyze", "Parameter and FLOP counts for a configuration");
    add_model_flags(s_analyze, analyze.model);
    s_analyze->add_option("--height", analyze.height, "LR view height")->check(CLI::PositiveNumber);
    s_analyze->add_option("--width", analyze.width, "LR view width")->check(CLI::PositiveNumber);
    s_analyze->add_flag("--json", analyze.as_json, "Print JSON");

    AblateArgs ablate;
    auto* s_ablate = app.add_subcommand("ablate", "Cost table over the ablation variants");
    add_model_flags(s_ablate, ablate.model);
    s_ablate->add_flag("--json", ablate.as_json, "Print JSON");

    GradcheckArgs gradcheck;
    auto* s_grad = app.add_subcommand("gradcheck", "Finite-difference gradient suite");
    s_grad->add_option("--seed", gradcheck.seed, "Seed for the random probe points");
    s_grad->add_flag("--skip-model", gradcheck.skip_model, "Skip the end-to-end model case");

    TrainArgs train;
    auto* s_train = app.add_subcommand("train", "Train from HR light fields");
    add_model_flags(s_train, train.model);
    s_train->add_option("--out", train.out_dir, "Output directory (checkpoints, log)");
    s_train->add_option("--checkpoint", train.init_checkpoint, "Initial weights")->check(CLI::ExistingFile);
    s_train->add_option("--data", train.data, "HR field (.lf4 or view directory); repeatable");
    s_train->add_option("--synthetic", train.synthetic, "Add a synthetic HR field of this edge length")
        ->check(CLI::PositiveNumber);
    s_train->add_option("--epochs", train.epochs, "Epoch count")->check(CLI::PositiveNumber);
    s_train->add_option("--steps-per-epoch", train.steps_per_epoch, "Steps per epoch (0: one pass)")
        ->check(CLI::NonNegativeNumber);
    s_train->add_flag("--no-augment", train.no_augment, "Disable flips and rotations");

    SrArgs sr;
    auto* s_sr = app.add_subcommand("sr", "Super-resolve a light field");
    add_model_flags(s_sr, sr.model);
    s_sr->add_option("--checkpoint", sr.checkpoint, "Trained weights")->required()->check(CLI::ExistingFile);
    s_sr->add_option("--input", sr.input, "LR field (.lf4 or view directory)")->required()->check(CLI::ExistingPath);
    s_sr->add_option("--out", sr.output, "Output .lf4 path")->required();
    s_sr->add_option("--views-dir", sr.views_dir, "Directory for per-view PGMs (default: <out>_views)");

    EvalArgs ev;
    auto* s_eval = app.add_subcommand("eval", "PSNR/SSIM report for SR vs HR fields");
    s_eval->add_option("--sr", ev.sr, "SR field; repeatable, paired with --hr")->check(CLI::ExistingPath);
    s_eval->add_option("--hr", ev.hr, "HR field; repeatable")->check(CLI::ExistingPath);
    s_eval->add_option("--id", ev.ids, "Scene name; repeatable");
    s_eval->add_option("--baseline", ev.baseline, "Score an interpolation baseline instead of --sr")
        ->check(CLI::IsMember({"bicubic", "bilinear"}));
    s_eval->add_option("--scale", ev.scale, "Scale for --baseline")->check(CLI::IsMember({2, 4}));
    s_eval->add_option("--angular", ev.angular, "U = V for view directories")->check(CLI::PositiveNumber);
    s_eval->add_option("--out", ev.output, "Write the report as JSON");

    EpiArgs epi;
    auto* s_epi = app.add_subcommand("epi", "Write one epipolar-plane image");
    s_epi->add_option("--input", epi.input, "Field (.lf4 or view directory)")->required()->check(CLI::ExistingPath);
    s_epi->add_option("--orientation", epi.orientation, "h: fixed (u, y); v: fixed (v, x)")
        ->check(CLI::IsMember({"h", "v"}));
    s_epi->add_option("--angular-index", epi.angular_index, "Fixed angular coordinate")->required();
    s_epi->add_option("--spatial-index", epi.spatial_index, "Fixed spatial coordinate")->required();
    s_epi->add_option("--angular", epi.angular, "U = V for view directories")->check(CLI::PositiveNumber);
    s_epi->add_option("--out", epi.output, "Output PGM")->required();

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (s_analyze->parsed()) return cmd_analyze(analyze, out);
        if (s_ablate->parsed()) return cmd_ablate(ablate, out);
        if (s_grad->parsed()) return cmd_gradcheck(gradcheck, out);
        if (s_train->parsed()) return cmd_train(train, out);
        if (s_sr->parsed()) return cmd_sr(sr, out);
        if (s_eval->parsed()) return cmd_eval(ev, out);
        if (s_epi->parsed()) return cmd_epi(epi, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}

} // namespace lgfn
