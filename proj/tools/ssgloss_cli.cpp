// ssgloss: command-line front end for edge masks, self-similarity graphs,
// the self-similarity loss and its gradient, a toy optimizer, and benchmarks.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "CLI11.hpp"
#include "ssgloss/ssgloss.hpp"

namespace fs = std::filesystem;
using namespace ssgloss;

namespace {

enum ExitCode { exit_ok = 0, exit_io = 2, exit_mismatch = 3, exit_invalid_center = 4 };

struct GlobalOptions {
    std::optional<int> ks, kw, stride;
    std::optional<double> h, t, alpha, beta, gamma;
    std::string mode = "GAN";
    int workers = 1;
    std::uint64_t seed = 0;
    bool oracle = false;

    SsgConfig config() const {
        SsgConfig cfg = SsgConfig::defaults(parse_mode(mode));
        if (ks) cfg.search_size = *ks;
        if (kw) cfg.window_size = *kw;
        if (stride) cfg.stride = *stride;
        if (h) cfg.h = *h;
        if (t) cfg.threshold = *t;
        if (alpha) cfg.alpha = *alpha;
        if (beta) cfg.beta = *beta;
        if (gamma) cfg.gamma = *gamma;
        cfg.validate();
        return cfg;
    }
    KernelPlan plan() const {
        if (workers < 1) throw ConfigError("--workers must be >= 1");
        return KernelPlan::with_workers(workers);
    }
};

int default_workers() {
    if (const char* env = std::getenv("SSGLOSS_WORKERS")) {
        try {
            const int n = std::stoi(env);
            if (n >= 1) return n;
        } catch (const std::exception&) {
        }
        std::cerr << "ignoring invalid SSGLOSS_WORKERS='" << env << "'\n";
    }
    return default_worker_count();
}

struct ImagePair {
    ImageU8 hr_u8;
    Image hr;
    Image sr;
};

ImagePair load_pair(const fs::path& hr_path, const fs::path& sr_path) {
    ImagePair pair;
    pair.hr_u8 = load_image(hr_path);
    const ImageU8 sr_u8 = load_image(sr_path);
    if (!pair.hr_u8.same_shape(sr_u8))
        throw ShapeMismatch("shape mismatch: HR " + hr_path.string() + " is " + shape_string(pair.hr_u8) + ", SR " +
                            sr_path.string() + " is " + shape_string(sr_u8));
    pair.hr = to_unit(pair.hr_u8);
    pair.sr = to_unit(sr_u8);
    return pair;
}

// Masks always come from the ground truth unless a precomputed file is given.
EdgeMask resolve_mask(const std::string& mask_path, const ImageU8& gt, const SsgConfig& cfg) {
    if (mask_path.empty()) return compute_edge_mask(gt, cfg);
    EdgeMask mask = load_mask(mask_path);
    if (mask.height != gt.height || mask.width != gt.width)
        throw ConfigMismatch("mask " + mask_path + " is " + std::to_string(mask.height) + "x" +
                             std::to_string(mask.width) + " but the image is " + shape_string(gt));
    // Re-derive centers for the active footprint.
    return EdgeMask::from_bits(mask.height, mask.width, std::move(mask.bits), mask.threshold, cfg.search_size,
                               cfg.window_size);
}

LossAndGradient evaluate(const GlobalOptions& g, const Image& hr, const Image& sr, const EdgeMask& mask,
                         const SsgConfig& cfg) {
    return g.oracle ? ssl_backward(hr, sr, mask, cfg) : ssl_backward_fast(hr, sr, mask, cfg, g.plan());
}

Ssg build_ssg(const GlobalOptions& g, const Image& img, const EdgeMask& mask, const SsgConfig& cfg) {
    return g.oracle ? compute_ssg_oracle(img, mask, cfg) : compute_ssg_fast(img, mask, cfg, g.plan());
}

nlohmann::json loss_json(const LossReport& report, const SsgConfig& cfg, LossMode mode, double pixel_l1_loss,
                         double original) {
    nlohmann::json j = to_json(report);
    j["mode"] = std::string(to_string(mode));
    j["beta"] = cfg.beta;
    j["pixel_l1"] = pixel_l1_loss;
    if (mode == LossMode::dm) j["gamma"] = cfg.gamma;
    j["total"] = composite_total(original, report.ssl, pixel_l1_loss, CompositeWeights::from(cfg, mode));
    return j;
}

Pixel parse_center(const std::string& text) {
    std::istringstream in(text);
    Pixel p;
    char comma = 0;
    if (!(in >> p.row >> comma >> p.col) || comma != ',' || !in.eof())
        throw InvalidCenter("--center expects 'row,col', got '" + text + "'");
    return p;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(std::stoi(item));
    if (out.empty()) throw ConfigError("empty list '" + text + "'");
    return out;
}

std::vector<std::pair<int, int>> parse_sizes(const std::string& text) {
    std::vector<std::pair<int, int>> out;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const auto x = item.find('x');
        if (x == std::string::npos) throw ConfigError("size '" + item + "' is not HxW");
        out.emplace_back(std::stoi(item.substr(0, x)), std::stoi(item.substr(x + 1)));
    }
    if (out.empty()) throw ConfigError("empty size list");
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Edge-masked self-similarity graphs and the self-similarity loss"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(1);
    app.fallthrough();

    GlobalOptions g;
    g.workers = default_workers();
    app.add_option("--Ks", g.ks, "search area side length (odd)");
    app.add_option("--Kw", g.kw, "window side length (odd)");
    app.add_option("--h", g.h, "similarity scale");
    app.add_option("--stride", g.stride, "search sampling stride");
    app.add_option("--t", g.t, "edge threshold on the 8-bit scale");
    app.add_option("--alpha", g.alpha, "L1 weight inside the loss");
    app.add_option("--beta", g.beta, "loss weight in the composite total");
    app.add_option("--gamma", g.gamma, "pixel L1 weight (DM mode, optimize)");
    app.add_option("--mode", g.mode, "composite weighting: GAN or DM")->check(CLI::IsMember({"GAN", "DM", "gan", "dm"}));
    app.add_option("--workers", g.workers, "kernel worker threads (default $SSGLOSS_WORKERS or all cores)");
    app.add_option("--seed", g.seed, "seed for noise and synthetic inputs");
    app.add_flag("--oracle", g.oracle, "use the single-threaded reference backend");

    // mask
    auto* mask_cmd = app.add_subcommand("mask", "compute edge masks (writes <image>.mask.ssgf unless -o is given)");
    std::vector<std::string> mask_inputs;
    std::string mask_out;
    mask_cmd->add_option("inputs", mask_inputs, "input images")->required();
    mask_cmd->add_option("-o,--out", mask_out, "output path (single input only)");

    // loss / grad
    auto* loss_cmd = app.add_subcommand("loss", "print the loss report between GT and reconstruction");
    auto* grad_cmd = app.add_subcommand("grad", "write the loss gradient with respect to the reconstruction");
    std::string hr_path, sr_path, mask_path, grad_out;
    double original = 0.0;
    for (auto* cmd : {loss_cmd, grad_cmd}) {
        cmd->add_option("hr", hr_path, "ground-truth image")->required();
        cmd->add_option("sr", sr_path, "reconstructed image")->required();
        cmd->add_option("--mask", mask_path, "precomputed mask field (default: derived from hr)");
        cmd->add_option("--original", original, "opaque original loss added to the composite total");
    }
    loss_cmd->add_option("--grad-out", grad_out, "also write the gradient field here");
    grad_cmd->add_option("-o,--out", grad_out, "gradient field output")->required();

    // ssg-dump
    auto* dump_cmd = app.add_subcommand("ssg-dump", "write the self-similarity graph of an image");
    std::string dump_in, dump_out;
    dump_cmd->add_option("image", dump_in, "input image")->required();
    dump_cmd->add_option("-o,--out", dump_out, "ssg field output")->required();
    dump_cmd->add_option("--mask", mask_path, "precomputed mask field (default: derived from the image)");

    // heatmap
    auto* heat_cmd = app.add_subcommand("heatmap", "render one center's similarity distribution as a Ks x Ks image");
    std::string heat_in, heat_out, heat_center;
    heat_cmd->add_option("image", heat_in, "input image")->required();
    heat_cmd->add_option("--center", heat_center, "center as row,col")->required();
    heat_cmd->add_option("-o,--out", heat_out, "output .pgm/.png")->required();
    heat_cmd->add_option("--mask", mask_path, "precomputed mask field (default: derived from the image)");

    // optimize
    auto* opt_cmd = app.add_subcommand("optimize", "descend the loss from a noisy copy of a target image");
    std::string opt_in, opt_out, opt_noisy_out;
    double noise = 0.1, lr = 0.05;
    int steps = 200;
    opt_cmd->add_option("hr", opt_in, "target image")->required();
    opt_cmd->add_option("-o,--out", opt_out, "optimized image output")->required();
    opt_cmd->add_option("--noise", noise, "uniform noise amplitude of the start image")->check(CLI::NonNegativeNumber);
    opt_cmd->add_option("--steps", steps, "gradient steps")->check(CLI::NonNegativeNumber);
    opt_cmd->add_option("--lr", lr, "step size");
    opt_cmd->add_option("--noisy-out", opt_noisy_out, "also write the noisy start image");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "time forward+backward against the cost model (CSV)");
    std::string bench_sizes = "128x128", ks_list, kw_list;
    int trials = 5;
    bench_cmd->add_option("--sizes", bench_sizes, "comma-separated HxW list");
    bench_cmd->add_option("--ks-list", ks_list, "comma-separated Ks values (default: --Ks)");
    bench_cmd->add_option("--kw-list", kw_list, "comma-separated Kw values (default: --Kw)");
    bench_cmd->add_option("--trials", trials, "trials per row (median reported)")->check(CLI::PositiveNumber);

    CLI11_PARSE(app, argc, argv);

    try {
        const SsgConfig cfg = g.config();
        const LossMode mode = parse_mode(g.mode);

        if (*mask_cmd) {
            if (!mask_out.empty() && mask_inputs.size() != 1)
                throw ConfigError("-o can only be used with a single input");
            if (!mask_out.empty()) {
                const EdgeMask mask = compute_edge_mask(load_image(mask_inputs.front()), cfg);
                write_field(mask_out, mask);
                std::cout << nlohmann::json{{"edge_fraction", mask.edge_fraction}, {"n_centers", mask.centers.size()}}.dump()
                          << '\n';
                return exit_ok;
            }
            std::vector<fs::path> inputs(mask_inputs.begin(), mask_inputs.end());
            const auto batch = precompute_masks(inputs, cfg, g.workers);
            for (const auto& w : batch.written)
                std::cout << nlohmann::json{{"input", w.input.string()},
                                            {"output", w.output.string()},
                                            {"edge_fraction", w.edge_fraction},
                                            {"n_centers", w.n_centers}}
                                 .dump()
                          << '\n';
            for (const auto& f : batch.failed) std::cerr << "error: " << f.message << '\n';
            return batch.failed.empty() ? exit_ok : exit_io;
        }

        if (*loss_cmd || *grad_cmd) {
            const ImagePair pair = load_pair(hr_path, sr_path);
            const EdgeMask mask = resolve_mask(mask_path, pair.hr_u8, cfg);
            const LossAndGradient lg = evaluate(g, pair.hr, pair.sr, mask, cfg);
            if (!grad_out.empty()) write_field(grad_out, lg.gradient);
            std::cout << loss_json(lg.report, cfg, mode, pixel_l1(pair.sr, pair.hr), original).dump() << '\n';
            return exit_ok;
        }

        if (*dump_cmd) {
            const ImageU8 img = load_image(dump_in);
            const EdgeMask mask = resolve_mask(mask_path, img, cfg);
            const Ssg ssg = build_ssg(g, to_unit(img), mask, cfg);
            write_field(dump_out, ssg);
            std::cout << nlohmann::json{{"n_centers", ssg.n_centers()}, {"n_offsets", ssg.n_offsets()}}.dump() << '\n';
            return exit_ok;
        }

        if (*heat_cmd) {
            const Pixel center = parse_center(heat_center);
            const ImageU8 img = load_image(heat_in);
            const EdgeMask mask = resolve_mask(mask_path, img, cfg);
            if (!std::binary_search(mask.centers.begin(), mask.centers.end(), center))
                throw InvalidCenter("(" + heat_center + ") is not an admissible center: it must be an edge pixel at least " +
                                    std::to_string(cfg.footprint_radius()) + " pixels from every border");
            std::vector<std::uint8_t> single(mask.bits.size(), 0);
            single[static_cast<std::size_t>(center.row) * mask.width + center.col] = 1;
            const EdgeMask one =
                EdgeMask::from_bits(mask.height, mask.width, std::move(single), cfg.threshold, cfg.search_size, cfg.window_size);
            const Ssg ssg = build_ssg(g, to_unit(img), one, cfg);
            const auto row = ssg.row(0);
            const double peak = *std::max_element(row.begin(), row.end());
            // Sampled cells map to [1,255] so that every sample stays visible.
            ImageU8 heat(cfg.search_size, cfg.search_size, 1, 0);
            const int radius = cfg.search_radius();
            for (std::size_t k = 0; k < row.size(); ++k)
                heat(ssg.offsets[k].dr + radius, ssg.offsets[k].dc + radius) =
                    static_cast<std::uint8_t>(1 + std::lround(254.0 * row[k] / peak));
            save_image(heat_out, heat);
            std::cout << nlohmann::json{{"center", {center.row, center.col}}, {"self_weight", row[row.size() / 2]}, {"peak", peak}}
                             .dump()
                      << '\n';
            return exit_ok;
        }

        if (*opt_cmd) {
            if (!(lr > 0.0)) throw ConfigError("--lr must be positive");
            const ImageU8 hr_u8 = load_image(opt_in);
            const Image hr = to_unit(hr_u8);
            const Image start = synthetic::add_uniform_noise(hr, noise, g.seed);
            if (!opt_noisy_out.empty()) save_image(opt_noisy_out, from_unit(start));
            const EdgeMask mask = compute_edge_mask(hr_u8, cfg);
            const OptimizeResult result = toy_optimize(start, hr, mask, cfg, steps, lr, g.plan());
            save_image(opt_out, from_unit(result.image));
            std::cout << "step,total,ssl,pixel_l1\n";
            auto emit = [](int step, const OptimizeStep& s) {
                std::cout << step << ',' << nlohmann::json(s.total).dump() << ',' << nlohmann::json(s.ssl).dump() << ','
                          << nlohmann::json(s.pixel_l1).dump() << '\n';
            };
            emit(0, result.initial);
            for (std::size_t i = 0; i < result.trace.size(); ++i) emit(static_cast<int>(i + 1), result.trace[i]);
            return exit_ok;
        }

        if (*bench_cmd) {
            std::vector<SsgConfig> cfgs;
            const auto ks_values = ks_list.empty() ? std::vector<int>{cfg.search_size} : parse_int_list(ks_list);
            const auto kw_values = kw_list.empty() ? std::vector<int>{cfg.window_size} : parse_int_list(kw_list);
            for (int ks : ks_values)
                for (int kw : kw_values) {
                    SsgConfig c = cfg;
                    c.search_size = ks;
                    c.window_size = kw;
                    c.validate();
                    cfgs.push_back(c);
                }
            write_csv(std::cout, bench(parse_sizes(bench_sizes), cfgs, g.plan(), trials, g.seed));
            return exit_ok;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_io;
    } catch (const InvalidCenter& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_invalid_center;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_mismatch;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return exit_ok;
}
