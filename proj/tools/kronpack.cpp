// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "kron/complexity.hpp"
#include "kron/gkpd.hpp"
#include "kron/kronconv.hpp"
#include "kron/report.hpp"
#include "kron/tensor_io.hpp"

namespace {

using namespace kron;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitIo = 2;
constexpr int kExitShape = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitEmptySearch = 5;

std::string fmt(const char* format, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, format, v);
    return buf;
}

Shape parse_shape_flag(const std::string& text) {
    Shape shape;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t comma = text.find(',', pos);
        if (comma == std::string::npos) comma = text.size();
        const std::string part = text.substr(pos, comma - pos);
        if (part.empty() || part.size() > 12 ||
            part.find_first_not_of("0123456789") != std::string::npos) {
            throw parameter_error("bad shape value '" + text + "'");
        }
        const unsigned long long v = std::stoull(part);
        if (v == 0) throw parameter_error("shape entries must be positive: '" + text + "'");
        shape.push_back(static_cast<std::size_t>(v));
        if (comma == text.size()) break;
        pos = comma + 1;
    }
    if (shape.empty()) throw parameter_error("empty shape value");
    return shape;
}

/// The complementary factor shape: target / given, elementwise.
Shape derive_other(const Shape& target, const Shape& given) {
    if (given.size() != target.size()) {
        throw shape_error("factor shape has rank " + std::to_string(given.size()) +
                          ", tensor has rank " + std::to_string(target.size()));
    }
    Shape other(target.size());
    for (std::size_t n = 0; n < target.size(); ++n) {
        if (target[n] % given[n] != 0) {
            throw shape_error("dimension " + std::to_string(n) + ": " +
                              std::to_string(given[n]) + " does not divide " +
                              std::to_string(target[n]));
        }
        other[n] = target[n] / given[n];
    }
    return other;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::error_code ec;
            std::filesystem::remove(tmp, ec);
            throw io_error("write failed for " + tmp.string());
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw io_error("cannot move " + tmp.string() + " into place: " + ec.message());
    }
}

double relative_error(double abs_error, double norm) {
    return norm > 0.0 ? abs_error / norm : abs_error;
}

struct DecomposeArgs {
    std::string input;
    std::string shape_a;
    std::string shape_b;
    std::size_t r_hat = 1;
    std::string out;
    bool json = false;
};

struct ReconstructArgs {
    std::vector<std::string> factors_a;
    std::vector<std::string> factors_b;
    std::string out;
    std::string name = "reconstructed";
};

struct AnalyzeArgs {
    std::string input;
    double target_flops_reduction = 1.0;
    std::size_t r_hat_min = 1;
    std::size_t r_hat_max = 8;
    bool json = false;
};

struct VerifyArgs {
    std::string weights;
    std::vector<std::string> factors_a;
    std::vector<std::string> factors_b;
    std::string input;
    std::size_t stride_h = 1;
    std::size_t stride_w = 1;
    std::size_t pad_h = 0;
    std::size_t pad_w = 0;
};

/// Loads factor files into pairs; flags whether any payload was 32-bit.
std::pair<std::vector<ConvFactorPair>, bool> load_factor_pairs(
    const std::vector<std::string>& paths_a, const std::vector<std::string>& paths_b) {
    if (paths_a.empty() || paths_a.size() != paths_b.size()) {
        throw parameter_error("need the same nonzero number of --factors-a and --factors-b");
    }
    std::vector<ConvFactorPair> pairs;
    bool any_f32 = false;
    for (std::size_t r = 0; r < paths_a.size(); ++r) {
        LoadedTensor a = read_tensor_file(paths_a[r]);
        LoadedTensor b = read_tensor_file(paths_b[r]);
        any_f32 = any_f32 || a.dtype == Dtype::f32 || b.dtype == Dtype::f32;
        pairs.push_back(ConvFactorPair{std::move(a.tensor), std::move(b.tensor)});
    }
    for (std::size_t r = 1; r < pairs.size(); ++r) {
        if (pairs[r].a.shape() != pairs[0].a.shape() ||
            pairs[r].b.shape() != pairs[0].b.shape()) {
            throw shape_error("factor pair " + std::to_string(r) +
                              " does not match the shape of pair 0");
        }
    }
    return {std::move(pairs), any_f32};
}

int run_decompose(const DecomposeArgs& args) {
    const LoadedTensor in = read_tensor_file(args.input);
    const Shape& target = in.tensor.shape();

    if (args.shape_a.empty() && args.shape_b.empty()) {
        throw parameter_error("provide --shape-a, --shape-b, or both");
    }
    FactorShapePair pair;
    if (!args.shape_a.empty()) pair.shape_a = parse_shape_flag(args.shape_a);
    if (!args.shape_b.empty()) pair.shape_b = parse_shape_flag(args.shape_b);
    if (pair.shape_a.empty()) pair.shape_a = derive_other(target, pair.shape_b);
    if (pair.shape_b.empty()) pair.shape_b = derive_other(target, pair.shape_a);
    validate_pair(pair, target);

    const GkpdDecomposition d = gkpd_solve(in.tensor, pair, args.r_hat);

    for (std::size_t r = 0; r < d.r_hat; ++r) {
        const std::string tag_a = "a" + std::to_string(r), tag_b = "b" + std::to_string(r);
        write_tensor_file(args.out + "." + tag_a + ".tensor", in.name + "." + tag_a,
                          d.factors_a[r]);
        write_tensor_file(args.out + "." + tag_b + ".tensor", in.name + "." + tag_b,
                          d.factors_b[r]);
    }

    Report report;
    report.tensor_name = in.name;
    report.tensor_shape = target;
    report.context.emplace_back("input-dtype", dtype_name(in.dtype));
    ReportRow row;
    row.shape_a = pair.shape_a;
    row.shape_b = pair.shape_b;
    row.r_hat = d.r_hat;
    row.params = static_cast<unsigned long long>(d.r_hat) *
                 (element_count(pair.shape_a) + element_count(pair.shape_b));
    row.memory_reduction = memory_reduction(pair, d.r_hat);
    row.flops_reduction = target.size() == 4 ? flops_reduction(pair, d.r_hat) : 0.0;
    row.rel_error = relative_error(d.achieved_error, frobenius_norm(in.tensor));
    row.chosen = true;
    report.rows.push_back(std::move(row));

    const std::string rendered = args.json ? render_json(report) : render_text(report);
    write_text_file(args.out + (args.json ? ".report.json" : ".report.txt"), rendered);
    std::cout << rendered;
    return kExitOk;
}

int run_reconstruct(const ReconstructArgs& args) {
    auto [pairs, any_f32] = load_factor_pairs(args.factors_a, args.factors_b);
    (void)any_f32;
    GkpdDecomposition d;
    d.pair_shapes.shape_a = pairs[0].a.shape();
    d.pair_shapes.shape_b = pairs[0].b.shape();
    if (d.pair_shapes.shape_a.size() != d.pair_shapes.shape_b.size()) {
        throw shape_error("factor ranks differ");
    }
    d.target_shape.resize(d.pair_shapes.shape_a.size());
    for (std::size_t n = 0; n < d.target_shape.size(); ++n) {
        d.target_shape[n] = d.pair_shapes.shape_a[n] * d.pair_shapes.shape_b[n];
    }
    d.r_hat = pairs.size();
    for (auto& p : pairs) {
        d.factors_a.push_back(std::move(p.a));
        d.factors_b.push_back(std::move(p.b));
    }
    write_tensor_file(args.out, args.name, reconstruct(d));
    return kExitOk;
}

int run_analyze(const AnalyzeArgs& args) {
    const LoadedTensor in = read_tensor_file(args.input);
    std::vector<ConfigCandidate> candidates = enumerate_candidates(
        in.tensor.shape(), args.target_flops_reduction, args.r_hat_min, args.r_hat_max);
    if (candidates.empty()) {
        std::cerr << "no factor-shape candidate reaches a FLOPs reduction of "
                  << fmt("%.6f", args.target_flops_reduction) << " for this tensor\n";
        return kExitEmptySearch;
    }
    const SelectionResult sel = select_configuration(in.tensor, std::move(candidates));

    Report report = make_report(in.name, in.tensor.shape(), sel);
    report.context.emplace_back("target-flops-reduction",
                                fmt("%.6f", args.target_flops_reduction));
    report.context.emplace_back("r-hat-min", std::to_string(args.r_hat_min));
    report.context.emplace_back("r-hat-max", std::to_string(args.r_hat_max));
    std::cout << (args.json ? render_json(report) : render_text(report));
    return kExitOk;
}

int run_verify(const VerifyArgs& args) {
    const LoadedTensor w = read_tensor_file(args.weights);
    const LoadedTensor x = read_tensor_file(args.input);
    auto [pairs, factors_f32] = load_factor_pairs(args.factors_a, args.factors_b);

    validate_pair(FactorShapePair{pairs[0].a.shape(), pairs[0].b.shape()}, w.tensor.shape());
    const ConvGeometry g{args.stride_h, args.stride_w, args.pad_h, args.pad_w};

    MacCounter macs_direct, macs_kron;
    const DenseTensor direct = conv2d_direct(w.tensor, x.tensor, g, &macs_direct);
    const DenseTensor factored = kron_conv_sum_forward(pairs, x.tensor, g, &macs_kron);

    double deviation = 0.0;
    for (std::size_t i = 0; i < direct.size(); ++i) {
        deviation = std::max(deviation, std::abs(direct[i] - factored[i]));
    }
    const bool any_f32 =
        factors_f32 || w.dtype == Dtype::f32 || x.dtype == Dtype::f32;
    const double threshold = any_f32 ? 1e-4 : 1e-9;
    const bool ok = deviation <= threshold;

    std::cout << kToolVersion << " verify\n";
    std::cout << "max-abs-deviation: " << fmt("%.17g", deviation) << "\n";
    std::cout << "threshold: " << fmt("%.17g", threshold) << "\n";
    std::cout << "macs-direct: " << macs_direct.macs << "\n";
    std::cout << "macs-kron: " << macs_kron.macs << "\n";
    std::cout << "mac-ratio: "
              << fmt("%.17g", static_cast<double>(macs_direct.macs) /
                                  static_cast<double>(macs_kron.macs))
              << "\n";
    std::cout << "status: " << (ok ? "ok" : "deviation-exceeded") << "\n";
    return ok ? kExitOk : kExitVerifyFailed;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Kronecker-factor compression toolkit for dense tensors"};
    app.require_subcommand(1);

    DecomposeArgs dargs;
    CLI::App* dec = app.add_subcommand(
        "decompose", "Factor a tensor into a sum of Kronecker products");
    dec->add_option("--input", dargs.input, "tensor file to decompose")->required();
    dec->add_option("--shape-a", dargs.shape_a, "factor-a shape, comma-separated");
    dec->add_option("--shape-b", dargs.shape_b, "factor-b shape, comma-separated");
    dec->add_option("--r-hat", dargs.r_hat, "number of factor pairs (default 1)");
    dec->add_option("--out", dargs.out, "output path prefix")->required();
    dec->add_flag("--json", dargs.json, "emit the report as JSON");

    ReconstructArgs rargs;
    CLI::App* rec = app.add_subcommand(
        "reconstruct", "Sum Kronecker products of factor files into one tensor");
    rec->add_option("--factors-a", rargs.factors_a, "factor-a tensor files")->required();
    rec->add_option("--factors-b", rargs.factors_b, "factor-b tensor files")->required();
    rec->add_option("--out", rargs.out, "output tensor file")->required();
    rec->add_option("--name", rargs.name, "tensor name for the output header");

    AnalyzeArgs aargs;
    CLI::App* ana = app.add_subcommand(
        "analyze", "Enumerate factor-shape candidates and rank them by error");
    ana->add_option("--input", aargs.input, "tensor file to analyze")->required();
    ana->add_option("--target-flops-reduction", aargs.target_flops_reduction,
                    "keep candidates with at least this FLOPs reduction (default 1)");
    ana->add_option("--r-hat-min", aargs.r_hat_min, "smallest rank to consider (default 1)");
    ana->add_option("--r-hat-max", aargs.r_hat_max, "largest rank to consider (default 8)");
    ana->add_flag("--json", aargs.json, "emit the report as JSON");

    VerifyArgs vargs;
    CLI::App* ver = app.add_subcommand(
        "verify", "Compare direct convolution against the factored path");
    ver->add_option("--weights", vargs.weights, "original weight tensor file")->required();
    ver->add_option("--factors-a", vargs.factors_a, "factor-a tensor files")->required();
    ver->add_option("--factors-b", vargs.factors_b, "factor-b tensor files")->required();
    ver->add_option("--input", vargs.input, "input tensor file [C,H,W]")->required();
    ver->add_option("--stride-h", vargs.stride_h, "vertical stride (default 1)");
    ver->add_option("--stride-w", vargs.stride_w, "horizontal stride (default 1)");
    ver->add_option("--pad-h", vargs.pad_h, "vertical zero padding (default 0)");
    ver->add_option("--pad-w", vargs.pad_w, "horizontal zero padding (default 0)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (dec->parsed()) return run_decompose(dargs);
        if (rec->parsed()) return run_reconstruct(rargs);
        if (ana->parsed()) return run_analyze(aargs);
        if (ver->parsed()) return run_verify(vargs);
    } catch (const io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const shape_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitShape;
    } catch (const numeric_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const parameter_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitShape;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 70;
    }
    return kExitOk;
}
