// SPDX-License-Identifier: Apache-2.0
//
// End-to-end tests that drive the installed binary through a shell, checking
// exit codes, report bytes, and the files it leaves behind.
#include <doctest.h>

#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "kron/complexity.hpp"
#include "kron/gkpd.hpp"
#include "kron/tensor_io.hpp"
#include "oracles.hpp"

using namespace kron;
using testutil::CommandResult;
using testutil::TestRng;
namespace fs = std::filesystem;

namespace {

/// Value of a "key: value" line in tool output; fails the test if absent.
std::string output_field(const std::string& output, const std::string& key) {
    const std::string needle = key + ": ";
    std::size_t pos = output.find(needle);
    if (pos != 0) {
        pos = output.find("\n" + needle);
        REQUIRE(pos != std::string::npos);
        ++pos;
    }
    const std::size_t start = pos + needle.size();
    const std::size_t end = output.find('\n', start);
    return output.substr(start, end - start);
}

double parse_double(const std::string& text) {
    return std::strtod(text.c_str(), nullptr);
}

/// Fields of the first "row: " line: shape_a shape_b r_hat params memory_x
/// flops_x rel_error chosen.
std::vector<std::string> first_row_fields(const std::string& output) {
    const std::size_t pos = output.find("row: ");
    REQUIRE(pos != std::string::npos);
    const std::size_t end = output.find('\n', pos);
    const std::string line = output.substr(pos + 5, end - pos - 5);
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (start <= line.size()) {
        std::size_t space = line.find(' ', start);
        if (space == std::string::npos) space = line.size();
        fields.push_back(line.substr(start, space - start));
        start = space + 1;
    }
    return fields;
}

}  // namespace

TEST_CASE("help is available and a subcommand is required") {
    CHECK(testutil::run_command(testutil::kronpack_bin() + " --help").exit_code == 0);
    CHECK(testutil::run_command(testutil::kronpack_bin() + " 2>/dev/null").exit_code !=
          0);
    CHECK(testutil::run_command(testutil::kronpack_bin() +
                                " decompose 2>/dev/null").exit_code != 0);
}

TEST_CASE("decompose recovers a planted Kronecker product and writes factors") {
    TestRng rng(501);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor a = testutil::random_tensor(rng, {2, 2, 1, 1});
    const DenseTensor b = testutil::random_tensor(rng, {4, 2, 3, 3});
    const DenseTensor w = kron::kron(a, b);
    const fs::path w_path = dir / "w.tensor";
    write_tensor_file(w_path, "planted", w);

    const std::string prefix = (dir / "out").string();
    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " decompose --input " + w_path.string() +
        " --shape-a 2,2,1,1 --out " + prefix);
    REQUIRE(res.exit_code == 0);

    // Report goes to stdout and to a file with the same bytes.
    CHECK(res.output == testutil::read_file(prefix + ".report.txt"));
    const auto fields = first_row_fields(res.output);
    REQUIRE(fields.size() == 8);
    CHECK(fields[0] == "2,2,1,1");
    CHECK(fields[1] == "4,2,3,3");
    CHECK(fields[2] == "1");
    CHECK(parse_double(fields[6]) <= 1e-9);
    CHECK(fields[7] == "*");

    const LoadedTensor fa = read_tensor_file(prefix + ".a0.tensor");
    const LoadedTensor fb = read_tensor_file(prefix + ".b0.tensor");
    CHECK(fa.name == "planted.a0");
    CHECK(fb.name == "planted.b0");
    CHECK(fa.tensor.shape() == a.shape());
    CHECK(fb.tensor.shape() == b.shape());
    CHECK(testutil::max_abs_diff(kron::kron(fa.tensor, fb.tensor), w) <=
          1e-9 * frobenius_norm(w));
}

TEST_CASE("decompose derives the missing factor shape") {
    TestRng rng(503);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor w = testutil::random_tensor(rng, {6, 4, 3, 3});
    write_tensor_file(dir / "w.tensor", "w", w);

    const std::string base = testutil::kronpack_bin() + " decompose --input " +
                             (dir / "w.tensor").string() + " --r-hat 2 --out ";
    const CommandResult via_a = testutil::run_command(
        base + (dir / "via_a").string() + " --shape-a 3,2,3,1");
    const CommandResult via_b = testutil::run_command(
        base + (dir / "via_b").string() + " --shape-b 2,2,1,3");
    REQUIRE(via_a.exit_code == 0);
    REQUIRE(via_b.exit_code == 0);
    CHECK(via_a.output == via_b.output);
    CHECK(testutil::read_file((dir / "via_a.a1.tensor").string()) ==
          testutil::read_file((dir / "via_b.a1.tensor").string()));
}

TEST_CASE("decompose output matches the in-process solver bit for bit") {
    TestRng rng(509);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor w = testutil::random_tensor(rng, {4, 4, 2, 2});
    write_tensor_file(dir / "w.tensor", "w", w);

    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " decompose --input " + (dir / "w.tensor").string() +
        " --shape-a 2,2,2,1 --r-hat 2 --out " + (dir / "o").string());
    REQUIRE(res.exit_code == 0);

    const GkpdDecomposition d = gkpd_solve(w, {{2, 2, 2, 1}, {2, 2, 1, 2}}, 2);
    for (std::size_t r = 0; r < 2; ++r) {
        const LoadedTensor fa =
            read_tensor_file(dir / ("o.a" + std::to_string(r) + ".tensor"));
        const LoadedTensor fb =
            read_tensor_file(dir / ("o.b" + std::to_string(r) + ".tensor"));
        for (std::size_t i = 0; i < fa.tensor.size(); ++i) {
            CHECK(fa.tensor[i] == d.factors_a[r][i]);
        }
        for (std::size_t i = 0; i < fb.tensor.size(); ++i) {
            CHECK(fb.tensor[i] == d.factors_b[r][i]);
        }
    }
}

TEST_CASE("decompose then reconstruct round-trips at full rank") {
    TestRng rng(521);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor w = testutil::random_tensor(rng, {4, 6});
    write_tensor_file(dir / "w.tensor", "w", w);

    REQUIRE(testutil::run_command(
                testutil::kronpack_bin() + " decompose --input " +
                (dir / "w.tensor").string() + " --shape-a 2,3 --r-hat 4 --out " +
                (dir / "f").string()).exit_code == 0);

    std::string fa_list, fb_list;
    for (int r = 0; r < 4; ++r) {
        fa_list += " --factors-a " + (dir / ("f.a" + std::to_string(r) + ".tensor")).string();
        fb_list += " --factors-b " + (dir / ("f.b" + std::to_string(r) + ".tensor")).string();
    }
    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " reconstruct" + fa_list + fb_list + " --out " +
        (dir / "back.tensor").string() + " --name w.back");
    REQUIRE(res.exit_code == 0);

    const LoadedTensor back = read_tensor_file(dir / "back.tensor");
    CHECK(back.name == "w.back");
    REQUIRE(back.tensor.shape() == w.shape());
    CHECK(testutil::max_abs_diff(back.tensor, w) <= 1e-8 * frobenius_norm(w));
}

TEST_CASE("decompose failures exit with the shape code and write nothing") {
    TestRng rng(523);
    const fs::path dir = testutil::make_temp_dir("cli");
    write_tensor_file(dir / "w.tensor", "w", testutil::random_tensor(rng, {4, 4, 3, 3}));
    const std::string base = testutil::kronpack_bin() + " decompose --input " +
                             (dir / "w.tensor").string() + " --out " +
                             (dir / "out").string();

    CHECK(testutil::run_command(base + " --shape-a 3,2,1,1 2>/dev/null").exit_code == 3);
    CHECK(testutil::run_command(base + " --shape-a 2,2 2>/dev/null").exit_code == 3);
    CHECK(testutil::run_command(base + " --shape-a 2,2,1,1 --r-hat 100 2>/dev/null")
              .exit_code == 3);
    CHECK(testutil::run_command(base + " 2>/dev/null").exit_code == 3);
    for (const auto& entry : fs::directory_iterator(dir)) {
        CHECK(entry.path().filename() == "w.tensor");
    }
}

TEST_CASE("missing input files exit with the I/O code") {
    const fs::path dir = testutil::make_temp_dir("cli");
    CHECK(testutil::run_command(testutil::kronpack_bin() + " analyze --input " +
                                (dir / "absent.tensor").string() + " 2>/dev/null")
              .exit_code == 2);
    CHECK(testutil::run_command(testutil::kronpack_bin() + " decompose --input " +
                                (dir / "absent.tensor").string() +
                                " --shape-a 1 --out " + (dir / "o").string() +
                                " 2>/dev/null")
              .exit_code == 2);
}

TEST_CASE("analyze reproduces the committed reports byte for byte") {
    const std::string data = testutil::test_data_dir();
    const std::string name = "t01_8x4x3x3";
    const std::string base = testutil::kronpack_bin() + " analyze --input " + data +
                             "/" + name + ".tensor --target-flops-reduction 4 " +
                             "--r-hat-max 8";

    const CommandResult text = testutil::run_command(base);
    REQUIRE(text.exit_code == 0);
    CHECK(text.output == testutil::read_file(data + "/" + name + ".report.txt"));

    const CommandResult json = testutil::run_command(base + " --json");
    REQUIRE(json.exit_code == 0);
    CHECK(json.output == testutil::read_file(data + "/" + name + ".report.json"));
}

TEST_CASE("analyze exits with the empty-search code when the bar is too high") {
    const std::string data = testutil::test_data_dir();
    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " analyze --input " + data +
        "/t01_8x4x3x3.tensor --target-flops-reduction 1000000 2>/dev/null");
    CHECK(res.exit_code == 5);
    CHECK(res.output.empty());
}

TEST_CASE("analyze errors are non-increasing in rank for each factor shape") {
    TestRng rng(541);
    const fs::path dir = testutil::make_temp_dir("cli");
    write_tensor_file(dir / "w.tensor", "w", testutil::random_tensor(rng, {4, 4, 2, 2}));
    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " analyze --input " + (dir / "w.tensor").string() +
        " --target-flops-reduction 0 --r-hat-max 4 --json");
    REQUIRE(res.exit_code == 0);

    const nlohmann::json parsed = nlohmann::json::parse(res.output);
    std::map<std::string, std::map<std::size_t, double>> by_pair;
    for (const auto& row : parsed.at("rows")) {
        const std::string key =
            row.at("shape_a").dump() + "|" + row.at("shape_b").dump();
        by_pair[key][row.at("r_hat").get<std::size_t>()] =
            row.at("rel_error").get<double>();
    }
    CHECK(by_pair.size() >= 4);
    for (const auto& [key, by_rank] : by_pair) {
        double prev = std::numeric_limits<double>::infinity();
        for (const auto& [r_hat, err] : by_rank) {
            CHECK(err <= prev + 1e-12);
            prev = err;
        }
    }
}

TEST_CASE("verify accepts exact factors and reports the MAC ratio") {
    TestRng rng(547);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor a = testutil::random_tensor(rng, {2, 2, 1, 1});
    const DenseTensor b = testutil::random_tensor(rng, {4, 2, 3, 3});
    const DenseTensor w = kron::kron(a, b);
    const DenseTensor x = testutil::random_tensor(rng, {4, 8, 8});
    write_tensor_file(dir / "w.tensor", "w", w);
    write_tensor_file(dir / "x.tensor", "x", x);

    REQUIRE(testutil::run_command(testutil::kronpack_bin() + " decompose --input " +
                                  (dir / "w.tensor").string() +
                                  " --shape-a 2,2,1,1 --out " + (dir / "f").string())
                .exit_code == 0);

    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " verify --weights " + (dir / "w.tensor").string() +
        " --factors-a " + (dir / "f.a0.tensor").string() + " --factors-b " +
        (dir / "f.b0.tensor").string() + " --input " + (dir / "x.tensor").string() +
        " --pad-h 1 --pad-w 1");
    CHECK(res.exit_code == 0);
    CHECK(output_field(res.output, "status") == "ok");
    CHECK(parse_double(output_field(res.output, "threshold")) == 1e-9);

    const FactorShapePair pair{{2, 2, 1, 1}, {4, 2, 3, 3}};
    const InputGeometry in{8, 8, ConvGeometry{1, 1, 1, 1}};
    CHECK(output_field(res.output, "macs-direct") ==
          std::to_string(count_macs_direct(w.shape(), in)));
    CHECK(output_field(res.output, "macs-kron") ==
          std::to_string(count_macs_kron(pair, 1, in)));
    // Pointwise a at stride one: the measured ratio is the model's number.
    CHECK(parse_double(output_field(res.output, "mac-ratio")) ==
          flops_reduction(pair, 1));
}

TEST_CASE("verify flags a corrupted factor and exits nonzero") {
    TestRng rng(557);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor a = testutil::random_tensor(rng, {2, 1, 3, 1});
    const DenseTensor b = testutil::random_tensor(rng, {2, 3, 1, 3});
    write_tensor_file(dir / "w.tensor", "w", kron::kron(a, b));
    write_tensor_file(dir / "x.tensor", "x", testutil::random_tensor(rng, {3, 6, 6}));

    DenseTensor bad = a;
    bad[0] += 50.0;
    write_tensor_file(dir / "a0.tensor", "a0", bad);
    write_tensor_file(dir / "b0.tensor", "b0", b);

    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " verify --weights " + (dir / "w.tensor").string() +
        " --factors-a " + (dir / "a0.tensor").string() + " --factors-b " +
        (dir / "b0.tensor").string() + " --input " + (dir / "x.tensor").string());
    CHECK(res.exit_code == 1);
    CHECK(output_field(res.output, "status") == "deviation-exceeded");
}

TEST_CASE("verify loosens the threshold when any payload is 32-bit") {
    TestRng rng(563);
    const fs::path dir = testutil::make_temp_dir("cli");
    const DenseTensor a = testutil::random_tensor(rng, {2, 2, 1, 1});
    const DenseTensor b = testutil::random_tensor(rng, {2, 2, 3, 3});
    write_tensor_file(dir / "w.tensor", "w", kron::kron(a, b));
    write_tensor_file(dir / "x.tensor", "x", testutil::random_tensor(rng, {4, 7, 7}));
    write_tensor_file(dir / "a0.tensor", "a0", a, Dtype::f32);
    write_tensor_file(dir / "b0.tensor", "b0", b, Dtype::f32);

    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " verify --weights " + (dir / "w.tensor").string() +
        " --factors-a " + (dir / "a0.tensor").string() + " --factors-b " +
        (dir / "b0.tensor").string() + " --input " + (dir / "x.tensor").string());
    CHECK(res.exit_code == 0);
    CHECK(parse_double(output_field(res.output, "threshold")) == 1e-4);
    CHECK(output_field(res.output, "status") == "ok");
}

TEST_CASE("reconstruct rejects mismatched factor lists") {
    TestRng rng(569);
    const fs::path dir = testutil::make_temp_dir("cli");
    write_tensor_file(dir / "a0.tensor", "a0", testutil::random_tensor(rng, {2, 2}));
    write_tensor_file(dir / "b0.tensor", "b0", testutil::random_tensor(rng, {2, 2}));
    write_tensor_file(dir / "b1.tensor", "b1", testutil::random_tensor(rng, {2, 2}));
    const CommandResult res = testutil::run_command(
        testutil::kronpack_bin() + " reconstruct --factors-a " +
        (dir / "a0.tensor").string() + " --factors-b " + (dir / "b0.tensor").string() +
        " --factors-b " + (dir / "b1.tensor").string() + " --out " +
        (dir / "out.tensor").string() + " 2>/dev/null");
    CHECK(res.exit_code == 3);
    CHECK_FALSE(fs::exists(dir / "out.tensor"));
}
