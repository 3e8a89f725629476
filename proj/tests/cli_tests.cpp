#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sys/wait.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "inferometer/arch.hpp"
#include "inferometer/flops.hpp"
#include "inferometer/runtime_model.hpp"

namespace fs = std::filesystem;

namespace {

const char* kRegistry = INFEROMETER_DATA_DIR "/registry.json";
const char* kQueries = INFEROMETER_DATA_DIR "/fixtures/queries_3model.jsonl";

fs::path work_dir() {
    static const fs::path dir = [] {
        const fs::path d = fs::temp_directory_path() / "inferometer_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct RunResult {
    int code = -1;
    std::string out;
    std::string err;
};

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

RunResult run_cli(const std::string& args, const std::string& env_prefix = "") {
    static int counter = 0;
    const fs::path out = work_dir() / ("stdout" + std::to_string(counter) + ".txt");
    const fs::path err = work_dir() / ("stderr" + std::to_string(counter) + ".txt");
    ++counter;
    const std::string cmd = env_prefix + (env_prefix.empty() ? "" : " ") + "'" +
                            INFEROMETER_CLI_PATH "' " + args + " > '" + out.string() + "' 2> '" +
                            err.string() + "'";
    const int status = std::system(cmd.c_str());
    RunResult result;
    if (WIFEXITED(status)) result.code = WEXITSTATUS(status);
    result.out = slurp(out);
    result.err = slurp(err);
    return result;
}

std::string line_after(const std::string& text, const std::string& prefix) {
    std::istringstream is(text);
    std::string line;
    while (std::getline(is, line)) {
        if (line.rfind(prefix, 0) == 0) return line.substr(prefix.size());
    }
    return "";
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.push_back("");
    return cells;
}

std::string q(const fs::path& p) { return "'" + p.string() + "'"; }

// Value following `key` anywhere in `text`, up to the next whitespace.
std::string value_after(const std::string& text, const std::string& key) {
    const auto pos = text.find(key);
    if (pos == std::string::npos) return "";
    const auto start = pos + key.size();
    const auto end = text.find_first_of(" \n", start);
    return text.substr(start, end == std::string::npos ? std::string::npos : end - start);
}

// Writes scaled copies of the built-in davinci idealized params for the
// stack-comparison fixtures. Returns the params-a and params-b file paths.
std::pair<fs::path, fs::path> scaled_stack_files(double factor, const std::string& tag) {
    using namespace inferometer;
    const auto base = reference_params("davinci", Variant::idealized);
    REQUIRE(base.has_value());
    RuntimeModelParams scaled = *base;
    scaled.stack_label = tag;
    for (auto& knot : scaled.knots) knot.encoding_time *= factor;
    scaled.per_token_slope *= factor;

    const fs::path a = work_dir() / (tag + "_a.json");
    const fs::path b = work_dir() / (tag + "_b.json");
    base->save_file(a);
    scaled.save_file(b);
    return {a, b};
}

}  // namespace

TEST_CASE("simulate writes the full grid and is seed-deterministic") {
    const fs::path sim1 = work_dir() / "sim_noiseless.jsonl";
    const auto r = run_cli("simulate --model davinci --preset noiseless --trials 2 --seed 5 --out " +
                           q(sim1));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("wrote 60 samples") != std::string::npos);
    CHECK(r.out.find("(seed 5)") != std::string::npos);
    std::istringstream lines(slurp(sim1));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 60);

    const fs::path a = work_dir() / "sim_a.jsonl";
    const fs::path b = work_dir() / "sim_b.jsonl";
    const fs::path c = work_dir() / "sim_c.jsonl";
    REQUIRE(run_cli("simulate --model davinci --preset low-noise --seed 9 --out " + q(a)).code == 0);
    REQUIRE(run_cli("simulate --model davinci --preset low-noise --seed 9 --out " + q(b)).code == 0);
    REQUIRE(run_cli("simulate --model davinci --preset low-noise --seed 10 --out " + q(c)).code == 0);
    CHECK(slurp(a) == slurp(b));
    CHECK(slurp(a) != slurp(c));
}

TEST_CASE("simulate rejects unknown presets and unknown truth models") {
    const fs::path out = work_dir() / "never.jsonl";
    const auto bad_preset = run_cli("simulate --model davinci --preset turbo --out " + q(out));
    CHECK(bad_preset.code == 2);
    CHECK(bad_preset.err.find("unknown preset 'turbo'") != std::string::npos);

    const auto bad_model = run_cli("simulate --model nonesuch --out " + q(out));
    CHECK(bad_model.code == 2);
    CHECK(bad_model.err.find("no built-in truth params") != std::string::npos);
    CHECK(bad_model.err.find("davinci") != std::string::npos);
}

TEST_CASE("fit recovers the generating params and predict prices a query") {
    const fs::path sim = work_dir() / "fit_input.jsonl";
    const fs::path params = work_dir() / "davinci_idealized.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --trials 3 --out " + q(sim)).code ==
            0);
    const auto fit = run_cli("fit --in " + q(sim) + " --model davinci --variant idealized --out " +
                             q(params));
    REQUIRE(fit.code == 0);
    CHECK(fit.out.find("g = 0.081 (pooled R^2 1,") != std::string::npos);
    CHECK(fit.out.find("R^2(p=1536) = 1") != std::string::npos);
    CHECK(fs::exists(params));
    CHECK(fs::exists(work_dir() / "davinci_idealized.json.diagnostics.json"));

    const auto pred = run_cli("predict --registry '" + std::string(kRegistry) + "' --params " +
                              q(params) + " -p 512 -o 100");
    REQUIRE(pred.code == 0);
    CHECK(line_after(pred.out, "runtime_seconds: ") == "8.197");
    CHECK(line_after(pred.out, "cost: ") == "0.07475664");
    CHECK(line_after(pred.out, "energy_joules: ") == "26230.4");
    CHECK(line_after(pred.out, "flops: ") == "214061242908672");
    CHECK(pred.out.find("hardware: a100-80gb-x8") != std::string::npos);

    // A single output token is pure prompt encoding time.
    const auto one = run_cli("predict --registry '" + std::string(kRegistry) + "' --params " +
                             q(params) + " -p 512 -o 1");
    REQUIRE(one.code == 0);
    CHECK(line_after(one.out, "runtime_seconds: ") == "0.178");
}

TEST_CASE("fit fails loudly when a grid prompt size has no coverage") {
    const fs::path sim = work_dir() / "narrow.jsonl";
    const fs::path params = work_dir() / "narrow_params.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --grid-p 1,256 --out " + q(sim))
                .code == 0);
    const auto fit = run_cli("fit --in " + q(sim) + " --model davinci --out " + q(params));
    CHECK(fit.code == 2);
    CHECK(fit.err.find("p=512") != std::string::npos);
}

TEST_CASE("predict enforces the context window") {
    const fs::path sim = work_dir() / "ctx.jsonl";
    const fs::path params = work_dir() / "ctx_params.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --out " + q(sim)).code == 0);
    REQUIRE(run_cli("fit --in " + q(sim) + " --model davinci --out " + q(params)).code == 0);

    const std::string base = "predict --registry '" + std::string(kRegistry) + "' --params " +
                             q(params);
    CHECK(run_cli(base + " -p 1949 -o 100").code == 0);
    const auto over = run_cli(base + " -p 1950 -o 100");
    CHECK(over.code == 2);
    CHECK(over.err.find("exceeds context window 2048 of model 'davinci'") != std::string::npos);
}

TEST_CASE("registry resolution falls back to the environment") {
    const fs::path sim = work_dir() / "env.jsonl";
    const fs::path params = work_dir() / "env_params.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --out " + q(sim)).code == 0);
    REQUIRE(run_cli("fit --in " + q(sim) + " --model davinci --variant idealized --out " +
                    q(params)).code == 0);

    const auto env = run_cli("predict --params " + q(params) + " -p 512 -o 100",
                             "INFEROMETER_REGISTRY='" + std::string(kRegistry) + "'");
    REQUIRE(env.code == 0);
    CHECK(line_after(env.out, "runtime_seconds: ") == "8.197");

    const auto none = run_cli("predict --params " + q(params) + " -p 512 -o 100",
                              "INFEROMETER_REGISTRY=");
    CHECK(none.code == 2);
    CHECK(none.err.find("no registry path") != std::string::npos);
}

TEST_CASE("analyze is deterministic and orders rows by the requested objective") {
    const fs::path dav_sim = work_dir() / "ana_dav.jsonl";
    const fs::path dav_params = work_dir() / "ana_dav.json";
    const fs::path grande_sim = work_dir() / "ana_grande.jsonl";
    const fs::path grande_params = work_dir() / "ana_grande.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --out " + q(dav_sim)).code == 0);
    REQUIRE(run_cli("fit --in " + q(dav_sim) + " --model davinci --variant idealized --out " +
                    q(dav_params)).code == 0);
    REQUIRE(run_cli("simulate --model jurassic-grande --preset noiseless --out " + q(grande_sim))
                .code == 0);
    REQUIRE(run_cli("fit --in " + q(grande_sim) +
                    " --model jurassic-grande --variant idealized --out " + q(grande_params))
                .code == 0);

    const std::string common = "analyze --registry '" + std::string(kRegistry) + "' --queries '" +
                               std::string(kQueries) + "' --params " + q(dav_params) +
                               " --params " + q(grande_params);
    const fs::path rep1 = work_dir() / "rep1.csv";
    const fs::path rep2 = work_dir() / "rep2.csv";
    const auto a1 = run_cli(common + " --format csv --out " + q(rep1));
    const auto a2 = run_cli(common + " --format csv --out " + q(rep2));
    REQUIRE(a1.code == 0);
    REQUIRE(a2.code == 0);
    CHECK(a1.out.find("2 scenario(s) x 2 model(s)") != std::string::npos);
    const std::string csv1 = slurp(rep1);
    CHECK(csv1 == slurp(rep2));
    // Without accuracy scores for a model the CLI warns; here all three fixture
    // models are scored but only two have params.
    CHECK(a1.err.find("no fitted params for model 'anthropic-lm'") != std::string::npos);

    // Rows within each scenario come back sorted by rank_f1 when asked.
    const fs::path repf1 = work_dir() / "rep_f1.csv";
    REQUIRE(run_cli(common + " --objective f1 --format csv --out " + q(repf1)).code == 0);
    std::istringstream is(slurp(repf1));
    std::string header, line;
    REQUIRE(std::getline(is, header));
    const auto cols = split_csv(header);
    const auto rank_col = static_cast<std::size_t>(
        std::find(cols.begin(), cols.end(), "rank_f1") - cols.begin());
    REQUIRE(rank_col < cols.size());
    std::string prev_scenario;
    long prev_rank = 0;
    int rows = 0;
    while (std::getline(is, line)) {
        const auto cells = split_csv(line);
        REQUIRE(cells.size() == cols.size());
        const long rank = std::stol(cells[rank_col]);
        if (cells[0] == prev_scenario) CHECK(rank >= prev_rank);
        prev_scenario = cells[0];
        prev_rank = rank;
        ++rows;
    }
    CHECK(rows == 4);

    // JSON format round-trips through a parser and keeps the log-base marker.
    const fs::path repj = work_dir() / "rep.json";
    REQUIRE(run_cli(common + " --format json --out " + q(repj)).code == 0);
    const auto doc = nlohmann::json::parse(slurp(repj));
    CHECK(doc.at("f2_log_base") == "natural");
    REQUIRE(doc.at("reports").size() == 2);
    CHECK(doc.at("reports")[0].at("scenario") == "news-summarization");
    CHECK(doc.at("reports")[0].at("rows").size() == 2);

    const fs::path repj10 = work_dir() / "rep10.json";
    REQUIRE(run_cli(common + " --log-base 10 --format json --out " + q(repj10)).code == 0);
    CHECK(nlohmann::json::parse(slurp(repj10)).at("f2_log_base") == 10.0);
}

TEST_CASE("analyze refuses a model set with no idealized params") {
    const fs::path sim = work_dir() / "den_only.jsonl";
    const fs::path params = work_dir() / "den_only.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --out " + q(sim)).code == 0);
    REQUIRE(run_cli("fit --in " + q(sim) + " --model davinci --variant denoised --out " + q(params))
                .code == 0);
    const auto r = run_cli("analyze --registry '" + std::string(kRegistry) + "' --queries '" +
                           std::string(kQueries) + "' --params " + q(params) + " --format csv --out " +
                           q(work_dir() / "never.csv"));
    CHECK(r.code == 2);
    CHECK(r.err.find("denoised params only") != std::string::npos);
    CHECK(r.err.find("no analyzable models") != std::string::npos);
}

TEST_CASE("missing input files exit with the I/O code") {
    const auto fit = run_cli("fit --in /nonexistent/samples.jsonl --model davinci --out " +
                             q(work_dir() / "never.json"));
    CHECK(fit.code == 1);
    CHECK(fit.err.find("cannot open") != std::string::npos);

    const auto sim = run_cli("simulate --model davinci --truth /nonexistent/truth.json --out " +
                             q(work_dir() / "never.jsonl"));
    CHECK(sim.code == 1);
}

TEST_CASE("comparing a stack against itself is a wash") {
    const fs::path sim = work_dir() / "cmp.jsonl";
    const fs::path params = work_dir() / "cmp_params.json";
    REQUIRE(run_cli("simulate --model davinci --preset noiseless --out " + q(sim)).code == 0);
    REQUIRE(run_cli("fit --in " + q(sim) + " --model davinci --variant idealized --stack baseline "
                    "--out " + q(params)).code == 0);

    const fs::path detail = work_dir() / "cmp_detail.csv";
    const auto r = run_cli("compare-stacks --registry '" + std::string(kRegistry) +
                           "' --model davinci --params-a " + q(params) + " --params-b " + q(params) +
                           " --queries '" + std::string(kQueries) + "' --out " + q(detail));
    REQUIRE(r.code == 0);
    CHECK(r.out.find("(48 queries, 2 skipped)") != std::string::npos);
    CHECK(r.out.find("stack A: baseline on a100-80gb-x8") != std::string::npos);
    CHECK(r.out.find("runtime_ratio: 1\n") != std::string::npos);
    CHECK(r.out.find("cost_ratio: 1\n") != std::string::npos);
    CHECK(r.out.find("verdict: mixed tradeoff") != std::string::npos);

    std::istringstream lines(slurp(detail));
    std::string line;
    int count = 0;
    while (std::getline(lines, line)) ++count;
    CHECK(count == 49);  // header plus the 48 in-context queries

    const auto wrong = run_cli("compare-stacks --registry '" + std::string(kRegistry) +
                               "' --model jurassic-jumbo --params-a " + q(params) + " --params-b " +
                               q(params) + " --queries '" + std::string(kQueries) + "'");
    CHECK(wrong.code == 2);
    CHECK(wrong.err.find("expected 'jurassic-jumbo'") != std::string::npos);
}

TEST_CASE("a uniformly doubled stack doubles every per-query ratio") {
    const auto [params_a, params_b] = scaled_stack_files(2.0, "doubled");
    const fs::path detail = work_dir() / "doubled_detail.csv";
    const auto r = run_cli("compare-stacks --registry '" + std::string(kRegistry) +
                           "' --model davinci --params-a " + q(params_a) + " --params-b " +
                           q(params_b) + " --queries '" + std::string(kQueries) + "' --out " +
                           q(detail));
    REQUIRE(r.code == 0);
    // Doubling all knots and the slope scales runtimes exactly, so the ratio
    // columns print the integer 2 for every query.
    CHECK(r.out.find("runtime_ratio: 2\n") != std::string::npos);
    CHECK(r.out.find("cost_ratio: 2\n") != std::string::npos);
    CHECK(r.out.find("verdict: stack B slower and more expensive") != std::string::npos);

    std::istringstream lines(slurp(detail));
    std::string line;
    REQUIRE(std::getline(lines, line));  // header
    int rows = 0;
    while (std::getline(lines, line)) {
        const auto cells = split_csv(line);
        REQUIRE(cells.size() == 10);
        CHECK(cells[6] == "2");
        CHECK(cells[9] == "2");
        ++rows;
    }
    CHECK(rows == 48);
}

TEST_CASE("hardware choice can soften a slower stack's cost penalty") {
    const auto [params_a, params_b] = scaled_stack_files(2.5, "two-and-a-half");
    const auto r = run_cli("compare-stacks --registry '" + std::string(kRegistry) +
                           "' --model davinci --params-a " + q(params_a) + " --params-b " +
                           q(params_b) + " --hardware-b a100-80gb-x4 --queries '" +
                           std::string(kQueries) + "'");
    REQUIRE(r.code == 0);
    CHECK(r.out.find("stack B: two-and-a-half on a100-80gb-x4") != std::string::npos);
    // Stack B takes 2.5x as long but runs on half the accelerators, so its
    // cost ratio is 2.5 / 2 = 1.25. Still a loss on both axes.
    CHECK(std::stod(value_after(r.out, "runtime_ratio: ")) ==
          doctest::Approx(2.5).epsilon(1e-12));
    CHECK(std::stod(value_after(r.out, "cost_ratio: ")) == doctest::Approx(1.25).epsilon(1e-12));
    CHECK(r.out.find("verdict: stack B slower and more expensive") != std::string::npos);
}

TEST_CASE("flops subcommand agrees with the library") {
    using namespace inferometer;
    const auto r = run_cli("flops --registry '" + std::string(kRegistry) +
                           "' --model davinci -p 17 -o 5 --breakdown");
    REQUIRE(r.code == 0);

    const Registry registry = Registry::load_file(kRegistry);
    const auto expected = query_total_flops(registry.model("davinci"), 17, 5);
    CHECK(line_after(r.out, "total_flops: ") == flop_to_string(expected));
    CHECK(r.out.find("prompt pass operators:") != std::string::npos);
    CHECK(r.out.find("generation passes (summed):") != std::string::npos);
    CHECK(r.out.find("  qkv: ") != std::string::npos);

    // The two printed section totals add up to the query total.
    std::istringstream is(r.out);
    std::string line;
    unsigned long long sum = 0;
    while (std::getline(is, line)) {
        if (line.rfind("  total: ", 0) == 0) sum += std::stoull(line.substr(9));
    }
    CHECK(flop_to_string(FlopCount(sum)) == flop_to_string(expected));

    const auto help = run_cli("--help");
    CHECK(help.code == 0);
    const auto nothing = run_cli("");
    CHECK(nothing.code == 2);
}
