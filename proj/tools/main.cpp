#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "inferometer/analysis.hpp"
#include "inferometer/arch.hpp"
#include "inferometer/errors.hpp"
#include "inferometer/estimator.hpp"
#include "inferometer/flops.hpp"
#include "inferometer/runtime_model.hpp"
#include "inferometer/simulator.hpp"

namespace {

using namespace inferometer;

constexpr const char* kDefaultGridP = "1,256,512,1024,1536";
constexpr const char* kDefaultGridO = "1,8,16,32,64,128";

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::vector<std::int64_t> parse_grid(const std::string& text, const std::string& flag) {
    std::vector<std::int64_t> values;
    std::string token;
    std::istringstream stream(text);
    while (std::getline(stream, token, ',')) {
        token.erase(0, token.find_first_not_of(" \t"));
        token.erase(token.find_last_not_of(" \t") + 1);
        if (token.empty()) continue;
        try {
            std::size_t used = 0;
            const long long v = std::stoll(token, &used);
            if (used != token.size() || v < 1) throw std::invalid_argument(token);
            values.push_back(v);
        } catch (const std::exception&) {
            throw ValidationError(flag + ": '" + token + "' is not a positive integer");
        }
    }
    if (values.empty()) throw ValidationError(flag + " must list at least one value");
    return values;
}

std::filesystem::path resolve_registry(const std::string& flag_value) {
    if (!flag_value.empty()) return flag_value;
    if (const char* env = std::getenv("INFEROMETER_REGISTRY"); env && *env) return env;
    throw ValidationError("no registry path: pass --registry or set INFEROMETER_REGISTRY");
}

RuntimeModelParams resolve_truth(const std::string& model, const std::string& truth_file,
                                 const std::string& variant_name, double extra_overhead) {
    RuntimeModelParams truth;
    if (!truth_file.empty()) {
        truth = RuntimeModelParams::load_file(truth_file);
    } else {
        if (model.empty()) {
            throw ValidationError("simulate needs --model (built-in truth) or --truth <file>");
        }
        const auto ref = reference_params(model, variant_from_string(variant_name));
        if (!ref) {
            std::string known;
            for (const auto& id : reference_model_ids()) {
                known += known.empty() ? id : ", " + id;
            }
            throw ValidationError("no built-in truth params for model '" + model +
                                  "' (known: " + known + "); pass --truth <file>");
        }
        truth = *ref;
    }
    if (extra_overhead < 0) throw ValidationError("--overhead must be >= 0");
    truth.overhead += extra_overhead;
    truth.validate();
    return truth;
}

struct SimulateOpts {
    std::string model, truth_file, variant = "idealized", preset = "noiseless";
    std::string grid_p = kDefaultGridP, grid_o = kDefaultGridO;
    std::int64_t trials = 10, parallelism = 1;
    std::uint64_t seed = 0;
    double overhead = 0.0;
    std::string out;
};

void run_simulate(const SimulateOpts& opt) {
    const RuntimeModelParams truth =
        resolve_truth(opt.model, opt.truth_file, opt.variant, opt.overhead);
    auto noise = noise_preset(opt.preset);
    if (!noise) {
        std::string known;
        for (const auto& name : noise_preset_names()) {
            known += known.empty() ? name : ", " + name;
        }
        throw ValidationError("unknown preset '" + opt.preset + "' (known: " + known + ")");
    }
    noise->seed = opt.seed;
    SimulatedProvider provider(truth, *noise);
    const auto samples = provider.run_trials(parse_grid(opt.grid_p, "--grid-p"),
                                             parse_grid(opt.grid_o, "--grid-o"), opt.trials,
                                             opt.parallelism);
    write_samples_file(opt.out, samples);
    std::cout << "wrote " << samples.size() << " samples to " << opt.out << " (seed " << opt.seed
              << ")\n";
}

struct FitOpts {
    std::string in, model, variant = "denoised", grid_p = kDefaultGridP, stack, out;
};

void run_fit(const FitOpts& opt) {
    const auto samples = read_samples_file(opt.in);
    const auto [params, diag] =
        fit_runtime_model(samples, parse_grid(opt.grid_p, "--grid-p"),
                          variant_from_string(opt.variant), opt.model, opt.stack);
    params.save_file(opt.out);
    const std::filesystem::path diag_path = opt.out + ".diagnostics.json";
    std::ofstream diag_out(diag_path);
    if (!diag_out) throw IoError("cannot write diagnostics file: " + diag_path.string());
    diag_out << diag.to_json().dump(2) << '\n';
    for (const auto& warning : diag.warnings) {
        std::cerr << "warning: " << warning << '\n';
    }
    for (const auto& knot : params.knots) {
        std::cout << "R^2(p=" << knot.prompt_tokens
                  << ") = " << fmt(diag.per_prompt_r2.at(knot.prompt_tokens)) << '\n';
    }
    std::cout << "g = " << fmt(params.per_token_slope) << " (pooled R^2 " << fmt(diag.slope_r2)
              << ", " << diag.sample_count << " samples)\n";
    std::cout << "wrote " << opt.out << " and " << diag_path.string() << '\n';
}

struct PredictOpts {
    std::string registry, params, hardware;
    std::int64_t p = 0, o = 0;
};

void run_predict(const PredictOpts& opt) {
    const RuntimeModelParams params = RuntimeModelParams::load_file(opt.params);
    const Registry registry = Registry::load_file(resolve_registry(opt.registry));
    const ModelArchitecture& arch = registry.model(params.model_id);
    if (opt.p + opt.o > arch.max_context_length + 1) {
        throw ValidationError("query (p=" + std::to_string(opt.p) + ", o=" +
                              std::to_string(opt.o) + ") exceeds context window " +
                              std::to_string(arch.max_context_length) + " of model '" + arch.id +
                              "'");
    }
    const HardwareProfile& hw =
        registry.hardware(opt.hardware.empty() ? arch.default_serving : opt.hardware);
    const double t = params.evaluate(opt.p, opt.o);
    std::cout << "model: " << params.model_id << " (" << to_string(params.variant);
    if (!params.stack_label.empty()) std::cout << ", " << params.stack_label;
    std::cout << ")\n";
    std::cout << "hardware: " << hw.id << " (" << hw.accelerator_count << "x "
              << hw.accelerator_type << ")\n";
    std::cout << "runtime_seconds: " << fmt(t) << '\n';
    std::cout << "cost: " << fmt(idealized_cost(t, hw)) << '\n';
    std::cout << "energy_joules: " << fmt(idealized_energy(t, hw)) << '\n';
    std::cout << "flops: " << flop_to_string(query_total_flops(arch, opt.p, opt.o)) << '\n';
}

struct AnalyzeOpts {
    std::string registry, queries, format = "csv", objective, out;
    std::vector<std::string> params;
    double log_base = 0.0;
};

void run_analyze(const AnalyzeOpts& opt) {
    if (opt.log_base != 0.0 && (opt.log_base <= 0.0 || opt.log_base == 1.0)) {
        throw ValidationError("--log-base must be > 0 and != 1");
    }
    const Registry registry = Registry::load_file(resolve_registry(opt.registry));
    const auto queries = read_queries_file(opt.queries);

    std::vector<std::string> model_order;
    std::map<std::string, std::optional<RuntimeModelParams>> idealized, denoised;
    for (const auto& file : opt.params) {
        RuntimeModelParams params = RuntimeModelParams::load_file(file);
        auto& slot = params.variant == Variant::idealized ? idealized[params.model_id]
                                                         : denoised[params.model_id];
        if (slot) {
            throw ValidationError("duplicate " + to_string(params.variant) + " params for model '" +
                                  params.model_id + "' (" + file + ")");
        }
        if (std::find(model_order.begin(), model_order.end(), params.model_id) ==
            model_order.end()) {
            model_order.push_back(params.model_id);
        }
        slot = std::move(params);
    }

    std::vector<ModelUnderAnalysis> models;
    for (const auto& id : model_order) {
        if (!idealized.count(id) || !idealized[id]) {
            std::cerr << "warning: model '" << id
                      << "' has denoised params only (idealized required); skipped\n";
            continue;
        }
        ModelUnderAnalysis m;
        m.arch = registry.model(id);
        m.idealized = *idealized[id];
        if (denoised.count(id) && denoised[id]) m.denoised = denoised[id];
        m.hardware = registry.hardware(m.arch.default_serving);
        models.push_back(std::move(m));
    }
    std::set<std::string> covered;
    for (const auto& m : models) covered.insert(m.arch.id);
    std::set<std::string> warned;
    for (const auto& q : queries) {
        for (const auto& [id, score] : q.accuracy_by_model) {
            if (!covered.count(id) && warned.insert(id).second) {
                std::cerr << "warning: no fitted params for model '" << id << "'; skipped\n";
            }
        }
    }
    if (models.empty()) {
        throw ValidationError("no analyzable models: every query/params intersection is empty");
    }

    auto reports = aggregate(queries, models, opt.log_base);
    if (!opt.objective.empty()) {
        const bool f1 = opt.objective == "f1";
        if (!f1 && opt.objective != "f2") {
            throw ValidationError("--objective must be f1 or f2");
        }
        for (auto& report : reports) {
            std::stable_sort(report.rows.begin(), report.rows.end(),
                             [&](const ReportRow& a, const ReportRow& b) {
                                 const auto& ra = f1 ? a.rank_f1 : a.rank_f2;
                                 const auto& rb = f1 ? b.rank_f1 : b.rank_f2;
                                 if (ra.has_value() != rb.has_value()) return ra.has_value();
                                 if (ra && rb && *ra != *rb) return *ra < *rb;
                                 return a.model_id < b.model_id;
                             });
        }
    }

    if (opt.format == "csv") {
        std::ofstream out(opt.out);
        if (!out) throw IoError("cannot write report file: " + opt.out);
        write_report_csv(out, reports);
    } else if (opt.format == "json") {
        std::ofstream out(opt.out);
        if (!out) throw IoError("cannot write report file: " + opt.out);
        out << report_to_json(reports, opt.log_base).dump(2) << '\n';
    } else {
        throw ValidationError("--format must be csv or json");
    }
    std::cout << "wrote report for " << reports.size() << " scenario(s) x " << models.size()
              << " model(s) to " << opt.out << '\n';
}

struct CompareOpts {
    std::string registry, model, params_a, params_b, hardware_a, hardware_b, queries, out;
};

void run_compare_stacks(const CompareOpts& opt) {
    const Registry registry = Registry::load_file(resolve_registry(opt.registry));
    const RuntimeModelParams a = RuntimeModelParams::load_file(opt.params_a);
    const RuntimeModelParams b = RuntimeModelParams::load_file(opt.params_b);
    for (const auto* params : {&a, &b}) {
        if (params->model_id != opt.model) {
            throw ValidationError("params file is for model '" + params->model_id +
                                  "', expected '" + opt.model + "'");
        }
    }
    const ModelArchitecture& arch = registry.model(opt.model);
    const HardwareProfile& hw_a =
        registry.hardware(opt.hardware_a.empty() ? arch.default_serving : opt.hardware_a);
    const HardwareProfile& hw_b =
        registry.hardware(opt.hardware_b.empty() ? arch.default_serving : opt.hardware_b);
    const auto queries = read_queries_file(opt.queries);

    std::ofstream csv;
    if (!opt.out.empty()) {
        csv.open(opt.out);
        if (!csv) throw IoError("cannot write comparison file: " + opt.out);
        csv << "scenario,query_id,prompt_tokens,output_tokens,runtime_a,runtime_b,runtime_ratio,"
               "cost_a,cost_b,cost_ratio\n";
    }
    long double sum_ta = 0, sum_tb = 0, sum_ca = 0, sum_cb = 0;
    std::int64_t used = 0, skipped = 0;
    for (const auto& q : queries) {
        if (q.prompt_tokens + q.output_tokens > arch.max_context_length + 1) {
            ++skipped;
            continue;
        }
        ++used;
        const double ta = a.evaluate(q.prompt_tokens, q.output_tokens);
        const double tb = b.evaluate(q.prompt_tokens, q.output_tokens);
        const double ca = idealized_cost(ta, hw_a);
        const double cb = idealized_cost(tb, hw_b);
        sum_ta += ta;
        sum_tb += tb;
        sum_ca += ca;
        sum_cb += cb;
        if (csv.is_open()) {
            csv << q.scenario << ',' << q.query_id << ',' << q.prompt_tokens << ','
                << q.output_tokens << ',' << fmt(ta) << ',' << fmt(tb) << ',' << fmt(tb / ta)
                << ',' << fmt(ca) << ',' << fmt(cb) << ',' << fmt(cb / ca) << '\n';
        }
    }
    if (used == 0) throw ValidationError("no query fits the context window of '" + opt.model + "'");
    const double mean_ta = static_cast<double>(sum_ta / used);
    const double mean_tb = static_cast<double>(sum_tb / used);
    const double mean_ca = static_cast<double>(sum_ca / used);
    const double mean_cb = static_cast<double>(sum_cb / used);
    const double rt_ratio = mean_tb / mean_ta;
    const double cost_ratio = mean_cb / mean_ca;
    const auto label = [](const RuntimeModelParams& p, const HardwareProfile& hw) {
        return (p.stack_label.empty() ? to_string(p.variant) : p.stack_label) + " on " + hw.id;
    };
    std::cout << "model: " << opt.model << " (" << used << " queries, " << skipped
              << " skipped)\n";
    std::cout << "stack A: " << label(a, hw_a) << '\n';
    std::cout << "stack B: " << label(b, hw_b) << '\n';
    std::cout << "mean_runtime_a: " << fmt(mean_ta) << "  mean_runtime_b: " << fmt(mean_tb)
              << "  runtime_ratio: " << fmt(rt_ratio) << '\n';
    std::cout << "mean_cost_a: " << fmt(mean_ca) << "  mean_cost_b: " << fmt(mean_cb)
              << "  cost_ratio: " << fmt(cost_ratio) << '\n';
    if (rt_ratio > 1 && cost_ratio > 1) {
        std::cout << "verdict: stack B slower and more expensive\n";
    } else if (rt_ratio < 1 && cost_ratio < 1) {
        std::cout << "verdict: stack B faster and cheaper\n";
    } else {
        std::cout << "verdict: mixed tradeoff\n";
    }
    if (!opt.out.empty()) std::cout << "wrote " << opt.out << '\n';
}

struct FlopsOpts {
    std::string registry, model;
    std::int64_t p = 0, o = 0;
    bool breakdown = false;
};

void run_flops(const FlopsOpts& opt) {
    const Registry registry = Registry::load_file(resolve_registry(opt.registry));
    const ModelArchitecture& arch = registry.model(opt.model);
    std::cout << "model: " << arch.id << " (h=" << arch.hidden_size << ", l=" << arch.num_layers
              << ", n=" << arch.num_heads << ")\n";
    std::cout << "total_flops: " << flop_to_string(query_total_flops(arch, opt.p, opt.o)) << '\n';
    std::cout << "prompt_pass_flops: "
              << flop_to_string(prompt_encoding_flops(1, opt.p, arch.hidden_size, arch.num_layers,
                                                      true))
              << '\n';
    if (!opt.breakdown) return;
    const auto print_breakdown = [](const char* title, const FlopBreakdown& b) {
        std::cout << title << '\n';
        std::cout << "  qkv: " << flop_to_string(b.qkv) << '\n';
        std::cout << "  attention_scores: " << flop_to_string(b.attention_scores) << '\n';
        std::cout << "  attention_over_values: " << flop_to_string(b.attention_over_values)
                  << '\n';
        std::cout << "  projection: " << flop_to_string(b.projection) << '\n';
        std::cout << "  mlp: " << flop_to_string(b.mlp) << '\n';
        std::cout << "  total: " << flop_to_string(b.total) << '\n';
    };
    print_breakdown("prompt pass operators:",
                    operator_breakdown_training(1, opt.p, arch.hidden_size, arch.num_heads,
                                                arch.num_layers));
    if (opt.o >= 2) {
        FlopBreakdown gen;
        for (std::int64_t i = opt.p; i <= opt.p + opt.o - 2; ++i) {
            const FlopBreakdown pass = operator_breakdown_generation(
                1, i, arch.hidden_size, arch.num_heads, arch.num_layers);
            gen.qkv += pass.qkv;
            gen.attention_scores += pass.attention_scores;
            gen.attention_over_values += pass.attention_over_values;
            gen.projection += pass.projection;
            gen.mlp += pass.mlp;
            gen.total += pass.total;
        }
        print_breakdown("generation passes (summed):", gen);
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"inference-efficiency metrics for autoregressive Transformer models"};
    app.require_subcommand(1);

    SimulateOpts sim;
    auto* simulate = app.add_subcommand("simulate", "generate profiling samples from a synthetic provider");
    simulate->add_option("--model", sim.model, "model id with built-in truth params");
    simulate->add_option("--truth", sim.truth_file, "explicit truth params JSON file");
    simulate->add_option("--variant", sim.variant, "built-in truth variant (idealized|denoised)");
    simulate->add_option("--preset", sim.preset, "noise preset name");
    simulate->add_option("--grid-p", sim.grid_p, "comma-separated prompt sizes");
    simulate->add_option("--grid-o", sim.grid_o, "comma-separated output-token counts");
    simulate->add_option("--trials", sim.trials, "trials per (p,o) cell");
    simulate->add_option("--parallelism", sim.parallelism, "concurrent-query level");
    simulate->add_option("--seed", sim.seed, "random seed");
    simulate->add_option("--overhead", sim.overhead, "extra fixed cost added to the truth params");
    simulate->add_option("--out", sim.out, "output samples JSONL")->required();
    simulate->callback([&] { run_simulate(sim); });

    FitOpts fit;
    auto* fit_cmd = app.add_subcommand("fit", "fit runtime-model params from profiling samples");
    fit_cmd->add_option("--in", fit.in, "input samples JSONL")->required();
    fit_cmd->add_option("--model", fit.model, "model id for the fitted params")->required();
    fit_cmd->add_option("--variant", fit.variant, "fit variant (denoised|idealized)");
    fit_cmd->add_option("--grid-p", fit.grid_p, "comma-separated prompt sizes to fit knots at");
    fit_cmd->add_option("--stack", fit.stack, "stack label recorded in the params");
    fit_cmd->add_option("--out", fit.out, "output params JSON")->required();
    fit_cmd->callback([&] { run_fit(fit); });

    PredictOpts pred;
    auto* predict = app.add_subcommand("predict", "evaluate runtime, cost, energy and FLOPs for one query");
    predict->add_option("--registry", pred.registry, "registry JSON path");
    predict->add_option("--params", pred.params, "fitted params JSON")->required();
    predict->add_option("--hardware", pred.hardware, "hardware profile id override");
    predict->add_option("-p,--prompt-tokens", pred.p, "prompt tokens")->required();
    predict->add_option("-o,--output-tokens", pred.o, "output tokens")->required();
    predict->callback([&] { run_predict(pred); });

    AnalyzeOpts ana;
    auto* analyze = app.add_subcommand("analyze", "aggregate a query log into per-scenario reports");
    analyze->add_option("--registry", ana.registry, "registry JSON path");
    analyze->add_option("--queries", ana.queries, "query log JSONL")->required();
    analyze->add_option("--params", ana.params, "fitted params JSON (repeatable)")->required();
    analyze->add_option("--format", ana.format, "output format (csv|json)");
    analyze->add_option("--objective", ana.objective, "order rows by ranking (f1|f2)");
    analyze->add_option("--log-base", ana.log_base, "log base for the f2 objective (default natural)");
    analyze->add_option("--out", ana.out, "output report file")->required();
    analyze->callback([&] { run_analyze(ana); });

    CompareOpts cmp;
    auto* compare = app.add_subcommand("compare-stacks", "evaluate one query set under two fitted stacks");
    compare->add_option("--registry", cmp.registry, "registry JSON path");
    compare->add_option("--model", cmp.model, "model id")->required();
    compare->add_option("--params-a", cmp.params_a, "stack A params JSON")->required();
    compare->add_option("--params-b", cmp.params_b, "stack B params JSON")->required();
    compare->add_option("--hardware-a", cmp.hardware_a, "stack A hardware profile id");
    compare->add_option("--hardware-b", cmp.hardware_b, "stack B hardware profile id");
    compare->add_option("--queries", cmp.queries, "query log JSONL")->required();
    compare->add_option("--out", cmp.out, "per-query comparison CSV");
    compare->callback([&] { run_compare_stacks(cmp); });

    FlopsOpts flo;
    auto* flops = app.add_subcommand("flops", "exact FLOP counts for one query");
    flops->add_option("--registry", flo.registry, "registry JSON path");
    flops->add_option("--model", flo.model, "model id")->required();
    flops->add_option("-p,--prompt-tokens", flo.p, "prompt tokens")->required();
    flops->add_option("-o,--output-tokens", flo.o, "output tokens")->required();
    flops->add_flag("--breakdown", flo.breakdown, "print per-operator breakdown");
    flops->callback([&] { run_flops(flo); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
