#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "inferometer/arch.hpp"
#include "inferometer/estimator.hpp"
#include "inferometer/runtime_model.hpp"

namespace inferometer {

/// One benchmark query with optional pre-scored per-model accuracy.
struct QueryRecord {
    std::string scenario;
    std::string query_id;
    std::int64_t prompt_tokens = 1;
    std::int64_t output_tokens = 1;
    std::map<std::string, double> accuracy_by_model;  // scores in [0, 1]
};

std::vector<QueryRecord> read_queries_jsonl(std::istream& is);
std::vector<QueryRecord> read_queries_file(const std::filesystem::path& path);
void write_queries_file(const std::filesystem::path& path, const std::vector<QueryRecord>& queries);

/// Everything needed to score one model over a query log.
struct ModelUnderAnalysis {
    ModelArchitecture arch;
    RuntimeModelParams idealized;
    std::optional<RuntimeModelParams> denoised;
    HardwareProfile hardware;
};

/// Per-model aggregate over one scenario. Means are over the queries that
/// fit the model's context window; raw runtime stays empty unless real
/// measurements were supplied.
struct ReportRow {
    std::string model_id;
    std::int64_t query_count = 0;
    std::int64_t skipped_queries = 0;  // context-bound violations
    std::optional<double> mean_accuracy;
    std::optional<double> mean_raw_runtime;
    std::optional<double> mean_denoised_runtime;
    double mean_idealized_runtime = 0.0;
    double mean_idealized_cost = 0.0;
    double mean_idealized_energy = 0.0;
    double mean_flops = 0.0;
    std::int64_t param_count = 0;
    std::map<std::string, bool> on_pareto_frontier;  // by metric column name
    std::optional<std::int64_t> rank_f1;
    std::optional<std::int64_t> rank_f2;
};

struct EfficiencyReport {
    std::string scenario;
    std::vector<ReportRow> rows;
};

/// Metric columns eligible for Pareto flags and rankings, in report order.
const std::vector<std::string>& efficiency_metric_names();

/// Idealized runtime converted to currency: t * accelerator_count * cost_rate.
double idealized_cost(double t_idealized, const HardwareProfile& hw);

/// Idealized runtime converted to joules: t * accelerator_count * power_draw.
double idealized_energy(double t_idealized, const HardwareProfile& hw);

/// Per-scenario rollup of runtimes, costs, FLOPs and accuracy, with Pareto
/// flags for every metric column and f1/f2 rankings on idealized runtime.
/// Queries exceeding a model's context window are skipped for that model and
/// counted. log_base applies to the f2 ranking objective.
std::vector<EfficiencyReport> aggregate(const std::vector<QueryRecord>& queries,
                                        const std::vector<ModelUnderAnalysis>& models,
                                        double log_base = 0.0 /* 0 = natural */);

struct ParetoPoint {
    std::string id;
    double capability = 0.0;  // higher is better
    double cost = 0.0;        // lower is better
};

/// Ids not dominated in the (capability up, cost down) plane. Mutually
/// non-dominating ties and duplicate points are all kept.
std::set<std::string> pareto_frontier(const std::vector<ParetoPoint>& points);

enum class Objective { accuracy_over_metric, accuracy_over_log_metric };

struct RankInput {
    std::string model_id;
    double accuracy = 0.0;
    double metric = 1.0;  // > 0
};

struct RankedModel {
    std::string model_id;
    std::optional<double> objective;  // empty when undefined (log of 1)
};

/// Order models by accuracy/metric (f1) or accuracy/log(metric) (f2),
/// descending, ties broken by model_id. Rows where the objective is
/// undefined keep their id at the tail. log_base <= 0 means natural log.
std::vector<RankedModel> rank_models(const std::vector<RankInput>& rows, Objective objective,
                                     double log_base = 0.0);

struct InequalityAuditResult {
    double fraction_raw_ge_denoised = 0.0;
    double fraction_denoised_ge_idealized = 0.0;
};

/// Fraction of raw samples at or above the denoised estimate, and fraction
/// of profiled (p, o) cells where the denoised estimate is at or above the
/// idealized one. Comparisons allow `tolerance` seconds of slack.
InequalityAuditResult inequality_audit(const std::vector<ProfileSample>& raw_samples,
                                       const RuntimeModelParams& denoised,
                                       const RuntimeModelParams& idealized,
                                       double tolerance = 1e-6);

/// Report serialization. CSV column order is frozen; see docs/FORMATS.md.
void write_report_csv(std::ostream& os, const std::vector<EfficiencyReport>& reports);
nlohmann::ordered_json report_to_json(const std::vector<EfficiencyReport>& reports, double log_base = 0.0);

}  // namespace inferometer
