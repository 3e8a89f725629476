#include "inferometer/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>

#include "inferometer/errors.hpp"
#include "inferometer/flops.hpp"

namespace inferometer {

namespace {

void validate_query(const QueryRecord& q) {
    if (q.prompt_tokens < 1) throw ValidationError("query prompt_tokens must be >= 1");
    if (q.output_tokens < 1) throw ValidationError("query output_tokens must be >= 1");
    for (const auto& [model_id, score] : q.accuracy_by_model) {
        if (score < 0 || score > 1) {
            throw ValidationError("accuracy for model '" + model_id + "' outside [0, 1]");
        }
    }
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::vector<QueryRecord> read_queries_jsonl(std::istream& is) {
    std::vector<QueryRecord> queries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            const nlohmann::json doc = nlohmann::json::parse(line);
            QueryRecord q;
            q.scenario = doc.at("scenario").get<std::string>();
            q.query_id = doc.at("query_id").get<std::string>();
            q.prompt_tokens = doc.at("prompt_tokens").get<std::int64_t>();
            q.output_tokens = doc.at("output_tokens").get<std::int64_t>();
            if (doc.contains("accuracy_by_model")) {
                q.accuracy_by_model =
                    doc.at("accuracy_by_model").get<std::map<std::string, double>>();
            }
            validate_query(q);
            queries.push_back(std::move(q));
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("queries line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return queries;
}

std::vector<QueryRecord> read_queries_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open queries file: " + path.string());
    }
    return read_queries_jsonl(in);
}

void write_queries_file(const std::filesystem::path& path,
                        const std::vector<QueryRecord>& queries) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write queries file: " + path.string());
    }
    for (const auto& q : queries) {
        validate_query(q);
        nlohmann::ordered_json line = {{"scenario", q.scenario},
                                       {"query_id", q.query_id},
                                       {"prompt_tokens", q.prompt_tokens},
                                       {"output_tokens", q.output_tokens}};
        if (!q.accuracy_by_model.empty()) {
            line["accuracy_by_model"] = q.accuracy_by_model;
        }
        out << line.dump() << '\n';
    }
}

const std::vector<std::string>& efficiency_metric_names() {
    static const std::vector<std::string> names = {
        "mean_denoised_runtime", "mean_idealized_runtime", "mean_idealized_cost",
        "mean_idealized_energy", "mean_flops",             "param_count"};
    return names;
}

double idealized_cost(double t_idealized, const HardwareProfile& hw) {
    if (t_idealized < 0) throw ValidationError("idealized runtime must be >= 0");
    return t_idealized * static_cast<double>(hw.accelerator_count) * hw.cost_rate;
}

double idealized_energy(double t_idealized, const HardwareProfile& hw) {
    if (t_idealized < 0) throw ValidationError("idealized runtime must be >= 0");
    return t_idealized * static_cast<double>(hw.accelerator_count) * hw.power_draw;
}

namespace {

bool query_fits(const QueryRecord& q, const ModelArchitecture& arch) {
    return q.prompt_tokens + q.output_tokens <= arch.max_context_length + 1;
}

std::optional<double> row_metric(const ReportRow& row, const std::string& metric) {
    if (metric == "mean_denoised_runtime") return row.mean_denoised_runtime;
    if (metric == "mean_idealized_runtime") return row.mean_idealized_runtime;
    if (metric == "mean_idealized_cost") return row.mean_idealized_cost;
    if (metric == "mean_idealized_energy") return row.mean_idealized_energy;
    if (metric == "mean_flops") return row.mean_flops;
    if (metric == "param_count") return static_cast<double>(row.param_count);
    throw ValidationError("unknown metric column: " + metric);
}

void annotate_report(EfficiencyReport& report, double log_base) {
    // Frontier flags: accuracy against each metric; rows without accuracy
    // (or without the metric) never make a frontier.
    for (const std::string& metric : efficiency_metric_names()) {
        std::vector<ParetoPoint> points;
        for (const ReportRow& row : report.rows) {
            const auto value = row_metric(row, metric);
            if (row.mean_accuracy && value) {
                points.push_back({row.model_id, *row.mean_accuracy, *value});
            }
        }
        const std::set<std::string> frontier =
            points.empty() ? std::set<std::string>{} : pareto_frontier(points);
        for (ReportRow& row : report.rows) {
            row.on_pareto_frontier[metric] = frontier.count(row.model_id) > 0;
        }
    }

    std::vector<RankInput> rank_rows;
    for (const ReportRow& row : report.rows) {
        if (row.mean_accuracy) {
            rank_rows.push_back({row.model_id, *row.mean_accuracy, row.mean_idealized_runtime});
        }
    }
    if (rank_rows.empty()) return;
    const auto apply = [&](Objective objective, auto field) {
        const std::vector<RankedModel> ranked = rank_models(rank_rows, objective, log_base);
        for (std::size_t i = 0; i < ranked.size(); ++i) {
            for (ReportRow& row : report.rows) {
                if (row.model_id == ranked[i].model_id) {
                    row.*field = static_cast<std::int64_t>(i + 1);
                }
            }
        }
    };
    apply(Objective::accuracy_over_metric, &ReportRow::rank_f1);
    apply(Objective::accuracy_over_log_metric, &ReportRow::rank_f2);
}

}  // namespace

std::vector<EfficiencyReport> aggregate(const std::vector<QueryRecord>& queries,
                                        const std::vector<ModelUnderAnalysis>& models,
                                        double log_base) {
    if (queries.empty()) throw ValidationError("aggregate requires at least one query");
    if (models.empty()) throw ValidationError("aggregate requires at least one model");
    for (const auto& m : models) {
        m.idealized.validate();
        if (m.idealized.model_id != m.arch.id) {
            throw ValidationError("idealized params for '" + m.idealized.model_id +
                                  "' do not match model '" + m.arch.id + "'");
        }
        if (m.denoised) {
            m.denoised->validate();
            if (m.denoised->model_id != m.arch.id) {
                throw ValidationError("denoised params for '" + m.denoised->model_id +
                                      "' do not match model '" + m.arch.id + "'");
            }
        }
    }

    std::vector<std::string> scenarios;
    for (const auto& q : queries) {
        validate_query(q);
        if (std::find(scenarios.begin(), scenarios.end(), q.scenario) == scenarios.end()) {
            scenarios.push_back(q.scenario);
        }
    }
    std::sort(scenarios.begin(), scenarios.end());

    std::vector<EfficiencyReport> reports;
    for (const std::string& scenario : scenarios) {
        EfficiencyReport report;
        report.scenario = scenario;
        for (const auto& m : models) {
            ReportRow row;
            row.model_id = m.arch.id;
            row.param_count = static_cast<std::int64_t>(approx_param_count(m.arch));
            long double sum_ide = 0, sum_den = 0, sum_cost = 0, sum_energy = 0, sum_flops = 0;
            long double sum_acc = 0;
            std::int64_t acc_count = 0;
            bool all_denoised = m.denoised.has_value();
            for (const auto& q : queries) {
                if (q.scenario != scenario) continue;
                if (!query_fits(q, m.arch)) {
                    ++row.skipped_queries;
                    continue;
                }
                ++row.query_count;
                const double t_ide = m.idealized.evaluate(q.prompt_tokens, q.output_tokens);
                sum_ide += t_ide;
                sum_cost += idealized_cost(t_ide, m.hardware);
                sum_energy += idealized_energy(t_ide, m.hardware);
                sum_flops +=
                    flop_to_double(query_total_flops(m.arch, q.prompt_tokens, q.output_tokens));
                if (all_denoised) {
                    sum_den += m.denoised->evaluate(q.prompt_tokens, q.output_tokens);
                }
                const auto it = q.accuracy_by_model.find(m.arch.id);
                if (it != q.accuracy_by_model.end()) {
                    sum_acc += it->second;
                    ++acc_count;
                }
            }
            if (row.query_count == 0) {
                throw ValidationError("scenario '" + scenario + "': no query fits model '" +
                                      m.arch.id + "'");
            }
            const long double n = static_cast<long double>(row.query_count);
            row.mean_idealized_runtime = static_cast<double>(sum_ide / n);
            row.mean_idealized_cost = static_cast<double>(sum_cost / n);
            row.mean_idealized_energy = static_cast<double>(sum_energy / n);
            row.mean_flops = static_cast<double>(sum_flops / n);
            if (all_denoised) row.mean_denoised_runtime = static_cast<double>(sum_den / n);
            if (acc_count > 0) {
                row.mean_accuracy = static_cast<double>(sum_acc / static_cast<long double>(acc_count));
            }
            report.rows.push_back(std::move(row));
        }
        annotate_report(report, log_base);
        reports.push_back(std::move(report));
    }
    return reports;
}

std::set<std::string> pareto_frontier(const std::vector<ParetoPoint>& points) {
    if (points.empty()) throw ValidationError("pareto_frontier requires at least one point");
    std::vector<const ParetoPoint*> order;
    order.reserve(points.size());
    for (const auto& p : points) order.push_back(&p);
    std::sort(order.begin(), order.end(), [](const ParetoPoint* a, const ParetoPoint* b) {
        if (a->capability != b->capability) return a->capability > b->capability;
        return a->cost < b->cost;
    });

    std::set<std::string> frontier;
    double min_cost_higher = std::numeric_limits<double>::infinity();
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && order[j]->capability == order[i]->capability) ++j;
        const double group_min = order[i]->cost;
        if (group_min < min_cost_higher) {
            for (std::size_t k = i; k < j && order[k]->cost == group_min; ++k) {
                frontier.insert(order[k]->id);
            }
        }
        min_cost_higher = std::min(min_cost_higher, group_min);
        i = j;
    }
    return frontier;
}

std::vector<RankedModel> rank_models(const std::vector<RankInput>& rows, Objective objective,
                                     double log_base) {
    std::vector<RankedModel> ranked;
    ranked.reserve(rows.size());
    for (const auto& row : rows) {
        if (!(row.metric > 0)) {
            throw ValidationError("metric for model '" + row.model_id + "' must be > 0");
        }
        RankedModel out;
        out.model_id = row.model_id;
        if (objective == Objective::accuracy_over_metric) {
            out.objective = row.accuracy / row.metric;
        } else {
            double denom = std::log(row.metric);
            if (log_base > 0) denom /= std::log(log_base);
            if (denom != 0) out.objective = row.accuracy / denom;
        }
        ranked.push_back(std::move(out));
    }
    std::sort(ranked.begin(), ranked.end(), [](const RankedModel& a, const RankedModel& b) {
        if (a.objective.has_value() != b.objective.has_value()) return a.objective.has_value();
        if (a.objective && b.objective && *a.objective != *b.objective) {
            return *a.objective > *b.objective;
        }
        return a.model_id < b.model_id;
    });
    return ranked;
}

InequalityAuditResult inequality_audit(const std::vector<ProfileSample>& raw_samples,
                                       const RuntimeModelParams& denoised,
                                       const RuntimeModelParams& idealized,
                                       double tolerance) {
    if (raw_samples.empty()) throw ValidationError("inequality audit requires samples");
    InequalityAuditResult result;
    std::set<std::pair<std::int64_t, std::int64_t>> cells;
    std::int64_t raw_ok = 0;
    for (const auto& s : raw_samples) {
        cells.emplace(s.prompt_tokens, s.output_tokens);
        if (s.runtime >= denoised.evaluate(s.prompt_tokens, s.output_tokens) - tolerance) {
            ++raw_ok;
        }
    }
    std::int64_t cell_ok = 0;
    for (const auto& [p, o] : cells) {
        if (denoised.evaluate(p, o) >= idealized.evaluate(p, o) - tolerance) ++cell_ok;
    }
    result.fraction_raw_ge_denoised =
        static_cast<double>(raw_ok) / static_cast<double>(raw_samples.size());
    result.fraction_denoised_ge_idealized =
        static_cast<double>(cell_ok) / static_cast<double>(cells.size());
    return result;
}

namespace {

std::vector<std::string> report_columns() {
    std::vector<std::string> cols = {
        "scenario",       "model_id",        "query_count",
        "skipped_queries", "mean_accuracy",  "mean_raw_runtime",
        "mean_denoised_runtime", "mean_idealized_runtime", "mean_idealized_cost",
        "mean_idealized_energy", "mean_flops", "param_count"};
    for (const std::string& metric : efficiency_metric_names()) {
        cols.push_back("pareto_" + metric);
    }
    cols.push_back("rank_f1");
    cols.push_back("rank_f2");
    return cols;
}

std::string cell_for(const ReportRow& row, const std::string& scenario, const std::string& col) {
    if (col == "scenario") return scenario;
    if (col == "model_id") return row.model_id;
    if (col == "query_count") return std::to_string(row.query_count);
    if (col == "skipped_queries") return std::to_string(row.skipped_queries);
    if (col == "mean_accuracy") {
        return row.mean_accuracy ? format_double(*row.mean_accuracy) : "";
    }
    if (col == "mean_raw_runtime") {
        return row.mean_raw_runtime ? format_double(*row.mean_raw_runtime) : "";
    }
    if (col == "mean_denoised_runtime") {
        return row.mean_denoised_runtime ? format_double(*row.mean_denoised_runtime) : "";
    }
    if (col == "mean_idealized_runtime") return format_double(row.mean_idealized_runtime);
    if (col == "mean_idealized_cost") return format_double(row.mean_idealized_cost);
    if (col == "mean_idealized_energy") return format_double(row.mean_idealized_energy);
    if (col == "mean_flops") return format_double(row.mean_flops);
    if (col == "param_count") return std::to_string(row.param_count);
    if (col.rfind("pareto_", 0) == 0) {
        const auto it = row.on_pareto_frontier.find(col.substr(7));
        return (it != row.on_pareto_frontier.end() && it->second) ? "1" : "0";
    }
    if (col == "rank_f1") return row.rank_f1 ? std::to_string(*row.rank_f1) : "";
    if (col == "rank_f2") return row.rank_f2 ? std::to_string(*row.rank_f2) : "";
    throw ValidationError("unknown report column: " + col);
}

}  // namespace

void write_report_csv(std::ostream& os, const std::vector<EfficiencyReport>& reports) {
    const std::vector<std::string> cols = report_columns();
    for (std::size_t i = 0; i < cols.size(); ++i) {
        os << (i ? "," : "") << cols[i];
    }
    os << '\n';
    for (const auto& report : reports) {
        for (const auto& row : report.rows) {
            for (std::size_t i = 0; i < cols.size(); ++i) {
                os << (i ? "," : "") << cell_for(row, report.scenario, cols[i]);
            }
            os << '\n';
        }
    }
}

nlohmann::ordered_json report_to_json(const std::vector<EfficiencyReport>& reports, double log_base) {
    nlohmann::ordered_json doc;
    doc["f2_log_base"] = log_base > 0 ? nlohmann::ordered_json(log_base)
                                      : nlohmann::ordered_json("natural");
    doc["reports"] = nlohmann::ordered_json::array();
    for (const auto& report : reports) {
        nlohmann::ordered_json rep;
        rep["scenario"] = report.scenario;
        rep["rows"] = nlohmann::ordered_json::array();
        for (const auto& row : report.rows) {
            nlohmann::ordered_json r;
            r["model_id"] = row.model_id;
            r["query_count"] = row.query_count;
            r["skipped_queries"] = row.skipped_queries;
            if (row.mean_accuracy) r["mean_accuracy"] = *row.mean_accuracy;
            if (row.mean_raw_runtime) r["mean_raw_runtime"] = *row.mean_raw_runtime;
            if (row.mean_denoised_runtime) r["mean_denoised_runtime"] = *row.mean_denoised_runtime;
            r["mean_idealized_runtime"] = row.mean_idealized_runtime;
            r["mean_idealized_cost"] = row.mean_idealized_cost;
            r["mean_idealized_energy"] = row.mean_idealized_energy;
            r["mean_flops"] = row.mean_flops;
            r["param_count"] = row.param_count;
            for (const std::string& metric : efficiency_metric_names()) {
                const auto it = row.on_pareto_frontier.find(metric);
                r["pareto_" + metric] = it != row.on_pareto_frontier.end() && it->second;
            }
            if (row.rank_f1) r["rank_f1"] = *row.rank_f1;
            if (row.rank_f2) r["rank_f2"] = *row.rank_f2;
            rep["rows"].push_back(std::move(r));
        }
        doc["reports"].push_back(std::move(rep));
    }
    return doc;
}

}  // namespace inferometer
