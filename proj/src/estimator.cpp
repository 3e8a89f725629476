#include "inferometer/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "inferometer/errors.hpp"

namespace inferometer {

RegressionResult simple_linear_regression(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) {
        throw ValidationError("regression needs at least 2 points");
    }
    double sx = 0, sy = 0;
    for (const auto& [x, y] : points) {
        sx += x;
        sy += y;
    }
    const double n = static_cast<double>(points.size());
    const double mx = sx / n;
    const double my = sy / n;
    double sxx = 0, sxy = 0;
    for (const auto& [x, y] : points) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    if (sxx == 0) {
        throw ValidationError("regression is degenerate: all x values equal");
    }
    RegressionResult res;
    res.slope = sxy / sxx;
    res.intercept = my - res.slope * mx;
    double ss_res = 0, ss_tot = 0;
    for (const auto& [x, y] : points) {
        const double e = y - (res.intercept + res.slope * x);
        ss_res += e * e;
        ss_tot += (y - my) * (y - my);
    }
    res.r2 = ss_tot == 0 ? 1.0 : 1.0 - ss_res / ss_tot;
    return res;
}

RegressionResult regression_through_origin(const std::vector<std::pair<double, double>>& points) {
    if (points.empty()) {
        throw ValidationError("regression needs at least 1 point");
    }
    double sxx = 0, sxy = 0, syy = 0;
    for (const auto& [x, y] : points) {
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    RegressionResult res;
    res.intercept = 0.0;
    res.slope = sxx == 0 ? 0.0 : sxy / sxx;
    double ss_res = 0;
    for (const auto& [x, y] : points) {
        const double e = y - res.slope * x;
        ss_res += e * e;
    }
    res.r2 = syy == 0 ? 1.0 : 1.0 - ss_res / syy;
    return res;
}

namespace {

void validate_sample(const ProfileSample& s) {
    if (s.prompt_tokens < 1) throw ValidationError("sample prompt_tokens must be >= 1");
    if (s.output_tokens < 1) throw ValidationError("sample output_tokens must be >= 1");
    if (!(s.runtime > 0)) throw ValidationError("sample runtime must be > 0");
    if (s.trial < 0) throw ValidationError("sample trial must be >= 0");
    if (s.parallelism < 1) throw ValidationError("sample parallelism must be >= 1");
}

}  // namespace

std::vector<ProfileSample> denoise(const std::vector<ProfileSample>& samples) {
    if (samples.empty()) {
        throw ValidationError("denoise requires at least one sample");
    }
    std::map<std::pair<std::int64_t, std::int64_t>, double> minima;
    for (const auto& s : samples) {
        validate_sample(s);
        if (s.parallelism > 1) continue;
        const auto key = std::make_pair(s.prompt_tokens, s.output_tokens);
        auto it = minima.find(key);
        if (it == minima.end() || s.runtime < it->second) {
            minima[key] = s.runtime;
        }
    }
    std::vector<ProfileSample> out;
    out.reserve(minima.size());
    for (const auto& [key, runtime] : minima) {
        out.push_back({key.first, key.second, 0, 1, runtime});
    }
    return out;
}

double coefficient_of_variation(const std::vector<double>& runtimes) {
    if (runtimes.size() < 2) {
        throw ValidationError("coefficient of variation needs at least 2 values");
    }
    double sum = 0;
    for (double v : runtimes) sum += v;
    const double mean = sum / static_cast<double>(runtimes.size());
    if (!(mean > 0)) {
        throw ValidationError("coefficient of variation undefined for nonpositive mean");
    }
    double ss = 0;
    for (double v : runtimes) ss += (v - mean) * (v - mean);
    const double sd = std::sqrt(ss / static_cast<double>(runtimes.size() - 1));
    return sd / mean;
}

std::pair<RuntimeModelParams, FitDiagnostics> fit_runtime_model(
    const std::vector<ProfileSample>& samples, const std::vector<std::int64_t>& grid,
    Variant variant, const std::string& model_id, const std::string& stack_label) {
    if (grid.empty()) {
        throw ValidationError("fit requires a nonempty prompt grid");
    }
    std::vector<std::int64_t> sorted_grid = grid;
    std::sort(sorted_grid.begin(), sorted_grid.end());
    if (std::adjacent_find(sorted_grid.begin(), sorted_grid.end()) != sorted_grid.end()) {
        throw ValidationError("fit grid contains duplicate prompt sizes");
    }
    if (sorted_grid.size() < 2) {
        throw ValidationError("fit requires at least 2 grid prompt sizes");
    }

    std::vector<ProfileSample> used;
    if (variant == Variant::denoised) {
        used = denoise(samples);
    } else {
        for (const auto& s : samples) {
            validate_sample(s);
            if (s.parallelism == 1) used.push_back(s);
        }
    }
    const std::set<std::int64_t> grid_set(sorted_grid.begin(), sorted_grid.end());
    std::erase_if(used, [&](const ProfileSample& s) { return !grid_set.count(s.prompt_tokens); });

    RuntimeModelParams params;
    params.model_id = model_id;
    params.variant = variant;
    params.stack_label = stack_label;
    params.per_token_slope = 0.0;
    params.overhead = 0.0;

    FitDiagnostics diag;
    diag.sample_count = static_cast<std::int64_t>(used.size());

    // Step 1: per prompt size, runtime against (o - 1); intercept is the knot.
    for (std::int64_t p : sorted_grid) {
        std::vector<std::pair<double, double>> points;
        std::set<std::int64_t> distinct_o;
        for (const auto& s : used) {
            if (s.prompt_tokens != p) continue;
            points.emplace_back(static_cast<double>(s.output_tokens - 1), s.runtime);
            distinct_o.insert(s.output_tokens);
        }
        if (points.size() < 2 || distinct_o.size() < 2) {
            throw ValidationError("insufficient samples for grid prompt size p=" +
                                  std::to_string(p) +
                                  " (need >= 2 samples at >= 2 distinct output counts)");
        }
        const RegressionResult reg = simple_linear_regression(points);
        double knot_time = reg.intercept;
        if (knot_time < 0) {
            std::ostringstream msg;
            msg << "negative fitted encoding time " << knot_time << " at p=" << p
                << " clamped to 0";
            diag.warnings.push_back(msg.str());
            knot_time = 0.0;
        }
        params.knots.push_back({p, knot_time});
        diag.per_prompt_r2[p] = reg.r2;
    }

    // Step 2: pooled slope through the origin on runtime differences.
    std::vector<std::pair<double, double>> pooled;
    pooled.reserve(used.size());
    for (const auto& s : used) {
        pooled.emplace_back(static_cast<double>(s.output_tokens - 1),
                            s.runtime - params.prompt_encoding_time(s.prompt_tokens));
    }
    const RegressionResult slope_reg = regression_through_origin(pooled);
    if (slope_reg.slope < 0) {
        throw ValidationError("fitted per-token slope is negative (" +
                              std::to_string(slope_reg.slope) +
                              "); samples are inconsistent with the runtime model");
    }
    params.per_token_slope = slope_reg.slope;
    diag.slope_r2 = slope_reg.r2;

    for (const auto& s : used) {
        const double residual = std::abs(s.runtime - params.evaluate(s.prompt_tokens, s.output_tokens));
        diag.residual_max = std::max(diag.residual_max, residual);
    }
    params.validate();
    return {std::move(params), std::move(diag)};
}

void write_samples_jsonl(std::ostream& os, const std::vector<ProfileSample>& samples) {
    for (const auto& s : samples) {
        const nlohmann::ordered_json line = {{"prompt_tokens", s.prompt_tokens},
                                     {"output_tokens", s.output_tokens},
                                     {"trial", s.trial},
                                     {"parallelism", s.parallelism},
                                     {"runtime", s.runtime}};
        os << line.dump() << '\n';
    }
}

void write_samples_file(const std::filesystem::path& path,
                        const std::vector<ProfileSample>& samples) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write samples file: " + path.string());
    }
    write_samples_jsonl(out, samples);
}

std::vector<ProfileSample> read_samples_jsonl(std::istream& is) {
    std::vector<ProfileSample> samples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
            ProfileSample s;
            s.prompt_tokens = doc.at("prompt_tokens").get<std::int64_t>();
            s.output_tokens = doc.at("output_tokens").get<std::int64_t>();
            s.trial = doc.value("trial", std::int64_t{0});
            s.parallelism = doc.value("parallelism", std::int64_t{1});
            s.runtime = doc.at("runtime").get<double>();
            validate_sample(s);
            samples.push_back(s);
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError("samples line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return samples;
}

std::vector<ProfileSample> read_samples_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open samples file: " + path.string());
    }
    return read_samples_jsonl(in);
}

}  // namespace inferometer
