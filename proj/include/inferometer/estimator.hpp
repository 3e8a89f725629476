#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "inferometer/runtime_model.hpp"

namespace inferometer {

/// One timed query observation.
struct ProfileSample {
    std::int64_t prompt_tokens = 1;
    std::int64_t output_tokens = 1;
    std::int64_t trial = 0;
    std::int64_t parallelism = 1;  // concurrent queries in flight, 1 = isolated
    double runtime = 0.0;          // seconds, > 0
};

struct RegressionResult {
    double intercept = 0.0;
    double slope = 0.0;
    double r2 = 1.0;
};

/// Ordinary least squares over (x, y) pairs. Requires at least two points
/// with at least two distinct x values. With zero total variance the fit is
/// the constant line and r2 is 1 by convention.
RegressionResult simple_linear_regression(const std::vector<std::pair<double, double>>& points);

/// Least squares with the intercept pinned to 0: slope = sum(xy)/sum(x^2).
/// r2 is the uncentered coefficient 1 - SS_res / sum(y^2).
RegressionResult regression_through_origin(const std::vector<std::pair<double, double>>& points);

/// Minimum runtime per distinct (prompt_tokens, output_tokens) cell across
/// trials, isolated samples only (parallelism > 1 is dropped). Output is
/// sorted by (p, o) with trial reset to 0.
std::vector<ProfileSample> denoise(const std::vector<ProfileSample>& samples);

/// Sample standard deviation (n-1 denominator) divided by the mean.
double coefficient_of_variation(const std::vector<double>& runtimes);

/// Two-step fit of the parametric runtime model.
///
/// Step 1: per grid prompt size, regress runtime on (o-1); the intercept is
/// that prompt size's encoding-time knot. Step 2: pool (runtime - knot(p))
/// against (o-1) over all used samples and fit through the origin for the
/// global per-token slope g. The denoised variant applies denoise() first;
/// both variants use isolated (parallelism 1) samples whose prompt size is
/// on the grid. Negative knots clamp to 0 with a warning; a negative g is an
/// error.
std::pair<RuntimeModelParams, FitDiagnostics> fit_runtime_model(
    const std::vector<ProfileSample>& samples, const std::vector<std::int64_t>& grid,
    Variant variant, const std::string& model_id, const std::string& stack_label);

// JSONL serialization, one sample object per line.
void write_samples_jsonl(std::ostream& os, const std::vector<ProfileSample>& samples);
void write_samples_file(const std::filesystem::path& path, const std::vector<ProfileSample>& samples);
std::vector<ProfileSample> read_samples_jsonl(std::istream& is);
std::vector<ProfileSample> read_samples_file(const std::filesystem::path& path);

}  // namespace inferometer
