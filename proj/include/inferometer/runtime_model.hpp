#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace inferometer {

enum class Variant { idealized, denoised };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);

/// One sampled point of the piecewise-linear prompt-encoding curve.
struct PromptKnot {
    std::int64_t prompt_tokens = 1;
    double encoding_time = 0.0;  // seconds
};

/// Parametric runtime t(p, o) = prompt_encoding_time(p) + (o-1)*g + overhead.
///
/// Knots are strictly increasing in prompt_tokens (at least two). Evaluation
/// interpolates linearly between knots, extrapolates with the first/last
/// segment slope outside the grid, and clamps extrapolated times at 0.
struct RuntimeModelParams {
    std::string model_id;
    Variant variant = Variant::idealized;
    std::string stack_label;  // software+hardware, empty for denoised fits
    std::vector<PromptKnot> knots;
    double per_token_slope = 0.0;  // g, seconds per generated token
    double overhead = 0.0;         // fixed per-request seconds, 0 for idealized

    double prompt_encoding_time(std::int64_t p) const;
    double evaluate(std::int64_t p, std::int64_t o) const;

    /// Throws ValidationError when an invariant fails.
    void validate() const;

    nlohmann::ordered_json to_json() const;
    static RuntimeModelParams from_json(const nlohmann::json& doc);
    static RuntimeModelParams load_file(const std::filesystem::path& path);
    void save_file(const std::filesystem::path& path) const;
};

/// Goodness-of-fit record for a fitted RuntimeModelParams.
struct FitDiagnostics {
    std::map<std::int64_t, double> per_prompt_r2;
    double slope_r2 = 1.0;
    std::int64_t sample_count = 0;
    double residual_max = 0.0;  // max |observed - evaluate| over fitted samples
    std::vector<std::string> warnings;

    nlohmann::ordered_json to_json() const;
    static FitDiagnostics from_json(const nlohmann::json& doc);
};

/// Built-in reference parameter sets measured once on a Megatron/A100 stack
/// (idealized) and through provider APIs (denoised), for the four models that
/// have published curves. Returns nothing for other (model, variant) pairs.
std::optional<RuntimeModelParams> reference_params(const std::string& model_id, Variant variant);

/// Model ids that have built-in reference parameters.
std::vector<std::string> reference_model_ids();

}  // namespace inferometer
