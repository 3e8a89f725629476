#include "inferometer/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "inferometer/errors.hpp"

namespace inferometer {

void NoiseSpec::validate() const {
    if (base_noise_mean < 0) throw ValidationError("base_noise_mean must be >= 0");
    if (outlier_probability < 0 || outlier_probability > 1) {
        throw ValidationError("outlier_probability must be in [0, 1]");
    }
    if (outlier_multiplier_low < 1 || outlier_multiplier_high < outlier_multiplier_low) {
        throw ValidationError("outlier multiplier range must satisfy 1 <= low <= high");
    }
    if (contention_max < 1) throw ValidationError("contention_max must be >= 1");
    if (contention_saturation < 2) throw ValidationError("contention_saturation must be >= 2");
}

double NoiseSpec::contention(std::int64_t parallelism) const {
    if (parallelism < 1) throw ValidationError("parallelism must be >= 1");
    const double frac =
        std::min(1.0, static_cast<double>(parallelism - 1) /
                          static_cast<double>(contention_saturation - 1));
    return 1.0 + (contention_max - 1.0) * frac;
}

std::optional<NoiseSpec> noise_preset(const std::string& name) {
    NoiseSpec spec;
    if (name == "noiseless") {
        return spec;
    }
    if (name == "low-noise") {
        // Additive mean is 5% of a typical half-kilotoken encoding time;
        // occasional 2-3x stragglers.
        spec.base_noise_mean = 0.0089;
        spec.outlier_probability = 0.03;
        spec.outlier_multiplier_low = 2.0;
        spec.outlier_multiplier_high = 3.0;
        return spec;
    }
    if (name == "stable") {
        // Calibrated for per-cell CoV near 0.2.
        spec.base_noise_mean = 0.001;
        spec.outlier_probability = 0.25;
        spec.outlier_multiplier_low = 1.15;
        spec.outlier_multiplier_high = 1.85;
        return spec;
    }
    if (name == "grande-like") {
        // Calibrated for per-cell CoV near 0.55.
        spec.base_noise_mean = 0.001;
        spec.outlier_probability = 0.45;
        spec.outlier_multiplier_low = 1.5;
        spec.outlier_multiplier_high = 4.0;
        return spec;
    }
    if (name == "loaded") {
        // Runtime doubles once eight queries run in parallel.
        spec.base_noise_mean = 0.001;
        spec.outlier_probability = 0.03;
        spec.outlier_multiplier_low = 2.0;
        spec.outlier_multiplier_high = 3.0;
        spec.contention_max = 2.0;
        spec.contention_saturation = 8;
        return spec;
    }
    return std::nullopt;
}

std::vector<std::string> noise_preset_names() {
    return {"noiseless", "low-noise", "stable", "grande-like", "loaded"};
}

SimulatedProvider::SimulatedProvider(RuntimeModelParams truth, NoiseSpec noise)
    : truth_(std::move(truth)), noise_(noise), stream_(noise.seed) {
    truth_.validate();
    noise_.validate();
}

double SimulatedProvider::next_uniform() {
    // 53-bit mantissa in [0, 1).
    return static_cast<double>(stream_() >> 11) * 0x1.0p-53;
}

double SimulatedProvider::sample_runtime(std::int64_t p, std::int64_t o,
                                         std::int64_t parallelism) {
    if (p < 1) throw ValidationError("prompt token count must be >= 1");
    if (o < 1) throw ValidationError("output token count must be >= 1");
    const double base = truth_.evaluate(p, o) * noise_.contention(parallelism);

    // Always three draws per sample so the stream position depends only on
    // how many samples were taken, not on their outcomes.
    const double u_bernoulli = next_uniform();
    const double u_multiplier = next_uniform();
    const double u_exponential = next_uniform();

    double factor = 1.0;
    if (u_bernoulli < noise_.outlier_probability) {
        factor = noise_.outlier_multiplier_low +
                 u_multiplier * (noise_.outlier_multiplier_high - noise_.outlier_multiplier_low);
    }
    double eta = 0.0;
    if (noise_.base_noise_mean > 0) {
        eta = -noise_.base_noise_mean * std::log1p(-u_exponential);
    }
    return base * factor + eta;
}

std::vector<ProfileSample> SimulatedProvider::run_trials(const std::vector<std::int64_t>& grid_p,
                                                         const std::vector<std::int64_t>& grid_o,
                                                         std::int64_t trials,
                                                         std::int64_t parallelism) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (grid_p.empty() || grid_o.empty()) {
        throw ValidationError("profiling grids must be nonempty");
    }
    std::vector<ProfileSample> samples;
    samples.reserve(grid_p.size() * grid_o.size() * static_cast<std::size_t>(trials));
    for (std::int64_t p : grid_p) {
        for (std::int64_t o : grid_o) {
            for (std::int64_t trial = 0; trial < trials; ++trial) {
                samples.push_back({p, o, trial, parallelism, sample_runtime(p, o, parallelism)});
            }
        }
    }
    return samples;
}

std::vector<LoadSweepRow> SimulatedProvider::load_sweep(
    std::int64_t p, const std::vector<std::int64_t>& o_list,
    const std::vector<std::int64_t>& parallelism_levels, std::int64_t trials) {
    if (trials < 1) throw ValidationError("trials must be >= 1");
    if (o_list.empty() || parallelism_levels.empty()) {
        throw ValidationError("load sweep lists must be nonempty");
    }
    std::vector<LoadSweepRow> rows;
    rows.reserve(o_list.size() * parallelism_levels.size());
    for (std::int64_t level : parallelism_levels) {
        for (std::int64_t o : o_list) {
            double best = std::numeric_limits<double>::infinity();
            for (std::int64_t trial = 0; trial < trials; ++trial) {
                best = std::min(best, sample_runtime(p, o, level));
            }
            rows.push_back({level, o, best});
        }
    }
    return rows;
}

}  // namespace inferometer
