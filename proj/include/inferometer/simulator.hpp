#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "inferometer/estimator.hpp"
#include "inferometer/runtime_model.hpp"

namespace inferometer {

/// Noise configuration for the synthetic provider.
///
/// A sampled runtime is base * contention(parallelism) * outlier_factor + eta,
/// where eta is exponential with mean base_noise_mean, the outlier factor is
/// drawn uniformly from [low, high] with probability outlier_probability
/// (1 otherwise), and contention is the deterministic multiplier
/// 1 + (contention_max - 1) * min(1, (q-1)/(contention_saturation-1)).
struct NoiseSpec {
    std::uint64_t seed = 0;
    double base_noise_mean = 0.0;        // seconds
    double outlier_probability = 0.0;    // in [0, 1]
    double outlier_multiplier_low = 1.0;
    double outlier_multiplier_high = 1.0;
    double contention_max = 1.0;         // >= 1
    std::int64_t contention_saturation = 2;

    void validate() const;
    double contention(std::int64_t parallelism) const;
};

/// Named noise presets. Known names: "noiseless", "low-noise", "stable",
/// "grande-like", "loaded". The seed in the returned spec is 0; callers
/// override it.
std::optional<NoiseSpec> noise_preset(const std::string& name);
std::vector<std::string> noise_preset_names();

/// One row of a load sweep: minimum runtime across trials at a given
/// parallelism level and output-token count.
struct LoadSweepRow {
    std::int64_t parallelism = 1;
    std::int64_t output_tokens = 1;
    double min_runtime = 0.0;
};

/// Synthetic black-box provider. Holds hidden ground-truth runtime params
/// and a single random stream; a sampled runtime is never below the
/// noiseless truth. Use one instance per logical stream; reseed by
/// constructing a new provider.
class SimulatedProvider {
public:
    SimulatedProvider(RuntimeModelParams truth, NoiseSpec noise);

    const RuntimeModelParams& truth() const { return truth_; }
    const NoiseSpec& noise() const { return noise_; }

    /// One draw. Consumes exactly three uniforms from the stream
    /// (outlier Bernoulli, outlier multiplier, additive exponential) so the
    /// sequence is reproducible from the seed alone.
    double sample_runtime(std::int64_t p, std::int64_t o, std::int64_t parallelism);

    /// Full profiling sweep: every (p, o) cell in the given grids, `trials`
    /// samples each, all at the same parallelism level.
    std::vector<ProfileSample> run_trials(const std::vector<std::int64_t>& grid_p,
                                          const std::vector<std::int64_t>& grid_o,
                                          std::int64_t trials, std::int64_t parallelism);

    /// Minimum runtime across trials for each (parallelism, o) pair at a
    /// fixed prompt size.
    std::vector<LoadSweepRow> load_sweep(std::int64_t p, const std::vector<std::int64_t>& o_list,
                                         const std::vector<std::int64_t>& parallelism_levels,
                                         std::int64_t trials);

private:
    double next_uniform();

    RuntimeModelParams truth_;
    NoiseSpec noise_;
    std::mt19937_64 stream_;
};

}  // namespace inferometer
