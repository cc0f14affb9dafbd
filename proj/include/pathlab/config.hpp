#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "pathlab/bundles.hpp"
#include "pathlab/lyapunov.hpp"

namespace pathlab {

struct LeafSpec {
    std::vector<int> bundle;  // 1-based eigen-indices
    std::vector<std::vector<double>> points;
    std::vector<double> radii;
    double delta = 5e-3;
    int steps = 10;
    std::size_t budget = 2'000'000;
    int burn_in = 0;
};

struct MonteCarloSpec {
    std::int64_t samples = 100'000;
    AlignmentOptions alignment;
    Estimator estimator = Estimator::Uniform;
    std::int64_t orbit_length = 0;  // 0 skips the Birkhoff cross-check
    std::vector<double> orbit_start;
    int spectrum_points = 8;
    int spectrum_steps = 2000;
};

struct DetectSpec {
    std::vector<int> bundle{2};
    std::vector<int> closedness_bundle{1, 2};
    double sigma = 3.0;
    double floor = 1e-9;
    std::int64_t samples = 200'000;
    Estimator estimator = Estimator::SupportAdapted;
    int domination_steps = 3;
    std::int64_t domination_samples = 2000;
    int closedness_steps = 3;
    std::int64_t closedness_samples = 1000;
    std::int64_t c1_samples = 20'000;
    std::int64_t volume_samples = 5000;
    std::int64_t cross_check_samples = 0;  // extra uniform estimate, 0 to skip
};

struct SweepSpec {
    int rotation = 0;  // 0-based index into map.rotations
    std::vector<double> theta_max;
    std::vector<double> rho;
};

struct ExperimentConfig {
    nlohmann::json map;  // as given; rebuilt per sweep cell
    std::vector<int> splitting;
    std::uint64_t seed = 1;
    std::vector<LeafSpec> leaves;
    MonteCarloSpec monte_carlo;
    DetectSpec detect;
    std::optional<SweepSpec> sweep;
};

/// Parses and validates. Throws ConfigError carrying the line of the offending value.
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);

/// Line (1-based) of `pointer` in `text`: object members by their key, a missing last
/// component by its parent. 0 if nothing on the path can be found.
int locate_line(const std::string& text, const std::string& pointer);

} // namespace pathlab
