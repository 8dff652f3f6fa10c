#pragma once

#include "stochcrf/cliques.hpp"
#include "stochcrf/divergence.hpp"
#include "stochcrf/energy.hpp"
#include "stochcrf/image.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>

namespace stochcrf {

struct RunConfig {
    DivergenceKind divergence;
    int window = kDefaultStatsWindow;
    int bins = kDefaultHistogramBins;
    std::size_t q = kDefaultClusterCount;
    double target_degree = 30.0;
    EnergyParams energy;
    double epsilon = 0.1;
    std::uint64_t seed = 1;

    // Throws config error on out-of-range values.
    void validate() const;
    nlohmann::json to_json() const;
};

// Keys: divergence, mode, tau, window, bins, q, degree, sigma, beta,
// lambda_local, lambda_long, sigma_in_exponent, epsilon, seed.
void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value);

// `key = value` lines; '#' starts a comment.
void load_config_file(RunConfig& cfg, const std::string& path);

// Image-level state that does not depend on scribbles: neighborhood stats
// and the clustering. Immutable once built.
struct PreparedImage {
    ImageGrid image;
    std::shared_ptr<const StatsField> stats;
    std::optional<ClusterModel> clusters;  // absent when the target degree is 0
    double stats_ms = 0.0;
    double cluster_ms = 0.0;

    // Parameters this preparation depends on.
    StatsKind stats_kind = StatsKind::Histogram;
    int window = 0;
    int bins = 0;
    std::size_t q = 0;
    std::uint64_t seed = 0;

    bool matches(const RunConfig& cfg) const;
};

std::shared_ptr<const PreparedImage> prepare_image(ImageGrid image, const RunConfig& cfg);

struct SegmentResult {
    SegmentationMask mask;
    double energy = 0.0;
    double gamma = 0.0;
    CliqueSet cliques;
    DegreeReport degrees;
    std::map<std::string, double> timings_ms;

    nlohmann::json report() const;
};

// Full pipeline for one scribble set. `sample_seed` drives clique sampling;
// the clustering uses the seed the image was prepared with.
SegmentResult segment(const PreparedImage& prepared, const ScribbleMask& scribbles, const RunConfig& cfg,
                      std::uint64_t sample_seed);

inline SegmentResult segment(const PreparedImage& prepared, const ScribbleMask& scribbles, const RunConfig& cfg) {
    return segment(prepared, scribbles, cfg, cfg.seed);
}

} // namespace stochcrf
