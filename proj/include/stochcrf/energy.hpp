#pragma once

#include "stochcrf/field_model.hpp"
#include "stochcrf/image.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace stochcrf {

// Cost used to pin scribbled pixels to their class. Finite so flow
// arithmetic stays in range.
inline constexpr double kHardConstraint = 1e9;

struct UnaryCost {
    double background = 0.0;  // label 0
    double foreground = 0.0;  // label 1

    double operator()(std::uint8_t label) const { return label ? foreground : background; }
};

struct PairTerm {
    std::size_t i = 0;
    std::size_t j = 0;
    double theta = 0.0;
};

struct EnergyParams {
    double sigma = 1.0;
    double beta = 1.0;
    double lambda_local = 1.0;
    double lambda_long = 1.0;
    // Moves sigma into the exponent of the local potential (Gaussian width)
    // instead of dividing the exponential term.
    bool sigma_in_exponent = false;
    int bins = kDefaultHistogramBins;
};

// Binary pairwise energy. Every pairwise term is theta * |yi - yj| with
// theta >= 0, so the model is always min-cut representable.
class EnergyModel {
public:
    EnergyModel() = default;
    EnergyModel(std::vector<UnaryCost> unary, std::vector<PairTerm> local_terms, std::vector<PairTerm> long_terms,
                double lambda_local = 1.0, double lambda_long = 1.0);

    std::size_t node_count() const { return unary_.size(); }
    const std::vector<UnaryCost>& unary() const { return unary_; }
    const std::vector<PairTerm>& local_terms() const { return local_; }
    const std::vector<PairTerm>& long_terms() const { return long_; }
    double lambda_local() const { return lambda_local_; }
    double lambda_long() const { return lambda_long_; }

private:
    std::vector<UnaryCost> unary_;
    std::vector<PairTerm> local_;
    std::vector<PairTerm> long_;
    double lambda_local_ = 1.0;
    double lambda_long_ = 1.0;
};

// Per-channel add-one-smoothed histograms of the scribbled pixels of each class.
struct AppearanceModel {
    int channels = 1;
    int bins = kDefaultHistogramBins;
    std::vector<double> foreground;  // channels * bins
    std::vector<double> background;

    double log_likelihood(std::span<const double> pixel, bool fg) const;
};

AppearanceModel fit_appearance_model(const ImageGrid& img, const ScribbleMask& scribbles, int bins);

// Negative log-likelihood costs; scribbled pixels get 0 for their class and
// kHardConstraint for the other.
std::vector<UnaryCost> unary_potentials(const ImageGrid& img, const AppearanceModel& model,
                                        const ScribbleMask& scribbles);

double channel_distance(std::span<const double> xi, std::span<const double> xj);

// 0.05 + 0.95 * exp(-0.5 |xi - xj|^2) / sigma
double theta_local(std::span<const double> xi, std::span<const double> xj, double sigma,
                   bool sigma_in_exponent = false);

// 1 / (1 + exp(-beta |xi - xj|))
double theta_long(std::span<const double> xi, std::span<const double> xj, double beta);

EnergyModel build_energy(const ImageGrid& img, const ScribbleMask& scribbles, const AppearanceModel& model,
                         std::span<const NodePair> long_range, const EnergyParams& params);

double total_energy(const EnergyModel& em, std::span<const std::uint8_t> labels);
double total_energy(const EnergyModel& em, const SegmentationMask& mask);

} // namespace stochcrf
