#pragma once

#include "stochcrf/field_model.hpp"

#include <string>
#include <string_view>

namespace stochcrf {

enum class DivergenceType { BregmanSqNorm, KL, Hellinger };

// Similarity maps a divergence D to exp(-D/tau) so similar nodes connect more
// often. Literal passes D through unchanged.
enum class ConnectivityMode { Similarity, Literal };

struct DivergenceKind {
    DivergenceType type = DivergenceType::KL;
    double tau = 1.0;
    ConnectivityMode mode = ConnectivityMode::Similarity;

    // Bregman operates on the Dirac encoding; KL and Hellinger on histograms.
    StatsKind stats_kind() const {
        return type == DivergenceType::BregmanSqNorm ? StatsKind::Dirac : StatsKind::Histogram;
    }
};

std::string_view to_string(DivergenceType t);
std::string_view to_string(ConnectivityMode m);
DivergenceType parse_divergence(std::string_view name);
ConnectivityMode parse_mode(std::string_view name);

// Bregman divergence with phi(v) = |v|^2, i.e. |Si - Sj|^2.
double bregman_sqnorm(const StatsView& si, const StatsView& sj);

// sum_l si_l * ln(si_l / sj_l) over all channels. Requires strictly positive bins.
double kl(const StatsView& si, const StatsView& sj);

// (1/sqrt 2) * sum_l (sqrt sj_l - sqrt si_l)^2, summed over channels; no outer root.
double hellinger(const StatsView& si, const StatsView& sj);

double divergence(DivergenceType type, const StatsView& si, const StatsView& sj);

double connectivity(double d, double tau, ConnectivityMode mode);

inline double connectivity(const DivergenceKind& kind, const StatsView& si, const StatsView& sj) {
    return connectivity(divergence(kind.type, si, sj), kind.tau, kind.mode);
}

} // namespace stochcrf
