#include "stochcrf/divergence.hpp"

#include "stochcrf/error.hpp"

#include <cmath>
#include <numbers>

namespace stochcrf {

namespace {

void require_compatible(const StatsView& a, const StatsView& b) {
    if (a.kind != b.kind || a.values.size() != b.values.size())
        throw Error(ErrorKind::IncompatibleStats, "stats differ in kind or dimension");
}

void require_histograms(const StatsView& a, const StatsView& b) {
    require_compatible(a, b);
    if (a.kind != StatsKind::Histogram) throw Error(ErrorKind::IncompatibleStats, "histogram stats required");
}

} // namespace

std::string_view to_string(DivergenceType t) {
    switch (t) {
    case DivergenceType::BregmanSqNorm: return "bregman";
    case DivergenceType::KL: return "kl";
    case DivergenceType::Hellinger: return "hellinger";
    }
    return "unknown";
}

std::string_view to_string(ConnectivityMode m) {
    return m == ConnectivityMode::Similarity ? "similarity" : "literal";
}

DivergenceType parse_divergence(std::string_view name) {
    if (name == "bregman") return DivergenceType::BregmanSqNorm;
    if (name == "kl") return DivergenceType::KL;
    if (name == "hellinger") return DivergenceType::Hellinger;
    throw Error(ErrorKind::Config, "unknown divergence '" + std::string(name) + "'");
}

ConnectivityMode parse_mode(std::string_view name) {
    if (name == "similarity") return ConnectivityMode::Similarity;
    if (name == "literal") return ConnectivityMode::Literal;
    throw Error(ErrorKind::Config, "unknown connectivity mode '" + std::string(name) + "'");
}

double bregman_sqnorm(const StatsView& si, const StatsView& sj) {
    if (si.values.size() != sj.values.size()) throw Error(ErrorKind::IncompatibleStats, "dimension mismatch");
    double sum = 0.0;
    for (std::size_t l = 0; l < si.values.size(); ++l) {
        const double d = si.values[l] - sj.values[l];
        sum += d * d;
    }
    return sum;
}

double kl(const StatsView& si, const StatsView& sj) {
    require_histograms(si, sj);
    double sum = 0.0;
    for (std::size_t l = 0; l < si.values.size(); ++l) {
        const double p = si.values[l];
        const double q = sj.values[l];
        if (!(p > 0.0) || !(q > 0.0)) throw Error(ErrorKind::Domain, "KL needs strictly positive bins (unsmoothed histogram?)");
        sum += p * std::log(p / q);
    }
    // Rounding can leave a -1e-17 residue for identical inputs.
    return sum < 0.0 ? 0.0 : sum;
}

double hellinger(const StatsView& si, const StatsView& sj) {
    require_histograms(si, sj);
    double sum = 0.0;
    for (std::size_t l = 0; l < si.values.size(); ++l) {
        const double p = si.values[l];
        const double q = sj.values[l];
        if (p < 0.0 || q < 0.0) throw Error(ErrorKind::Domain, "negative histogram bin");
        const double d = std::sqrt(q) - std::sqrt(p);
        sum += d * d;
    }
    return sum / std::numbers::sqrt2;
}

double divergence(DivergenceType type, const StatsView& si, const StatsView& sj) {
    switch (type) {
    case DivergenceType::BregmanSqNorm: require_compatible(si, sj); return bregman_sqnorm(si, sj);
    case DivergenceType::KL: return kl(si, sj);
    case DivergenceType::Hellinger: return hellinger(si, sj);
    }
    throw Error(ErrorKind::Domain, "unknown divergence type");
}

double connectivity(double d, double tau, ConnectivityMode mode) {
    if (mode == ConnectivityMode::Literal) return d;
    return std::exp(-d / tau);
}

} // namespace stochcrf
