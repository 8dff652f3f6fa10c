#include "stochcrf/energy.hpp"

#include "stochcrf/error.hpp"

#include <cmath>

namespace stochcrf {

namespace {

void check_terms(const std::vector<PairTerm>& terms, std::size_t n) {
    for (const auto& t : terms) {
        if (!(t.theta >= 0.0) || !std::isfinite(t.theta))
            throw Error(ErrorKind::Construction, "pairwise weight must be finite and non-negative");
        if (t.i >= n || t.j >= n || t.i == t.j) throw Error(ErrorKind::Construction, "pairwise term endpoints invalid");
    }
}

} // namespace

EnergyModel::EnergyModel(std::vector<UnaryCost> unary, std::vector<PairTerm> local_terms,
                         std::vector<PairTerm> long_terms, double lambda_local, double lambda_long)
    : unary_(std::move(unary)), local_(std::move(local_terms)), long_(std::move(long_terms)),
      lambda_local_(lambda_local), lambda_long_(lambda_long) {
    if (!(lambda_local >= 0.0) || !(lambda_long >= 0.0))
        throw Error(ErrorKind::Construction, "trade-off weights must be non-negative");
    for (const auto& u : unary_)
        if (!std::isfinite(u.background) || !std::isfinite(u.foreground))
            throw Error(ErrorKind::Construction, "unary costs must be finite");
    check_terms(local_, unary_.size());
    check_terms(long_, unary_.size());
}

double AppearanceModel::log_likelihood(std::span<const double> pixel, bool fg) const {
    const auto& hist = fg ? foreground : background;
    double ll = 0.0;
    for (int c = 0; c < channels; ++c) ll += std::log(hist[static_cast<std::size_t>(c) * bins + histogram_bin(pixel[c], bins)]);
    return ll;
}

AppearanceModel fit_appearance_model(const ImageGrid& img, const ScribbleMask& scribbles, int bins) {
    if (scribbles.width != img.width() || scribbles.height != img.height())
        throw Error(ErrorKind::DimensionMismatch, "scribble mask does not match image");
    if (bins < 2) throw Error(ErrorKind::Domain, "histogram needs at least 2 bins");
    if (!scribbles.has_both_classes()) throw Error(ErrorKind::MissingSeeds, "need foreground and background scribbles");

    const int ch = img.channels();
    AppearanceModel model{ch, bins, std::vector<double>(static_cast<std::size_t>(ch) * bins, 1.0),
                          std::vector<double>(static_cast<std::size_t>(ch) * bins, 1.0)};
    for (std::size_t i = 0; i < img.node_count(); ++i) {
        const Scribble s = scribbles.labels[i];
        if (s == Scribble::Unmarked) continue;
        auto& hist = s == Scribble::Foreground ? model.foreground : model.background;
        auto px = img.pixel(i);
        for (int c = 0; c < ch; ++c) hist[static_cast<std::size_t>(c) * bins + histogram_bin(px[c], bins)] += 1.0;
    }
    for (auto* hist : {&model.foreground, &model.background}) {
        for (int c = 0; c < ch; ++c) {
            double total = 0.0;
            for (int b = 0; b < bins; ++b) total += (*hist)[static_cast<std::size_t>(c) * bins + b];
            for (int b = 0; b < bins; ++b) (*hist)[static_cast<std::size_t>(c) * bins + b] /= total;
        }
    }
    return model;
}

std::vector<UnaryCost> unary_potentials(const ImageGrid& img, const AppearanceModel& model,
                                        const ScribbleMask& scribbles) {
    if (scribbles.width != img.width() || scribbles.height != img.height())
        throw Error(ErrorKind::DimensionMismatch, "scribble mask does not match image");
    std::vector<UnaryCost> unary(img.node_count());
    for (std::size_t i = 0; i < img.node_count(); ++i) {
        switch (scribbles.labels[i]) {
        case Scribble::Foreground: unary[i] = {kHardConstraint, 0.0}; break;
        case Scribble::Background: unary[i] = {0.0, kHardConstraint}; break;
        case Scribble::Unmarked:
            unary[i] = {-model.log_likelihood(img.pixel(i), false), -model.log_likelihood(img.pixel(i), true)};
            break;
        }
    }
    return unary;
}

double channel_distance(std::span<const double> xi, std::span<const double> xj) {
    double sum = 0.0;
    for (std::size_t c = 0; c < xi.size(); ++c) {
        const double d = xi[c] - xj[c];
        sum += d * d;
    }
    return std::sqrt(sum);
}

double theta_local(std::span<const double> xi, std::span<const double> xj, double sigma, bool sigma_in_exponent) {
    const double d = channel_distance(xi, xj);
    if (sigma_in_exponent) return 0.05 + 0.95 * std::exp(-0.5 * d * d / (sigma * sigma));
    return 0.05 + 0.95 * std::exp(-0.5 * d * d) / sigma;
}

double theta_long(std::span<const double> xi, std::span<const double> xj, double beta) {
    return 1.0 / (1.0 + std::exp(-beta * channel_distance(xi, xj)));
}

EnergyModel build_energy(const ImageGrid& img, const ScribbleMask& scribbles, const AppearanceModel& model,
                         std::span<const NodePair> long_range, const EnergyParams& params) {
    if (!(params.sigma > 0.0)) throw Error(ErrorKind::Domain, "sigma must be positive");
    auto unary = unary_potentials(img, model, scribbles);

    std::vector<PairTerm> local;
    for (auto [i, j] : local_pairs(img))
        local.push_back({i, j, theta_local(img.pixel(i), img.pixel(j), params.sigma, params.sigma_in_exponent)});

    std::vector<PairTerm> long_terms;
    long_terms.reserve(long_range.size());
    for (auto [i, j] : long_range) long_terms.push_back({i, j, theta_long(img.pixel(i), img.pixel(j), params.beta)});

    return EnergyModel(std::move(unary), std::move(local), std::move(long_terms), params.lambda_local,
                       params.lambda_long);
}

double total_energy(const EnergyModel& em, std::span<const std::uint8_t> labels) {
    if (labels.size() != em.node_count()) throw Error(ErrorKind::DimensionMismatch, "labeling size mismatch");
    double unary = 0.0;
    for (std::size_t i = 0; i < labels.size(); ++i) unary += em.unary()[i](labels[i]);
    auto cut = [&](const std::vector<PairTerm>& terms) {
        double s = 0.0;
        for (const auto& t : terms)
            if (labels[t.i] != labels[t.j]) s += t.theta;
        return s;
    };
    return unary + em.lambda_local() * cut(em.local_terms()) + em.lambda_long() * cut(em.long_terms());
}

double total_energy(const EnergyModel& em, const SegmentationMask& mask) { return total_energy(em, mask.labels); }

} // namespace stochcrf
