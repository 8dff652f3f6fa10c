#include "stochcrf/pipeline.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/inference.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

namespace stochcrf {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

double parse_double(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        const double v = std::stod(value, &used);
        if (used != value.size() || !std::isfinite(v)) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "invalid number for " + key + ": '" + value + "'");
    }
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    try {
        std::size_t used = 0;
        if (!value.empty() && value[0] == '-') throw std::invalid_argument(value);
        const auto v = std::stoull(value, &used);
        if (used != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorKind::Config, "invalid integer for " + key + ": '" + value + "'");
    }
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw Error(ErrorKind::Config, "invalid boolean for " + key + ": '" + value + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

void RunConfig::validate() const {
    if (!(divergence.tau > 0.0)) throw Error(ErrorKind::Config, "tau must be positive");
    if (window < 1 || window % 2 == 0) throw Error(ErrorKind::Config, "window must be odd and >= 1");
    if (bins < 2) throw Error(ErrorKind::Config, "bins must be >= 2");
    if (q < 1) throw Error(ErrorKind::Config, "q must be >= 1");
    if (!(target_degree >= 0.0)) throw Error(ErrorKind::Config, "degree must be >= 0");
    if (!(energy.sigma > 0.0)) throw Error(ErrorKind::Config, "sigma must be positive");
    if (!(energy.lambda_local >= 0.0) || !(energy.lambda_long >= 0.0))
        throw Error(ErrorKind::Config, "lambda weights must be non-negative");
    if (!(epsilon > 0.0 && epsilon <= 1.0)) throw Error(ErrorKind::Config, "epsilon must lie in (0,1]");
}

nlohmann::json RunConfig::to_json() const {
    return {
        {"divergence", std::string(to_string(divergence.type))},
        {"mode", std::string(to_string(divergence.mode))},
        {"tau", divergence.tau},
        {"window", window},
        {"bins", bins},
        {"q", q},
        {"degree", target_degree},
        {"sigma", energy.sigma},
        {"beta", energy.beta},
        {"lambda_local", energy.lambda_local},
        {"lambda_long", energy.lambda_long},
        {"sigma_in_exponent", energy.sigma_in_exponent},
        {"epsilon", epsilon},
        {"seed", seed},
    };
}

void apply_setting(RunConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "divergence")
        cfg.divergence.type = parse_divergence(value);
    else if (key == "mode")
        cfg.divergence.mode = parse_mode(value);
    else if (key == "tau")
        cfg.divergence.tau = parse_double(key, value);
    else if (key == "window")
        cfg.window = static_cast<int>(parse_uint(key, value));
    else if (key == "bins")
        cfg.bins = static_cast<int>(parse_uint(key, value));
    else if (key == "q")
        cfg.q = parse_uint(key, value);
    else if (key == "degree")
        cfg.target_degree = parse_double(key, value);
    else if (key == "sigma")
        cfg.energy.sigma = parse_double(key, value);
    else if (key == "beta")
        cfg.energy.beta = parse_double(key, value);
    else if (key == "lambda_local")
        cfg.energy.lambda_local = parse_double(key, value);
    else if (key == "lambda_long")
        cfg.energy.lambda_long = parse_double(key, value);
    else if (key == "sigma_in_exponent")
        cfg.energy.sigma_in_exponent = parse_bool(key, value);
    else if (key == "epsilon")
        cfg.epsilon = parse_double(key, value);
    else if (key == "seed")
        cfg.seed = parse_uint(key, value);
    else
        throw Error(ErrorKind::Config, "unknown setting '" + key + "'");
    cfg.energy.bins = cfg.bins;
}

void load_config_file(RunConfig& cfg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::Io, "cannot read config " + path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw Error(ErrorKind::Config, path + ":" + std::to_string(lineno) + ": expected key = value");
        apply_setting(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
}

bool PreparedImage::matches(const RunConfig& cfg) const {
    const bool need_clusters = cfg.target_degree > 0.0;
    if (stats_kind != cfg.divergence.stats_kind() || window != cfg.window) return false;
    if (stats_kind == StatsKind::Histogram && bins != cfg.bins) return false;
    if (need_clusters && (!clusters || q != cfg.q || seed != cfg.seed)) return false;
    return true;
}

std::shared_ptr<const PreparedImage> prepare_image(ImageGrid image, const RunConfig& cfg) {
    cfg.validate();
    auto prepared = std::make_shared<PreparedImage>();
    prepared->stats_kind = cfg.divergence.stats_kind();
    prepared->window = cfg.window;
    prepared->bins = cfg.bins;
    prepared->q = cfg.q;
    prepared->seed = cfg.seed;

    auto t0 = Clock::now();
    prepared->stats = std::make_shared<const StatsField>(
        compute_encoded_stats(image, cfg.window, prepared->stats_kind, cfg.bins));
    prepared->stats_ms = elapsed_ms(t0);

    if (cfg.target_degree > 0.0) {
        t0 = Clock::now();
        const std::size_t q = std::min(cfg.q, image.node_count());
        prepared->clusters = cluster_nodes(prepared->stats, node_positions(image.width(), image.height()), q,
                                           cfg.seed, image.width());
        prepared->cluster_ms = elapsed_ms(t0);
    }
    prepared->image = std::move(image);
    return prepared;
}

SegmentResult segment(const PreparedImage& prepared, const ScribbleMask& scribbles, const RunConfig& cfg,
                      std::uint64_t sample_seed) {
    cfg.validate();
    const ImageGrid& img = prepared.image;
    if (scribbles.width != img.width() || scribbles.height != img.height())
        throw Error(ErrorKind::DimensionMismatch, "scribble mask does not match image");
    if (!scribbles.has_both_classes()) throw Error(ErrorKind::MissingSeeds, "need foreground and background scribbles");
    if (!prepared.matches(cfg)) throw Error(ErrorKind::Config, "prepared image does not match configuration");

    SegmentResult result;
    result.timings_ms["stats"] = prepared.stats_ms;
    result.timings_ms["cluster"] = prepared.cluster_ms;

    auto t0 = Clock::now();
    if (cfg.target_degree > 0.0) {
        const ClusterModel& model = *prepared.clusters;
        result.gamma = calibrate_gamma(model, cfg.divergence, cfg.target_degree);
        result.timings_ms["calibrate"] = elapsed_ms(t0);
        t0 = Clock::now();
        result.cliques = sample_cliques(model, cfg.divergence, result.gamma, sample_seed);
        result.timings_ms["sample"] = elapsed_ms(t0);
    }
    result.cliques.seed = sample_seed;
    result.cliques.gamma = result.gamma;
    result.cliques.expected_degree_target = cfg.target_degree;
    result.degrees = degree_report(result.cliques, img.node_count(), cfg.epsilon);

    t0 = Clock::now();
    const AppearanceModel appearance = fit_appearance_model(img, scribbles, cfg.bins);
    const auto pairs = result.cliques.pairs();
    const EnergyModel em = build_energy(img, scribbles, appearance, pairs, cfg.energy);
    result.timings_ms["energy"] = elapsed_ms(t0);

    t0 = Clock::now();
    FlowNetwork net = build_st_graph(em);
    const MaxFlowResult flow = max_flow(net);
    result.timings_ms["maxflow"] = elapsed_ms(t0);

    result.mask = extract_labels(flow, img.width(), img.height());
    result.energy = total_energy(em, result.mask);
    result.mask.meta = {sample_seed, result.gamma, std::string(to_string(cfg.divergence.type)), cfg.target_degree};
    return result;
}

nlohmann::json SegmentResult::report() const {
    nlohmann::json timings = nlohmann::json::object();
    for (const auto& [k, v] : timings_ms) timings[k] = v;
    return {
        {"energy", energy},
        {"gamma", gamma},
        {"seed", mask.meta.seed},
        {"divergence", mask.meta.divergence},
        {"expected_degree", mask.meta.expected_degree},
        {"edges", degrees.edges},
        {"degree_mean", degrees.mean_degree},
        {"degree_min", degrees.min_degree},
        {"degree_max", degrees.max_degree},
        {"implied_p", degrees.implied_p},
        {"bounds",
         {{"epsilon", degrees.bounds.epsilon},
          {"p_lower", degrees.bounds.p_lower},
          {"p_upper", degrees.bounds.p_upper},
          {"below_connectedness", degrees.below_connectedness},
          {"above_cut_bound", degrees.above_cut_bound}}},
        {"timings_ms", timings},
    };
}

} // namespace stochcrf
