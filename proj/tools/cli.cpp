#include "cli.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/metrics.hpp"
#include "stochcrf/parallel.hpp"
#include "stochcrf/pipeline.hpp"
#include "stochcrf/random_graph.hpp"
#include "stochcrf/service.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace stochcrf::cli {

namespace fs = std::filesystem;

namespace {

struct CommonOptions {
    std::string config_path;
    std::map<std::string, std::string> overrides;  // setting key -> raw value
    unsigned threads = 0;
};

void add_common(CLI::App* sub, CommonOptions& o) {
    sub->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--threads", o.threads, "worker threads (0 = all cores)");
    auto setting = [&](const std::string& flag, const std::string& key, const std::string& help) {
        sub->add_option_function<std::string>(
            flag, [&o, key](const std::string& v) { o.overrides[key] = v; }, help);
    };
    setting("--seed", "seed", "random seed");
    setting("--divergence", "divergence", "bregman | kl | hellinger");
    setting("--mode", "mode", "similarity | literal");
    setting("--degree", "degree", "target mean long-range degree (0 = local only)");
    setting("--q", "q", "cluster count");
    setting("--sigma", "sigma", "local potential scale");
    setting("--beta", "beta", "long-range potential slope");
    setting("--tau", "tau", "connectivity temperature");
    setting("--epsilon", "epsilon", "bound report tolerance");
    setting("--window", "window", "statistics window (odd)");
    setting("--bins", "bins", "histogram bins per channel");
}

RunConfig resolve(const CommonOptions& o) {
    RunConfig cfg;
    if (!o.config_path.empty()) load_config_file(cfg, o.config_path);
    for (const auto& [k, v] : o.overrides) apply_setting(cfg, k, v);
    cfg.validate();
    set_num_threads(o.threads);
    return cfg;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Io: return kExitMissingFile;
    case ErrorKind::MissingSeeds: return kExitMissingSeeds;
    case ErrorKind::Config:
    case ErrorKind::Domain:
    case ErrorKind::InvalidWindow:
    case ErrorKind::IncompatibleStats: return kExitBadConfig;
    default: return kExitFailure;
    }
}

void require_file(const std::string& path) {
    if (!fs::is_regular_file(path)) throw Error(ErrorKind::Io, "no such file: " + path);
}

double total_ms(const nlohmann::json& timings) {
    double t = 0.0;
    for (const auto& [k, v] : timings.items()) t += v.get<double>();
    return t;
}

// ---- segment --------------------------------------------------------------

struct SegmentArgs {
    std::string image, scribbles, out = "mask.png", report, cliques;
};

int cmd_segment(const SegmentArgs& a, const CommonOptions& o, std::ostream& out) {
    const RunConfig cfg = resolve(o);
    require_file(a.image);
    require_file(a.scribbles);
    auto img = load_image(a.image);
    const auto scribbles = load_scribbles(a.scribbles);
    if (scribbles.width != img.width() || scribbles.height != img.height())
        throw Error(ErrorKind::Config, "scribble image size differs from the input image");
    const auto prepared = prepare_image(std::move(img), cfg);
    const auto result = segment(*prepared, scribbles, cfg);
    save_mask_png(result.mask, a.out);

    auto report = result.report();
    report["image"] = a.image;
    report["scribbles"] = a.scribbles;
    report["mask"] = a.out;
    report["config"] = cfg.to_json();
    const std::string report_path = a.report.empty() ? fs::path(a.out).replace_extension(".json").string() : a.report;
    std::ofstream(report_path) << report.dump(2) << '\n';
    if (!a.cliques.empty()) {
        std::ofstream csv(a.cliques);
        write_clique_csv(csv, result.cliques);
    }
    out << "mask " << a.out << " (" << result.mask.width << "x" << result.mask.height << ")\n"
        << "energy " << std::setprecision(10) << result.energy << "\n"
        << "edges " << result.degrees.edges << " mean degree " << result.degrees.mean_degree << "\n"
        << "below_connectedness " << result.degrees.below_connectedness << " above_cut_bound "
        << result.degrees.above_cut_bound << "\n"
        << "report " << report_path << "\n";
    return kExitOk;
}

// ---- eval -----------------------------------------------------------------

bool is_image_file(const fs::path& p) {
    static const std::set<std::string> exts{".png", ".pgm", ".ppm", ".pnm", ".pbm", ".bmp", ".tif", ".tiff"};
    auto ext = p.extension().string();
    for (auto& ch : ext) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
    return exts.count(ext) > 0;
}

std::map<std::string, fs::path> images_by_stem(const fs::path& dir) {
    std::map<std::string, fs::path> out;
    if (!fs::is_directory(dir)) return out;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && is_image_file(e.path())) out[e.path().stem().string()] = e.path();
    return out;
}

struct EvalRow {
    std::string name;
    double region_f1 = 0, boundary_f1 = 0, iou = 0;
    std::optional<double> runtime_ms;
};

struct EvalArgs {
    std::string pred_dir, gt_dir, csv_out, summary_out;
};

int cmd_eval(const EvalArgs& a, std::ostream& out, std::ostream& err) {
    const auto gt = images_by_stem(a.gt_dir);
    if (gt.empty()) {
        err << "error: no ground-truth masks in " << a.gt_dir << "\n";
        return kExitMissingFile;
    }
    const auto pred = images_by_stem(a.pred_dir);
    for (const auto& [stem, path] : pred)
        if (!gt.count(stem)) err << "warning: no ground truth for " << path.string() << ", skipped\n";

    std::vector<EvalRow> rows;
    for (const auto& [stem, gpath] : gt) {
        auto it = pred.find(stem);
        if (it == pred.end()) {
            err << "warning: no prediction for " << gpath.string() << ", skipped\n";
            continue;
        }
        const auto p = load_mask(it->second.string());
        const auto g = load_mask(gpath.string());
        if (p.width != g.width || p.height != g.height) {
            err << "warning: size mismatch for " << stem << ", skipped\n";
            continue;
        }
        EvalRow row;
        row.name = stem;
        const auto c = confusion_counts(p, g);
        row.region_f1 = region_f1(c);
        row.iou = iou(c);
        row.boundary_f1 = boundary_f1(p, g);
        const auto report = fs::path(a.pred_dir) / (stem + ".json");
        if (fs::is_regular_file(report)) {
            try {
                std::ifstream in(report);
                const auto j = nlohmann::json::parse(in);
                if (j.contains("timings_ms")) row.runtime_ms = total_ms(j.at("timings_ms"));
            } catch (const std::exception&) {
                err << "warning: unreadable report " << report.string() << "\n";
            }
        }
        rows.push_back(row);
    }
    if (rows.empty()) {
        err << "error: every image was skipped\n";
        return kExitMissingFile;
    }

    EvalRow avg;
    avg.name = "average";
    double rt = 0.0;
    std::size_t rt_count = 0;
    for (const auto& r : rows) {
        avg.region_f1 += r.region_f1;
        avg.boundary_f1 += r.boundary_f1;
        avg.iou += r.iou;
        if (r.runtime_ms) {
            rt += *r.runtime_ms;
            ++rt_count;
        }
    }
    const double n = static_cast<double>(rows.size());
    avg.region_f1 /= n;
    avg.boundary_f1 /= n;
    avg.iou /= n;
    if (rt_count) avg.runtime_ms = rt / static_cast<double>(rt_count);

    std::ostringstream csv;
    csv << std::setprecision(6) << std::fixed;
    csv << "name,region_f1,boundary_f1,iou,runtime_ms\n";
    auto emit = [&](const EvalRow& r) {
        csv << r.name << ',' << r.region_f1 << ',' << r.boundary_f1 << ',' << r.iou << ',';
        if (r.runtime_ms) csv << std::setprecision(3) << *r.runtime_ms << std::setprecision(6);
        csv << '\n';
    };
    for (const auto& r : rows) emit(r);
    emit(avg);
    if (a.csv_out.empty())
        out << csv.str();
    else
        std::ofstream(a.csv_out) << csv.str();

    std::ostringstream summary;
    summary << std::setprecision(5) << std::fixed << "images: " << rows.size() << "\n"
            << "region_f1: " << avg.region_f1 << "\n"
            << "boundary_f1: " << avg.boundary_f1 << "\n"
            << "iou: " << avg.iou << "\n";
    if (avg.runtime_ms) summary << std::setprecision(1) << "runtime_ms: " << *avg.runtime_ms << "\n";
    if (a.summary_out.empty())
        err << summary.str();
    else
        std::ofstream(a.summary_out) << summary.str();
    return kExitOk;
}

// ---- bounds / graphlab ----------------------------------------------------

int cmd_bounds(std::size_t n, double eps, bool csv, std::ostream& out) {
    const auto b = sparsification_bounds(n, eps);
    if (csv) {
        out << "n,epsilon,p_lower,p_upper,degree_lower,max_edges\n"
            << std::setprecision(10) << b.n << ',' << b.epsilon << ',' << b.p_lower << ',' << b.p_upper << ','
            << b.degree_lower << ',' << b.max_edges << '\n';
        return kExitOk;
    }
    out << "n             " << b.n << "\n"
        << "epsilon       " << b.epsilon << "\n"
        << std::scientific << std::setprecision(4) << "p_lower       " << b.p_lower << "\n"
        << std::fixed << "p_upper       " << b.p_upper << "   (" << std::setprecision(8) << b.p_upper << ")\n"
        << std::setprecision(4) << "degree_lower  " << b.degree_lower << "   (" << std::llround(b.degree_lower)
        << " neighbours)\n"
        << std::scientific << "max_edges     " << b.max_edges << "\n";
    return kExitOk;
}

struct GraphLabArgs {
    std::vector<std::size_t> n{1000};
    std::vector<double> p, c_log, c_lin;
    std::size_t trials = 100;
    std::uint64_t seed = 1;
};

int cmd_graphlab(const GraphLabArgs& a, std::ostream& out) {
    std::vector<std::pair<std::size_t, double>> points;
    for (auto n : a.n) {
        const double nd = static_cast<double>(n);
        for (double p : a.p) points.emplace_back(n, p);
        for (double c : a.c_log) points.emplace_back(n, std::min(1.0, c * std::log(nd) / nd));
        for (double c : a.c_lin) points.emplace_back(n, std::min(1.0, c / nd));
    }
    if (points.empty()) throw Error(ErrorKind::Config, "give at least one of --p, --c-log, --c-lin");
    out << "n,p,trials,fraction_connected,mean_largest_component\n" << std::setprecision(8);
    for (auto [n, p] : points) {
        const auto r = gnp_regime(n, p, a.trials, a.seed);
        out << r.n << ',' << r.p << ',' << r.trials << ',' << r.fraction_connected << ','
            << r.mean_largest_component << '\n';
    }
    return kExitOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
    std::string image, scribbles, gt, out;
    std::vector<std::string> grid;  // key=v1,v2,...
};

std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    std::stringstream in(s);
    std::string item;
    while (std::getline(in, item, sep))
        if (!item.empty()) parts.push_back(item);
    return parts;
}

int cmd_sweep(const SweepArgs& a, const CommonOptions& o, std::ostream& out, std::ostream& err) {
    const RunConfig base = resolve(o);
    require_file(a.image);
    require_file(a.scribbles);
    std::vector<std::pair<std::string, std::vector<std::string>>> axes;
    for (const auto& g : a.grid) {
        const auto eq = g.find('=');
        if (eq == std::string::npos) throw Error(ErrorKind::Config, "grid axis must look like key=v1,v2: " + g);
        const std::string key = g.substr(0, eq);
        auto values = split(g.substr(eq + 1), ',');
        if (values.empty()) throw Error(ErrorKind::Config, "empty grid axis " + key);
        axes.emplace_back(key, values);
    }

    // Cartesian product, deduplicated on the resolved configuration.
    std::vector<std::pair<std::vector<std::string>, RunConfig>> points;
    std::set<std::string> seen;
    std::vector<std::size_t> idx(axes.size(), 0);
    while (true) {
        RunConfig cfg = base;
        std::vector<std::string> values;
        for (std::size_t k = 0; k < axes.size(); ++k) {
            apply_setting(cfg, axes[k].first, axes[k].second[idx[k]]);
            values.push_back(axes[k].second[idx[k]]);
        }
        cfg.validate();
        const auto key = cfg.to_json().dump();
        if (seen.insert(key).second)
            points.emplace_back(values, cfg);
        else {
            err << "warning: duplicate grid point";
            for (std::size_t k = 0; k < axes.size(); ++k) err << ' ' << axes[k].first << '=' << values[k];
            err << " skipped\n";
        }
        std::size_t k = 0;
        while (k < axes.size() && ++idx[k] == axes[k].second.size()) idx[k++] = 0;
        if (k == axes.size()) break;
    }

    const auto image = load_image(a.image);
    const auto scribbles = load_scribbles(a.scribbles);
    std::optional<SegmentationMask> gt;
    if (!a.gt.empty()) {
        require_file(a.gt);
        gt = load_mask(a.gt);
    }

    std::ostringstream csv;
    csv << std::setprecision(8);
    for (const auto& ax : axes) csv << ax.first << ',';
    csv << "edges,degree_mean,gamma,energy,region_f1,boundary_f1,iou,runtime_ms\n";
    std::shared_ptr<const PreparedImage> prepared;
    for (const auto& [values, cfg] : points) {
        const auto t0 = std::chrono::steady_clock::now();
        if (!prepared || !prepared->matches(cfg)) prepared = prepare_image(image, cfg);
        const auto r = segment(*prepared, scribbles, cfg);
        const double ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        for (const auto& v : values) csv << v << ',';
        csv << r.degrees.edges << ',' << r.degrees.mean_degree << ',' << r.gamma << ',' << r.energy << ',';
        if (gt) {
            const auto c = confusion_counts(r.mask, *gt);
            csv << region_f1(c) << ',' << boundary_f1(r.mask, *gt) << ',' << iou(c) << ',';
        } else {
            csv << ",,,";
        }
        csv << ms << '\n';
    }
    if (a.out.empty())
        out << csv.str();
    else
        std::ofstream(a.out) << csv.str();
    return kExitOk;
}

// ---- serve ----------------------------------------------------------------

struct ServeArgs {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string static_dir;
    std::size_t max_pixels = 2'000'000;
    long ttl_minutes = 30;
};

int cmd_serve(const ServeArgs& a, const CommonOptions& o, std::ostream& out, std::ostream& err) {
    ServiceOptions opts;
    opts.defaults = resolve(o);
    opts.static_dir = a.static_dir;
    opts.max_pixels = a.max_pixels;
    opts.ttl = std::chrono::minutes(a.ttl_minutes);
    SessionService service(opts);
    const int port = service.bind(a.host, a.port);
    if (port < 0) {
        err << "error: cannot bind " << a.host << ":" << a.port << "\n";
        return kExitFailure;
    }
    out << "listening on http://" << a.host << ":" << port << std::endl;
    return service.listen() ? kExitOk : kExitFailure;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stochastic-clique CRF segmentation", "stochcrf"};
    app.require_subcommand(1);

    CommonOptions seg_common, sweep_common, serve_common;

    SegmentArgs seg;
    auto* s = app.add_subcommand("segment", "segment one image from scribbles");
    s->add_option("image", seg.image, "input image (PNG/PNM)")->required();
    s->add_option("scribbles", seg.scribbles, "scribble image: red = foreground, blue = background")->required();
    s->add_option("--out,-o", seg.out, "output mask PNG (0/255)");
    s->add_option("--report", seg.report, "report JSON (default: mask path with .json)");
    s->add_option("--cliques", seg.cliques, "write sampled long-range cliques as CSV");
    add_common(s, seg_common);

    EvalArgs ev;
    auto* e = app.add_subcommand("eval", "score predicted masks against ground truth");
    e->add_option("pred_dir", ev.pred_dir)->required();
    e->add_option("gt_dir", ev.gt_dir)->required();
    e->add_option("--out,-o", ev.csv_out, "CSV output (default stdout)");
    e->add_option("--summary", ev.summary_out, "summary text output (default stderr)");

    std::size_t bn = 120000;
    double beps = 0.1;
    bool bcsv = false;
    auto* b = app.add_subcommand("bounds", "connectedness and cut-preservation bounds");
    b->add_option("--n", bn, "node count");
    b->add_option("--epsilon", beps, "cut tolerance");
    b->add_flag("--csv", bcsv, "emit one CSV row");

    GraphLabArgs gl;
    auto* g = app.add_subcommand("graphlab", "Monte-Carlo G(n,p) regime summaries");
    g->add_option("--n", gl.n, "node counts");
    g->add_option("--p", gl.p, "edge probabilities");
    g->add_option("--c-log", gl.c_log, "p = c ln(n) / n");
    g->add_option("--c-lin", gl.c_lin, "p = c / n");
    g->add_option("--trials", gl.trials);
    g->add_option("--seed", gl.seed);

    SweepArgs sw;
    auto* w = app.add_subcommand("sweep", "run a parameter grid on one image");
    w->add_option("image", sw.image)->required();
    w->add_option("scribbles", sw.scribbles)->required();
    w->add_option("--gt", sw.gt, "ground-truth mask for metric columns");
    w->add_option("--grid", sw.grid, "axis as key=v1,v2,... (repeatable)")->required();
    w->add_option("--out,-o", sw.out, "CSV output (default stdout)");
    add_common(w, sweep_common);

    ServeArgs sv;
    auto* v = app.add_subcommand("serve", "run the interactive session service");
    v->add_option("--host", sv.host);
    v->add_option("--port", sv.port);
    v->add_option("--static", sv.static_dir, "directory served at /");
    v->add_option("--max-pixels", sv.max_pixels);
    v->add_option("--ttl-minutes", sv.ttl_minutes);
    add_common(v, serve_common);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& pe) {
        err << "error: " << pe.what() << "\n";
        // missing input files map to the file exit code
        if (dynamic_cast<const CLI::ValidationError*>(&pe)) return kExitMissingFile;
        return kExitBadConfig;
    }

    try {
        if (s->parsed()) return cmd_segment(seg, seg_common, out);
        if (e->parsed()) return cmd_eval(ev, out, err);
        if (b->parsed()) return cmd_bounds(bn, beps, bcsv, out);
        if (g->parsed()) return cmd_graphlab(gl, out);
        if (w->parsed()) return cmd_sweep(sw, sweep_common, out, err);
        if (v->parsed()) return cmd_serve(sv, serve_common, out, err);
    } catch (const Error& ex) {
        err << "error: " << ex.what() << "\n";
        return exit_code(ex.kind());
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitFailure;
    }
    return kExitFailure;
}

} // namespace stochcrf::cli
