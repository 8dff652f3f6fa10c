#include "synthetic.hpp"

#include "cli.hpp"
#include "stochcrf/error.hpp"
#include "stochcrf/metrics.hpp"
#include "stochcrf/parallel.hpp"
#include "stochcrf/pipeline.hpp"

#include <doctest.h>

#include <filesystem>
#include <unistd.h>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

using namespace stochcrf;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        static int counter = 0;
        path = fs::temp_directory_path() / ("stochcrf_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string& name) const { return (path / name).string(); }
};

void write_bytes(const std::string& path, const std::vector<std::uint8_t>& bytes) {
    std::ofstream(path, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                                static_cast<std::streamsize>(bytes.size()));
}

std::string read_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), {}};
}

struct CliRun {
    int code;
    std::string out, err;
};

CliRun cli_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = cli::run(args, out, err);
    return {code, out.str(), err.str()};
}

// Small scene written to disk; the image is quantized to 8 bits by the PNG round trip.
struct SceneFiles {
    TempDir dir;
    std::string image, scribbles, truth;
    explicit SceneFiles(int size = 40, std::uint64_t seed = 3) {
        const auto s = synthetic::thin_curve(size, seed);
        image = dir / "scene.png";
        scribbles = dir / "scribbles.png";
        truth = dir / "truth.png";
        write_bytes(image, encode_image_png(s.image));
        write_bytes(scribbles, encode_scribbles_png(s.scribbles));
        write_bytes(truth, encode_mask_png(s.truth));
    }
};

} // namespace

TEST_CASE("config settings and files") {
    RunConfig cfg;
    CHECK(cfg.window == 5);
    CHECK(cfg.q == 500);
    CHECK(cfg.target_degree == 30.0);
    CHECK(cfg.divergence.type == DivergenceType::KL);
    apply_setting(cfg, "divergence", "hellinger");
    apply_setting(cfg, "degree", "12.5");
    apply_setting(cfg, "sigma_in_exponent", "true");
    CHECK(cfg.divergence.type == DivergenceType::Hellinger);
    CHECK(cfg.target_degree == 12.5);
    CHECK(cfg.energy.sigma_in_exponent);
    CHECK_THROWS_AS(apply_setting(cfg, "gamma", "1"), Error);
    CHECK_THROWS_AS(apply_setting(cfg, "window", "abc"), Error);

    TempDir dir;
    std::ofstream(dir / "run.cfg") << "# comment\nq = 64\nseed=9   # trailing\n\nbeta = -2\n";
    RunConfig f;
    load_config_file(f, dir / "run.cfg");
    CHECK(f.q == 64);
    CHECK(f.seed == 9);
    CHECK(f.energy.beta == -2.0);
    std::ofstream(dir / "bad.cfg") << "q 64\n";
    CHECK_THROWS_AS(load_config_file(f, dir / "bad.cfg"), Error);

    RunConfig bad;
    bad.window = 4;
    CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("pipeline respects scribbles and reports bounds") {
    const auto s = synthetic::thin_curve(32, 1);
    RunConfig cfg;
    cfg.q = 40;
    const auto prepared = prepare_image(s.image, cfg);
    CHECK(prepared->matches(cfg));
    RunConfig other = cfg;
    other.q = 41;
    CHECK_FALSE(prepared->matches(other));
    other = cfg;
    other.energy.sigma = 3.0;
    CHECK(prepared->matches(other));

    const auto r = segment(*prepared, s.scribbles, cfg);
    CHECK(r.mask.width == 32);
    CHECK(r.mask.height == 32);
    for (std::size_t i = 0; i < r.mask.labels.size(); ++i) {
        if (s.scribbles.labels[i] == Scribble::Foreground) CHECK(r.mask.labels[i] == 1);
        if (s.scribbles.labels[i] == Scribble::Background) CHECK(r.mask.labels[i] == 0);
    }
    CHECK(r.degrees.mean_degree == doctest::Approx(30.0).epsilon(0.15));
    const auto j = r.report();
    for (const char* key : {"energy", "gamma", "edges", "degree_mean", "implied_p", "bounds", "timings_ms"})
        CHECK(j.contains(key));
    CHECK(j["bounds"].contains("below_connectedness"));
    CHECK(j["bounds"].contains("above_cut_bound"));

    RunConfig local = cfg;
    local.target_degree = 0;
    const auto lp = prepare_image(s.image, local);
    CHECK_FALSE(lp->clusters.has_value());
    CHECK(segment(*lp, s.scribbles, local).cliques.size() == 0);

    ScribbleMask only_fg = s.scribbles;
    for (auto& l : only_fg.labels)
        if (l == Scribble::Background) l = Scribble::Unmarked;
    CHECK_THROWS_AS(segment(*prepared, only_fg, cfg), Error);
}

TEST_CASE("pipeline output does not depend on thread count") {
    const auto s = synthetic::thin_curve(48, 4);
    RunConfig cfg;
    cfg.q = 60;
    set_num_threads(1);
    const auto a = segment(*prepare_image(s.image, cfg), s.scribbles, cfg);
    set_num_threads(3);
    const auto b = segment(*prepare_image(s.image, cfg), s.scribbles, cfg);
    set_num_threads(0);
    CHECK(a.mask.labels == b.mask.labels);
    CHECK(a.energy == b.energy);
    CHECK(a.cliques.pairs() == b.cliques.pairs());
}

TEST_CASE("cli segment") {
    SceneFiles f;
    const auto out1 = f.dir / "m1.png", out2 = f.dir / "m2.png";
    auto r = cli_run({"segment", f.image, f.scribbles, "-o", out1, "--q", "50", "--seed", "5", "--cliques",
                      f.dir / "c.csv"});
    CHECK(r.code == 0);
    const auto mask = load_mask(out1);
    CHECK(mask.width == 40);
    CHECK(mask.height == 40);
    CHECK(fs::exists(f.dir / "m1.json"));
    std::ifstream rep(f.dir / "m1.json");
    const auto report = nlohmann::json::parse(rep);
    CHECK(report.contains("bounds"));
    CHECK(report["config"]["seed"] == 5);
    CHECK(read_bytes(f.dir / "c.csv").rfind("i,j,F\n", 0) == 0);

    r = cli_run({"segment", f.image, f.scribbles, "-o", out2, "--q", "50", "--seed", "5", "--threads", "3"});
    CHECK(r.code == 0);
    CHECK(read_bytes(out1) == read_bytes(out2));

    CHECK(cli_run({"segment", f.dir / "missing.png", f.scribbles}).code == cli::kExitMissingFile);
    CHECK(cli_run({"segment", f.image, f.scribbles, "--divergence", "cosine"}).code == cli::kExitBadConfig);
    CHECK(cli_run({"segment", f.image, f.scribbles, "--config", f.dir / "nope.cfg"}).code == cli::kExitMissingFile);

    ScribbleMask only_fg = load_scribbles(f.scribbles);
    for (auto& l : only_fg.labels)
        if (l == Scribble::Background) l = Scribble::Unmarked;
    write_bytes(f.dir / "fg.png", encode_scribbles_png(only_fg));
    CHECK(cli_run({"segment", f.image, f.dir / "fg.png", "-o", f.dir / "x.png"}).code == cli::kExitMissingSeeds);
}

TEST_CASE("cli eval") {
    TempDir pred, gt, empty;
    SegmentationMask a(4, 4), b(4, 4);
    a.labels = {1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
    b.labels = {1, 1, 1, 1, 1, 1, 1, 1, 0, 0, 1, 1, 0, 0, 0, 0};
    save_mask_png(a, pred / "fix.png");
    save_mask_png(b, gt / "fix.png");
    save_mask_png(b, pred / "same.png");
    save_mask_png(b, gt / "same.png");
    save_mask_png(b, pred / "orphan.png");
    std::ofstream(pred / "fix.json") << R"({"timings_ms": {"a": 1.5, "b": 2.5}})";

    auto r = cli_run({"eval", pred.path.string(), gt.path.string()});
    CHECK(r.code == 0);
    CHECK(r.out.find("name,region_f1,boundary_f1,iou,runtime_ms\n") == 0);
    CHECK(r.out.find("fix,0.800000,") != std::string::npos);
    CHECK(r.out.find(",0.666667,4.000\n") != std::string::npos);
    CHECK(r.out.find("same,1.000000,1.000000,1.000000,\n") != std::string::npos);
    CHECK(r.out.find("average,0.900000,") != std::string::npos);
    CHECK(r.err.find("orphan") != std::string::npos);
    CHECK(r.err.find("region_f1: 0.90000") != std::string::npos);

    CHECK(cli_run({"eval", pred.path.string(), empty.path.string()}).code == cli::kExitMissingFile);
    CHECK(cli_run({"eval", empty.path.string(), gt.path.string()}).code == cli::kExitMissingFile);
}

TEST_CASE("cli bounds") {
    auto r = cli_run({"bounds", "--n", "120000", "--epsilon", "0.1"});
    CHECK(r.code == 0);
    CHECK(r.out.find("p_lower       9.7460e-05") != std::string::npos);
    CHECK(r.out.find("p_upper       0.0097") != std::string::npos);
    CHECK(r.out.find("(12 neighbours)") != std::string::npos);
    CHECK(r.out.find("max_edges     1.4034e+08") != std::string::npos);

    r = cli_run({"bounds", "--n", "5000", "--epsilon", "1", "--csv"});
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header == "n,epsilon,p_lower,p_upper,degree_lower,max_edges");
    std::vector<std::string> cells;
    std::stringstream rs(row);
    for (std::string c; std::getline(rs, c, ',');) cells.push_back(c);
    REQUIRE(cells.size() == 6);
    CHECK(cells[2] == cells[3]);

    CHECK(cli_run({"bounds", "--n", "1"}).code == cli::kExitBadConfig);
    CHECK(cli_run({"bounds", "--epsilon", "0"}).code == cli::kExitBadConfig);
    CHECK(cli_run({"bounds", "--n", "abc"}).code == cli::kExitBadConfig);
}

TEST_CASE("cli graphlab") {
    auto r = cli_run({"graphlab", "--n", "200", "--c-log", "3", "--c-lin", "0.5", "--trials", "10"});
    CHECK(r.code == 0);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "n,p,trials,fraction_connected,mean_largest_component");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 2);
    CHECK(cli_run({"graphlab", "--n", "200"}).code == cli::kExitBadConfig);
}

TEST_CASE("cli sweep") {
    SceneFiles f;
    auto r = cli_run({"sweep", f.image, f.scribbles, "--gt", f.truth, "--q", "50", "--grid", "degree=5,30,100,30"});
    REQUIRE(r.code == 0);
    CHECK(r.err.find("duplicate grid point degree=30") != std::string::npos);
    std::istringstream in(r.out);
    std::string line;
    std::getline(in, line);
    CHECK(line == "degree,edges,degree_mean,gamma,energy,region_f1,boundary_f1,iou,runtime_ms");
    std::vector<long> edges;
    while (std::getline(in, line)) {
        std::stringstream ls(line);
        std::string degree, e;
        std::getline(ls, degree, ',');
        std::getline(ls, e, ',');
        edges.push_back(std::stol(e));
    }
    REQUIRE(edges.size() == 3);
    CHECK(edges[0] < edges[1]);
    CHECK(edges[1] < edges[2]);

    // A single grid point equals segment followed by eval.
    r = cli_run({"sweep", f.image, f.scribbles, "--gt", f.truth, "--q", "50", "--grid", "seed=7"});
    REQUIRE(r.code == 0);
    const auto mask_path = f.dir / "single.png";
    REQUIRE(cli_run({"segment", f.image, f.scribbles, "-o", mask_path, "--q", "50", "--seed", "7"}).code == 0);
    const auto c = confusion_counts(load_mask(mask_path), load_mask(f.truth));
    std::ostringstream expect;
    expect << std::setprecision(8) << region_f1(c) << ',' << boundary_f1(load_mask(mask_path), load_mask(f.truth))
           << ',' << iou(c) << ',';
    CHECK(r.out.find(expect.str()) != std::string::npos);

    CHECK(cli_run({"sweep", f.image, f.scribbles, "--grid", "degree"}).code == cli::kExitBadConfig);
    CHECK(cli_run({"sweep", f.image, f.scribbles, "--grid", "colour=1"}).code == cli::kExitBadConfig);
}
