#include "stochcrf/service.hpp"

#include "stochcrf/error.hpp"
#include "stochcrf/rng.hpp"

#include <httplib.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <iomanip>
#include <map>
#include <mutex>
#include <random>
#include <sstream>

namespace stochcrf {

namespace {

using Clock = std::chrono::steady_clock;
using nlohmann::json;

Scribble parse_class(const json& v) {
    if (!v.is_string()) throw Error(ErrorKind::Config, "stroke class must be a string");
    const auto s = v.get<std::string>();
    if (s == "foreground" || s == "fg") return Scribble::Foreground;
    if (s == "background" || s == "bg") return Scribble::Background;
    throw Error(ErrorKind::Config, "unknown stroke class '" + s + "'");
}

double distance_to_segment(double px, double py, const std::array<double, 2>& a, const std::array<double, 2>& b) {
    const double dx = b[0] - a[0], dy = b[1] - a[1];
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0.0 ? ((px - a[0]) * dx + (py - a[1]) * dy) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(px - (a[0] + t * dx), py - (a[1] + t * dy));
}

std::string to_setting_value(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) {
        std::ostringstream out;
        out << std::setprecision(17) << v.get<double>();
        return out.str();
    }
    throw Error(ErrorKind::Config, "setting values must be strings, numbers or booleans");
}

std::string new_token() {
    static std::mutex mu;
    static std::mt19937_64 gen{std::random_device{}()};
    std::lock_guard lock(mu);
    std::ostringstream out;
    out << std::hex << std::setfill('0') << std::setw(16) << gen() << std::setw(16) << gen();
    return out.str();
}

int status_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::MissingSeeds: return 409;
    case ErrorKind::Refusal: return 413;
    case ErrorKind::Construction:
    case ErrorKind::Calibration: return 500;
    default: return 400;
    }
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(json{{"error", message}}.dump(), "application/json");
}

struct Session {
    std::mutex mu;
    RunConfig config;
    std::shared_ptr<const PreparedImage> prepared;
    ScribbleMask scribbles;
    std::vector<std::uint8_t> last_mask_png;
    std::uint64_t rounds = 0;
    Clock::time_point created;
    Clock::time_point updated;
};

} // namespace

std::vector<Stroke> parse_strokes(const json& body) {
    const json* list = &body;
    if (body.is_object()) {
        if (!body.contains("strokes")) throw Error(ErrorKind::Config, "missing 'strokes'");
        list = &body.at("strokes");
    }
    if (!list->is_array()) throw Error(ErrorKind::Config, "strokes must be an array");
    std::vector<Stroke> out;
    for (const auto& s : *list) {
        if (!s.is_object() || !s.contains("class") || !s.contains("polyline"))
            throw Error(ErrorKind::Config, "stroke needs 'class' and 'polyline'");
        Stroke stroke;
        stroke.label = parse_class(s.at("class"));
        const auto& pts = s.at("polyline");
        if (!pts.is_array() || pts.empty()) throw Error(ErrorKind::Config, "polyline must be a non-empty array");
        for (const auto& p : pts) {
            if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
                throw Error(ErrorKind::Config, "polyline points are [x, y] pairs");
            stroke.polyline.push_back({p[0].get<double>(), p[1].get<double>()});
        }
        if (s.contains("radius")) {
            if (!s.at("radius").is_number()) throw Error(ErrorKind::Config, "radius must be a number");
            stroke.radius = s.at("radius").get<double>();
        }
        if (!(stroke.radius >= 0.0) || !std::isfinite(stroke.radius))
            throw Error(ErrorKind::Config, "radius must be finite and non-negative");
        for (const auto& p : stroke.polyline)
            if (!std::isfinite(p[0]) || !std::isfinite(p[1])) throw Error(ErrorKind::Config, "non-finite point");
        out.push_back(std::move(stroke));
    }
    return out;
}

void rasterize_stroke(ScribbleMask& mask, const Stroke& stroke) {
    const double r = std::max(stroke.radius, 0.5);
    const auto& pts = stroke.polyline;
    const std::size_t segments = std::max<std::size_t>(1, pts.size() - 1);
    for (std::size_t k = 0; k < segments; ++k) {
        const auto& a = pts[k];
        const auto& b = pts[std::min(k + 1, pts.size() - 1)];
        const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a[0], b[0]) - r)));
        const int c1 = std::min(mask.width - 1, static_cast<int>(std::ceil(std::max(a[0], b[0]) + r)));
        const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a[1], b[1]) - r)));
        const int r1 = std::min(mask.height - 1, static_cast<int>(std::ceil(std::max(a[1], b[1]) + r)));
        for (int row = r0; row <= r1; ++row)
            for (int col = c0; col <= c1; ++col)
                if (distance_to_segment(col, row, a, b) <= r)
                    mask.labels[static_cast<std::size_t>(row) * mask.width + col] = stroke.label;
    }
}

struct SessionService::Impl {
    ServiceOptions options;
    httplib::Server server;
    mutable std::mutex map_mu;
    std::map<std::string, std::shared_ptr<Session>> sessions;

    explicit Impl(ServiceOptions opts) : options(std::move(opts)) {
        options.defaults.validate();
        routes();
    }

    std::shared_ptr<Session> find(const std::string& id) {
        evict(Clock::now());
        std::lock_guard lock(map_mu);
        auto it = sessions.find(id);
        return it == sessions.end() ? nullptr : it->second;
    }

    std::size_t evict(Clock::time_point now) {
        std::lock_guard lock(map_mu);
        std::size_t removed = 0;
        for (auto it = sessions.begin(); it != sessions.end();) {
            std::unique_lock slock(it->second->mu, std::try_to_lock);
            if (slock.owns_lock() && now - it->second->updated > options.ttl) {
                slock.unlock();
                it = sessions.erase(it);
                ++removed;
            } else {
                ++it;
            }
        }
        return removed;
    }

    void create(const httplib::Request& req, httplib::Response& res) {
        if (!req.is_multipart_form_data() || !req.has_file("image"))
            return send_error(res, 400, "expected multipart form data with an 'image' part");
        RunConfig cfg = options.defaults;
        ImageGrid image;
        try {
            for (const auto& [key, item] : req.files)
                if (key != "image") apply_setting(cfg, key, item.content);
            cfg.validate();
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        try {
            const auto& content = req.get_file_value("image").content;
            image = decode_image({reinterpret_cast<const std::uint8_t*>(content.data()), content.size()});
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        if (image.node_count() > options.max_pixels)
            return send_error(res, 413, "image exceeds " + std::to_string(options.max_pixels) + " pixels");

        auto session = std::make_shared<Session>();
        session->config = cfg;
        session->scribbles = ScribbleMask(image.width(), image.height());
        try {
            session->prepared = prepare_image(std::move(image), cfg);
        } catch (const Error& e) {
            return send_error(res, status_for(e.kind()), e.what());
        }
        session->created = session->updated = Clock::now();
        const auto id = new_token();
        {
            std::lock_guard lock(map_mu);
            sessions.emplace(id, session);
        }
        json body{{"id", id},
                  {"width", session->prepared->image.width()},
                  {"height", session->prepared->image.height()},
                  {"config", cfg.to_json()},
                  {"cluster_objective", nullptr}};
        if (session->prepared->clusters) body["cluster_objective"] = session->prepared->clusters->objective;
        res.status = 201;
        res.set_content(body.dump(), "application/json");
    }

    void update_scribbles(const std::string& id, const httplib::Request& req, httplib::Response& res) {
        auto s = find(id);
        if (!s) return send_error(res, 404, "unknown session");
        std::vector<Stroke> strokes;
        bool clear = false;
        try {
            const auto body = json::parse(req.body);
            strokes = parse_strokes(body);
            if (body.is_object() && body.contains("clear")) clear = body.at("clear").get<bool>();
        } catch (const json::exception& e) {
            return send_error(res, 400, e.what());
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        std::lock_guard lock(s->mu);
        if (clear) std::fill(s->scribbles.labels.begin(), s->scribbles.labels.end(), Scribble::Unmarked);
        for (const auto& st : strokes) rasterize_stroke(s->scribbles, st);
        s->updated = Clock::now();
        res.status = 204;
    }

    void run_segment(const std::string& id, const httplib::Request& req, httplib::Response& res) {
        auto s = find(id);
        if (!s) return send_error(res, 404, "unknown session");
        std::lock_guard lock(s->mu);
        s->updated = Clock::now();
        RunConfig cfg = s->config;
        bool resample = false;
        try {
            if (!req.body.empty()) {
                const auto body = json::parse(req.body);
                if (!body.is_object()) throw Error(ErrorKind::Config, "segment body must be an object");
                for (const auto& [key, value] : body.items()) {
                    if (key == "resample")
                        resample = value.get<bool>();
                    else if (key == "overrides")
                        for (const auto& [k, v] : value.items()) apply_setting(cfg, k, to_setting_value(v));
                    else
                        apply_setting(cfg, key, to_setting_value(value));
                }
            }
            cfg.validate();
        } catch (const json::exception& e) {
            return send_error(res, 400, e.what());
        } catch (const Error& e) {
            return send_error(res, 400, e.what());
        }
        if (!s->scribbles.has_both_classes())
            return send_error(res, 409, "scribbles must mark at least one foreground and one background pixel");
        try {
            bool cache_hit = s->prepared->matches(cfg);
            if (!cache_hit) s->prepared = prepare_image(s->prepared->image, cfg);
            const std::uint64_t sample_seed = resample ? splitmix64(cfg.seed + ++s->rounds) : cfg.seed;
            const auto result = segment(*s->prepared, s->scribbles, cfg, sample_seed);
            s->last_mask_png = encode_mask_png(result.mask);
            auto body = result.report();
            body["mask_png_base64"] = httplib::detail::base64_encode(
                std::string(s->last_mask_png.begin(), s->last_mask_png.end()));
            body["degree_mean"] = result.degrees.mean_degree;
            body["edges"] = result.degrees.edges;
            body["timings"] = body["timings_ms"];
            body["cache_hit"] = cache_hit;
            body["width"] = result.mask.width;
            body["height"] = result.mask.height;
            res.set_content(body.dump(), "application/json");
        } catch (const Error& e) {
            return send_error(res, status_for(e.kind()), e.what());
        }
    }

    void routes() {
        server.set_payload_max_length(64u << 20);
        server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(R"({"status":"ok"})", "application/json");
        });
        server.Get("/stats", [this](const httplib::Request&, httplib::Response& res) {
            evict(Clock::now());
            std::lock_guard lock(map_mu);
            res.set_content(json{{"sessions", sessions.size()}}.dump(), "application/json");
        });
        server.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) { create(req, res); });
        server.Put(R"(/sessions/([0-9a-f]+)/scribbles)", [this](const httplib::Request& req, httplib::Response& res) {
            update_scribbles(req.matches[1], req, res);
        });
        server.Post(R"(/sessions/([0-9a-f]+)/segment)", [this](const httplib::Request& req, httplib::Response& res) {
            run_segment(req.matches[1], req, res);
        });
        server.Get(R"(/sessions/([0-9a-f]+)/mask)", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = find(req.matches[1]);
            if (!s) return send_error(res, 404, "unknown session");
            std::lock_guard lock(s->mu);
            if (s->last_mask_png.empty()) return send_error(res, 404, "no mask yet");
            res.set_content(std::string(s->last_mask_png.begin(), s->last_mask_png.end()), "image/png");
        });
        server.Get(R"(/sessions/([0-9a-f]+)/scribbles)", [this](const httplib::Request& req, httplib::Response& res) {
            auto s = find(req.matches[1]);
            if (!s) return send_error(res, 404, "unknown session");
            std::lock_guard lock(s->mu);
            const auto png = encode_scribbles_png(s->scribbles);
            res.set_content(std::string(png.begin(), png.end()), "image/png");
        });
        server.Delete(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            std::shared_ptr<Session> victim;
            {
                std::lock_guard lock(map_mu);
                auto it = sessions.find(req.matches[1]);
                if (it == sessions.end()) return send_error(res, 404, "unknown session");
                victim = it->second;
                sessions.erase(it);
            }
            std::lock_guard slock(victim->mu);  // wait for in-flight work
            res.status = 204;
        });
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const std::exception& e) {
                send_error(res, 500, e.what());
            } catch (...) {
                send_error(res, 500, "internal error");
            }
        });
        if (!options.static_dir.empty()) {
            if (!std::filesystem::is_directory(options.static_dir))
                throw Error(ErrorKind::Io, "static directory not found: " + options.static_dir);
            server.set_mount_point("/", options.static_dir);
        }
    }
};

SessionService::SessionService(ServiceOptions options) : impl_(std::make_unique<Impl>(std::move(options))) {}
SessionService::~SessionService() { stop(); }

int SessionService::bind(const std::string& host, int port) {
    if (port == 0) return impl_->server.bind_to_any_port(host);
    return impl_->server.bind_to_port(host, port) ? port : -1;
}

bool SessionService::listen() { return impl_->server.listen_after_bind(); }
void SessionService::stop() {
    if (impl_->server.is_running()) impl_->server.stop();
}
void SessionService::wait_until_ready() const { impl_->server.wait_until_ready(); }

std::size_t SessionService::session_count() const {
    std::lock_guard lock(impl_->map_mu);
    return impl_->sessions.size();
}

std::size_t SessionService::evict_expired(std::chrono::steady_clock::time_point now) { return impl_->evict(now); }

} // namespace stochcrf
