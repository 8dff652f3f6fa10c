#pragma once

#include "stochcrf/image.hpp"
#include "stochcrf/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

namespace stochcrf {

// Brush stroke in pixel coordinates; points are (x = column, y = row).
struct Stroke {
    Scribble label = Scribble::Foreground;
    std::vector<std::array<double, 2>> polyline;
    double radius = 1.0;
};

// Accepts either a bare array of strokes or {"strokes": [...]}. Each stroke is
// {"class": "foreground"|"background"|"fg"|"bg", "polyline": [[x, y], ...], "radius": r}.
// Throws a config error on malformed input.
std::vector<Stroke> parse_strokes(const nlohmann::json& body);

// Marks every pixel whose center lies within max(radius, 0.5) of the polyline.
void rasterize_stroke(ScribbleMask& mask, const Stroke& stroke);

struct ServiceOptions {
    RunConfig defaults;
    std::size_t max_pixels = 2'000'000;
    std::chrono::seconds ttl{30 * 60};
    std::string static_dir;  // served at / when non-empty
};

class SessionService {
public:
    explicit SessionService(ServiceOptions options = {});
    ~SessionService();
    SessionService(const SessionService&) = delete;
    SessionService& operator=(const SessionService&) = delete;

    // Port 0 picks a free port. Returns the bound port or -1.
    int bind(const std::string& host, int port);
    // Blocks until stop().
    bool listen();
    void stop();
    void wait_until_ready() const;

    std::size_t session_count() const;
    // Drops sessions idle since before now - ttl. Returns how many were removed.
    std::size_t evict_expired(std::chrono::steady_clock::time_point now);

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace stochcrf
