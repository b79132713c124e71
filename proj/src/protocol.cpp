#include "echogaze/protocol.hpp"

#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace echogaze {

using nlohmann::json;

void ScreenGeometry::validate() const {
    if (width_px <= 0 || height_px <= 0) throw ConfigError("screen dimensions must be positive");
    if (px_size_cm <= 0.0) throw ConfigError("px_size_cm must be positive");
    if (eye_distance_cm <= 0.0) throw ConfigError("eye_distance_cm must be positive");
}

std::string ScreenGeometry::to_json() const {
    return json{{"width_px", width_px},
                {"height_px", height_px},
                {"px_size_cm", px_size_cm},
                {"eye_distance_cm", eye_distance_cm}}
        .dump(2);
}

ScreenGeometry ScreenGeometry::from_json(const std::string& text) {
    ScreenGeometry g;
    try {
        json j = json::parse(text);
        g.width_px = j.at("width_px").get<int>();
        g.height_px = j.at("height_px").get<int>();
        g.px_size_cm = j.at("px_size_cm").get<double>();
        g.eye_distance_cm = j.at("eye_distance_cm").get<double>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid ScreenGeometry JSON: ") + e.what());
    }
    g.validate();
    return g;
}

ScreenGeometry ScreenGeometry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open screen file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void ProtocolSpec::validate() const {
    if (n_regions < 1) throw ConfigError("n_regions must be >= 1");
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n_regions))));
    if (side * side != n_regions) throw ConfigError("n_regions must be a perfect square");
    if (!(dwell_min_s < dwell_mean_s && dwell_mean_s < dwell_max_s))
        throw ConfigError("dwell times must satisfy min < mean < max");
    if (calib_duration_s <= 0.0) throw ConfigError("calib_duration_s must be positive");
    if (sessions < 1) throw ConfigError("sessions must be >= 1");
}

double sample_dwell(const ProtocolSpec& proto, Rng& rng) {
    // Symmetric triangular reproduces the stated range and 2.0 s mean.
    return rng.triangular(proto.dwell_min_s, proto.dwell_max_s);
}

std::pair<double, double> px_to_cm(const ScreenGeometry& geom, std::pair<double, double> p) {
    geom.validate();
    if (p.first < 0.0 || p.first > geom.width_px - 1 || p.second < 0.0 || p.second > geom.height_px - 1)
        throw ContractError("px_to_cm: point outside screen bounds");
    const double cx = geom.width_px / 2.0;
    const double cy = geom.height_px / 2.0;
    return {(p.first - cx) * geom.px_size_cm, (p.second - cy) * geom.px_size_cm};
}

GazeTrace generate_session_trace(const ScreenGeometry& geom, const ProtocolSpec& proto,
                                 double frames_per_second, uint64_t seed) {
    geom.validate();
    proto.validate();
    if (frames_per_second <= 0.0) throw ConfigError("frames_per_second must be positive");

    GazeTrace trace;
    const double w = geom.width_px - 1.0;
    const double h = geom.height_px - 1.0;

    // Calibration: four corners then center, equal dwell inside the budget.
    const std::pair<double, double> anchors[5] = {
        {0.0, 0.0}, {w, 0.0}, {w, h}, {0.0, h}, {w / 2.0, h / 2.0}};
    const int frames_per_anchor =
        std::max(1, static_cast<int>(std::lround(proto.calib_duration_s / 5.0 * frames_per_second)));
    for (const auto& a : anchors)
        for (int f = 0; f < frames_per_anchor; ++f) {
            trace.points.push_back(a);
            trace.segments.push_back(Segment::Calib);
        }
    trace.calib_frames = static_cast<int>(trace.points.size());

    // Main segment: all regions once, in random order.
    const int side = static_cast<int>(std::lround(std::sqrt(static_cast<double>(proto.n_regions))));
    std::vector<int> order(static_cast<std::size_t>(proto.n_regions));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(rng_derive(seed, "protocol"));
    for (int i = proto.n_regions - 1; i > 0; --i)
        std::swap(order[static_cast<std::size_t>(i)], order[rng.below(static_cast<uint64_t>(i) + 1)]);

    const double tile_w = static_cast<double>(geom.width_px) / side;
    const double tile_h = static_cast<double>(geom.height_px) / side;
    for (int region : order) {
        const int rx = region % side;
        const int ry = region / side;
        double px = (rx + rng.uniform()) * tile_w;
        double py = (ry + rng.uniform()) * tile_h;
        px = std::min(px, w);
        py = std::min(py, h);
        const double dwell = sample_dwell(proto, rng);
        const int frames = std::max(1, static_cast<int>(std::lround(dwell * frames_per_second)));
        for (int f = 0; f < frames; ++f) {
            trace.points.emplace_back(px, py);
            trace.segments.push_back(Segment::Main);
        }
    }
    return trace;
}

void save_trace_csv(const std::string& path, const GazeTrace& trace) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write trace file: " + path);
    out << "frame_index,x_px,y_px,segment\n";
    out.precision(10);
    for (std::size_t i = 0; i < trace.points.size(); ++i)
        out << i << "," << trace.points[i].first << "," << trace.points[i].second << ","
            << (trace.segments[i] == Segment::Calib ? "calib" : "main") << "\n";
    if (!out) throw IoError("short write on trace file: " + path);
}

GazeTrace load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open trace file: " + path);
    GazeTrace trace;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty trace file: " + path);
    std::size_t expect = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        const std::size_t idx = static_cast<std::size_t>(std::stoull(tok));
        if (idx != expect) throw IoError("non-contiguous frame_index in " + path);
        ++expect;
        std::getline(ss, tok, ',');
        const double x = std::stod(tok);
        std::getline(ss, tok, ',');
        const double y = std::stod(tok);
        std::getline(ss, tok, ',');
        trace.points.emplace_back(x, y);
        if (tok == "calib") {
            if (static_cast<int>(trace.points.size()) - 1 != trace.calib_frames)
                throw IoError("calib rows must form a prefix in " + path);
            trace.segments.push_back(Segment::Calib);
            trace.calib_frames = static_cast<int>(trace.points.size());
        } else if (tok == "main") {
            trace.segments.push_back(Segment::Main);
        } else {
            throw IoError("unknown segment tag '" + tok + "' in " + path);
        }
    }
    return trace;
}

} // namespace echogaze
