#include "echogaze/scene.hpp"

#include "echogaze/errors.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace echogaze {

using nlohmann::json;

double distance(const Vec3& a, const Vec3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return std::sqrt(dx * dx + dy * dy + dz * dz);
}

Vec3 ReflectorSpec::position(double gx, double gy) const {
    return {center.x + gx * gaze_coupling[0][0] + gy * gaze_coupling[1][0],
            center.y + gx * gaze_coupling[0][1] + gy * gaze_coupling[1][1],
            center.z + gx * gaze_coupling[0][2] + gy * gaze_coupling[1][2]};
}

double ReflectorSpec::max_displacement_m() const {
    double worst = 0.0;
    for (double gx : {-1.0, 1.0})
        for (double gy : {-1.0, 1.0}) {
            const double dx = gx * gaze_coupling[0][0] + gy * gaze_coupling[1][0];
            const double dy = gx * gaze_coupling[0][1] + gy * gaze_coupling[1][1];
            const double dz = gx * gaze_coupling[0][2] + gy * gaze_coupling[1][2];
            worst = std::max(worst, std::sqrt(dx * dx + dy * dy + dz * dz));
        }
    return worst;
}

void NoiseProfile::validate() const {
    if (target_level_dba < 0.0 || target_level_dba > 100.0)
        throw ConfigError("noise target_level_dba must be in [0, 100]");
    if (kind == Kind::Recorded && target_level_dba > 0.0 && reference_samples.empty())
        throw ConfigError("recorded noise requires reference samples");
}

void SceneSpec::validate(const FrameConfig& cfg) const {
    cfg.validate();
    screen.validate();
    if (mics.empty()) throw ConfigError("scene needs at least one microphone");
    if (speakers.empty()) throw ConfigError("scene needs at least one speaker");
    if (speakers.size() > cfg.bands.size())
        throw ConfigError("scene has more speakers than configured chirp bands");
    if (tx_gain < 0.0 || tx_gain > 1.0) throw ConfigError("tx_gain must be in [0, 1]");
    if (direct_path_gain < 0.0) throw ConfigError("direct_path_gain must be non-negative");
    if (base_delay_jitter_s < 0.0) throw ConfigError("base_delay_jitter_s must be non-negative");
    noise.validate();

    const double fs = cfg.sample_rate_hz;
    const double c = cfg.speed_of_sound_m_s;
    const double max_delay_samples = cfg.frame_len - 2.0;  // room for interpolation
    const double jitter_samples = base_delay_jitter_s * fs;

    for (const auto& spk : speakers)
        for (const auto& mic : mics) {
            const double d = distance(spk, mic);
            if (d <= 0.0) throw ConfigError("speaker and microphone positions must be distinct");
            const double delay = d / c * fs;
            if (delay - jitter_samples < 0.0 || delay + jitter_samples > max_delay_samples)
                throw ConfigError("direct path delay exceeds one frame or is negative");
        }
    for (const auto& r : reflectors) {
        if (r.amplitude <= 0.0 || r.amplitude > 1.0)
            throw ConfigError("reflector amplitude must be in (0, 1]");
        if (r.radius_gain <= 0.0) throw ConfigError("reflector radius_gain must be positive");
        if (r.max_displacement_m() >= 0.005)
            throw ConfigError("reflector displacement must stay below 5 mm over the gaze range");
        const double slack = r.max_displacement_m();
        for (const auto& spk : speakers)
            for (const auto& mic : mics) {
                const double path = distance(spk, r.center) + distance(r.center, mic);
                if (distance(spk, r.center) <= 0.0 || distance(r.center, mic) <= 0.0)
                    throw ConfigError("reflector coincides with a sensor");
                const double delay = (path + 2.0 * slack) / c * fs;
                if (delay + jitter_samples > max_delay_samples)
                    throw ConfigError("echo path delay exceeds one frame");
            }
    }
}

namespace {

json vec3_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

Vec3 vec3_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw ConfigError("position must be a 3-element array");
    return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

} // namespace

std::string SceneSpec::to_json() const {
    json jmics = json::array();
    for (const auto& m : mics) jmics.push_back(vec3_json(m));
    json jspk = json::array();
    for (const auto& s : speakers) jspk.push_back(vec3_json(s));
    json jrefl = json::array();
    for (const auto& r : reflectors) {
        jrefl.push_back({{"center", vec3_json(r.center)},
                         {"radius_gain", r.radius_gain},
                         {"gaze_coupling", {{r.gaze_coupling[0][0], r.gaze_coupling[0][1], r.gaze_coupling[0][2]},
                                            {r.gaze_coupling[1][0], r.gaze_coupling[1][1], r.gaze_coupling[1][2]}}},
                         {"amplitude", r.amplitude},
                         {"speaker_weights", {r.speaker_weights[0], r.speaker_weights[1]}}});
    }
    json jnoise = {{"kind", noise.kind == NoiseProfile::Kind::White ? "white" : "recorded"},
                   {"target_level_dba", noise.target_level_dba}};
    if (!noise.reference_path.empty()) jnoise["reference_pcm"] = noise.reference_path;
    json j = {{"mics", jmics},
              {"speakers", jspk},
              {"reflectors", jrefl},
              {"base_delay_jitter_s", base_delay_jitter_s},
              {"snr_or_level", jnoise},
              {"tx_gain", tx_gain},
              {"direct_path_gain", direct_path_gain},
              {"screen", json::parse(screen.to_json())}};
    return j.dump(2);
}

SceneSpec SceneSpec::from_json(const std::string& text) {
    SceneSpec s;
    try {
        json j = json::parse(text);
        s.mics.clear();
        for (const auto& m : j.at("mics")) s.mics.push_back(vec3_from(m));
        s.speakers.clear();
        for (const auto& sp : j.at("speakers")) s.speakers.push_back(vec3_from(sp));
        s.reflectors.clear();
        for (const auto& rj : j.at("reflectors")) {
            ReflectorSpec r;
            r.center = vec3_from(rj.at("center"));
            r.radius_gain = rj.value("radius_gain", 1.0);
            const auto& gc = rj.at("gaze_coupling");
            for (int row = 0; row < 2; ++row)
                for (int col = 0; col < 3; ++col)
                    r.gaze_coupling[row][col] = gc.at(row).at(col).get<double>();
            r.amplitude = rj.at("amplitude").get<double>();
            if (rj.contains("speaker_weights")) {
                r.speaker_weights[0] = rj["speaker_weights"].at(0).get<double>();
                r.speaker_weights[1] = rj["speaker_weights"].at(1).get<double>();
            }
            s.reflectors.push_back(r);
        }
        s.base_delay_jitter_s = j.value("base_delay_jitter_s", 0.0);
        if (j.contains("snr_or_level")) {
            const auto& nj = j["snr_or_level"];
            const std::string kind = nj.value("kind", "white");
            s.noise.kind = kind == "recorded" ? NoiseProfile::Kind::Recorded : NoiseProfile::Kind::White;
            s.noise.target_level_dba = nj.value("target_level_dba", 0.0);
            s.noise.reference_path = nj.value("reference_pcm", "");
        }
        s.tx_gain = j.value("tx_gain", 2.0e-4);
        s.direct_path_gain = j.value("direct_path_gain", 1.0);
        if (j.contains("screen")) s.screen = ScreenGeometry::from_json(j["screen"].dump());
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid SceneSpec JSON: ") + e.what());
    }
    return s;
}

SceneSpec SceneSpec::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open scene file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void SceneSpec::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write scene file: " + path);
    out << to_json() << "\n";
}

SceneSpec default_scene() {
    SceneSpec s;
    // Right-side sensors: M1/M4 near the inner corner, M2/M3 outward.
    s.mics = {
        {0.015, 0.010, 0.020},    // M1 inner upper right
        {0.045, 0.022, 0.020},    // M2 outer upper right
        {0.055, -0.012, 0.020},   // M3 outer lower right
        {0.020, -0.018, 0.020},   // M4 inner lower right
        {-0.015, 0.010, 0.020},   // M5 inner upper left
        {-0.045, 0.022, 0.020},   // M6 outer upper left
        {-0.055, -0.012, 0.020},  // M7 outer lower left
        {-0.020, -0.018, 0.020},  // M8 inner lower left
    };
    s.speakers = {{0.065, 0.000, 0.018},    // S1 right, band 1
                  {-0.065, 0.000, 0.018}};  // S2 left, band 2

    ReflectorSpec right_eye;
    right_eye.center = {0.032, 0.000, 0.004};
    right_eye.amplitude = 0.8;
    right_eye.gaze_coupling = {{{0.0035, 0.0004, -0.0006}, {0.0003, 0.0022, -0.0005}}};
    ReflectorSpec left_eye;
    left_eye.center = {-0.032, 0.000, 0.004};
    left_eye.amplitude = 0.8;
    left_eye.gaze_coupling = {{{0.0035, -0.0004, 0.0006}, {-0.0003, 0.0022, -0.0005}}};
    ReflectorSpec right_lid;
    right_lid.center = {0.030, 0.012, 0.006};
    right_lid.amplitude = 0.4;
    right_lid.gaze_coupling = {{{0.0008, 0.0000, 0.0000}, {0.0000, 0.0030, -0.0010}}};
    ReflectorSpec left_lid;
    left_lid.center = {-0.030, 0.012, 0.006};
    left_lid.amplitude = 0.4;
    left_lid.gaze_coupling = {{{0.0008, 0.0000, 0.0000}, {0.0000, 0.0030, -0.0010}}};
    ReflectorSpec nose;
    nose.center = {0.000, -0.008, 0.010};
    nose.amplitude = 0.5;  // static clutter, no coupling
    s.reflectors = {right_eye, left_eye, right_lid, left_lid, nose};
    return s;
}

} // namespace echogaze
