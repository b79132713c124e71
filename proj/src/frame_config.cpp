#include "echogaze/frame_config.hpp"

#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace echogaze {

using nlohmann::json;

int FrameConfig::window_frames() const {
    return static_cast<int>(std::floor(window_s * sample_rate_hz / frame_len)) + 1;
}

double FrameConfig::row_spacing_m() const {
    return speed_of_sound_m_s / (2.0 * sample_rate_hz);
}

void FrameConfig::validate() const {
    if (sample_rate_hz <= 0) throw ConfigError("sample_rate_hz must be positive");
    if (frame_len <= 0) throw ConfigError("frame_len must be positive");
    if (window_s <= 0) throw ConfigError("window_s must be positive");
    if (speed_of_sound_m_s <= 0) throw ConfigError("speed_of_sound_m_s must be positive");
    if (crop_used_px <= 0 || crop_used_px > crop_full_px || crop_full_px > frame_len)
        throw ConfigError("crop sizes must satisfy 0 < crop_used_px <= crop_full_px <= frame_len");
    if (bands.empty()) throw ConfigError("at least one chirp band required");
    const double nyquist = sample_rate_hz / 2.0;
    for (const auto& b : bands) {
        if (!(b.f_start_hz < b.f_end_hz))
            throw ConfigError("chirp band must have f_start_hz < f_end_hz");
        if (b.f_start_hz <= 0.0 || b.f_end_hz >= nyquist)
            throw ConfigError("chirp band must lie strictly below Nyquist");
    }
    for (std::size_t i = 0; i < bands.size(); ++i)
        for (std::size_t j = i + 1; j < bands.size(); ++j) {
            const auto& a = bands[i];
            const auto& b = bands[j];
            if (a.f_start_hz < b.f_end_hz && b.f_start_hz < a.f_end_hz)
                throw ConfigError("chirp bands must be pairwise disjoint in frequency");
        }
}

double refresh_rate(const FrameConfig& cfg) {
    cfg.validate();
    return static_cast<double>(cfg.sample_rate_hz) / static_cast<double>(cfg.frame_len);
}

static json to_json_obj(const FrameConfig& cfg) {
    json bands = json::array();
    for (const auto& b : cfg.bands)
        bands.push_back({{"f_start_hz", b.f_start_hz}, {"f_end_hz", b.f_end_hz}, {"speaker_id", b.speaker_id}});
    return json{{"sample_rate_hz", cfg.sample_rate_hz},
                {"frame_len", cfg.frame_len},
                {"bands", bands},
                {"window_s", cfg.window_s},
                {"crop_full_px", cfg.crop_full_px},
                {"crop_used_px", cfg.crop_used_px},
                {"speed_of_sound_m_s", cfg.speed_of_sound_m_s}};
}

std::string FrameConfig::to_json() const { return to_json_obj(*this).dump(2); }

FrameConfig FrameConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid FrameConfig JSON: ") + e.what());
    }
    FrameConfig cfg;
    try {
        cfg.sample_rate_hz = j.at("sample_rate_hz").get<int>();
        cfg.frame_len = j.at("frame_len").get<int>();
        cfg.window_s = j.at("window_s").get<double>();
        cfg.crop_full_px = j.at("crop_full_px").get<int>();
        cfg.crop_used_px = j.at("crop_used_px").get<int>();
        cfg.speed_of_sound_m_s = j.at("speed_of_sound_m_s").get<double>();
        cfg.bands.clear();
        for (const auto& bj : j.at("bands")) {
            ChirpBand b;
            b.f_start_hz = bj.at("f_start_hz").get<double>();
            b.f_end_hz = bj.at("f_end_hz").get<double>();
            b.speaker_id = bj.at("speaker_id").get<int>();
            cfg.bands.push_back(b);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("FrameConfig field error: ") + e.what());
    }
    cfg.validate();
    return cfg;
}

FrameConfig FrameConfig::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

void FrameConfig::save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write config file: " + path);
    out << to_json() << "\n";
}

uint64_t config_hash(const FrameConfig& cfg) {
    const std::string canon = to_json_obj(cfg).dump();
    uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : canon) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string config_hash_hex(const FrameConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(config_hash(cfg)));
    return std::string(buf);
}

} // namespace echogaze
