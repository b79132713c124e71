#include "echogaze/session_io.hpp"

#include "echogaze/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace echogaze {

namespace fs = std::filesystem;
using nlohmann::json;

void write_pcm_int16(const std::string& path, const std::vector<std::vector<double>>& channels) {
    if (channels.empty()) throw ContractError("write_pcm_int16: no channels");
    const std::size_t n = channels.front().size();
    for (const auto& ch : channels)
        if (ch.size() != n) throw ContractError("write_pcm_int16: channel length mismatch");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write pcm file: " + path);
    std::vector<int16_t> row(channels.size());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < channels.size(); ++c) {
            const double v = std::clamp(channels[c][i], -1.0, 1.0);
            row[c] = static_cast<int16_t>(std::lround(v * 32767.0));
        }
        out.write(reinterpret_cast<const char*>(row.data()),
                  static_cast<std::streamsize>(row.size() * sizeof(int16_t)));
    }
    if (!out) throw IoError("short write on pcm file: " + path);
}

std::vector<std::vector<double>> read_pcm_int16(const std::string& path, int n_channels) {
    if (n_channels < 1) throw ContractError("read_pcm_int16: bad channel count");
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) throw IoError("cannot open pcm file: " + path);
    const std::streamoff bytes = in.tellg();
    in.seekg(0);
    const std::size_t frame_bytes = static_cast<std::size_t>(n_channels) * sizeof(int16_t);
    if (bytes <= 0 || static_cast<std::size_t>(bytes) % frame_bytes != 0)
        throw IoError("truncated pcm file (not a whole number of sample frames): " + path);
    const std::size_t n = static_cast<std::size_t>(bytes) / frame_bytes;

    std::vector<std::vector<double>> channels(static_cast<std::size_t>(n_channels),
                                              std::vector<double>(n));
    std::vector<int16_t> buf(static_cast<std::size_t>(n_channels) * 4096);
    std::size_t pos = 0;
    while (pos < n) {
        const std::size_t take = std::min<std::size_t>(4096, n - pos);
        in.read(reinterpret_cast<char*>(buf.data()),
                static_cast<std::streamsize>(take * frame_bytes));
        if (!in) throw IoError("read failure on pcm file: " + path);
        for (std::size_t i = 0; i < take; ++i)
            for (int c = 0; c < n_channels; ++c)
                channels[static_cast<std::size_t>(c)][pos + i] =
                    buf[i * static_cast<std::size_t>(n_channels) + static_cast<std::size_t>(c)] / 32767.0;
        pos += take;
    }
    return channels;
}

void int16_snap(std::vector<std::vector<double>>& channels) {
    for (auto& ch : channels)
        for (double& v : ch)
            v = std::lround(std::clamp(v, -1.0, 1.0) * 32767.0) / 32767.0;
}

void write_labels_csv(const std::string& path, const std::vector<std::pair<double, double>>& labels) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write labels file: " + path);
    out << "frame_index,x_px,y_px\n";
    out.precision(10);
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << "," << labels[i].first << "," << labels[i].second << "\n";
    if (!out) throw IoError("short write on labels file: " + path);
}

std::vector<std::pair<double, double>> read_labels_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open labels file: " + path);
    std::vector<std::pair<double, double>> labels;
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty labels file: " + path);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::getline(ss, tok, ',');
        const std::size_t idx = static_cast<std::size_t>(std::stoull(tok));
        if (idx != labels.size()) throw IoError("non-contiguous frame_index in " + path);
        std::getline(ss, tok, ',');
        const double x = std::stod(tok);
        std::getline(ss, tok, ',');
        const double y = std::stod(tok);
        labels.emplace_back(x, y);
    }
    return labels;
}

void write_session(const std::string& dir, const std::vector<std::vector<double>>& audio,
                   const std::vector<std::pair<double, double>>& labels, const FrameConfig& cfg,
                   const SceneSpec& scene, uint64_t seed) {
    fs::create_directories(dir);
    write_pcm_int16(dir + "/audio.pcm", audio);
    write_labels_csv(dir + "/labels.csv", labels);

    json meta;
    meta["config"] = json::parse(cfg.to_json());
    meta["scene"] = json::parse(scene.to_json());
    meta["seed"] = seed;
    meta["n_channels"] = audio.size();
    meta["n_frames"] = audio.empty() ? 0 : audio.front().size() / static_cast<std::size_t>(cfg.frame_len);
    meta["config_hash"] = config_hash_hex(cfg);
    std::ofstream out(dir + "/meta.json");
    if (!out) throw IoError("cannot write meta file: " + dir + "/meta.json");
    out << meta.dump(2) << "\n";
}

SessionBundle load_session(const std::string& dir) {
    const std::string meta_path = dir + "/meta.json";
    const std::string pcm_path = dir + "/audio.pcm";
    const std::string labels_path = dir + "/labels.csv";
    for (const auto& p : {meta_path, pcm_path, labels_path})
        if (!fs::exists(p)) throw IoError("missing session file: " + p);

    SessionBundle b;
    std::ifstream meta_in(meta_path);
    std::stringstream ss;
    ss << meta_in.rdbuf();
    json meta;
    try {
        meta = json::parse(ss.str());
        b.meta.cfg = FrameConfig::from_json(meta.at("config").dump());
        b.meta.scene = SceneSpec::from_json(meta.at("scene").dump());
        b.meta.seed = meta.at("seed").get<uint64_t>();
        b.meta.n_channels = meta.at("n_channels").get<int>();
        b.meta.n_frames = meta.at("n_frames").get<int>();
        b.meta.config_hash_hex = meta.at("config_hash").get<std::string>();
    } catch (const json::exception& e) {
        throw IoError("invalid meta.json in " + dir + ": " + e.what());
    }
    if (b.meta.config_hash_hex != config_hash_hex(b.meta.cfg))
        throw IoError("config hash mismatch in " + meta_path);
    if (b.meta.n_channels < 1) throw IoError("meta declares no channels in " + meta_path);

    b.audio = read_pcm_int16(pcm_path, b.meta.n_channels);
    const int frames = static_cast<int>(b.audio.front().size()) / b.meta.cfg.frame_len;
    if (frames != b.meta.n_frames)
        throw IoError("audio length disagrees with meta n_frames in " + dir);
    if (static_cast<int>(b.meta.scene.mics.size()) != b.meta.n_channels)
        throw IoError("meta channel count disagrees with scene microphones in " + dir);

    b.labels = read_labels_csv(labels_path);
    if (static_cast<int>(b.labels.size()) > frames)
        throw IoError("labels extend beyond audio length in " + dir);
    return b;
}

} // namespace echogaze
