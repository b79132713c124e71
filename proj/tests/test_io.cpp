#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echogaze/errors.hpp"
#include "echogaze/session_io.hpp"
#include "echogaze/simulate.hpp"

#include <filesystem>
#include <fstream>
#include <vector>

using namespace echogaze;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "eg_io_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

} // namespace

TEST_CASE("pcm round trip is exact on the int16 grid") {
    TempDir tmp;
    const FrameConfig cfg;
    SceneSpec scene = default_scene();
    std::vector<std::pair<double, double>> gaze(10, {960.0, 540.0});
    auto synth = synthesize_session(scene, gaze, cfg, 3);
    int16_snap(synth.mics);

    const std::string pcm = (tmp.path / "audio.pcm").string();
    write_pcm_int16(pcm, synth.mics);
    const auto back = read_pcm_int16(pcm, static_cast<int>(synth.mics.size()));
    REQUIRE(back.size() == synth.mics.size());
    for (std::size_t c = 0; c < back.size(); ++c) CHECK(back[c] == synth.mics[c]);
}

TEST_CASE("truncated pcm is rejected") {
    TempDir tmp;
    const std::string pcm = (tmp.path / "bad.pcm").string();
    std::ofstream out(pcm, std::ios::binary);
    out.write("abc", 3);  // not a whole frame of 8 channels
    out.close();
    CHECK_THROWS_AS(read_pcm_int16(pcm, 8), IoError);
}

TEST_CASE("session round trip and validation") {
    TempDir tmp;
    const FrameConfig cfg;
    SceneSpec scene = default_scene();
    std::vector<std::pair<double, double>> gaze(30, {400.0, 300.0});
    auto synth = synthesize_session(scene, gaze, cfg, 9);
    int16_snap(synth.mics);

    const std::string dir = (tmp.path / "session_00").string();
    write_session(dir, synth.mics, gaze, cfg, scene, 9);

    const auto bundle = load_session(dir);
    CHECK(bundle.meta.n_channels == 8);
    CHECK(bundle.meta.n_frames == 30);
    CHECK(bundle.meta.seed == 9);
    CHECK(bundle.audio == synth.mics);  // byte-identical after the int16 snap
    CHECK(bundle.labels.size() == gaze.size());
    CHECK(bundle.meta.config_hash_hex == config_hash_hex(cfg));

    SUBCASE("missing file") {
        fs::remove(fs::path(dir) / "labels.csv");
        CHECK_THROWS_AS(load_session(dir), IoError);
    }
    SUBCASE("channel count mismatch") {
        // rewrite meta.json declaring 4 channels
        std::ifstream in(dir + "/meta.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto pos = text.find("\"n_channels\": 8");
        REQUIRE(pos != std::string::npos);
        text.replace(pos, 15, "\"n_channels\": 4");
        std::ofstream out(dir + "/meta.json");
        out << text;
        out.close();
        CHECK_THROWS_AS(load_session(dir), IoError);
    }
    SUBCASE("labels beyond audio length") {
        std::ofstream out(dir + "/labels.csv", std::ios::app);
        for (int i = 30; i < 40; ++i) out << i << ",1,1\n";
        out.close();
        CHECK_THROWS_AS(load_session(dir), IoError);
    }
    SUBCASE("config hash mismatch") {
        std::ifstream in(dir + "/meta.json");
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        in.close();
        const auto pos = text.find("\"config_hash\": \"");
        REQUIRE(pos != std::string::npos);
        text[pos + 17] = text[pos + 17] == 'a' ? 'b' : 'a';
        std::ofstream out(dir + "/meta.json");
        out << text;
        out.close();
        CHECK_THROWS_AS(load_session(dir), IoError);
    }
}

TEST_CASE("labels csv round trip") {
    TempDir tmp;
    std::vector<std::pair<double, double>> labels{{0.5, 1.25}, {1919.0, 1079.0}, {12.125, 7.75}};
    const std::string path = (tmp.path / "labels.csv").string();
    write_labels_csv(path, labels);
    const auto back = read_labels_csv(path);
    REQUIRE(back.size() == labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        CHECK(back[i].first == doctest::Approx(labels[i].first).epsilon(1e-9));
        CHECK(back[i].second == doctest::Approx(labels[i].second).epsilon(1e-9));
    }
}
