#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echogaze/errors.hpp"
#include "echogaze/metrics.hpp"
#include "echogaze/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

using namespace echogaze;

namespace {

// Independent oracle: angle between the eye->truth and eye->pred rays.
double vector_angle_deg(const GazeEvalPoint& p) {
    const double cx = p.geom.width_px / 2.0, cy = p.geom.height_px / 2.0;
    const double gx = (p.truth.first - cx) * p.geom.px_size_cm;
    const double gy = (p.truth.second - cy) * p.geom.px_size_cm;
    const double px = (p.pred.first - cx) * p.geom.px_size_cm;
    const double py = (p.pred.second - cy) * p.geom.px_size_cm;
    const double d = p.geom.eye_distance_cm;
    // rays from the eye at (0, 0, -d) to points in the z=0 plane
    const double ax = gx, ay = gy, az = d;
    const double bx = px, by = py, bz = d;
    const double dot = ax * bx + ay * by + az * bz;
    const double crx = ay * bz - az * by;
    const double cry = az * bx - ax * bz;
    const double crz = ax * by - ay * bx;
    const double cross = std::sqrt(crx * crx + cry * cry + crz * crz);
    return std::atan2(cross, dot) * 180.0 / M_PI;
}

GazeEvalPoint make_point(std::pair<double, double> pred, std::pair<double, double> truth,
                         ScreenGeometry geom = ScreenGeometry{}) {
    GazeEvalPoint p;
    p.pred = pred;
    p.truth = truth;
    p.geom = geom;
    return p;
}

} // namespace

TEST_CASE("perfect prediction has exactly zero error") {
    const auto p = make_point({123.0, 456.0}, {123.0, 456.0});
    CHECK(gaze_angular_error(p) == 0.0);
}

TEST_CASE("equilateral construction returns 60 degrees") {
    // eye (0,0,-5), truth (3,4,0), pred (-4,3,0) in cm: all three squared
    // distances equal 50 exactly, so cos(theta) evaluates to exactly 1/2.
    ScreenGeometry geom;
    geom.width_px = 11;
    geom.height_px = 11;
    geom.px_size_cm = 1.0;
    geom.eye_distance_cm = 5.0;
    const auto p = make_point({5.5 - 4.0, 5.5 + 3.0}, {5.5 + 3.0, 5.5 + 4.0}, geom);
    CHECK(std::fabs(gaze_angular_error(p) - 60.0) < 1e-12);
}

TEST_CASE("10 cm offset at 60 cm matches the right-triangle oracle") {
    ScreenGeometry geom;  // default: 60 cm, 0.031 cm/px
    const double cx = geom.width_px / 2.0, cy = geom.height_px / 2.0;
    const double offset_px = 10.0 / geom.px_size_cm;
    const auto p = make_point({cx + offset_px, cy}, {cx, cy}, geom);
    const double want = std::atan(10.0 / 60.0) * 180.0 / M_PI;
    CHECK(gaze_angular_error(p) == doctest::Approx(want).epsilon(1e-9));
    CHECK(gaze_angular_error(p) == doctest::Approx(9.462).epsilon(1e-3));
}

TEST_CASE("law of cosines agrees with the vector-angle oracle") {
    ScreenGeometry geom;
    Rng rng(12345);
    for (int i = 0; i < 10000; ++i) {
        const auto p = make_point({rng.uniform(0, geom.width_px - 1), rng.uniform(0, geom.height_px - 1)},
                                  {rng.uniform(0, geom.width_px - 1), rng.uniform(0, geom.height_px - 1)},
                                  geom);
        const double got = gaze_angular_error(p);
        const double want = vector_angle_deg(p);
        CHECK(std::fabs(got - want) < 1e-9);
        CHECK(got >= 0.0);
        CHECK(got < 60.0);  // on-screen pairs at 60 cm stay inside the 60-degree FOV
    }
}

TEST_CASE("angular error is symmetric under pred/truth swap") {
    ScreenGeometry geom;
    Rng rng(5);
    for (int i = 0; i < 100; ++i) {
        const std::pair<double, double> a{rng.uniform(0, 1919), rng.uniform(0, 1079)};
        const std::pair<double, double> b{rng.uniform(0, 1919), rng.uniform(0, 1079)};
        CHECK(gaze_angular_error(make_point(a, b)) ==
              doctest::Approx(gaze_angular_error(make_point(b, a))).epsilon(1e-12));
    }
}

TEST_CASE("mgae basics") {
    const auto zero = make_point({10, 10}, {10, 10});
    CHECK(mgae({zero, zero, zero}) == 0.0);

    // one zero-degree point and one 60-degree point average to 30
    ScreenGeometry geom;
    geom.width_px = 11;
    geom.height_px = 11;
    geom.px_size_cm = 1.0;
    geom.eye_distance_cm = 5.0;
    const auto sixty = make_point({5.5 - 4.0, 5.5 + 3.0}, {5.5 + 3.0, 5.5 + 4.0}, geom);
    const auto zero2 = make_point({3.0, 3.0}, {3.0, 3.0}, geom);
    CHECK(mgae({zero2, sixty}) == doctest::Approx(30.0).epsilon(1e-9));
    CHECK(mgae({sixty, zero2}) == doctest::Approx(mgae({zero2, sixty})).epsilon(1e-12));

    CHECK_THROWS_AS(mgae({}), ContractError);
}

// ---- evaluation harness mechanics on fabricated sessions -------------------

namespace {

FrameConfig tiny_cfg() {
    FrameConfig cfg;
    cfg.frame_len = 100;
    cfg.crop_full_px = 8;
    cfg.crop_used_px = 6;
    cfg.window_s = 0.004;  // window_frames = 3
    cfg.bands = {{18000.0, 21000.0, 1}};
    return cfg;
}

// Labels are linearly encoded into two feature rows so even tiny models can
// recover them; both x and y vary over the session.
SessionRecord fabricate_session(int session_id, int n_frames, int calib_frames, uint64_t seed) {
    FrameConfig cfg = tiny_cfg();
    SessionRecord rec;
    rec.session_id = session_id;
    rec.trace.calib_frames = calib_frames;

    Rng rng(seed);
    std::vector<std::pair<double, double>> labels;
    for (int t = 0; t < n_frames; ++t) {
        if (t < calib_frames) {
            const std::pair<double, double> anchors[5] = {
                {0, 0}, {1919, 0}, {1919, 1079}, {0, 1079}, {960, 540}};
            labels.push_back(anchors[t * 5 / calib_frames]);
        } else {
            labels.emplace_back(rng.uniform(0, 1919), rng.uniform(0, 1079));
        }
    }
    rec.trace.points = labels;
    rec.trace.segments.assign(static_cast<std::size_t>(n_frames), Segment::Main);
    for (int t = 0; t < calib_frames; ++t) rec.trace.segments[static_cast<std::size_t>(t)] = Segment::Calib;

    for (int ch = 0; ch < 2; ++ch) {
        EchoProfile p;
        p.rows = cfg.crop_full_px;
        p.cols = n_frames;
        p.mic_id = 1;
        p.band_id = ch + 1;
        p.data.resize(static_cast<std::size_t>(p.rows) * p.cols);
        for (int r = 0; r < p.rows; ++r)
            for (int c = 0; c < p.cols; ++c) {
                double v = 0.1 * rng.uniform(-1, 1);
                if (r == 3) v += labels[static_cast<std::size_t>(c)].first / 1000.0;
                if (r == 4) v += labels[static_cast<std::size_t>(c)].second / 1000.0;
                p.at(r, c) = static_cast<float>(v);
            }
        rec.profiles.channels.push_back(std::move(p));
    }
    return rec;
}

} // namespace

TEST_CASE("cross-session folds partition the sessions") {
    FrameConfig cfg = tiny_cfg();
    std::vector<SessionRecord> sessions;
    for (int s = 0; s < 12; ++s) sessions.push_back(fabricate_session(s, 120, 20, 100 + s));

    EvalOptions opt;
    opt.model.kind = ModelKind::Gbrt;
    opt.model.gbrt.n_trees = 8;
    opt.model.gbrt.max_depth = 2;
    opt.model.gbrt.subsample = 1.0;
    opt.folds = 6;

    const auto rep = evaluate_cross_session(sessions, cfg, ScreenGeometry{}, opt);
    REQUIRE(rep.folds.size() == 6);
    std::set<int> tested;
    for (const auto& f : rep.folds) {
        CHECK(f.test_sessions.size() == 2);
        for (int s : f.test_sessions) CHECK(tested.insert(s).second);
        CHECK(f.n_test > 0);
    }
    CHECK(tested.size() == 12);

    CHECK_THROWS_AS(evaluate_cross_session({sessions[0]}, cfg, ScreenGeometry{}, opt), ConfigError);
}

TEST_CASE("cross-session respects fold_limit") {
    FrameConfig cfg = tiny_cfg();
    std::vector<SessionRecord> sessions;
    for (int s = 0; s < 8; ++s) sessions.push_back(fabricate_session(s, 90, 15, 300 + s));

    EvalOptions opt;
    opt.model.kind = ModelKind::Linear;
    opt.folds = 4;
    opt.fold_limit = 1;
    const auto rep = evaluate_cross_session(sessions, cfg, ScreenGeometry{}, opt);
    REQUIRE(rep.folds.size() == 1);
    CHECK(rep.folds[0].test_sessions == std::vector<int>{0, 1});
    // 6 train sessions' worth of instances
    CHECK(rep.folds[0].n_train > 0);
}

TEST_CASE("in-session split keeps train and test windows disjoint") {
    FrameConfig cfg = tiny_cfg();
    const int wf = cfg.window_frames();
    std::vector<SessionRecord> sessions{fabricate_session(0, 200, 20, 42)};

    EvalOptions opt;
    opt.model.kind = ModelKind::Linear;
    const auto rep = evaluate_in_session(sessions, cfg, ScreenGeometry{}, opt);
    REQUIRE(rep.folds.size() == 1);

    // reproduce the split arithmetic: train t < B, test t >= B + wf - 1
    const int main_begin = 20, main_end = 200;
    const int boundary = main_begin + static_cast<int>(0.8 * (main_end - main_begin));
    const auto train = main_instances(sessions[0], cfg, false, 0, 1, main_begin, boundary);
    const auto test = main_instances(sessions[0], cfg, false, 0, 1, boundary + wf - 1, main_end);
    CHECK(!train.empty());
    CHECK(!test.empty());
    int train_max_t = 0, test_min_start = 1 << 30;
    for (const auto& i : train) train_max_t = std::max(train_max_t, i.t_end);
    for (const auto& i : test) test_min_start = std::min(test_min_start, i.t_end - (wf - 1));
    CHECK(train_max_t < boundary);           // train windows end before the boundary
    CHECK(test_min_start >= boundary);       // test windows start at/after it
    CHECK(rep.folds[0].n_train == static_cast<int>(train.size()));
    CHECK(rep.folds[0].n_test == static_cast<int>(test.size()));
}

TEST_CASE("calibration instances come from the calib prefix only") {
    FrameConfig cfg = tiny_cfg();
    const auto rec = fabricate_session(0, 100, 30, 7);
    const auto cal = calib_instances(rec, cfg, 1);
    CHECK(!cal.empty());
    for (const auto& inst : cal) CHECK(inst.t_end < 30);
    const auto main = main_instances(rec, cfg, false, 0, 1);
    for (const auto& inst : main) CHECK(inst.t_end >= 30);
}
