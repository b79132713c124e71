#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "echogaze/errors.hpp"
#include "echogaze/metrics.hpp"
#include "echogaze/model.hpp"
#include "echogaze/rng.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <vector>

using namespace echogaze;

namespace {

GazeInstance make_instance(std::vector<float> tensor, double lx, double ly) {
    GazeInstance inst;
    inst.tensor = std::move(tensor);
    inst.label_x = lx;
    inst.label_y = ly;
    return inst;
}

std::vector<GazeInstance> random_dataset(int n, TensorShape shape, uint64_t seed,
                                         bool linear_labels) {
    Rng rng(seed);
    const int d = shape.features();
    std::vector<double> wx(static_cast<std::size_t>(d)), wy(static_cast<std::size_t>(d));
    for (auto& v : wx) v = rng.uniform(-1, 1);
    for (auto& v : wy) v = rng.uniform(-1, 1);

    std::vector<GazeInstance> out;
    for (int i = 0; i < n; ++i) {
        std::vector<float> t(static_cast<std::size_t>(d));
        for (auto& v : t) v = static_cast<float>(rng.uniform(-1, 1));
        double lx = 960.0, ly = 540.0;
        if (linear_labels) {
            for (int f = 0; f < d; ++f) {
                lx += 20.0 * wx[static_cast<std::size_t>(f)] * t[static_cast<std::size_t>(f)];
                ly += 12.0 * wy[static_cast<std::size_t>(f)] * t[static_cast<std::size_t>(f)];
            }
        } else {
            lx = rng.uniform(0, 1919);
            ly = rng.uniform(0, 1079);
        }
        out.push_back(make_instance(std::move(t), lx, ly));
    }
    return out;
}

double train_mgae(const ModelArtifact& m, const std::vector<GazeInstance>& data) {
    ScreenGeometry geom;
    std::vector<GazeEvalPoint> pts;
    for (const auto& inst : data) {
        GazeEvalPoint p;
        p.geom = geom;
        p.truth = {std::clamp(inst.label_x, 0.0, 1919.0), std::clamp(inst.label_y, 0.0, 1079.0)};
        p.pred = m.predict_raw(inst);
        pts.push_back(p);
    }
    return mgae(pts);
}

} // namespace

TEST_CASE("ridge recovers an exactly linear target") {
    const TensorShape shape{2, 5, 2};  // 20 features
    const auto data = random_dataset(60, shape, 1, /*linear_labels=*/true);
    const auto model = fit_linear(data, 1e-8, shape);
    CHECK(train_mgae(model, data) < 0.1);
}

TEST_CASE("single instance with l2=0 is interpolated exactly") {
    const TensorShape shape{2, 3, 2};
    auto data = random_dataset(1, shape, 2, false);
    data[0].label_x = 333.25;
    data[0].label_y = 777.5;
    const auto model = fit_linear(data, 0.0, shape);
    const auto p = model.predict_raw(data[0]);
    CHECK(p.first == doctest::Approx(333.25).epsilon(1e-12));
    CHECK(p.second == doctest::Approx(777.5).epsilon(1e-12));
}

TEST_CASE("normalization absorbs global feature scaling") {
    const TensorShape shape{2, 5, 2};
    const auto data = random_dataset(40, shape, 3, true);
    auto scaled = data;
    for (auto& inst : scaled)
        for (auto& v : inst.tensor) v *= 4.0f;  // power of two: exact in float

    const auto m1 = fit_linear(data, 1.0, shape);
    const auto m2 = fit_linear(scaled, 1.0, shape);

    const auto probe = random_dataset(5, shape, 4, false);
    for (const auto& inst : probe) {
        auto inst4 = inst;
        for (auto& v : inst4.tensor) v *= 4.0f;
        const auto p1 = m1.predict_raw(inst);
        const auto p2 = m2.predict_raw(inst4);
        CHECK(p1.first == doctest::Approx(p2.first).epsilon(1e-9));
        CHECK(p1.second == doctest::Approx(p2.second).epsilon(1e-9));
    }
}

TEST_CASE("invalid fit parameters are rejected") {
    const TensorShape shape{2, 3, 2};
    const auto data = random_dataset(4, shape, 5, false);
    CHECK_THROWS_AS(fit_linear(data, -1.0, shape), ConfigError);

    GbrtParams p;
    p.n_trees = 0;
    CHECK_THROWS_AS(fit_gbrt(data, p, shape), ConfigError);
    p = GbrtParams{};
    p.learning_rate = 0.0;
    CHECK_THROWS_AS(fit_gbrt(data, p, shape), ConfigError);
    p = GbrtParams{};
    p.max_depth = 0;
    CHECK_THROWS_AS(fit_gbrt(data, p, shape), ConfigError);

    CHECK_THROWS_AS(fit_gbrt({data[0]}, GbrtParams{}, shape), ContractError);
}

TEST_CASE("gbrt on constant labels predicts the constant") {
    const TensorShape shape{2, 4, 2};
    auto data = random_dataset(20, shape, 6, false);
    for (auto& inst : data) {
        inst.label_x = 500.0;
        inst.label_y = 250.0;
    }
    GbrtParams params;
    params.n_trees = 10;
    params.subsample = 1.0;
    const auto model = fit_gbrt(data, params, shape);
    for (const auto& inst : data) {
        const auto p = model.predict_raw(inst);
        CHECK(p.first == doctest::Approx(500.0).epsilon(1e-12));
        CHECK(p.second == doctest::Approx(250.0).epsilon(1e-12));
    }
    // every tree is a single degenerate leaf worth zero
    for (const auto& t : model.ens_x.trees) {
        CHECK(t.nodes.size() == 1);
        CHECK(t.nodes[0].value == 0.0);
    }
}

namespace {

// Brute-force best-split oracle: all features, all midpoints between sorted
// unique values, exact SSE reduction.
struct OracleSplit {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

OracleSplit best_split_oracle(const std::vector<GazeInstance>& data, int d, int coord) {
    OracleSplit best;
    const auto label = [&](const GazeInstance& g) { return coord == 0 ? g.label_x : g.label_y; };
    double total = 0.0;
    for (const auto& g : data) total += label(g);
    const double n = static_cast<double>(data.size());

    for (int f = 0; f < d; ++f) {
        std::vector<std::pair<float, double>> vals;
        for (const auto& g : data) vals.emplace_back(g.tensor[static_cast<std::size_t>(f)], label(g));
        std::sort(vals.begin(), vals.end());
        double sl = 0.0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            sl += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            const double nl = static_cast<double>(i + 1);
            const double nr = n - nl;
            const double sr = total - sl;
            const double gain = sl * sl / nl + sr * sr / nr - total * total / n;
            if (gain > best.gain) {
                best.gain = gain;
                best.feature = f;
                best.threshold = (static_cast<double>(vals[i].first) + vals[i + 1].first) / 2.0;
            }
        }
    }
    return best;
}

} // namespace

TEST_CASE("one-tree stump recovers a sign split exactly (vs brute-force oracle)") {
    const TensorShape shape{1, 5, 2};  // 10 features
    Rng rng(7);
    std::vector<GazeInstance> data;
    const int split_feature = 6;
    for (int i = 0; i < 10; ++i) {
        std::vector<float> t(10);
        for (auto& v : t) v = static_cast<float>(rng.uniform(-1, 1));
        const double lx = t[split_feature] > 0 ? 1200.0 : 400.0;
        data.push_back(make_instance(std::move(t), lx, 540.0));
    }

    GbrtParams params;
    params.n_trees = 1;
    params.max_depth = 1;
    params.learning_rate = 1.0;
    params.subsample = 1.0;

    for (bool exact : {true, false}) {
        params.exact_splits = exact;
        const auto model = fit_gbrt(data, params, shape);
        const auto oracle = best_split_oracle(data, 10, 0);
        CHECK(oracle.feature == split_feature);

        REQUIRE(model.ens_x.trees.size() == 1);
        const auto& root = model.ens_x.trees[0].nodes[0];
        CHECK(root.feature == oracle.feature);
        CHECK(root.gain == doctest::Approx(oracle.gain).epsilon(1e-9));
        for (const auto& inst : data) {
            const auto p = model.predict_raw(inst);
            CHECK(p.first == doctest::Approx(inst.label_x).epsilon(1e-12));
        }
    }
}

TEST_CASE("gbrt training loss is non-increasing with subsample 1") {
    const TensorShape shape{2, 5, 2};
    const auto data = random_dataset(80, shape, 8, true);
    GbrtParams params;
    params.n_trees = 40;
    params.subsample = 1.0;
    const auto model = fit_gbrt(data, params, shape);

    std::vector<double> preds(data.size(), model.ens_x.init);
    double prev = 1e300;
    for (std::size_t stage = 0; stage < model.ens_x.trees.size(); ++stage) {
        double mse = 0.0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            preds[i] += model.ens_x.trees[stage].predict(data[i].tensor.data());
            const double e = data[i].label_x - preds[i];
            mse += e * e;
        }
        CHECK(mse <= prev + 1e-9);
        prev = mse;
    }
}

TEST_CASE("hist and exact splits agree when unique values fit the bins") {
    const TensorShape shape{1, 4, 2};
    const auto data = random_dataset(30, shape, 9, true);  // 30 uniques < 64 bins
    GbrtParams params;
    params.n_trees = 12;
    params.max_depth = 3;
    params.subsample = 1.0;
    params.exact_splits = false;
    const auto hist = fit_gbrt(data, params, shape);
    params.exact_splits = true;
    const auto exact = fit_gbrt(data, params, shape);
    for (const auto& inst : data) {
        const auto a = hist.predict_raw(inst);
        const auto b = exact.predict_raw(inst);
        CHECK(a.first == doctest::Approx(b.first).epsilon(1e-9));
        CHECK(a.second == doctest::Approx(b.second).epsilon(1e-9));
    }
}

TEST_CASE("predict applies the calibration affine exactly") {
    const TensorShape shape{2, 3, 2};
    const auto data = random_dataset(10, shape, 10, true);
    auto model = fit_linear(data, 1.0, shape);

    const auto raw = model.predict_raw(data[0]);
    CHECK(predict(model, data[0]) == raw);  // identity calibration

    model.calib.b = {10.0, 0.0};
    const auto shifted = predict(model, data[0]);
    CHECK(shifted.first == doctest::Approx(raw.first + 10.0).epsilon(1e-12));
    CHECK(shifted.second == doctest::Approx(raw.second).epsilon(1e-12));

    GazeInstance bad = data[0];
    bad.tensor.pop_back();
    CHECK_THROWS_AS(model.predict_raw(bad), ContractError);
}

TEST_CASE("calibrate: identity, offset recovery, idempotence, fallback") {
    const TensorShape shape{2, 4, 2};
    const auto data = random_dataset(40, shape, 11, true);
    auto model = fit_linear(data, 1e-8, shape);

    // near-perfect raw predictions -> near-identity correction
    auto m1 = model;
    calibrate(m1, data);
    CHECK(m1.calib.a[0][0] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(m1.calib.a[1][1] == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(std::fabs(m1.calib.b[0]) < 1e-4);

    // pure shift is recovered exactly
    auto shifted_data = data;
    for (auto& inst : shifted_data) {
        inst.label_x += 50.0;
        inst.label_y += -30.0;
    }
    auto m2 = model;
    const auto res = calibrate(m2, shifted_data);
    CHECK_FALSE(res.offset_only_fallback);
    for (const auto& inst : data) {
        const auto raw = model.predict_raw(inst);
        const auto cal = m2.calib.apply(raw);
        CHECK(cal.first == doctest::Approx(raw.first + 50.0).epsilon(1e-6));
        CHECK(cal.second == doctest::Approx(raw.second - 30.0).epsilon(1e-6));
    }

    // idempotent: calibrating twice on the same data gives the same correction
    auto m3 = m2;
    calibrate(m3, shifted_data);
    CHECK(m3.calib.a[0][0] == doctest::Approx(m2.calib.a[0][0]).epsilon(1e-8));
    CHECK(m3.calib.b[0] == doctest::Approx(m2.calib.b[0]).epsilon(1e-8));

    // degenerate anchors: constant model output -> offset-only fallback
    auto constant = random_dataset(6, shape, 12, false);
    for (auto& inst : constant) {
        inst.label_x = 700.0;
        inst.label_y = 300.0;
    }
    GbrtParams params;
    params.n_trees = 1;
    auto cmodel = fit_gbrt(constant, params, shape);
    const auto fres = calibrate(cmodel, constant);
    CHECK(fres.offset_only_fallback);
    CHECK(cmodel.calib.offset_only_fallback);

    CHECK_THROWS_AS(calibrate(cmodel, std::vector<GazeInstance>(constant.begin(), constant.begin() + 2)),
                    ContractError);
}

TEST_CASE("feature importance: single split dominates its channel") {
    const TensorShape shape{1, 5, 2};
    Rng rng(13);
    std::vector<GazeInstance> data;
    for (int i = 0; i < 12; ++i) {
        std::vector<float> t(10);
        for (auto& v : t) v = static_cast<float>(rng.uniform(-1, 1));
        const double lx = t[7] > 0 ? 1000.0 : 200.0;
        data.push_back(make_instance(std::move(t), lx, 540.0));
    }
    GbrtParams params;
    params.n_trees = 1;
    params.max_depth = 1;
    params.subsample = 1.0;
    const auto model = fit_gbrt(data, params, shape);
    const auto table = feature_importance(model);
    REQUIRE(table.scaled.size() == 2);
    CHECK(table.scaled[1] == 100.0);  // feature 7 lives in channel 1
    CHECK(table.scaled[0] == 0.0);

    const auto lin = fit_linear(data, 1.0, shape);
    CHECK_THROWS_AS(feature_importance(lin), ContractError);
}

TEST_CASE("importance sums equal replayed impurity reductions") {
    const TensorShape shape{2, 4, 2};
    const auto data = random_dataset(50, shape, 14, true);
    GbrtParams params;
    params.n_trees = 15;
    params.max_depth = 2;
    params.subsample = 1.0;  // replay does not need the subsample draw
    const auto model = fit_gbrt(data, params, shape);

    // Replay each stored tree in training order, recomputing every split's
    // SSE reduction from the residuals the stage actually saw.
    double replayed_total = 0.0;
    for (int coord = 0; coord < 2; ++coord) {
        const Ensemble& ens = coord == 0 ? model.ens_x : model.ens_y;
        std::vector<double> pred(data.size(), ens.init);
        std::vector<double> resid(data.size());
        for (const auto& tree : ens.trees) {
            for (std::size_t i = 0; i < data.size(); ++i)
                resid[i] = (coord == 0 ? data[i].label_x : data[i].label_y) - pred[i];
            std::vector<std::vector<int>> node_members(tree.nodes.size());
            for (std::size_t i = 0; i < data.size(); ++i) {
                int node = 0;
                for (;;) {
                    node_members[static_cast<std::size_t>(node)].push_back(static_cast<int>(i));
                    const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
                    if (nd.feature < 0) break;
                    node = data[i].tensor[nd.feature] <= nd.threshold ? nd.left : nd.right;
                }
            }
            for (std::size_t nidx = 0; nidx < tree.nodes.size(); ++nidx) {
                const TreeNode& nd = tree.nodes[nidx];
                if (nd.feature < 0) continue;
                double s = 0, sl = 0;
                int n = 0, nl = 0;
                for (int i : node_members[nidx]) {
                    s += resid[static_cast<std::size_t>(i)];
                    ++n;
                    if (data[static_cast<std::size_t>(i)].tensor[nd.feature] <= nd.threshold) {
                        sl += resid[static_cast<std::size_t>(i)];
                        ++nl;
                    }
                }
                const double sr = s - sl;
                const int nr = n - nl;
                REQUIRE(nl > 0);
                REQUIRE(nr > 0);
                const double gain = sl * sl / nl + sr * sr / nr - s * s / n;
                CHECK(nd.gain == doctest::Approx(gain).epsilon(1e-6));
                replayed_total += gain;
            }
            for (std::size_t i = 0; i < data.size(); ++i)
                pred[i] += tree.predict(data[i].tensor.data());
        }
    }
    const auto table = feature_importance(model);
    double table_total = 0.0;
    for (double v : table.raw) table_total += v;
    CHECK(table_total == doctest::Approx(replayed_total).epsilon(1e-6));
}

TEST_CASE("model artifact round trip preserves predictions") {
    const TensorShape shape{2, 5, 2};
    const auto data = random_dataset(30, shape, 15, true);
    const auto probe = random_dataset(6, shape, 16, false);
    const std::string path = (std::filesystem::temp_directory_path() / "eg_model.gzmd").string();

    auto lin = fit_linear(data, 1.0, shape, 0xabcdef);
    calibrate(lin, data);
    lin.save(path);
    const auto lin2 = ModelArtifact::load(path);
    CHECK(lin2.kind == ModelKind::Linear);
    CHECK(lin2.config_hash == 0xabcdef);
    for (const auto& inst : probe) {
        CHECK(predict(lin, inst).first == doctest::Approx(predict(lin2, inst).first).epsilon(1e-12));
        CHECK(predict(lin, inst).second == doctest::Approx(predict(lin2, inst).second).epsilon(1e-12));
    }

    GbrtParams params;
    params.n_trees = 10;
    const auto gb = fit_gbrt(data, params, shape, 0x1234);
    gb.save(path);
    const auto gb2 = ModelArtifact::load(path);
    CHECK(gb2.kind == ModelKind::Gbrt);
    CHECK(gb2.gbrt_params.n_trees == 10);
    for (const auto& inst : probe) {
        CHECK(gb.predict_raw(inst).first == doctest::Approx(gb2.predict_raw(inst).first).epsilon(1e-12));
        CHECK(gb.predict_raw(inst).second == doctest::Approx(gb2.predict_raw(inst).second).epsilon(1e-12));
    }

    std::filesystem::remove(path);
    CHECK_THROWS_AS(ModelArtifact::load(path), IoError);
}
