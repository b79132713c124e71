#include "echogaze/metrics.hpp"

#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <algorithm>
#include <cmath>

namespace echogaze {

double gaze_angular_error(const GazeEvalPoint& p) {
    p.geom.validate();
    const auto g = px_to_cm(p.geom, p.truth);
    const double cx = p.geom.width_px / 2.0;
    const double cy = p.geom.height_px / 2.0;
    // Predictions may land off screen; convert without the bounds check.
    const double px_cm = (p.pred.first - cx) * p.geom.px_size_cm;
    const double py_cm = (p.pred.second - cy) * p.geom.px_size_cm;
    const double dz = p.geom.eye_distance_cm;

    const double deg2 = g.first * g.first + g.second * g.second + dz * dz;
    const double dep2 = px_cm * px_cm + py_cm * py_cm + dz * dz;
    const double dgx = g.first - px_cm, dgy = g.second - py_cm;
    const double dgp2 = dgx * dgx + dgy * dgy;
    if (deg2 <= 0.0 || dep2 <= 0.0)
        throw ContractError("gaze_angular_error: degenerate eye geometry");

    double cosv = (deg2 + dep2 - dgp2) / (2.0 * std::sqrt(deg2 * dep2));
    cosv = std::clamp(cosv, -1.0, 1.0);
    return std::acos(cosv) * 180.0 / M_PI;
}

double mgae(const std::vector<GazeEvalPoint>& points) {
    if (points.empty()) throw ContractError("mgae: empty point list");
    double acc = 0.0;
    for (const auto& p : points) acc += gaze_angular_error(p);
    return acc / static_cast<double>(points.size());
}

std::vector<GazeInstance> main_instances(const SessionRecord& rec, const FrameConfig& cfg,
                                         bool augment, uint64_t seed, int stride,
                                         int t_min, int t_max) {
    const int wf = cfg.window_frames();
    const int lo = std::max(t_min < 0 ? rec.trace.calib_frames : t_min, wf - 1);
    const int hi = t_max < 0 ? rec.trace.n_frames() : t_max;
    return assemble_instances_range(rec.profiles, rec.trace.points, cfg, augment, seed,
                                    rec.session_id, stride, lo, hi);
}

std::vector<GazeInstance> calib_instances(const SessionRecord& rec, const FrameConfig& cfg,
                                          int stride) {
    return assemble_instances_range(rec.profiles, rec.trace.points, cfg, /*augment=*/false, 0,
                                    rec.session_id, stride, 0, rec.trace.calib_frames);
}

namespace {

ModelArtifact fit_model(const ModelSpec& spec, const std::vector<GazeInstance>& train,
                        TensorShape shape, uint64_t cfg_hash) {
    if (spec.kind == ModelKind::Linear) return fit_linear(train, spec.l2, shape, cfg_hash);
    return fit_gbrt(train, spec.gbrt, shape, cfg_hash);
}

struct ScoredSet {
    double mgae_raw = 0.0;
    double mgae_cal = 0.0;
    int n = 0;
    bool fallback = false;
};

ScoredSet score_session(const ModelArtifact& base, const SessionRecord& rec,
                        const std::vector<GazeInstance>& test, const FrameConfig& cfg,
                        const ScreenGeometry& geom, int calib_stride,
                        std::vector<InstanceError>* errors_out) {
    ScoredSet s;
    if (test.empty()) return s;

    ModelArtifact calibrated = base;  // per-session correction on a copy
    auto cal = calib_instances(rec, cfg, calib_stride);
    if (cal.size() >= 3) {
        s.fallback = calibrate(calibrated, cal).offset_only_fallback;
    }

    double raw_acc = 0.0, cal_acc = 0.0;
    for (const auto& inst : test) {
        GazeEvalPoint pt;
        pt.geom = geom;
        pt.truth = {inst.label_x, inst.label_y};
        pt.pred = base.predict_raw(inst);
        const double raw_err = gaze_angular_error(pt);
        pt.pred = predict(calibrated, inst);
        const double cal_err = gaze_angular_error(pt);
        raw_acc += raw_err;
        cal_acc += cal_err;
        if (errors_out)
            errors_out->push_back(InstanceError{rec.session_id, inst.t_end, inst.label_x,
                                                inst.label_y, pt.pred.first, pt.pred.second,
                                                cal_err});
    }
    s.n = static_cast<int>(test.size());
    s.mgae_raw = raw_acc;  // sums; caller divides after pooling
    s.mgae_cal = cal_acc;
    return s;
}

TensorShape shape_from(const FrameConfig& cfg, const SessionRecord& rec) {
    return TensorShape{cfg.window_frames(), cfg.crop_used_px,
                       static_cast<int>(rec.profiles.channels.size())};
}

} // namespace

EvalReport evaluate_cross_session(const std::vector<SessionRecord>& sessions,
                                  const FrameConfig& cfg, const ScreenGeometry& geom,
                                  const EvalOptions& opt,
                                  std::vector<InstanceError>* errors_out,
                                  std::vector<ModelArtifact>* fold_models) {
    if (sessions.size() < 2)
        throw ConfigError("cross-session evaluation needs at least 2 sessions");
    if (opt.folds < 1 || opt.folds > static_cast<int>(sessions.size()))
        throw ConfigError("fold count must be in [1, n_sessions]");

    const int n_sessions = static_cast<int>(sessions.size());
    const int n_folds = opt.folds;
    const int run_folds = opt.fold_limit > 0 ? std::min(opt.fold_limit, n_folds) : n_folds;
    const TensorShape shape = shape_from(cfg, sessions.front());
    const uint64_t cfg_hash = config_hash(cfg);

    EvalReport report;
    report.mode = "cross_session";
    for (int fold = 0; fold < run_folds; ++fold) {
        // Contiguous chunking: fold f tests sessions [f*n/k, (f+1)*n/k).
        const int lo = fold * n_sessions / n_folds;
        const int hi = (fold + 1) * n_sessions / n_folds;
        FoldReport fr;
        fr.fold = fold;

        std::vector<GazeInstance> train;
        for (int s = 0; s < n_sessions; ++s) {
            if (s >= lo && s < hi) {
                fr.test_sessions.push_back(sessions[static_cast<std::size_t>(s)].session_id);
                continue;
            }
            auto inst = main_instances(sessions[static_cast<std::size_t>(s)], cfg, opt.augment_train,
                                       rng_derive(opt.seed, "augment", static_cast<uint64_t>(s)),
                                       opt.train_stride);
            for (auto& i : inst) train.push_back(std::move(i));
        }
        if (train.empty()) throw ConfigError("cross-session fold has no training instances");
        fr.n_train = static_cast<int>(train.size());
        ModelArtifact model = fit_model(opt.model, train, shape, cfg_hash);
        train.clear();
        train.shrink_to_fit();

        double raw_sum = 0.0, cal_sum = 0.0;
        int n_points = 0;
        for (int s = lo; s < hi; ++s) {
            const auto& rec = sessions[static_cast<std::size_t>(s)];
            auto test = main_instances(rec, cfg, /*augment=*/false, 0, opt.test_stride);
            auto scored = score_session(model, rec, test, cfg, geom, opt.calib_stride, errors_out);
            raw_sum += scored.mgae_raw;
            cal_sum += scored.mgae_cal;
            n_points += scored.n;
            fr.calib_fallback = fr.calib_fallback || scored.fallback;
        }
        if (n_points == 0) throw ConfigError("cross-session fold has no test instances");
        fr.n_test = n_points;
        fr.mgae_raw_deg = raw_sum / n_points;
        fr.mgae_cal_deg = cal_sum / n_points;
        report.folds.push_back(fr);
        if (fold_models) fold_models->push_back(std::move(model));
    }

    for (const auto& fr : report.folds) {
        report.mean_mgae_raw_deg += fr.mgae_raw_deg;
        report.mean_mgae_cal_deg += fr.mgae_cal_deg;
    }
    report.mean_mgae_raw_deg /= static_cast<double>(report.folds.size());
    report.mean_mgae_cal_deg /= static_cast<double>(report.folds.size());
    return report;
}

EvalReport evaluate_in_session(const std::vector<SessionRecord>& sessions,
                               const FrameConfig& cfg, const ScreenGeometry& geom,
                               const EvalOptions& opt,
                               std::vector<InstanceError>* errors_out,
                               std::vector<ModelArtifact>* fold_models) {
    if (sessions.empty()) throw ConfigError("in-session evaluation needs at least 1 session");
    const int wf = cfg.window_frames();
    const TensorShape shape = shape_from(cfg, sessions.front());
    const uint64_t cfg_hash = config_hash(cfg);

    std::vector<GazeInstance> train;
    std::vector<int> boundaries(sessions.size());
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto& rec = sessions[s];
        const int main_begin = rec.trace.calib_frames;
        const int main_end = rec.trace.n_frames();
        const int boundary =
            main_begin + static_cast<int>(opt.in_session_train_frac * (main_end - main_begin));
        boundaries[s] = boundary;
        auto inst = main_instances(rec, cfg, opt.augment_train,
                                   rng_derive(opt.seed, "augment", s), opt.train_stride,
                                   main_begin, boundary);
        for (auto& i : inst) train.push_back(std::move(i));
    }
    if (train.size() < 2) throw ConfigError("in-session split produced too few training instances");

    FoldReport fr;
    fr.fold = 0;
    fr.n_train = static_cast<int>(train.size());
    ModelArtifact model = fit_model(opt.model, train, shape, cfg_hash);
    train.clear();
    train.shrink_to_fit();

    double raw_sum = 0.0, cal_sum = 0.0;
    int n_points = 0;
    for (std::size_t s = 0; s < sessions.size(); ++s) {
        const auto& rec = sessions[s];
        fr.test_sessions.push_back(rec.session_id);
        // Windows touching the boundary are dropped: test starts wf-1 frames in.
        auto test = main_instances(rec, cfg, /*augment=*/false, 0, opt.test_stride,
                                   boundaries[s] + wf - 1, rec.trace.n_frames());
        auto scored = score_session(model, rec, test, cfg, geom, opt.calib_stride, errors_out);
        raw_sum += scored.mgae_raw;
        cal_sum += scored.mgae_cal;
        n_points += scored.n;
        fr.calib_fallback = fr.calib_fallback || scored.fallback;
    }
    if (n_points == 0) throw ConfigError("in-session split produced no test instances");
    fr.n_test = n_points;
    fr.mgae_raw_deg = raw_sum / n_points;
    fr.mgae_cal_deg = cal_sum / n_points;

    if (fold_models) fold_models->push_back(std::move(model));

    EvalReport report;
    report.mode = "in_session";
    report.folds.push_back(fr);
    report.mean_mgae_raw_deg = fr.mgae_raw_deg;
    report.mean_mgae_cal_deg = fr.mgae_cal_deg;
    return report;
}

} // namespace echogaze
