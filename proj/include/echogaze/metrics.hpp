#pragma once

#include "echogaze/model.hpp"
#include "echogaze/protocol.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace echogaze {

struct GazeEvalPoint {
    std::pair<double, double> pred;   // px
    std::pair<double, double> truth;  // px, on screen
    ScreenGeometry geom;
};

// Angle at the eye between the rays to truth and prediction, in degrees.
// The eye sits on the perpendicular through the screen center at
// eye_distance_cm. Law of cosines on (d_eg, d_ep, d_gp), argument clamped
// against round-off.
double gaze_angular_error(const GazeEvalPoint& p);

double mgae(const std::vector<GazeEvalPoint>& points);

// ---- session-level evaluation harness --------------------------------------

// One preprocessed session: profiles plus its labeled trace.
struct SessionRecord {
    int session_id = 0;
    ProfileSet profiles;
    GazeTrace trace;
};

struct ModelSpec {
    ModelKind kind = ModelKind::Gbrt;
    double l2 = 1.0;
    GbrtParams gbrt;
};

struct EvalOptions {
    ModelSpec model;
    int folds = 1;           // cross-session folds; sessions are chunked in order
    int fold_limit = 0;      // 0 = run all folds
    int train_stride = 1;    // instance thinning
    int test_stride = 1;
    int calib_stride = 1;
    bool augment_train = true;
    double in_session_train_frac = 0.8;
    uint64_t seed = 0;
};

struct InstanceError {
    int session_id = 0;
    int t_end = 0;
    double truth_x = 0, truth_y = 0;
    double pred_x = 0, pred_y = 0;
    double error_deg = 0;
};

struct FoldReport {
    int fold = 0;
    std::vector<int> test_sessions;
    int n_train = 0;
    int n_test = 0;
    double mgae_raw_deg = 0.0;
    double mgae_cal_deg = 0.0;
    bool calib_fallback = false;
};

struct EvalReport {
    std::string mode;
    std::vector<FoldReport> folds;
    double mean_mgae_raw_deg = 0.0;
    double mean_mgae_cal_deg = 0.0;
};

// Instance assembly restricted to a segment of a session. Training uses the
// main segment (augmented); calibration instances come from the calib prefix.
std::vector<GazeInstance> main_instances(const SessionRecord& rec, const FrameConfig& cfg,
                                         bool augment, uint64_t seed, int stride,
                                         int t_min = -1, int t_max = -1);
std::vector<GazeInstance> calib_instances(const SessionRecord& rec, const FrameConfig& cfg,
                                          int stride);

// Whole sessions held out per fold; the fitted model is calibrated on each
// test session's calibration segment before scoring. fold_models (when given)
// receives each fold's fitted base model.
EvalReport evaluate_cross_session(const std::vector<SessionRecord>& sessions,
                                  const FrameConfig& cfg, const ScreenGeometry& geom,
                                  const EvalOptions& opt,
                                  std::vector<InstanceError>* errors_out = nullptr,
                                  std::vector<ModelArtifact>* fold_models = nullptr);

// Contiguous 80/20 split inside each session; windows straddling the split
// are dropped so train/test frame ranges stay disjoint.
EvalReport evaluate_in_session(const std::vector<SessionRecord>& sessions,
                               const FrameConfig& cfg, const ScreenGeometry& geom,
                               const EvalOptions& opt,
                               std::vector<InstanceError>* errors_out = nullptr,
                               std::vector<ModelArtifact>* fold_models = nullptr);

} // namespace echogaze
