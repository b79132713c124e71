#include "echogaze/pipeline.hpp"

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"
#include "echogaze/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace echogaze {

namespace fs = std::filesystem;
using nlohmann::json;

RunSpec RunSpec::desk_default() {
    RunSpec spec;
    spec.protocol.n_regions = 36;  // shortened desk-scale sessions (~87 s each)
    spec.protocol.sessions = spec.sessions;
    return spec;
}

namespace {

std::string session_name(int s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "session_%02d", s);
    return buf;
}

json fold_json(const FoldReport& fr) {
    return json{{"fold", fr.fold},
                {"test_sessions", fr.test_sessions},
                {"n_train", fr.n_train},
                {"n_test", fr.n_test},
                {"mgae_raw_deg", fr.mgae_raw_deg},
                {"mgae_cal_deg", fr.mgae_cal_deg},
                {"calib_fallback", fr.calib_fallback}};
}

json report_json(const EvalReport& rep) {
    json folds = json::array();
    for (const auto& f : rep.folds) folds.push_back(fold_json(f));
    return json{{"mode", rep.mode},
                {"folds", folds},
                {"mean_mgae_raw_deg", rep.mean_mgae_raw_deg},
                {"mean_mgae_cal_deg", rep.mean_mgae_cal_deg}};
}

std::vector<GazeInstance> drop_calib(std::vector<GazeInstance> all, int calib_frames) {
    std::vector<GazeInstance> out;
    out.reserve(all.size());
    for (auto& inst : all)
        if (inst.t_end >= calib_frames) out.push_back(std::move(inst));
    return out;
}

std::vector<GazeInstance> keep_calib(std::vector<GazeInstance> all, int calib_frames) {
    std::vector<GazeInstance> out;
    for (auto& inst : all)
        if (inst.t_end < calib_frames) out.push_back(std::move(inst));
    return out;
}

struct PooledScore {
    double raw_sum = 0.0, cal_sum = 0.0;
    int n = 0;
    double raw() const { return n ? raw_sum / n : 0.0; }
    double cal() const { return n ? cal_sum / n : 0.0; }
};

void score_instances(const ModelArtifact& base, const ModelArtifact& calibrated,
                     const std::vector<GazeInstance>& test, const ScreenGeometry& geom,
                     PooledScore& acc) {
    for (const auto& inst : test) {
        GazeEvalPoint pt;
        pt.geom = geom;
        pt.truth = {inst.label_x, inst.label_y};
        pt.pred = base.predict_raw(inst);
        acc.raw_sum += gaze_angular_error(pt);
        pt.pred = predict(calibrated, inst);
        acc.cal_sum += gaze_angular_error(pt);
        ++acc.n;
    }
}

} // namespace

json run_end_to_end(const FrameConfig& cfg, const SceneSpec& scene, const RunSpec& spec,
                    uint64_t seed, const std::string& out_dir) {
    cfg.validate();
    scene.validate(cfg);
    spec.protocol.validate();
    if (spec.sessions < 2 || spec.test_sessions < 1 || spec.test_sessions >= spec.sessions)
        throw ConfigError("run: need sessions >= 2 and 1 <= test_sessions < sessions");
    if (spec.sessions % spec.test_sessions != 0)
        throw ConfigError("run: sessions must be divisible by test_sessions");

    const bool write = !out_dir.empty();
    if (write) {
        fs::create_directories(out_dir + "/traces");
        fs::create_directories(out_dir + "/sessions");
        fs::create_directories(out_dir + "/profiles");
        fs::create_directories(out_dir + "/models");
    }

    const ScreenGeometry geom = scene.screen;
    const double fps = refresh_rate(cfg);
    const TensorShape qshape{spec.quant_spec.window_frames, spec.quant_spec.rows_used,
                             spec.quant_spec.n_mics};

    std::vector<SessionRecord> records;
    std::vector<GazeInstance> qtrain;
    struct QuantTest {
        int session_id;
        std::vector<GazeInstance> test;   // quantized-path features, main segment
        std::vector<GazeInstance> calib;  // quantized-path features, calib segment
    };
    std::vector<QuantTest> qtests;
    std::vector<std::vector<std::vector<float>>> test_audio;  // per test session, per mic

    for (int s = 0; s < spec.sessions; ++s) {
        const bool is_test = s < spec.test_sessions;
        GazeTrace trace = generate_session_trace(geom, spec.protocol, fps,
                                                 rng_derive(seed, "trace", static_cast<uint64_t>(s)));
        SynthesizedSession synth =
            synthesize_session(scene, trace.points, cfg, rng_derive(seed, "session", static_cast<uint64_t>(s)));
        int16_snap(synth.mics);

        if (write) {
            save_trace_csv(out_dir + "/traces/" + session_name(s) + ".csv", trace);
            write_session(out_dir + "/sessions/" + session_name(s), synth.mics, trace.points, cfg,
                          scene, rng_derive(seed, "session", static_cast<uint64_t>(s)));
        }

        SessionRecord rec;
        rec.session_id = s;
        rec.profiles = compute_profile_set(synth.mics, cfg, /*filtered=*/true);
        rec.trace = std::move(trace);
        if (write) save_eprf(out_dir + "/profiles/" + session_name(s) + ".eprf", rec.profiles);

        if (spec.quant_compare) {
            const int origin = detect_range_origin(synth.mics, cfg, /*filtered=*/false);
            if (is_test) {
                QuantTest qt;
                qt.session_id = s;
                qt.test = drop_calib(
                    assemble_compressed_instances(synth.mics, rec.trace.points, cfg, spec.quant_spec,
                                                  origin, /*quantized=*/true, spec.test_stride, s),
                    rec.trace.calib_frames);
                qt.calib = keep_calib(
                    assemble_compressed_instances(synth.mics, rec.trace.points, cfg, spec.quant_spec,
                                                  origin, /*quantized=*/true, spec.calib_stride, s),
                    rec.trace.calib_frames);
                qtests.push_back(std::move(qt));
            } else {
                auto inst = drop_calib(
                    assemble_compressed_instances(synth.mics, rec.trace.points, cfg, spec.quant_spec,
                                                  origin, /*quantized=*/false, spec.train_stride, s),
                    rec.trace.calib_frames);
                for (auto& i : inst) qtrain.push_back(std::move(i));
            }
        }
        if (spec.noise_sweep && is_test) {
            std::vector<std::vector<float>> audio_f(synth.mics.size());
            for (std::size_t m = 0; m < synth.mics.size(); ++m)
                audio_f[m].assign(synth.mics[m].begin(), synth.mics[m].end());
            test_audio.push_back(std::move(audio_f));
        }
        records.push_back(std::move(rec));
    }

    // Float-path evaluations.
    EvalOptions gbrt_opt;
    gbrt_opt.model.kind = ModelKind::Gbrt;
    gbrt_opt.model.gbrt = spec.gbrt;
    gbrt_opt.model.gbrt.seed = rng_derive(seed, "gbrt");
    gbrt_opt.folds = spec.sessions / spec.test_sessions;
    gbrt_opt.fold_limit = 1;
    gbrt_opt.train_stride = spec.train_stride;
    gbrt_opt.test_stride = spec.test_stride;
    gbrt_opt.calib_stride = spec.calib_stride;
    gbrt_opt.seed = rng_derive(seed, "eval");

    std::vector<InstanceError> errors;
    std::vector<ModelArtifact> gbrt_models;
    const EvalReport gbrt_cross =
        evaluate_cross_session(records, cfg, geom, gbrt_opt, &errors, &gbrt_models);

    EvalOptions lin_opt = gbrt_opt;
    lin_opt.model.kind = ModelKind::Linear;
    lin_opt.model.l2 = spec.linear_l2;
    EvalReport lin_cross;
    std::vector<ModelArtifact> lin_models;
    if (spec.run_linear) lin_cross = evaluate_cross_session(records, cfg, geom, lin_opt, nullptr, &lin_models);

    EvalReport gbrt_in;
    if (spec.run_in_session) gbrt_in = evaluate_in_session(records, cfg, geom, gbrt_opt);

    json results;
    results["gbrt_cross_session"] = report_json(gbrt_cross);
    if (spec.run_linear) results["linear_cross_session"] = report_json(lin_cross);
    if (spec.run_in_session) results["gbrt_in_session"] = report_json(gbrt_in);

    // Quantized path vs the float pipeline on the same held-out sessions.
    if (spec.quant_compare) {
        if (qtrain.size() < 2) throw ConfigError("run: quant comparison has too few instances");
        GbrtParams qparams = spec.gbrt;
        qparams.seed = rng_derive(seed, "gbrt-quant");
        ModelArtifact qmodel = fit_gbrt(qtrain, qparams, qshape, config_hash(cfg));
        qtrain.clear();
        qtrain.shrink_to_fit();
        if (write) qmodel.save(out_dir + "/models/gbrt_quant.gzmd");

        PooledScore q;
        bool fallback = false;
        for (const auto& qt : qtests) {
            ModelArtifact calibrated = qmodel;
            if (qt.calib.size() >= 3)
                fallback = calibrate(calibrated, qt.calib).offset_only_fallback || fallback;
            score_instances(qmodel, calibrated, qt.test, geom, q);
        }
        results["quant_path"] = json{{"mgae_raw_deg", q.raw()},
                                     {"mgae_cal_deg", q.cal()},
                                     {"mgae_float_raw_deg", gbrt_cross.folds.at(0).mgae_raw_deg},
                                     {"mgae_float_cal_deg", gbrt_cross.folds.at(0).mgae_cal_deg},
                                     {"n_test", q.n},
                                     {"calib_fallback", fallback}};
    }

    // Noise robustness sweep: overlay calibrated white noise on the held-out
    // sessions and rescore with the fold-0 model.
    if (spec.noise_sweep) {
        json sweep = json::array();
        const ModelArtifact& model = gbrt_models.at(0);
        for (std::size_t li = 0; li < spec.noise_levels_dba.size(); ++li) {
            NoiseProfile noise;
            noise.kind = NoiseProfile::Kind::White;
            noise.target_level_dba = spec.noise_levels_dba[li];
            PooledScore acc;
            for (int s = 0; s < spec.test_sessions; ++s) {
                std::vector<std::vector<double>> audio(test_audio[static_cast<std::size_t>(s)].size());
                for (std::size_t m = 0; m < audio.size(); ++m)
                    audio[m].assign(test_audio[static_cast<std::size_t>(s)][m].begin(),
                                    test_audio[static_cast<std::size_t>(s)][m].end());
                audio = overlay_noise_multi(audio, noise,
                                            rng_derive(seed, "noise", li * 1000 + static_cast<uint64_t>(s)));
                int16_snap(audio);
                SessionRecord noisy;
                noisy.session_id = records[static_cast<std::size_t>(s)].session_id;
                noisy.profiles = compute_profile_set(audio, cfg, /*filtered=*/true);
                noisy.trace = records[static_cast<std::size_t>(s)].trace;

                auto test = main_instances(noisy, cfg, /*augment=*/false, 0, spec.test_stride);
                ModelArtifact calibrated = model;
                auto cal = calib_instances(noisy, cfg, spec.calib_stride);
                if (cal.size() >= 3) calibrate(calibrated, cal);
                score_instances(model, calibrated, test, geom, acc);
            }
            sweep.push_back(json{{"level_dba", spec.noise_levels_dba[li]},
                                 {"mgae_raw_deg", acc.raw()},
                                 {"mgae_cal_deg", acc.cal()},
                                 {"n_test", acc.n}});
        }
        results["noise_sweep"] = sweep;
    }

    json report;
    report["schema"] = "echogaze-report/1";
    report["config_hash"] = config_hash_hex(cfg);
    report["seed"] = seed;
    report["run"] = json{{"sessions", spec.sessions},
                         {"test_sessions", spec.test_sessions},
                         {"n_regions", spec.protocol.n_regions},
                         {"train_stride", spec.train_stride},
                         {"test_stride", spec.test_stride},
                         {"calib_stride", spec.calib_stride},
                         {"gbrt_trees", spec.gbrt.n_trees},
                         {"gbrt_depth", spec.gbrt.max_depth},
                         {"linear_l2", spec.linear_l2},
                         {"in_session_split", "contiguous-80-20"}};
    report["results"] = results;

    if (write) {
        if (!gbrt_models.empty()) gbrt_models[0].save(out_dir + "/models/gbrt_cross.gzmd");
        if (!lin_models.empty()) lin_models[0].save(out_dir + "/models/linear_cross.gzmd");
        std::ofstream rep(out_dir + "/report.json");
        if (!rep) throw IoError("cannot write report.json under " + out_dir);
        rep << report.dump(2) << "\n";
        std::ofstream err(out_dir + "/errors.csv");
        if (!err) throw IoError("cannot write errors.csv under " + out_dir);
        err << "session_id,t_end,truth_x,truth_y,pred_x,pred_y,error_deg\n";
        err.precision(10);
        for (const auto& e : errors)
            err << e.session_id << "," << e.t_end << "," << e.truth_x << "," << e.truth_y << ","
                << e.pred_x << "," << e.pred_y << "," << e.error_deg << "\n";
    }
    return report;
}

RealtimeBench realtime_frame_bench(const std::vector<std::vector<double>>& mics,
                                   const FrameConfig& cfg, const ModelArtifact& model,
                                   bool filtered) {
    cfg.validate();
    if (mics.empty()) throw ContractError("realtime_frame_bench: no microphone streams");
    const int n_frames = static_cast<int>(mics.front().size()) / cfg.frame_len;
    const int wf = cfg.window_frames();
    if (n_frames < wf) throw ContractError("realtime_frame_bench: stream shorter than one window");

    const int n_mics = static_cast<int>(mics.size());
    const int n_bands = static_cast<int>(cfg.bands.size());
    const int n_ch = n_mics * n_bands;
    const int used = cfg.crop_used_px;
    const int center_off = (cfg.crop_full_px - used) / 2;
    if (model.shape.features() != wf * used * n_ch)
        throw ContractError("realtime_frame_bench: model shape mismatch");

    // Setup (untimed): origin, filters, correlators, buffers.
    const int origin = detect_range_origin(mics, cfg, filtered);
    std::vector<FrameCorrelator> corrs;
    std::vector<SosCoeffs> filters;
    for (const auto& band : cfg.bands) {
        corrs.emplace_back(generate_chirp(band, cfg));
        BandPassSpec bp{band.f_start_hz, band.f_end_hz, 4, cfg.sample_rate_hz};
        filters.push_back(design_butterworth(bp));
    }
    std::vector<BiquadCascade> states;  // [mic * n_bands + band]
    for (int m = 0; m < n_mics; ++m)
        for (int b = 0; b < n_bands; ++b) states.emplace_back(filters[static_cast<std::size_t>(b)]);

    const int frame_len = cfg.frame_len;
    std::vector<double> filtered_buf(static_cast<std::size_t>(frame_len));
    std::vector<double> corr_buf(static_cast<std::size_t>(frame_len));
    // Ring of the last wf cropped columns, per channel.
    std::vector<float> ring(static_cast<std::size_t>(n_ch) * wf * used, 0.0f);
    std::vector<float> tensor(static_cast<std::size_t>(n_ch) * wf * used, 0.0f);

    std::vector<double> latencies;
    latencies.reserve(static_cast<std::size_t>(n_frames));
    std::pair<double, double> sink{0, 0};

    const auto bench_start = std::chrono::steady_clock::now();
    for (int f = 0; f < n_frames; ++f) {
        const auto t0 = std::chrono::steady_clock::now();
        const int slot = f % wf;
        for (int m = 0; m < n_mics; ++m) {
            const double* frame = mics[static_cast<std::size_t>(m)].data() +
                                  static_cast<std::size_t>(f) * frame_len;
            for (int b = 0; b < n_bands; ++b) {
                const int ch = m * n_bands + b;
                const double* src = frame;
                if (filtered) {
                    states[static_cast<std::size_t>(ch)].process(frame, filtered_buf.data(),
                                                                 static_cast<std::size_t>(frame_len));
                    src = filtered_buf.data();
                }
                corrs[static_cast<std::size_t>(b)].correlate_frame(src, corr_buf.data());
                float* col = ring.data() + (static_cast<std::size_t>(ch) * wf + slot) * used;
                for (int r = 0; r < used; ++r)
                    col[r] = static_cast<float>(corr_buf[static_cast<std::size_t>((origin + center_off + r) % frame_len)]);
            }
        }
        if (f >= wf - 1) {
            // Flatten ring into channel-major window order (oldest first).
            for (int ch = 0; ch < n_ch; ++ch)
                for (int w = 0; w < wf; ++w) {
                    const int src_slot = (f + 1 + w) % wf;
                    const float* col = ring.data() + (static_cast<std::size_t>(ch) * wf + src_slot) * used;
                    std::copy(col, col + used,
                              tensor.data() + (static_cast<std::size_t>(ch) * wf + w) * used);
                }
            const auto pred = model.calib.apply(model.predict_raw(tensor.data(), tensor.size()));
            sink.first += pred.first;
            sink.second += pred.second;
        }
        const auto t1 = std::chrono::steady_clock::now();
        latencies.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
    const auto bench_end = std::chrono::steady_clock::now();

    RealtimeBench rb;
    rb.frames = n_frames;
    double total = 0.0;
    for (double v : latencies) total += v;
    rb.mean_ms = total / static_cast<double>(latencies.size());
    std::vector<double> sorted(latencies);
    std::sort(sorted.begin(), sorted.end());
    rb.p99_ms = sorted[static_cast<std::size_t>(std::min<double>(
        static_cast<double>(sorted.size()) - 1, std::ceil(0.99 * sorted.size())))];
    rb.max_ms = sorted.back();
    const double wall_s = std::chrono::duration<double>(bench_end - bench_start).count();
    rb.fps_sustained = static_cast<double>(n_frames) / wall_s;
    rb.pred_checksum = sink.first + sink.second;  // keeps the predictions live
    return rb;
}

} // namespace echogaze
