// Command-line front end for the acoustic gaze-tracking pipeline.
//
// Subcommands: simulate, gen-protocol, preprocess, train, infer, calibrate,
// evaluate, quantize, bench-quant, filter-dump, run.
// Exit codes: 0 success, 2 validation error, 1 runtime error.

#include "echogaze/chirp.hpp"
#include "echogaze/errors.hpp"
#include "echogaze/metrics.hpp"
#include "echogaze/pipeline.hpp"
#include "echogaze/quant.hpp"
#include "echogaze/rng.hpp"
#include "echogaze/session_io.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace echogaze;

namespace {

FrameConfig load_config(const std::string& path) {
    if (path.empty()) return FrameConfig{};
    return FrameConfig::load(path);
}

ScreenGeometry screen_from(const std::string& path) {
    if (path.empty()) return ScreenGeometry{};
    return ScreenGeometry::load(path);
}

// profiles/ and labels/ directories matched by file stem.
std::vector<SessionRecord> load_session_records(const std::string& profiles_dir,
                                                const std::string& labels_dir) {
    std::vector<std::pair<std::string, std::string>> stems;  // (stem, eprf path)
    for (const auto& entry : fs::directory_iterator(profiles_dir))
        if (entry.path().extension() == ".eprf")
            stems.emplace_back(entry.path().stem().string(), entry.path().string());
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) throw IoError("no .eprf files under " + profiles_dir);

    std::vector<SessionRecord> records;
    int sid = 0;
    for (const auto& [stem, eprf] : stems) {
        const std::string trace_path = labels_dir + "/" + stem + ".csv";
        if (!fs::exists(trace_path)) throw IoError("no matching trace for " + eprf + ": " + trace_path);
        SessionRecord rec;
        rec.session_id = sid++;
        rec.profiles = load_eprf(eprf);
        rec.trace = load_trace_csv(trace_path);
        if (rec.trace.n_frames() < rec.profiles.cols())
            throw IoError("trace shorter than profile columns for " + eprf);
        records.push_back(std::move(rec));
    }
    return records;
}

ModelSpec model_spec_from(const std::string& kind, double l2, int trees, int depth, double lr,
                          double subsample, uint64_t seed) {
    ModelSpec spec;
    if (kind == "linear") {
        spec.kind = ModelKind::Linear;
    } else if (kind == "gbrt") {
        spec.kind = ModelKind::Gbrt;
    } else {
        throw ConfigError("unknown model kind: " + kind);
    }
    spec.l2 = l2;
    spec.gbrt.n_trees = trees;
    spec.gbrt.max_depth = depth;
    spec.gbrt.learning_rate = lr;
    spec.gbrt.subsample = subsample;
    spec.gbrt.seed = rng_derive(seed, "gbrt");
    return spec;
}

void write_json(const std::string& path, const json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << "\n";
}

int run_cli(int argc, char** argv) {
    CLI::App app{"acoustic gaze tracking pipeline"};
    app.require_subcommand(1);

    std::string config_path, out_path, scene_path;
    uint64_t seed = 1;
    app.add_option("--config", config_path, "FrameConfig JSON path (defaults built in)");
    app.add_option("--seed", seed, "top-level RNG seed");

    // gen-protocol
    auto* gen = app.add_subcommand("gen-protocol", "generate instruction-point traces");
    std::string gen_screen, gen_out = "traces";
    int gen_sessions = 12, gen_regions = 100;
    gen->add_option("--screen", gen_screen, "ScreenGeometry JSON");
    gen->add_option("--sessions", gen_sessions, "number of sessions");
    gen->add_option("--regions", gen_regions, "regions per session (perfect square)");
    gen->add_option("--out", gen_out, "output directory")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "synthesize one session of received audio");
    std::string sim_trace, sim_out;
    sim->add_option("--scene", scene_path, "SceneSpec JSON (defaults built in)");
    sim->add_option("--trace", sim_trace, "gaze trace CSV")->required();
    sim->add_option("--out", sim_out, "output session directory")->required();

    // preprocess
    auto* pre = app.add_subcommand("preprocess", "session audio -> echo profiles (.eprf)");
    std::string pre_in, pre_out;
    bool pre_nofilter = false, pre_magnitude = false;
    pre->add_option("--in", pre_in, "session directory")->required();
    pre->add_option("--out", pre_out, "output .eprf path")->required();
    pre->add_flag("--no-filter", pre_nofilter, "skip the band-pass stage");
    pre->add_flag("--magnitude", pre_magnitude, "store |corr| instead of signed values");

    // train
    auto* train = app.add_subcommand("train", "fit a model from profiles + traces");
    std::string train_model = "gbrt", train_in, train_labels, train_out;
    double train_l2 = 1.0, train_lr = 0.1, train_subsample = 0.8;
    int train_trees = 200, train_depth = 3, train_stride = 1;
    bool train_compressed = false, train_no_augment = false;
    train->add_option("--model", train_model, "gbrt | linear");
    train->add_option("--in", train_in, "profiles dir (or sessions dir with --compressed)")->required();
    train->add_option("--labels", train_labels, "traces dir")->required();
    train->add_option("--out", train_out, "output .gzmd path")->required();
    train->add_option("--l2", train_l2, "ridge strength (linear)");
    train->add_option("--trees", train_trees, "GBRT trees per coordinate");
    train->add_option("--depth", train_depth, "GBRT tree depth");
    train->add_option("--learning-rate", train_lr, "GBRT learning rate");
    train->add_option("--subsample", train_subsample, "GBRT stage subsample");
    train->add_option("--stride", train_stride, "instance stride");
    train->add_flag("--compressed", train_compressed, "train the quantized-path model from raw sessions");
    train->add_flag("--no-augment", train_no_augment, "disable the random 60-of-70 row crop");

    // infer
    auto* infer = app.add_subcommand("infer", "predict gaze from an .eprf file");
    std::string infer_model, infer_in, infer_out;
    int infer_stride = 1;
    infer->add_option("--model", infer_model, "model .gzmd")->required();
    infer->add_option("--in", infer_in, "profiles.eprf")->required();
    infer->add_option("--out", infer_out, "prediction CSV")->required();
    infer->add_option("--stride", infer_stride, "instance stride");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "fit the affine output correction");
    std::string cal_model, cal_in, cal_labels, cal_out;
    int cal_stride = 1;
    cal->add_option("--model", cal_model, "model .gzmd")->required();
    cal->add_option("--in", cal_in, "profiles.eprf of the calibration session")->required();
    cal->add_option("--labels", cal_labels, "trace CSV with a calib segment")->required();
    cal->add_option("--out", cal_out, "output .gzmd path")->required();
    cal->add_option("--stride", cal_stride, "calibration instance stride");

    // evaluate
    auto* eval = app.add_subcommand("evaluate", "cross-session / in-session evaluation");
    std::string eval_mode = "cross-session", eval_in, eval_labels, eval_out = "report.json";
    std::string eval_errors, eval_model = "gbrt";
    int eval_folds = 6, eval_fold_limit = 0, eval_train_stride = 1, eval_test_stride = 1,
        eval_calib_stride = 1;
    double eval_l2 = 1.0, eval_lr = 0.1, eval_subsample = 0.8;
    int eval_trees = 200, eval_depth = 3;
    eval->add_option("--mode", eval_mode, "cross-session | in-session");
    eval->add_option("--folds", eval_folds, "session folds (cross-session)");
    eval->add_option("--fold-limit", eval_fold_limit, "run only the first N folds");
    eval->add_option("--in", eval_in, "profiles dir")->required();
    eval->add_option("--labels", eval_labels, "traces dir")->required();
    eval->add_option("--out", eval_out, "report JSON path");
    eval->add_option("--errors", eval_errors, "per-instance error CSV path");
    eval->add_option("--model", eval_model, "gbrt | linear");
    eval->add_option("--l2", eval_l2, "ridge strength");
    eval->add_option("--trees", eval_trees, "GBRT trees");
    eval->add_option("--depth", eval_depth, "GBRT depth");
    eval->add_option("--learning-rate", eval_lr, "GBRT learning rate");
    eval->add_option("--subsample", eval_subsample, "GBRT subsample");
    eval->add_option("--train-stride", eval_train_stride, "train instance stride");
    eval->add_option("--test-stride", eval_test_stride, "test instance stride");
    eval->add_option("--calib-stride", eval_calib_stride, "calibration instance stride");

    // quantize
    auto* quant = app.add_subcommand("quantize", "session -> compressed int8 instances (.q8)");
    std::string quant_session, quant_out;
    int quant_stride = 1;
    quant->add_option("--session", quant_session, "session directory")->required();
    quant->add_option("--out", quant_out, "output .q8 path")->required();
    quant->add_option("--stride", quant_stride, "instance stride");

    // bench-quant
    auto* bench = app.add_subcommand("bench-quant", "quantized-path benchmark + accuracy report");
    std::string bench_model, bench_float_model, bench_session, bench_report = "bench.json";
    int bench_stride = 4;
    bench->add_option("--model", bench_model, "quantized-path model .gzmd")->required();
    bench->add_option("--float-model", bench_float_model, "float-path model .gzmd")->required();
    bench->add_option("--session", bench_session, "session directory")->required();
    bench->add_option("--report", bench_report, "output JSON path");
    bench->add_option("--mgae-stride", bench_stride, "instance stride for the MGAE comparison");

    // filter-dump
    auto* fdump = app.add_subcommand("filter-dump", "print designed band-pass sections");
    double fd_low = 0.0, fd_high = 0.0;
    int fd_order = 4;
    fdump->add_option("--low", fd_low, "low cutoff Hz (default: each config band)");
    fdump->add_option("--high", fd_high, "high cutoff Hz");
    fdump->add_option("--order", fd_order, "filter order");

    // run
    auto* run = app.add_subcommand("run", "full synthetic end-to-end evaluation");
    std::string run_out = "run_out";
    int run_sessions = 8, run_test_sessions = 2, run_regions = 36;
    int run_train_stride = 26, run_test_stride = 26, run_calib_stride = 13;
    int run_trees = 200, run_depth = 3;
    bool run_noise = false, run_no_quant = false, run_no_linear = false, run_no_insession = false;
    run->add_option("--scene", scene_path, "SceneSpec JSON (defaults built in)");
    run->add_option("--out", run_out, "output directory");
    run->add_option("--sessions", run_sessions, "total sessions");
    run->add_option("--test-sessions", run_test_sessions, "held-out sessions");
    run->add_option("--regions", run_regions, "protocol regions per session");
    run->add_option("--train-stride", run_train_stride, "train instance stride");
    run->add_option("--test-stride", run_test_stride, "test instance stride");
    run->add_option("--calib-stride", run_calib_stride, "calibration instance stride");
    run->add_option("--trees", run_trees, "GBRT trees per coordinate");
    run->add_option("--depth", run_depth, "GBRT depth");
    run->add_flag("--noise-sweep", run_noise, "re-test under the four noise levels");
    run->add_flag("--no-quant", run_no_quant, "skip the quantized path");
    run->add_flag("--no-linear", run_no_linear, "skip the linear baseline");
    run->add_flag("--no-in-session", run_no_insession, "skip the in-session split");

    CLI11_PARSE(app, argc, argv);

    const FrameConfig cfg = load_config(config_path);
    const double fps = refresh_rate(cfg);

    if (gen->parsed()) {
        const ScreenGeometry geom = screen_from(gen_screen);
        ProtocolSpec proto;
        proto.n_regions = gen_regions;
        proto.sessions = gen_sessions;
        proto.validate();
        fs::create_directories(gen_out);
        for (int s = 0; s < gen_sessions; ++s) {
            const GazeTrace trace =
                generate_session_trace(geom, proto, fps, rng_derive(seed, "trace", static_cast<uint64_t>(s)));
            char name[32];
            std::snprintf(name, sizeof(name), "session_%02d.csv", s);
            save_trace_csv(gen_out + "/" + name, trace);
        }
        std::printf("wrote %d traces to %s\n", gen_sessions, gen_out.c_str());
        return 0;
    }

    if (sim->parsed()) {
        const SceneSpec scene = scene_path.empty() ? default_scene() : SceneSpec::load(scene_path);
        const GazeTrace trace = load_trace_csv(sim_trace);
        SynthesizedSession synth = synthesize_session(scene, trace.points, cfg, seed);
        int16_snap(synth.mics);
        write_session(sim_out, synth.mics, trace.points, cfg, scene, seed);
        std::printf("simulated %d frames x %zu mics -> %s (jitter %.3f samples)\n",
                    trace.n_frames(), synth.mics.size(), sim_out.c_str(), synth.jitter_samples);
        return 0;
    }

    if (pre->parsed()) {
        const SessionBundle bundle = load_session(pre_in);
        const ProfileSet profiles =
            compute_profile_set(bundle.audio, bundle.meta.cfg, !pre_nofilter, pre_magnitude);
        save_eprf(pre_out, profiles);
        std::printf("profiles %dx%d x %zu channels (origin %d) -> %s\n", profiles.rows(),
                    profiles.cols(), profiles.channels.size(), profiles.origin(), pre_out.c_str());
        return 0;
    }

    if (train->parsed()) {
        const ModelSpec spec = model_spec_from(train_model, train_l2, train_trees, train_depth,
                                               train_lr, train_subsample, seed);
        ModelArtifact model;
        if (train_compressed) {
            // Quantized-path training: float features straight from raw sessions.
            CompressedInstanceSpec cspec;
            std::vector<GazeInstance> inst;
            std::vector<std::string> dirs;
            for (const auto& entry : fs::directory_iterator(train_in))
                if (entry.is_directory()) dirs.push_back(entry.path().string());
            std::sort(dirs.begin(), dirs.end());
            if (dirs.empty()) throw IoError("no session directories under " + train_in);
            int sid = 0;
            for (const auto& dir : dirs) {
                const SessionBundle bundle = load_session(dir);
                const GazeTrace trace = load_trace_csv(train_labels + "/" + fs::path(dir).filename().string() + ".csv");
                const int origin = detect_range_origin(bundle.audio, bundle.meta.cfg, false);
                auto part = assemble_compressed_instances(bundle.audio, trace.points, bundle.meta.cfg,
                                                          cspec, origin, /*quantized=*/false,
                                                          train_stride, sid);
                for (auto& i : part)
                    if (i.t_end >= trace.calib_frames) inst.push_back(std::move(i));
                ++sid;
            }
            const TensorShape shape{cspec.window_frames, cspec.rows_used, cspec.n_mics};
            if (spec.kind == ModelKind::Linear)
                model = fit_linear(inst, spec.l2, shape, config_hash(cfg));
            else
                model = fit_gbrt(inst, spec.gbrt, shape, config_hash(cfg));
        } else {
            auto records = load_session_records(train_in, train_labels);
            std::vector<GazeInstance> inst;
            for (const auto& rec : records) {
                auto part = main_instances(rec, cfg, !train_no_augment,
                                           rng_derive(seed, "augment", static_cast<uint64_t>(rec.session_id)),
                                           train_stride);
                for (auto& i : part) inst.push_back(std::move(i));
            }
            const TensorShape shape{cfg.window_frames(), cfg.crop_used_px,
                                    static_cast<int>(records.front().profiles.channels.size())};
            if (spec.kind == ModelKind::Linear)
                model = fit_linear(inst, spec.l2, shape, config_hash(cfg));
            else
                model = fit_gbrt(inst, spec.gbrt, shape, config_hash(cfg));
        }
        model.save(train_out);
        std::printf("trained %s model -> %s\n", train_model.c_str(), train_out.c_str());
        return 0;
    }

    if (infer->parsed()) {
        const ModelArtifact model = ModelArtifact::load(infer_model);
        if (model.config_hash != 0 && model.config_hash != config_hash(cfg))
            throw IoError("model was trained under a different config (hash mismatch)");
        const ProfileSet profiles = load_eprf(infer_in);
        std::vector<std::pair<double, double>> dummy(static_cast<std::size_t>(profiles.cols()),
                                                     {0.0, 0.0});
        const auto instances =
            assemble_instances(profiles, dummy, cfg, /*augment=*/false, 0, 0, infer_stride);
        std::ofstream out(infer_out);
        if (!out) throw IoError("cannot write " + infer_out);
        out << "t_end,pred_x,pred_y\n";
        out.precision(10);
        for (const auto& inst : instances) {
            const auto p = predict(model, inst);
            out << inst.t_end << "," << p.first << "," << p.second << "\n";
        }
        std::printf("wrote %zu predictions to %s\n", instances.size(), infer_out.c_str());
        return 0;
    }

    if (cal->parsed()) {
        ModelArtifact model = ModelArtifact::load(cal_model);
        SessionRecord rec;
        rec.session_id = 0;
        rec.profiles = load_eprf(cal_in);
        rec.trace = load_trace_csv(cal_labels);
        const auto instances = calib_instances(rec, cfg, cal_stride);
        const auto result = calibrate(model, instances);
        model.save(cal_out);
        std::printf("calibrated on %zu instances (%s) -> %s\n", instances.size(),
                    result.offset_only_fallback ? "offset-only fallback" : "affine", cal_out.c_str());
        return 0;
    }

    if (eval->parsed()) {
        auto records = load_session_records(eval_in, eval_labels);
        EvalOptions opt;
        opt.model = model_spec_from(eval_model, eval_l2, eval_trees, eval_depth, eval_lr,
                                    eval_subsample, seed);
        opt.folds = eval_folds;
        opt.fold_limit = eval_fold_limit;
        opt.train_stride = eval_train_stride;
        opt.test_stride = eval_test_stride;
        opt.calib_stride = eval_calib_stride;
        opt.seed = rng_derive(seed, "eval");
        const ScreenGeometry geom;  // default screen; traces are generated against it

        std::vector<InstanceError> errors;
        EvalReport rep;
        if (eval_mode == "cross-session")
            rep = evaluate_cross_session(records, cfg, geom, opt, &errors);
        else if (eval_mode == "in-session")
            rep = evaluate_in_session(records, cfg, geom, opt, &errors);
        else
            throw ConfigError("unknown evaluate mode: " + eval_mode);

        json folds = json::array();
        for (const auto& f : rep.folds)
            folds.push_back({{"fold", f.fold},
                             {"test_sessions", f.test_sessions},
                             {"n_train", f.n_train},
                             {"n_test", f.n_test},
                             {"mgae_raw_deg", f.mgae_raw_deg},
                             {"mgae_cal_deg", f.mgae_cal_deg},
                             {"calib_fallback", f.calib_fallback}});
        const json out = {{"mode", rep.mode},
                          {"folds", folds},
                          {"mean_mgae_deg", rep.mean_mgae_cal_deg},
                          {"mean_mgae_raw_deg", rep.mean_mgae_raw_deg},
                          {"config_hash", config_hash_hex(cfg)}};
        write_json(eval_out, out);
        if (!eval_errors.empty()) {
            std::ofstream err(eval_errors);
            if (!err) throw IoError("cannot write " + eval_errors);
            err << "session_id,t_end,truth_x,truth_y,pred_x,pred_y,error_deg\n";
            err.precision(10);
            for (const auto& e : errors)
                err << e.session_id << "," << e.t_end << "," << e.truth_x << "," << e.truth_y << ","
                    << e.pred_x << "," << e.pred_y << "," << e.error_deg << "\n";
        }
        std::printf("%s: mean MGAE %.3f deg (raw %.3f) over %zu fold(s) -> %s\n", rep.mode.c_str(),
                    rep.mean_mgae_cal_deg, rep.mean_mgae_raw_deg, rep.folds.size(), eval_out.c_str());
        return 0;
    }

    if (quant->parsed()) {
        const SessionBundle bundle = load_session(quant_session);
        const int origin = detect_range_origin(bundle.audio, bundle.meta.cfg, false);
        CompressedInstanceSpec cspec;
        save_q8(quant_out, bundle.audio, bundle.labels, bundle.meta.cfg, cspec, origin, quant_stride);
        std::printf("wrote compressed int8 instances -> %s\n", quant_out.c_str());
        return 0;
    }

    if (bench->parsed()) {
        const SessionBundle bundle = load_session(bench_session);
        const FrameConfig& scfg = bundle.meta.cfg;
        const ScreenGeometry geom = bundle.meta.scene.screen;
        const ModelArtifact qmodel = ModelArtifact::load(bench_model);
        const ModelArtifact fmodel = ModelArtifact::load(bench_float_model);
        CompressedInstanceSpec cspec;

        const int origin_q = detect_range_origin(bundle.audio, scfg, false);
        const auto frames = quant_pipeline_predict(bundle.audio, scfg, cspec, qmodel, origin_q);
        if (frames.empty()) throw ConfigError("bench-quant: session too short");

        std::vector<double> lat;
        for (const auto& f : frames) lat.push_back(f.latency_ms);
        std::vector<double> sorted = lat;
        std::sort(sorted.begin(), sorted.end());
        double total = 0.0;
        for (double v : lat) total += v;
        const double mean_ms = total / static_cast<double>(lat.size());
        const double p99 = sorted[static_cast<std::size_t>(0.99 * (sorted.size() - 1))];
        const double fps_sustained = 1000.0 / mean_ms;

        double quant_err = 0.0;
        int quant_n = 0;
        for (const auto& f : frames) {
            if (f.t_end % bench_stride != 0) continue;
            if (f.t_end >= static_cast<int>(bundle.labels.size())) break;
            GazeEvalPoint pt;
            pt.geom = geom;
            pt.truth = bundle.labels[static_cast<std::size_t>(f.t_end)];
            pt.pred = f.pred;
            quant_err += gaze_angular_error(pt);
            ++quant_n;
        }

        const ProfileSet profiles = compute_profile_set(bundle.audio, scfg, /*filtered=*/true);
        const auto finst = assemble_instances(profiles, bundle.labels, scfg, false, 0, 0, bench_stride);
        double float_err = 0.0;
        int float_n = 0;
        for (const auto& inst : finst) {
            GazeEvalPoint pt;
            pt.geom = geom;
            pt.truth = {inst.label_x, inst.label_y};
            pt.pred = predict(fmodel, inst);
            float_err += gaze_angular_error(pt);
            ++float_n;
        }

        const json out = {{"mean_latency_ms", mean_ms},
                          {"p99_latency_ms", p99},
                          {"fps_sustained", fps_sustained},
                          {"mgae_float_deg", float_n ? float_err / float_n : 0.0},
                          {"mgae_quant_deg", quant_n ? quant_err / quant_n : 0.0},
                          {"frames", frames.size()}};
        write_json(bench_report, out);
        std::printf("quant path: %.3f ms/frame (p99 %.3f), %.1f fps; MGAE quant %.3f vs float %.3f -> %s\n",
                    mean_ms, p99, fps_sustained, quant_n ? quant_err / quant_n : 0.0,
                    float_n ? float_err / float_n : 0.0, bench_report.c_str());
        return 0;
    }

    if (fdump->parsed()) {
        std::vector<BandPassSpec> specs;
        if (fd_low > 0.0 && fd_high > 0.0) {
            specs.push_back(BandPassSpec{fd_low, fd_high, fd_order, cfg.sample_rate_hz});
        } else {
            for (const auto& band : cfg.bands)
                specs.push_back(BandPassSpec{band.f_start_hz, band.f_end_hz, fd_order, cfg.sample_rate_hz});
        }
        for (const auto& s : specs) {
            std::printf("# band-pass %.0f-%.0f Hz, order %d, fs %d (b0 b1 b2 a1 a2)\n", s.low_cut_hz,
                        s.high_cut_hz, s.order, s.sample_rate_hz);
            std::fputs(sos_dump(design_butterworth(s)).c_str(), stdout);
        }
        return 0;
    }

    if (run->parsed()) {
        const SceneSpec scene = scene_path.empty() ? default_scene() : SceneSpec::load(scene_path);
        RunSpec spec = RunSpec::desk_default();
        spec.sessions = run_sessions;
        spec.test_sessions = run_test_sessions;
        spec.protocol.n_regions = run_regions;
        spec.train_stride = run_train_stride;
        spec.test_stride = run_test_stride;
        spec.calib_stride = run_calib_stride;
        spec.gbrt.n_trees = run_trees;
        spec.gbrt.max_depth = run_depth;
        spec.noise_sweep = run_noise;
        spec.quant_compare = !run_no_quant;
        spec.run_linear = !run_no_linear;
        spec.run_in_session = !run_no_insession;

        const json report = run_end_to_end(cfg, scene, spec, seed, run_out);
        const auto& res = report["results"];
        std::printf("gbrt cross-session MGAE: %.3f deg (raw %.3f)\n",
                    res["gbrt_cross_session"]["mean_mgae_cal_deg"].get<double>(),
                    res["gbrt_cross_session"]["mean_mgae_raw_deg"].get<double>());
        if (res.contains("linear_cross_session"))
            std::printf("linear cross-session MGAE: %.3f deg\n",
                        res["linear_cross_session"]["mean_mgae_cal_deg"].get<double>());
        if (res.contains("gbrt_in_session"))
            std::printf("gbrt in-session MGAE: %.3f deg\n",
                        res["gbrt_in_session"]["mean_mgae_cal_deg"].get<double>());
        if (res.contains("quant_path"))
            std::printf("quant path MGAE: %.3f deg (float %.3f)\n",
                        res["quant_path"]["mgae_cal_deg"].get<double>(),
                        res["quant_path"]["mgae_float_cal_deg"].get<double>());
        if (res.contains("noise_sweep"))
            for (const auto& e : res["noise_sweep"])
                std::printf("noise %.1f dB(A): MGAE %.3f deg\n", e["level_dba"].get<double>(),
                            e["mgae_cal_deg"].get<double>());
        std::printf("report: %s/report.json\n", run_out.c_str());
        return 0;
    }

    return 0;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const ContractError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
