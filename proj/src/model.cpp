#include "echogaze/model.hpp"

#include "echogaze/errors.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include <cmath>
#include <cstring>
#include <fstream>

namespace echogaze {

double Tree::predict(const float* x) const {
    int i = 0;
    for (;;) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        if (n.feature < 0) return n.value;
        i = (x[n.feature] <= n.threshold) ? n.left : n.right;
    }
}

double Ensemble::predict(const float* x) const {
    double acc = init;
    for (const auto& t : trees) acc += t.predict(x);
    return acc;
}

void GbrtParams::validate() const {
    if (n_trees < 1) throw ConfigError("gbrt: n_trees must be >= 1");
    if (max_depth < 1) throw ConfigError("gbrt: max_depth must be >= 1");
    if (learning_rate <= 0.0) throw ConfigError("gbrt: learning_rate must be positive");
    if (subsample <= 0.0 || subsample > 1.0) throw ConfigError("gbrt: subsample must be in (0, 1]");
    if (max_bins < 2 || max_bins > 256) throw ConfigError("gbrt: max_bins must be in [2, 256]");
}

std::pair<double, double> ModelArtifact::predict_raw(const float* x, std::size_t n_features) const {
    if (static_cast<int>(n_features) != shape.features())
        throw ContractError("predict: feature dimension mismatch");
    if (kind == ModelKind::Linear) {
        double px = intercept[0], py = intercept[1];
        for (std::size_t f = 0; f < n_features; ++f) {
            const double z = (static_cast<double>(x[f]) - norm_mean[f]) / norm_std[f];
            px += weights[f * 2 + 0] * z;
            py += weights[f * 2 + 1] * z;
        }
        return {px, py};
    }
    return {ens_x.predict(x), ens_y.predict(x)};
}

std::pair<double, double> ModelArtifact::predict_raw(const GazeInstance& inst) const {
    return predict_raw(inst.tensor.data(), inst.tensor.size());
}

std::pair<double, double> predict(const ModelArtifact& model, const GazeInstance& inst) {
    return model.calib.apply(model.predict_raw(inst));
}

namespace {

void check_train_set(const std::vector<GazeInstance>& train, TensorShape shape) {
    if (train.empty()) throw ContractError("fit: empty training set");
    if (shape.features() <= 0) throw ContractError("fit: invalid tensor shape");
    for (const auto& inst : train)
        if (static_cast<int>(inst.tensor.size()) != shape.features())
            throw ContractError("fit: instance feature size does not match shape");
}

} // namespace

ModelArtifact fit_linear(const std::vector<GazeInstance>& train, double l2, TensorShape shape,
                         uint64_t config_hash_value) {
    if (l2 < 0.0) throw ConfigError("fit_linear: l2 must be non-negative");
    check_train_set(train, shape);

    const int n = static_cast<int>(train.size());
    const int d = shape.features();

    ModelArtifact m;
    m.kind = ModelKind::Linear;
    m.shape = shape;
    m.config_hash = config_hash_value;
    m.norm_mean.assign(static_cast<std::size_t>(d), 0.0);
    m.norm_std.assign(static_cast<std::size_t>(d), 1.0);

    for (const auto& inst : train)
        for (int f = 0; f < d; ++f) m.norm_mean[static_cast<std::size_t>(f)] += inst.tensor[static_cast<std::size_t>(f)];
    for (int f = 0; f < d; ++f) m.norm_mean[static_cast<std::size_t>(f)] /= n;
    std::vector<double> var(static_cast<std::size_t>(d), 0.0);
    for (const auto& inst : train)
        for (int f = 0; f < d; ++f) {
            const double c = inst.tensor[static_cast<std::size_t>(f)] - m.norm_mean[static_cast<std::size_t>(f)];
            var[static_cast<std::size_t>(f)] += c * c;
        }
    for (int f = 0; f < d; ++f) {
        const double s = std::sqrt(var[static_cast<std::size_t>(f)] / n);
        m.norm_std[static_cast<std::size_t>(f)] = s > 0.0 ? s : 1.0;  // flat features get std 1, weight 0
    }

    // Normalized design matrix in float; one row per instance.
    using MatrixXfRM = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    MatrixXfRM X(n, d);
    for (int i = 0; i < n; ++i) {
        const float* t = train[static_cast<std::size_t>(i)].tensor.data();
        for (int f = 0; f < d; ++f)
            X(i, f) = static_cast<float>((static_cast<double>(t[f]) - m.norm_mean[static_cast<std::size_t>(f)]) /
                                         m.norm_std[static_cast<std::size_t>(f)]);
    }

    Eigen::MatrixXd Y(n, 2);
    double mean_x = 0.0, mean_y = 0.0;
    for (int i = 0; i < n; ++i) {
        mean_x += train[static_cast<std::size_t>(i)].label_x;
        mean_y += train[static_cast<std::size_t>(i)].label_y;
    }
    mean_x /= n;
    mean_y /= n;
    for (int i = 0; i < n; ++i) {
        Y(i, 0) = train[static_cast<std::size_t>(i)].label_x - mean_x;
        Y(i, 1) = train[static_cast<std::size_t>(i)].label_y - mean_y;
    }
    m.intercept = {mean_x, mean_y};

    Eigen::MatrixXd W;
    if (n <= d) {
        // Dual form: W = X^T (X X^T + l2 I)^-1 Y; exact ridge solution.
        Eigen::MatrixXd G = (X * X.transpose()).cast<double>();
        double ridge = l2;
        if (ridge == 0.0) ridge = 1e-12 * std::max(1.0, G.trace() / n);  // keep the solve defined
        G.diagonal().array() += ridge;
        Eigen::MatrixXd alpha = Eigen::LDLT<Eigen::MatrixXd>(G).solve(Y);
        W = (X.transpose() * alpha.cast<float>()).cast<double>();
    } else {
        Eigen::MatrixXd A = (X.transpose() * X).cast<double>();
        double ridge = l2;
        if (ridge == 0.0) ridge = 1e-12 * std::max(1.0, A.trace() / d);
        A.diagonal().array() += ridge;
        Eigen::MatrixXd rhs = (X.transpose() * Y.cast<float>()).cast<double>();
        W = Eigen::LDLT<Eigen::MatrixXd>(A).solve(rhs);
    }

    m.weights.resize(static_cast<std::size_t>(d) * 2);
    for (int f = 0; f < d; ++f) {
        m.weights[static_cast<std::size_t>(f) * 2 + 0] = W(f, 0);
        m.weights[static_cast<std::size_t>(f) * 2 + 1] = W(f, 1);
    }
    return m;
}

CalibrationResult calibrate(ModelArtifact& model, const std::vector<GazeInstance>& calib_instances) {
    if (calib_instances.size() < 3)
        throw ContractError("calibrate: need at least 3 calibration instances");

    const std::size_t n = calib_instances.size();
    Eigen::MatrixXd Z(static_cast<int>(n), 3);
    Eigen::MatrixXd Y(static_cast<int>(n), 2);
    for (std::size_t i = 0; i < n; ++i) {
        const auto raw = model.predict_raw(calib_instances[i]);
        Z(static_cast<int>(i), 0) = raw.first;
        Z(static_cast<int>(i), 1) = raw.second;
        Z(static_cast<int>(i), 2) = 1.0;
        Y(static_cast<int>(i), 0) = calib_instances[i].label_x;
        Y(static_cast<int>(i), 1) = calib_instances[i].label_y;
    }

    // Collinearity check on the raw-prediction cloud.
    Eigen::Vector2d mean = Z.leftCols<2>().colwise().mean();
    Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
    for (std::size_t i = 0; i < n; ++i) {
        Eigen::Vector2d c = Z.row(static_cast<int>(i)).head<2>().transpose() - mean;
        cov += c * c.transpose();
    }
    cov /= static_cast<double>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
    const double lo = es.eigenvalues()(0), hi = es.eigenvalues()(1);

    CalibrationResult result;
    Calibration calib;
    if (lo <= 1e-9 * std::max(1.0, hi)) {
        // Degenerate anchors: offset-only correction.
        result.offset_only_fallback = true;
        calib.offset_only_fallback = true;
        calib.b[0] = (Y.col(0) - Z.col(0)).mean();
        calib.b[1] = (Y.col(1) - Z.col(1)).mean();
    } else {
        Eigen::Matrix3d M = Z.transpose() * Z;
        Eigen::MatrixXd C = Eigen::LDLT<Eigen::Matrix3d>(M).solve(Z.transpose() * Y);  // 3x2
        calib.a[0][0] = C(0, 0);
        calib.a[0][1] = C(1, 0);
        calib.b[0] = C(2, 0);
        calib.a[1][0] = C(0, 1);
        calib.a[1][1] = C(1, 1);
        calib.b[1] = C(2, 1);
    }
    model.calib = calib;
    return result;
}

ImportanceTable feature_importance(const ModelArtifact& model) {
    if (model.kind != ModelKind::Gbrt)
        throw ContractError("feature_importance: only supported for GBRT models");
    const int d = model.shape.features();
    const int per_channel = model.shape.window_frames * model.shape.rows;

    ImportanceTable table;
    table.per_feature.assign(static_cast<std::size_t>(d), 0.0);
    for (const Ensemble* ens : {&model.ens_x, &model.ens_y})
        for (const auto& tree : ens->trees)
            for (const auto& node : tree.nodes)
                if (node.feature >= 0) table.per_feature[static_cast<std::size_t>(node.feature)] += node.gain;

    table.raw.assign(static_cast<std::size_t>(model.shape.channels), 0.0);
    for (int f = 0; f < d; ++f) table.raw[static_cast<std::size_t>(f / per_channel)] += table.per_feature[static_cast<std::size_t>(f)];

    double mx = 0.0;
    for (double v : table.raw) mx = std::max(mx, v);
    table.scaled.assign(table.raw.size(), 0.0);
    if (mx > 0.0)
        for (std::size_t c = 0; c < table.raw.size(); ++c) table.scaled[c] = 100.0 * table.raw[c] / mx;
    return table;
}

// ---- GZMD serialization ----------------------------------------------------

namespace {

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw IoError("truncated model file");
    return v;
}

void put_ensemble(std::ofstream& out, const Ensemble& e) {
    put(out, e.init);
    put(out, static_cast<uint32_t>(e.trees.size()));
    for (const auto& t : e.trees) {
        put(out, static_cast<uint32_t>(t.nodes.size()));
        for (const auto& n : t.nodes) {
            put(out, n.feature);
            put(out, n.threshold);
            put(out, n.left);
            put(out, n.right);
            put(out, n.value);
            put(out, n.gain);
        }
    }
}

Ensemble get_ensemble(std::ifstream& in) {
    Ensemble e;
    e.init = get<double>(in);
    const uint32_t n_trees = get<uint32_t>(in);
    e.trees.resize(n_trees);
    for (auto& t : e.trees) {
        const uint32_t n_nodes = get<uint32_t>(in);
        if (n_nodes == 0 || n_nodes > 1u << 24) throw IoError("corrupt tree in model file");
        t.nodes.resize(n_nodes);
        for (auto& n : t.nodes) {
            n.feature = get<int32_t>(in);
            n.threshold = get<float>(in);
            n.left = get<int32_t>(in);
            n.right = get<int32_t>(in);
            n.value = get<double>(in);
            n.gain = get<double>(in);
        }
    }
    return e;
}

} // namespace

void ModelArtifact::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path);
    out.write("GZMD", 4);
    put(out, static_cast<uint16_t>(1));  // version
    put(out, static_cast<uint16_t>(kind));
    put(out, config_hash);
    put(out, static_cast<uint32_t>(shape.window_frames));
    put(out, static_cast<uint32_t>(shape.rows));
    put(out, static_cast<uint32_t>(shape.channels));
    put(out, static_cast<uint32_t>(shape.features()));
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) put(out, calib.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)]);
    put(out, calib.b[0]);
    put(out, calib.b[1]);
    put(out, static_cast<uint8_t>(calib.offset_only_fallback ? 1 : 0));

    if (kind == ModelKind::Linear) {
        put(out, intercept[0]);
        put(out, intercept[1]);
        out.write(reinterpret_cast<const char*>(norm_mean.data()),
                  static_cast<std::streamsize>(norm_mean.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(norm_std.data()),
                  static_cast<std::streamsize>(norm_std.size() * sizeof(double)));
        out.write(reinterpret_cast<const char*>(weights.data()),
                  static_cast<std::streamsize>(weights.size() * sizeof(double)));
    } else {
        put(out, static_cast<uint32_t>(gbrt_params.n_trees));
        put(out, static_cast<uint32_t>(gbrt_params.max_depth));
        put(out, gbrt_params.learning_rate);
        put(out, gbrt_params.subsample);
        put(out, static_cast<uint32_t>(gbrt_params.max_bins));
        put(out, static_cast<uint8_t>(gbrt_params.exact_splits ? 1 : 0));
        put(out, gbrt_params.seed);
        put_ensemble(out, ens_x);
        put_ensemble(out, ens_y);
    }
    if (!out) throw IoError("short write on model file: " + path);
}

ModelArtifact ModelArtifact::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open model file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GZMD", 4) != 0) throw IoError("bad GZMD magic in " + path);
    const uint16_t version = get<uint16_t>(in);
    if (version != 1) throw IoError("unsupported GZMD version in " + path);

    ModelArtifact m;
    const uint16_t kind = get<uint16_t>(in);
    if (kind != 1 && kind != 2) throw IoError("unknown model kind in " + path);
    m.kind = static_cast<ModelKind>(kind);
    m.config_hash = get<uint64_t>(in);
    m.shape.window_frames = static_cast<int>(get<uint32_t>(in));
    m.shape.rows = static_cast<int>(get<uint32_t>(in));
    m.shape.channels = static_cast<int>(get<uint32_t>(in));
    const uint32_t n_features = get<uint32_t>(in);
    if (static_cast<int>(n_features) != m.shape.features())
        throw IoError("inconsistent tensor shape in " + path);
    for (int r = 0; r < 2; ++r)
        for (int c = 0; c < 2; ++c) m.calib.a[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] = get<double>(in);
    m.calib.b[0] = get<double>(in);
    m.calib.b[1] = get<double>(in);
    m.calib.offset_only_fallback = get<uint8_t>(in) != 0;

    if (m.kind == ModelKind::Linear) {
        m.intercept[0] = get<double>(in);
        m.intercept[1] = get<double>(in);
        m.norm_mean.resize(n_features);
        m.norm_std.resize(n_features);
        m.weights.resize(static_cast<std::size_t>(n_features) * 2);
        in.read(reinterpret_cast<char*>(m.norm_mean.data()),
                static_cast<std::streamsize>(m.norm_mean.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(m.norm_std.data()),
                static_cast<std::streamsize>(m.norm_std.size() * sizeof(double)));
        in.read(reinterpret_cast<char*>(m.weights.data()),
                static_cast<std::streamsize>(m.weights.size() * sizeof(double)));
        if (!in) throw IoError("truncated linear model in " + path);
    } else {
        m.gbrt_params.n_trees = static_cast<int>(get<uint32_t>(in));
        m.gbrt_params.max_depth = static_cast<int>(get<uint32_t>(in));
        m.gbrt_params.learning_rate = get<double>(in);
        m.gbrt_params.subsample = get<double>(in);
        m.gbrt_params.max_bins = static_cast<int>(get<uint32_t>(in));
        m.gbrt_params.exact_splits = get<uint8_t>(in) != 0;
        m.gbrt_params.seed = get<uint64_t>(in);
        m.ens_x = get_ensemble(in);
        m.ens_y = get_ensemble(in);
    }
    return m;
}

} // namespace echogaze
