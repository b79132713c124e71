#include "echogaze/errors.hpp"
#include "echogaze/model.hpp"
#include "echogaze/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

namespace echogaze {

namespace {

// Per-feature quantized view of the training set. Bins and cut values are
// chosen so that "bin(x) <= b" and "x <= cuts[b]" agree exactly; when a
// feature has at most max_bins distinct values the candidate thresholds are
// precisely the midpoints of consecutive unique values, i.e. the exact
// greedy candidate set.
struct BinnedData {
    int n = 0;
    int d = 0;
    std::vector<uint8_t> bins;              // [f * n + i]
    std::vector<std::vector<float>> cuts;   // ascending per feature
};

float safe_midpoint(float lo, float hi) {
    float mid = static_cast<float>((static_cast<double>(lo) + static_cast<double>(hi)) / 2.0);
    if (!(mid > lo)) mid = lo;
    if (mid >= hi) mid = lo;
    return mid;
}

BinnedData bin_features(const std::vector<GazeInstance>& train, int d, int max_bins) {
    BinnedData data;
    data.n = static_cast<int>(train.size());
    data.d = d;
    data.bins.resize(static_cast<std::size_t>(d) * data.n);
    data.cuts.resize(static_cast<std::size_t>(d));

    const int n = data.n;
    std::vector<float> col(static_cast<std::size_t>(n));
    std::vector<float> sample;
    for (int f = 0; f < d; ++f) {
        for (int i = 0; i < n; ++i) col[static_cast<std::size_t>(i)] = train[static_cast<std::size_t>(i)].tensor[static_cast<std::size_t>(f)];

        // Candidate cuts from (a deterministic subsample of) the sorted column.
        const int cap = 4096;
        sample.clear();
        if (n <= cap) {
            sample = col;
        } else {
            const int step = (n + cap - 1) / cap;
            for (int i = 0; i < n; i += step) sample.push_back(col[static_cast<std::size_t>(i)]);
        }
        std::sort(sample.begin(), sample.end());
        sample.erase(std::unique(sample.begin(), sample.end()), sample.end());

        auto& cuts = data.cuts[static_cast<std::size_t>(f)];
        const int m = static_cast<int>(sample.size());
        if (m >= 2) {
            if (m <= max_bins) {
                for (int i = 0; i + 1 < m; ++i)
                    cuts.push_back(safe_midpoint(sample[static_cast<std::size_t>(i)], sample[static_cast<std::size_t>(i) + 1]));
            } else {
                for (int b = 1; b < max_bins; ++b) {
                    const int pos = static_cast<int>(static_cast<long long>(b) * m / max_bins);
                    if (pos > 0 && pos < m && sample[static_cast<std::size_t>(pos) - 1] < sample[static_cast<std::size_t>(pos)])
                        cuts.push_back(safe_midpoint(sample[static_cast<std::size_t>(pos) - 1], sample[static_cast<std::size_t>(pos)]));
                }
                cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
            }
        }

        uint8_t* row = data.bins.data() + static_cast<std::size_t>(f) * n;
        if (cuts.empty()) {
            std::memset(row, 0, static_cast<std::size_t>(n));
        } else {
            for (int i = 0; i < n; ++i) {
                const auto it = std::lower_bound(cuts.begin(), cuts.end(), col[static_cast<std::size_t>(i)]);
                row[i] = static_cast<uint8_t>(it - cuts.begin());
            }
        }
    }
    return data;
}

struct NodeWork {
    int node = 0;       // index into Tree::nodes
    int begin = 0;      // range in the subsample index array
    int end = 0;
    double sum = 0.0;
    int count = 0;
};

struct SplitChoice {
    int feature = -1;
    int bin = -1;
    double gain = 0.0;
    double sum_left = 0.0;
    int count_left = 0;
};

// One boosting stage: depth-limited regression tree on the residuals of the
// subsampled instances, histogram split search over every feature.
Tree build_tree_hist(const BinnedData& data, const std::vector<double>& residual,
                     std::vector<int>& idx, int max_depth, double learning_rate,
                     std::vector<int8_t>* split_bins_out) {
    Tree tree;
    std::vector<int> node_split_bin;

    double root_sum = 0.0;
    for (int p = 0; p < static_cast<int>(idx.size()); ++p) root_sum += residual[static_cast<std::size_t>(idx[static_cast<std::size_t>(p)])];
    tree.nodes.push_back(TreeNode{});
    node_split_bin.push_back(-1);
    std::vector<NodeWork> level{{0, 0, static_cast<int>(idx.size()), root_sum, static_cast<int>(idx.size())}};

    double hsum[256];
    int hcnt[256];

    for (int depth = 0; depth < max_depth && !level.empty(); ++depth) {
        std::vector<NodeWork> next;
        for (const NodeWork& w : level) {
            SplitChoice best;
            if (w.count >= 2) {
                for (int f = 0; f < data.d; ++f) {
                    const auto& cuts = data.cuts[static_cast<std::size_t>(f)];
                    if (cuts.empty()) continue;
                    const int n_bins = static_cast<int>(cuts.size()) + 1;
                    std::memset(hsum, 0, static_cast<std::size_t>(n_bins) * sizeof(double));
                    std::memset(hcnt, 0, static_cast<std::size_t>(n_bins) * sizeof(int));
                    const uint8_t* row = data.bins.data() + static_cast<std::size_t>(f) * data.n;
                    for (int p = w.begin; p < w.end; ++p) {
                        const int i = idx[static_cast<std::size_t>(p)];
                        const int b = row[i];
                        hsum[b] += residual[static_cast<std::size_t>(i)];
                        ++hcnt[b];
                    }
                    double sl = 0.0;
                    int nl = 0;
                    for (int b = 0; b + 1 < n_bins; ++b) {
                        sl += hsum[b];
                        nl += hcnt[b];
                        const int nr = w.count - nl;
                        if (nl == 0 || nr == 0) continue;
                        const double sr = w.sum - sl;
                        const double gain = sl * sl / nl + sr * sr / nr - w.sum * w.sum / w.count;
                        if (gain > best.gain + 1e-12) {
                            best.feature = f;
                            best.bin = b;
                            best.gain = gain;
                            best.sum_left = sl;
                            best.count_left = nl;
                        }
                    }
                }
            }
            TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
            if (best.feature < 0 || best.gain <= 1e-12) {
                node.feature = -1;
                node.value = learning_rate * w.sum / w.count;
                continue;
            }
            const uint8_t* row = data.bins.data() + static_cast<std::size_t>(best.feature) * data.n;
            auto mid_it = std::partition(idx.begin() + w.begin, idx.begin() + w.end,
                                         [&](int i) { return row[i] <= best.bin; });
            const int mid = static_cast<int>(mid_it - idx.begin());

            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            node.feature = best.feature;
            node.threshold = data.cuts[static_cast<std::size_t>(best.feature)][static_cast<std::size_t>(best.bin)];
            node.gain = best.gain;
            node.left = left;
            node.right = right;
            node_split_bin[static_cast<std::size_t>(w.node)] = best.bin;

            tree.nodes.push_back(TreeNode{});
            node_split_bin.push_back(-1);
            tree.nodes.push_back(TreeNode{});
            node_split_bin.push_back(-1);

            next.push_back(NodeWork{left, w.begin, mid, best.sum_left, best.count_left});
            next.push_back(NodeWork{right, mid, w.end, w.sum - best.sum_left, w.count - best.count_left});
        }
        level.swap(next);
    }
    // Anything still active at max depth becomes a leaf.
    for (const NodeWork& w : level) {
        TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
        node.feature = -1;
        node.value = learning_rate * w.sum / w.count;
    }

    if (split_bins_out) {
        split_bins_out->assign(node_split_bin.size(), -1);
        for (std::size_t i = 0; i < node_split_bin.size(); ++i)
            (*split_bins_out)[i] = static_cast<int8_t>(node_split_bin[i]);
    }
    return tree;
}

// Sort-based exact greedy over all features, thresholds at midpoints of
// sorted unique values. Kept as the oracle for the histogram path.
Tree build_tree_exact(const std::vector<GazeInstance>& train, const std::vector<double>& residual,
                      std::vector<int>& idx, int d, int max_depth, double learning_rate) {
    Tree tree;
    tree.nodes.push_back(TreeNode{});
    double root_sum = 0.0;
    for (int i : idx) root_sum += residual[static_cast<std::size_t>(i)];
    std::vector<NodeWork> level{{0, 0, static_cast<int>(idx.size()), root_sum, static_cast<int>(idx.size())}};

    std::vector<std::pair<float, int>> vals;
    for (int depth = 0; depth < max_depth && !level.empty(); ++depth) {
        std::vector<NodeWork> next;
        for (const NodeWork& w : level) {
            int best_f = -1;
            float best_thr = 0.0f;
            double best_gain = 0.0, best_sl = 0.0;
            int best_nl = 0;
            if (w.count >= 2) {
                for (int f = 0; f < d; ++f) {
                    vals.clear();
                    for (int p = w.begin; p < w.end; ++p) {
                        const int i = idx[static_cast<std::size_t>(p)];
                        vals.emplace_back(train[static_cast<std::size_t>(i)].tensor[static_cast<std::size_t>(f)], i);
                    }
                    std::sort(vals.begin(), vals.end(),
                              [](const auto& a, const auto& b) { return a.first < b.first; });
                    double sl = 0.0;
                    for (int p = 0; p + 1 < static_cast<int>(vals.size()); ++p) {
                        sl += residual[static_cast<std::size_t>(vals[static_cast<std::size_t>(p)].second)];
                        if (vals[static_cast<std::size_t>(p)].first == vals[static_cast<std::size_t>(p) + 1].first) continue;
                        const int nl = p + 1;
                        const int nr = w.count - nl;
                        const double sr = w.sum - sl;
                        const double gain = sl * sl / nl + sr * sr / nr - w.sum * w.sum / w.count;
                        if (gain > best_gain + 1e-12) {
                            best_gain = gain;
                            best_f = f;
                            best_thr = safe_midpoint(vals[static_cast<std::size_t>(p)].first, vals[static_cast<std::size_t>(p) + 1].first);
                            best_sl = sl;
                            best_nl = nl;
                        }
                    }
                }
            }
            TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
            if (best_f < 0) {
                node.feature = -1;
                node.value = learning_rate * w.sum / w.count;
                continue;
            }
            auto mid_it = std::partition(idx.begin() + w.begin, idx.begin() + w.end, [&](int i) {
                return train[static_cast<std::size_t>(i)].tensor[static_cast<std::size_t>(best_f)] <= best_thr;
            });
            const int mid = static_cast<int>(mid_it - idx.begin());
            const int left = static_cast<int>(tree.nodes.size());
            const int right = left + 1;
            node.feature = best_f;
            node.threshold = best_thr;
            node.gain = best_gain;
            node.left = left;
            node.right = right;
            tree.nodes.push_back(TreeNode{});
            tree.nodes.push_back(TreeNode{});
            next.push_back(NodeWork{left, w.begin, mid, best_sl, best_nl});
            next.push_back(NodeWork{right, mid, w.end, w.sum - best_sl, w.count - best_nl});
        }
        level.swap(next);
    }
    for (const NodeWork& w : level) {
        TreeNode& node = tree.nodes[static_cast<std::size_t>(w.node)];
        node.feature = -1;
        node.value = learning_rate * w.sum / w.count;
    }
    return tree;
}

double predict_tree_binned(const Tree& tree, const std::vector<int8_t>& split_bins,
                           const BinnedData& data, int i) {
    int node = 0;
    for (;;) {
        const TreeNode& nd = tree.nodes[static_cast<std::size_t>(node)];
        if (nd.feature < 0) return nd.value;
        const uint8_t b = data.bins[static_cast<std::size_t>(nd.feature) * data.n + i];
        node = (static_cast<int>(b) <= split_bins[static_cast<std::size_t>(node)]) ? nd.left : nd.right;
    }
}

Ensemble fit_ensemble(const std::vector<GazeInstance>& train, const BinnedData* binned,
                      const std::vector<double>& labels, const GbrtParams& params, int d,
                      int coord) {
    const int n = static_cast<int>(train.size());
    Ensemble ens;
    ens.init = std::accumulate(labels.begin(), labels.end(), 0.0) / n;

    std::vector<double> pred(static_cast<std::size_t>(n), ens.init);
    std::vector<double> residual(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) residual[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] - ens.init;

    const int k = std::max(1, static_cast<int>(std::lround(params.subsample * n)));
    std::vector<int> pool(static_cast<std::size_t>(n));
    std::vector<int> idx;
    std::vector<int8_t> split_bins;

    for (int stage = 0; stage < params.n_trees; ++stage) {
        std::iota(pool.begin(), pool.end(), 0);
        if (k < n) {
            Rng rng(rng_derive(rng_derive(params.seed, "subsample"),
                               static_cast<uint64_t>(coord) * static_cast<uint64_t>(params.n_trees) +
                                   static_cast<uint64_t>(stage)));
            for (int i = 0; i < k; ++i) {
                const int j = i + static_cast<int>(rng.below(static_cast<uint64_t>(n - i)));
                std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
            }
            idx.assign(pool.begin(), pool.begin() + k);
            std::sort(idx.begin(), idx.end());
        } else {
            idx = pool;
        }

        Tree tree;
        if (params.exact_splits) {
            tree = build_tree_exact(train, residual, idx, d, params.max_depth, params.learning_rate);
            for (int i = 0; i < n; ++i) {
                const double dv = tree.predict(train[static_cast<std::size_t>(i)].tensor.data());
                pred[static_cast<std::size_t>(i)] += dv;
                residual[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] - pred[static_cast<std::size_t>(i)];
            }
        } else {
            tree = build_tree_hist(*binned, residual, idx, params.max_depth, params.learning_rate,
                                   &split_bins);
            for (int i = 0; i < n; ++i) {
                const double dv = predict_tree_binned(tree, split_bins, *binned, i);
                pred[static_cast<std::size_t>(i)] += dv;
                residual[static_cast<std::size_t>(i)] = labels[static_cast<std::size_t>(i)] - pred[static_cast<std::size_t>(i)];
            }
        }
        ens.trees.push_back(std::move(tree));
    }
    return ens;
}

} // namespace

ModelArtifact fit_gbrt(const std::vector<GazeInstance>& train, const GbrtParams& params,
                       TensorShape shape, uint64_t config_hash_value) {
    params.validate();
    if (train.size() < 2) throw ContractError("fit_gbrt: need at least 2 instances");
    for (const auto& inst : train)
        if (static_cast<int>(inst.tensor.size()) != shape.features())
            throw ContractError("fit_gbrt: instance feature size does not match shape");

    const int n = static_cast<int>(train.size());
    const int d = shape.features();

    ModelArtifact m;
    m.kind = ModelKind::Gbrt;
    m.shape = shape;
    m.config_hash = config_hash_value;
    m.gbrt_params = params;

    BinnedData binned;
    if (!params.exact_splits) binned = bin_features(train, d, params.max_bins);

    std::vector<double> yx(static_cast<std::size_t>(n)), yy(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        yx[static_cast<std::size_t>(i)] = train[static_cast<std::size_t>(i)].label_x;
        yy[static_cast<std::size_t>(i)] = train[static_cast<std::size_t>(i)].label_y;
    }
    m.ens_x = fit_ensemble(train, params.exact_splits ? nullptr : &binned, yx, params, d, 0);
    m.ens_y = fit_ensemble(train, params.exact_splits ? nullptr : &binned, yy, params, d, 1);
    return m;
}

} // namespace echogaze
