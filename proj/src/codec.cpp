#include "simplexreg/codec.hpp"

#include "simplexreg/data.hpp"
#include "simplexreg/losses.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace simplexreg {

void HardBinner::validate() const {
    if (k() < 2) throw std::invalid_argument("HardBinner: need at least 2 centers");
    for (Index i = 0; i < k(); ++i) {
        for (Index j = i + 1; j < k(); ++j) {
            if (centers.row(i) == centers.row(j)) {
                throw std::invalid_argument("HardBinner: duplicate centers " + std::to_string(i) +
                                            " and " + std::to_string(j));
            }
        }
    }
}

HardBinner make_binner_1d(const Eigen::Ref<const Tensor>& values, Index k, BinStyle style,
                          double lo, double hi) {
    if (k < 2) throw std::invalid_argument("make_binner_1d: k must be >= 2");
    if (!(lo < hi)) throw std::invalid_argument("make_binner_1d: empty range");
    HardBinner binner{Tensor(k, 1)};
    if (style == BinStyle::equal_width) {
        const double w = (hi - lo) / static_cast<double>(k);
        for (Index i = 0; i < k; ++i) binner.centers(i, 0) = lo + (static_cast<double>(i) + 0.5) * w;
    } else {
        if (values.cols() != 1 || values.rows() == 0) {
            throw ShapeError("make_binner_1d: quantile bins need a non-empty [n, 1] column");
        }
        std::vector<double> v(values.data(), values.data() + values.size());
        std::sort(v.begin(), v.end());
        auto quantile = [&v](double q) {
            const double pos = q * static_cast<double>(v.size() - 1);
            const auto i = static_cast<std::size_t>(pos);
            const double frac = pos - static_cast<double>(i);
            return i + 1 < v.size() ? v[i] * (1.0 - frac) + v[i + 1] * frac : v.back();
        };
        std::vector<double> edges(static_cast<std::size_t>(k) + 1);
        edges.front() = lo;
        edges.back() = hi;
        for (Index i = 1; i < k; ++i) {
            edges[static_cast<std::size_t>(i)] =
                quantile(static_cast<double>(i) / static_cast<double>(k));
        }
        for (Index i = 0; i < k; ++i) {
            binner.centers(i, 0) = 0.5 * (edges[static_cast<std::size_t>(i)] +
                                          edges[static_cast<std::size_t>(i) + 1]);
        }
        // Heavy ties in the data can collapse quantile edges; spread duplicates.
        for (Index i = 1; i < k; ++i) {
            if (binner.centers(i, 0) <= binner.centers(i - 1, 0)) {
                binner.centers(i, 0) = std::nextafter(binner.centers(i - 1, 0), hi + 1.0);
            }
        }
    }
    binner.validate();
    return binner;
}

void TargetCodec::validate() const {
    const Index k_ = mu.rows(), m_ = mu.cols();
    if (k_ < 1 || m_ < 1) throw ShapeError("TargetCodec: empty decoder");
    if (w_lin.rows() != m_ || w_lin.cols() != k_) {
        throw ShapeError("TargetCodec: w_lin " + shape_str(w_lin) + " inconsistent with mu " +
                         shape_str(mu));
    }
    if (w_bias.rows() != 1 || w_bias.cols() != k_) {
        throw ShapeError("TargetCodec: w_bias " + shape_str(w_bias) + " inconsistent with mu " +
                         shape_str(mu));
    }
}

Var encode_soft(Var y, Var w_lin, Var w_bias) {
    return softmax_rows(add(matmul(y, w_lin), w_bias));
}

void CodecInitConfig::validate() const {
    if (k < 1) throw std::invalid_argument("CodecInitConfig: k must be >= 1");
    if (m < 1) throw std::invalid_argument("CodecInitConfig: m must be >= 1");
    if (!(lambda_sigma > 0.0)) {
        throw std::invalid_argument("CodecInitConfig: lambda_sigma must be positive");
    }
    if (range_min.size() != static_cast<std::size_t>(m) ||
        range_max.size() != static_cast<std::size_t>(m)) {
        throw std::invalid_argument("CodecInitConfig: target range must have m entries");
    }
    for (std::size_t d = 0; d < range_min.size(); ++d) {
        if (!(range_min[d] < range_max[d])) {
            throw std::invalid_argument("CodecInitConfig: range min must be < max in dim " +
                                        std::to_string(d));
        }
    }
    if (kmeans_iters < 0) throw std::invalid_argument("CodecInitConfig: kmeans_iters < 0");
}

double uniform_spacing(const CodecInitConfig& cfg) {
    return (cfg.range_max[0] - cfg.range_min[0]) / static_cast<double>(cfg.k - 1);
}

TargetCodec init_uniform_1d(const CodecInitConfig& cfg) {
    if (cfg.k < 2) throw std::invalid_argument("init_uniform_1d: k must be >= 2");
    if (cfg.m != 1) throw std::invalid_argument("init_uniform_1d: requires m == 1");
    cfg.validate();
    const double delta = uniform_spacing(cfg);
    TargetCodec codec;
    codec.mu.resize(cfg.k, 1);
    for (Index i = 0; i < cfg.k; ++i) {
        codec.mu(i, 0) = cfg.range_min[0] + static_cast<double>(i) * delta;
    }
    codec.mu(cfg.k - 1, 0) = cfg.range_max[0];
    AffineEncoder enc = gaussian_to_affine(codec.mu, cfg.lambda_sigma * delta);
    codec.w_lin = std::move(enc.w_lin);
    codec.w_bias = std::move(enc.w_bias);
    return codec;
}

namespace {

Index count_distinct_rows(const Eigen::Ref<const Tensor>& points, Index stop_at) {
    std::vector<Index> order(static_cast<std::size_t>(points.rows()));
    std::iota(order.begin(), order.end(), Index{0});
    auto row_less = [&points](Index a, Index b) {
        for (Index d = 0; d < points.cols(); ++d) {
            if (points(a, d) != points(b, d)) return points(a, d) < points(b, d);
        }
        return false;
    };
    std::sort(order.begin(), order.end(), row_less);
    Index distinct = order.empty() ? 0 : 1;
    for (std::size_t i = 1; i < order.size() && distinct < stop_at; ++i) {
        if (row_less(order[i - 1], order[i])) ++distinct;
    }
    return distinct;
}

// Nearest center (lowest index on ties) and its squared distance.
std::pair<Index, double> nearest(const Tensor& centers, const Eigen::Ref<const Tensor>& points,
                                 Index row) {
    Index best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (Index c = 0; c < centers.rows(); ++c) {
        const double d = (centers.row(c) - points.row(row)).squaredNorm();
        if (d < best_d) {
            best_d = d;
            best = c;
        }
    }
    return {best, best_d};
}

}  // namespace

KMeansResult kmeans(const Eigen::Ref<const Tensor>& points, Index k, int max_iters, Rng& rng) {
    const Index n = points.rows();
    if (k < 1) throw std::invalid_argument("kmeans: k must be >= 1");
    if (n < k) {
        throw DataError("kmeans: " + std::to_string(n) + " points for k = " + std::to_string(k));
    }
    if (count_distinct_rows(points, k) < k) {
        throw DataError("kmeans: fewer than k = " + std::to_string(k) + " distinct targets");
    }

    KMeansResult res;
    res.centers.resize(k, points.cols());

    // k-means++ seeding: first center uniform, then proportional to D^2.
    std::vector<double> d2(static_cast<std::size_t>(n), std::numeric_limits<double>::infinity());
    res.centers.row(0) = points.row(static_cast<Index>(rng.below(static_cast<std::uint64_t>(n))));
    for (Index c = 1; c < k; ++c) {
        double total = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double d = (points.row(i) - res.centers.row(c - 1)).squaredNorm();
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], d);
            total += d2[static_cast<std::size_t>(i)];
        }
        Index pick = -1;
        Index last_positive = 0;
        const double target = rng.uniform() * total;
        double acc = 0.0;
        for (Index i = 0; i < n; ++i) {
            const double di = d2[static_cast<std::size_t>(i)];
            if (di <= 0.0) continue;
            last_positive = i;
            acc += di;
            if (acc > target) {
                pick = i;
                break;
            }
        }
        if (pick < 0) pick = last_positive;  // rounding left target unreached
        res.centers.row(c) = points.row(pick);
    }

    res.labels.assign(static_cast<std::size_t>(n), -1);
    std::vector<double> dist(static_cast<std::size_t>(n));
    for (int it = 0; it < max_iters; ++it) {
        bool changed = false;
        for (Index i = 0; i < n; ++i) {
            auto [c, d] = nearest(res.centers, points, i);
            dist[static_cast<std::size_t>(i)] = d;
            if (res.labels[static_cast<std::size_t>(i)] != c) {
                res.labels[static_cast<std::size_t>(i)] = c;
                changed = true;
            }
        }
        if (!changed) break;
        res.iterations = it + 1;

        Tensor sums = Tensor::Zero(k, points.cols());
        std::vector<Index> counts(static_cast<std::size_t>(k), 0);
        for (Index i = 0; i < n; ++i) {
            const Index c = res.labels[static_cast<std::size_t>(i)];
            sums.row(c) += points.row(i);
            ++counts[static_cast<std::size_t>(c)];
        }
        for (Index c = 0; c < k; ++c) {
            const Index count = counts[static_cast<std::size_t>(c)];
            if (count > 0) {
                res.centers.row(c) = sums.row(c) / static_cast<double>(count);
                continue;
            }
            // Empty cluster: move it onto the worst-served point.
            const auto far = std::max_element(dist.begin(), dist.end()) - dist.begin();
            res.centers.row(c) = points.row(static_cast<Index>(far));
            dist[static_cast<std::size_t>(far)] = 0.0;
        }
    }

    // Final assignment against the final centers.
    res.sse = 0.0;
    double dsum = 0.0;
    for (Index i = 0; i < n; ++i) {
        auto [c, d] = nearest(res.centers, points, i);
        res.labels[static_cast<std::size_t>(i)] = c;
        res.sse += d;
        dsum += std::sqrt(d);
    }
    res.mean_intra_distance = dsum / static_cast<double>(n);
    return res;
}

TargetCodec init_kmeanspp(const CodecInitConfig& cfg, const Eigen::Ref<const Tensor>& targets,
                          Rng& rng) {
    cfg.validate();
    if (targets.cols() != cfg.m) {
        throw ShapeError("init_kmeanspp: targets " + shape_str(targets) + " but m = " +
                         std::to_string(cfg.m));
    }
    KMeansResult km = kmeans(targets, cfg.k, cfg.kmeans_iters, rng);
    double delta = km.mean_intra_distance;
    if (!(delta > 0.0)) {
        double gap = std::numeric_limits<double>::infinity();
        for (Index i = 0; i < cfg.k; ++i) {
            for (Index j = i + 1; j < cfg.k; ++j) {
                gap = std::min(gap, (km.centers.row(i) - km.centers.row(j)).norm());
            }
        }
        delta = std::isfinite(gap) ? 0.5 * gap : 1.0;
    }
    TargetCodec codec;
    codec.mu = km.centers;
    AffineEncoder enc = gaussian_to_affine(codec.mu, cfg.lambda_sigma * delta);
    codec.w_lin = std::move(enc.w_lin);
    codec.w_bias = std::move(enc.w_bias);
    return codec;
}

double autoencoding_rmse(const TargetCodec& codec, const Eigen::Ref<const Tensor>& y) {
    if (y.rows() == 0) throw ShapeError("autoencoding_rmse: no targets");
    const Tensor z = encode_soft(codec, y) * codec.mu;
    return std::sqrt((y - z).squaredNorm() / static_cast<double>(y.rows()));
}

double mean_encoding_entropy(const TargetCodec& codec, const Eigen::Ref<const Tensor>& y) {
    if (y.rows() == 0) throw ShapeError("mean_encoding_entropy: no targets");
    const Tensor p = encode_soft(codec, y);
    const Tensor logp = log_softmax_rows(encoder_logits(codec, y));
    return -(p.cwiseProduct(logp)).sum() / static_cast<double>(y.rows());
}

PretrainResult pretrain_codec(const TargetCodec& codec, const Eigen::Ref<const Tensor>& targets,
                              double alpha, const TrainConfig& cfg) {
    cfg.validate();
    codec.validate();
    if (targets.cols() != codec.m()) {
        throw ShapeError("pretrain_codec: targets " + shape_str(targets) + " vs codec m = " +
                         std::to_string(codec.m()));
    }
    if (!targets.allFinite()) throw std::invalid_argument("pretrain_codec: non-finite targets");
    const Index n = targets.rows();
    const Index bs = cfg.batch_size > 0 ? cfg.batch_size : std::min<Index>(n, 256);

    PretrainResult res;
    res.codec = codec;
    res.initial_rmse = autoencoding_rmse(codec, targets);
    double best_rmse = res.initial_rmse;

    std::vector<Tensor> params{codec.w_lin, codec.w_bias, codec.mu};
    const std::vector<double> decay(params.size(), cfg.weight_decay_codec);
    AdamState adam = make_adam_state(params);
    Rng shuffle(cfg.seed, streams::shuffle);
    const long steps_per_epoch = static_cast<long>((n + bs - 1) / bs);
    const long total_steps = steps_per_epoch * cfg.epochs;
    long step = 0;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (const auto& idx : batch_indices(n, bs, shuffle, true)) {
            Tape tape;
            const std::vector<Var> leaves = tape.variables(params);
            const Var y = tape.constant(gather_rows(targets, idx));
            const Var psi = encode_soft(y, leaves[0], leaves[1]);
            const Var loss = autoencoding_objective(y, psi, leaves[2], alpha);
            const double value = loss.scalar();
            if (!std::isfinite(value)) {
                throw TrainingError("pretrain_codec: non-finite loss at epoch " +
                                    std::to_string(epoch) + ", step " + std::to_string(step));
            }
            res.step_losses.push_back(value);
            tape.backward(loss);
            std::vector<Tensor> grads = tape.grads(leaves);
            clip_grad_norm(grads, cfg.grad_clip);
            adam_step(adam, params, grads, decay, lr_at(cfg, step, total_steps), cfg);
            ++step;
        }
        const TargetCodec current{params[0], params[1], params[2]};
        const double rmse = autoencoding_rmse(current, targets);
        if (rmse < best_rmse) {
            best_rmse = rmse;
            res.codec = current;
        }
    }
    res.final_rmse = best_rmse;
    return res;
}

}  // namespace simplexreg
