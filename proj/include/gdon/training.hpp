#pragma once

// Loss, Adam, the training loop and checkpoints.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>
#include <type_traits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdon/autodiff.hpp"
#include "gdon/data.hpp"
#include "gdon/error.hpp"
#include "gdon/evaluation.hpp"
#include "gdon/geometry.hpp"
#include "gdon/io.hpp"
#include "gdon/model.hpp"
#include "gdon/nn.hpp"

namespace gdon {

enum class Precision { float32, float64 };

inline Precision parse_precision(const std::string& s) {
    if (s == "float32") return Precision::float32;
    if (s == "float64") return Precision::float64;
    throw InvalidArgument("unknown precision '" + s + "'");
}
inline std::string to_string(Precision p) { return p == Precision::float32 ? "float32" : "float64"; }

struct TrainConfig {
    double lr = 5e-4;
    std::size_t batch_size = 16;
    std::size_t epochs = 40;
    double lr_decay_factor = 0.8;
    /// 0 selects a quarter of the total epochs.
    std::size_t lr_decay_every = 0;
    double grad_clip = 1.0;
    std::uint64_t seed = 0;
    Precision precision = Precision::float32;
    /// Wall-clock budget in seconds; 0 means unlimited. Checked between epochs.
    double max_seconds = 0.0;
    /// Replace each training sample by a random periodic translation of itself.
    /// If some translations map the sensor set onto itself (regular grids),
    /// only those are used; otherwise the sensors move with the field.
    bool shift_augment = false;

    std::size_t decay_every() const { return lr_decay_every > 0 ? lr_decay_every : std::max<std::size_t>(1, epochs / 4); }

    void validate() const {
        detail::require(lr > 0.0, "train: lr must be positive");
        detail::require(lr_decay_factor > 0.0 && lr_decay_factor <= 1.0, "train: lr_decay_factor must be in (0, 1]");
        detail::require(batch_size >= 1, "train: batch_size must be >= 1");
    }

    /// Learning rate in effect during `epoch` (0-based).
    double lr_at(std::size_t epoch) const {
        return lr * std::pow(lr_decay_factor, static_cast<double>(epoch / decay_every()));
    }
};

inline nlohmann::json to_json(const TrainConfig& c) {
    return {{"lr", c.lr},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"lr_decay_factor", c.lr_decay_factor},
            {"lr_decay_every", c.decay_every()},
            {"grad_clip", c.grad_clip},
            {"seed", c.seed},
            {"precision", to_string(c.precision)},
            {"max_seconds", c.max_seconds},
            {"shift_augment", c.shift_augment}};
}

/// Bundled trajectories on one sensor graph.
struct TrainingSet {
    Bundles bundles;
    SpatialGraph graph;
    double dt = 0.0;
};

inline TrainingSet make_training_set(const TrajectoryDataset& ds, std::size_t K, int k_neighbors = 0) {
    return TrainingSet{bundle_frames(ds, K), build_knn_graph(ds.sensors, k_neighbors), ds.dt};
}

/// Model inputs and per-block targets for a subset of samples.
template <class S>
struct Batch {
    GraphBatch graphs;
    std::vector<ad::Matrix<S>> targets;  // per block: [K * Q, C], rows k*Q + q
};

/// Optional per-sample change for make_batch: node n takes the values of
/// node perm[n], and/or the sample sits on `graph` instead of the set's graph.
struct SampleTransform {
    const std::vector<int>* perm = nullptr;
    const SpatialGraph* graph = nullptr;
};

/// `transforms` is empty or holds one entry per index.
template <class S>
Batch<S> make_batch(const TrainingSet& set, std::span<const std::size_t> indices,
                    std::span<const SampleTransform> transforms = {}) {
    Batch<S> b;
    const std::size_t K = set.bundles.K;
    const std::size_t R = set.bundles.R;
    detail::require(transforms.empty() || transforms.size() == indices.size(), "make_batch: one transform per sample");
    auto perm = [&](std::size_t j) { return transforms.empty() ? nullptr : transforms[j].perm; };
    auto node = [&](std::size_t j, std::size_t n) {
        const auto* p = perm(j);
        return p ? static_cast<std::size_t>((*p)[n]) : n;
    };
    for (std::size_t j = 0; j < indices.size(); ++j) {
        const BundledSample& s = set.bundles.samples.at(indices[j]);
        const SpatialGraph& g = !transforms.empty() && transforms[j].graph ? *transforms[j].graph : set.graph;
        if (!perm(j)) {
            b.graphs.add(g, stack_frames(s.input_frames, K, s.n_nodes, s.n_channels));
            continue;
        }
        std::vector<float> frames(s.input_frames.size());
        for (std::size_t k = 0; k < K; ++k)
            for (std::size_t n = 0; n < s.n_nodes; ++n)
                for (std::size_t c = 0; c < s.n_channels; ++c)
                    frames[(k * s.n_nodes + n) * s.n_channels + c] =
                        s.input_frames[(k * s.n_nodes + node(j, n)) * s.n_channels + c];
        b.graphs.add(g, stack_frames(frames, K, s.n_nodes, s.n_channels));
    }
    const Eigen::Index q = b.graphs.num_queries();
    for (std::size_t r = 0; r < R; ++r) {
        const std::size_t C = set.bundles.samples.at(indices[0]).n_channels;
        ad::Matrix<S> t(static_cast<Eigen::Index>(K) * q, static_cast<Eigen::Index>(C));
        for (std::size_t j = 0; j < indices.size(); ++j) {
            const BundledSample& s = set.bundles.samples[indices[j]];
            const Eigen::Index off = b.graphs.query_offsets[j];
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t n = 0; n < s.n_nodes; ++n)
                    for (std::size_t c = 0; c < C; ++c)
                        t(static_cast<Eigen::Index>(k) * q + off + static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(c)) =
                            static_cast<S>(s.target_frames[((r * K + k) * s.n_nodes + node(j, n)) * C + c]);
        }
        b.targets.push_back(std::move(t));
    }
    return b;
}

/// Loss^Total: mean over predicted frames of the per-frame MSE. With equal
/// frame sizes this is the mean over blocks of the block MSE.
template <class S>
Var loss_total(ad::Tape<S>& tape, const std::vector<Var>& preds, const std::vector<ad::Matrix<S>>& targets) {
    if (preds.size() != targets.size() || preds.empty()) {
        throw InvalidArgument("loss_total: prediction and target block counts differ");
    }
    Var acc = tape.mse(preds[0], targets[0]);
    for (std::size_t r = 1; r < preds.size(); ++r) acc = tape.add(acc, tape.mse(preds[r], targets[r]));
    return tape.scale(acc, S(1) / static_cast<S>(preds.size()));
}

/// Loss^Total for field predictions evaluated at the sensors of a bundled
/// sample (target layout [R*K, N, C], channel 0).
template <class S>
double loss_total(GraphDeepONet<S>& model, const std::vector<FieldPrediction<S>>& preds, const BundledSample& target,
                  const RowMatrixXd& sensor_positions) {
    std::size_t frames = 0;
    for (const auto& p : preds) frames += static_cast<std::size_t>(p.coeffs.rows());
    if (frames != target.target_times.size()) throw InvalidArgument("loss_total: prediction and target frame counts differ");
    double acc = 0.0;
    std::size_t f = 0;
    for (const auto& p : preds) {
        const auto vals = model.evaluate_field(p, sensor_positions);
        for (Eigen::Index k = 0; k < vals.rows(); ++k, ++f) {
            double se = 0.0;
            for (Eigen::Index n = 0; n < vals.cols(); ++n) {
                const double diff = static_cast<double>(vals(k, n)) -
                                    target.target_frames[(f * target.n_nodes + n) * target.n_channels];
                se += diff * diff;
            }
            acc += se / static_cast<double>(vals.cols());
        }
    }
    return acc / static_cast<double>(frames);
}

// ---------------------------------------------------------------------------

template <class S>
class Adam {
public:
    explicit Adam(const nn::ParameterStore<S>& params, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : beta1_(beta1), beta2_(beta2), eps_(eps) {
        for (std::size_t i = 0; i < params.size(); ++i) {
            m_.push_back(ad::Matrix<S>::Zero(params.value(i).rows(), params.value(i).cols()));
            v_.push_back(ad::Matrix<S>::Zero(params.value(i).rows(), params.value(i).cols()));
        }
    }

    void step(nn::ParameterStore<S>& params, double lr) {
        ++t_;
        const S b1 = static_cast<S>(beta1_), b2 = static_cast<S>(beta2_);
        const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
        const S step = static_cast<S>(lr / c1);
        const S inv_c2 = static_cast<S>(1.0 / c2);
        const S eps = static_cast<S>(eps_);
        for (std::size_t i = 0; i < params.size(); ++i) {
            const auto& g = params.grad(i);
            m_[i] = b1 * m_[i] + (S(1) - b1) * g;
            v_[i] = b2 * v_[i] + (S(1) - b2) * g.cwiseProduct(g);
            params.value(i).array() -= step * m_[i].array() / ((v_[i].array() * inv_c2).sqrt() + eps);
        }
    }

    std::uint64_t steps() const { return t_; }
    void set_steps(std::uint64_t t) { t_ = t; }
    std::vector<ad::Matrix<S>>& first_moments() { return m_; }
    std::vector<ad::Matrix<S>>& second_moments() { return v_; }

private:
    double beta1_, beta2_, eps_;
    std::uint64_t t_ = 0;
    std::vector<ad::Matrix<S>> m_;
    std::vector<ad::Matrix<S>> v_;
};

/// Scales all gradients so their global L2 norm is at most max_norm.
template <class S>
double clip_grad_norm(nn::ParameterStore<S>& params, double max_norm) {
    const double norm = params.grad_norm();
    if (max_norm > 0.0 && norm > max_norm) {
        const S s = static_cast<S>(max_norm / (norm + 1e-12));
        for (std::size_t i = 0; i < params.size(); ++i) params.grad(i) *= s;
    }
    return norm;
}

// ---------------------------------------------------------------------------

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_rel_l2 = std::numeric_limits<double>::quiet_NaN();
    double lr = 0.0;
    double seconds = 0.0;
};

struct FitResult {
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
    double best_val = std::numeric_limits<double>::infinity();
    std::uint64_t steps = 0;
    bool stopped_on_budget = false;
};

/// Mean over samples of the rollout relative L2 at the training sensors
/// (channel 0).
template <class S, class Model>
double validation_rel_l2(Model& model, const TrainingSet& set, std::size_t batch_size = 16) {
    const std::size_t n = set.bundles.samples.size();
    const std::size_t K = set.bundles.K;
    const std::size_t R = set.bundles.R;
    double acc = 0.0;
    std::vector<std::size_t> idx;
    for (std::size_t start = 0; start < n; start += batch_size) {
        idx.clear();
        for (std::size_t i = start; i < std::min(n, start + batch_size); ++i) idx.push_back(i);
        const Batch<S> batch = make_batch<S>(set, idx);
        ad::Tape<S> tape;
        const auto preds = model.predict_blocks(tape, batch.graphs, R, set.dt, false);
        const Eigen::Index q = batch.graphs.num_queries();
        for (std::size_t j = 0; j < idx.size(); ++j) {
            const Eigen::Index off = batch.graphs.query_offsets[j];
            const Eigen::Index nq = batch.graphs.query_offsets[j + 1] - off;
            RowMatrixXd p(static_cast<Eigen::Index>(R * K), nq), t(static_cast<Eigen::Index>(R * K), nq);
            for (std::size_t r = 0; r < R; ++r) {
                const auto& pv = tape.value(preds[r]);
                for (std::size_t k = 0; k < K; ++k)
                    for (Eigen::Index i = 0; i < nq; ++i) {
                        p(static_cast<Eigen::Index>(r * K + k), i) = static_cast<double>(pv(static_cast<Eigen::Index>(k) * q + off + i, 0));
                        t(static_cast<Eigen::Index>(r * K + k), i) =
                            static_cast<double>(batch.targets[r](static_cast<Eigen::Index>(k) * q + off + i, 0));
                    }
            }
            acc += relative_l2(p, t);
        }
    }
    return acc / static_cast<double>(n);
}

struct FitOptions {
    /// Called after every epoch (e.g. to append to a metrics log).
    std::function<void(const EpochRecord&)> on_epoch;
    /// Called when validation improves, with the 1-based epoch count.
    std::function<void(std::size_t)> on_best;
    /// First epoch index (for resumed runs).
    std::size_t start_epoch = 0;
    bool verbose = false;
};

/// Adam on Loss^Total with step LR decay, gradient clipping and best-
/// validation selection; parameters of the best epoch are restored at the
/// end. Deterministic given config.seed.
template <class S, class Model>
FitResult fit(Model& model, const TrainingSet& train, const TrainingSet* val, const TrainConfig& cfg,
              Adam<S>* optimizer = nullptr, const FitOptions& opts = {}) {
    cfg.validate();
    detail::require(!train.bundles.samples.empty(), "fit: empty training set");
    auto& params = model.params();
    std::optional<Adam<S>> own;
    if (!optimizer) {
        own.emplace(params);
        optimizer = &*own;
    }
    std::mt19937_64 rng(cfg.seed);
    // Reproduce the shuffles of skipped epochs so resumed runs see the same order.
    std::vector<std::size_t> order(train.bundles.samples.size());
    std::vector<std::vector<int>> shifts;
    if (cfg.shift_augment) shifts = translation_symmetries(train.graph.sensors);
    // DeepONet is tied to one sensor layout, so it only gets symmetric shifts.
    const DomainSpec& dom = train.graph.sensors.domain;
    const bool move_sensors = cfg.shift_augment && shifts.size() <= 1 && !std::is_same_v<Model, DeepONet<S>> &&
                              std::all_of(dom.periodic.begin(), dom.periodic.end(), [](bool p) { return p; });
    std::vector<SampleTransform> transforms;
    std::vector<SpatialGraph> moved;
    const auto t0 = std::chrono::steady_clock::now();
    FitResult res;
    std::vector<ad::Matrix<S>> best;
    for (std::size_t i = 0; i < params.size(); ++i) best.push_back(params.value(i));

    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        if (epoch < opts.start_epoch) continue;
        std::mt19937_64 shift_rng(derive_seed(cfg.seed, epoch));
        std::uniform_int_distribution<std::size_t> pick(0, shifts.empty() ? 0 : shifts.size() - 1);
        const double lr = cfg.lr_at(epoch);
        double loss_sum = 0.0;
        std::size_t n_batches = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t end = std::min(order.size(), start + cfg.batch_size);
            std::span<const std::size_t> idx(order.data() + start, end - start);
            transforms.clear();
            moved.clear();
            if (shifts.size() > 1) {
                for (std::size_t j = 0; j < idx.size(); ++j) transforms.push_back({&shifts[pick(shift_rng)], nullptr});
            } else if (move_sensors) {
                moved.reserve(idx.size());
                Eigen::RowVectorXd shift(dom.dim());
                for (std::size_t j = 0; j < idx.size(); ++j) {
                    for (int c = 0; c < dom.dim(); ++c)
                        shift[c] = std::uniform_real_distribution<double>(0.0, dom.extent(c))(shift_rng);
                    moved.push_back(translate_graph(train.graph, shift));
                    transforms.push_back({nullptr, &moved.back()});
                }
            }
            const Batch<S> batch = make_batch<S>(train, idx, transforms);
            params.zero_grad();
            ad::Tape<S> tape;
            const auto preds = model.predict_blocks(tape, batch.graphs, train.bundles.R, train.dt, true);
            Var loss = loss_total(tape, preds, batch.targets);
            const double lv = static_cast<double>(tape.value(loss)(0, 0));
            if (!std::isfinite(lv)) {
                std::ostringstream msg;
                msg << "non-finite loss at epoch " << epoch + 1 << ", batch " << n_batches + 1
                    << ", parameter norm " << params.norm();
                throw NumericFailure(msg.str());
            }
            tape.backward(loss);
            clip_grad_norm(params, cfg.grad_clip);
            optimizer->step(params, lr);
            loss_sum += lv;
            ++n_batches;
        }
        EpochRecord rec;
        rec.epoch = epoch + 1;
        rec.train_loss = loss_sum / static_cast<double>(n_batches);
        rec.lr = lr;
        if (val && !val->bundles.samples.empty()) rec.val_rel_l2 = validation_rel_l2<S>(model, *val);
        rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const double score = std::isnan(rec.val_rel_l2) ? rec.train_loss : rec.val_rel_l2;
        if (score < res.best_val) {
            res.best_val = score;
            res.best_epoch = rec.epoch;
            for (std::size_t i = 0; i < params.size(); ++i) best[i] = params.value(i);
            if (opts.on_best) opts.on_best(rec.epoch);
        }
        res.history.push_back(rec);
        if (opts.on_epoch) opts.on_epoch(rec);
        if (cfg.max_seconds > 0.0 && rec.seconds >= cfg.max_seconds) {
            res.stopped_on_budget = true;
            break;
        }
    }
    if (res.best_epoch > 0) {
        for (std::size_t i = 0; i < params.size(); ++i) params.value(i) = best[i];
    }
    res.steps = optimizer->steps();
    return res;
}

// ---------------------------------------------------------------------------
// Checkpoints: parameters (+ optional Adam state) and configs in one tensor file.

struct CheckpointInfo {
    std::string kind;  // "graph_deeponet" or "deeponet"
    nlohmann::json model_config;
    std::size_t epoch = 0;
    std::uint64_t step = 0;
    std::uint64_t seed = 0;
    Precision precision = Precision::float32;
    std::map<std::string, std::string> extra;
};

namespace detail {
template <class S>
std::vector<S> flat(const ad::Matrix<S>& m) {
    return std::vector<S>(m.data(), m.data() + m.size());
}
template <class S>
void fill(ad::Matrix<S>& m, const io::Tensor& t, const std::string& name) {
    const auto v = t.as<S>();
    if (t.shape.size() != 2 || static_cast<Eigen::Index>(t.shape[0]) != m.rows() ||
        static_cast<Eigen::Index>(t.shape[1]) != m.cols()) {
        throw SchemaViolation(name, "parameter shape does not match the model");
    }
    std::copy(v.begin(), v.end(), m.data());
}
}  // namespace detail

template <class S>
void save_checkpoint(const std::string& path, const nn::ParameterStore<S>& params, const CheckpointInfo& info,
                     Adam<S>* optimizer = nullptr, const RowMatrixXd* sensor_layout = nullptr) {
    io::TensorFile f;
    for (std::size_t i = 0; i < params.size(); ++i) {
        const auto& v = params.value(i);
        f.tensors["param." + params.name(i)] =
            io::Tensor::from(detail::flat(v), {static_cast<std::size_t>(v.rows()), static_cast<std::size_t>(v.cols())});
        if (optimizer) {
            const auto& m = optimizer->first_moments()[i];
            const auto& s = optimizer->second_moments()[i];
            f.tensors["adam_m." + params.name(i)] =
                io::Tensor::from(detail::flat(m), {static_cast<std::size_t>(m.rows()), static_cast<std::size_t>(m.cols())});
            f.tensors["adam_v." + params.name(i)] =
                io::Tensor::from(detail::flat(s), {static_cast<std::size_t>(s.rows()), static_cast<std::size_t>(s.cols())});
        }
    }
    if (sensor_layout) {
        std::vector<double> x(sensor_layout->data(), sensor_layout->data() + sensor_layout->size());
        f.tensors["sensor_layout"] = io::Tensor::from(
            x, {static_cast<std::size_t>(sensor_layout->rows()), static_cast<std::size_t>(sensor_layout->cols())});
    }
    f.metadata = info.extra;
    f.metadata["kind"] = info.kind;
    f.metadata["model_config"] = info.model_config.dump();
    f.metadata["epoch"] = std::to_string(info.epoch);
    f.metadata["step"] = std::to_string(optimizer ? optimizer->steps() : info.step);
    f.metadata["seed"] = std::to_string(info.seed);
    f.metadata["precision"] = to_string(info.precision);
    f.metadata["has_optimizer"] = optimizer ? "1" : "0";
    io::write_tensor_file(path, f);
}

inline CheckpointInfo read_checkpoint_info(const io::TensorFile& f) {
    CheckpointInfo info;
    info.kind = f.attr("kind");
    info.model_config = nlohmann::json::parse(f.attr("model_config"));
    info.epoch = std::stoull(f.attr("epoch"));
    info.step = std::stoull(f.attr("step"));
    info.seed = std::stoull(f.attr("seed"));
    info.precision = parse_precision(f.attr("precision"));
    for (const auto& [k, v] : f.metadata) {
        if (k != "kind" && k != "model_config" && k != "epoch" && k != "step" && k != "seed" && k != "precision")
            info.extra[k] = v;
    }
    return info;
}

/// Copies stored parameters (and Adam state, when both exist) into place.
template <class S>
void restore_parameters(const io::TensorFile& f, nn::ParameterStore<S>& params, Adam<S>* optimizer = nullptr) {
    for (std::size_t i = 0; i < params.size(); ++i) {
        const std::string key = "param." + params.name(i);
        detail::fill(params.value(i), f.tensor(key), key);
    }
    if (optimizer && f.metadata.count("has_optimizer") && f.metadata.at("has_optimizer") == "1") {
        for (std::size_t i = 0; i < params.size(); ++i) {
            detail::fill(optimizer->first_moments()[i], f.tensor("adam_m." + params.name(i)), "adam_m");
            detail::fill(optimizer->second_moments()[i], f.tensor("adam_v." + params.name(i)), "adam_v");
        }
        optimizer->set_steps(std::stoull(f.attr("step")));
    }
}

template <class S>
void save_checkpoint(const std::string& path, GraphDeepONet<S>& model, std::size_t epoch, Adam<S>* optimizer = nullptr,
                     std::map<std::string, std::string> extra = {}) {
    CheckpointInfo info{"graph_deeponet", to_json(model.config()), epoch, 0, model.config().seed,
                        std::is_same_v<S, float> ? Precision::float32 : Precision::float64, std::move(extra)};
    save_checkpoint(path, model.params(), info, optimizer);
}

template <class S>
void save_checkpoint(const std::string& path, DeepONet<S>& model, std::size_t epoch, Adam<S>* optimizer = nullptr,
                     std::map<std::string, std::string> extra = {}) {
    CheckpointInfo info{"deeponet", to_json(model.config()), epoch, 0, model.config().seed,
                        std::is_same_v<S, float> ? Precision::float32 : Precision::float64, std::move(extra)};
    save_checkpoint(path, model.params(), info, optimizer, &model.sensor_layout());
}

template <class S>
GraphDeepONet<S> load_graph_deeponet(const std::string& path, CheckpointInfo* info_out = nullptr) {
    const io::TensorFile f = io::read_tensor_file(path);
    CheckpointInfo info = read_checkpoint_info(f);
    if (info.kind != "graph_deeponet") throw SchemaViolation("kind", "checkpoint holds a " + info.kind + " model");
    GraphDeepONet<S> model(model_config_from_json(info.model_config));
    restore_parameters(f, model.params());
    if (info_out) *info_out = std::move(info);
    return model;
}

template <class S>
DeepONet<S> load_deeponet(const std::string& path, CheckpointInfo* info_out = nullptr) {
    const io::TensorFile f = io::read_tensor_file(path);
    CheckpointInfo info = read_checkpoint_info(f);
    if (info.kind != "deeponet") throw SchemaViolation("kind", "checkpoint holds a " + info.kind + " model");
    const auto& t = f.tensor("sensor_layout");
    const auto x = t.as<double>();
    RowMatrixXd layout(static_cast<Eigen::Index>(t.shape.at(0)), static_cast<Eigen::Index>(t.shape.at(1)));
    std::copy(x.begin(), x.end(), layout.data());
    DeepONet<S> model(deeponet_config_from_json(info.model_config), std::move(layout));
    restore_parameters(f, model.params());
    if (info_out) *info_out = std::move(info);
    return model;
}

}  // namespace gdon
