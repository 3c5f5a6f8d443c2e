#pragma once

// GraphDeepONet: node encoder, message-passing processor with residual latent
// update, soft-attention coefficient decoder with feature-level gating,
// Fourier-featured trunk basis, and autoregressive rollout in latent space.
// Also the branch/trunk DeepONet baseline whose trunk takes (t, x).

#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdon/autodiff.hpp"
#include "gdon/data.hpp"
#include "gdon/error.hpp"
#include "gdon/geometry.hpp"
#include "gdon/nn.hpp"

namespace gdon {

using ad::Activation;
using ad::Var;
using nn::MlpSpec;

enum class TimeInput {
    absolute,        // offset of the target frame from the last input frame
    block_relative,  // offset within the current bundle only (1..K) * dt
};

struct ModelConfig {
    DomainSpec domain = DomainSpec::box(1, 0.0, 16.0, true);
    int channels = 1;
    int K = 25;
    int d_lat = 128;
    int p = 128;
    int M = 3;
    int n_fourier_modes = 16;
    MlpSpec encoder{128, 2};
    MlpSpec phi{128, 2};
    MlpSpec psi{128, 2};
    MlpSpec gate{128, 3};
    MlpSpec feature{128, 3};
    MlpSpec trunk{128, 3};
    Activation activation = Activation::gelu;
    /// Feed cos/sin features of x_i to the encoder and gate (raw x_i if false).
    bool embed_positions = true;
    TimeInput time_input = TimeInput::absolute;
    std::uint64_t seed = 0;

    void validate() const {
        domain.validate();
        for (const MlpSpec* s : {&encoder, &phi, &psi, &gate, &feature, &trunk}) {
            detail::require(s->width >= 1 && s->depth >= 1, "model: MLP widths/depths must be >= 1");
        }
        detail::require(channels >= 1 && K >= 1 && d_lat >= 1 && p >= 1 && M >= 1,
                        "model: channels, K, d_lat, p, M must be >= 1");
        detail::require(n_fourier_modes >= 0, "model: n_fourier_modes must be >= 0");
    }
};

inline nlohmann::json mlp_to_json(const MlpSpec& s) { return {{"width", s.width}, {"depth", s.depth}}; }
inline MlpSpec mlp_from_json(const nlohmann::json& j) { return {j.at("width").get<int>(), j.at("depth").get<int>()}; }

inline nlohmann::json domain_to_json(const DomainSpec& d) {
    return {{"lower", d.lower}, {"upper", d.upper}, {"periodic", d.periodic}};
}
inline DomainSpec domain_from_json(const nlohmann::json& j) {
    return DomainSpec(j.at("lower").get<std::vector<double>>(), j.at("upper").get<std::vector<double>>(),
                      j.at("periodic").get<std::vector<bool>>());
}

inline nlohmann::json to_json(const ModelConfig& c) {
    return {{"domain", domain_to_json(c.domain)},
            {"channels", c.channels},
            {"K", c.K},
            {"d_lat", c.d_lat},
            {"p", c.p},
            {"M", c.M},
            {"n_fourier_modes", c.n_fourier_modes},
            {"encoder", mlp_to_json(c.encoder)},
            {"phi", mlp_to_json(c.phi)},
            {"psi", mlp_to_json(c.psi)},
            {"gate", mlp_to_json(c.gate)},
            {"feature", mlp_to_json(c.feature)},
            {"trunk", mlp_to_json(c.trunk)},
            {"activation", ad::to_string(c.activation)},
            {"embed_positions", c.embed_positions},
            {"time_input", c.time_input == TimeInput::absolute ? "absolute" : "block_relative"},
            {"seed", c.seed}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.domain = domain_from_json(j.at("domain"));
    c.channels = j.at("channels").get<int>();
    c.K = j.at("K").get<int>();
    c.d_lat = j.at("d_lat").get<int>();
    c.p = j.at("p").get<int>();
    c.M = j.at("M").get<int>();
    c.n_fourier_modes = j.at("n_fourier_modes").get<int>();
    c.encoder = mlp_from_json(j.at("encoder"));
    c.phi = mlp_from_json(j.at("phi"));
    c.psi = mlp_from_json(j.at("psi"));
    c.gate = mlp_from_json(j.at("gate"));
    c.feature = mlp_from_json(j.at("feature"));
    c.trunk = mlp_from_json(j.at("trunk"));
    c.activation = ad::parse_activation(j.at("activation").get<std::string>());
    c.embed_positions = j.at("embed_positions").get<bool>();
    c.time_input = j.at("time_input").get<std::string>() == "absolute" ? TimeInput::absolute : TimeInput::block_relative;
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

// ---------------------------------------------------------------------------
// Position features

/// (1, cos(2 pi k x / L), sin(2 pi k x / L) for k = 1..n) on periodic axes,
/// the raw coordinate on non-periodic axes, concatenated over axes.
inline int fourier_feature_dim(const DomainSpec& dom, int n_modes) {
    int f = 1;
    for (int c = 0; c < dom.dim(); ++c) f += dom.periodic[c] ? 2 * n_modes : 1;
    return f;
}

template <class S>
ad::Matrix<S> fourier_features(const RowMatrixXd& x, const DomainSpec& dom, int n_modes) {
    ad::Matrix<S> out(x.rows(), fourier_feature_dim(dom, n_modes));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        int col = 0;
        out(i, col++) = S(1);
        for (int c = 0; c < dom.dim(); ++c) {
            if (dom.periodic[c]) {
                const double w = 2.0 * std::numbers::pi / dom.extent(c);
                for (int k = 1; k <= n_modes; ++k) {
                    const double ang = w * k * (x(i, c) - dom.lower[c]);
                    out(i, col++) = static_cast<S>(std::cos(ang));
                    out(i, col++) = static_cast<S>(std::sin(ang));
                }
            } else {
                out(i, col++) = static_cast<S>(x(i, c));
            }
        }
    }
    return out;
}

template <class S>
ad::Matrix<S> raw_positions(const RowMatrixXd& x) {
    return x.template cast<S>();
}

// ---------------------------------------------------------------------------
// Batches of graphs

/// Several graphs stacked into one block-diagonal graph. Node rows of graph
/// b occupy [node_offsets[b], node_offsets[b+1]); queries likewise.
struct GraphBatch {
    std::vector<Eigen::Index> node_offsets{0};
    RowMatrixXd positions;
    std::vector<int> receiver;
    std::vector<int> sender;
    RowMatrixXd rel_pos;
    RowMatrixXd node_inputs;  // [sum N, K*C]: column k*C + c holds frame k, channel c
    std::vector<Eigen::Index> query_offsets{0};
    RowMatrixXd queries;

    std::size_t num_graphs() const { return node_offsets.size() - 1; }
    Eigen::Index num_nodes() const { return node_offsets.back(); }
    Eigen::Index num_queries() const { return query_offsets.back(); }

    /// Appends a graph with node inputs [N, K*C]; queries default to the sensors.
    void add(const SpatialGraph& g, const RowMatrixXd& inputs, const RowMatrixXd* query_points = nullptr) {
        const Eigen::Index n = static_cast<Eigen::Index>(g.num_nodes());
        detail::require(inputs.rows() == n, "GraphBatch: input rows differ from node count");
        detail::require(node_inputs.size() == 0 || node_inputs.cols() == inputs.cols(),
                        "GraphBatch: input widths differ between graphs");
        const Eigen::Index base = num_nodes();
        append_rows(positions, g.sensors.positions);
        append_rows(node_inputs, inputs);
        append_rows(rel_pos, g.rel_pos);
        for (std::size_t e = 0; e < g.num_edges(); ++e) {
            receiver.push_back(static_cast<int>(base + g.receiver[e]));
            sender.push_back(static_cast<int>(base + g.sender[e]));
        }
        node_offsets.push_back(base + n);
        const RowMatrixXd& q = query_points ? *query_points : g.sensors.positions;
        append_rows(queries, q);
        query_offsets.push_back(num_queries() + q.rows());
    }

private:
    static void append_rows(RowMatrixXd& dst, const RowMatrixXd& src) {
        if (src.rows() == 0) {
            if (dst.size() == 0) dst.resize(0, src.cols());
            return;
        }
        if (dst.rows() == 0) {
            dst = src;
            return;
        }
        RowMatrixXd out(dst.rows() + src.rows(), dst.cols());
        out << dst, src;
        dst = std::move(out);
    }
};

/// Per-node stacked input frames [N, K*C] from a [K, N, C] block.
inline RowMatrixXd stack_frames(std::span<const float> frames, std::size_t K, std::size_t N, std::size_t C) {
    detail::require(frames.size() == K * N * C, "stack_frames: size mismatch");
    RowMatrixXd out(static_cast<Eigen::Index>(N), static_cast<Eigen::Index>(K * C));
    for (std::size_t k = 0; k < K; ++k)
        for (std::size_t n = 0; n < N; ++n)
            for (std::size_t c = 0; c < C; ++c) out(n, k * C + c) = frames[(k * N + n) * C + c];
    return out;
}

/// Time inputs for rollout block r (0-based): one per bundled target frame.
inline std::vector<double> block_times(TimeInput mode, std::size_t block, std::size_t K, double dt) {
    std::vector<double> t(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double steps = mode == TimeInput::absolute ? static_cast<double>(block * K + k + 1)
                                                         : static_cast<double>(k + 1);
        t[k] = steps * dt;
    }
    return t;
}

// ---------------------------------------------------------------------------

template <class S>
class GraphDeepONet;

/// Per-node latent vectors f^(k) on one graph.
template <class S>
struct LatentState {
    ad::Matrix<S> f;
    const SpatialGraph* graph = nullptr;
    int step_index = 0;
};

/// Coefficients nu (one row per predicted time, C*p columns) together with
/// the trunk that turns them into a field on the domain.
template <class S>
struct FieldPrediction {
    ad::Matrix<S> coeffs;
    std::vector<double> times;
    const GraphDeepONet<S>* model = nullptr;
    DomainSpec domain;
};

namespace detail {
struct CallCounter {
    std::atomic<std::size_t> n{0};
    CallCounter() = default;
    CallCounter(const CallCounter& o) : n(o.n.load()) {}
    CallCounter& operator=(const CallCounter& o) {
        n = o.n.load();
        return *this;
    }
};
}  // namespace detail

template <class S>
class GraphDeepONet {
public:
    using Mat = ad::Matrix<S>;
    using Tape = ad::Tape<S>;

    explicit GraphDeepONet(ModelConfig cfg) : cfg_(std::move(cfg)) {
        cfg_.validate();
        std::mt19937_64 rng(cfg_.seed);
        const int d = cfg_.domain.dim();
        const int emb = position_dim();
        const Activation act = cfg_.activation;
        encoder_ = nn::Mlp<S>(params_, "encoder", cfg_.K * cfg_.channels + emb, cfg_.d_lat, cfg_.encoder, act, rng);
        for (int m = 0; m < cfg_.M; ++m) {
            const std::string sm = std::to_string(m);
            phi_.emplace_back(params_, "phi" + sm, 2 * cfg_.d_lat + d, cfg_.d_lat, cfg_.phi, act, rng);
            psi_.emplace_back(params_, "psi" + sm, 2 * cfg_.d_lat, cfg_.d_lat, cfg_.psi, act, rng,
                              /*zero_last=*/m + 1 == cfg_.M);
        }
        gate_ = nn::Mlp<S>(params_, "gate", emb + cfg_.d_lat, cfg_.channels * cfg_.p, cfg_.gate, act, rng);
        feature_ = nn::Mlp<S>(params_, "feature", 1 + cfg_.d_lat, cfg_.channels * cfg_.p, cfg_.feature, act, rng);
        trunk_ = nn::Mlp<S>(params_, "trunk", fourier_feature_dim(cfg_.domain, cfg_.n_fourier_modes), cfg_.p,
                            cfg_.trunk, act, rng);
    }

    const ModelConfig& config() const { return cfg_; }
    nn::ParameterStore<S>& params() { return params_; }
    const nn::ParameterStore<S>& params() const { return params_; }
    std::size_t encode_calls() const { return encode_calls_.n.load(); }

    int position_dim() const {
        return cfg_.embed_positions ? fourier_feature_dim(cfg_.domain, cfg_.n_fourier_modes) : cfg_.domain.dim();
    }

    Mat position_embedding(const RowMatrixXd& x) const {
        return cfg_.embed_positions ? fourier_features<S>(x, cfg_.domain, cfg_.n_fourier_modes) : raw_positions<S>(x);
    }

    /// Makes h^M identically zero so `process` is the identity.
    void zero_processor_output() { psi_.back().zero_output(params_); }

    // ---- tape-level building blocks ---------------------------------------

    /// f^0 = encoder(u_i^{0:K-1}, x_i) for every node of the batch.
    Var encode(Tape& tape, const GraphBatch& batch, bool track_grad) {
        ++encode_calls_.n;
        detail::require(batch.node_inputs.cols() == cfg_.K * cfg_.channels, "encode: inputs must have K*C columns");
        detail::require(batch.positions.cols() == cfg_.domain.dim(), "encode: position dimension mismatch");
        Var in = tape.constant(concat(batch.node_inputs.template cast<S>(), position_embedding(batch.positions)));
        return encoder_(tape, params_, in, track_grad);
    }

    /// One step of message passing with the step-m networks.
    Var message_passing_step(Tape& tape, const GraphBatch& batch, Var h, int m, bool track_grad) {
        detail::require(m >= 0 && m < cfg_.M, "message_passing_step: step index out of range");
        const auto& phi = phi_[m];
        const auto& psi = psi_[m];
        const Eigen::Index dl = cfg_.d_lat;
        Var rel = tape.constant(batch.rel_pos.template cast<S>());
        // phi([h_i, h_j, x_i - x_j]) with the first layer split by input block.
        Var to_recv = phi.first_layer_block(tape, params_, h, 0, track_grad);
        Var to_send = phi.first_layer_block(tape, params_, h, dl, track_grad);
        Var pre = tape.add(tape.gather_rows(to_recv, batch.receiver), tape.gather_rows(to_send, batch.sender));
        pre = tape.add(pre, phi.first_layer_block(tape, params_, rel, 2 * dl, track_grad));
        Var msg = phi.tail(tape, params_, phi.first_bias(tape, params_, pre, track_grad), track_grad);
        Var agg = tape.scatter_add_rows(msg, batch.receiver, tape.value(h).rows());
        Var upd = tape.add(psi.first_layer_block(tape, params_, h, 0, track_grad),
                           psi.first_layer_block(tape, params_, agg, dl, track_grad));
        return psi.tail(tape, params_, psi.first_bias(tape, params_, upd, track_grad), track_grad);
    }

    /// f^(k+1) = f^(k) + h^M with h^0 = f^(k).
    Var process(Tape& tape, const GraphBatch& batch, Var f, bool track_grad) {
        Var h = f;
        for (int m = 0; m < cfg_.M; ++m) h = message_passing_step(tape, batch, h, m, track_grad);
        Var out = tape.add(f, h);
        if (!tape.value(out).allFinite()) throw NumericFailure("process: non-finite latent state");
        return out;
    }

    /// Per-graph, per-channel softmax of gate(x_i, f_i) / sqrt(d_lat).
    Var attention(Tape& tape, const GraphBatch& batch, Var f, bool track_grad) {
        Var in = tape.concat_cols({tape.constant(position_embedding(batch.positions)), f});
        Var scores = tape.scale(gate_(tape, params_, in, track_grad), S(1) / std::sqrt(static_cast<S>(cfg_.d_lat)));
        return tape.segment_softmax(scores, batch.node_offsets);
    }

    /// nu for every time in `times` and every graph: row t*B + b, C*p columns.
    Var aggregate(Tape& tape, const GraphBatch& batch, Var f, std::span<const double> times, bool track_grad) {
        const Eigen::Index n = batch.num_nodes();
        const auto nt = static_cast<Eigen::Index>(times.size());
        Var att = attention(tape, batch, f, track_grad);
        // feature(t, f_i): the f-part of the first layer is shared by all t.
        Var f_part = feature_.first_layer_block(tape, params_, f, 1, track_grad);
        Mat tcol(n * nt, 1);
        for (Eigen::Index k = 0; k < nt; ++k) tcol.middleRows(k * n, n).setConstant(static_cast<S>(times[k]));
        Var t_part = feature_.first_layer_block(tape, params_, tape.constant(std::move(tcol)), 0, track_grad);
        Var pre = feature_.first_bias(tape, params_, tape.add(tape.tile_rows(f_part, nt), t_part), track_grad);
        Var feat = feature_.tail(tape, params_, pre, track_grad);
        Var weighted = tape.mul(tape.tile_rows(att, nt), feat);
        std::vector<Eigen::Index> seg;
        seg.reserve(static_cast<std::size_t>(nt) * batch.num_graphs() + 1);
        for (Eigen::Index k = 0; k < nt; ++k)
            for (std::size_t b = 0; b < batch.num_graphs(); ++b) seg.push_back(k * n + batch.node_offsets[b]);
        seg.push_back(nt * n);
        return tape.segment_sum(weighted, std::move(seg));
    }

    /// tau(x): [Q, p].
    Var trunk(Tape& tape, const RowMatrixXd& x, bool track_grad) {
        detail::require(x.cols() == cfg_.domain.dim(), "trunk: query dimension mismatch");
        Var in = tape.constant(fourier_features<S>(x, cfg_.domain, cfg_.n_fourier_modes));
        return trunk_(tape, params_, in, track_grad);
    }

    /// Field values at the batch queries for n_times predicted frames:
    /// rows t*Q + q, one column per channel.
    Var decode(Tape& tape, const GraphBatch& batch, Var nu, Var basis, std::size_t n_times) {
        const Eigen::Index q = batch.num_queries();
        const auto B = static_cast<Eigen::Index>(batch.num_graphs());
        std::vector<int> owner(static_cast<std::size_t>(q) * n_times);
        for (std::size_t t = 0; t < n_times; ++t)
            for (Eigen::Index b = 0; b < B; ++b)
                for (Eigen::Index i = batch.query_offsets[b]; i < batch.query_offsets[b + 1]; ++i)
                    owner[t * q + i] = static_cast<int>(static_cast<Eigen::Index>(t) * B + b);
        Var rows = tape.gather_rows(nu, std::move(owner));
        Var tiled = tape.tile_rows(basis, static_cast<Eigen::Index>(n_times));
        if (cfg_.channels == 1) return tape.rowwise_dot(tiled, rows);
        std::vector<Var> outs;
        for (int c = 0; c < cfg_.channels; ++c) {
            outs.push_back(tape.rowwise_dot(tiled, tape.slice_cols(rows, c * cfg_.p, cfg_.p)));
        }
        return tape.concat_cols(outs);
    }

    /// Encode once, then R x (process, aggregate, decode). Returns one
    /// prediction block per rollout step, each [K*Q, C].
    std::vector<Var> predict_blocks(Tape& tape, const GraphBatch& batch, std::size_t R, double dt, bool track_grad) {
        detail::require(R >= 1, "forward: need at least one rollout block");
        Var f = encode(tape, batch, track_grad);
        Var basis = trunk(tape, batch.queries, track_grad);
        std::vector<Var> out;
        for (std::size_t r = 0; r < R; ++r) {
            try {
                f = process(tape, batch, f, track_grad);
            } catch (const NumericFailure& e) {
                throw NumericFailure("rollout block " + std::to_string(r + 1) + ": " + e.what());
            }
            const auto times = block_times(cfg_.time_input, r, static_cast<std::size_t>(cfg_.K), dt);
            Var nu = aggregate(tape, batch, f, times, track_grad);
            out.push_back(decode(tape, batch, nu, basis, times.size()));
        }
        return out;
    }

    // ---- single-graph API -------------------------------------------------

    LatentState<S> encode(const RowMatrixXd& u_bundle, const SpatialGraph& graph) {
        Tape tape;
        Var f = encode(tape, single(graph, u_bundle), false);
        return {tape.value(f), &graph, 0};
    }

    Mat message_passing_step(const Mat& h, const SpatialGraph& graph, int m) {
        check_latent(h, graph);
        Tape tape;
        Var out = message_passing_step(tape, single(graph), tape.constant(h), m, false);
        return tape.value(out);
    }

    LatentState<S> process(const LatentState<S>& latent) {
        check_latent(latent.f, *latent.graph);
        Tape tape;
        Var out = process(tape, single(*latent.graph), tape.constant(latent.f), false);
        return {tape.value(out), latent.graph, latent.step_index + 1};
    }

    /// Attention weights [N, C*p]; every column sums to one.
    Mat attention_scores(const LatentState<S>& latent) {
        Tape tape;
        return tape.value(attention(tape, single(*latent.graph), tape.constant(latent.f), false));
    }

    /// nu at time input t: [C*p].
    Eigen::Matrix<S, 1, Eigen::Dynamic> aggregate(const LatentState<S>& latent, double t) {
        detail::require(t > 0.0, "aggregate: time input must be positive");
        Tape tape;
        const double ts[1] = {t};
        Var nu = aggregate(tape, single(*latent.graph), tape.constant(latent.f), ts, false);
        return tape.value(nu).row(0);
    }

    Mat trunk_basis(const RowMatrixXd& x) {
        Tape tape;
        return tape.value(trunk(tape, x, false));
    }

    /// Rollout predictions: R field predictions of K frames each, sampled
    /// with time spacing dt.
    std::vector<FieldPrediction<S>> forward(const RowMatrixXd& u_bundle, const SpatialGraph& graph, std::size_t R,
                                            double dt) {
        detail::require(R >= 1, "forward: need at least one rollout block");
        Tape tape;
        const GraphBatch batch = single(graph, u_bundle);
        Var f = encode(tape, batch, false);
        std::vector<FieldPrediction<S>> out;
        for (std::size_t r = 0; r < R; ++r) {
            try {
                f = process(tape, batch, f, false);
            } catch (const NumericFailure& e) {
                throw NumericFailure("rollout block " + std::to_string(r + 1) + ": " + e.what());
            }
            const auto times = block_times(cfg_.time_input, r, static_cast<std::size_t>(cfg_.K), dt);
            Var nu = aggregate(tape, batch, f, times, false);
            std::vector<double> abs_times(times.size());
            for (std::size_t k = 0; k < times.size(); ++k) abs_times[k] = static_cast<double>(r * cfg_.K + k + 1) * dt;
            out.push_back(FieldPrediction<S>{tape.value(nu), abs_times, this, cfg_.domain});
        }
        return out;
    }

    /// Field values [n_times, Q] of channel c at arbitrary query points.
    Mat evaluate_field(const FieldPrediction<S>& pred, const RowMatrixXd& queries, int channel = 0) {
        detail::require(channel >= 0 && channel < cfg_.channels, "evaluate_field: channel out of range");
        const Mat basis = trunk_basis(queries);
        return pred.coeffs.middleCols(channel * cfg_.p, cfg_.p) * basis.transpose();
    }

private:
    static Mat concat(const Mat& a, const Mat& b) {
        Mat out(a.rows(), a.cols() + b.cols());
        out << a, b;
        return out;
    }

    GraphBatch single(const SpatialGraph& graph, const RowMatrixXd& inputs) const {
        GraphBatch b;
        b.add(graph, inputs);
        return b;
    }
    GraphBatch single(const SpatialGraph& graph) const {
        return single(graph, RowMatrixXd::Zero(static_cast<Eigen::Index>(graph.num_nodes()), cfg_.K * cfg_.channels));
    }

    void check_latent(const Mat& f, const SpatialGraph& g) const {
        detail::require(f.rows() == static_cast<Eigen::Index>(g.num_nodes()) && f.cols() == cfg_.d_lat,
                        "latent state shape does not match graph/d_lat");
    }

    ModelConfig cfg_;
    nn::ParameterStore<S> params_;
    nn::Mlp<S> encoder_;
    std::vector<nn::Mlp<S>> phi_;
    std::vector<nn::Mlp<S>> psi_;
    nn::Mlp<S> gate_;
    nn::Mlp<S> feature_;
    nn::Mlp<S> trunk_;
    detail::CallCounter encode_calls_;
};

/// Module-level convenience mirroring the member function.
template <class S>
ad::Matrix<S> evaluate_field(GraphDeepONet<S>& model, const FieldPrediction<S>& pred, const RowMatrixXd& queries) {
    return model.evaluate_field(pred, queries);
}

// ---------------------------------------------------------------------------
// DeepONet baseline: branch on the flattened sensor values, trunk on (t, x).

struct DeepONetConfig {
    DomainSpec domain = DomainSpec::box(1, 0.0, 16.0, true);
    int channels = 1;
    int K = 25;
    int n_sensors = 50;
    int p = 128;
    MlpSpec branch{128, 3};
    MlpSpec trunk{128, 3};
    Activation activation = Activation::gelu;
    std::uint64_t seed = 0;
};

inline nlohmann::json to_json(const DeepONetConfig& c) {
    return {{"domain", domain_to_json(c.domain)}, {"channels", c.channels},   {"K", c.K},
            {"n_sensors", c.n_sensors},          {"p", c.p},                 {"branch", mlp_to_json(c.branch)},
            {"trunk", mlp_to_json(c.trunk)},     {"activation", ad::to_string(c.activation)},
            {"seed", c.seed}};
}

inline DeepONetConfig deeponet_config_from_json(const nlohmann::json& j) {
    DeepONetConfig c;
    c.domain = domain_from_json(j.at("domain"));
    c.channels = j.at("channels").get<int>();
    c.K = j.at("K").get<int>();
    c.n_sensors = j.at("n_sensors").get<int>();
    c.p = j.at("p").get<int>();
    c.branch = mlp_from_json(j.at("branch"));
    c.trunk = mlp_from_json(j.at("trunk"));
    c.activation = ad::parse_activation(j.at("activation").get<std::string>());
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

template <class S>
class DeepONet {
public:
    using Mat = ad::Matrix<S>;
    using Tape = ad::Tape<S>;

    DeepONet(DeepONetConfig cfg, RowMatrixXd sensor_layout) : cfg_(std::move(cfg)), layout_(std::move(sensor_layout)) {
        cfg_.domain.validate();
        detail::require(layout_.rows() == cfg_.n_sensors && layout_.cols() == cfg_.domain.dim(),
                        "DeepONet: sensor layout does not match n_sensors/dimension");
        std::mt19937_64 rng(cfg_.seed);
        branch_ = nn::Mlp<S>(params_, "branch", cfg_.n_sensors * cfg_.K * cfg_.channels, cfg_.channels * cfg_.p,
                             cfg_.branch, cfg_.activation, rng);
        trunk_ = nn::Mlp<S>(params_, "trunk", 1 + cfg_.domain.dim(), cfg_.p, cfg_.trunk, cfg_.activation, rng);
    }

    const DeepONetConfig& config() const { return cfg_; }
    const RowMatrixXd& sensor_layout() const { return layout_; }
    nn::ParameterStore<S>& params() { return params_; }
    const nn::ParameterStore<S>& params() const { return params_; }
    int trunk_input_dim() const { return 1 + cfg_.domain.dim(); }

    void zero_branch_output() { branch_.zero_output(params_); }

    /// Same output layout as GraphDeepONet::predict_blocks; the time input of
    /// block r, frame k is (r K + k + 1) dt.
    std::vector<Var> predict_blocks(Tape& tape, const GraphBatch& batch, std::size_t R, double dt, bool track_grad) {
        const auto B = static_cast<Eigen::Index>(batch.num_graphs());
        const Eigen::Index N = cfg_.n_sensors;
        for (Eigen::Index b = 0; b < B; ++b) {
            if (batch.node_offsets[b + 1] - batch.node_offsets[b] != N ||
                (batch.positions.middleRows(batch.node_offsets[b], N).array() != layout_.array()).any()) {
                throw InvalidArgument("DeepONet: sensor layout differs from the training layout");
            }
        }
        // Branch input: node-major flattening of [N, K*C] per graph.
        Mat flat(B, N * cfg_.K * cfg_.channels);
        for (Eigen::Index b = 0; b < B; ++b) {
            const auto blk = batch.node_inputs.middleRows(batch.node_offsets[b], N);
            for (Eigen::Index i = 0; i < N; ++i) {
                for (Eigen::Index c = 0; c < blk.cols(); ++c) flat(b, i * blk.cols() + c) = static_cast<S>(blk(i, c));
            }
        }
        Var nu = branch_(tape, params_, tape.constant(std::move(flat)), track_grad);
        const Eigen::Index q = batch.num_queries();
        std::vector<int> owner(static_cast<std::size_t>(q) * cfg_.K);
        for (int k = 0; k < cfg_.K; ++k)
            for (Eigen::Index b = 0; b < B; ++b)
                for (Eigen::Index i = batch.query_offsets[b]; i < batch.query_offsets[b + 1]; ++i)
                    owner[static_cast<std::size_t>(k) * q + i] = static_cast<int>(b);
        Var rows = tape.gather_rows(nu, std::move(owner));
        std::vector<Var> out;
        for (std::size_t r = 0; r < R; ++r) {
            Mat tx(q * cfg_.K, trunk_input_dim());
            for (int k = 0; k < cfg_.K; ++k) {
                const double t = static_cast<double>(r * cfg_.K + k + 1) * dt;
                for (Eigen::Index i = 0; i < q; ++i) {
                    tx(k * q + i, 0) = static_cast<S>(t);
                    for (int c = 0; c < cfg_.domain.dim(); ++c) tx(k * q + i, 1 + c) = static_cast<S>(batch.queries(i, c));
                }
            }
            Var basis = trunk_(tape, params_, tape.constant(std::move(tx)), track_grad);
            if (cfg_.channels == 1) {
                out.push_back(tape.rowwise_dot(basis, rows));
            } else {
                std::vector<Var> chans;
                for (int c = 0; c < cfg_.channels; ++c)
                    chans.push_back(tape.rowwise_dot(basis, tape.slice_cols(rows, c * cfg_.p, cfg_.p)));
                out.push_back(tape.concat_cols(chans));
            }
        }
        return out;
    }

    /// u(t, x) = sum_j nu_j[branch_input] tau_j(t, x) for channel 0.
    S forward(std::span<const S> branch_input, double t, std::span<const double> x) {
        detail::require(static_cast<int>(branch_input.size()) == cfg_.n_sensors * cfg_.K * cfg_.channels,
                        "DeepONet: branch input length differs from the training sensor layout");
        detail::require(static_cast<int>(x.size()) == cfg_.domain.dim(), "DeepONet: query dimension mismatch");
        Tape tape;
        Mat in(1, static_cast<Eigen::Index>(branch_input.size()));
        for (std::size_t i = 0; i < branch_input.size(); ++i) in(0, static_cast<Eigen::Index>(i)) = branch_input[i];
        Mat tx(1, trunk_input_dim());
        tx(0, 0) = static_cast<S>(t);
        for (std::size_t c = 0; c < x.size(); ++c) tx(0, static_cast<Eigen::Index>(c) + 1) = static_cast<S>(x[c]);
        Var nu = branch_(tape, params_, tape.constant(std::move(in)), false);
        Var tau = trunk_(tape, params_, tape.constant(std::move(tx)), false);
        return tape.value(nu).leftCols(cfg_.p).row(0).dot(tape.value(tau).row(0));
    }

private:
    DeepONetConfig cfg_;
    RowMatrixXd layout_;
    nn::ParameterStore<S> params_;
    nn::Mlp<S> branch_;
    nn::Mlp<S> trunk_;
};

}  // namespace gdon
