#pragma once

// Error metric, rollout / extrapolation protocols and the transport
// counterexample.

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "gdon/data.hpp"
#include "gdon/error.hpp"
#include "gdon/geometry.hpp"
#include "gdon/io.hpp"
#include "gdon/model.hpp"

namespace gdon {

/// Per-frame ||pred - truth|| / ||truth||, averaged over frames (rows).
inline double relative_l2(const RowMatrixXd& pred, const RowMatrixXd& truth) {
    detail::require(pred.rows() == truth.rows() && pred.cols() == truth.cols(), "relative_l2: shape mismatch");
    detail::require(pred.rows() >= 1, "relative_l2: no frames");
    double acc = 0.0;
    for (Eigen::Index k = 0; k < truth.rows(); ++k) {
        const double denom = truth.row(k).norm();
        if (denom == 0.0) {
            throw UndefinedMetric(static_cast<std::size_t>(k),
                                  "relative_l2: reference frame " + std::to_string(k) + " has zero norm");
        }
        acc += (pred.row(k) - truth.row(k)).norm() / denom;
    }
    return acc / static_cast<double>(truth.rows());
}

struct EvalReport {
    std::string protocol;
    double rel_l2_mean = 0.0;
    std::vector<double> rel_l2_per_block;
    std::vector<double> rel_l2_per_traj;
    std::size_t n_traj = 0;
    std::string query_grid;
    std::uint64_t seed = 0;
    std::string metric = "per-frame relative L2, averaged over frames then trajectories";
    std::map<std::string, double> values;

    /// One `key=value` per line.
    std::string to_kv() const {
        std::ostringstream out;
        out << "protocol=" << protocol << '\n'
            << "rel_l2_mean=" << io::format_double(rel_l2_mean) << '\n'
            << "rel_l2_per_block=" << io::join_doubles(rel_l2_per_block) << '\n'
            << "n_traj=" << n_traj << '\n'
            << "query_grid=" << query_grid << '\n'
            << "seed=" << seed << '\n'
            << "metric=" << metric << '\n';
        for (const auto& [k, v] : values) out << k << '=' << io::format_double(v) << '\n';
        return out.str();
    }
};

/// Rollout of `model` from the first K frames of each trajectory of
/// `input_ds`, evaluated at `queries`. Returns per trajectory a [R*K, Q]
/// matrix of channel-0 values for target frames K .. K + R*K - 1.
template <class S, class Model>
std::vector<RowMatrixXd> rollout_predictions(Model& model, const TrajectoryDataset& input_ds, const RowMatrixXd& queries,
                                             std::size_t R, std::size_t batch_size = 16, int k_neighbors = 0) {
    const auto K = static_cast<std::size_t>(model.config().K);
    detail::require(input_ds.n_times >= K, "rollout: dataset shorter than one input bundle");
    const SpatialGraph graph = build_knn_graph(input_ds.sensors, k_neighbors);
    const std::size_t N = input_ds.n_nodes, C = input_ds.n_channels;
    std::vector<RowMatrixXd> out;
    out.reserve(input_ds.n_traj);
    for (std::size_t start = 0; start < input_ds.n_traj; start += batch_size) {
        const std::size_t end = std::min(input_ds.n_traj, start + batch_size);
        GraphBatch batch;
        for (std::size_t tr = start; tr < end; ++tr) {
            std::span<const float> frames(input_ds.u.data() + input_ds.index(tr, 0, 0), K * N * C);
            batch.add(graph, stack_frames(frames, K, N, C), &queries);
        }
        ad::Tape<S> tape;
        const auto blocks = model.predict_blocks(tape, batch, R, input_ds.dt, false);
        const Eigen::Index q = batch.num_queries();
        for (std::size_t j = 0; j < end - start; ++j) {
            const Eigen::Index off = batch.query_offsets[j];
            RowMatrixXd p(static_cast<Eigen::Index>(R * K), queries.rows());
            for (std::size_t r = 0; r < R; ++r) {
                const auto& v = tape.value(blocks[r]);
                for (std::size_t k = 0; k < K; ++k)
                    for (Eigen::Index i = 0; i < queries.rows(); ++i)
                        p(static_cast<Eigen::Index>(r * K + k), i) = static_cast<double>(v(static_cast<Eigen::Index>(k) * q + off + i, 0));
            }
            out.push_back(std::move(p));
        }
    }
    return out;
}

/// Truth frames [first, first + count) of trajectory tr, channel 0.
inline RowMatrixXd truth_frames(const TrajectoryDataset& ds, std::size_t tr, std::size_t first, std::size_t count) {
    detail::require(first + count <= ds.n_times, "truth_frames: frame range exceeds the dataset");
    RowMatrixXd m(static_cast<Eigen::Index>(count), static_cast<Eigen::Index>(ds.n_nodes));
    for (std::size_t f = 0; f < count; ++f)
        for (std::size_t n = 0; n < ds.n_nodes; ++n) m(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(n)) = ds.at(tr, first + f, n);
    return m;
}

inline std::string describe_queries(const TrajectoryDataset& truth_ds, const TrajectoryDataset& input_ds) {
    const bool same = truth_ds.sensors.positions.rows() == input_ds.sensors.positions.rows() &&
                      truth_ds.sensors.positions == input_ds.sensors.positions;
    return (same ? "sensors:" : "queries:") + std::to_string(truth_ds.n_nodes);
}

/// Rollout relative L2 against ground truth sampled at truth_ds.sensors.
/// input_ds and truth_ds hold the same trajectories and times; R = 0 uses
/// as many whole blocks as the data allows.
template <class S, class Model>
EvalReport evaluate_rollout(Model& model, const TrajectoryDataset& input_ds, const TrajectoryDataset& truth_ds,
                            std::size_t R = 0, std::vector<RowMatrixXd>* predictions = nullptr) {
    const auto K = static_cast<std::size_t>(model.config().K);
    detail::require(input_ds.n_traj == truth_ds.n_traj && input_ds.n_times == truth_ds.n_times,
                    "evaluate_rollout: input and truth datasets differ in trajectories or times");
    if (R == 0) R = (input_ds.n_times - K) / K;
    detail::require(R >= 1 && K + R * K <= truth_ds.n_times, "evaluate_rollout: not enough frames for the rollout");
    auto preds = rollout_predictions<S>(model, input_ds, truth_ds.sensors.positions, R);
    EvalReport rep;
    rep.protocol = "rollout";
    rep.n_traj = input_ds.n_traj;
    rep.query_grid = describe_queries(truth_ds, input_ds);
    rep.rel_l2_per_block.assign(R, 0.0);
    for (std::size_t tr = 0; tr < input_ds.n_traj; ++tr) {
        const RowMatrixXd truth = truth_frames(truth_ds, tr, K, R * K);
        rep.rel_l2_per_traj.push_back(relative_l2(preds[tr], truth));
        for (std::size_t r = 0; r < R; ++r) {
            const auto rows = static_cast<Eigen::Index>(r * K);
            rep.rel_l2_per_block[r] += relative_l2(preds[tr].middleRows(rows, static_cast<Eigen::Index>(K)),
                                                   truth.middleRows(rows, static_cast<Eigen::Index>(K)));
        }
    }
    for (auto& v : rep.rel_l2_per_block) v /= static_cast<double>(input_ds.n_traj);
    double sum = 0.0;
    for (double v : rep.rel_l2_per_traj) sum += v;
    rep.rel_l2_mean = sum / static_cast<double>(input_ds.n_traj);
    rep.values["R"] = static_cast<double>(R);
    rep.values["K"] = static_cast<double>(K);
    if (predictions) *predictions = std::move(preds);
    return rep;
}

/// Continues the rollout past t_train_end and reports the relative L2 on
/// predicted frames with t <= t_train_end and on t_train_end < t <= t_extra_end
/// separately. rel_l2_mean is the extrapolation-window value.
template <class S, class Model>
EvalReport extrapolation_eval(Model& model, const TrajectoryDataset& input_ds, const TrajectoryDataset& truth_ds,
                              double t_train_end, double t_extra_end, std::vector<RowMatrixXd>* predictions = nullptr) {
    const auto K = static_cast<std::size_t>(model.config().K);
    detail::require(t_extra_end > t_train_end, "extrapolation_eval: t_extra_end must exceed t_train_end");
    const double tol = 1e-9 * std::max(1.0, std::abs(t_extra_end));
    std::size_t usable = 0;
    while (usable < truth_ds.n_times && truth_ds.times[usable] <= t_extra_end + tol) ++usable;
    detail::require(usable >= 2 * K, "extrapolation_eval: not enough frames up to t_extra_end");
    const std::size_t R = (usable - K) / K;
    auto preds = rollout_predictions<S>(model, input_ds, truth_ds.sensors.positions, R);

    std::vector<Eigen::Index> in_rows, out_rows;
    for (std::size_t f = 0; f < R * K; ++f) {
        const double t = truth_ds.times[K + f];
        (t <= t_train_end + tol ? in_rows : out_rows).push_back(static_cast<Eigen::Index>(f));
    }
    detail::require(!out_rows.empty(), "extrapolation_eval: no predicted frame lies beyond t_train_end");
    auto pick = [](const RowMatrixXd& m, const std::vector<Eigen::Index>& rows) {
        RowMatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
        for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(rows[i]);
        return out;
    };
    EvalReport rep;
    rep.protocol = "extrapolation";
    rep.n_traj = input_ds.n_traj;
    rep.query_grid = describe_queries(truth_ds, input_ds);
    rep.rel_l2_per_block.assign(R, 0.0);
    double in_sum = 0.0, out_sum = 0.0;
    for (std::size_t tr = 0; tr < input_ds.n_traj; ++tr) {
        const RowMatrixXd truth = truth_frames(truth_ds, tr, K, R * K);
        if (!in_rows.empty()) in_sum += relative_l2(pick(preds[tr], in_rows), pick(truth, in_rows));
        const double e = relative_l2(pick(preds[tr], out_rows), pick(truth, out_rows));
        out_sum += e;
        rep.rel_l2_per_traj.push_back(e);
        for (std::size_t r = 0; r < R; ++r) {
            const auto rows = static_cast<Eigen::Index>(r * K);
            rep.rel_l2_per_block[r] += relative_l2(preds[tr].middleRows(rows, static_cast<Eigen::Index>(K)),
                                                   truth.middleRows(rows, static_cast<Eigen::Index>(K)));
        }
    }
    const auto n = static_cast<double>(input_ds.n_traj);
    for (auto& v : rep.rel_l2_per_block) v /= n;
    rep.rel_l2_mean = out_sum / n;
    rep.values["rel_l2_train_window"] = in_rows.empty() ? std::nan("") : in_sum / n;
    rep.values["rel_l2_extrapolation"] = out_sum / n;
    rep.values["frames_train_window"] = static_cast<double>(in_rows.size());
    rep.values["frames_extrapolation"] = static_cast<double>(out_rows.size());
    rep.values["t_train_end"] = t_train_end;
    rep.values["t_extra_end"] = t_extra_end;
    rep.values["R"] = static_cast<double>(R);
    if (predictions) *predictions = std::move(preds);
    return rep;
}

// ---------------------------------------------------------------------------
// Transport on the unit torus with v = e_1: f1 = 0 and a bump f2 equal to 1
// on A = [3/8, 5/8]^d and 0 outside [5/16, 11/16]^d (hence 0 on the
// boundary slices B). Sensors confined to (0, 1/8) x (3/8, 5/8)^{d-1}.

namespace detail {
inline double smooth_step(double s) {
    auto g = [](double v) { return v > 0.0 ? std::exp(-1.0 / v) : 0.0; };
    if (s <= 0.0) return 0.0;
    if (s >= 1.0) return 1.0;
    return g(s) / (g(s) + g(1.0 - s));
}
}  // namespace detail

/// C-infinity profile: 1 on [3/8, 5/8], 0 outside (5/16, 11/16).
inline double transport_bump_1d(double s) {
    s -= std::floor(s);
    const double lo = 5.0 / 16.0, a = 3.0 / 8.0, b = 5.0 / 8.0, hi = 11.0 / 16.0;
    if (s <= lo || s >= hi) return 0.0;
    if (s < a) return detail::smooth_step((s - lo) / (a - lo));
    if (s > b) return detail::smooth_step((hi - s) / (hi - b));
    return 1.0;
}

inline double transport_bump(const double* x, int d) {
    double v = 1.0;
    for (int c = 0; c < d; ++c) v *= transport_bump_1d(x[c]);
    return v;
}

/// Exact solution u(t, x) = f(x - t e_1) for f = f2 (bump) or f1 = 0.
inline double transport_solution(bool bump, double t, const double* x, int d) {
    if (!bump) return 0.0;
    std::vector<double> y(x, x + d);
    y[0] -= t;
    return transport_bump(y.data(), d);
}

inline SensorSet confined_transport_grid(int d, int per_axis) {
    detail::require(d >= 1 && per_axis >= 1, "transport grid: need d >= 1 and per_axis >= 1");
    const DomainSpec dom = DomainSpec::box(d, 0.0, 1.0, true);
    Eigen::Index total = 1;
    for (int c = 0; c < d; ++c) total *= per_axis;
    RowMatrixXd x(total, d);
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index rem = idx;
        for (int c = d - 1; c >= 0; --c) {
            const int i = static_cast<int>(rem % per_axis);
            rem /= per_axis;
            const double lo = c == 0 ? 0.0 : 3.0 / 8.0;
            const double width = c == 0 ? 1.0 / 8.0 : 1.0 / 4.0;
            x(idx, c) = lo + (i + 0.5) * width / per_axis;
        }
    }
    return SensorSet(std::move(x), dom);
}

struct TransportDemoReport {
    int dim = 0;
    std::size_t n_sensors = 0;
    double dt = 0.25;
    /// max |f1 - f2| over the sensors at the input time dt.
    double input_gap = 0.0;
    /// min |u2 - u1| over the sensors at the target time 2 dt.
    double target_gap = 0.0;
    /// Best constant-per-node predictor (c = 1/2): per-case MSE summed over
    /// the two cases, and the equal-probability average.
    double best_mse_sum = 0.0;
    double best_mse_weighted = 0.0;
    /// Smallest summed MSE found over a sweep of fixed-grid predictors.
    double sweep_min_mse_sum = 0.0;
    /// GraphDeepONet on the confined sensors: summed MSE over the two cases
    /// and whether its field is finite at every torus query.
    double model_mse_sum = 0.0;
    std::size_t n_queries = 0;
    bool model_finite_everywhere = false;
    bool model_outputs_identical = false;
    RowMatrixXd line_x;     // 1D slice x_2..x_d = 1/2 for figures
    RowMatrixXd line_true;  // rows: f1 truth, f2 truth at 2 dt
    RowMatrixXd line_model; // model prediction along the slice at 2 dt

    std::string to_kv() const {
        std::ostringstream out;
        out << "protocol=transport-demo\n"
            << "dim=" << dim << '\n'
            << "n_sensors=" << n_sensors << '\n'
            << "dt=" << io::format_double(dt) << '\n'
            << "input_gap=" << io::format_double(input_gap) << '\n'
            << "target_gap=" << io::format_double(target_gap) << '\n'
            << "best_mse_sum=" << io::format_double(best_mse_sum) << '\n'
            << "best_mse_weighted=" << io::format_double(best_mse_weighted) << '\n'
            << "sweep_min_mse_sum=" << io::format_double(sweep_min_mse_sum) << '\n'
            << "model_mse_sum=" << io::format_double(model_mse_sum) << '\n'
            << "n_queries=" << n_queries << '\n'
            << "model_finite_everywhere=" << (model_finite_everywhere ? 1 : 0) << '\n'
            << "model_outputs_identical=" << (model_outputs_identical ? 1 : 0) << '\n';
        return out.str();
    }
};

/// Runs the two-initial-condition construction on `sensors` (which must lie
/// in the confined region of the unit torus) with input time dt = 1/4 and
/// target time 2 dt. `model` is a single-frame GraphDeepONet on the unit
/// torus; its field is queried on a regular grid of `query_per_axis`^d points.
template <class S>
TransportDemoReport transport_counterexample_demo(const SensorSet& sensors, GraphDeepONet<S>& model,
                                                  int query_per_axis = 64) {
    const int d = sensors.dim();
    const double dt = 0.25;
    const auto N = static_cast<Eigen::Index>(sensors.size());
    detail::require(model.config().K == 1 && model.config().domain == sensors.domain,
                    "transport demo: model must take one frame on the sensors' torus");
    for (Eigen::Index i = 0; i < N; ++i) {
        bool inside = sensors.positions(i, 0) > 0.0 && sensors.positions(i, 0) < 0.125;
        for (int c = 1; c < d; ++c) inside = inside && sensors.positions(i, c) > 0.375 && sensors.positions(i, c) < 0.625;
        detail::require(inside, "transport demo: sensors must lie in (0,1/8) x (3/8,5/8)^{d-1}");
    }
    TransportDemoReport rep;
    rep.dim = d;
    rep.n_sensors = sensors.size();
    rep.dt = dt;

    RowMatrixXd in(N, 2), target(N, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double* x = sensors.positions.row(i).data();
        for (int c = 0; c < 2; ++c) {
            in(i, c) = transport_solution(c == 1, dt, x, d);
            target(i, c) = transport_solution(c == 1, 2 * dt, x, d);
        }
    }
    rep.input_gap = (in.col(0) - in.col(1)).cwiseAbs().maxCoeff();
    rep.target_gap = (target.col(0) - target.col(1)).cwiseAbs().minCoeff();

    // Identical inputs force one prediction vector c for both cases; the
    // summed MSE is mean((c - u1)^2) + mean((c - u2)^2), minimised at the mean.
    auto mse_sum = [&](const Eigen::VectorXd& c) {
        return (c - target.col(0)).squaredNorm() / static_cast<double>(N) +
               (c - target.col(1)).squaredNorm() / static_cast<double>(N);
    };
    const Eigen::VectorXd best = 0.5 * (target.col(0) + target.col(1));
    rep.best_mse_sum = mse_sum(best);
    rep.best_mse_weighted = 0.5 * rep.best_mse_sum;
    rep.sweep_min_mse_sum = std::numeric_limits<double>::infinity();
    for (int s = -20; s <= 40; ++s) rep.sweep_min_mse_sum = std::min(rep.sweep_min_mse_sum, mse_sum(Eigen::VectorXd::Constant(N, s / 20.0)));

    const SpatialGraph graph = build_knn_graph(sensors);
    std::vector<Eigen::VectorXd> at_sensors;
    const SensorSet queries = regular_grid(sensors.domain, query_per_axis);
    rep.n_queries = queries.size();
    rep.model_finite_everywhere = true;
    const int n_line = 256;
    rep.line_x.resize(n_line, d);
    for (int i = 0; i < n_line; ++i) {
        rep.line_x(i, 0) = (i + 0.5) / n_line;
        for (int c = 1; c < d; ++c) rep.line_x(i, c) = 0.5;
    }
    rep.line_true.resize(2, n_line);
    rep.line_model.resize(2, n_line);
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < n_line; ++i) rep.line_true(c, i) = transport_solution(c == 1, 2 * dt, rep.line_x.row(i).data(), d);
        // One rollout step from the frame at dt predicts the frame at 2 dt.
        const auto preds = model.forward(in.col(c), graph, 1, dt);
        const auto& second = preds[0];
        const auto vq = model.evaluate_field(second, queries.positions);
        rep.model_finite_everywhere = rep.model_finite_everywhere && vq.allFinite();
        at_sensors.push_back(model.evaluate_field(second, sensors.positions).row(0).transpose().template cast<double>());
        rep.line_model.row(c) = model.evaluate_field(second, rep.line_x).row(0).template cast<double>();
    }
    rep.model_outputs_identical = (at_sensors[0] - at_sensors[1]).cwiseAbs().maxCoeff() == 0.0;
    rep.model_mse_sum = (at_sensors[0] - target.col(0)).squaredNorm() / static_cast<double>(N) +
                        (at_sensors[1] - target.col(1)).squaredNorm() / static_cast<double>(N);
    return rep;
}

}  // namespace gdon
