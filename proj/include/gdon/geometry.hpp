#pragma once

// Domains, sensor clouds, periodic distances and k-NN graphs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "gdon/error.hpp"

namespace gdon {

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Axis-aligned box with optional periodic wrap per axis.
struct DomainSpec {
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<bool> periodic;

    DomainSpec() = default;
    DomainSpec(std::vector<double> lo, std::vector<double> hi, std::vector<bool> per)
        : lower(std::move(lo)), upper(std::move(hi)), periodic(std::move(per)) {
        validate();
    }

    /// Same interval and periodicity on every axis.
    static DomainSpec box(int dim, double lo, double hi, bool is_periodic = true) {
        return DomainSpec(std::vector<double>(dim, lo), std::vector<double>(dim, hi),
                          std::vector<bool>(dim, is_periodic));
    }

    int dim() const { return static_cast<int>(lower.size()); }
    double extent(int axis) const { return upper[axis] - lower[axis]; }

    void validate() const {
        detail::require(!lower.empty(), "domain must have at least one axis");
        detail::require(lower.size() == upper.size() && lower.size() == periodic.size(),
                        "domain lower/upper/periodic lengths differ");
        for (std::size_t i = 0; i < lower.size(); ++i) {
            const double len = upper[i] - lower[i];
            detail::require(std::isfinite(len) && len > 0.0,
                            "domain axis " + std::to_string(i) + " has non-positive extent");
        }
    }

    bool any_periodic() const {
        return std::any_of(periodic.begin(), periodic.end(), [](bool p) { return p; });
    }

    /// Maps a coordinate back into [lower, upper) on periodic axes.
    double wrap(int axis, double x) const {
        if (!periodic[axis]) return x;
        const double len = extent(axis);
        double r = std::fmod(x - lower[axis], len);
        if (r < 0) r += len;
        if (r >= len) r = 0.0;
        return lower[axis] + r;
    }

    bool operator==(const DomainSpec&) const = default;
};

/// Point cloud of sensor positions, one row per sensor.
struct SensorSet {
    RowMatrixXd positions;
    DomainSpec domain;

    SensorSet() = default;
    SensorSet(RowMatrixXd pos, DomainSpec dom) : positions(std::move(pos)), domain(std::move(dom)) {
        validate();
    }

    std::size_t size() const { return static_cast<std::size_t>(positions.rows()); }
    int dim() const { return domain.dim(); }

    void validate() const {
        domain.validate();
        detail::require(positions.cols() == domain.dim(), "sensor positions have wrong dimension");
        for (Eigen::Index i = 0; i < positions.rows(); ++i) {
            for (int c = 0; c < domain.dim(); ++c) {
                const double x = positions(i, c);
                const bool ok = domain.periodic[c] ? (x >= domain.lower[c] && x < domain.upper[c])
                                                   : (x >= domain.lower[c] && x <= domain.upper[c]);
                detail::require(ok, "sensor " + std::to_string(i) + " lies outside the domain");
            }
        }
        // Pairwise distinct: sort rows lexicographically and compare neighbours.
        std::vector<Eigen::Index> order(positions.rows());
        std::iota(order.begin(), order.end(), 0);
        auto less = [&](Eigen::Index a, Eigen::Index b) {
            for (int c = 0; c < positions.cols(); ++c) {
                if (positions(a, c) != positions(b, c)) return positions(a, c) < positions(b, c);
            }
            return false;
        };
        std::sort(order.begin(), order.end(), less);
        for (std::size_t i = 1; i < order.size(); ++i) {
            detail::require(less(order[i - 1], order[i]), "sensor positions are not pairwise distinct");
        }
    }
};

/// Displacement xi - xj; periodic components wrapped into [-L/2, L/2).
inline Eigen::VectorXd minimum_image_displacement(const Eigen::Ref<const Eigen::VectorXd>& xi,
                                                  const Eigen::Ref<const Eigen::VectorXd>& xj,
                                                  const DomainSpec& domain) {
    if (xi.size() != domain.dim() || xj.size() != domain.dim()) {
        throw InvalidArgument("minimum_image_displacement: dimension mismatch");
    }
    Eigen::VectorXd d(xi.size());
    for (int c = 0; c < domain.dim(); ++c) {
        double diff = xi[c] - xj[c];
        if (domain.periodic[c]) {
            const double len = domain.extent(c);
            diff -= len * std::floor(diff / len + 0.5);
            if (diff >= 0.5 * len) diff -= len;
            if (diff < -0.5 * len) diff += len;
        }
        d[c] = diff;
    }
    return d;
}

inline double minimum_image_distance_sq(const Eigen::Ref<const Eigen::VectorXd>& xi,
                                        const Eigen::Ref<const Eigen::VectorXd>& xj,
                                        const DomainSpec& domain) {
    return minimum_image_displacement(xi, xj, domain).squaredNorm();
}

/// Directed k-NN graph. Edge e = (receiver[e], sender[e]) carries the message
/// sender -> receiver; rel_pos row e is x_receiver - x_sender (minimum image).
struct SpatialGraph {
    SensorSet sensors;
    int k = 0;
    std::vector<int> receiver;
    std::vector<int> sender;
    RowMatrixXd rel_pos;

    std::size_t num_nodes() const { return sensors.size(); }
    std::size_t num_edges() const { return receiver.size(); }

    /// Neighbour list of node i in edge order.
    std::vector<int> neighbors(int i) const {
        std::vector<int> out;
        for (std::size_t e = 0; e < receiver.size(); ++e) {
            if (receiver[e] == i) out.push_back(sender[e]);
        }
        return out;
    }
};

inline int default_k(int dim) { return dim == 1 ? 6 : 8; }

namespace detail {
inline void fill_rel_pos(SpatialGraph& g) {
    const auto& pos = g.sensors.positions;
    g.rel_pos.resize(static_cast<Eigen::Index>(g.receiver.size()), pos.cols());
    for (std::size_t e = 0; e < g.receiver.size(); ++e) {
        g.rel_pos.row(e) = minimum_image_displacement(pos.row(g.receiver[e]).transpose(),
                                                      pos.row(g.sender[e]).transpose(),
                                                      g.sensors.domain)
                               .transpose();
    }
}
}  // namespace detail

/// Graph from explicit edge lists; rel_pos is computed here.
inline SpatialGraph make_graph(SensorSet sensors, std::vector<int> receiver, std::vector<int> sender,
                               int k = 0) {
    detail::require(receiver.size() == sender.size(), "edge lists differ in length");
    const int n = static_cast<int>(sensors.size());
    for (std::size_t e = 0; e < receiver.size(); ++e) {
        detail::require(receiver[e] >= 0 && receiver[e] < n && sender[e] >= 0 && sender[e] < n,
                        "edge index out of range");
    }
    SpatialGraph g{std::move(sensors), k, std::move(receiver), std::move(sender), {}};
    detail::fill_rel_pos(g);
    return g;
}

/// k nearest distinct neighbours per node under the minimum-image metric.
/// Ties go to the lower node index. k <= 0 selects the per-dimension default.
inline SpatialGraph build_knn_graph(const SensorSet& sensors, int k = 0) {
    if (k <= 0) k = default_k(sensors.dim());
    const int n = static_cast<int>(sensors.size());
    if (n <= k) {
        throw InvalidArgument("build_knn_graph: need more than k=" + std::to_string(k) + " sensors, got " +
                              std::to_string(n));
    }
    const auto& pos = sensors.positions;
    std::vector<int> receiver;
    std::vector<int> sender;
    receiver.reserve(static_cast<std::size_t>(n) * k);
    sender.reserve(static_cast<std::size_t>(n) * k);
    std::vector<std::pair<double, int>> cand(n - 1);
    for (int i = 0; i < n; ++i) {
        int c = 0;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            cand[c++] = {minimum_image_distance_sq(pos.row(i).transpose(), pos.row(j).transpose(),
                                                   sensors.domain),
                         j};
        }
        std::partial_sort(cand.begin(), cand.begin() + k, cand.end());
        for (int r = 0; r < k; ++r) {
            receiver.push_back(i);
            sender.push_back(cand[r].second);
        }
    }
    return make_graph(sensors, std::move(receiver), std::move(sender), k);
}

/// Regular grid with `per_axis[c]` points per axis. Periodic axes use cell
/// starts (upper excluded); non-periodic axes include both ends.
inline SensorSet regular_grid(const DomainSpec& domain, const std::vector<int>& per_axis) {
    detail::require(static_cast<int>(per_axis.size()) == domain.dim(), "grid counts must match dimension");
    Eigen::Index total = 1;
    for (int n : per_axis) {
        detail::require(n >= 1, "grid needs at least one point per axis");
        total *= n;
    }
    RowMatrixXd pos(total, domain.dim());
    for (Eigen::Index idx = 0; idx < total; ++idx) {
        Eigen::Index rem = idx;
        // Last axis varies fastest.
        for (int c = domain.dim() - 1; c >= 0; --c) {
            const int n = per_axis[c];
            const auto ic = rem % n;
            rem /= n;
            const double h = domain.periodic[c] || n == 1 ? domain.extent(c) / n : domain.extent(c) / (n - 1);
            pos(idx, c) = domain.lower[c] + h * static_cast<double>(ic);
        }
    }
    return SensorSet(std::move(pos), domain);
}

inline SensorSet regular_grid(const DomainSpec& domain, int per_axis) {
    return regular_grid(domain, std::vector<int>(domain.dim(), per_axis));
}

/// The same graph with every sensor moved by `shift` (wrapped). Edges and
/// minimum-image offsets are translation invariant, so only positions change.
inline SpatialGraph translate_graph(const SpatialGraph& g, const Eigen::RowVectorXd& shift) {
    const DomainSpec& dom = g.sensors.domain;
    detail::require(shift.size() == dom.dim(), "translate_graph: shift dimension mismatch");
    RowMatrixXd pos = g.sensors.positions;
    for (Eigen::Index i = 0; i < pos.rows(); ++i)
        for (int c = 0; c < dom.dim(); ++c) {
            detail::require(dom.periodic[c] || shift[c] == 0.0, "translate_graph: shift along a non-periodic axis");
            pos(i, c) = dom.wrap(c, pos(i, c) + shift[c]);
        }
    SpatialGraph out = g;
    out.sensors = SensorSet(std::move(pos), dom);
    return out;
}

/// Periodic translations mapping the sensor set onto itself, as node
/// permutations: perm[i] is the sensor at x_i + shift (wrapped). Always
/// contains the identity first. Any non-periodic axis leaves only the identity.
inline std::vector<std::vector<int>> translation_symmetries(const SensorSet& sensors, double tol = 1e-9) {
    const auto n = static_cast<Eigen::Index>(sensors.size());
    const DomainSpec& dom = sensors.domain;
    std::vector<int> identity(static_cast<std::size_t>(n));
    std::iota(identity.begin(), identity.end(), 0);
    std::vector<std::vector<int>> out{identity};
    for (int c = 0; c < dom.dim(); ++c)
        if (!dom.periodic[c]) return out;
    if (n < 2) return out;

    // Quantized keys; a point near the upper edge wraps to the lower one.
    auto key = [&](const Eigen::RowVectorXd& x) {
        std::vector<long long> k(static_cast<std::size_t>(dom.dim()));
        for (int c = 0; c < dom.dim(); ++c) {
            double w = dom.wrap(c, x[c]);
            if (dom.upper[c] - w < tol) w = dom.lower[c];
            k[static_cast<std::size_t>(c)] = std::llround((w - dom.lower[c]) / tol);
        }
        return k;
    };
    // Keys are compared exactly, so also probe the neighbouring cells.
    std::map<std::vector<long long>, int> index;
    for (Eigen::Index i = 0; i < n; ++i) index.emplace(key(sensors.positions.row(i)), static_cast<int>(i));
    auto find = [&](const Eigen::RowVectorXd& x) {
        const auto k = key(x);
        for (int c = -1; c < dom.dim(); ++c) {
            for (long long d : {0LL, -1LL, 1LL}) {
                auto probe = k;
                if (c >= 0) probe[static_cast<std::size_t>(c)] += d;
                else if (d != 0) continue;
                if (auto it = index.find(probe); it != index.end()) return it->second;
            }
        }
        return -1;
    };

    for (Eigen::Index j = 1; j < n; ++j) {
        const Eigen::RowVectorXd shift = sensors.positions.row(j) - sensors.positions.row(0);
        std::vector<int> perm(static_cast<std::size_t>(n));
        bool ok = true;
        for (Eigen::Index i = 0; i < n && ok; ++i) {
            const int m = find(sensors.positions.row(i) + shift);
            ok = m >= 0;
            perm[static_cast<std::size_t>(i)] = m;
        }
        if (ok) out.push_back(std::move(perm));
    }
    return out;
}

/// Uniform candidate grid with `n_candidates` points (a perfect d-th power in
/// d > 1), of which `n_select` are drawn without replacement. Selected rows
/// keep candidate order.
inline SensorSet sample_irregular_sensors(const DomainSpec& domain, int n_candidates, int n_select,
                                          std::uint64_t seed) {
    if (n_select > n_candidates) {
        throw InvalidArgument("sample_irregular_sensors: n_select exceeds n_candidates");
    }
    detail::require(n_select >= 1, "sample_irregular_sensors: n_select must be positive");
    const int d = domain.dim();
    const int per_axis = static_cast<int>(std::lround(std::pow(n_candidates, 1.0 / d)));
    int check = 1;
    for (int c = 0; c < d; ++c) check *= per_axis;
    detail::require(check == n_candidates, "n_candidates must be a perfect power of the dimension");
    const SensorSet grid = regular_grid(domain, per_axis);
    if (n_select == n_candidates) return grid;

    std::vector<int> idx(n_candidates);
    std::iota(idx.begin(), idx.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(n_select);
    std::sort(idx.begin(), idx.end());
    RowMatrixXd pos(n_select, d);
    for (int r = 0; r < n_select; ++r) pos.row(r) = grid.positions.row(idx[r]);
    return SensorSet(std::move(pos), domain);
}

/// Relabels sensors: new row r is old row perm[r].
inline SensorSet permute_sensors(const SensorSet& s, const std::vector<int>& perm) {
    RowMatrixXd pos(s.positions.rows(), s.positions.cols());
    for (std::size_t r = 0; r < perm.size(); ++r) pos.row(r) = s.positions.row(perm[r]);
    return SensorSet(std::move(pos), s.domain);
}

/// Same graph under the relabelling new r = old perm[r]; edge order follows
/// the new receivers so the result is a valid graph on the permuted sensors.
inline SpatialGraph permute_graph(const SpatialGraph& g, const std::vector<int>& perm) {
    std::vector<int> inv(perm.size());
    for (std::size_t r = 0; r < perm.size(); ++r) inv[perm[r]] = static_cast<int>(r);
    std::vector<int> recv;
    std::vector<int> send;
    recv.reserve(g.num_edges());
    send.reserve(g.num_edges());
    for (std::size_t e = 0; e < g.num_edges(); ++e) {
        recv.push_back(inv[g.receiver[e]]);
        send.push_back(inv[g.sender[e]]);
    }
    return make_graph(permute_sensors(g.sensors, perm), std::move(recv), std::move(send), g.k);
}

}  // namespace gdon
