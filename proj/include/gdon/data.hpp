#pragma once

// Trajectory datasets and their generators: forced Burgers (method of lines),
// analytic periodic advection, shallow-water initial conditions, and
// temporal bundling.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <boost/numeric/odeint.hpp>

#include "gdon/error.hpp"
#include "gdon/geometry.hpp"

namespace gdon {

/// Extra named float64 array carried along with a dataset.
struct NamedArray {
    std::vector<std::size_t> shape;
    std::vector<double> data;
};

/// Solution frames u[traj, time, node, channel] at fixed sensors.
struct TrajectoryDataset {
    std::size_t n_traj = 0;
    std::size_t n_times = 0;
    std::size_t n_nodes = 0;
    std::size_t n_channels = 1;
    std::vector<float> u;
    SensorSet sensors;
    std::vector<double> times;
    double dt = 0.0;
    std::map<std::string, std::string> meta;
    std::map<std::string, NamedArray> extras;

    std::size_t index(std::size_t traj, std::size_t t, std::size_t node, std::size_t c = 0) const {
        return ((traj * n_times + t) * n_nodes + node) * n_channels + c;
    }
    float& at(std::size_t traj, std::size_t t, std::size_t node, std::size_t c = 0) {
        return u[index(traj, t, node, c)];
    }
    float at(std::size_t traj, std::size_t t, std::size_t node, std::size_t c = 0) const {
        return u[index(traj, t, node, c)];
    }

    /// Checks shapes, uniform time spacing and finiteness.
    void validate() const {
        detail::require(u.size() == n_traj * n_times * n_nodes * n_channels, "dataset: u has wrong size");
        detail::require(sensors.size() == n_nodes, "dataset: sensor count differs from node count");
        detail::require(times.size() == n_times, "dataset: times has wrong length");
        detail::require(n_times < 2 || dt > 0.0, "dataset: dt must be positive");
        for (std::size_t k = 1; k < times.size(); ++k) {
            const double step = times[k] - times[k - 1];
            detail::require(std::abs(step - dt) <= 1e-12 * std::max(1.0, std::abs(dt)) * 8.0,
                            "dataset: times are not uniformly spaced by dt");
        }
        for (float v : u) detail::require(std::isfinite(v), "dataset: u contains NaN/Inf");
    }
};

inline std::vector<double> uniform_times(std::size_t n, double t_end) {
    std::vector<double> t(n);
    const double dt = n > 1 ? t_end / static_cast<double>(n - 1) : 0.0;
    for (std::size_t k = 0; k < n; ++k) t[k] = dt * static_cast<double>(k);
    return t;
}

/// Deterministic per-item seeds derived from one base seed.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// ---------------------------------------------------------------------------
// Burgers with random sinusoidal forcing

struct BurgersForcing {
    std::array<double, 5> A{};
    std::array<double, 5> a{};
    std::array<double, 5> b{};
    std::array<double, 5> phi{};
};

inline BurgersForcing sample_burgers_forcing(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amp(-0.5, 0.5);
    std::uniform_real_distribution<double> freq(-0.4, 0.4);
    std::uniform_int_distribution<int> wave(1, 3);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
    BurgersForcing f;
    for (int j = 0; j < 5; ++j) {
        f.A[j] = amp(rng);
        f.a[j] = freq(rng);
        f.b[j] = wave(rng) * std::numbers::pi / 8.0;
        f.phi[j] = phase(rng);
    }
    return f;
}

inline double eval_forcing(const BurgersForcing& f, double t, double x) {
    double s = 0.0;
    for (int j = 0; j < 5; ++j) s += f.A[j] * std::sin(f.a[j] * t + f.b[j] * x + f.phi[j]);
    return s;
}

inline std::vector<double> eval_forcing(const BurgersForcing& f, double t, const std::vector<double>& x) {
    std::vector<double> out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = eval_forcing(f, t, x[i]);
    return out;
}

struct BurgersConfig {
    double alpha = 0.5;
    double beta = 0.01;
    double gamma = 0.0;
    double length = 16.0;
    int n_internal = 400;
    int n_times = 250;
    double t_end = 4.0;
    double abs_tol = 1e-8;
    double rel_tol = 1e-8;
    double blowup = 1e6;
    /// Adaptive steps allowed between two output frames.
    int max_steps_per_frame = 100000;
};

/// Frames on the internal periodic grid x_i = i L / n.
struct PeriodicSolution {
    double length = 0.0;
    std::vector<double> times;
    std::vector<std::vector<double>> frames;

    std::size_t n_points() const { return frames.empty() ? 0 : frames.front().size(); }
    double spacing() const { return length / static_cast<double>(n_points()); }
};

namespace detail {

/// Semi-discrete Burgers operator with 4th-order central differences. The
/// advective flux uses the skew-symmetric split
///   d/dx(a u^2) = (2a/3) [ d/dx(u^2) + u du/dx ],
/// which keeps the discrete mean and (without forcing or dissipation) the
/// discrete L2 norm exactly invariant.
class BurgersRhs {
public:
    BurgersRhs(const BurgersForcing* forcing, const BurgersConfig& cfg)
        : forcing_(forcing), cfg_(cfg), h_(cfg.length / cfg.n_internal), x_(cfg.n_internal),
          sq_(cfg.n_internal), d1u_(cfg.n_internal), d1sq_(cfg.n_internal), d2u_(cfg.n_internal),
          d3u_(cfg.n_internal) {
        for (int i = 0; i < cfg.n_internal; ++i) x_[i] = h_ * i;
    }

    void operator()(const std::vector<double>& u, std::vector<double>& dudt, double t) {
        const int n = static_cast<int>(u.size());
        for (int i = 0; i < n; ++i) {
            if (!std::isfinite(u[i]) || std::abs(u[i]) > cfg_.blowup) {
                std::ostringstream msg;
                msg << "Burgers integration blew up at t=" << t;
                throw IntegrationFailure(t, msg.str());
            }
            sq_[i] = u[i] * u[i];
        }
        d1(u, d1u_);
        d1(sq_, d1sq_);
        d2(u, d2u_);
        const bool dispersive = cfg_.gamma != 0.0;
        if (dispersive) d1(d2u_, d3u_);
        const double c = 2.0 * cfg_.alpha / 3.0;
        for (int i = 0; i < n; ++i) {
            double r = -c * (d1sq_[i] + u[i] * d1u_[i]) + cfg_.beta * d2u_[i];
            if (dispersive) r -= cfg_.gamma * d3u_[i];
            if (forcing_) r += eval_forcing(*forcing_, t, x_[i]);
            dudt[i] = r;
        }
    }

    const std::vector<double>& grid() const { return x_; }

private:
    void d1(const std::vector<double>& f, std::vector<double>& out) const {
        const int n = static_cast<int>(f.size());
        const double s = 1.0 / (12.0 * h_);
        for (int i = 0; i < n; ++i) {
            const double fm2 = f[(i - 2 + n) % n], fm1 = f[(i - 1 + n) % n];
            const double fp1 = f[(i + 1) % n], fp2 = f[(i + 2) % n];
            out[i] = (-fp2 + 8.0 * fp1 - 8.0 * fm1 + fm2) * s;
        }
    }
    void d2(const std::vector<double>& f, std::vector<double>& out) const {
        const int n = static_cast<int>(f.size());
        const double s = 1.0 / (12.0 * h_ * h_);
        for (int i = 0; i < n; ++i) {
            const double fm2 = f[(i - 2 + n) % n], fm1 = f[(i - 1 + n) % n];
            const double fp1 = f[(i + 1) % n], fp2 = f[(i + 2) % n];
            out[i] = (-fp2 + 16.0 * fp1 - 30.0 * f[i] + 16.0 * fm1 - fm2) * s;
        }
    }

    const BurgersForcing* forcing_;
    BurgersConfig cfg_;
    double h_;
    std::vector<double> x_;
    std::vector<double> sq_, d1u_, d1sq_, d2u_, d3u_;
};

}  // namespace detail

/// Integrates the forced Burgers equation on the internal grid from
/// u(0, x) = delta(0, x) (or `initial` if given) and records n_times frames
/// uniformly on [0, t_end]. A null forcing means delta = 0.
inline PeriodicSolution solve_burgers_internal(const BurgersForcing* forcing, const BurgersConfig& cfg,
                                               const std::vector<double>* initial = nullptr) {
    namespace odeint = boost::numeric::odeint;
    detail::require(cfg.n_internal >= 8, "Burgers: n_internal too small");
    detail::require(cfg.n_times >= 2 && cfg.t_end > 0.0, "Burgers: need n_times >= 2 and t_end > 0");
    detail::BurgersRhs rhs(forcing, cfg);
    std::vector<double> u(cfg.n_internal, 0.0);
    if (initial) {
        detail::require(static_cast<int>(initial->size()) == cfg.n_internal, "Burgers: initial state has wrong size");
        u = *initial;
    } else if (forcing) {
        for (int i = 0; i < cfg.n_internal; ++i) u[i] = eval_forcing(*forcing, 0.0, rhs.grid()[i]);
    }

    PeriodicSolution sol;
    sol.length = cfg.length;
    sol.times = uniform_times(static_cast<std::size_t>(cfg.n_times), cfg.t_end);
    sol.frames.reserve(sol.times.size());
    auto observe = [&](const std::vector<double>& state, double t) {
        for (double v : state) {
            if (!std::isfinite(v) || std::abs(v) > cfg.blowup) {
                std::ostringstream msg;
                msg << "Burgers integration blew up at t=" << t;
                throw IntegrationFailure(t, msg.str());
            }
        }
        sol.frames.push_back(state);
    };
    using Stepper = odeint::runge_kutta_dopri5<std::vector<double>>;
    auto stepper = odeint::make_dense_output(cfg.abs_tol, cfg.rel_tol, Stepper());
    const double dt0 = 1e-3;
    try {
        odeint::integrate_times(stepper, std::ref(rhs), u, sol.times.begin(), sol.times.end(), dt0, observe,
                                odeint::max_step_checker(cfg.max_steps_per_frame));
    } catch (const odeint::odeint_error& e) {
        throw IntegrationFailure(sol.times.size() > sol.frames.size() ? sol.times[sol.frames.size()] : cfg.t_end,
                                 std::string("Burgers step size control failed: ") + e.what());
    }
    return sol;
}

/// Value of the periodic grid function at x. Exact grid nodes are copied;
/// other points use trigonometric interpolation.
inline double sample_periodic(const std::vector<double>& frame, double length, double x) {
    const std::size_t n = frame.size();
    const double h = length / static_cast<double>(n);
    double xr = std::fmod(x, length);
    if (xr < 0) xr += length;
    const double s = xr / h;
    const double nearest = std::round(s);
    if (std::abs(s - nearest) < 1e-9) return frame[static_cast<std::size_t>(nearest) % n];
    // Trigonometric interpolant through the n samples (Nyquist term split).
    const double w = 2.0 * std::numbers::pi / length;
    const long half = static_cast<long>(n / 2);
    double acc = 0.0;
    for (long k = -half; k <= half; ++k) {
        std::complex<double> ck(0.0, 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            const double ang = -w * static_cast<double>(k) * h * static_cast<double>(j);
            ck += frame[j] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        ck /= static_cast<double>(n);
        double weight = 1.0;
        if (n % 2 == 0 && (k == half || k == -half)) weight = 0.5;
        acc += weight * (ck * std::complex<double>(std::cos(w * k * xr), std::sin(w * k * xr))).real();
    }
    return acc;
}

/// Restriction of an internal solution to arbitrary 1D sensors.
inline std::vector<std::vector<double>> restrict_solution(const PeriodicSolution& sol, const SensorSet& sensors) {
    detail::require(sensors.dim() == 1, "restrict_solution: 1D sensors expected");
    std::vector<std::vector<double>> out(sol.frames.size(), std::vector<double>(sensors.size()));
    for (std::size_t k = 0; k < sol.frames.size(); ++k) {
        for (std::size_t i = 0; i < sensors.size(); ++i) {
            out[k][i] = sample_periodic(sol.frames[k], sol.length, sensors.positions(i, 0) - sensors.domain.lower[0]);
        }
    }
    return out;
}

inline std::string burgers_params_string(const BurgersConfig& cfg) {
    std::ostringstream os;
    os.precision(17);
    os << "alpha=" << cfg.alpha << ";beta=" << cfg.beta << ";gamma=" << cfg.gamma << ";n_internal=" << cfg.n_internal
       << ";t_end=" << cfg.t_end << ";length=" << cfg.length << ";coefficients=desk-default";
    return os.str();
}

inline DomainSpec burgers_domain(const BurgersConfig& cfg) { return DomainSpec::box(1, 0.0, cfg.length, true); }

/// One trajectory sampled at `sensors`.
inline TrajectoryDataset solve_burgers(const BurgersForcing& forcing, const BurgersConfig& cfg,
                                       const SensorSet& sensors) {
    const PeriodicSolution sol = solve_burgers_internal(&forcing, cfg);
    const auto vals = restrict_solution(sol, sensors);
    TrajectoryDataset ds;
    ds.n_traj = 1;
    ds.n_times = sol.times.size();
    ds.n_nodes = sensors.size();
    ds.sensors = sensors;
    ds.times = sol.times;
    ds.dt = sol.times[1] - sol.times[0];
    ds.u.resize(ds.n_times * ds.n_nodes);
    for (std::size_t k = 0; k < ds.n_times; ++k)
        for (std::size_t i = 0; i < ds.n_nodes; ++i) ds.at(0, k, i) = static_cast<float>(vals[k][i]);
    ds.meta["equation"] = "burgers";
    ds.meta["params"] = burgers_params_string(cfg);
    return ds;
}

/// n_traj independent forced trajectories sampled at every sensor set in
/// `sensor_sets` (one dataset per set, same trajectories). Trajectory i uses
/// forcing seed derive_seed(seed, i).
inline std::vector<TrajectoryDataset> generate_burgers_datasets(std::size_t n_traj, std::uint64_t seed,
                                                                const BurgersConfig& cfg,
                                                                const std::vector<SensorSet>& sensor_sets) {
    detail::require(n_traj >= 1, "generate_burgers_dataset: n_traj must be positive");
    std::vector<TrajectoryDataset> out(sensor_sets.size());
    const auto times = uniform_times(static_cast<std::size_t>(cfg.n_times), cfg.t_end);
    for (std::size_t s = 0; s < sensor_sets.size(); ++s) {
        auto& ds = out[s];
        ds.n_traj = n_traj;
        ds.n_times = times.size();
        ds.n_nodes = sensor_sets[s].size();
        ds.sensors = sensor_sets[s];
        ds.times = times;
        ds.dt = times[1] - times[0];
        ds.u.resize(n_traj * ds.n_times * ds.n_nodes);
        ds.meta["equation"] = "burgers";
        ds.meta["params"] = burgers_params_string(cfg);
        ds.meta["seed"] = std::to_string(seed);
    }
    for (std::size_t tr = 0; tr < n_traj; ++tr) {
        const BurgersForcing f = sample_burgers_forcing(derive_seed(seed, tr));
        PeriodicSolution sol;
        try {
            sol = solve_burgers_internal(&f, cfg);
        } catch (const IntegrationFailure& e) {
            throw IntegrationFailure(e.time(), "trajectory " + std::to_string(tr) + ": " + e.what());
        }
        for (std::size_t s = 0; s < sensor_sets.size(); ++s) {
            const auto vals = restrict_solution(sol, sensor_sets[s]);
            auto& ds = out[s];
            for (std::size_t k = 0; k < ds.n_times; ++k)
                for (std::size_t i = 0; i < ds.n_nodes; ++i) ds.at(tr, k, i) = static_cast<float>(vals[k][i]);
        }
    }
    return out;
}

inline TrajectoryDataset generate_burgers_dataset(std::size_t n_traj, std::uint64_t seed, const BurgersConfig& cfg,
                                                  const SensorSet& sensors) {
    return std::move(generate_burgers_datasets(n_traj, seed, cfg, {sensors}).front());
}

// ---------------------------------------------------------------------------
// Shallow-water initial condition

/// h0 = 2.0 where r < |x|, else 1.0 (the inequality as printed); `inverted`
/// gives the dam-break orientation (2.0 inside the radius).
inline std::vector<double> shallow_water_ic(double radius, const SensorSet& grid, bool inverted = false) {
    if (grid.dim() != 2) throw InvalidArgument("shallow_water_ic: 2D grid required");
    std::vector<double> h(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.positions(i, 0);
        const double y = grid.positions(i, 1);
        const bool outside = radius < std::sqrt(x * x + y * y);
        h[i] = (outside != inverted) ? 2.0 : 1.0;
    }
    return h;
}

inline double sample_shallow_water_radius(std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return std::uniform_real_distribution<double>(0.3, 0.7)(rng);
}

inline std::vector<double> sample_shallow_water_ic(std::uint64_t seed, const SensorSet& grid, bool inverted = false) {
    if (grid.dim() != 2) throw InvalidArgument("sample_shallow_water_ic: 2D grid required");
    return shallow_water_ic(sample_shallow_water_radius(seed), grid, inverted);
}

// ---------------------------------------------------------------------------
// Periodic advection with exact solution u(t, x) = u0(x - v t)

/// Integer wave vectors m with |m|_inf <= max_mode: the zero mode plus one
/// representative of each +/- pair (first non-zero component positive).
inline std::vector<std::vector<int>> advection_modes(int dim, int max_mode) {
    std::vector<std::vector<int>> out;
    std::vector<int> m(dim, -max_mode);
    while (true) {
        auto first = std::find_if(m.begin(), m.end(), [](int v) { return v != 0; });
        if (first == m.end() || *first > 0) out.push_back(m);
        int c = dim - 1;
        while (c >= 0 && m[c] == max_mode) m[c--] = -max_mode;
        if (c < 0) break;
        ++m[c];
    }
    return out;
}

/// Random low-order Fourier initial condition.
struct FourierIC {
    std::vector<std::vector<int>> modes;
    std::vector<double> cos_coef;
    std::vector<double> sin_coef;
};

inline FourierIC sample_fourier_ic(int dim, int max_mode, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coef(-1.0, 1.0);
    FourierIC ic;
    ic.modes = advection_modes(dim, max_mode);
    for (const auto& m : ic.modes) {
        double norm = 0.0;
        for (int v : m) norm += static_cast<double>(v) * v;
        const double s = 1.0 / (1.0 + std::sqrt(norm));
        ic.cos_coef.push_back(coef(rng) * s);
        const bool zero = norm == 0.0;
        const double sc = coef(rng) * s;
        ic.sin_coef.push_back(zero ? 0.0 : sc);
    }
    return ic;
}

inline double eval_fourier_ic(const FourierIC& ic, const DomainSpec& dom, const double* x) {
    double acc = 0.0;
    for (std::size_t j = 0; j < ic.modes.size(); ++j) {
        double phase = 0.0;
        for (int c = 0; c < dom.dim(); ++c) {
            phase += 2.0 * std::numbers::pi * ic.modes[j][c] * (x[c] - dom.lower[c]) / dom.extent(c);
        }
        acc += ic.cos_coef[j] * std::cos(phase) + ic.sin_coef[j] * std::sin(phase);
    }
    return acc;
}

/// Exact transported field at time t and point x.
inline double advection_exact(const FourierIC& ic, const DomainSpec& dom, const std::vector<double>& velocity,
                              double t, const double* x) {
    std::vector<double> shifted(dom.dim());
    for (int c = 0; c < dom.dim(); ++c) shifted[c] = x[c] - velocity[c] * t;
    return eval_fourier_ic(ic, dom, shifted.data());
}

struct AdvectionConfig {
    std::vector<double> velocity{0.25};
    int max_mode = 3;
    std::size_t n_times = 25;
    double dt = 0.08;
};

/// Stores the IC coefficients as extras so truth can be recomputed anywhere.
inline TrajectoryDataset generate_advection_dataset(std::size_t n_traj, const SensorSet& grid,
                                                    const AdvectionConfig& cfg, std::uint64_t seed) {
    detail::require(n_traj >= 1, "generate_advection_dataset: n_traj must be positive");
    detail::require(static_cast<int>(cfg.velocity.size()) == grid.dim(), "advection: velocity dimension mismatch");
    detail::require(cfg.n_times >= 1 && cfg.dt > 0.0, "advection: need n_times >= 1 and dt > 0");
    for (int c = 0; c < grid.dim(); ++c) detail::require(grid.domain.periodic[c], "advection: periodic domain required");
    TrajectoryDataset ds;
    ds.n_traj = n_traj;
    ds.n_times = cfg.n_times;
    ds.n_nodes = grid.size();
    ds.sensors = grid;
    ds.dt = cfg.dt;
    ds.times.resize(cfg.n_times);
    for (std::size_t k = 0; k < cfg.n_times; ++k) ds.times[k] = cfg.dt * static_cast<double>(k);
    ds.u.resize(n_traj * cfg.n_times * ds.n_nodes);

    const auto modes = advection_modes(grid.dim(), cfg.max_mode);
    NamedArray coeffs{{n_traj, modes.size(), 2}, {}};
    NamedArray mode_arr{{modes.size(), static_cast<std::size_t>(grid.dim())}, {}};
    for (const auto& m : modes)
        for (int v : m) mode_arr.data.push_back(v);
    for (std::size_t tr = 0; tr < n_traj; ++tr) {
        const FourierIC ic = sample_fourier_ic(grid.dim(), cfg.max_mode, derive_seed(seed, tr));
        for (std::size_t j = 0; j < modes.size(); ++j) {
            coeffs.data.push_back(ic.cos_coef[j]);
            coeffs.data.push_back(ic.sin_coef[j]);
        }
        for (std::size_t k = 0; k < cfg.n_times; ++k) {
            for (std::size_t i = 0; i < ds.n_nodes; ++i) {
                const double v = advection_exact(ic, grid.domain, cfg.velocity, ds.times[k], &grid.positions(i, 0));
                ds.at(tr, k, i) = static_cast<float>(v);
            }
        }
    }
    ds.extras["ic_coeffs"] = std::move(coeffs);
    ds.extras["ic_modes"] = std::move(mode_arr);
    std::ostringstream vel;
    vel.precision(17);
    for (std::size_t c = 0; c < cfg.velocity.size(); ++c) vel << (c ? "," : "") << cfg.velocity[c];
    ds.meta["equation"] = grid.dim() == 1 ? "advection1d" : "advection2d";
    ds.meta["velocity"] = vel.str();
    ds.meta["params"] = "max_mode=" + std::to_string(cfg.max_mode) + ";velocity=" + vel.str();
    ds.meta["seed"] = std::to_string(seed);
    return ds;
}

/// Rebuilds trajectory `tr`'s initial condition from a dataset's extras.
inline FourierIC advection_ic_from(const TrajectoryDataset& ds, std::size_t tr) {
    auto itc = ds.extras.find("ic_coeffs");
    auto itm = ds.extras.find("ic_modes");
    if (itc == ds.extras.end()) throw SchemaViolation("ic_coeffs", "advection dataset lacks IC coefficients");
    if (itm == ds.extras.end()) throw SchemaViolation("ic_modes", "advection dataset lacks IC modes");
    const auto& c = itc->second;
    const auto& m = itm->second;
    const std::size_t nm = m.shape.at(0);
    const std::size_t d = m.shape.at(1);
    FourierIC ic;
    for (std::size_t j = 0; j < nm; ++j) {
        std::vector<int> mode(d);
        for (std::size_t q = 0; q < d; ++q) mode[q] = static_cast<int>(m.data[j * d + q]);
        ic.modes.push_back(mode);
        ic.cos_coef.push_back(c.data[(tr * nm + j) * 2]);
        ic.sin_coef.push_back(c.data[(tr * nm + j) * 2 + 1]);
    }
    return ic;
}

inline std::vector<double> parse_velocity(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) v.push_back(std::stod(item));
    return v;
}

/// Same advection trajectories evaluated at other sensors and times.
inline TrajectoryDataset resample_advection(const TrajectoryDataset& ds, const SensorSet& queries,
                                            std::size_t n_times) {
    const auto velocity = parse_velocity(ds.meta.at("velocity"));
    TrajectoryDataset out;
    out.n_traj = ds.n_traj;
    out.n_times = n_times;
    out.n_nodes = queries.size();
    out.sensors = queries;
    out.dt = ds.dt;
    out.times.resize(n_times);
    for (std::size_t k = 0; k < n_times; ++k) out.times[k] = ds.times.front() + ds.dt * static_cast<double>(k);
    out.u.resize(out.n_traj * n_times * out.n_nodes);
    for (std::size_t tr = 0; tr < ds.n_traj; ++tr) {
        const FourierIC ic = advection_ic_from(ds, tr);
        for (std::size_t k = 0; k < n_times; ++k)
            for (std::size_t i = 0; i < out.n_nodes; ++i)
                out.at(tr, k, i) = static_cast<float>(
                    advection_exact(ic, queries.domain, velocity, out.times[k], &queries.positions(i, 0)));
    }
    out.meta = ds.meta;
    out.extras = ds.extras;
    return out;
}

// ---------------------------------------------------------------------------
// Temporal bundling

struct BundledSample {
    std::size_t trajectory = 0;
    std::size_t K = 0;
    std::size_t R = 0;
    std::size_t n_nodes = 0;
    std::size_t n_channels = 1;
    std::vector<float> input_frames;   // [K, N, C]
    std::vector<float> target_frames;  // [R*K, N, C]
    std::vector<double> input_times;
    std::vector<double> target_times;
};

struct Bundles {
    std::size_t K = 0;
    std::size_t R = 0;
    std::size_t dropped_frames = 0;
    std::vector<BundledSample> samples;
};

/// Input = frames 0..K-1, targets = the next R = floor((T-K)/K) blocks of K.
/// Trailing frames that do not fill a block are dropped and counted.
inline Bundles bundle_frames(const TrajectoryDataset& ds, std::size_t K) {
    detail::require(K >= 1, "bundle_frames: K must be positive");
    if (ds.n_times < 2 * K) {
        throw InvalidArgument("bundle_frames: need at least 2K frames (T=" + std::to_string(ds.n_times) +
                              ", K=" + std::to_string(K) + ")");
    }
    Bundles b;
    b.K = K;
    b.R = (ds.n_times - K) / K;
    b.dropped_frames = ds.n_times - K - b.R * K;
    const std::size_t frame = ds.n_nodes * ds.n_channels;
    for (std::size_t tr = 0; tr < ds.n_traj; ++tr) {
        BundledSample s;
        s.trajectory = tr;
        s.K = K;
        s.R = b.R;
        s.n_nodes = ds.n_nodes;
        s.n_channels = ds.n_channels;
        const auto base = ds.u.begin() + static_cast<std::ptrdiff_t>(ds.index(tr, 0, 0));
        s.input_frames.assign(base, base + static_cast<std::ptrdiff_t>(K * frame));
        s.target_frames.assign(base + static_cast<std::ptrdiff_t>(K * frame),
                               base + static_cast<std::ptrdiff_t>((K + b.R * K) * frame));
        s.input_times.assign(ds.times.begin(), ds.times.begin() + static_cast<std::ptrdiff_t>(K));
        s.target_times.assign(ds.times.begin() + static_cast<std::ptrdiff_t>(K),
                              ds.times.begin() + static_cast<std::ptrdiff_t>(K + b.R * K));
        b.samples.push_back(std::move(s));
    }
    return b;
}

/// First n_times frames of every trajectory.
inline TrajectoryDataset truncate_times(const TrajectoryDataset& ds, std::size_t n_times) {
    detail::require(n_times >= 1 && n_times <= ds.n_times, "truncate_times: bad frame count");
    TrajectoryDataset out = ds;
    out.n_times = n_times;
    out.times.resize(n_times);
    out.u.clear();
    for (std::size_t tr = 0; tr < ds.n_traj; ++tr) {
        const auto base = ds.u.begin() + static_cast<std::ptrdiff_t>(ds.index(tr, 0, 0));
        out.u.insert(out.u.end(), base, base + static_cast<std::ptrdiff_t>(n_times * ds.n_nodes * ds.n_channels));
    }
    return out;
}

/// Subset of trajectories [first, first + count).
inline TrajectoryDataset slice_trajectories(const TrajectoryDataset& ds, std::size_t first, std::size_t count) {
    detail::require(first + count <= ds.n_traj && count >= 1, "slice_trajectories: out of range");
    TrajectoryDataset out = ds;
    out.n_traj = count;
    const std::size_t per = ds.n_times * ds.n_nodes * ds.n_channels;
    out.u.assign(ds.u.begin() + static_cast<std::ptrdiff_t>(first * per),
                 ds.u.begin() + static_cast<std::ptrdiff_t>((first + count) * per));
    auto it = out.extras.find("ic_coeffs");
    if (it != out.extras.end()) {
        auto& c = it->second;
        const std::size_t stride = c.shape[1] * c.shape[2];
        c.data.assign(ds.extras.at("ic_coeffs").data.begin() + static_cast<std::ptrdiff_t>(first * stride),
                      ds.extras.at("ic_coeffs").data.begin() + static_cast<std::ptrdiff_t>((first + count) * stride));
        c.shape[0] = count;
    }
    if (ds.meta.count("equation") && ds.meta.at("equation") == "burgers") {
        const std::size_t offset = ds.meta.count("traj_offset") ? std::stoull(ds.meta.at("traj_offset")) : 0;
        out.meta["traj_offset"] = std::to_string(offset + first);
    }
    return out;
}

/// Solver settings recorded in a Burgers dataset's metadata.
inline BurgersConfig burgers_config_from_meta(const TrajectoryDataset& ds) {
    if (!ds.meta.count("params")) throw SchemaViolation("params", "Burgers dataset lacks solver parameters");
    BurgersConfig cfg;
    std::istringstream in(ds.meta.at("params"));
    std::string item;
    while (std::getline(in, item, ';')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) continue;
        const std::string key = item.substr(0, eq), val = item.substr(eq + 1);
        if (key == "alpha") cfg.alpha = std::stod(val);
        else if (key == "beta") cfg.beta = std::stod(val);
        else if (key == "gamma") cfg.gamma = std::stod(val);
        else if (key == "n_internal") cfg.n_internal = std::stoi(val);
        else if (key == "t_end") cfg.t_end = std::stod(val);
        else if (key == "length") cfg.length = std::stod(val);
    }
    detail::require(ds.dt > 0.0, "burgers_config_from_meta: dataset has no time step");
    cfg.n_times = static_cast<int>(std::lround(cfg.t_end / ds.dt)) + 1;
    return cfg;
}

/// Same Burgers trajectories re-solved and sampled at `queries`.
inline TrajectoryDataset resample_burgers(const TrajectoryDataset& ds, const SensorSet& queries) {
    const BurgersConfig cfg = burgers_config_from_meta(ds);
    if (!ds.meta.count("seed")) throw SchemaViolation("seed", "Burgers dataset lacks its generator seed");
    const std::uint64_t seed = std::stoull(ds.meta.at("seed"));
    const std::size_t offset = ds.meta.count("traj_offset") ? std::stoull(ds.meta.at("traj_offset")) : 0;
    TrajectoryDataset out;
    out.n_traj = ds.n_traj;
    out.n_times = ds.n_times;
    out.n_nodes = queries.size();
    out.sensors = queries;
    out.times = ds.times;
    out.dt = ds.dt;
    out.meta = ds.meta;
    out.u.resize(out.n_traj * out.n_times * out.n_nodes);
    for (std::size_t tr = 0; tr < ds.n_traj; ++tr) {
        const BurgersForcing f = sample_burgers_forcing(derive_seed(seed, offset + tr));
        const auto vals = restrict_solution(solve_burgers_internal(&f, cfg), queries);
        for (std::size_t k = 0; k < out.n_times; ++k)
            for (std::size_t i = 0; i < out.n_nodes; ++i) out.at(tr, k, i) = static_cast<float>(vals[k][i]);
    }
    return out;
}

/// Ground truth for the trajectories of `ds` at other points, from the generator.
inline TrajectoryDataset resample_dataset(const TrajectoryDataset& ds, const SensorSet& queries) {
    const std::string eq = ds.meta.count("equation") ? ds.meta.at("equation") : "";
    if (eq == "burgers") return resample_burgers(ds, queries);
    if (eq == "advection1d" || eq == "advection2d") return resample_advection(ds, queries, ds.n_times);
    throw InvalidArgument("resample_dataset: no generator for equation '" + eq + "'");
}

}  // namespace gdon
