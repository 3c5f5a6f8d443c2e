// gdon_cli: dataset generation, training and evaluation runs.
//
//   gdon_cli gen-data --eq burgers --n-train 256 --seed 7
//   gdon_cli train --data runs/gen-data-... --epochs 40
//   gdon_cli eval --checkpoint runs/train-.../model.ckpt --protocol rollout
//
// Every command writes into $GDON_RUN_ROOT/<run-name> (default root: ./runs)
// a manifest.json plus resolved.toml; `gdon_cli --config resolved.toml <cmd>`
// repeats the run.

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <unistd.h>

#include <CLI11.hpp>

#include "gdon/gdon.hpp"
#include "svg_plot.hpp"

namespace fs = std::filesystem;
using namespace gdon;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct FileNotFound : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require_file(const fs::path& p) {
    if (!fs::exists(p)) throw FileNotFound("file not found: " + p.string());
}

// ---------------------------------------------------------------------------
// Run directories and manifests

struct Run {
    fs::path dir;
    nlohmann::json artifacts = nlohmann::json::object();

    void artifact(const std::string& key, const fs::path& p) { artifacts[key] = p.string(); }
};

std::string timestamp() {
    const std::time_t now = std::time(nullptr);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y%m%d-%H%M%S", std::localtime(&now));
    return buf;
}

Run open_run(const std::string& command, const std::string& name) {
    const char* root_env = std::getenv("GDON_RUN_ROOT");
    const fs::path root = root_env && *root_env ? fs::path(root_env) : fs::path("runs");
    Run run;
    run.dir = root / (name.empty() ? command + "-" + timestamp() + "-" + std::to_string(::getpid()) : name);
    fs::create_directories(run.dir);
    return run;
}

nlohmann::json resolved_options(const CLI::App& sub) {
    nlohmann::json out = nlohmann::json::object();
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->get_lnames().empty()) continue;
        const std::string key = opt->get_lnames().front();
        if (key == "help") continue;
        if (opt->count() > 0) {
            const auto& r = opt->results();
            out[key] = r.size() == 1 ? nlohmann::json(r.front()) : nlohmann::json(r);
        } else {
            out[key] = opt->get_default_str();
        }
    }
    return out;
}

void write_manifest(Run& run, const CLI::App& app, const CLI::App& sub, std::uint64_t seed) {
    const std::string config_path = app.get_config_ptr() && app.get_config_ptr()->count() > 0
                                        ? app.get_config_ptr()->as<std::string>()
                                        : "";
    const fs::path resolved = run.dir / "resolved.toml";
    {
        std::ofstream out(resolved);
        out << "[" << sub.get_name() << "]\n" << sub.config_to_str(true, false);
    }
    nlohmann::json m;
    m["command"] = sub.get_name();
    m["config_path"] = config_path;
    m["resolved_config"] = resolved_options(sub);
    m["seed"] = seed;
    m["artifacts"] = run.artifacts;
    m["resolved_config_file"] = resolved.string();
    m["rerun"] = "gdon_cli --config " + resolved.string() + " " + sub.get_name();
    std::ofstream out(run.dir / "manifest.json");
    out << m.dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Query grids: "sensors", "regular:M" or "offset:M" (M points per axis,
// offset shifts by half a cell).

std::optional<SensorSet> parse_queries(const std::string& spec, const DomainSpec& dom) {
    if (spec == "sensors" || spec.empty()) return std::nullopt;
    const auto colon = spec.find(':');
    if (colon == std::string::npos) throw UsageError("bad --queries '" + spec + "' (sensors | regular:M | offset:M)");
    const std::string kind = spec.substr(0, colon);
    int m = 0;
    try {
        m = std::stoi(spec.substr(colon + 1));
    } catch (const std::exception&) {
        throw UsageError("bad point count in --queries '" + spec + "'");
    }
    if (m < 1) throw UsageError("--queries needs a positive point count");
    SensorSet grid = regular_grid(dom, m);
    if (kind == "regular") return grid;
    if (kind == "offset") {
        for (Eigen::Index i = 0; i < grid.positions.rows(); ++i)
            for (int c = 0; c < dom.dim(); ++c) grid.positions(i, c) += 0.5 * dom.extent(c) / m;
        return SensorSet(grid.positions, dom);
    }
    throw UsageError("unknown query grid kind '" + kind + "'");
}

// ---------------------------------------------------------------------------
// gen-data

struct GenOptions {
    std::string eq;
    std::size_t n_train = 256, n_val = 32, n_test = 32;
    std::uint64_t seed = 0;
    std::string grid = "regular";
    int n_sensors = 0;
    int n_candidates = 0;
    int n_times = 0;
    double dt = 0.08;
    int n_internal = 400;
    double alpha = 0.5, beta = 0.01;
    std::string queries;
    std::string run_name;
};

DomainSpec domain_for(const std::string& eq) {
    if (eq == "burgers") return DomainSpec::box(1, 0.0, 16.0, true);
    if (eq == "advection1d") return DomainSpec::box(1, 0.0, 1.0, true);
    if (eq == "advection2d") return DomainSpec::box(2, 0.0, 1.0, true);
    return DomainSpec::box(2, -2.5, 2.5, true);
}

SensorSet make_sensors(const GenOptions& o, const DomainSpec& dom) {
    const int d = dom.dim();
    int n = o.n_sensors;
    if (n == 0) n = o.eq == "burgers" ? 50 : (d == 1 ? 32 : 256);
    if (o.grid == "regular") {
        if (d == 1) return regular_grid(dom, n);
        const int per = static_cast<int>(std::lround(std::sqrt(static_cast<double>(n))));
        if (per * per != n) throw UsageError("--n-sensors must be a perfect square for a regular 2D grid");
        return regular_grid(dom, per);
    }
    int cand = o.n_candidates;
    if (cand == 0) cand = d == 1 ? 2 * n : 4 * n;
    if (d == 2) {
        const int per = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(cand))));
        cand = per * per;
    }
    if (cand < n) throw UsageError("--n-candidates must be at least --n-sensors");
    return sample_irregular_sensors(dom, cand, n, derive_seed(o.seed, 999));
}

TrajectoryDataset shallow_water_ic_dataset(std::size_t n, std::uint64_t seed, const SensorSet& grid) {
    TrajectoryDataset ds;
    ds.n_traj = n;
    ds.n_times = 1;
    ds.n_nodes = grid.size();
    ds.sensors = grid;
    ds.times = {0.0};
    ds.dt = 0.0;
    NamedArray radii{{n}, {}};
    for (std::size_t tr = 0; tr < n; ++tr) {
        const std::uint64_t s = derive_seed(seed, tr);
        radii.data.push_back(sample_shallow_water_radius(s));
        for (double v : shallow_water_ic(radii.data.back(), grid)) ds.u.push_back(static_cast<float>(v));
    }
    ds.extras["radius"] = std::move(radii);
    ds.meta["equation"] = "shallow-water-ic";
    ds.meta["seed"] = std::to_string(seed);
    return ds;
}

int cmd_gen_data(const GenOptions& o, Run& run) {
    if (o.n_train == 0) throw UsageError("--n-train must be positive");
    if (o.n_val == 0 || o.n_test == 0) throw UsageError("--n-val and --n-test must be positive");
    const DomainSpec dom = domain_for(o.eq);
    const SensorSet sensors = make_sensors(o, dom);
    const auto queries = parse_queries(o.queries, dom);
    const std::array<std::pair<const char*, std::size_t>, 3> splits{{{"train", o.n_train}, {"val", o.n_val}, {"test", o.n_test}}};

    for (std::size_t s = 0; s < splits.size(); ++s) {
        const auto [name, n] = splits[s];
        const std::uint64_t seed = s == 0 ? o.seed : derive_seed(o.seed, 1000000 + s);
        std::vector<TrajectoryDataset> out;
        if (o.eq == "burgers") {
            BurgersConfig cfg;
            cfg.n_internal = o.n_internal;
            cfg.alpha = o.alpha;
            cfg.beta = o.beta;
            if (o.n_times > 0) {
                // Keep the protocol time step; fewer frames mean a shorter horizon.
                const double dt = cfg.t_end / (cfg.n_times - 1);
                cfg.n_times = o.n_times;
                cfg.t_end = dt * (o.n_times - 1);
            }
            std::vector<SensorSet> sets{sensors};
            if (queries && s == 2) sets.push_back(*queries);
            out = generate_burgers_datasets(n, seed, cfg, sets);
        } else if (o.eq == "advection1d" || o.eq == "advection2d") {
            AdvectionConfig cfg;
            cfg.velocity.assign(static_cast<std::size_t>(dom.dim()), 0.25);
            cfg.dt = o.dt;
            if (o.n_times > 0) cfg.n_times = static_cast<std::size_t>(o.n_times);
            out.push_back(generate_advection_dataset(n, sensors, cfg, seed));
            if (queries && s == 2) out.push_back(resample_advection(out.front(), *queries, out.front().n_times));
        } else {
            out.push_back(shallow_water_ic_dataset(n, seed, sensors));
            if (queries && s == 2) out.push_back(shallow_water_ic_dataset(n, seed, *queries));
        }
        out.front().meta["sensor_grid"] = o.grid;
        const fs::path p = run.dir / (std::string(name) + ".st");
        io::save_dataset(out.front(), p.string());
        run.artifact(name, p);
        if (out.size() > 1) {
            const fs::path q = run.dir / "test_queries.st";
            io::save_dataset(out[1], q.string());
            run.artifact("test_queries", q);
        }
        std::cout << name << ": " << out.front().n_traj << " trajectories x " << out.front().n_times << " frames x "
                  << out.front().n_nodes << " nodes, dt=" << io::format_double(out.front().dt) << '\n';
    }
    std::cout << "equation=" << o.eq << " grid=" << o.grid << " sensors=" << sensors.size() << " dir=" << run.dir.string()
              << '\n';
    return 0;
}

// ---------------------------------------------------------------------------
// train

struct TrainOptions {
    std::string data;
    std::string model = "graph-deeponet";
    int K = 25;
    int width = 128;
    int d_lat = 128;
    int p = 128;
    int M = 3;
    int fourier_modes = 16;
    int k_neighbors = 0;
    std::string time_input = "absolute";
    TrainConfig train;
    std::string precision = "float32";
    std::string resume;
    std::string run_name;
};

ModelConfig model_config(const TrainOptions& o, const DomainSpec& dom) {
    ModelConfig c;
    c.domain = dom;
    c.K = o.K;
    c.d_lat = o.d_lat;
    c.p = o.p;
    c.M = o.M;
    c.n_fourier_modes = o.fourier_modes;
    for (MlpSpec* s : {&c.encoder, &c.phi, &c.psi, &c.gate, &c.feature, &c.trunk}) s->width = o.width;
    c.time_input = o.time_input == "block_relative" ? TimeInput::block_relative : TimeInput::absolute;
    c.seed = o.train.seed;
    return c;
}

DeepONetConfig deeponet_config(const TrainOptions& o, const TrajectoryDataset& ds) {
    DeepONetConfig c;
    c.domain = ds.sensors.domain;
    c.K = o.K;
    c.n_sensors = static_cast<int>(ds.n_nodes);
    c.channels = static_cast<int>(ds.n_channels);
    c.p = o.p;
    c.branch = {o.width, 3};
    c.trunk = {o.width, 3};
    c.seed = o.train.seed;
    return c;
}

template <class S, class Model>
void train_model(Model& model, const TrainOptions& o, const TrainingSet& train, const TrainingSet& val, Run& run) {
    TrainConfig cfg = o.train;
    Adam<S> opt(model.params());
    FitOptions fo;
    if (!o.resume.empty()) {
        require_file(o.resume);
        const auto f = io::read_tensor_file(o.resume);
        const CheckpointInfo info = read_checkpoint_info(f);
        restore_parameters(f, model.params(), &opt);
        fo.start_epoch = info.epoch;
        std::cout << "resuming at epoch " << info.epoch + 1 << " of " << cfg.epochs << '\n';
    }
    fs::create_directories(run.dir / "checkpoints");
    const fs::path metrics = run.dir / "metrics.jsonl";
    std::ofstream log(metrics, fo.start_epoch > 0 ? std::ios::app : std::ios::trunc);
    const fs::path best = run.dir / "checkpoints" / "best.ckpt";
    const fs::path last = run.dir / "checkpoints" / "last.ckpt";
    const std::map<std::string, std::string> extra{{"train_config", to_json(cfg).dump()}};
    fo.on_epoch = [&](const EpochRecord& r) {
        nlohmann::json j{{"epoch", r.epoch}, {"train_loss", r.train_loss}, {"lr", r.lr}, {"seconds", r.seconds}};
        j["val_rel_l2"] = std::isnan(r.val_rel_l2) ? nlohmann::json(nullptr) : nlohmann::json(r.val_rel_l2);
        log << j.dump() << std::endl;
        save_checkpoint(last.string(), model, r.epoch, &opt, extra);
        std::cout << "epoch " << r.epoch << " loss " << r.train_loss << " val_rel_l2 " << r.val_rel_l2 << " lr " << r.lr
                  << std::endl;
    };
    fo.on_best = [&](std::size_t epoch) { save_checkpoint(best.string(), model, epoch, &opt, extra); };
    const FitResult res = fit<S>(model, train, val.bundles.samples.empty() ? nullptr : &val, cfg, &opt, fo);
    const fs::path final_path = run.dir / "model.ckpt";
    save_checkpoint(final_path.string(), model, res.best_epoch, static_cast<Adam<S>*>(nullptr), extra);
    run.artifact("metrics", metrics);
    run.artifact("checkpoint_best", best);
    run.artifact("checkpoint_last", last);
    run.artifact("model", final_path);
    std::cout << "best epoch " << res.best_epoch << " val_rel_l2 " << res.best_val << (res.stopped_on_budget ? " (time budget hit)" : "")
              << "\nmodel=" << final_path.string() << '\n';
}

template <class S>
int run_train(const TrainOptions& o, Run& run) {
    const fs::path dir(o.data);
    require_file(dir / "train.st");
    const TrajectoryDataset train_ds = io::load_dataset((dir / "train.st").string());
    TrajectoryDataset val_ds;
    if (fs::exists(dir / "val.st")) val_ds = io::load_dataset((dir / "val.st").string());
    if (train_ds.n_times < 2 * static_cast<std::size_t>(o.K))
        throw UsageError("--K " + std::to_string(o.K) + " needs at least " + std::to_string(2 * o.K) + " frames; dataset has " +
                         std::to_string(train_ds.n_times));
    const TrainingSet train = make_training_set(train_ds, static_cast<std::size_t>(o.K), o.k_neighbors);
    TrainingSet val;
    if (val_ds.n_traj > 0) val = make_training_set(val_ds, static_cast<std::size_t>(o.K), o.k_neighbors);
    std::ofstream(run.dir / "config.json") << nlohmann::json{{"train", to_json(o.train)}, {"model", o.model}}.dump(2) << '\n';
    if (o.model == "deeponet") {
        DeepONet<S> model(deeponet_config(o, train_ds), train_ds.sensors.positions);
        train_model<S>(model, o, train, val, run);
    } else {
        GraphDeepONet<S> model(model_config(o, train_ds.sensors.domain));
        train_model<S>(model, o, train, val, run);
    }
    run.artifact("config", run.dir / "config.json");
    return 0;
}

// ---------------------------------------------------------------------------
// eval

struct EvalOptions {
    std::string checkpoint;
    std::string data;
    std::string test;
    std::string protocol;
    std::string queries;
    double t_train_end = 2.0;
    double t_end = 4.0;
    int dim = 1;
    int per_axis = 16;
    int query_per_axis = 64;
    std::uint64_t seed = 0;
    std::string run_name;
};

void write_report(Run& run, const std::string& kv) {
    const fs::path p = run.dir / "report.txt";
    std::ofstream(p) << kv;
    run.artifact("report", p);
    std::cout << kv;
}

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

void profile_figures(Run& run, const TrajectoryDataset& truth, const RowMatrixXd& pred, std::size_t K, const std::string& tag) {
    fs::create_directories(run.dir / "figures");
    const std::size_t frames = static_cast<std::size_t>(pred.rows());
    const std::vector<std::size_t> picks{0, frames / 2, frames - 1};
    if (truth.sensors.dim() == 1) {
        std::vector<std::size_t> order(truth.n_nodes);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](auto a, auto b) { return truth.sensors.positions(a, 0) < truth.sensors.positions(b, 0); });
        svg::LinePlot plot;
        plot.title = "trajectory 0: truth (solid) vs prediction (dashed)";
        plot.xlabel = "x";
        plot.ylabel = "u";
        int c = 0;
        for (std::size_t f : picks) {
            svg::Series t, p;
            for (auto i : order) {
                t.x.push_back(truth.sensors.positions(i, 0));
                p.x.push_back(truth.sensors.positions(i, 0));
                t.y.push_back(truth.at(0, K + f, i));
                p.y.push_back(pred(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)));
            }
            t.label = "truth t=" + svg::num(truth.times[K + f]);
            p.label = "pred t=" + svg::num(truth.times[K + f]);
            t.color = p.color = kPalette[c++ % 6];
            p.dashed = true;
            plot.series.push_back(std::move(t));
            plot.series.push_back(std::move(p));
        }
        const fs::path path = run.dir / "figures" / (tag + "_profiles.svg");
        svg::write(path.string(), plot);
        run.artifact(tag + "_profiles", path);
    } else {
        svg::Heatmap h;
        const std::size_t f = frames - 1;
        h.title = "trajectory 0 at t=" + svg::num(truth.times[K + f]);
        for (std::size_t i = 0; i < truth.n_nodes; ++i) {
            h.x.push_back(truth.sensors.positions(i, 0));
            h.y.push_back(truth.sensors.positions(i, 1));
        }
        std::vector<double> t, p, e;
        for (std::size_t i = 0; i < truth.n_nodes; ++i) {
            t.push_back(truth.at(0, K + f, i));
            p.push_back(pred(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(i)));
            e.push_back(std::abs(p.back() - t.back()));
        }
        h.fields = {t, p, e};
        h.labels = {"truth", "prediction", "|error|"};
        const fs::path path = run.dir / "figures" / (tag + "_field.svg");
        svg::write(path.string(), h);
        run.artifact(tag + "_field", path);
    }
}

void block_error_figure(Run& run, const EvalReport& rep, const std::string& tag) {
    fs::create_directories(run.dir / "figures");
    svg::LinePlot plot;
    plot.title = "relative L2 per rollout block";
    plot.xlabel = "block";
    plot.ylabel = "relative L2";
    svg::Series s;
    for (std::size_t r = 0; r < rep.rel_l2_per_block.size(); ++r) {
        s.x.push_back(static_cast<double>(r + 1));
        s.y.push_back(rep.rel_l2_per_block[r]);
    }
    s.label = rep.protocol;
    plot.series.push_back(std::move(s));
    const fs::path path = run.dir / "figures" / (tag + "_blocks.svg");
    svg::write(path.string(), plot);
    run.artifact(tag + "_blocks", path);
}

TrajectoryDataset load_test(const EvalOptions& o) {
    fs::path p = !o.test.empty() ? fs::path(o.test) : fs::path(o.data) / "test.st";
    if (o.test.empty() && o.data.empty()) throw UsageError("eval needs --data or --test");
    require_file(p);
    return io::load_dataset(p.string());
}

template <class S, class Model>
int eval_model(Model& model, const EvalOptions& o, Run& run) {
    const TrajectoryDataset input = load_test(o);
    const auto K = static_cast<std::size_t>(model.config().K);
    std::string qspec = o.queries;
    if (qspec.empty()) qspec = o.protocol == "irregular-query" ? "offset:100" : "sensors";
    const auto queries = parse_queries(qspec, input.sensors.domain);
    TrajectoryDataset truth = input;
    if (queries) {
        // Prefer a generator-side truth file written next to the test split.
        const fs::path side = o.test.empty() ? fs::path(o.data) / "test_queries.st" : fs::path();
        bool loaded = false;
        if (!side.empty() && fs::exists(side)) {
            TrajectoryDataset cand = io::load_dataset(side.string());
            if (cand.sensors.positions.rows() == queries->positions.rows() &&
                cand.sensors.positions.isApprox(queries->positions, 1e-12)) {
                truth = std::move(cand);
                loaded = true;
            }
        }
        if (!loaded) truth = resample_dataset(input, *queries);
    }
    EvalReport rep;
    std::vector<RowMatrixXd> preds;
    if (o.protocol == "extrapolation") {
        rep = extrapolation_eval<S>(model, input, truth, o.t_train_end, o.t_end, &preds);
    } else {
        rep = evaluate_rollout<S>(model, input, truth, 0, &preds);
        rep.protocol = o.protocol;
    }
    rep.seed = o.seed;
    write_report(run, rep.to_kv());
    profile_figures(run, truth, preds.front(), K, o.protocol);
    block_error_figure(run, rep, o.protocol);
    if (o.protocol == "extrapolation" && truth.sensors.dim() == 1) {
        svg::LinePlot plot;
        plot.title = "trajectory 0: mean |error| per frame (shaded: extrapolation)";
        plot.xlabel = "t";
        plot.ylabel = "relative L2";
        plot.bands.push_back({o.t_train_end, o.t_end});
        svg::Series s;
        for (Eigen::Index f = 0; f < preds.front().rows(); ++f) {
            const double t = truth.times[K + static_cast<std::size_t>(f)];
            RowMatrixXd tr(1, preds.front().cols());
            for (Eigen::Index i = 0; i < tr.cols(); ++i) tr(0, i) = truth.at(0, K + static_cast<std::size_t>(f), static_cast<std::size_t>(i));
            s.x.push_back(t);
            s.y.push_back(relative_l2(preds.front().row(f), tr));
        }
        s.label = "per-frame";
        plot.series.push_back(std::move(s));
        const fs::path path = run.dir / "figures" / "extrapolation_error.svg";
        svg::write(path.string(), plot);
        run.artifact("extrapolation_error", path);
    }
    return 0;
}

template <class S>
int run_transport_demo(const EvalOptions& o, Run& run) {
    if (o.dim < 1 || o.dim > 3) throw UsageError("--dim must be 1, 2 or 3");
    const SensorSet sensors = confined_transport_grid(o.dim, o.per_axis);
    std::optional<GraphDeepONet<S>> model;
    if (!o.checkpoint.empty()) {
        require_file(o.checkpoint);
        model.emplace(load_graph_deeponet<S>(o.checkpoint));
    } else {
        ModelConfig c;
        c.K = 1;
        c.domain = sensors.domain;
        c.seed = o.seed;
        model.emplace(c);
    }
    const auto rep = transport_counterexample_demo(sensors, *model, o.query_per_axis);
    write_report(run, rep.to_kv());
    fs::create_directories(run.dir / "figures");
    svg::LinePlot plot;
    plot.title = "transport at t=2dt along x2..xd=1/2 (shaded: sensor band)";
    plot.xlabel = "x1";
    plot.ylabel = "u";
    plot.bands.push_back({0.0, 0.125});
    const char* names[2] = {"f1 = 0", "f2 = bump"};
    for (int c = 0; c < 2; ++c) {
        svg::Series t, m;
        for (Eigen::Index i = 0; i < rep.line_x.rows(); ++i) {
            t.x.push_back(rep.line_x(i, 0));
            m.x.push_back(rep.line_x(i, 0));
            t.y.push_back(rep.line_true(c, i));
            m.y.push_back(rep.line_model(c, i));
        }
        t.label = std::string("truth ") + names[c];
        m.label = std::string("GraphDeepONet ") + names[c];
        t.color = m.color = kPalette[c];
        m.dashed = true;
        plot.series.push_back(std::move(t));
        plot.series.push_back(std::move(m));
    }
    svg::Series best;
    for (Eigen::Index i = 0; i < rep.line_x.rows(); ++i) {
        best.x.push_back(rep.line_x(i, 0));
        best.y.push_back(0.5 * (rep.line_true(0, i) + rep.line_true(1, i)));
    }
    best.label = "best fixed-grid (c=1/2)";
    best.color = kPalette[2];
    plot.series.push_back(std::move(best));
    const fs::path path = run.dir / "figures" / "transport_demo.svg";
    svg::write(path.string(), plot);
    run.artifact("transport_demo", path);
    return 0;
}

int run_eval(const EvalOptions& o, Run& run) {
    if (o.protocol == "transport-demo") {
        if (!o.checkpoint.empty()) {
            require_file(o.checkpoint);
            const auto info = read_checkpoint_info(io::read_tensor_file(o.checkpoint));
            if (info.precision == Precision::float64) return run_transport_demo<double>(o, run);
        }
        return run_transport_demo<float>(o, run);
    }
    if (o.checkpoint.empty()) throw UsageError("--checkpoint is required for protocol " + o.protocol);
    require_file(o.checkpoint);
    const auto info = read_checkpoint_info(io::read_tensor_file(o.checkpoint));
    auto dispatch = [&]<class S>() {
        if (info.kind == "deeponet") {
            auto m = load_deeponet<S>(o.checkpoint);
            return eval_model<S>(m, o, run);
        }
        auto m = load_graph_deeponet<S>(o.checkpoint);
        return eval_model<S>(m, o, run);
    };
    return info.precision == Precision::float64 ? dispatch.template operator()<double>() : dispatch.template operator()<float>();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"GraphDeepONet: data generation, training and evaluation"};
    app.set_config("--config", "", "TOML config file; command-line flags override it");
    app.require_subcommand(1);

    GenOptions gen;
    auto* g = app.add_subcommand("gen-data", "Generate train/val/test datasets");
    g->add_option("--eq", gen.eq, "Equation")
        ->required()
        ->check(CLI::IsMember({"burgers", "advection1d", "advection2d", "shallow-water-ic"}));
    g->add_option("--n-train", gen.n_train, "Training trajectories")->capture_default_str();
    g->add_option("--n-val", gen.n_val, "Validation trajectories")->capture_default_str();
    g->add_option("--n-test", gen.n_test, "Test trajectories")->capture_default_str();
    g->add_option("--seed", gen.seed, "Base seed")->capture_default_str();
    g->add_option("--grid", gen.grid, "Sensor layout")->check(CLI::IsMember({"regular", "irregular"}))->capture_default_str();
    g->add_option("--n-sensors", gen.n_sensors, "Sensor count (0: equation default)")->capture_default_str();
    g->add_option("--n-candidates", gen.n_candidates, "Candidate grid size for irregular sensors (0: auto)")->capture_default_str();
    g->add_option("--n-times", gen.n_times, "Frames per trajectory (0: equation default)")->capture_default_str();
    g->add_option("--dt", gen.dt, "Advection frame spacing")->capture_default_str();
    g->add_option("--n-internal", gen.n_internal, "Burgers solver grid size")->capture_default_str();
    g->add_option("--alpha", gen.alpha, "Burgers nonlinear coefficient")->capture_default_str();
    g->add_option("--beta", gen.beta, "Burgers viscosity")->capture_default_str();
    g->add_option("--queries", gen.queries, "Also write test truth at regular:M or offset:M")->capture_default_str();
    g->add_option("--run-name", gen.run_name, "Run directory name under $GDON_RUN_ROOT");

    TrainOptions tr;
    auto* t = app.add_subcommand("train", "Train a model on a generated dataset");
    t->add_option("--data", tr.data, "Dataset directory (train.st, val.st)")->required();
    t->add_option("--model", tr.model, "Model")->check(CLI::IsMember({"graph-deeponet", "deeponet"}))->capture_default_str();
    t->add_option("--K", tr.K, "Frames per bundle")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--width", tr.width, "MLP width")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--d-lat", tr.d_lat, "Latent size")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--p", tr.p, "Number of basis functions")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--M", tr.M, "Message-passing steps")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--fourier-modes", tr.fourier_modes, "Trunk Fourier modes per periodic axis")->capture_default_str();
    t->add_option("--k-neighbors", tr.k_neighbors, "k for the k-NN graph (0: 6 in 1D, 8 in 2D)")->capture_default_str();
    t->add_option("--time-input", tr.time_input, "Decoder time input")
        ->check(CLI::IsMember({"absolute", "block_relative"}))
        ->capture_default_str();
    t->add_option("--epochs", tr.train.epochs, "Epochs")->capture_default_str();
    t->add_option("--lr", tr.train.lr, "Initial learning rate")->capture_default_str();
    t->add_option("--batch-size", tr.train.batch_size, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
    t->add_option("--lr-decay-factor", tr.train.lr_decay_factor, "LR factor per decay step")->capture_default_str();
    t->add_option("--lr-decay-every", tr.train.lr_decay_every, "Epochs between decays (0: epochs/4)")->capture_default_str();
    t->add_option("--grad-clip", tr.train.grad_clip, "Global gradient-norm clip (0: off)")->capture_default_str();
    t->add_option("--seed", tr.train.seed, "Seed")->capture_default_str();
    t->add_option("--max-seconds", tr.train.max_seconds, "Wall-clock budget (0: none)")->capture_default_str();
    t->add_flag("--shift-augment", tr.train.shift_augment, "Train on random periodic translations of each sample");
    t->add_option("--precision", tr.precision, "Floating point type")->check(CLI::IsMember({"float32", "float64"}))->capture_default_str();
    t->add_option("--resume", tr.resume, "Checkpoint to resume from (continues its epoch counter)");
    t->add_option("--run-name", tr.run_name, "Run directory name under $GDON_RUN_ROOT");

    EvalOptions ev;
    auto* e = app.add_subcommand("eval", "Evaluate a checkpoint");
    e->add_option("--protocol", ev.protocol, "Protocol")
        ->required()
        ->check(CLI::IsMember({"rollout", "extrapolation", "irregular-query", "transport-demo"}));
    e->add_option("--checkpoint", ev.checkpoint, "Model checkpoint");
    e->add_option("--data", ev.data, "Dataset directory (test.st)");
    e->add_option("--test", ev.test, "Test dataset file");
    e->add_option("--queries", ev.queries, "sensors | regular:M | offset:M");
    e->add_option("--t-train-end", ev.t_train_end, "End of the training window")->capture_default_str();
    e->add_option("--t-end", ev.t_end, "End of the extrapolation window")->capture_default_str();
    e->add_option("--dim", ev.dim, "Transport demo dimension")->capture_default_str();
    e->add_option("--per-axis", ev.per_axis, "Transport demo sensors per axis")->capture_default_str();
    e->add_option("--query-per-axis", ev.query_per_axis, "Transport demo query grid per axis")->capture_default_str();
    e->add_option("--seed", ev.seed, "Seed recorded in the report")->capture_default_str();
    e->add_option("--run-name", ev.run_name, "Run directory name under $GDON_RUN_ROOT");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& err) {
        return app.exit(err);
    } catch (const CLI::CallForAllHelp& err) {
        return app.exit(err);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return 2;
    }

    int rc = 0;
    fs::path run_dir;
    try {
        if (g->parsed()) {
            Run run = open_run("gen-data", gen.run_name);
            run_dir = run.dir;
            rc = cmd_gen_data(gen, run);
            write_manifest(run, app, *g, gen.seed);
            return rc;
        }
        if (t->parsed()) {
            Run run = open_run("train", tr.run_name);
            run_dir = run.dir;
            tr.train.precision = parse_precision(tr.precision);
            tr.train.validate();
            rc = tr.precision == "float64" ? run_train<double>(tr, run) : run_train<float>(tr, run);
            write_manifest(run, app, *t, tr.train.seed);
            return rc;
        }
        if (e->parsed()) {
            Run run = open_run("eval", ev.run_name);
            run_dir = run.dir;
            rc = run_eval(ev, run);
            write_manifest(run, app, *e, ev.seed);
            return rc;
        }
    } catch (const UsageError& err) {
        std::cerr << "usage error: " << err.what() << '\n';
        rc = 2;
    } catch (const InvalidArgument& err) {
        std::cerr << "invalid argument: " << err.what() << '\n';
        rc = 2;
    } catch (const FileNotFound& err) {
        std::cerr << err.what() << '\n';
        rc = 1;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        rc = 1;
    }
    std::error_code ec;
    if (!run_dir.empty() && fs::is_empty(run_dir, ec)) fs::remove(run_dir, ec);
    return rc;
}
