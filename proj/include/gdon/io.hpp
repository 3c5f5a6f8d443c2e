#pragma once

// Self-describing tensor files in the safetensors layout:
//   u64 little-endian header size | JSON header | raw tensor bytes
// The header maps tensor names to {dtype, shape, data_offsets} and carries
// string metadata under "__metadata__". Used for datasets and checkpoints.

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "gdon/data.hpp"
#include "gdon/error.hpp"
#include "gdon/geometry.hpp"

namespace gdon::io {

static_assert(std::endian::native == std::endian::little, "tensor files assume a little-endian host");

struct Tensor {
    std::string dtype;  // "F32", "F64", "I64"
    std::vector<std::size_t> shape;
    std::vector<unsigned char> bytes;

    std::size_t numel() const {
        std::size_t n = 1;
        for (auto s : shape) n *= s;
        return n;
    }

    template <class T>
    static Tensor from(const std::vector<T>& values, std::vector<std::size_t> shape) {
        Tensor t;
        t.dtype = dtype_of<T>();
        t.shape = std::move(shape);
        if (t.numel() != values.size()) throw InvalidArgument("tensor shape does not match value count");
        t.bytes.resize(values.size() * sizeof(T));
        if (!values.empty()) std::memcpy(t.bytes.data(), values.data(), t.bytes.size());
        return t;
    }

    template <class T>
    std::vector<T> as() const {
        if (dtype != dtype_of<T>()) throw InvalidArgument("tensor dtype is " + dtype + ", expected " + dtype_of<T>());
        std::vector<T> out(bytes.size() / sizeof(T));
        if (!out.empty()) std::memcpy(out.data(), bytes.data(), bytes.size());
        return out;
    }

    template <class T>
    static std::string dtype_of() {
        if constexpr (std::is_same_v<T, float>) return "F32";
        else if constexpr (std::is_same_v<T, double>) return "F64";
        else if constexpr (std::is_same_v<T, std::int64_t>) return "I64";
        else static_assert(sizeof(T) == 0, "unsupported tensor element type");
    }
};

struct TensorFile {
    std::map<std::string, Tensor> tensors;
    std::map<std::string, std::string> metadata;

    const Tensor& tensor(const std::string& name) const {
        auto it = tensors.find(name);
        if (it == tensors.end()) throw SchemaViolation(name, "required array is missing");
        return it->second;
    }
    const std::string& attr(const std::string& name) const {
        auto it = metadata.find(name);
        if (it == metadata.end()) throw SchemaViolation(name, "required attribute is missing");
        return it->second;
    }
};

inline std::size_t dtype_size(const std::string& dtype) {
    if (dtype == "F32") return 4;
    if (dtype == "F64" || dtype == "I64") return 8;
    throw SchemaViolation("dtype", "unsupported dtype " + dtype);
}

inline void write_tensor_file(const std::string& path, const TensorFile& file) {
    nlohmann::json header = nlohmann::json::object();
    std::size_t offset = 0;
    for (const auto& [name, t] : file.tensors) {
        header[name] = {{"dtype", t.dtype}, {"shape", t.shape}, {"data_offsets", {offset, offset + t.bytes.size()}}};
        offset += t.bytes.size();
    }
    if (!file.metadata.empty()) header["__metadata__"] = file.metadata;
    std::string text = header.dump();
    while (text.size() % 8 != 0) text.push_back(' ');
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    const std::uint64_t n = text.size();
    out.write(reinterpret_cast<const char*>(&n), sizeof(n));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, t] : file.tensors) {
        out.write(reinterpret_cast<const char*>(t.bytes.data()), static_cast<std::streamsize>(t.bytes.size()));
    }
    if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

inline TensorFile read_tensor_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    std::uint64_t n = 0;
    in.read(reinterpret_cast<char*>(&n), sizeof(n));
    if (!in || n > (1ULL << 32)) throw SchemaViolation("header", "truncated or corrupt header in '" + path + "'");
    std::string text(n, '\0');
    in.read(text.data(), static_cast<std::streamsize>(n));
    if (!in) throw SchemaViolation("header", "truncated header in '" + path + "'");
    std::vector<unsigned char> body((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw SchemaViolation("header", std::string("unparseable header: ") + e.what());
    }
    TensorFile file;
    for (auto it = header.begin(); it != header.end(); ++it) {
        if (it.key() == "__metadata__") {
            for (auto m = it->begin(); m != it->end(); ++m) file.metadata[m.key()] = m->get<std::string>();
            continue;
        }
        Tensor t;
        t.dtype = it->at("dtype").get<std::string>();
        t.shape = it->at("shape").get<std::vector<std::size_t>>();
        const auto off = it->at("data_offsets").get<std::vector<std::size_t>>();
        if (off.size() != 2 || off[1] < off[0] || off[1] > body.size()) {
            throw SchemaViolation(it.key(), "data offsets out of range");
        }
        if (off[1] - off[0] != t.numel() * dtype_size(t.dtype)) {
            throw SchemaViolation(it.key(), "byte size does not match shape");
        }
        t.bytes.assign(body.begin() + static_cast<std::ptrdiff_t>(off[0]),
                       body.begin() + static_cast<std::ptrdiff_t>(off[1]));
        file.tensors.emplace(it.key(), std::move(t));
    }
    return file;
}

/// Shortest text that parses back to exactly the same double.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& field) {
    double v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc()) throw SchemaViolation(field, "not a number: '" + s + "'");
    return v;
}

inline std::string join_doubles(const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s;
}

inline std::vector<double> split_doubles(const std::string& s, const std::string& field) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(parse_double(item, field));
    return out;
}

// ---------------------------------------------------------------------------
// Dataset schema: arrays u (F32 [traj, T, N, C]), x (F64 [N, d]),
// times (F64 [T]), optional extra.<name> (F64); attributes equation, dt,
// domain_lower, domain_upper, periodic, seed, params plus free metadata.

inline void save_dataset(const TrajectoryDataset& ds, const std::string& path) {
    ds.validate();
    TensorFile f;
    f.tensors["u"] = Tensor::from(ds.u, {ds.n_traj, ds.n_times, ds.n_nodes, ds.n_channels});
    std::vector<double> x(ds.sensors.positions.data(), ds.sensors.positions.data() + ds.sensors.positions.size());
    f.tensors["x"] = Tensor::from(x, {ds.n_nodes, static_cast<std::size_t>(ds.sensors.dim())});
    f.tensors["times"] = Tensor::from(ds.times, {ds.n_times});
    for (const auto& [name, arr] : ds.extras) f.tensors["extra." + name] = Tensor::from(arr.data, arr.shape);
    f.metadata = ds.meta;
    f.metadata["dt"] = format_double(ds.dt);
    f.metadata["domain_lower"] = join_doubles(ds.sensors.domain.lower);
    f.metadata["domain_upper"] = join_doubles(ds.sensors.domain.upper);
    std::string per;
    for (std::size_t c = 0; c < ds.sensors.domain.periodic.size(); ++c) {
        per += (c ? "," : "") + std::string(ds.sensors.domain.periodic[c] ? "1" : "0");
    }
    f.metadata["periodic"] = per;
    if (!f.metadata.count("equation")) f.metadata["equation"] = "unknown";
    if (!f.metadata.count("seed")) f.metadata["seed"] = "0";
    if (!f.metadata.count("params")) f.metadata["params"] = "";
    write_tensor_file(path, f);
}

inline TrajectoryDataset load_dataset(const std::string& path) {
    const TensorFile f = read_tensor_file(path);
    const Tensor& u = f.tensor("u");
    const Tensor& x = f.tensor("x");
    const Tensor& times = f.tensor("times");
    for (const char* key : {"equation", "dt", "domain_lower", "domain_upper", "periodic", "seed", "params"}) {
        (void)f.attr(key);
    }
    if (u.shape.size() != 4) throw SchemaViolation("u", "expected 4 dimensions [traj, T, N, C]");
    if (x.shape.size() != 2) throw SchemaViolation("x", "expected 2 dimensions [N, d]");
    if (times.shape.size() != 1) throw SchemaViolation("times", "expected 1 dimension");

    const auto lower = split_doubles(f.attr("domain_lower"), "domain_lower");
    const auto upper = split_doubles(f.attr("domain_upper"), "domain_upper");
    std::vector<bool> periodic;
    {
        std::stringstream ss(f.attr("periodic"));
        std::string item;
        while (std::getline(ss, item, ',')) periodic.push_back(item == "1");
    }
    DomainSpec dom(lower, upper, periodic);
    const auto xv = x.as<double>();
    RowMatrixXd pos(static_cast<Eigen::Index>(x.shape[0]), static_cast<Eigen::Index>(x.shape[1]));
    std::copy(xv.begin(), xv.end(), pos.data());

    TrajectoryDataset ds;
    ds.n_traj = u.shape[0];
    ds.n_times = u.shape[1];
    ds.n_nodes = u.shape[2];
    ds.n_channels = u.shape[3];
    ds.u = u.as<float>();
    ds.sensors = SensorSet(std::move(pos), dom);
    ds.times = times.as<double>();
    ds.dt = parse_double(f.attr("dt"), "dt");
    for (const auto& [k, v] : f.metadata) {
        if (k != "dt" && k != "domain_lower" && k != "domain_upper" && k != "periodic") ds.meta[k] = v;
    }
    for (const auto& [name, t] : f.tensors) {
        if (name.rfind("extra.", 0) == 0) ds.extras[name.substr(6)] = NamedArray{t.shape, t.as<double>()};
    }
    ds.validate();
    return ds;
}

}  // namespace gdon::io
