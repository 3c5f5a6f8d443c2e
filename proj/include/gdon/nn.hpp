#pragma once

// Named parameter storage and multilayer perceptrons on top of the tape.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gdon/autodiff.hpp"
#include "gdon/error.hpp"

namespace gdon::nn {

using ad::Activation;
using ad::Var;

/// Flat list of named tensors plus matching gradient buffers.
template <class S>
class ParameterStore {
public:
    using Mat = ad::Matrix<S>;

    std::size_t add(std::string name, Mat value) {
        if (index_.count(name)) throw InvalidArgument("duplicate parameter '" + name + "'");
        index_[name] = values_.size();
        names_.push_back(std::move(name));
        grads_.push_back(Mat::Zero(value.rows(), value.cols()));
        values_.push_back(std::move(value));
        return values_.size() - 1;
    }

    std::size_t size() const { return values_.size(); }
    const std::string& name(std::size_t i) const { return names_[i]; }
    Mat& value(std::size_t i) { return values_[i]; }
    const Mat& value(std::size_t i) const { return values_[i]; }
    Mat& grad(std::size_t i) { return grads_[i]; }
    const Mat& grad(std::size_t i) const { return grads_[i]; }

    std::size_t find(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw InvalidArgument("no parameter named '" + name + "'");
        return it->second;
    }

    void zero_grad() {
        for (auto& g : grads_) g.setZero();
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (const auto& v : values_) n += static_cast<std::size_t>(v.size());
        return n;
    }

    double norm() const {
        double s = 0;
        for (const auto& v : values_) s += static_cast<double>(v.squaredNorm());
        return std::sqrt(s);
    }

    double grad_norm() const {
        double s = 0;
        for (const auto& g : grads_) s += static_cast<double>(g.squaredNorm());
        return std::sqrt(s);
    }

    /// Registers leaf `i` on the tape. With track_grad the gradient flows into grad(i).
    Var leaf(ad::Tape<S>& tape, std::size_t i, bool track_grad) {
        return tape.parameter(values_[i], track_grad ? &grads_[i] : nullptr);
    }

private:
    std::vector<std::string> names_;
    std::vector<Mat> values_;
    std::vector<Mat> grads_;
    std::map<std::string, std::size_t> index_;
};

/// Width/depth of one MLP. depth counts linear layers (depth 2 = in->width->out).
struct MlpSpec {
    int width = 128;
    int depth = 2;
};

/// Fully connected network: linear layers with an activation between them
/// and none after the last one.
template <class S>
class Mlp {
public:
    using Mat = ad::Matrix<S>;

    Mlp() = default;

    Mlp(ParameterStore<S>& store, const std::string& name, int in, int out, MlpSpec spec, Activation act,
        std::mt19937_64& rng, bool zero_last = false)
        : in_(in), out_(out), act_(act) {
        if (in < 1 || out < 1 || spec.width < 1 || spec.depth < 1) {
            throw InvalidArgument("MLP '" + name + "' needs positive sizes");
        }
        int fan_in = in;
        for (int l = 0; l < spec.depth; ++l) {
            const bool last = l + 1 == spec.depth;
            const int fan_out = last ? out : spec.width;
            const S bound = S(1) / std::sqrt(static_cast<S>(fan_in));
            std::uniform_real_distribution<double> dist(-static_cast<double>(bound), static_cast<double>(bound));
            Mat w(fan_in, fan_out);
            Mat b(1, fan_out);
            for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<S>(dist(rng));
            for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = static_cast<S>(dist(rng));
            if (last && zero_last) {
                w.setZero();
                b.setZero();
            }
            const std::string base = name + "." + std::to_string(l);
            weights_.push_back(store.add(base + ".weight", std::move(w)));
            biases_.push_back(store.add(base + ".bias", std::move(b)));
            fan_in = fan_out;
        }
    }

    int in_features() const { return in_; }
    int out_features() const { return out_; }
    std::size_t num_layers() const { return weights_.size(); }
    std::size_t weight_index(std::size_t layer) const { return weights_[layer]; }
    std::size_t bias_index(std::size_t layer) const { return biases_[layer]; }

    /// Full forward pass on input x (rows = samples).
    Var operator()(ad::Tape<S>& tape, ParameterStore<S>& store, Var x, bool track_grad) const {
        return tail(tape, store, first_layer(tape, store, x, track_grad), track_grad);
    }

    /// x * W0 + b0 (pre-activation of the first layer).
    Var first_layer(ad::Tape<S>& tape, ParameterStore<S>& store, Var x, bool track_grad) const {
        Var w = store.leaf(tape, weights_[0], track_grad);
        Var b = store.leaf(tape, biases_[0], track_grad);
        return tape.add_row(tape.matmul(x, w), b);
    }

    /// Product of x with rows [row0, row0 + x.cols) of the first weight
    /// matrix: the contribution of one block of a concatenated input. Lets
    /// callers evaluate MLP([a, b, c]) without materialising the
    /// concatenation; the first-layer bias is applied separately.
    Var first_layer_block(ad::Tape<S>& tape, ParameterStore<S>& store, Var x, Eigen::Index row0,
                          bool track_grad) const {
        Var w = store.leaf(tape, weights_[0], track_grad);
        Var wb = tape.slice_rows(w, row0, tape.value(x).cols());
        return tape.matmul(x, wb);
    }

    Var first_bias(ad::Tape<S>& tape, ParameterStore<S>& store, Var pre, bool track_grad) const {
        return tape.add_row(pre, store.leaf(tape, biases_[0], track_grad));
    }

    /// Remaining layers given the first-layer pre-activation.
    Var tail(ad::Tape<S>& tape, ParameterStore<S>& store, Var pre, bool track_grad) const {
        Var h = pre;
        for (std::size_t l = 1; l < weights_.size(); ++l) {
            h = tape.activate(h, act_);
            Var w = store.leaf(tape, weights_[l], track_grad);
            Var b = store.leaf(tape, biases_[l], track_grad);
            h = tape.add_row(tape.matmul(h, w), b);
        }
        return h;
    }

    /// Zeroes the last layer so the network outputs exactly 0.
    void zero_output(ParameterStore<S>& store) const {
        store.value(weights_.back()).setZero();
        store.value(biases_.back()).setZero();
    }

    void zero_all(ParameterStore<S>& store) const {
        for (auto i : weights_) store.value(i).setZero();
        for (auto i : biases_) store.value(i).setZero();
    }

private:
    int in_ = 0;
    int out_ = 0;
    Activation act_ = Activation::gelu;
    std::vector<std::size_t> weights_;
    std::vector<std::size_t> biases_;
};

}  // namespace gdon::nn
