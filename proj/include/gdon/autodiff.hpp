#pragma once

// Reverse-mode automatic differentiation over dense row-major matrices.
//
// A Tape records every operation of one forward pass. Values live on the
// tape; a Var is just an index. backward() walks the tape in reverse and
// accumulates gradients, pushing parameter gradients into caller-owned
// buffers registered through Tape::parameter().

#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <unsupported/Eigen/SpecialFunctions>

#include "gdon/error.hpp"

namespace gdon::ad {

template <class S>
using Matrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct Var {
    std::size_t id = static_cast<std::size_t>(-1);
};

enum class Activation { gelu, tanh, relu };

inline Activation parse_activation(const std::string& name) {
    if (name == "gelu") return Activation::gelu;
    if (name == "tanh") return Activation::tanh;
    if (name == "relu") return Activation::relu;
    throw InvalidArgument("unknown activation '" + name + "'");
}

inline std::string to_string(Activation a) {
    switch (a) {
        case Activation::gelu: return "gelu";
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
    }
    return "gelu";
}

template <class S>
class Tape {
public:
    using Mat = Matrix<S>;

    Tape() { nodes_.reserve(256); }
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    /// A value that never receives a gradient.
    Var constant(Mat value) { return push(std::move(value), false, {}); }

    /// A trainable leaf. On backward, its gradient is added into *grad_sink
    /// (which must outlive the tape and have the same shape). A null sink
    /// makes it behave like a constant.
    Var parameter(const Mat& value, Mat* grad_sink) {
        Var v = push(value, grad_sink != nullptr, {});
        nodes_[v.id].sink = grad_sink;
        return v;
    }

    const Mat& value(Var v) const { return nodes_[v.id].value; }
    std::size_t size() const { return nodes_.size(); }

    /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
    void backward(Var out) {
        if (value(out).size() != 1) throw InvalidArgument("backward() needs a scalar output");
        for (auto& n : nodes_) n.grad.resize(0, 0);
        nodes_[out.id].grad = Mat::Ones(1, 1);
        for (std::size_t i = out.id + 1; i-- > 0;) {
            Node& n = nodes_[i];
            if (!n.needs_grad || n.grad.size() == 0) continue;
            if (n.back) n.back(n.grad);
            if (n.sink) *n.sink += n.grad;
        }
    }

    // ---- linear algebra -------------------------------------------------

    Var matmul(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.cols() != B.rows()) throw InvalidArgument(shape_msg("matmul", A, B));
        Mat out = A * B;
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a).noalias() += g * value(b).transpose();
            if (needs(b)) grad_of(b).noalias() += value(a).transpose() * g;
        });
    }

    /// a + row vector b broadcast over rows.
    Var add_row(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (B.rows() != 1 || B.cols() != A.cols()) throw InvalidArgument(shape_msg("add_row", A, B));
        Mat out = A.rowwise() + B.row(0);
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a) += g;
            if (needs(b)) grad_of(b) += g.colwise().sum();
        });
    }

    Var add(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument(shape_msg("add", A, B));
        Mat out = A + B;
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a) += g;
            if (needs(b)) grad_of(b) += g;
        });
    }

    Var sub(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument(shape_msg("sub", A, B));
        Mat out = A - B;
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a) += g;
            if (needs(b)) grad_of(b) -= g;
        });
    }

    /// Elementwise product.
    Var mul(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument(shape_msg("mul", A, B));
        Mat out = A.cwiseProduct(B);
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a) += g.cwiseProduct(value(b));
            if (needs(b)) grad_of(b) += g.cwiseProduct(value(a));
        });
    }

    Var scale(Var a, S s) {
        Mat out = value(a) * s;
        return push(std::move(out), needs(a), [this, a, s](const Mat& g) { grad_of(a) += g * s; });
    }

    /// Row-wise inner product: out(r) = <a.row(r), b.row(r)>, shape (n, 1).
    Var rowwise_dot(Var a, Var b) {
        const Mat& A = value(a);
        const Mat& B = value(b);
        if (A.rows() != B.rows() || A.cols() != B.cols()) throw InvalidArgument(shape_msg("rowwise_dot", A, B));
        Mat out = A.cwiseProduct(B).rowwise().sum();
        return push(std::move(out), any(a, b), [this, a, b](const Mat& g) {
            if (needs(a)) grad_of(a).array() += value(b).array().colwise() * g.col(0).array();
            if (needs(b)) grad_of(b).array() += value(a).array().colwise() * g.col(0).array();
        });
    }

    Var activate(Var a, Activation act) {
        const Mat& A = value(a);
        Mat out(A.rows(), A.cols());
        switch (act) {
            case Activation::gelu:
                out = (S(0.5) * A.array() * (S(1) + (A.array() * inv_sqrt2()).erf())).matrix();
                break;
            case Activation::tanh: out = A.array().tanh().matrix(); break;
            case Activation::relu: out = A.cwiseMax(S(0)); break;
        }
        return push(std::move(out), needs(a), [this, a, act](const Mat& g) {
            const Mat& X = value(a);
            Mat& ga = grad_of(a);
            switch (act) {
                case Activation::gelu:
                    ga.array() += g.array() * (S(0.5) * (S(1) + (X.array() * inv_sqrt2()).erf()) +
                                               X.array() * (S(-0.5) * X.array().square()).exp() * inv_sqrt2pi());
                    break;
                case Activation::tanh:
                    ga += g.binaryExpr(X, [](S gv, S x) {
                        const S t = std::tanh(x);
                        return gv * (S(1) - t * t);
                    });
                    break;
                case Activation::relu:
                    ga += g.binaryExpr(X, [](S gv, S x) { return x > S(0) ? gv : S(0); });
                    break;
            }
        });
    }

    // ---- structural -----------------------------------------------------

    /// out.row(r) = a.row(index[r]).
    Var gather_rows(Var a, std::vector<int> index) {
        const Mat& A = value(a);
        Mat out(static_cast<Eigen::Index>(index.size()), A.cols());
        for (std::size_t r = 0; r < index.size(); ++r) {
            if (index[r] < 0 || index[r] >= A.rows()) throw InvalidArgument("gather_rows: index out of range");
            out.row(r) = A.row(index[r]);
        }
        return push(std::move(out), needs(a), [this, a, idx = std::move(index)](const Mat& g) {
            Mat& ga = grad_of(a);
            for (std::size_t r = 0; r < idx.size(); ++r) ga.row(idx[r]) += g.row(r);
        });
    }

    /// out.row(index[r]) += a.row(r), out has n_rows rows (sum aggregation).
    Var scatter_add_rows(Var a, std::vector<int> index, Eigen::Index n_rows) {
        const Mat& A = value(a);
        if (static_cast<Eigen::Index>(index.size()) != A.rows()) throw InvalidArgument("scatter_add_rows: size mismatch");
        Mat out = Mat::Zero(n_rows, A.cols());
        for (std::size_t r = 0; r < index.size(); ++r) {
            if (index[r] < 0 || index[r] >= n_rows) throw InvalidArgument("scatter_add_rows: index out of range");
            out.row(index[r]) += A.row(r);
        }
        return push(std::move(out), needs(a), [this, a, idx = std::move(index)](const Mat& g) {
            Mat& ga = grad_of(a);
            for (std::size_t r = 0; r < idx.size(); ++r) ga.row(r) += g.row(idx[r]);
        });
    }

    Var concat_cols(const std::vector<Var>& parts) {
        if (parts.empty()) throw InvalidArgument("concat_cols: no inputs");
        const Eigen::Index rows = value(parts[0]).rows();
        Eigen::Index cols = 0;
        bool ng = false;
        for (Var p : parts) {
            if (value(p).rows() != rows) throw InvalidArgument("concat_cols: row counts differ");
            cols += value(p).cols();
            ng = ng || needs(p);
        }
        Mat out(rows, cols);
        Eigen::Index c0 = 0;
        for (Var p : parts) {
            out.middleCols(c0, value(p).cols()) = value(p);
            c0 += value(p).cols();
        }
        return push(std::move(out), ng, [this, parts](const Mat& g) {
            Eigen::Index c = 0;
            for (Var p : parts) {
                const Eigen::Index w = value(p).cols();
                if (needs(p)) grad_of(p) += g.middleCols(c, w);
                c += w;
            }
        });
    }

    Var concat_rows(const std::vector<Var>& parts) {
        if (parts.empty()) throw InvalidArgument("concat_rows: no inputs");
        const Eigen::Index cols = value(parts[0]).cols();
        Eigen::Index rows = 0;
        bool ng = false;
        for (Var p : parts) {
            if (value(p).cols() != cols) throw InvalidArgument("concat_rows: column counts differ");
            rows += value(p).rows();
            ng = ng || needs(p);
        }
        Mat out(rows, cols);
        Eigen::Index r0 = 0;
        for (Var p : parts) {
            out.middleRows(r0, value(p).rows()) = value(p);
            r0 += value(p).rows();
        }
        return push(std::move(out), ng, [this, parts](const Mat& g) {
            Eigen::Index r = 0;
            for (Var p : parts) {
                const Eigen::Index h = value(p).rows();
                if (needs(p)) grad_of(p) += g.middleRows(r, h);
                r += h;
            }
        });
    }

    Var slice_rows(Var a, Eigen::Index start, Eigen::Index count) {
        const Mat& A = value(a);
        if (start < 0 || count < 0 || start + count > A.rows()) throw InvalidArgument("slice_rows: out of range");
        Mat out = A.middleRows(start, count);
        return push(std::move(out), needs(a), [this, a, start, count](const Mat& g) {
            grad_of(a).middleRows(start, count) += g;
        });
    }

    Var slice_cols(Var a, Eigen::Index start, Eigen::Index count) {
        const Mat& A = value(a);
        if (start < 0 || count < 0 || start + count > A.cols()) throw InvalidArgument("slice_cols: out of range");
        Mat out = A.middleCols(start, count);
        return push(std::move(out), needs(a), [this, a, start, count](const Mat& g) {
            grad_of(a).middleCols(start, count) += g;
        });
    }

    /// Stacks `reps` copies of a vertically.
    Var tile_rows(Var a, Eigen::Index reps) {
        const Mat& A = value(a);
        Mat out(A.rows() * reps, A.cols());
        for (Eigen::Index r = 0; r < reps; ++r) out.middleRows(r * A.rows(), A.rows()) = A;
        return push(std::move(out), needs(a), [this, a, reps](const Mat& g) {
            Mat& ga = grad_of(a);
            const Eigen::Index h = ga.rows();
            for (Eigen::Index r = 0; r < reps; ++r) ga += g.middleRows(r * h, h);
        });
    }

    // ---- segment reductions ---------------------------------------------
    // `offsets` has n_segments + 1 entries; segment s spans rows
    // [offsets[s], offsets[s+1]).

    /// Softmax over the rows of each segment, independently per column.
    Var segment_softmax(Var a, std::vector<Eigen::Index> offsets) {
        const Mat& A = value(a);
        check_offsets(offsets, A.rows(), "segment_softmax");
        Mat out(A.rows(), A.cols());
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            const Eigen::Index r0 = offsets[s];
            const Eigen::Index n = offsets[s + 1] - r0;
            if (n == 0) continue;
            auto blk = A.middleRows(r0, n);
            Eigen::Matrix<S, 1, Eigen::Dynamic> mx = blk.colwise().maxCoeff();
            Mat e = (blk.rowwise() - mx).array().exp().matrix();
            Eigen::Matrix<S, 1, Eigen::Dynamic> z = e.colwise().sum();
            out.middleRows(r0, n) = e.array().rowwise() / z.array();
        }
        return push(std::move(out), needs(a), [this, a, off = std::move(offsets), self = Var{nodes_.size()}](const Mat& g) {
            const Mat& Y = value(self);
            Mat& ga = grad_of(a);
            for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                const Eigen::Index r0 = off[s];
                const Eigen::Index n = off[s + 1] - r0;
                if (n == 0) continue;
                auto y = Y.middleRows(r0, n);
                auto gy = g.middleRows(r0, n);
                Eigen::Matrix<S, 1, Eigen::Dynamic> dot = y.cwiseProduct(gy).colwise().sum();
                ga.middleRows(r0, n) += (y.array() * (gy.rowwise() - dot).array()).matrix();
            }
        });
    }

    /// Sum of the rows of each segment; output has one row per segment.
    Var segment_sum(Var a, std::vector<Eigen::Index> offsets) {
        const Mat& A = value(a);
        check_offsets(offsets, A.rows(), "segment_sum");
        Mat out(static_cast<Eigen::Index>(offsets.size()) - 1, A.cols());
        for (std::size_t s = 0; s + 1 < offsets.size(); ++s) {
            out.row(s) = A.middleRows(offsets[s], offsets[s + 1] - offsets[s]).colwise().sum();
        }
        return push(std::move(out), needs(a), [this, a, off = std::move(offsets)](const Mat& g) {
            Mat& ga = grad_of(a);
            for (std::size_t s = 0; s + 1 < off.size(); ++s) {
                ga.middleRows(off[s], off[s + 1] - off[s]).rowwise() += g.row(s);
            }
        });
    }

    // ---- losses -----------------------------------------------------------

    /// Mean squared difference to a constant target; 1x1 output.
    Var mse(Var a, const Mat& target) {
        const Mat& A = value(a);
        if (A.rows() != target.rows() || A.cols() != target.cols()) throw InvalidArgument(shape_msg("mse", A, target));
        const S n = static_cast<S>(A.size());
        Mat out(1, 1);
        out(0, 0) = (A - target).squaredNorm() / n;
        return push(std::move(out), needs(a), [this, a, target, n](const Mat& g) {
            grad_of(a) += (value(a) - target) * (S(2) * g(0, 0) / n);
        });
    }

    Var sum_all(Var a) {
        Mat out(1, 1);
        out(0, 0) = value(a).sum();
        return push(std::move(out), needs(a), [this, a](const Mat& g) { grad_of(a).array() += g(0, 0); });
    }

private:
    struct Node {
        Mat value;
        Mat grad;
        std::function<void(const Mat&)> back;
        bool needs_grad = false;
        Mat* sink = nullptr;
    };

    static constexpr S inv_sqrt2() { return static_cast<S>(0.70710678118654752440); }
    static constexpr S inv_sqrt2pi() { return static_cast<S>(0.39894228040143267794); }

    Var push(Mat value, bool needs_grad, std::function<void(const Mat&)> back) {
        Node n;
        n.value = std::move(value);
        n.needs_grad = needs_grad;
        if (needs_grad) n.back = std::move(back);
        nodes_.push_back(std::move(n));
        return Var{nodes_.size() - 1};
    }

    bool needs(Var v) const { return nodes_[v.id].needs_grad; }
    bool any(Var a, Var b) const { return needs(a) || needs(b); }

    Mat& grad_of(Var v) {
        Node& n = nodes_[v.id];
        if (n.grad.size() == 0) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
        return n.grad;
    }

    static void check_offsets(const std::vector<Eigen::Index>& off, Eigen::Index rows, const char* op) {
        if (off.size() < 2 || off.front() != 0 || off.back() != rows) {
            throw InvalidArgument(std::string(op) + ": offsets must start at 0 and end at the row count");
        }
        for (std::size_t i = 1; i < off.size(); ++i) {
            if (off[i] < off[i - 1]) throw InvalidArgument(std::string(op) + ": offsets must be non-decreasing");
        }
    }

    static std::string shape_msg(const char* op, const Mat& a, const Mat& b) {
        return std::string(op) + ": incompatible shapes (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
               ") and (" + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")";
    }

    std::vector<Node> nodes_;
};

}  // namespace gdon::ad
