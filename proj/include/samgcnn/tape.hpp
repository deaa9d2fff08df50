#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <memory>
#include <random>

#include "samgcnn/tensor.hpp"

namespace samgcnn {

enum class Padding { kValid, kSame };
enum class Mode { kTrain, kInfer };

// Running statistics for one batch-norm site. The learnable gamma/beta
// vectors are ordinary parameters supplied to the op as tape leaves.
template <typename Scalar>
struct BatchNormState {
    Tensor<Scalar> running_mean;  // [C]
    Tensor<Scalar> running_var;   // [C]
    Scalar momentum = Scalar(0.9);
    Scalar epsilon = Scalar(1e-5);

    explicit BatchNormState(int channels = 0) { resize(channels); }
    void resize(int channels) {
        running_mean = Tensor<Scalar>({channels});
        running_var = Tensor<Scalar>({channels});
        running_var.values.setOnes();
    }
    int channels() const {
        return running_mean.shape.empty() ? 0 : running_mean.shape[0];
    }
    template <typename Other>
    BatchNormState<Other> cast() const {
        BatchNormState<Other> out;
        out.running_mean = running_mean.template cast<Other>();
        out.running_var = running_var.template cast<Other>();
        out.momentum = static_cast<Other>(momentum);
        out.epsilon = static_cast<Other>(epsilon);
        return out;
    }
};

// Reverse-mode tape over dense tensors. Nodes are recorded in execution
// order; backward() replays them in reverse, accumulating gradients
// across fan-out. One tape per training step; not thread-safe.
template <typename Scalar>
class Tape {
  public:
    using Array = typename Tensor<Scalar>::Array;
    using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    struct Node {
        Tensor<Scalar> value;
        Array grad;  // same length as value
        std::function<void()> backprop;
    };
    using NodeRef = Node*;

    NodeRef leaf(Tensor<Scalar> value) {
        Node& n = nodes_.emplace_back();
        n.value = std::move(value);
        n.grad = Array::Zero(n.value.size());
        return &n;
    }

    NodeRef add(NodeRef a, NodeRef b) {
        require_same_shape(a, b, "add");
        Node* n = fresh(a->value.shape);
        n->value.values = a->value.values + b->value.values;
        n->backprop = [n, a, b] {
            a->grad += n->grad;
            b->grad += n->grad;
        };
        return n;
    }

    NodeRef elementwise_mul(NodeRef a, NodeRef b) {
        require_same_shape(a, b, "elementwise_mul");
        Node* n = fresh(a->value.shape);
        n->value.values = a->value.values * b->value.values;
        n->backprop = [n, a, b] {
            a->grad += n->grad * b->value.values;
            b->grad += n->grad * a->value.values;
        };
        return n;
    }

    NodeRef relu(NodeRef x) {
        Node* n = fresh(x->value.shape);
        n->value.values = x->value.values.max(Scalar(0));
        n->backprop = [n, x] {
            x->grad += n->grad * (x->value.values > Scalar(0)).template cast<Scalar>();
        };
        return n;
    }

    NodeRef sigmoid(NodeRef x) {
        Node* n = fresh(x->value.shape);
        n->value.values = Scalar(1) / (Scalar(1) + (-x->value.values).exp());
        n->backprop = [n, x] {
            const Array& y = n->value.values;
            x->grad += n->grad * y * (Scalar(1) - y);
        };
        return n;
    }

    // out = x . w + b over the last axis; leading axes are batch-like.
    NodeRef dense(NodeRef x, NodeRef w, NodeRef b) {
        if (w->value.rank() != 2) throw ShapeError("dense: weights must be rank 2");
        const int din = w->value.dim(0), dout = w->value.dim(1);
        if (x->value.rank() < 1 || x->value.shape.back() != din)
            throw ShapeError("dense: input last dim != Din");
        if (b->value.size() != dout) throw ShapeError("dense: bias size != Dout");
        const Eigen::Index rows = x->value.size() / din;

        std::vector<int> out_shape = x->value.shape;
        out_shape.back() = dout;
        Node* n = fresh(out_shape);
        n->value.matrix(rows, dout) = x->value.matrix(rows, din) * w->value.matrix(din, dout);
        n->value.matrix(rows, dout).rowwise() +=
            Eigen::Map<const Eigen::RowVector<Scalar, Eigen::Dynamic>>(b->value.values.data(),
                                                                       dout);
        n->backprop = [n, x, w, b, rows, din, dout] {
            auto dy = Eigen::Map<const Matrix>(n->grad.data(), rows, dout);
            Eigen::Map<Matrix>(x->grad.data(), rows, din).noalias() +=
                dy * w->value.matrix(din, dout).transpose();
            Eigen::Map<Matrix>(w->grad.data(), din, dout).noalias() +=
                x->value.matrix(rows, din).transpose() * dy;
            Eigen::Map<Eigen::RowVector<Scalar, Eigen::Dynamic>>(b->grad.data(), dout) +=
                dy.colwise().sum();
        };
        return n;
    }

    // 2-D convolution, stride 1, input [H,W,Cin], kernel [kh,kw,Cin,Cout].
    // Implemented as im2col + GEMM; the gather index map is cached for backward.
    NodeRef conv2d(NodeRef x, NodeRef kernel, NodeRef bias, Padding padding) {
        if (x->value.rank() != 3 || kernel->value.rank() != 4)
            throw ShapeError("conv2d: expected input [H,W,Cin], kernel [kh,kw,Cin,Cout]");
        const int h = x->value.dim(0), w = x->value.dim(1), cin = x->value.dim(2);
        const int kh = kernel->value.dim(0), kw = kernel->value.dim(1);
        const int kcin = kernel->value.dim(2), cout = kernel->value.dim(3);
        if (kcin != cin) throw ShapeError("conv2d: kernel Cin mismatch");
        if (bias->value.size() != cout) throw ShapeError("conv2d: bias size != Cout");

        int oh, ow, pad_top, pad_left;
        if (padding == Padding::kValid) {
            if (kh > h || kw > w) throw ShapeError("conv2d: kernel larger than input");
            oh = h - kh + 1;
            ow = w - kw + 1;
            pad_top = pad_left = 0;
        } else {
            oh = h;
            ow = w;
            pad_top = (kh - 1) / 2;  // extra padding on the trailing side
            pad_left = (kw - 1) / 2;
        }

        const Eigen::Index patch = Eigen::Index(kh) * kw * cin;
        const Eigen::Index out_pos = Eigen::Index(oh) * ow;
        auto cols = std::make_shared<Matrix>(out_pos, patch);
        auto src = std::make_shared<std::vector<Eigen::Index>>(out_pos * patch);
        for (int oy = 0; oy < oh; ++oy) {
            for (int ox = 0; ox < ow; ++ox) {
                const Eigen::Index row = Eigen::Index(oy) * ow + ox;
                Eigen::Index col = 0;
                for (int ky = 0; ky < kh; ++ky) {
                    const int iy = oy + ky - pad_top;
                    for (int kx = 0; kx < kw; ++kx) {
                        const int ix = ox + kx - pad_left;
                        const bool inside = iy >= 0 && iy < h && ix >= 0 && ix < w;
                        for (int c = 0; c < cin; ++c, ++col) {
                            const Eigen::Index flat =
                                inside ? (Eigen::Index(iy) * w + ix) * cin + c : -1;
                            (*src)[row * patch + col] = flat;
                            (*cols)(row, col) = inside ? x->value[flat] : Scalar(0);
                        }
                    }
                }
            }
        }

        Node* n = fresh({oh, ow, cout});
        n->value.matrix(out_pos, cout).noalias() = *cols * kernel->value.matrix(patch, cout);
        n->value.matrix(out_pos, cout).rowwise() +=
            Eigen::Map<const Eigen::RowVector<Scalar, Eigen::Dynamic>>(bias->value.values.data(),
                                                                       cout);
        n->backprop = [n, x, kernel, bias, cols, src, patch, out_pos, cout] {
            auto dy = Eigen::Map<const Matrix>(n->grad.data(), out_pos, cout);
            Eigen::Map<Matrix>(kernel->grad.data(), patch, cout).noalias() +=
                cols->transpose() * dy;
            Eigen::Map<Eigen::RowVector<Scalar, Eigen::Dynamic>>(bias->grad.data(), cout) +=
                dy.colwise().sum();
            Matrix dcols = dy * kernel->value.matrix(patch, cout).transpose();
            for (Eigen::Index r = 0; r < out_pos; ++r)
                for (Eigen::Index c = 0; c < patch; ++c) {
                    const Eigen::Index flat = (*src)[r * patch + c];
                    if (flat >= 0) x->grad[flat] += dcols(r, c);
                }
        };
        return n;
    }

    // Batch normalization over all non-channel axes; channel axis is last.
    // Train mode uses batch statistics and updates `state`'s running stats.
    NodeRef batch_norm(NodeRef x, NodeRef gamma, NodeRef beta, BatchNormState<Scalar>& state,
                       Mode mode) {
        const int c = state.channels();
        if (x->value.rank() < 1 || x->value.shape.back() != c)
            throw ShapeError("batch_norm: input last dim != channels");
        if (gamma->value.size() != c || beta->value.size() != c)
            throw ShapeError("batch_norm: gamma/beta size != channels");
        const Eigen::Index rows = x->value.size() / c;
        if (rows == 0) throw DegenerateInputError("batch_norm: empty input");

        Node* n = fresh(x->value.shape);
        auto xm = x->value.matrix(rows, c);
        auto mean = std::make_shared<Array>(c);
        auto inv_std = std::make_shared<Array>(c);
        if (mode == Mode::kTrain) {
            for (int j = 0; j < c; ++j) {
                const Scalar m = xm.col(j).mean();
                const Scalar v = (xm.col(j).array() - m).square().mean();  // biased
                (*mean)[j] = m;
                (*inv_std)[j] = Scalar(1) / std::sqrt(v + state.epsilon);
                state.running_mean.values[j] =
                    state.momentum * state.running_mean.values[j] + (Scalar(1) - state.momentum) * m;
                state.running_var.values[j] =
                    state.momentum * state.running_var.values[j] + (Scalar(1) - state.momentum) * v;
            }
        } else {
            for (int j = 0; j < c; ++j) {
                (*mean)[j] = state.running_mean.values[j];
                (*inv_std)[j] =
                    Scalar(1) / std::sqrt(state.running_var.values[j] + state.epsilon);
            }
        }
        auto xhat = std::make_shared<Matrix>(rows, c);
        for (int j = 0; j < c; ++j)
            xhat->col(j) = (xm.col(j).array() - (*mean)[j]) * (*inv_std)[j];
        auto ym = n->value.matrix(rows, c);
        for (int j = 0; j < c; ++j)
            ym.col(j) = xhat->col(j).array() * gamma->value.values[j] + beta->value.values[j];

        n->backprop = [n, x, gamma, beta, xhat, inv_std, rows, c, mode] {
            auto dy = Eigen::Map<const Matrix>(n->grad.data(), rows, c);
            auto dx = Eigen::Map<Matrix>(x->grad.data(), rows, c);
            for (int j = 0; j < c; ++j) {
                const Scalar g = gamma->value.values[j];
                gamma->grad[j] += (dy.col(j).array() * xhat->col(j).array()).sum();
                beta->grad[j] += dy.col(j).sum();
                if (mode == Mode::kInfer) {
                    dx.col(j).array() += dy.col(j).array() * g * (*inv_std)[j];
                } else {
                    // dx = (g*istd/M) * (M*dy - sum(dy) - xhat * sum(dy*xhat))
                    const Scalar m = Scalar(rows);
                    const Scalar sum_dy = dy.col(j).sum();
                    const Scalar sum_dy_xhat = (dy.col(j).array() * xhat->col(j).array()).sum();
                    dx.col(j).array() += g * (*inv_std)[j] / m *
                                         (m * dy.col(j).array() - sum_dy -
                                          xhat->col(j).array() * sum_dy_xhat);
                }
            }
        };
        return n;
    }

    // Inverted dropout: survivors scaled by 1/(1-rate); identity at inference.
    NodeRef dropout(NodeRef x, Scalar rate, Mode mode, std::mt19937_64& rng) {
        if (rate < Scalar(0) || rate >= Scalar(1))
            throw ConfigError("dropout rate must be in [0,1)");
        if (mode == Mode::kInfer || rate == Scalar(0)) {
            Node* n = fresh(x->value.shape);
            n->value.values = x->value.values;
            n->backprop = [n, x] { x->grad += n->grad; };
            return n;
        }
        auto mask = std::make_shared<Array>(x->value.size());
        std::uniform_real_distribution<double> dist(0.0, 1.0);
        const Scalar scale = Scalar(1) / (Scalar(1) - rate);
        for (Eigen::Index i = 0; i < mask->size(); ++i)
            (*mask)[i] = dist(rng) < double(rate) ? Scalar(0) : scale;
        Node* n = fresh(x->value.shape);
        n->value.values = x->value.values * *mask;
        n->backprop = [n, x, mask] { x->grad += n->grad * *mask; };
        return n;
    }

    // 1 x k pooling along the W axis of [H,W,C]; stride = k.
    // valid: floor(W/k) windows, remainder dropped.
    // same:  ceil(W/k) windows, trailing window covers present elements only.
    NodeRef max_pool(NodeRef x, int k, Padding padding) {
        auto [h, w, c, ow] = pool_dims(x, k, padding);
        Node* n = fresh({h, ow, c});
        auto argmax = std::make_shared<std::vector<Eigen::Index>>(n->value.size());
        for (int y = 0; y < h; ++y)
            for (int o = 0; o < ow; ++o)
                for (int ch = 0; ch < c; ++ch) {
                    const int end = std::min((o + 1) * k, w);
                    Eigen::Index best = (Eigen::Index(y) * w + o * k) * c + ch;
                    Scalar best_v = x->value[best];
                    for (int i = o * k + 1; i < end; ++i) {
                        const Eigen::Index flat = (Eigen::Index(y) * w + i) * c + ch;
                        if (x->value[flat] > best_v) {  // first-index tie-break
                            best_v = x->value[flat];
                            best = flat;
                        }
                    }
                    const Eigen::Index out = (Eigen::Index(y) * ow + o) * c + ch;
                    n->value[out] = best_v;
                    (*argmax)[out] = best;
                }
        n->backprop = [n, x, argmax] {
            for (Eigen::Index i = 0; i < n->grad.size(); ++i)
                x->grad[(*argmax)[i]] += n->grad[i];
        };
        return n;
    }

    // As max_pool, but averaging over present elements only.
    NodeRef avg_pool(NodeRef x, int k, Padding padding) {
        auto [h, w, c, ow] = pool_dims(x, k, padding);
        Node* n = fresh({h, ow, c});
        for (int y = 0; y < h; ++y)
            for (int o = 0; o < ow; ++o) {
                const int end = std::min((o + 1) * k, w);
                const Scalar inv = Scalar(1) / Scalar(end - o * k);
                for (int ch = 0; ch < c; ++ch) {
                    Scalar sum = 0;
                    for (int i = o * k; i < end; ++i)
                        sum += x->value[(Eigen::Index(y) * w + i) * c + ch];
                    n->value[(Eigen::Index(y) * ow + o) * c + ch] = sum * inv;
                }
            }
        n->backprop = [n, x, k, h, w, c, ow] {
            for (int y = 0; y < h; ++y)
                for (int o = 0; o < ow; ++o) {
                    const int end = std::min((o + 1) * k, w);
                    const Scalar inv = Scalar(1) / Scalar(end - o * k);
                    for (int ch = 0; ch < c; ++ch) {
                        const Scalar g = n->grad[(Eigen::Index(y) * ow + o) * c + ch] * inv;
                        for (int i = o * k; i < end; ++i)
                            x->grad[(Eigen::Index(y) * w + i) * c + ch] += g;
                    }
                }
        };
        return n;
    }

    // Concatenate along axis 0; all parts share the trailing dimensions.
    NodeRef concat0(const std::vector<NodeRef>& parts) {
        if (parts.empty()) throw ShapeError("concat0: no inputs");
        const auto& first = parts[0]->value.shape;
        if (first.empty()) throw ShapeError("concat0: inputs must have rank >= 1");
        int total = 0;
        for (NodeRef p : parts) {
            const auto& s = p->value.shape;
            if (s.size() != first.size() ||
                !std::equal(s.begin() + 1, s.end(), first.begin() + 1))
                throw ShapeError("concat0: trailing dimensions differ");
            total += s[0];
        }
        std::vector<int> out_shape = first;
        out_shape[0] = total;
        Node* n = fresh(std::move(out_shape));
        Eigen::Index offset = 0;
        auto offsets = std::make_shared<std::vector<Eigen::Index>>();
        for (NodeRef p : parts) {
            offsets->push_back(offset);
            n->value.values.segment(offset, p->value.size()) = p->value.values;
            offset += p->value.size();
        }
        auto list = std::make_shared<std::vector<NodeRef>>(parts);
        n->backprop = [n, list, offsets] {
            for (size_t i = 0; i < list->size(); ++i)
                (*list)[i]->grad +=
                    n->grad.segment((*offsets)[i], (*list)[i]->value.size());
        };
        return n;
    }

    // Rows [from, to) along axis 0.
    NodeRef slice0(NodeRef x, int from, int to) {
        if (x->value.rank() < 1) throw ShapeError("slice0: input must have rank >= 1");
        if (from < 0 || to > x->value.dim(0) || from >= to)
            throw ShapeError("slice0: bad row range");
        std::vector<int> out_shape = x->value.shape;
        out_shape[0] = to - from;
        const Eigen::Index row = x->value.size() / x->value.dim(0);
        Node* n = fresh(std::move(out_shape));
        n->value.values = x->value.values.segment(from * row, (to - from) * row);
        n->backprop = [n, x, from, to, row] {
            x->grad.segment(from * row, (to - from) * row) += n->grad;
        };
        return n;
    }

    NodeRef reshape(NodeRef x, std::vector<int> new_shape) {
        if (Tensor<Scalar>::count(new_shape) != x->value.size())
            throw ShapeError("reshape: element count mismatch");
        Node* n = fresh(std::move(new_shape));
        n->value.values = x->value.values;
        n->backprop = [n, x] { x->grad += n->grad; };
        return n;
    }

    // Keep the first new_w columns of [H,W,C].
    NodeRef crop_w(NodeRef x, int new_w) {
        if (x->value.rank() != 3) throw ShapeError("crop_w: expected rank-3 input");
        const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
        if (new_w < 1 || new_w > w) throw ShapeError("crop_w: bad width");
        Node* n = fresh({h, new_w, c});
        for (int y = 0; y < h; ++y)
            n->value.values.segment(Eigen::Index(y) * new_w * c, Eigen::Index(new_w) * c) =
                x->value.values.segment(Eigen::Index(y) * w * c, Eigen::Index(new_w) * c);
        n->backprop = [n, x, h, w, c, new_w] {
            for (int y = 0; y < h; ++y)
                x->grad.segment(Eigen::Index(y) * w * c, Eigen::Index(new_w) * c) +=
                    n->grad.segment(Eigen::Index(y) * new_w * c, Eigen::Index(new_w) * c);
        };
        return n;
    }

    // Channels [from, to) of [H,W,C].
    NodeRef slice_channels(NodeRef x, int from, int to) {
        if (x->value.rank() != 3) throw ShapeError("slice_channels: expected rank-3 input");
        const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
        if (from < 0 || to > c || from >= to) throw ShapeError("slice_channels: bad range");
        const int nc = to - from;
        Node* n = fresh({h, w, nc});
        const Eigen::Index pos = Eigen::Index(h) * w;
        for (Eigen::Index p = 0; p < pos; ++p)
            n->value.values.segment(p * nc, nc) = x->value.values.segment(p * c + from, nc);
        n->backprop = [n, x, pos, c, nc, from] {
            for (Eigen::Index p = 0; p < pos; ++p)
                x->grad.segment(p * c + from, nc) += n->grad.segment(p * nc, nc);
        };
        return n;
    }

    // [R,C] -> [C,R].
    NodeRef transpose2d(NodeRef x) {
        if (x->value.rank() != 2) throw ShapeError("transpose2d: expected rank-2 input");
        const int r = x->value.dim(0), c = x->value.dim(1);
        Node* n = fresh({c, r});
        n->value.matrix(c, r) = x->value.matrix(r, c).transpose();
        n->backprop = [n, x, r, c] {
            Eigen::Map<Matrix>(x->grad.data(), r, c) +=
                Eigen::Map<const Matrix>(n->grad.data(), c, r).transpose();
        };
        return n;
    }

    // Sum along the last axis: [..., D] -> [...].
    NodeRef sum_last(NodeRef x) {
        if (x->value.rank() < 2) throw ShapeError("sum_last: need rank >= 2");
        const int d = x->value.shape.back();
        std::vector<int> out_shape(x->value.shape.begin(), x->value.shape.end() - 1);
        const Eigen::Index rows = x->value.size() / d;
        Node* n = fresh(std::move(out_shape));
        for (Eigen::Index r = 0; r < rows; ++r)
            n->value[r] = x->value.values.segment(r * d, d).sum();
        n->backprop = [n, x, rows, d] {
            for (Eigen::Index r = 0; r < rows; ++r)
                x->grad.segment(r * d, d) += Array::Constant(d, n->grad[r]);
        };
        return n;
    }

    // Attention fusion: scores [N,C], weights [N] -> pre-softmax [C],
    // out[c] = (1/N) * sum_n weights[n] * scores[n,c].
    NodeRef attention_fuse(NodeRef scores, NodeRef weights) {
        if (scores->value.rank() != 2 || weights->value.rank() != 1)
            throw ShapeError("attention_fuse: expected [N,C] and [N]");
        const int num_seg = scores->value.dim(0), classes = scores->value.dim(1);
        if (weights->value.dim(0) != num_seg) throw ShapeError("attention_fuse: N mismatch");
        Node* n = fresh({classes});
        const Scalar inv_n = Scalar(1) / Scalar(num_seg);
        auto xm = scores->value.matrix(num_seg, classes);
        auto wv = Eigen::Map<const Eigen::Vector<Scalar, Eigen::Dynamic>>(
            weights->value.values.data(), num_seg);
        Eigen::Map<Eigen::Vector<Scalar, Eigen::Dynamic>>(n->value.values.data(), classes) =
            xm.transpose() * wv * inv_n;
        n->backprop = [n, scores, weights, num_seg, classes, inv_n] {
            auto g = Eigen::Map<const Eigen::Vector<Scalar, Eigen::Dynamic>>(n->grad.data(),
                                                                             classes);
            auto xm = scores->value.matrix(num_seg, classes);
            auto wv = Eigen::Map<const Eigen::Vector<Scalar, Eigen::Dynamic>>(
                weights->value.values.data(), num_seg);
            Eigen::Map<Matrix>(scores->grad.data(), num_seg, classes).noalias() +=
                inv_n * wv * g.transpose();
            Eigen::Map<Eigen::Vector<Scalar, Eigen::Dynamic>>(weights->grad.data(), num_seg)
                .noalias() += inv_n * xm * g;
        };
        return n;
    }

    // Numerically stable softmax over a vector.
    NodeRef softmax(NodeRef x) {
        if (x->value.rank() != 1) throw ShapeError("softmax: expected a vector");
        Node* n = fresh(x->value.shape);
        const Scalar mx = x->value.values.maxCoeff();
        Array e = (x->value.values - mx).exp();
        n->value.values = e / e.sum();
        n->backprop = [n, x] {
            const Array& y = n->value.values;
            const Scalar dot = (n->grad * y).sum();
            x->grad += y * (n->grad - dot);
        };
        return n;
    }

    // -ln(probs[label] + floor), scalar output.
    NodeRef cross_entropy(NodeRef probs, int label) {
        if (probs->value.rank() != 1) throw ShapeError("cross_entropy: expected a vector");
        if (label < 0 || label >= probs->value.dim(0))
            throw ShapeError("cross_entropy: label out of range");
        constexpr double kFloor = 1e-12;
        Node* n = fresh({1});
        n->value[0] = -std::log(double(probs->value[label]) + kFloor);
        n->backprop = [n, probs, label] {
            probs->grad[label] -=
                n->grad[0] / (probs->value[label] + Scalar(kFloor));
        };
        return n;
    }

    NodeRef sum_all(NodeRef x) {
        Node* n = fresh({1});
        n->value[0] = x->value.values.sum();
        n->backprop = [n, x] { x->grad += Array::Constant(x->grad.size(), n->grad[0]); };
        return n;
    }

    // Seeds grad(loss)=1 and runs every recorded op's backprop in reverse order.
    void backward(NodeRef loss) {
        if (loss->value.size() != 1) throw SamError("backward: loss must be scalar");
        loss->grad[0] = Scalar(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it)
            if (it->backprop) it->backprop();
    }

    size_t num_nodes() const { return nodes_.size(); }

  private:
    Node* fresh(std::vector<int> shape) {
        Node& n = nodes_.emplace_back();
        n.value = Tensor<Scalar>(std::move(shape));
        n.grad = Array::Zero(n.value.size());
        return &n;
    }

    static void require_same_shape(NodeRef a, NodeRef b, const char* op) {
        if (!same_shape(a->value.shape, b->value.shape))
            throw ShapeError(std::string(op) + ": shape mismatch");
    }

    std::tuple<int, int, int, int> pool_dims(NodeRef x, int k, Padding padding) const {
        if (k <= 0) throw ConfigError("pool window must be positive");
        if (x->value.rank() != 3) throw ShapeError("pool: expected rank-3 input");
        const int h = x->value.dim(0), w = x->value.dim(1), c = x->value.dim(2);
        const int ow = padding == Padding::kValid ? w / k : (w + k - 1) / k;
        if (ow == 0) throw ShapeError("pool: window larger than input under valid padding");
        return {h, w, c, ow};
    }

    std::deque<Node> nodes_;  // stable addresses; creation order is topological
};

}  // namespace samgcnn
