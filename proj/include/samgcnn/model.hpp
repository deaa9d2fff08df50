#pragma once

#include <map>
#include <string>

#include "samgcnn/params.hpp"
#include "samgcnn/tape.hpp"

namespace samgcnn {

// Number of whole segments covered by a framed clip:
// floor(num_frames * frame_hop / segment_duration).
inline int segment_count(int num_frames, double frame_hop, double segment_duration) {
    if (num_frames <= 0 || frame_hop <= 0 || segment_duration <= 0)
        throw ConfigError("segment_count: arguments must be positive");
    const int n = static_cast<int>(num_frames * frame_hop / segment_duration);
    if (n == 0) throw DegenerateInputError("segment_count: clip shorter than one segment");
    return n;
}

// Topology of both branches. Defaults give the full-size network; the
// reduced clones used by gradient checks shrink every dimension while
// keeping the layer sequence.
struct ModelConfig {
    int num_classes = 9;
    int mel_bins = 40;
    int frames = 501;
    double dropout_rate = 0.2;
    int stem_kernel_w = 5;   // stem conv kernel [mel_bins, stem_kernel_w, 1, stem_channels]
    int stem_channels = 64;
    int gated_kernel_w = 3;  // gated conv kernel [1, gated_kernel_w, C, 2C]
    int pool1 = 5;           // valid max-pool after the stem
    int pool2 = 10;          // same max-pool after the gated block
    int dense_hidden = 64;
    int sam_avg_pool = 5;    // attention branch pools
    int sam_max_pool = 10;
    bool use_attention = true;  // false: plain GCNN baseline, weights fixed at 1

    int conv_out_w() const { return frames - stem_kernel_w + 1; }
    int pool1_out_w() const { return conv_out_w() / pool1; }
    int num_segments() const { return (pool1_out_w() + pool2 - 1) / pool2; }
    int sam_trunc_frames() const { return frames / sam_avg_pool * sam_avg_pool; }
    int sam_avg_out_w() const { return sam_trunc_frames() / sam_avg_pool; }
    int sam_segments() const { return (sam_avg_out_w() + sam_max_pool - 1) / sam_max_pool; }

    void validate() const {
        if (num_classes < 2) throw ConfigError("num_classes must be >= 2");
        if (mel_bins < 1 || frames < 2) throw ConfigError("bad input dimensions");
        if (dropout_rate < 0 || dropout_rate >= 1) throw ConfigError("bad dropout rate");
        if (stem_kernel_w > frames) throw ConfigError("stem kernel wider than input");
        if (pool1_out_w() < 1) throw ConfigError("pool1 leaves no frames");
        if (sam_segments() != num_segments())
            throw ConfigError("attention branch segment count (" +
                              std::to_string(sam_segments()) + ") != backbone segment count (" +
                              std::to_string(num_segments()) + ")");
    }
};

// Both branches' parameters plus batch-norm running statistics.
template <typename Scalar>
struct SamGcnnModel {
    ModelConfig cfg;
    ParamSet<Scalar> params;
    BatchNormState<Scalar> bn_stem;
    BatchNormState<Scalar> bn_gated;
    BatchNormState<Scalar> bn_sam;

    using NodeRef = typename Tape<Scalar>::NodeRef;
    using Bound = std::map<std::string, NodeRef>;

    static SamGcnnModel init(const ModelConfig& cfg, uint64_t seed) {
        cfg.validate();
        SamGcnnModel m;
        m.cfg = cfg;
        std::mt19937_64 rng(seed);
        const int c = cfg.stem_channels;
        m.params.add("stem.w",
                     glorot({cfg.mel_bins, cfg.stem_kernel_w, 1, c},
                            cfg.mel_bins * cfg.stem_kernel_w, cfg.mel_bins * cfg.stem_kernel_w * c,
                            rng));
        m.params.add("stem.b", Tensor<Scalar>({c}));
        m.params.add("gated.w", glorot({1, cfg.gated_kernel_w, c, 2 * c}, cfg.gated_kernel_w * c,
                                       cfg.gated_kernel_w * 2 * c, rng));
        m.params.add("gated.b", Tensor<Scalar>({2 * c}));
        m.params.add("dense1.w", glorot({c, cfg.dense_hidden}, c, cfg.dense_hidden, rng));
        m.params.add("dense1.b", Tensor<Scalar>({cfg.dense_hidden}));
        m.params.add("dense2.w",
                     glorot({cfg.dense_hidden, cfg.num_classes}, cfg.dense_hidden,
                            cfg.num_classes, rng));
        m.params.add("dense2.b", Tensor<Scalar>({cfg.num_classes}));
        add_bn_params(m.params, "bn1", c);
        add_bn_params(m.params, "bn2", c);
        m.bn_stem.resize(c);
        m.bn_gated.resize(c);
        if (cfg.use_attention) {
            m.params.add("sam.dense.w",
                         glorot({cfg.mel_bins, cfg.mel_bins}, cfg.mel_bins, cfg.mel_bins, rng));
            m.params.add("sam.dense.b", Tensor<Scalar>({cfg.mel_bins}));
            add_bn_params(m.params, "sam.bn", cfg.mel_bins);
            m.bn_sam.resize(cfg.mel_bins);
        }
        return m;
    }

    // Create tape leaves for every parameter; call once per tape.
    Bound bind(Tape<Scalar>& tape) {
        Bound bound;
        params.for_each([&](const std::string& name, Tensor<Scalar>& value, Tensor<Scalar>&) {
            bound[name] = tape.leaf(value);
        });
        return bound;
    }

    // Flush leaf gradients back into the parameter store, scaled.
    void accumulate_grads(const Bound& bound, Scalar scale = Scalar(1)) {
        params.for_each([&](const std::string& name, Tensor<Scalar>&, Tensor<Scalar>& grad) {
            grad.values += bound.at(name)->grad * scale;
        });
    }

    // Backbone: globally normalized fbank [mel, frames, 1] -> segment logits
    // [N, num_classes]. Intermediate shapes can be recorded for diagnostics
    // via `shapes`.
    NodeRef gcnn_forward(Tape<Scalar>& tape, const Bound& p, NodeRef input, Mode mode,
                         std::mt19937_64& rng, std::vector<std::vector<int>>* shapes = nullptr) {
        return gcnn_forward_batch(tape, p, {input}, mode, rng, shapes)[0];
    }

    // Batched backbone. The stem conv collapses the mel axis, so samples are
    // stacked along the first axis afterwards; every later layer treats rows
    // independently, and the batch-norm layers see statistics over the whole
    // mini-batch. Returns per-sample segment logits [N, num_classes].
    std::vector<NodeRef> gcnn_forward_batch(Tape<Scalar>& tape, const Bound& p,
                                            const std::vector<NodeRef>& inputs, Mode mode,
                                            std::mt19937_64& rng,
                                            std::vector<std::vector<int>>* shapes = nullptr) {
        const int batch = static_cast<int>(inputs.size());
        std::vector<NodeRef> stems;
        stems.reserve(inputs.size());
        for (NodeRef input : inputs) {
            require_input_shape(input);
            stems.push_back(tape.conv2d(input, p.at("stem.w"), p.at("stem.b"), Padding::kValid));
        }
        auto note = [&](NodeRef n) {
            if (shapes) shapes->push_back(n->value.shape);
            return n;
        };
        const Scalar rate = Scalar(cfg.dropout_rate);
        NodeRef x = note(tape.concat0(stems));  // [batch, conv_out_w, C]
        x = tape.batch_norm(x, p.at("bn1.gamma"), p.at("bn1.beta"), bn_stem, mode);
        x = tape.relu(x);
        x = note(tape.dropout(x, rate, mode, rng));
        x = note(tape.max_pool(x, cfg.pool1, Padding::kValid));
        x = note(gated_conv_block(tape, p, x, mode));
        x = tape.batch_norm(x, p.at("bn2.gamma"), p.at("bn2.beta"), bn_gated, mode);
        x = tape.relu(x);
        x = note(tape.dropout(x, rate, mode, rng));
        x = note(tape.max_pool(x, cfg.pool2, Padding::kSame));
        const int n = cfg.num_segments();
        x = note(tape.reshape(x, {batch * n, cfg.stem_channels}));
        x = tape.dense(x, p.at("dense1.w"), p.at("dense1.b"));
        x = tape.relu(x);
        x = note(tape.dropout(x, rate, mode, rng));
        x = note(tape.dense(x, p.at("dense2.w"), p.at("dense2.b")));
        std::vector<NodeRef> out;
        out.reserve(inputs.size());
        for (int b = 0; b < batch; ++b) out.push_back(tape.slice0(x, b * n, (b + 1) * n));
        return out;
    }

    // One same-padded conv split into gate/content halves: A = first half,
    // B = second half, output = B (*) sigmoid(A) + input.
    NodeRef gated_conv_block(Tape<Scalar>& tape, const Bound& p, NodeRef input, Mode mode) {
        (void)mode;
        const int c = cfg.stem_channels;
        NodeRef g = tape.conv2d(input, p.at("gated.w"), p.at("gated.b"), Padding::kSame);
        NodeRef a = tape.slice_channels(g, 0, c);
        NodeRef b = tape.slice_channels(g, c, 2 * c);
        NodeRef h = tape.elementwise_mul(b, tape.sigmoid(a));
        return tape.add(h, input);
    }

    // Attention branch: time-normalized fbank [mel, frames, 1] -> one sigmoid
    // weight per segment, [N].
    NodeRef sam_forward(Tape<Scalar>& tape, const Bound& p, NodeRef input, Mode mode,
                        std::mt19937_64& rng, std::vector<std::vector<int>>* shapes = nullptr) {
        return sam_forward_batch(tape, p, {input}, mode, rng, shapes)[0];
    }

    // Batched attention branch. The dense layer acts per frame, so samples
    // are stacked along the frame axis and batch norm sees mini-batch
    // statistics; the pools below work per clip after splitting back out.
    std::vector<NodeRef> sam_forward_batch(Tape<Scalar>& tape, const Bound& p,
                                           const std::vector<NodeRef>& inputs, Mode mode,
                                           std::mt19937_64& rng,
                                           std::vector<std::vector<int>>* shapes = nullptr) {
        if (!cfg.use_attention) throw ConfigError("attention branch disabled in config");
        const int batch = static_cast<int>(inputs.size());
        std::vector<NodeRef> frames;
        frames.reserve(inputs.size());
        for (NodeRef input : inputs) {
            require_input_shape(input);
            NodeRef f = tape.reshape(input, {cfg.mel_bins, cfg.frames});
            frames.push_back(tape.transpose2d(f));  // [frames, mel]
        }
        auto note = [&](NodeRef n) {
            if (shapes) shapes->push_back(n->value.shape);
            return n;
        };
        const Scalar rate = Scalar(cfg.dropout_rate);
        NodeRef x = tape.concat0(frames);  // [batch * frames, mel]
        x = note(tape.dense(x, p.at("sam.dense.w"), p.at("sam.dense.b")));
        x = tape.batch_norm(x, p.at("sam.bn.gamma"), p.at("sam.bn.beta"), bn_sam, mode);
        x = tape.relu(x);
        x = note(tape.dropout(x, rate, mode, rng));
        x = note(tape.sum_last(x));  // [batch * frames]
        x = tape.reshape(x, {batch, cfg.frames, 1});
        x = tape.crop_w(x, cfg.sam_trunc_frames());
        x = note(tape.avg_pool(x, cfg.sam_avg_pool, Padding::kSame));
        x = note(tape.max_pool(x, cfg.sam_max_pool, Padding::kSame));
        const int n = cfg.num_segments();
        x = tape.reshape(x, {batch * n});
        x = note(tape.sigmoid(x));
        std::vector<NodeRef> out;
        out.reserve(inputs.size());
        for (int b = 0; b < batch; ++b) out.push_back(tape.slice0(x, b * n, (b + 1) * n));
        return out;
    }

    // Full clip-level posterior: segment logits weighted by attention,
    // averaged, softmaxed. With attention disabled the weights are all 1.
    NodeRef forward_posterior(Tape<Scalar>& tape, const Bound& p, NodeRef global_norm_input,
                              NodeRef time_norm_input, Mode mode, std::mt19937_64& rng) {
        return forward_posterior_batch(tape, p, {global_norm_input}, {time_norm_input}, mode,
                                       rng)[0];
    }

    // Batched clip-level posteriors; one tape per mini-batch keeps the
    // batch-norm statistics honest during training.
    std::vector<NodeRef> forward_posterior_batch(Tape<Scalar>& tape, const Bound& p,
                                                 const std::vector<NodeRef>& global_norm_inputs,
                                                 const std::vector<NodeRef>& time_norm_inputs,
                                                 Mode mode, std::mt19937_64& rng) {
        if (cfg.use_attention && global_norm_inputs.size() != time_norm_inputs.size())
            throw ShapeError("posterior batch: input lists differ in length");
        std::vector<NodeRef> scores =
            gcnn_forward_batch(tape, p, global_norm_inputs, mode, rng);
        std::vector<NodeRef> weights;
        if (cfg.use_attention) {
            weights = sam_forward_batch(tape, p, time_norm_inputs, mode, rng);
        } else {
            for (size_t b = 0; b < global_norm_inputs.size(); ++b) {
                Tensor<Scalar> ones({cfg.num_segments()});
                ones.values.setOnes();
                weights.push_back(tape.leaf(std::move(ones)));
            }
        }
        std::vector<NodeRef> out;
        out.reserve(scores.size());
        for (size_t b = 0; b < scores.size(); ++b)
            out.push_back(tape.softmax(tape.attention_fuse(scores[b], weights[b])));
        return out;
    }

  private:
    static Tensor<Scalar> glorot(std::vector<int> shape, int fan_in, int fan_out,
                                 std::mt19937_64& rng) {
        Tensor<Scalar> t(std::move(shape));
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        std::uniform_real_distribution<double> dist(-limit, limit);
        for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = Scalar(dist(rng));
        return t;
    }

    static void add_bn_params(ParamSet<Scalar>& params, const std::string& prefix, int channels) {
        Tensor<Scalar> gamma({channels});
        gamma.values.setOnes();
        params.add(prefix + ".gamma", std::move(gamma));
        params.add(prefix + ".beta", Tensor<Scalar>({channels}));
    }

    void require_input_shape(NodeRef input) const {
        const auto& s = input->value.shape;
        if (s != std::vector<int>{cfg.mel_bins, cfg.frames, 1})
            throw ShapeError("expected input [" + std::to_string(cfg.mel_bins) + "," +
                             std::to_string(cfg.frames) + ",1]");
    }
};

}  // namespace samgcnn
