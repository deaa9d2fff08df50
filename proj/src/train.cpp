#include "samgcnn/train.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace samgcnn {

namespace {

// Normalized input tensors for one sample.
Tensor<float> global_norm_tensor(const FeatureSample& s, const GlobalNormStats& stats) {
    const int bins = static_cast<int>(s.fbank.rows());
    const int frames = static_cast<int>(s.fbank.cols());
    Tensor<float> t({bins, frames, 1});
    for (int b = 0; b < bins; ++b) {
        const float mean = static_cast<float>(stats.mean[b]);
        const float inv_std = static_cast<float>(1.0 / stats.std[b]);
        for (int f = 0; f < frames; ++f)
            t[Eigen::Index(b) * frames + f] = (s.fbank(b, f) - mean) * inv_std;
    }
    return t;
}

Tensor<float> time_norm_tensor(const FeatureSample& s) {
    const int bins = static_cast<int>(s.fbank.rows());
    const int frames = static_cast<int>(s.fbank.cols());
    Tensor<float> t({bins, frames, 1});
    for (int b = 0; b < bins; ++b) {
        const float mean = s.fbank.row(b).mean();
        const float var = (s.fbank.row(b).array() - mean).square().mean();
        const float inv_std = 1.0f / std::max(std::sqrt(std::max(var, 0.0f)),
                                              static_cast<float>(kStdFloor));
        for (int f = 0; f < frames; ++f)
            t[Eigen::Index(b) * frames + f] = (s.fbank(b, f) - mean) * inv_std;
    }
    return t;
}

uint64_t epoch_seed(uint64_t seed, int epoch) {
    uint64_t x = seed + 0x9E3779B97F4A7C15ULL * static_cast<uint64_t>(epoch + 1);
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

std::map<std::string, std::vector<const FeatureSample*>> group_by_clip(
    const std::vector<FeatureSample>& samples) {
    std::map<std::string, std::vector<const FeatureSample*>> groups;
    for (const auto& s : samples) groups[s.clip_id].push_back(&s);
    return groups;
}

}  // namespace

uint32_t config_digest(const ModelConfig& mc, const TrainConfig& tc) {
    // FNV-1a over the numeric fields.
    uint32_t h = 2166136261u;
    auto mix = [&h](uint64_t v) {
        for (int i = 0; i < 8; ++i) {
            h ^= static_cast<uint8_t>(v >> (8 * i));
            h *= 16777619u;
        }
    };
    mix(static_cast<uint64_t>(mc.num_classes));
    mix(static_cast<uint64_t>(mc.mel_bins));
    mix(static_cast<uint64_t>(mc.frames));
    mix(static_cast<uint64_t>(mc.dropout_rate * 1e6));
    mix(static_cast<uint64_t>(mc.stem_kernel_w));
    mix(static_cast<uint64_t>(mc.stem_channels));
    mix(static_cast<uint64_t>(mc.gated_kernel_w));
    mix(static_cast<uint64_t>(mc.pool1));
    mix(static_cast<uint64_t>(mc.pool2));
    mix(static_cast<uint64_t>(mc.dense_hidden));
    mix(static_cast<uint64_t>(mc.sam_avg_pool));
    mix(static_cast<uint64_t>(mc.sam_max_pool));
    mix(mc.use_attention ? 1 : 0);
    mix(static_cast<uint64_t>(tc.learning_rate * 1e9));
    mix(static_cast<uint64_t>(tc.batch_size));
    mix(static_cast<uint64_t>(tc.epochs));
    return h;
}

Eigen::VectorXd sample_posterior(SamGcnnModel<float>& model, const FeatureSample& sample,
                                 const GlobalNormStats& stats) {
    Tape<float> tape;
    auto bound = model.bind(tape);
    std::mt19937_64 rng(0);  // unused in infer mode
    auto gnorm = tape.leaf(global_norm_tensor(sample, stats));
    auto tnorm = model.cfg.use_attention ? tape.leaf(time_norm_tensor(sample)) : nullptr;
    auto posterior =
        model.forward_posterior(tape, bound, gnorm, tnorm, Mode::kInfer, rng);
    return posterior->value.values.cast<double>().matrix();
}

ClipPosterior clip_posterior(SamGcnnModel<float>& model,
                             const std::vector<const FeatureSample*>& channels,
                             const GlobalNormStats& stats) {
    if (channels.empty()) throw DegenerateInputError("clip_posterior: no channels");
    std::vector<ClipPosterior> per_channel;
    per_channel.reserve(channels.size());
    for (const FeatureSample* s : channels) {
        ClipPosterior p;
        p.values = sample_posterior(model, *s, stats);
        p.clip_id = s->clip_id;
        per_channel.push_back(std::move(p));
    }
    return predict_clip(per_channel).first;
}

std::vector<PredictionRecord> predict_samples(SamGcnnModel<float>& model,
                                              const std::vector<FeatureSample>& samples,
                                              const GlobalNormStats& stats) {
    std::vector<PredictionRecord> records;
    for (const auto& [clip_id, channels] : group_by_clip(samples)) {
        ClipPosterior p = clip_posterior(model, channels, stats);
        PredictionRecord rec;
        rec.clip_id = clip_id;
        rec.posterior = p.values;
        rec.predicted = argmax(p.values);
        records.push_back(std::move(rec));
    }
    return records;
}

double clip_accuracy(SamGcnnModel<float>& model, const std::vector<FeatureSample>& samples,
                     const GlobalNormStats& stats) {
    auto groups = group_by_clip(samples);
    if (groups.empty()) return 0.0;
    int correct = 0;
    for (const auto& [clip_id, channels] : groups) {
        ClipPosterior p = clip_posterior(model, channels, stats);
        if (argmax(p.values) == channels[0]->label) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(groups.size());
}

std::pair<std::vector<FeatureSample>, std::vector<FeatureSample>> split_validation(
    const std::vector<FeatureSample>& samples, double fraction, uint64_t seed) {
    // Collect clips per class, shuffle within class, take the leading
    // fraction of each class for validation (at least one clip per class).
    std::map<std::string, int> clip_label;
    for (const auto& s : samples) clip_label[s.clip_id] = s.label;
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& [clip, label] : clip_label) by_class[label].push_back(clip);

    std::mt19937_64 rng(seed);
    std::unordered_map<std::string, bool> in_validation;
    for (auto& [label, clips] : by_class) {
        std::shuffle(clips.begin(), clips.end(), rng);
        const size_t take =
            std::max<size_t>(1, static_cast<size_t>(std::llround(fraction * clips.size())));
        for (size_t i = 0; i < clips.size(); ++i) in_validation[clips[i]] = i < take;
    }
    std::vector<FeatureSample> validation, rest;
    for (const auto& s : samples)
        (in_validation[s.clip_id] ? validation : rest).push_back(s);
    return {validation, rest};
}

TrainResult train(SamGcnnModel<float>& model, const std::vector<FeatureSample>& train_set,
                  const std::vector<FeatureSample>& validation_set, const GlobalNormStats& stats,
                  const TrainConfig& cfg, const Checkpoint* resume) {
    cfg.validate();
    if (train_set.empty()) throw DegenerateInputError("train: empty dataset");
    for (const auto& s : train_set)
        if (s.label < 0 || s.label >= model.cfg.num_classes)
            throw DataError("train: label out of range for clip " + s.clip_id);

    AdamState<float> adam = AdamState<float>::for_params(
        model.params, static_cast<float>(cfg.beta1), static_cast<float>(cfg.beta2),
        static_cast<float>(cfg.epsilon));
    int start_epoch = 0;
    if (resume) {
        model.params = resume->params;
        model.bn_stem = resume->bn_stem;
        model.bn_gated = resume->bn_gated;
        model.bn_sam = resume->bn_sam;
        adam = resume->adam;
        start_epoch = resume->epoch;
    }

    TrainResult result;
    result.best.val_accuracy = -1.0;
    if (resume && start_epoch >= cfg.epochs) {
        // Nothing left to run; the checkpoint is already the final state.
        result.best = *resume;
        return result;
    }
    std::vector<size_t> order(train_set.size());

    for (int epoch = start_epoch; epoch < cfg.epochs; ++epoch) {
        // The shuffle is a function of (seed, epoch) alone so that a resumed
        // run replays the remaining epochs exactly.
        std::mt19937_64 rng(epoch_seed(cfg.seed, epoch));
        for (size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::shuffle(order.begin(), order.end(), rng);

        double loss_sum = 0;
        long correct = 0;
        size_t pos = 0;
        while (pos < order.size()) {
            const size_t batch_end = std::min(pos + static_cast<size_t>(cfg.batch_size),
                                              order.size());
            const float inv_batch = 1.0f / static_cast<float>(batch_end - pos);
            model.params.zero_grads();

            // One tape per mini-batch: the batch-norm layers normalize by
            // statistics over the whole batch, matching the running averages
            // used at inference.
            Tape<float> tape;
            auto bound = model.bind(tape);
            std::vector<Tape<float>::NodeRef> gnorms, tnorms;
            std::vector<int> labels;
            for (size_t i = pos; i < batch_end; ++i) {
                const FeatureSample& s = train_set[order[i]];
                gnorms.push_back(tape.leaf(global_norm_tensor(s, stats)));
                if (model.cfg.use_attention) tnorms.push_back(tape.leaf(time_norm_tensor(s)));
                labels.push_back(s.label);
            }
            pos = batch_end;
            auto posteriors =
                model.forward_posterior_batch(tape, bound, gnorms, tnorms, Mode::kTrain, rng);
            Tape<float>::NodeRef total = nullptr;
            for (size_t b = 0; b < posteriors.size(); ++b) {
                auto loss = tape.cross_entropy(posteriors[b], labels[b]);
                if (!std::isfinite(loss->value[0]))
                    throw NumericError("NaN/Inf loss at epoch " + std::to_string(epoch + 1));
                loss_sum += loss->value[0];
                total = total ? tape.add(total, loss) : loss;
                int pred = 0;
                for (Eigen::Index i = 1; i < posteriors[b]->value.size(); ++i)
                    if (posteriors[b]->value[i] > posteriors[b]->value[pred])
                        pred = static_cast<int>(i);
                if (pred == labels[b]) ++correct;
            }
            tape.backward(total);
            model.accumulate_grads(bound, inv_batch);
            adam_step(model.params, adam, static_cast<float>(cfg.learning_rate));
        }

        EpochLog log;
        log.epoch = epoch + 1;
        log.train_loss = loss_sum / static_cast<double>(order.size());
        log.train_acc = static_cast<double>(correct) / static_cast<double>(order.size());
        log.val_acc = validation_set.empty()
                          ? 0.0
                          : clip_accuracy(model, validation_set, stats);
        result.log.push_back(log);

        if (log.val_acc > result.best.val_accuracy) {  // earliest epoch wins ties
            result.best.model_cfg = model.cfg;
            result.best.params = model.params;
            result.best.bn_stem = model.bn_stem;
            result.best.bn_gated = model.bn_gated;
            result.best.bn_sam = model.bn_sam;
            result.best.adam = adam;
            result.best.epoch = epoch + 1;
            result.best.val_accuracy = log.val_acc;
            result.best.seed = cfg.seed;
            result.best.config_digest = config_digest(model.cfg, cfg);
        }
    }
    return result;
}

SamGcnnModel<float> model_from_checkpoint(const Checkpoint& c) {
    SamGcnnModel<float> m;
    m.cfg = c.model_cfg;
    m.cfg.validate();
    m.params = c.params;
    m.bn_stem = c.bn_stem;
    m.bn_gated = c.bn_gated;
    m.bn_sam = c.bn_sam;
    return m;
}

}  // namespace samgcnn
