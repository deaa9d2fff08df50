#pragma once

#include <optional>
#include <vector>

#include "samgcnn/adam.hpp"
#include "samgcnn/frontend.hpp"
#include "samgcnn/fusion.hpp"
#include "samgcnn/model.hpp"

namespace samgcnn {

// One (clip, channel) training/evaluation sample: raw log-mel feature
// plus identity. Normalizations are applied on the fly.
struct FeatureSample {
    std::string clip_id;
    int channel = 0;
    int label = -1;
    Eigen::MatrixXf fbank;  // mel bins x frames
};

struct TrainConfig {
    double learning_rate = 0.001;
    int batch_size = 256 * 4;  // per-channel samples; 256 clips x 4 channels
    int epochs = 300;
    double validation_fraction = 0.05;  // of the test split
    uint64_t seed = 0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    bool select_by_macro_f1 = false;  // default: clip-level validation accuracy

    void validate() const {
        if (validation_fraction <= 0 || validation_fraction >= 1)
            throw ConfigError("validation_fraction must be in (0,1)");
        if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
        if (epochs < 1) throw ConfigError("epochs must be >= 1");
        if (learning_rate <= 0) throw ConfigError("learning_rate must be positive");
    }
};

struct EpochLog {
    int epoch = 0;  // 1-based
    double train_loss = 0;
    double train_acc = 0;
    double val_acc = 0;
};

struct Checkpoint {
    ModelConfig model_cfg;
    ParamSet<float> params;
    BatchNormState<float> bn_stem, bn_gated, bn_sam;
    AdamState<float> adam;
    int epoch = 0;
    double val_accuracy = 0;
    uint64_t seed = 0;
    uint32_t config_digest = 0;
};

struct TrainResult {
    Checkpoint best;
    std::vector<EpochLog> log;
};

uint32_t config_digest(const ModelConfig& mc, const TrainConfig& tc);

// Infer-mode posterior of one sample through both branches.
Eigen::VectorXd sample_posterior(SamGcnnModel<float>& model, const FeatureSample& sample,
                                 const GlobalNormStats& stats);

// Channel-averaged clip posterior over the given per-channel samples.
ClipPosterior clip_posterior(SamGcnnModel<float>& model,
                             const std::vector<const FeatureSample*>& channels,
                             const GlobalNormStats& stats);

// Clip-level predictions (channel-averaged, infer mode) for a sample set;
// samples are grouped by clip_id.
std::vector<PredictionRecord> predict_samples(SamGcnnModel<float>& model,
                                              const std::vector<FeatureSample>& samples,
                                              const GlobalNormStats& stats);

// Fraction of clips whose channel-averaged argmax equals the label.
double clip_accuracy(SamGcnnModel<float>& model, const std::vector<FeatureSample>& samples,
                     const GlobalNormStats& stats);

// The training recipe: shuffled per-channel samples, minibatched
// cross-entropy through the fused posterior, Adam updates, and per-epoch
// validation with channel-averaged posteriors. Returns the checkpoint
// with the best validation accuracy (earliest epoch on ties).
// `resume` continues from a saved checkpoint's parameters and optimizer
// state at its recorded epoch.
TrainResult train(SamGcnnModel<float>& model, const std::vector<FeatureSample>& train_set,
                  const std::vector<FeatureSample>& validation_set, const GlobalNormStats& stats,
                  const TrainConfig& cfg, const Checkpoint* resume = nullptr);

// Stratified-by-class seeded selection of `fraction` of the clips in
// `samples` (all channels of a selected clip move together).
std::pair<std::vector<FeatureSample>, std::vector<FeatureSample>> split_validation(
    const std::vector<FeatureSample>& samples, double fraction, uint64_t seed);

// Checkpoint file ("SGC1"): config, parameters, batch-norm running stats,
// Adam moments, and metadata. Round-trips bit-identically.
void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Rebuild a model from a checkpoint (parameters + running stats).
SamGcnnModel<float> model_from_checkpoint(const Checkpoint& c);

}  // namespace samgcnn
