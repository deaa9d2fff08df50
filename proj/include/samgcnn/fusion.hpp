#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "samgcnn/common.hpp"

namespace samgcnn {

// Clip-level class posterior.
struct ClipPosterior {
    Eigen::VectorXd values;  // non-negative, sums to 1
    std::string clip_id;
    enum class Source { kSingleChannel, kChannelAveraged } source = Source::kSingleChannel;
};

// One evaluated clip: the unit of ensembling and scoring.
struct PredictionRecord {
    std::string clip_id;
    int predicted = -1;
    Eigen::VectorXd posterior;
    bool ensembled = false;
};

// Lowest-index argmax.
int argmax(const Eigen::VectorXd& v);

// Y = softmax((1/N) * sum_n weights[n] * scores.row(n)).
ClipPosterior fuse(const Eigen::MatrixXd& segment_scores, const Eigen::VectorXd& weights);

// Arithmetic mean of per-channel posteriors plus its argmax.
std::pair<ClipPosterior, int> predict_clip(const std::vector<ClipPosterior>& channel_posteriors);

Eigen::VectorXd softmax_vector(const Eigen::VectorXd& logits);

// Text line: clip_id, predicted index, posteriors with 6 decimals,
// comma-separated. With `with_ensemble_flag` an "ensembled:{0|1}" column
// is appended.
std::string format_prediction(const PredictionRecord& rec, bool with_ensemble_flag = false);
PredictionRecord parse_prediction(const std::string& line);

}  // namespace samgcnn
