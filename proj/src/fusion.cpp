#include "samgcnn/fusion.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

namespace samgcnn {

int argmax(const Eigen::VectorXd& v) {
    int best = 0;
    for (int i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

Eigen::VectorXd softmax_vector(const Eigen::VectorXd& logits) {
    Eigen::ArrayXd e = (logits.array() - logits.maxCoeff()).exp();
    return (e / e.sum()).matrix();
}

ClipPosterior fuse(const Eigen::MatrixXd& segment_scores, const Eigen::VectorXd& weights) {
    if (segment_scores.rows() != weights.size())
        throw ShapeError("fuse: segment count mismatch between scores and weights");
    const double inv_n = 1.0 / static_cast<double>(segment_scores.rows());
    Eigen::VectorXd pre = segment_scores.transpose() * weights * inv_n;
    ClipPosterior out;
    out.values = softmax_vector(pre);
    return out;
}

std::pair<ClipPosterior, int> predict_clip(const std::vector<ClipPosterior>& channel_posteriors) {
    if (channel_posteriors.empty())
        throw DegenerateInputError("predict_clip: no channel posteriors");
    const Eigen::Index c = channel_posteriors[0].values.size();
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(c);
    for (const auto& p : channel_posteriors) {
        if (p.values.size() != c) throw ShapeError("predict_clip: class count mismatch");
        mean += p.values;
    }
    mean /= static_cast<double>(channel_posteriors.size());
    ClipPosterior out;
    out.values = mean;
    out.clip_id = channel_posteriors[0].clip_id;
    out.source = ClipPosterior::Source::kChannelAveraged;
    return {out, argmax(mean)};
}

std::string format_prediction(const PredictionRecord& rec, bool with_ensemble_flag) {
    std::ostringstream out;
    out << rec.clip_id << ',' << rec.predicted;
    char buf[32];
    for (Eigen::Index i = 0; i < rec.posterior.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", rec.posterior[i]);
        out << ',' << buf;
    }
    if (with_ensemble_flag) out << ",ensembled:" << (rec.ensembled ? 1 : 0);
    return out.str();
}

PredictionRecord parse_prediction(const std::string& line) {
    std::istringstream in(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(in, field, ',')) fields.push_back(field);
    if (fields.size() < 3) throw FormatError("malformed prediction record: " + line);
    PredictionRecord rec;
    rec.clip_id = fields[0];
    try {
        rec.predicted = std::stoi(fields[1]);
        size_t end = fields.size();
        if (fields.back().rfind("ensembled:", 0) == 0) {
            rec.ensembled = fields.back() == "ensembled:1";
            --end;
        }
        rec.posterior.resize(static_cast<Eigen::Index>(end - 2));
        for (size_t i = 2; i < end; ++i)
            rec.posterior[static_cast<Eigen::Index>(i - 2)] = std::stod(fields[i]);
    } catch (const std::exception&) {
        throw FormatError("malformed prediction record: " + line);
    }
    return rec;
}

}  // namespace samgcnn
