#include "samgcnn/ensemble.hpp"

namespace samgcnn {

namespace {

void require_posterior(const Eigen::VectorXd& p, const char* what) {
    if ((p.array() < 0).any()) throw SamError(std::string(what) + ": negative component");
    if (std::abs(p.sum() - 1.0) > 1e-6)
        throw SamError(std::string(what) + ": components do not sum to 1");
}

}  // namespace

Eigen::VectorXd redistribute(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                             const ConfusableSet& confusable) {
    confusable.validate();
    if (x1.size() != 9) throw ShapeError("redistribute: system I posterior must have 9 classes");
    if (x2.size() != 3) throw ShapeError("redistribute: system II posterior must have 3 classes");
    require_posterior(x1, "redistribute: X1");
    require_posterior(x2, "redistribute: X2");

    Eigen::VectorXd y = x1;
    if (!confusable.contains(argmax(x1))) return y;
    const double mass =
        x1[confusable.indices[0]] + x1[confusable.indices[1]] + x1[confusable.indices[2]];
    for (int i = 0; i < 3; ++i) y[confusable.indices[i]] = mass * x2[i];
    return y;
}

PredictionRecord ensemble_predict(const std::vector<const FeatureSample*>& channels,
                                  SamGcnnModel<float>& system1, const GlobalNormStats& stats1,
                                  SamGcnnModel<float>& system2, const GlobalNormStats& stats2,
                                  const ConfusableSet& confusable) {
    if (system1.cfg.num_classes != 9)
        throw ConfigError("ensemble: system I must have 9 classes");
    if (system2.cfg.num_classes != 3)
        throw ConfigError("ensemble: system II must have 3 classes");
    if (channels.empty()) throw DegenerateInputError("ensemble: no channels");

    ClipPosterior x1 = clip_posterior(system1, channels, stats1);
    PredictionRecord rec;
    rec.clip_id = channels[0]->clip_id;
    if (!confusable.contains(argmax(x1.values))) {
        rec.posterior = x1.values;
        rec.predicted = argmax(x1.values);
        return rec;
    }
    // System II evaluated lazily, only on confusable-argmax clips.
    ClipPosterior x2 = clip_posterior(system2, channels, stats2);
    rec.posterior = redistribute(x1.values, x2.values, confusable);
    rec.predicted = argmax(rec.posterior);
    rec.ensembled = true;
    return rec;
}

}  // namespace samgcnn
