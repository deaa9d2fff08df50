#pragma once

#include <array>

#include "samgcnn/frontend.hpp"
#include "samgcnn/fusion.hpp"
#include "samgcnn/train.hpp"

namespace samgcnn {

// The three often-confused classes, by 9-way index, ascending.
struct ConfusableSet {
    std::array<int, 3> indices = {0, 4, 8};  // absence, other, working

    void validate() const {
        for (int i : indices)
            if (i < 0 || i > 8) throw ConfigError("confusable index out of range");
        if (!(indices[0] < indices[1] && indices[1] < indices[2]))
            throw ConfigError("confusable indices must be distinct and sorted");
    }
    bool contains(int c) const {
        return c == indices[0] || c == indices[1] || c == indices[2];
    }
};

// Posterior-mass redistribution: if the 9-way argmax lands on a
// confusable class, the mass on the three confusable slots is replaced by
// the 3-way posterior scaled by that mass; otherwise x1 passes through
// unchanged.
Eigen::VectorXd redistribute(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                             const ConfusableSet& confusable = {});

// Full two-system prediction for one clip: channel-averaged system-I
// posterior, lazily a channel-averaged system-II posterior when the
// argmax is confusable, then redistribution.
PredictionRecord ensemble_predict(const std::vector<const FeatureSample*>& channels,
                                  SamGcnnModel<float>& system1, const GlobalNormStats& stats1,
                                  SamGcnnModel<float>& system2, const GlobalNormStats& stats2,
                                  const ConfusableSet& confusable = {});

}  // namespace samgcnn
