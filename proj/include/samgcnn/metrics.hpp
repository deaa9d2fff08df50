#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "samgcnn/common.hpp"
#include "samgcnn/fusion.hpp"

namespace samgcnn {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
    Eigen::MatrixXi counts;

    explicit ConfusionMatrix(int num_classes = 0) {
        counts = Eigen::MatrixXi::Zero(num_classes, num_classes);
    }
    int num_classes() const { return static_cast<int>(counts.rows()); }
    long total() const { return counts.cast<long>().sum(); }
};

struct F1Report {
    Eigen::VectorXd precision;
    Eigen::VectorXd recall;
    Eigen::VectorXd f1;
    double macro_f1 = 0.0;
};

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          int num_classes);

// Per-class precision/recall/F1 plus the unweighted mean. Zero-denominator
// cases score 0.
F1Report macro_f1(const ConfusionMatrix& cm);

// Joins predictions with a clip_id -> label manifest.
std::pair<F1Report, ConfusionMatrix> evaluate_fold(const std::vector<PredictionRecord>& predictions,
                                                   const std::map<std::string, int>& truth,
                                                   int num_classes);

// Text table in the per-class layout (one row per class, macro last).
std::string format_f1_report(const F1Report& report, const std::vector<std::string>& class_names);

std::string confusion_csv(const ConfusionMatrix& cm);

}  // namespace samgcnn
