#include "samgcnn/metrics.hpp"

#include <cstdio>
#include <sstream>

namespace samgcnn {

ConfusionMatrix confusion(const std::vector<int>& truth, const std::vector<int>& pred,
                          int num_classes) {
    if (truth.size() != pred.size())
        throw ShapeError("confusion: truth and prediction lengths differ");
    ConfusionMatrix cm(num_classes);
    for (size_t k = 0; k < truth.size(); ++k) {
        const int i = truth[k], j = pred[k];
        if (i < 0 || i >= num_classes || j < 0 || j >= num_classes)
            throw DataError("confusion: label out of range at index " + std::to_string(k));
        ++cm.counts(i, j);
    }
    return cm;
}

F1Report macro_f1(const ConfusionMatrix& cm) {
    const int c = cm.num_classes();
    F1Report r;
    r.precision.setZero(c);
    r.recall.setZero(c);
    r.f1.setZero(c);
    for (int k = 0; k < c; ++k) {
        const double tp = cm.counts(k, k);
        const double col = cm.counts.col(k).sum();
        const double row = cm.counts.row(k).sum();
        r.precision[k] = col > 0 ? tp / col : 0.0;
        r.recall[k] = row > 0 ? tp / row : 0.0;
        const double pr = r.precision[k] + r.recall[k];
        r.f1[k] = pr > 0 ? 2.0 * r.precision[k] * r.recall[k] / pr : 0.0;
    }
    r.macro_f1 = c > 0 ? r.f1.mean() : 0.0;
    return r;
}

std::pair<F1Report, ConfusionMatrix> evaluate_fold(const std::vector<PredictionRecord>& predictions,
                                                   const std::map<std::string, int>& truth,
                                                   int num_classes) {
    std::vector<int> t, p;
    t.reserve(predictions.size());
    p.reserve(predictions.size());
    for (const auto& rec : predictions) {
        auto it = truth.find(rec.clip_id);
        if (it == truth.end()) throw DataError("unknown clip_id in predictions: " + rec.clip_id);
        t.push_back(it->second);
        p.push_back(rec.predicted);
    }
    ConfusionMatrix cm = confusion(t, p, num_classes);
    return {macro_f1(cm), cm};
}

std::string format_f1_report(const F1Report& report, const std::vector<std::string>& class_names) {
    std::ostringstream out;
    char buf[128];
    out << "Class                Precision  Recall     F1\n";
    for (Eigen::Index k = 0; k < report.f1.size(); ++k) {
        const std::string name = k < static_cast<Eigen::Index>(class_names.size())
                                     ? class_names[static_cast<size_t>(k)]
                                     : "class " + std::to_string(k);
        std::snprintf(buf, sizeof buf, "%-20s %8.2f%% %8.2f%% %8.2f%%\n", name.c_str(),
                      100.0 * report.precision[k], 100.0 * report.recall[k],
                      100.0 * report.f1[k]);
        out << buf;
    }
    std::snprintf(buf, sizeof buf, "%-20s %8s  %8s %8.2f%%\n", "Macro-Average", "", "",
                  100.0 * report.macro_f1);
    out << buf;
    return out.str();
}

std::string confusion_csv(const ConfusionMatrix& cm) {
    std::ostringstream out;
    for (int i = 0; i < cm.num_classes(); ++i) {
        for (int j = 0; j < cm.num_classes(); ++j) {
            if (j) out << ',';
            out << cm.counts(i, j);
        }
        out << '\n';
    }
    return out.str();
}

}  // namespace samgcnn
