#pragma once

#include <vector>

#include "samgcnn/params.hpp"

namespace samgcnn {

// Per-parameter comparison of reverse-mode gradients against central
// finite differences.
struct GradCheckResult {
    struct ParamReport {
        std::string name;
        double max_rel_err = 0.0;
        Eigen::Index checked = 0;
        Eigen::Index excluded = 0;  // coordinates at kinks/ties, reported not failed
    };
    std::vector<ParamReport> reports;
    double max_rel_err = 0.0;
    Eigen::Index total_checked = 0;
    Eigen::Index total_excluded = 0;

    bool pass(double tol) const { return max_rel_err < tol && total_checked > 0; }
};

// loss_fn:      () -> double        pure, deterministic forward loss
// grad_fn:      () -> double        zero grads, forward + backward, fill params' grads
// A coordinate is excluded (not failed) when the finite-difference estimate
// at step h disagrees with the estimate at h/2, which flags nonsmooth points
// such as ReLU kinks and max-pool ties.
template <typename LossFn, typename GradFn>
GradCheckResult grad_check(ParamSet<double>& params, LossFn&& loss_fn, GradFn&& grad_fn,
                           double h = 1e-4) {
    grad_fn();
    // Snapshot the reverse-mode gradients before perturbing anything.
    ParamSet<double> ad_grads;
    params.for_each([&](const std::string& name, Tensor<double>&, Tensor<double>& grad) {
        ad_grads.add(name, grad);
    });

    GradCheckResult result;
    params.for_each([&](const std::string& name, Tensor<double>& value, Tensor<double>&) {
        GradCheckResult::ParamReport report;
        report.name = name;
        const Tensor<double>& g = ad_grads.value(name);
        for (Eigen::Index i = 0; i < value.size(); ++i) {
            const double saved = value[i];
            auto fd_at = [&](double step) {
                value[i] = saved + step;
                const double up = loss_fn();
                value[i] = saved - step;
                const double down = loss_fn();
                value[i] = saved;
                return (up - down) / (2.0 * step);
            };
            const double fd = fd_at(h);
            const double fd_half = fd_at(h / 2);
            const double fd_scale = std::max({std::abs(fd), std::abs(fd_half), 1e-6});
            if (std::abs(fd - fd_half) > 0.1 * fd_scale) {
                ++report.excluded;
                continue;
            }
            const double ad = g[i];
            const double diff = std::abs(ad - fd);
            double rel = 0.0;
            if (diff > 1e-6) rel = diff / std::max(std::abs(ad), std::abs(fd));
            report.max_rel_err = std::max(report.max_rel_err, rel);
            ++report.checked;
        }
        result.max_rel_err = std::max(result.max_rel_err, report.max_rel_err);
        result.total_checked += report.checked;
        result.total_excluded += report.excluded;
        result.reports.push_back(std::move(report));
    });
    return result;
}

}  // namespace samgcnn
