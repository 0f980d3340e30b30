#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "headsynth/errors.hpp"
#include "headsynth/tensor.hpp"

namespace headsynth {

struct GradCheckFailure {
    std::size_t param = 0; // index into the parameter list
    std::size_t coord = 0; // flat index within the tensor
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_error = 0.0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::size_t checked = 0;
    std::vector<GradCheckFailure> failures;

    bool passed() const { return failures.empty(); }
};

// Central finite differences against analytic gradients, every coordinate.
// `loss` must recompute the scalar loss from the current parameter values;
// `analytic` is the gradient list aligned with `params`, evaluated once by
// the caller before checking.
inline GradCheckReport gradient_check(const std::vector<Tensor*>& params,
                                      const std::vector<const Tensor*>& analytic,
                                      const std::function<double()>& loss, double tolerance = 1e-4,
                                      double fd_step = 1e-5) {
    if (params.size() != analytic.size())
        throw ArgumentError("gradient_check: param/grad count mismatch");
    GradCheckReport report;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& p = *params[pi];
        const Tensor& g = *analytic[pi];
        if (!p.same_shape(g))
            throw ArgumentError("gradient_check: grad shape mismatch at parameter " + std::to_string(pi));
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double saved = p.values[j];
            p.values[j] = saved + fd_step;
            const double up = loss();
            p.values[j] = saved - fd_step;
            const double down = loss();
            p.values[j] = saved;
            const double numeric = (up - down) / (2.0 * fd_step);
            const double a = g.values[j];
            const double denom = std::max(std::abs(a) + std::abs(numeric), 1e-5);
            const double rel = std::abs(a - numeric) / denom;
            ++report.checked;
            if (rel > report.max_rel_error) report.max_rel_error = rel;
            if (rel > tolerance) report.failures.push_back({pi, j, a, numeric, rel});
        }
    }
    return report;
}

} // namespace headsynth
