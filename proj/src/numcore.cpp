#include "surgkin/numcore.hpp"

#include <algorithm>
#include <cmath>

namespace surgkin {

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw ShapeError("matmul expects rank-2 tensors");
    if (a.dim(1) != b.dim(0))
        throw ShapeError("matmul inner dimensions differ: " +
                         std::to_string(a.dim(1)) + " vs " + std::to_string(b.dim(0)));
    Tensor c({a.dim(0), b.dim(1)});
    kernels().matmul(a.data(), b.data(), c.data(), a.dim(0), a.dim(1), b.dim(1));
    return c;
}

double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& p,
                  const std::vector<double>& analytic_grad,
                  const GradCheckOptions& opts) {
    if (p.size() != analytic_grad.size())
        throw ShapeError("grad_check: gradient length mismatch");

    std::vector<std::size_t> coords;
    if (opts.max_coords == 0 || opts.max_coords >= p.size()) {
        coords.resize(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) coords[i] = i;
    } else {
        Rng rng(opts.sample_seed);
        std::vector<std::size_t> all(p.size());
        for (std::size_t i = 0; i < p.size(); ++i) all[i] = i;
        rng.shuffle(all);
        coords.assign(all.begin(), all.begin() + opts.max_coords);
    }

    std::vector<double> q = p;
    double worst = 0.0;
    for (std::size_t i : coords) {
        double orig = q[i];
        q[i] = orig + opts.eps;
        double fp = f(q);
        q[i] = orig - opts.eps;
        double fm = f(q);
        q[i] = orig;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw NumericError("grad_check: non-finite function value");
        double g_num = (fp - fm) / (2.0 * opts.eps);
        double g_ana = analytic_grad[i];
        // The denominator floor keeps finite-difference noise from blowing up
        // the ratio at coordinates whose true gradient is exactly zero (for
        // example a bias that batch normalization cancels out).
        double rel = std::abs(g_num - g_ana) /
                     std::max(1e-4, std::abs(g_num) + std::abs(g_ana));
        worst = std::max(worst, rel);
    }
    return worst;
}

}  // namespace surgkin
