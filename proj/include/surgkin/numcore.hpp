#pragma once

#include <cstdint>
#include <functional>

#include "surgkin/kernels.hpp"
#include "surgkin/rng.hpp"
#include "surgkin/tensor.hpp"

namespace surgkin {

// C = A * B
Tensor matmul(const Tensor& a, const Tensor& b);

struct GradCheckOptions {
    double eps = 1e-5;
    // Number of coordinates to probe; 0 checks all of them. Sampling is
    // seeded so long parameter vectors stay affordable.
    std::size_t max_coords = 0;
    std::uint64_t sample_seed = 0;
};

// Central-difference check of an analytic gradient at point p.
// Returns max_i |g_num - g_ana| / max(1e-8, |g_num| + |g_ana|).
double grad_check(const std::function<double(const std::vector<double>&)>& f,
                  const std::vector<double>& p,
                  const std::vector<double>& analytic_grad,
                  const GradCheckOptions& opts = {});

}  // namespace surgkin
