#pragma once

#include <cstdint>
#include <vector>

#include "surgkin/rng.hpp"
#include "surgkin/tensor.hpp"

namespace surgkin {

struct TsneConfig {
    double perplexity = 30.0;
    std::size_t iters = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    std::size_t exaggeration_until = 250;
    std::size_t momentum_switch = 250;  // 0.5 before, 0.8 after
    double momentum_start = 0.5;
    double momentum_final = 0.8;
    std::uint64_t seed = 42;
};

struct TsneResult {
    Tensor y;  // {N, 2}, centered at the origin
    std::vector<double> achieved_entropy;  // nats, per row
    double initial_kl = 0.0;
    double final_kl = 0.0;
};

// Exact (dense) t-SNE. Throws InputError when N < 3 or perplexity >= N.
TsneResult tsne(const Tensor& x, const TsneConfig& cfg = {});

}  // namespace surgkin
