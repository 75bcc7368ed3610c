#include "surgkin/tsne.hpp"

#include <algorithm>
#include <cmath>

#include "surgkin/schema.hpp"

namespace surgkin {

namespace {

constexpr double kPFloor = 1e-12;

// Squared euclidean distances, row i vs row j.
std::vector<double> pairwise_sq(const Tensor& x) {
    const std::size_t N = x.dim(0), D = x.dim(1);
    std::vector<double> d2(N * N, 0.0);
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            double s = 0.0;
            const double* xi = x.data() + i * D;
            const double* xj = x.data() + j * D;
            for (std::size_t k = 0; k < D; ++k) {
                double diff = xi[k] - xj[k];
                s += diff * diff;
            }
            d2[i * N + j] = s;
            d2[j * N + i] = s;
        }
    return d2;
}

// Shannon entropy (nats) and conditional row p_{j|i} at a given precision.
double row_entropy(const double* d2_row, std::size_t N, std::size_t i,
                   double beta, std::vector<double>& p) {
    double sum = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        p[j] = j == i ? 0.0 : std::exp(-beta * d2_row[j]);
        sum += p[j];
    }
    if (sum <= 0.0) return 0.0;
    double h = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
        p[j] /= sum;
        if (p[j] > 0.0) h -= p[j] * std::log(p[j]);
    }
    return h;
}

}  // namespace

TsneResult tsne(const Tensor& x, const TsneConfig& cfg) {
    const std::size_t N = x.dim(0);
    if (N < 3) throw InputError("tsne: need at least 3 points");
    if (cfg.perplexity >= static_cast<double>(N))
        throw InputError("tsne: perplexity must be smaller than N");
    if (cfg.perplexity <= 1.0) throw InputError("tsne: perplexity must exceed 1");

    const double target_h = std::log(cfg.perplexity);
    std::vector<double> d2 = pairwise_sq(x);

    TsneResult res;
    res.achieved_entropy.resize(N);

    // conditional affinities: per-row binary search on the precision
    std::vector<double> P(N * N, 0.0);
    std::vector<double> prow(N);
    for (std::size_t i = 0; i < N; ++i) {
        double beta = 1.0, lo = 0.0, hi = 0.0;
        bool has_hi = false;
        double h = 0.0;
        for (int it = 0; it < 200; ++it) {
            h = row_entropy(&d2[i * N], N, i, beta, prow);
            if (std::abs(h - target_h) < 1e-4) break;
            if (h > target_h) {  // too flat: raise precision
                lo = beta;
                beta = has_hi ? 0.5 * (lo + hi) : beta * 2.0;
            } else {
                hi = beta;
                has_hi = true;
                beta = 0.5 * (lo + hi);
            }
        }
        res.achieved_entropy[i] = h;
        for (std::size_t j = 0; j < N; ++j) P[i * N + j] = prow[j];
    }

    // symmetrize and floor
    for (std::size_t i = 0; i < N; ++i)
        for (std::size_t j = i + 1; j < N; ++j) {
            double v = (P[i * N + j] + P[j * N + i]) / (2.0 * N);
            v = std::max(v, kPFloor);
            P[i * N + j] = v;
            P[j * N + i] = v;
        }

    Rng rng(cfg.seed);
    Tensor y({N, 2});
    for (std::size_t i = 0; i < N * 2; ++i) y.data()[i] = 1e-4 * rng.gaussian();

    std::vector<double> vel(N * 2, 0.0);
    std::vector<double> num(N * N, 0.0);
    std::vector<double> grad(N * 2, 0.0);
    std::vector<double> Q(N * N, 0.0);

    auto low_dim_kernel = [&]() {
        double z = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = i + 1; j < N; ++j) {
                double dx = y.at(i, 0) - y.at(j, 0);
                double dy = y.at(i, 1) - y.at(j, 1);
                double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * N + j] = v;
                num[j * N + i] = v;
                z += 2.0 * v;
            }
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j)
                Q[i * N + j] = i == j ? kPFloor : std::max(num[i * N + j] / z, kPFloor);
    };

    auto kl_divergence = [&]() {
        double kl = 0.0;
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                if (i == j) continue;
                double p = P[i * N + j];
                kl += p * std::log(p / Q[i * N + j]);
            }
        return kl;
    };

    low_dim_kernel();
    res.initial_kl = kl_divergence();

    // Short runs must still spend most of their iterations on the true
    // affinities, otherwise the reported KL is optimized against the
    // exaggerated target and can exceed the initial value.
    const std::size_t exaggeration_until =
        std::min(cfg.exaggeration_until, cfg.iters / 2);
    const std::size_t momentum_switch =
        std::min(cfg.momentum_switch, cfg.iters / 2);
    // Step size scaled to the point count: a rate tuned for thousands of
    // points overshoots badly on small embeddings, leaving the layout spread
    // so far apart that the heavy-tailed gradients cannot pull it back.
    const double lr = std::min(
        cfg.learning_rate,
        std::max(10.0, static_cast<double>(N) / cfg.early_exaggeration));

    for (std::size_t it = 0; it < cfg.iters; ++it) {
        double exag = it < exaggeration_until ? cfg.early_exaggeration : 1.0;
        double momentum =
            it < momentum_switch ? cfg.momentum_start : cfg.momentum_final;

        std::fill(grad.begin(), grad.end(), 0.0);
        for (std::size_t i = 0; i < N; ++i)
            for (std::size_t j = 0; j < N; ++j) {
                if (i == j) continue;
                double coeff =
                    4.0 * (exag * P[i * N + j] - Q[i * N + j]) * num[i * N + j];
                grad[i * 2] += coeff * (y.at(i, 0) - y.at(j, 0));
                grad[i * 2 + 1] += coeff * (y.at(i, 1) - y.at(j, 1));
            }

        double mean0 = 0.0, mean1 = 0.0;
        for (std::size_t i = 0; i < N; ++i) {
            vel[i * 2] = momentum * vel[i * 2] - lr * grad[i * 2];
            vel[i * 2 + 1] = momentum * vel[i * 2 + 1] - lr * grad[i * 2 + 1];
            y.at(i, 0) += vel[i * 2];
            y.at(i, 1) += vel[i * 2 + 1];
            mean0 += y.at(i, 0);
            mean1 += y.at(i, 1);
        }
        mean0 /= static_cast<double>(N);
        mean1 /= static_cast<double>(N);
        for (std::size_t i = 0; i < N; ++i) {
            y.at(i, 0) -= mean0;
            y.at(i, 1) -= mean1;
        }
        low_dim_kernel();
    }

    res.final_kl = kl_divergence();
    res.y = std::move(y);
    for (std::size_t i = 0; i < N * 2; ++i)
        if (!std::isfinite(res.y.data()[i]))
            throw NumericError("tsne: non-finite coordinate");
    return res;
}

}  // namespace surgkin
