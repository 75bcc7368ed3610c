#include "surgkin/layers.hpp"

#include <algorithm>
#include <cmath>

#include "surgkin/schema.hpp"

namespace surgkin {

namespace {

double uniform_limit(std::size_t fan_in) {
    return std::sqrt(6.0 / static_cast<double>(fan_in));
}

void init_uniform(Tensor& t, std::size_t fan_in, Rng& rng) {
    double lim = uniform_limit(fan_in);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = rng.uniform(-lim, lim);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

// ---- Dense ----

Dense::Dense(const std::string& name, std::size_t in, std::size_t out)
    : W(name + ".W", {in, out}), b(name + ".b", {out}) {}

void Dense::init(Rng& rng) { init_uniform(W.value, W.value.dim(0), rng); }

Tensor Dense::forward(const Tensor& x) {
    if (x.dim(1) != W.value.dim(0)) throw ShapeError("Dense: input width mismatch");
    x_cache_ = x;
    Tensor y({x.dim(0), W.value.dim(1)});
    kernels().matmul(x.data(), W.value.data(), y.data(), x.dim(0), x.dim(1),
                     W.value.dim(1));
    const std::size_t B = y.dim(0), N = y.dim(1);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < N; ++j) y.at(i, j) += b.value[j];
    return y;
}

Tensor Dense::backward(const Tensor& dy) {
    const std::size_t B = dy.dim(0), N = dy.dim(1), D = W.value.dim(0);
    kernels().matmul_tn_acc(x_cache_.data(), dy.data(), W.grad.data(), B, D, N);
    for (std::size_t i = 0; i < B; ++i)
        for (std::size_t j = 0; j < N; ++j) b.grad[j] += dy.at(i, j);
    Tensor dx({B, D});
    kernels().matmul_nt(dy.data(), W.value.data(), dx.data(), B, N, D);
    return dx;
}

// ---- BatchNorm ----

BatchNorm::BatchNorm(const std::string& name, std::size_t channels)
    : gamma(name + ".gamma", {channels}),
      beta(name + ".beta", {channels}),
      running_mean(name + ".running_mean", {channels}, false),
      running_var(name + ".running_var", {channels}, false) {
    gamma.value.fill(1.0);
    running_var.value.fill(1.0);
}

Tensor BatchNorm::forward(const Tensor& x, Mode mode) {
    const std::size_t R = x.dim(0), C = x.dim(1);
    Tensor y({R, C});
    if (mode == Mode::Train) {
        rows_ = R;
        xhat_ = Tensor({R, C});
        invstd_.assign(C, 0.0);
        for (std::size_t c = 0; c < C; ++c) {
            double mean = 0.0;
            for (std::size_t r = 0; r < R; ++r) mean += x.at(r, c);
            mean /= static_cast<double>(R);
            double var = 0.0;
            for (std::size_t r = 0; r < R; ++r) {
                double d = x.at(r, c) - mean;
                var += d * d;
            }
            var /= static_cast<double>(R);
            double inv = 1.0 / std::sqrt(var + eps);
            invstd_[c] = inv;
            for (std::size_t r = 0; r < R; ++r) {
                double h = (x.at(r, c) - mean) * inv;
                xhat_.at(r, c) = h;
                y.at(r, c) = gamma.value[c] * h + beta.value[c];
            }
            running_mean.value[c] =
                momentum * running_mean.value[c] + (1.0 - momentum) * mean;
            running_var.value[c] =
                momentum * running_var.value[c] + (1.0 - momentum) * var;
        }
    } else {
        for (std::size_t c = 0; c < C; ++c) {
            double inv = 1.0 / std::sqrt(running_var.value[c] + eps);
            double scale = gamma.value[c] * inv;
            double shift = beta.value[c] - running_mean.value[c] * scale;
            for (std::size_t r = 0; r < R; ++r)
                y.at(r, c) = scale * x.at(r, c) + shift;
        }
    }
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy) {
    const std::size_t R = rows_, C = dy.dim(1);
    Tensor dx({R, C});
    double n = static_cast<double>(R);
    for (std::size_t c = 0; c < C; ++c) {
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t r = 0; r < R; ++r) {
            sum_dy += dy.at(r, c);
            sum_dy_xhat += dy.at(r, c) * xhat_.at(r, c);
        }
        gamma.grad[c] += sum_dy_xhat;
        beta.grad[c] += sum_dy;
        double g = gamma.value[c] * invstd_[c];
        for (std::size_t r = 0; r < R; ++r) {
            dx.at(r, c) = g * (dy.at(r, c) - sum_dy / n -
                               xhat_.at(r, c) * sum_dy_xhat / n);
        }
    }
    return dx;
}

// ---- ReLU ----

Tensor ReLU::forward(const Tensor& x) {
    x_cache_ = x;
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i)
        if (y[i] < 0.0) y[i] = 0.0;
    return y;
}

Tensor ReLU::backward(const Tensor& dy) {
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i)
        if (x_cache_[i] <= 0.0) dx[i] = 0.0;
    return dx;
}

// ---- Dropout ----

Tensor Dropout::forward(const Tensor& x, Mode mode, Rng& rng) {
    if (mode == Mode::Eval || rate_ <= 0.0) {
        identity_ = true;
        return x;
    }
    identity_ = false;
    mask_ = Tensor(x.shape());
    double keep = 1.0 - rate_;
    Tensor y = x;
    for (std::size_t i = 0; i < y.size(); ++i) {
        double m = rng.uniform() < keep ? 1.0 / keep : 0.0;
        mask_[i] = m;
        y[i] *= m;
    }
    return y;
}

Tensor Dropout::backward(const Tensor& dy) {
    if (identity_) return dy;
    Tensor dx = dy;
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] *= mask_[i];
    return dx;
}

// ---- Conv1D ----

Conv1D::Conv1D(const std::string& name, std::size_t in_ch, std::size_t out_ch,
               std::size_t kernel)
    : W(name + ".W", {kernel, in_ch, out_ch}),
      b(name + ".b", {out_ch}),
      kernel_(kernel) {}

void Conv1D::init(Rng& rng) {
    init_uniform(W.value, kernel_ * W.value.dim(1), rng);
}

Tensor Conv1D::forward(const Tensor& x) {
    const std::size_t B = x.dim(0), T = x.dim(1), Cin = x.dim(2);
    const std::size_t Cout = W.value.dim(2);
    if (Cin != W.value.dim(1)) throw ShapeError("Conv1D: channel mismatch");
    x_cache_ = x;
    Tensor y({B, T, Cout});
    const std::size_t half = kernel_ / 2;
    for (std::size_t bi = 0; bi < B; ++bi) {
        const double* xb = x.data() + bi * T * Cin;
        double* yb = y.data() + bi * T * Cout;
        for (std::size_t i = 0; i < T * Cout; ++i) yb[i] = 0.0;
        for (std::size_t kk = 0; kk < kernel_; ++kk) {
            // output step t reads input step t + kk - half
            const double* wk = W.value.data() + kk * Cin * Cout;
            std::size_t t_out_lo = kk < half ? half - kk : 0;
            std::size_t t_out_hi = kk > half ? T - (kk - half) : T;
            if (t_out_lo >= t_out_hi) continue;
            std::size_t rows = t_out_hi - t_out_lo;
            std::size_t t_in_lo = t_out_lo + kk - half;
            kernels().matmul_acc(xb + t_in_lo * Cin, wk, yb + t_out_lo * Cout,
                                 rows, Cin, Cout);
        }
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < Cout; ++c) yb[t * Cout + c] += b.value[c];
    }
    return y;
}

Tensor Conv1D::backward(const Tensor& dy) {
    const std::size_t B = x_cache_.dim(0), T = x_cache_.dim(1),
                      Cin = x_cache_.dim(2), Cout = W.value.dim(2);
    Tensor dx({B, T, Cin});
    const std::size_t half = kernel_ / 2;
    for (std::size_t bi = 0; bi < B; ++bi) {
        const double* xb = x_cache_.data() + bi * T * Cin;
        const double* dyb = dy.data() + bi * T * Cout;
        double* dxb = dx.data() + bi * T * Cin;
        for (std::size_t kk = 0; kk < kernel_; ++kk) {
            const double* wk = W.value.data() + kk * Cin * Cout;
            double* dwk = W.grad.data() + kk * Cin * Cout;
            std::size_t t_out_lo = kk < half ? half - kk : 0;
            std::size_t t_out_hi = kk > half ? T - (kk - half) : T;
            if (t_out_lo >= t_out_hi) continue;
            std::size_t rows = t_out_hi - t_out_lo;
            std::size_t t_in_lo = t_out_lo + kk - half;
            // dW_k += X[t_in]^T dY[t_out]
            kernels().matmul_tn_acc(xb + t_in_lo * Cin, dyb + t_out_lo * Cout,
                                    dwk, rows, Cin, Cout);
            // dX[t_in] += dY[t_out] W_k^T
            kernels().matmul_nt_acc(dyb + t_out_lo * Cout, wk,
                                    dxb + t_in_lo * Cin, rows, Cout, Cin);
        }
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < Cout; ++c)
                b.grad[c] += dyb[t * Cout + c];
    }
    return dx;
}

// ---- GlobalAvgPool ----

Tensor GlobalAvgPool::forward(const Tensor& x) {
    const std::size_t B = x.dim(0), T = x.dim(1), C = x.dim(2);
    steps_ = T;
    Tensor y({B, C});
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < C; ++c)
                y.at(bi, c) += x.data()[(bi * T + t) * C + c] / static_cast<double>(T);
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy) {
    const std::size_t B = dy.dim(0), C = dy.dim(1), T = steps_;
    Tensor dx({B, T, C});
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t c = 0; c < C; ++c)
                dx.data()[(bi * T + t) * C + c] = dy.at(bi, c) / static_cast<double>(T);
    return dx;
}

// ---- LSTMDir ----

LSTMDir::LSTMDir(const std::string& name, std::size_t in, std::size_t hidden,
                 bool reverse, bool return_sequences)
    : Wx(name + ".Wx", {in, 4 * hidden}),
      Wh(name + ".Wh", {hidden, 4 * hidden}),
      b(name + ".b", {4 * hidden}),
      in_(in),
      hidden_(hidden),
      reverse_(reverse),
      return_seq_(return_sequences) {}

void LSTMDir::init(Rng& rng) {
    init_uniform(Wx.value, in_, rng);
    init_uniform(Wh.value, hidden_, rng);
    // forget gate bias 1
    for (std::size_t j = hidden_; j < 2 * hidden_; ++j) b.value[j] = 1.0;
}

Tensor LSTMDir::forward(const Tensor& x) {
    const std::size_t B = x.dim(0), T = x.dim(1), D = x.dim(2);
    if (D != in_) throw ShapeError("LSTM: input width mismatch");
    const std::size_t H = hidden_;
    x_cache_ = x;
    gates_.assign(T, Tensor({B, 4 * H}));
    cells_.assign(T, Tensor({B, H}));
    hiddens_.assign(T, Tensor({B, H}));

    Tensor h_prev({B, H});
    Tensor c_prev({B, H});
    Tensor out = return_seq_ ? Tensor({B, T, H}) : Tensor({B, H});

    for (std::size_t step = 0; step < T; ++step) {
        std::size_t t = reverse_ ? T - 1 - step : step;
        Tensor& g = gates_[step];
        // g = x_t Wx + h_prev Wh + b
        Tensor xt({B, D});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t d = 0; d < D; ++d)
                xt.at(bi, d) = x.data()[(bi * T + t) * D + d];
        kernels().matmul(xt.data(), Wx.value.data(), g.data(), B, D, 4 * H);
        kernels().matmul_acc(h_prev.data(), Wh.value.data(), g.data(), B, H, 4 * H);
        Tensor& c = cells_[step];
        Tensor& h = hiddens_[step];
        for (std::size_t bi = 0; bi < B; ++bi) {
            double* gb = g.data() + bi * 4 * H;
            for (std::size_t j = 0; j < 4 * H; ++j) gb[j] += b.value[j];
            for (std::size_t j = 0; j < H; ++j) {
                double i_g = sigmoid(gb[j]);
                double f_g = sigmoid(gb[H + j]);
                double g_g = std::tanh(gb[2 * H + j]);
                double o_g = sigmoid(gb[3 * H + j]);
                gb[j] = i_g;
                gb[H + j] = f_g;
                gb[2 * H + j] = g_g;
                gb[3 * H + j] = o_g;
                double cv = f_g * c_prev.at(bi, j) + i_g * g_g;
                c.at(bi, j) = cv;
                h.at(bi, j) = o_g * std::tanh(cv);
            }
        }
        if (return_seq_)
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t j = 0; j < H; ++j)
                    out.data()[(bi * T + t) * H + j] = h.at(bi, j);
        h_prev = h;
        c_prev = c;
    }
    if (!return_seq_) out = hiddens_[T - 1];
    return out;
}

Tensor LSTMDir::backward(const Tensor& dy) {
    const std::size_t B = x_cache_.dim(0), T = x_cache_.dim(1), D = in_, H = hidden_;
    Tensor dx({B, T, D});
    Tensor dh_next({B, H});
    Tensor dc_next({B, H});

    if (!return_seq_) dh_next = dy;

    for (std::size_t step = T; step-- > 0;) {
        std::size_t t = reverse_ ? T - 1 - step : step;
        Tensor dh = dh_next;
        if (return_seq_)
            for (std::size_t bi = 0; bi < B; ++bi)
                for (std::size_t j = 0; j < H; ++j)
                    dh.at(bi, j) += dy.data()[(bi * T + t) * H + j];

        const Tensor& g = gates_[step];
        const Tensor& c = cells_[step];
        const Tensor* c_prev = step > 0 ? &cells_[step - 1] : nullptr;
        const Tensor* h_prev = step > 0 ? &hiddens_[step - 1] : nullptr;

        Tensor dgates({B, 4 * H});
        Tensor dc_prev({B, H});
        for (std::size_t bi = 0; bi < B; ++bi) {
            const double* gb = g.data() + bi * 4 * H;
            double* dgb = dgates.data() + bi * 4 * H;
            for (std::size_t j = 0; j < H; ++j) {
                double i_g = gb[j], f_g = gb[H + j], g_g = gb[2 * H + j],
                       o_g = gb[3 * H + j];
                double cv = c.at(bi, j);
                double tc = std::tanh(cv);
                double dh_v = dh.at(bi, j);
                double dc = dc_next.at(bi, j) + dh_v * o_g * (1.0 - tc * tc);
                double cp = c_prev ? c_prev->at(bi, j) : 0.0;
                dgb[j] = dc * g_g * i_g * (1.0 - i_g);                 // i
                dgb[H + j] = dc * cp * f_g * (1.0 - f_g);              // f
                dgb[2 * H + j] = dc * i_g * (1.0 - g_g * g_g);         // g
                dgb[3 * H + j] = dh_v * tc * o_g * (1.0 - o_g);        // o
                dc_prev.at(bi, j) = dc * f_g;
            }
        }

        // parameter grads
        Tensor xt({B, D});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t d = 0; d < D; ++d)
                xt.at(bi, d) = x_cache_.data()[(bi * T + t) * D + d];
        kernels().matmul_tn_acc(xt.data(), dgates.data(), Wx.grad.data(), B, D, 4 * H);
        if (h_prev)
            kernels().matmul_tn_acc(h_prev->data(), dgates.data(), Wh.grad.data(),
                                    B, H, 4 * H);
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t j = 0; j < 4 * H; ++j)
                b.grad[j] += dgates.at(bi, j);

        // input grad
        Tensor dxt({B, D});
        kernels().matmul_nt(dgates.data(), Wx.value.data(), dxt.data(), B, 4 * H, D);
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t d = 0; d < D; ++d)
                dx.data()[(bi * T + t) * D + d] = dxt.at(bi, d);

        // recurrent grad
        Tensor dhp({B, H});
        kernels().matmul_nt(dgates.data(), Wh.value.data(), dhp.data(), B, 4 * H, H);
        dh_next = dhp;
        dc_next = dc_prev;
    }
    return dx;
}

// ---- BiLSTM ----

BiLSTM::BiLSTM(const std::string& name, std::size_t in, std::size_t hidden_per_dir,
               bool return_sequences)
    : fwd(name + ".fwd", in, hidden_per_dir, false, return_sequences),
      bwd(name + ".bwd", in, hidden_per_dir, true, return_sequences),
      return_seq_(return_sequences) {}

void BiLSTM::init(Rng& rng) {
    fwd.init(rng);
    bwd.init(rng);
}

Tensor BiLSTM::forward(const Tensor& x) {
    Tensor yf = fwd.forward(x);
    Tensor yb = bwd.forward(x);
    const std::size_t H = fwd.hidden();
    if (return_seq_) {
        const std::size_t B = x.dim(0), T = x.dim(1);
        Tensor y({B, T, 2 * H});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t j = 0; j < H; ++j) {
                    y.data()[(bi * T + t) * 2 * H + j] =
                        yf.data()[(bi * T + t) * H + j];
                    y.data()[(bi * T + t) * 2 * H + H + j] =
                        yb.data()[(bi * T + t) * H + j];
                }
        return y;
    }
    const std::size_t B = x.dim(0);
    Tensor y({B, 2 * H});
    for (std::size_t bi = 0; bi < B; ++bi)
        for (std::size_t j = 0; j < H; ++j) {
            y.at(bi, j) = yf.at(bi, j);
            y.at(bi, H + j) = yb.at(bi, j);
        }
    return y;
}

Tensor BiLSTM::backward(const Tensor& dy) {
    const std::size_t H = fwd.hidden();
    Tensor dyf, dyb;
    if (return_seq_) {
        const std::size_t B = dy.dim(0), T = dy.dim(1);
        dyf = Tensor({B, T, H});
        dyb = Tensor({B, T, H});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t j = 0; j < H; ++j) {
                    dyf.data()[(bi * T + t) * H + j] =
                        dy.data()[(bi * T + t) * 2 * H + j];
                    dyb.data()[(bi * T + t) * H + j] =
                        dy.data()[(bi * T + t) * 2 * H + H + j];
                }
    } else {
        const std::size_t B = dy.dim(0);
        dyf = Tensor({B, H});
        dyb = Tensor({B, H});
        for (std::size_t bi = 0; bi < B; ++bi)
            for (std::size_t j = 0; j < H; ++j) {
                dyf.at(bi, j) = dy.at(bi, j);
                dyb.at(bi, j) = dy.at(bi, H + j);
            }
    }
    Tensor dxf = fwd.backward(dyf);
    Tensor dxb = bwd.backward(dyb);
    for (std::size_t i = 0; i < dxf.size(); ++i) dxf[i] += dxb[i];
    return dxf;
}

// ---- softmax / cross-entropy ----

void softmax_rows(const Tensor& logits, Tensor& probs) {
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    probs = Tensor({B, C});
    for (std::size_t i = 0; i < B; ++i) {
        double mx = logits.at(i, 0);
        for (std::size_t j = 1; j < C; ++j) mx = std::max(mx, logits.at(i, j));
        double z = 0.0;
        for (std::size_t j = 0; j < C; ++j) {
            double e = std::exp(logits.at(i, j) - mx);
            probs.at(i, j) = e;
            z += e;
        }
        for (std::size_t j = 0; j < C; ++j) probs.at(i, j) /= z;
    }
}

double softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::size_t>& labels,
                             Tensor& probs, Tensor& dlogits) {
    const std::size_t B = logits.dim(0), C = logits.dim(1);
    if (labels.size() != B) throw ShapeError("cross_entropy: label count mismatch");
    softmax_rows(logits, probs);
    dlogits = Tensor({B, C});
    double loss = 0.0;
    for (std::size_t i = 0; i < B; ++i) {
        if (labels[i] >= C) throw InputError("cross_entropy: label out of range");
        loss -= std::log(std::max(probs.at(i, labels[i]), 1e-300));
        for (std::size_t j = 0; j < C; ++j)
            dlogits.at(i, j) =
                (probs.at(i, j) - (j == labels[i] ? 1.0 : 0.0)) / static_cast<double>(B);
    }
    return loss / static_cast<double>(B);
}

}  // namespace surgkin
