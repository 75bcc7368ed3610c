#pragma once

#include <string>
#include <vector>

#include "surgkin/kernels.hpp"
#include "surgkin/rng.hpp"
#include "surgkin/tensor.hpp"

namespace surgkin {

struct Param {
    std::string name;
    Tensor value;
    Tensor grad;
    bool trainable = true;

    Param() = default;
    Param(std::string n, std::vector<std::size_t> shape, bool train = true)
        : name(std::move(n)), value(shape), grad(shape), trainable(train) {}

    void zero_grad() { grad.fill(0.0); }
};

enum class Mode { Train, Eval };

// ---- affine ----

class Dense {
public:
    Dense() = default;
    Dense(const std::string& name, std::size_t in, std::size_t out);
    void init(Rng& rng);

    // X: {B, in} -> {B, out}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    Param W, b;

private:
    Tensor x_cache_;
};

// ---- batch normalization over the last axis ----
// Rows are whatever the caller flattens (B for dense, B*T for conv).
class BatchNorm {
public:
    BatchNorm() = default;
    explicit BatchNorm(const std::string& name, std::size_t channels);

    Tensor forward(const Tensor& x, Mode mode);
    Tensor backward(const Tensor& dy);

    Param gamma, beta;
    Param running_mean, running_var;  // not trained, serialized
    double momentum = 0.9;
    double eps = 1e-5;

private:
    Tensor xhat_;
    std::vector<double> invstd_;
    std::size_t rows_ = 0;
};

class ReLU {
public:
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    Tensor x_cache_;
};

class Dropout {
public:
    explicit Dropout(double rate = 0.0) : rate_(rate) {}

    Tensor forward(const Tensor& x, Mode mode, Rng& rng);
    Tensor backward(const Tensor& dy);

    double rate() const { return rate_; }

private:
    double rate_;
    Tensor mask_;
    bool identity_ = true;
};

// ---- 1-D convolution, kernel 3, stride 1, same padding ----
class Conv1D {
public:
    Conv1D() = default;
    Conv1D(const std::string& name, std::size_t in_ch, std::size_t out_ch,
           std::size_t kernel = 3);
    void init(Rng& rng);

    // X: {B, T, Cin} -> {B, T, Cout}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    Param W;  // {K, Cin, Cout}
    Param b;  // {Cout}
    std::size_t kernel_size() const { return kernel_; }

private:
    std::size_t kernel_ = 3;
    Tensor x_cache_;
};

class GlobalAvgPool {
public:
    // {B, T, C} -> {B, C}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

private:
    std::size_t steps_ = 0;
};

// ---- LSTM, one direction ----
class LSTMDir {
public:
    LSTMDir() = default;
    LSTMDir(const std::string& name, std::size_t in, std::size_t hidden,
            bool reverse, bool return_sequences);
    void init(Rng& rng);  // forget-gate bias starts at 1

    // X: {B, T, in} -> {B, T, hidden} or {B, hidden}
    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    Param Wx;  // {in, 4H}, gate order i,f,g,o
    Param Wh;  // {H, 4H}
    Param b;   // {4H}

    std::size_t hidden() const { return hidden_; }
    bool reverse() const { return reverse_; }

private:
    std::size_t in_ = 0, hidden_ = 0;
    bool reverse_ = false, return_seq_ = false;
    // caches, one entry per time step in processing order
    Tensor x_cache_;
    std::vector<Tensor> gates_;   // post-activation {B, 4H}
    std::vector<Tensor> cells_;   // {B, H}
    std::vector<Tensor> hiddens_; // {B, H}
};

class BiLSTM {
public:
    BiLSTM() = default;
    BiLSTM(const std::string& name, std::size_t in, std::size_t hidden_per_dir,
           bool return_sequences);
    void init(Rng& rng);

    Tensor forward(const Tensor& x);
    Tensor backward(const Tensor& dy);

    LSTMDir fwd, bwd;
    std::size_t output_width() const { return 2 * fwd.hidden(); }

private:
    bool return_seq_ = false;
};

// Stable softmax + mean cross-entropy. Returns loss; fills probs and the
// gradient w.r.t. logits ((p - onehot) / B).
double softmax_cross_entropy(const Tensor& logits,
                             const std::vector<std::size_t>& labels,
                             Tensor& probs, Tensor& dlogits);

void softmax_rows(const Tensor& logits, Tensor& probs);

}  // namespace surgkin
