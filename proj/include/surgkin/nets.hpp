#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "surgkin/encoding.hpp"
#include "surgkin/layers.hpp"

namespace surgkin {

struct TrainingError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { LSTM, CNN, FCN };
enum class LabelTarget { Task, Operator };

std::string to_string(ModelKind k);
std::string to_string(LabelTarget t);
ModelKind model_kind_from_string(const std::string& s);
LabelTarget label_target_from_string(const std::string& s);

std::size_t label_of(const EventWindow& w, LabelTarget target);

struct ModelSpec {
    ModelKind kind = ModelKind::LSTM;
    std::vector<std::size_t> layer_sizes;  // filled by defaults when empty
    double dropout_rate = 0.2;
    bool batchnorm = true;
    std::size_t num_classes = 4;
    std::size_t input_steps = 40;
    std::size_t input_features = 20;

    void apply_defaults();
    void validate() const;  // throws ShapeError on bad layer_sizes
};

// One trained classifier. Layer stacks are public: the converter and the
// serializer walk them directly.
class Model {
public:
    Model(const ModelSpec& spec, std::uint64_t seed);

    const ModelSpec& spec() const { return spec_; }

    struct Output {
        Tensor probs;      // {B, C}
        Tensor embedding;  // {B, 16}
    };

    // batch: {B, T, F}
    Output forward(const Tensor& batch, Mode mode, Rng* dropout_rng = nullptr);

    // Mean cross-entropy over the batch; gradients accumulate into params.
    double loss_and_grads(const Tensor& batch,
                          const std::vector<std::size_t>& labels,
                          Rng* dropout_rng = nullptr);

    std::vector<Param*> params();
    std::vector<const Param*> params() const;
    void zero_grads();
    std::size_t param_count() const;

    // flat views used by grad_check and the optimizer tests
    std::vector<double> flatten_params() const;
    void unflatten_params(const std::vector<double>& flat);
    std::vector<double> flatten_grads() const;

    // Rate output of the recurrent front of the LSTM model (input to the
    // dense tail), eval mode. Only valid for ModelKind::LSTM.
    Tensor recurrent_front(const Tensor& batch);

    // --- layer stacks (one populated per kind) ---
    struct LstmStack {
        BiLSTM rnn1;  // 64 per dir, sequences
        BiLSTM rnn2;  // 32 per dir, last step
        Dropout drop1{0.2}, drop2{0.2}, drop3{0.2};
        Dense dense1;  // 64 -> 64
        BatchNorm bn1;
        ReLU relu1;
        Dense dense2;  // 64 -> 16
        BatchNorm bn2;
        ReLU relu2;
        Dense out;  // 16 -> C
    };
    struct CnnStack {
        Conv1D conv;  // F -> 128
        BatchNorm bnc;
        ReLU reluc;
        Dropout dropc{0.2};
        GlobalAvgPool pool;
        Dense dense1;  // 128 -> 128
        BatchNorm bn1;
        ReLU relu1;
        Dropout drop1{0.2};
        Dense dense2;  // 128 -> 16
        BatchNorm bn2;
        ReLU relu2;
        Dense out;
    };
    struct FcnStack {
        Dense dense1;  // T*F -> 128
        BatchNorm bn1;
        ReLU relu1;
        Dropout drop1{0.2};
        Dense dense2;  // 128 -> 64
        BatchNorm bn2;
        ReLU relu2;
        Dropout drop2{0.2};
        Dense dense3;  // 64 -> 16
        BatchNorm bn3;
        ReLU relu3;
        Dense out;
    };

    LstmStack& lstm() { return *lstm_; }
    CnnStack& cnn() { return *cnn_; }
    FcnStack& fcn() { return *fcn_; }
    const LstmStack& lstm() const { return *lstm_; }
    const CnnStack& cnn() const { return *cnn_; }
    const FcnStack& fcn() const { return *fcn_; }

private:
    ModelSpec spec_;
    std::unique_ptr<LstmStack> lstm_;
    std::unique_ptr<CnnStack> cnn_;
    std::unique_ptr<FcnStack> fcn_;
    Tensor last_logits_;
};

struct TrainConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    std::size_t batch_size = 32;
    std::size_t max_epochs = 50;
    std::size_t patience = 10;
    std::uint64_t seed = 1;
    // Seeded per-log caps keep desk-scale runs affordable; 0 means no cap.
    std::size_t max_windows_per_log = 48;
    std::size_t monitor_windows_per_log = 24;  // early-stop metric subsample
};

struct TrainHistory {
    std::vector<double> train_loss;
    std::vector<double> train_accuracy;
    std::vector<double> test_accuracy;
    std::size_t best_epoch = 0;
    double best_test_accuracy = 0.0;
};

struct EvalResult {
    double accuracy = 0.0;
    std::vector<std::size_t> predictions;
    // majority vote over each source exercise
    double per_exercise_accuracy = 0.0;
};

Tensor batch_tensor(const std::vector<EventWindow>& windows,
                    const std::vector<std::size_t>& idx);

TrainHistory train(Model& model, const DatasetSplit& split, LabelTarget target,
                   const TrainConfig& cfg);

EvalResult evaluate(Model& model, const std::vector<EventWindow>& windows,
                    LabelTarget target);

// Adam with bias correction, used by train() and exposed for tests.
class AdamOptimizer {
public:
    AdamOptimizer(std::vector<Param*> params, const TrainConfig& cfg);
    void step();

private:
    std::vector<Param*> params_;
    std::vector<Tensor> m_, v_;
    double lr_, beta1_, beta2_, eps_;
    std::size_t t_ = 0;
};

}  // namespace surgkin
