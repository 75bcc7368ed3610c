#include <cmath>
#include <filesystem>

#include "doctest.h"
#include "surgkin/nets.hpp"
#include "surgkin/numcore.hpp"
#include "surgkin/serialize.hpp"

using namespace surgkin;

namespace {

// Synthetic windows whose class is encoded as a distinct event density.
std::vector<EventWindow> density_windows(std::size_t per_class, std::size_t T,
                                         std::size_t F, std::uint64_t seed) {
    const double density[4] = {0.05, 0.30, 0.60, 0.90};
    std::vector<EventWindow> ws;
    Rng rng(seed);
    for (std::size_t c = 0; c < 4; ++c) {
        for (std::size_t r = 0; r < per_class; ++r) {
            EventWindow w;
            w.x = Tensor({T, F});
            for (std::size_t i = 0; i < w.x.size(); ++i)
                w.x[i] = rng.uniform() < density[c] ? 1.0 : 0.0;
            w.task = kAllTasks[c];
            w.op = kAllOperators[c];
            w.log_id = c * per_class + r;
            w.start = 0;
            ws.push_back(std::move(w));
        }
    }
    return ws;
}

double sampled_grad_error(ModelKind kind, std::size_t T, std::size_t F,
                          std::size_t max_coords) {
    ModelSpec spec;
    spec.kind = kind;
    spec.dropout_rate = 0.0;  // keep the loss deterministic per parameter set
    spec.input_steps = T;
    spec.input_features = F;
    Model model(spec, 7);

    Tensor batch({4, T, F});
    Rng rng(3);
    for (std::size_t i = 0; i < batch.size(); ++i)
        batch[i] = rng.uniform() < 0.4 ? 1.0 : 0.0;
    std::vector<std::size_t> labels{0, 1, 2, 3};

    model.zero_grads();
    double base = model.loss_and_grads(batch, labels);
    CHECK(std::isfinite(base));
    std::vector<double> grads = model.flatten_grads();
    std::vector<double> p0 = model.flatten_params();

    auto f = [&](const std::vector<double>& p) {
        model.unflatten_params(p);
        model.zero_grads();
        return model.loss_and_grads(batch, labels);
    };
    GradCheckOptions opts;
    opts.max_coords = max_coords;
    opts.sample_seed = 5;
    double err = grad_check(f, p0, grads, opts);
    model.unflatten_params(p0);
    return err;
}

}  // namespace

TEST_CASE("softmax rows sum to one and cross-entropy matches the oracle") {
    Tensor logits({2, 2}, {0.0, 0.0, 3.0, 1.0});
    Tensor probs, dlogits;
    double loss = softmax_cross_entropy(logits, {0, 1}, probs, dlogits);
    CHECK(probs.at(0, 0) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(probs.at(0, 0) + probs.at(0, 1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(probs.at(1, 0) + probs.at(1, 1) == doctest::Approx(1.0).epsilon(1e-12));
    // row 0: -log 0.5; row 1: -log sigmoid(1-3)
    double expect = 0.5 * (std::log(2.0) - std::log(1.0 / (1.0 + std::exp(2.0))));
    CHECK(loss == doctest::Approx(expect).epsilon(1e-12));
    // gradient is (p - onehot) / B
    CHECK(dlogits.at(0, 0) == doctest::Approx((0.5 - 1.0) / 2.0).epsilon(1e-12));
    CHECK(dlogits.at(0, 1) == doctest::Approx(0.5 / 2.0).epsilon(1e-12));
}

TEST_CASE("analytic gradients agree with finite differences (FCN)") {
    CHECK(sampled_grad_error(ModelKind::FCN, 6, 5, 80) < 1e-5);
}

TEST_CASE("analytic gradients agree with finite differences (CNN)") {
    CHECK(sampled_grad_error(ModelKind::CNN, 6, 5, 60) < 1e-5);
}

TEST_CASE("analytic gradients agree with finite differences (BiLSTM)") {
    CHECK(sampled_grad_error(ModelKind::LSTM, 5, 4, 40) < 1e-5);
}

TEST_CASE("bidirectional halves coincide on time-constant input") {
    // with identical weights, the reversed direction must produce the same
    // final state as the forward one whenever the input does not vary in time
    Rng r1(4), r2(4);
    LSTMDir fwd("d", 3, 5, false, false);
    LSTMDir bwd("d", 3, 5, true, false);
    fwd.init(r1);
    bwd.init(r2);
    Tensor x({2, 6, 3});
    Rng rng(9);
    for (std::size_t b = 0; b < 2; ++b)
        for (std::size_t f = 0; f < 3; ++f) {
            double v = rng.uniform(-1.0, 1.0);
            for (std::size_t t = 0; t < 6; ++t) x[(b * 6 + t) * 3 + f] = v;
        }
    Tensor hf = fwd.forward(x);
    Tensor hb = bwd.forward(x);
    REQUIRE(hf.size() == hb.size());
    for (std::size_t i = 0; i < hf.size(); ++i)
        CHECK(hf[i] == doctest::Approx(hb[i]).epsilon(1e-12));
}

TEST_CASE("dropout is the identity in eval mode and rescales in train mode") {
    Dropout drop(0.5);
    Rng rng(2);
    Tensor x({4, 10});
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = 1.0;
    Tensor ev = drop.forward(x, Mode::Eval, rng);
    for (std::size_t i = 0; i < ev.size(); ++i) CHECK(ev[i] == 1.0);
    Tensor tr = drop.forward(x, Mode::Train, rng);
    bool any_zero = false;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        CHECK((tr[i] == 0.0 || tr[i] == doctest::Approx(2.0).epsilon(1e-12)));
        any_zero = any_zero || tr[i] == 0.0;
    }
    CHECK(any_zero);
}

TEST_CASE("batch norm tracks running statistics for eval") {
    BatchNorm bn("bn", 2);
    Tensor x({4, 2}, {1.0, 10.0, 3.0, 10.0, 5.0, 10.0, 7.0, 10.0});
    Tensor y = bn.forward(x, Mode::Train);
    // train mode standardizes with batch statistics: column means go to 0
    double m0 = (y.at(0, 0) + y.at(1, 0) + y.at(2, 0) + y.at(3, 0)) / 4.0;
    CHECK(std::abs(m0) < 1e-12);
    // constant column maps to 0 (variance clamped by eps)
    CHECK(std::abs(y.at(0, 1)) < 1e-6);
    // running stats moved toward the batch statistics
    CHECK(bn.running_mean.value[0] ==
          doctest::Approx(0.9 * 0.0 + 0.1 * 4.0).epsilon(1e-12));
    CHECK(bn.running_mean.value[1] == doctest::Approx(1.0).epsilon(1e-12));
    // eval mode uses the running statistics, not the batch
    Tensor z = bn.forward(x, Mode::Eval);
    double want = (1.0 - bn.running_mean.value[0]) /
                  std::sqrt(bn.running_var.value[0] + bn.eps);
    CHECK(z.at(0, 0) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("adam takes the textbook first step") {
    Param p("p", {1});
    p.value[0] = 1.0;
    p.grad[0] = 0.5;
    TrainConfig cfg;
    cfg.learning_rate = 0.1;
    AdamOptimizer opt({&p}, cfg);
    opt.step();
    // bias-corrected first step moves by lr * g/(|g| + eps')
    CHECK(p.value[0] == doctest::Approx(0.9).epsilon(1e-6));
}

TEST_CASE("base64 codec matches the fixed oracle") {
    double vals[2] = {1.0, -2.5};
    std::string s = encode_base64(vals, 2);
    CHECK(s == "AAAAAAAA8D8AAAAAAAAEwA==");
    std::vector<double> back = decode_base64(s);
    REQUIRE(back.size() == 2);
    CHECK(back[0] == 1.0);
    CHECK(back[1] == -2.5);
    CHECK_THROWS_AS(decode_base64("!!notbase64!!"), FormatError);
}

TEST_CASE("model serialization round-trips bitwise") {
    namespace fs = std::filesystem;
    ModelSpec spec;
    spec.kind = ModelKind::CNN;
    spec.input_steps = 8;
    spec.input_features = 6;
    Model model(spec, 21);
    TrainConfig tcfg;
    tcfg.max_epochs = 3;
    ModelMetrics metrics;
    metrics.test_accuracy = 0.75;
    metrics.label_target = "operator";

    fs::path path = fs::temp_directory_path() / "surgkin_model_rt.json";
    save_model(model, tcfg, metrics, path.string());
    LoadedModel loaded = load_model(path.string());
    fs::remove(path);

    CHECK(loaded.model->spec().kind == ModelKind::CNN);
    CHECK(loaded.model->spec().input_steps == 8);
    CHECK(loaded.metrics.test_accuracy == 0.75);
    CHECK(loaded.metrics.label_target == "operator");
    CHECK(loaded.train_config.max_epochs == 3);

    std::vector<double> a = model.flatten_params();
    std::vector<double> b = loaded.model->flatten_params();
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);

    // embedded-string form round-trips too
    auto again = model_from_json_string(model_to_json_string(model));
    std::vector<double> c = again->flatten_params();
    REQUIRE(c.size() == a.size());
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == c[i]);

    CHECK_THROWS_AS(load_model("/nonexistent/model.json"), FormatError);
}

TEST_CASE("training learns a separable toy problem deterministically") {
    std::vector<EventWindow> train_w = density_windows(32, 10, 8, 1);
    std::vector<EventWindow> test_w = density_windows(8, 10, 8, 2);
    DatasetSplit split;
    split.train = train_w;
    split.test = test_w;

    ModelSpec spec;
    spec.kind = ModelKind::FCN;
    spec.input_steps = 10;
    spec.input_features = 8;

    TrainConfig tcfg;
    tcfg.learning_rate = 5e-3;
    tcfg.max_epochs = 40;
    tcfg.patience = 40;
    tcfg.seed = 3;
    tcfg.max_windows_per_log = 0;
    tcfg.monitor_windows_per_log = 0;

    Model m1(spec, 5);
    TrainHistory h1 = train(m1, split, LabelTarget::Operator, tcfg);
    CHECK(h1.best_test_accuracy > 0.9);
    CHECK(h1.train_loss.size() == h1.test_accuracy.size());
    CHECK(h1.best_epoch < h1.test_accuracy.size());

    // evaluate() agrees with its own predictions
    EvalResult ev = evaluate(m1, test_w, LabelTarget::Operator);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_w.size(); ++i)
        if (ev.predictions[i] == label_of(test_w[i], LabelTarget::Operator))
            ++hits;
    CHECK(ev.accuracy ==
          doctest::Approx(static_cast<double>(hits) / test_w.size())
              .epsilon(1e-12));
    CHECK(ev.accuracy == doctest::Approx(h1.best_test_accuracy).epsilon(1e-12));

    // a re-run from the same seeds reproduces the history exactly
    Model m2(spec, 5);
    TrainHistory h2 = train(m2, split, LabelTarget::Operator, tcfg);
    REQUIRE(h1.train_loss.size() == h2.train_loss.size());
    for (std::size_t i = 0; i < h1.train_loss.size(); ++i)
        CHECK(h1.train_loss[i] == h2.train_loss[i]);
    CHECK(h1.best_test_accuracy == h2.best_test_accuracy);
}
