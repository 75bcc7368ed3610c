// End-to-end acceptance checks. Each criterion prints exactly one PASS/FAIL
// line; the process exits nonzero when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <thread>
#include <vector>

#include "surgkin/analysis.hpp"
#include "surgkin/config.hpp"
#include "surgkin/datagen.hpp"
#include "surgkin/encoding.hpp"
#include "surgkin/nets.hpp"
#include "surgkin/numcore.hpp"
#include "surgkin/snn.hpp"
#include "surgkin/tsne.hpp"

namespace fs = std::filesystem;
using namespace surgkin;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;
std::map<int, std::string> g_lines;

void report(int idx, const std::string& what, bool ok, const std::string& detail) {
    char buf[640];
    std::snprintf(buf, sizeof buf, "[%s] criterion %2d: %s (%s)",
                  ok ? "PASS" : "FAIL", idx, what.c_str(), detail.c_str());
    g_lines[idx] = buf;
    std::fprintf(stderr, "%s\n", buf);  // progress while the suite runs
    std::fflush(stderr);
    if (!ok) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// Small corpus shared by the model-level criteria.
struct SmallCorpus {
    Dataset dataset;
    EncodedDataset event;
    EncodedDataset raw;
};

SmallCorpus make_small_corpus() {
    SmallCorpus sc;
    DatagenConfig dcfg;
    dcfg.duration_min_s = 20.0;
    dcfg.duration_max_s = 30.0;
    sc.dataset = generate_dataset(3, 42, dcfg, 1);
    EncodeConfig ecfg;
    ecfg.holdout_per_cell = 1;
    sc.event = build_encoded_dataset(sc.dataset.logs, ecfg);
    EncodeConfig rcfg = ecfg;
    rcfg.raw_mode = true;
    sc.raw = build_encoded_dataset(sc.dataset.logs, rcfg);
    return sc;
}

TrainConfig small_train_config(std::uint64_t seed) {
    TrainConfig t;
    t.max_epochs = 14;
    t.patience = 14;
    t.seed = seed;
    t.max_windows_per_log = 16;
    t.monitor_windows_per_log = 0;  // evaluate on the full test split
    return t;
}

ModelSpec spec_for(ModelKind kind) {
    ModelSpec spec;
    spec.kind = kind;
    spec.input_steps = 40;
    spec.input_features = 20;
    return spec;
}

// ---- criterion 1: gradient correctness ----

void criterion_gradients() {
    auto t0 = Clock::now();
    double worst = 0.0;
    std::string detail;
    for (ModelKind kind : {ModelKind::FCN, ModelKind::CNN, ModelKind::LSTM}) {
        ModelSpec spec = spec_for(kind);
        spec.dropout_rate = 0.0;  // the loss must be deterministic in params
        Model model(spec, 11);
        Tensor batch({4, 40, 20});
        Rng rng(3);
        for (std::size_t i = 0; i < batch.size(); ++i)
            batch[i] = rng.uniform() < 0.3 ? 1.0 : 0.0;
        std::vector<std::size_t> labels{0, 1, 2, 3};
        model.zero_grads();
        model.loss_and_grads(batch, labels);
        std::vector<double> grads = model.flatten_grads();
        std::vector<double> p0 = model.flatten_params();
        auto f = [&](const std::vector<double>& p) {
            model.unflatten_params(p);
            model.zero_grads();
            return model.loss_and_grads(batch, labels);
        };
        GradCheckOptions opts;
        opts.max_coords = kind == ModelKind::LSTM ? 150 : 250;
        opts.sample_seed = 7;
        double err = grad_check(f, p0, grads, opts);
        worst = std::max(worst, err);
        detail += to_string(kind) + "=" + fmt("%.2e ", err);
    }
    double secs = seconds_since(t0);
    report(1, "analytic gradients match finite differences",
           worst < 1e-4 && secs < 120.0,
           detail + fmt("in %.1f s", secs));
}

// ---- criterion 2: telescoping deltas ----

void criterion_telescoping(const Dataset& ds) {
    double worst = 0.0;
    for (const auto& log : ds.logs) {
        MovementSequence m = deltas(log);
        const std::size_t T = log.num_frames();
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            double s = 0.0;
            for (std::size_t t = 0; t + 1 < T; ++t) s += m.deltas.at(t, f);
            double expect = log.frames.at(T - 1, f) - log.frames.at(0, f);
            double scale = std::max({std::abs(s), std::abs(expect), 1e-12});
            worst = std::max(worst, std::abs(s - expect) / scale);
        }
    }
    report(2, "per-step deltas telescope to the endpoint difference",
           worst < 1e-9, fmt("worst relative error %.2e over %zu logs",
                             worst, ds.logs.size()));
}

// ---- criterion 3: classification signal on the default corpus ----

struct DefaultRun {
    EncodedDataset enc;
    std::unique_ptr<Model> task_model;
    double task_acc = 0.0;
    double op_acc = 0.0;
    double secs = 0.0;
};

DefaultRun criterion_default_training(const Dataset& ds) {
    auto t0 = Clock::now();
    DefaultRun run;
    EncodeConfig ecfg;  // shipped defaults
    run.enc = build_encoded_dataset(ds.logs, ecfg);

    TrainConfig tcfg;
    tcfg.max_epochs = 30;
    tcfg.patience = 8;
    tcfg.seed = 1;
    tcfg.max_windows_per_log = 32;
    tcfg.monitor_windows_per_log = 16;

    run.task_model = std::make_unique<Model>(spec_for(ModelKind::LSTM), 1);
    train(*run.task_model, run.enc.split, LabelTarget::Task, tcfg);
    run.task_acc =
        evaluate(*run.task_model, run.enc.split.test, LabelTarget::Task).accuracy;

    Model op_model(spec_for(ModelKind::LSTM), 1);
    train(op_model, run.enc.split, LabelTarget::Operator, tcfg);
    run.op_acc =
        evaluate(op_model, run.enc.split.test, LabelTarget::Operator).accuracy;

    run.secs = seconds_since(t0);
    report(3, "event-coded LSTM beats 0.70 on task and operator",
           run.task_acc >= 0.70 && run.op_acc >= 0.70 && run.secs < 600.0,
           fmt("task %.3f, operator %.3f, %.0f s single-threaded",
               run.task_acc, run.op_acc, run.secs));
    return run;
}

// ---- criterion 4: event encoding is not worse than raw ----

void criterion_event_vs_raw(const SmallCorpus& sc) {
    double ev_sum = 0.0, raw_sum = 0.0;
    std::string detail;
    for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
        TrainConfig tcfg = small_train_config(seed);
        Model ev_model(spec_for(ModelKind::LSTM), seed);
        TrainHistory eh = train(ev_model, sc.event.split, LabelTarget::Task, tcfg);
        Model raw_model(spec_for(ModelKind::LSTM), seed);
        TrainHistory rh = train(raw_model, sc.raw.split, LabelTarget::Task, tcfg);
        ev_sum += eh.best_test_accuracy;
        raw_sum += rh.best_test_accuracy;
        detail += fmt("s%llu %.3f/%.3f ", static_cast<unsigned long long>(seed),
                      eh.best_test_accuracy, rh.best_test_accuracy);
    }
    double ev_mean = ev_sum / 3.0, raw_mean = raw_sum / 3.0;
    report(4, "event encoding within 2 points of raw (3-seed mean)",
           ev_mean >= raw_mean - 0.02,
           detail + fmt("mean event %.3f vs raw %.3f", ev_mean, raw_mean));
}

// ---- criteria 5 + 7: conversion parity and fidelity ----

void criteria_snn(const SmallCorpus& sc) {
    bool parity_ok = true;
    double fidelity_worst = 0.0;
    double fcn_agree = 0.0;
    std::string detail;

    // calibration windows from the train split
    std::vector<EventWindow> cal(sc.event.split.train.begin(),
                                 sc.event.split.train.begin() +
                                     std::min<std::size_t>(
                                         64, sc.event.split.train.size()));

    std::vector<EventWindow> test = sc.event.split.test;
    if (test.size() > 100) test.resize(100);

    for (ModelKind kind : {ModelKind::FCN, ModelKind::CNN, ModelKind::LSTM}) {
        Model model(spec_for(kind), 5);
        TrainConfig tcfg = small_train_config(5);
        tcfg.max_epochs = 8;
        tcfg.patience = 8;
        train(model, sc.event.split, LabelTarget::Task, tcfg);

        ConvertOptions opts;
        opts.calibration = cal;
        SpikingNetwork snn = convert(model, opts);

        // fidelity: rate mode equals the eval-mode source
        std::vector<std::size_t> idx(test.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        Tensor batch = batch_tensor(test, idx);
        Tensor want = model.forward(batch, Mode::Eval).probs;
        Tensor rate = rate_forward(snn, batch);
        for (std::size_t i = 0; i < want.size(); ++i)
            fidelity_worst =
                std::max(fidelity_worst, std::abs(want[i] - rate[i]));

        // parity: simulated spiking accuracy tracks the base model
        EvalResult base = evaluate(model, test, LabelTarget::Task);
        SnnEvalResult sim = evaluate_snn(snn, test, LabelTarget::Task);
        bool ok = std::abs(base.accuracy - sim.accuracy) <= 0.02;
        parity_ok = parity_ok && ok;
        detail += fmt("%s %.3f->%.3f ", to_string(kind).c_str(), base.accuracy,
                      sim.accuracy);
        if (kind == ModelKind::FCN) {
            std::size_t agree = 0;
            for (std::size_t i = 0; i < test.size(); ++i)
                if (base.predictions[i] == sim.predictions[i]) ++agree;
            fcn_agree = static_cast<double>(agree) /
                        static_cast<double>(test.size());
        }
    }
    report(5, "spiking accuracy within 2 points of each base model",
           parity_ok && fcn_agree >= 0.98,
           detail + fmt("FCN agreement %.3f", fcn_agree));
    report(7, "folded rate-mode network equals the source to 1e-6",
           fidelity_worst < 1e-6,
           fmt("max abs probability difference %.2e on %zu windows",
               fidelity_worst, test.size()));
}

// ---- criterion 6: rate matching ----

void criterion_rate_matching() {
    const double dt = 0.001;
    const std::size_t T = 1000;
    SpikingNeuronModel srl;
    srl.kind = NeuronKind::SpikingRectifiedLinear;
    double worst = 0.0;
    for (double u : {0.0, 0.5, 1.0, 5.0, 50.0}) {
        NeuronState st;
        std::size_t count = 0;
        for (std::size_t t = 0; t < T; ++t)
            count += static_cast<std::size_t>(neuron_step(st, u, srl, dt));
        double rate = static_cast<double>(count) / (T * dt);
        worst = std::max(worst, std::abs(rate - std::max(0.0, u)));
    }
    report(6, "spiking-rectified-linear rate matches max(0, u)",
           worst <= 1.0 / (T * dt) + 1e-9,
           fmt("worst rate error %.3f Hz (allowance %.3f)", worst, 1.0 / (T * dt)));
}

// ---- criterion 8: sparsity ----

void criterion_sparsity(const Dataset& ds) {
    EncodeConfig ecfg;  // fraction = 0.5
    EncodedDataset enc = build_encoded_dataset(ds.logs, ecfg);
    bool ratio_ok = enc.event_nonzero_fraction <=
                    0.5 * enc.delta_nonzero_fraction;

    // monotonicity across 20 random threshold pairs on one log
    MovementSequence m = deltas(ds.logs.front());
    ThresholdVector base = calibrate_thresholds({m}, 1.0);
    Rng rng(77);
    bool mono_ok = true;
    for (int i = 0; i < 20; ++i) {
        double lo = rng.uniform(0.0, 1.5);
        double hi = lo + rng.uniform(0.0, 1.5);
        ThresholdVector a = base, b = base;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            a.theta[f] *= lo;
            b.theta[f] *= hi;
        }
        if (sparsity(encode_events(m, a)) < sparsity(encode_events(m, b)))
            mono_ok = false;
    }
    report(8, "event stream is sparse and monotone in the threshold",
           ratio_ok && mono_ok,
           fmt("event nonzero %.3f vs delta nonzero %.3f, monotone %s",
               enc.event_nonzero_fraction, enc.delta_nonzero_fraction,
               mono_ok ? "yes" : "no"));
}

// ---- criterion 9: ablation sanity ----

void criterion_ablation(const SmallCorpus& sc) {
    EncodeConfig ecfg;
    ecfg.holdout_per_cell = 1;
    ModelSpec spec = spec_for(ModelKind::FCN);
    TrainConfig tcfg = small_train_config(1);
    tcfg.max_epochs = 6;
    tcfg.patience = 6;
    std::vector<std::uint64_t> seeds{1, 2, 3};
    std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
    AblationReport rep = ablation_sweep(sc.dataset.logs, ecfg, spec, tcfg,
                                        LabelTarget::Task, seeds, jobs);
    bool rows_ok = rep.rows.size() == kNumFeatures;
    // camera features carry no motion; dropping one must not matter
    double cam_delta = 1.0;
    for (const auto& row : rep.rows)
        if (row.feature_index < kCameraEnd) {
            cam_delta = std::abs(row.delta);
            break;
        }
    report(9, "feature ablation: camera features are irrelevant",
           rows_ok && cam_delta <= 0.01,
           fmt("%zu rows, camera |delta| %.4f", rep.rows.size(), cam_delta));
}

// ---- criterion 10: t-SNE ----

void criterion_tsne(DefaultRun& run) {
    TsneConfig cfg;  // perplexity 30, 1000 iters
    EmbeddingPlot plot = embed(*run.task_model, run.enc.split.test,
                               LabelTarget::Task, cfg, 400);
    double target = std::log(cfg.perplexity);
    double worst_h = 0.0;
    for (double h : plot.achieved_entropy)
        worst_h = std::max(worst_h, std::abs(h - target));
    SpreadStats st = spread_stats(plot);
    report(10, "t-SNE converges and separates the task classes",
           worst_h < 1e-4 && plot.final_kl < plot.initial_kl && st.ratio > 1.0,
           fmt("entropy error %.2e, KL %.3f -> %.3f, spread ratio %.2f",
               worst_h, plot.initial_kl, plot.final_kl, st.ratio));
}

// ---- criterion 11: byte-identical repro runs ----

bool dirs_identical(const fs::path& a, const fs::path& b, std::string& why) {
    std::map<std::string, fs::path> fa, fb;
    for (auto& e : fs::recursive_directory_iterator(a))
        if (e.is_regular_file()) fa[fs::relative(e.path(), a).string()] = e.path();
    for (auto& e : fs::recursive_directory_iterator(b))
        if (e.is_regular_file()) fb[fs::relative(e.path(), b).string()] = e.path();
    if (fa.size() != fb.size()) {
        why = fmt("file count %zu vs %zu", fa.size(), fb.size());
        return false;
    }
    for (const auto& [rel, pa] : fa) {
        auto it = fb.find(rel);
        if (it == fb.end()) {
            why = "missing " + rel;
            return false;
        }
        std::ifstream ia(pa, std::ios::binary), ib(it->second, std::ios::binary);
        std::string ca((std::istreambuf_iterator<char>(ia)), {});
        std::string cb((std::istreambuf_iterator<char>(ib)), {});
        if (ca != cb) {
            why = "content differs: " + rel;
            return false;
        }
    }
    return true;
}

void criterion_determinism() {
    const char* cli = std::getenv("SURGKIN_CLI_PATH");
#ifdef SURGKIN_CLI_PATH
    if (!cli) cli = SURGKIN_CLI_PATH;
#endif
    if (!cli) {
        report(11, "repro runs are byte-identical", false,
               "SURGKIN_CLI_PATH not set");
        return;
    }
    fs::path base = fs::temp_directory_path() / "surgkin_acceptance_repro";
    fs::remove_all(base);
    fs::create_directories(base);
    fs::path cfg_path = base / "run.cfg";
    {
        RunConfig rc;
        rc.reps_per_cell = 2;
        rc.datagen.duration_min_s = 8.0;
        rc.datagen.duration_max_s = 12.0;
        rc.encode.holdout_per_cell = 1;
        rc.train.max_epochs = 2;
        rc.train.patience = 2;
        rc.train.max_windows_per_log = 8;
        rc.train.monitor_windows_per_log = 8;
        rc.sim.steps = 60;
        rc.ablation_seeds = {1};
        rc.ablation_max_epochs = 1;
        rc.tsne.iters = 400;
        rc.tsne.perplexity = 10.0;
        rc.tsne_max_points = 60;
        rc.to_config().save(cfg_path.string());
    }
    bool ok = true;
    std::string why;
    for (int i = 0; i < 2 && ok; ++i) {
        std::string out = (base / ("run" + std::to_string(i))).string();
        std::string cmd = std::string("\"") + cli + "\" -c \"" +
                          cfg_path.string() + "\" -s output.dir=" + out +
                          " repro > " + out + ".log 2>&1";
        if (std::system(cmd.c_str()) != 0) {
            ok = false;
            why = "repro exited nonzero on run " + std::to_string(i);
        }
    }
    if (ok) ok = dirs_identical(base / "run0", base / "run1", why);
    report(11, "repro runs are byte-identical", ok, ok ? "all artifacts match" : why);
    fs::remove_all(base);
}

}  // namespace

int main() {
    auto t0 = Clock::now();

    criterion_gradients();

    Dataset default_ds = generate_dataset(8, 42, {}, 1);
    criterion_telescoping(default_ds);
    criterion_sparsity(default_ds);
    criterion_rate_matching();

    SmallCorpus sc = make_small_corpus();
    criterion_event_vs_raw(sc);
    criteria_snn(sc);
    criterion_ablation(sc);

    DefaultRun run = criterion_default_training(default_ds);
    criterion_tsne(run);

    criterion_determinism();

    for (const auto& [idx, line] : g_lines) std::printf("%s\n", line.c_str());
    std::printf("%d of 11 criteria passed in %.0f s\n", 11 - g_failures,
                seconds_since(t0));
    return g_failures == 0 ? 0 : 1;
}
