#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "surgkin/analysis.hpp"
#include "surgkin/csvio.hpp"
#include "surgkin/serialize.hpp"
#include "surgkin/snn.hpp"
#include "surgkin/svg.hpp"

namespace surgkin::cli {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

void progress(const std::string& msg) { std::cerr << "[surgkin] " << msg << "\n"; }

fs::path out_dir(const Context& ctx) { return fs::path(ctx.cfg.output_dir); }
fs::path manifest_path(const Context& ctx) { return out_dir(ctx) / "manifest.json"; }

std::string model_file_name(const RunConfig& cfg) {
    return "model_" + to_string(cfg.model_kind) + "_" + to_string(cfg.target) +
           ".json";
}

std::string snn_file_name(const RunConfig& cfg) {
    return "snn_" + to_string(cfg.model_kind) + "_" + to_string(cfg.target) +
           ".json";
}

void require(const fs::path& p, const std::string& producer) {
    if (!fs::exists(p))
        throw DependencyError("missing artifact " + p.string() +
                              "; run `surgkin " + producer + "` first");
}

std::vector<KinematicLog> load_logs(const Context& ctx) {
    require(manifest_path(ctx), "gen");
    auto manifest = read_manifest(manifest_path(ctx).string());
    std::vector<KinematicLog> logs;
    logs.reserve(manifest.size());
    for (const auto& e : manifest) {
        fs::path p = out_dir(ctx) / e.path;
        require(p, "gen");
        logs.push_back(read_log_csv(p.string(), e.task, e.op, e.seed));
    }
    return logs;
}

EncodedDataset encoded(const Context& ctx, const std::vector<KinematicLog>& logs) {
    return build_encoded_dataset(logs, ctx.cfg.encode);
}

std::vector<EventWindow> calibration_windows(const DatasetSplit& split) {
    std::vector<EventWindow> cal;
    for (std::size_t i = 0; i < split.train.size() && cal.size() < 64;
         i += std::max<std::size_t>(1, split.train.size() / 64))
        cal.push_back(split.train[i]);
    return cal;
}

}  // namespace

void cmd_gen(const Context& ctx) {
    progress("generating " + std::to_string(ctx.cfg.reps_per_cell * 16) +
             " logs (seed " + std::to_string(ctx.cfg.dataset_seed) + ")");
    Dataset ds = generate_dataset(ctx.cfg.reps_per_cell, ctx.cfg.dataset_seed,
                                  ctx.cfg.datagen, ctx.jobs);
    fs::create_directories(out_dir(ctx) / "logs");
    for (std::size_t i = 0; i < ds.logs.size(); ++i)
        write_log_csv(ds.logs[i], (out_dir(ctx) / ds.manifest[i].path).string());
    write_manifest(ds.manifest, manifest_path(ctx).string());
    std::cout << "generated " << ds.logs.size() << " logs under "
              << (out_dir(ctx) / "logs").string() << "\n"
              << "manifest: " << manifest_path(ctx).string() << "\n";
}

void cmd_encode(const Context& ctx) {
    auto logs = load_logs(ctx);
    progress("encoding " + std::to_string(logs.size()) + " logs");
    EncodedDataset ds = encoded(ctx, logs);
    fs::create_directories(out_dir(ctx) / "events");
    if (!ctx.cfg.encode.raw_mode) {
        auto manifest = read_manifest(manifest_path(ctx).string());
        for (std::size_t i = 0; i < logs.size(); ++i) {
            EventSequence ev = encode_events(deltas(logs[i]), ds.thresholds);
            ev.log_id = i;
            fs::path rel = fs::path(manifest[i].path).filename();
            write_event_csv(ev, (out_dir(ctx) / "events" / rel).string());
        }
        write_thresholds_json(ds.thresholds,
                              (out_dir(ctx) / "thresholds.json").string());
    }
    write_split_json(ds.split, (out_dir(ctx) / "split.json").string());
    std::cout << "train windows: " << ds.split.train.size()
              << "\ntest windows: " << ds.split.test.size()
              << "\nevent nonzero fraction: " << ds.event_nonzero_fraction
              << "\ndelta nonzero fraction: " << ds.delta_nonzero_fraction
              << "\n";
}

void cmd_train(const Context& ctx) {
    auto logs = load_logs(ctx);
    EncodedDataset ds = encoded(ctx, logs);
    ModelSpec spec = ctx.cfg.model_spec();
    progress("training " + to_string(spec.kind) + " for " +
             to_string(ctx.cfg.target) + " (" +
             std::to_string(ds.split.train.size()) + " train windows)");
    Model model(spec, ctx.cfg.train.seed);
    TrainHistory hist = train(model, ds.split, ctx.cfg.target, ctx.cfg.train);
    ModelMetrics metrics;
    metrics.test_accuracy = hist.best_test_accuracy;
    metrics.train_accuracy =
        hist.train_accuracy.empty() ? 0.0 : hist.train_accuracy[hist.best_epoch];
    metrics.label_target = to_string(ctx.cfg.target);
    save_model(model, ctx.cfg.train, metrics,
               (out_dir(ctx) / model_file_name(ctx.cfg)).string());
    write_history_csv(hist, (out_dir(ctx) / ("history_" + to_string(spec.kind) +
                                             "_" + to_string(ctx.cfg.target) +
                                             ".csv"))
                                .string());
    std::cout << "best epoch: " << hist.best_epoch
              << "\nbest test accuracy: " << hist.best_test_accuracy << "\n"
              << "model: " << (out_dir(ctx) / model_file_name(ctx.cfg)).string()
              << "\n";
}

void cmd_convert(const Context& ctx) {
    fs::path mp = out_dir(ctx) / model_file_name(ctx.cfg);
    require(mp, "train");
    LoadedModel lm = load_model(mp.string());
    auto logs = load_logs(ctx);
    EncodedDataset ds = encoded(ctx, logs);
    progress("converting " + to_string(lm.model->spec().kind) +
             " to a spiking network");
    ConvertOptions opts;
    opts.neuron = ctx.cfg.neuron;
    opts.sim = ctx.cfg.sim;
    opts.calibration = calibration_windows(ds.split);
    SpikingNetwork snn = convert(*lm.model, opts);
    save_snn(snn, (out_dir(ctx) / snn_file_name(ctx.cfg)).string());
    std::cout << "snn: " << (out_dir(ctx) / snn_file_name(ctx.cfg)).string()
              << (snn.hybrid ? " (hybrid: recurrent front kept in rate mode)"
                             : "")
              << "\n";
}

void cmd_eval(const Context& ctx, bool use_snn) {
    auto logs = load_logs(ctx);
    EncodedDataset ds = encoded(ctx, logs);
    std::vector<std::size_t> preds;
    double accuracy = 0.0;
    std::string evaluated;
    if (use_snn) {
        fs::path sp = out_dir(ctx) / snn_file_name(ctx.cfg);
        require(sp, "convert");
        SpikingNetwork snn = load_snn(sp.string());
        progress("evaluating snn on " + std::to_string(ds.split.test.size()) +
                 " test windows");
        SnnEvalResult res = evaluate_snn(snn, ds.split.test, ctx.cfg.target);
        preds = res.predictions;
        accuracy = res.accuracy;
        evaluated = "snn";
    } else {
        fs::path mp = out_dir(ctx) / model_file_name(ctx.cfg);
        require(mp, "train");
        LoadedModel lm = load_model(mp.string());
        progress("evaluating model on " + std::to_string(ds.split.test.size()) +
                 " test windows");
        EvalResult res = evaluate(*lm.model, ds.split.test, ctx.cfg.target);
        preds = res.predictions;
        accuracy = res.accuracy;
        evaluated = "model";
    }
    std::vector<std::size_t> labels;
    for (const auto& w : ds.split.test)
        labels.push_back(label_of(w, ctx.cfg.target));
    ConfusionMatrix cm = confusion(preds, labels, class_names_for(ctx.cfg.target));
    write_confusion_csv(cm, (out_dir(ctx) / "confusion.csv").string());
    write_text_file((out_dir(ctx) / "confusion.svg").string(),
                    svg_confusion_heatmap(cm, "Confusion (" + evaluated + ", " +
                                                  to_string(ctx.cfg.target) +
                                                  ")"));
    json report;
    report["evaluated"] = evaluated;
    report["target"] = to_string(ctx.cfg.target);
    report["accuracy"] = accuracy;
    report["test_windows"] = ds.split.test.size();
    report["confusion_csv"] = "confusion.csv";
    report["confusion_svg"] = "confusion.svg";
    {
        std::ofstream f((out_dir(ctx) / "report.json").string(),
                        std::ios::binary);
        f << report.dump(1) << "\n";
    }
    std::cout << "accuracy: " << accuracy << "\n"
              << "report: " << (out_dir(ctx) / "report.json").string() << "\n";
}

void cmd_ablate(const Context& ctx) {
    auto logs = load_logs(ctx);
    ModelSpec spec;
    spec.kind = ctx.cfg.ablation_kind;
    spec.dropout_rate = ctx.cfg.dropout_rate;
    spec.batchnorm = ctx.cfg.batchnorm;
    spec.input_steps = ctx.cfg.encode.window_length;
    spec.apply_defaults();
    TrainConfig tcfg = ctx.cfg.train;
    tcfg.max_epochs = ctx.cfg.ablation_max_epochs;
    progress("ablation sweep: 20 features x " +
             std::to_string(ctx.cfg.ablation_seeds.size()) + " seeds (" +
             to_string(spec.kind) + ")");
    AblationReport report =
        ablation_sweep(logs, ctx.cfg.encode, spec, tcfg, ctx.cfg.target,
                       ctx.cfg.ablation_seeds, ctx.jobs);
    write_ablation_csv(report, (out_dir(ctx) / "ablation.csv").string());
    write_text_file((out_dir(ctx) / "ablation.svg").string(),
                    svg_ablation_bars(report, "Feature importance (" +
                                                  to_string(ctx.cfg.target) +
                                                  ")"));
    double max_delta = 0.0;
    std::string max_name;
    for (const auto& r : report.rows)
        if (std::abs(r.delta) > std::abs(max_delta)) {
            max_delta = r.delta;
            max_name = r.feature_name;
        }
    std::cout << "baseline accuracy: " << report.rows[0].baseline_accuracy
              << "\nlargest delta: " << max_delta << " (" << max_name << ")\n"
              << "report: " << (out_dir(ctx) / "ablation.csv").string() << "\n";
}

void cmd_embed(const Context& ctx) {
    fs::path mp = out_dir(ctx) / model_file_name(ctx.cfg);
    require(mp, "train");
    LoadedModel lm = load_model(mp.string());
    auto logs = load_logs(ctx);
    EncodedDataset ds = encoded(ctx, logs);
    progress("embedding " + std::to_string(ds.split.test.size()) +
             " test windows (t-SNE)");
    EmbeddingPlot plot = embed(*lm.model, ds.split.test, ctx.cfg.target,
                               ctx.cfg.tsne, ctx.cfg.tsne_max_points);
    write_embedding_csv(plot, (out_dir(ctx) / "embedding.csv").string());
    write_text_file((out_dir(ctx) / "embedding.svg").string(),
                    svg_embedding_scatter(plot, "t-SNE of 16-dim embeddings (" +
                                                    to_string(ctx.cfg.target) +
                                                    ")"));
    SpreadStats st = spread_stats(plot);
    std::cout << "points: " << plot.labels.size()
              << "\ninitial KL: " << plot.initial_kl
              << "\nfinal KL: " << plot.final_kl
              << "\ncentroid separation / within-class spread: " << st.ratio
              << "\nplot: " << (out_dir(ctx) / "embedding.svg").string() << "\n";
}

void cmd_repro(const Context& ctx) {
    cmd_gen(ctx);
    cmd_encode(ctx);
    cmd_train(ctx);
    cmd_convert(ctx);
    cmd_eval(ctx, false);
    cmd_eval(ctx, true);
    cmd_embed(ctx);

    progress("checking pipeline invariants");
    auto logs = load_logs(ctx);
    EncodedDataset ds = encoded(ctx, logs);
    LoadedModel lm =
        load_model((out_dir(ctx) / model_file_name(ctx.cfg)).string());
    SpikingNetwork snn =
        load_snn((out_dir(ctx) / snn_file_name(ctx.cfg)).string());

    struct Row {
        std::string name;
        bool pass;
        std::string detail;
    };
    std::vector<Row> rows;

    rows.push_back({"dataset count",
                    logs.size() == ctx.cfg.reps_per_cell * 16,
                    std::to_string(logs.size()) + " logs"});

    // telescoping identity on the first log
    {
        const KinematicLog& log = logs.front();
        MovementSequence mv = deltas(log);
        double worst = 0.0;
        const std::size_t T = log.num_frames();
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            double sum = 0.0;
            for (std::size_t t = 0; t + 1 < T; ++t) sum += mv.deltas.at(t, f);
            double expect = log.frames.at(T - 1, f) - log.frames.at(0, f);
            double scale = std::max({std::abs(expect), std::abs(sum), 1e-12});
            worst = std::max(worst, std::abs(sum - expect) / scale);
        }
        rows.push_back({"telescoping deltas", worst < 1e-9,
                        "max rel err " + format_double(worst)});
    }

    if (!ctx.cfg.encode.raw_mode)
        rows.push_back(
            {"event sparsity",
             ds.event_nonzero_fraction <= 0.5 * ds.delta_nonzero_fraction,
             format_double(ds.event_nonzero_fraction) + " vs raw " +
                 format_double(ds.delta_nonzero_fraction)});

    // conversion fidelity: rate-mode network equals the source in eval mode
    {
        std::size_t n = std::min<std::size_t>(ds.split.test.size(), 100);
        std::vector<std::size_t> idx(n);
        for (std::size_t i = 0; i < n; ++i) idx[i] = i;
        Tensor batch = batch_tensor(ds.split.test, idx);
        Tensor rate = rate_forward(snn, batch);
        auto src = lm.model->forward(batch, Mode::Eval);
        double worst = 0.0;
        for (std::size_t i = 0; i < rate.size(); ++i)
            worst = std::max(worst,
                             std::abs(rate.data()[i] - src.probs.data()[i]));
        rows.push_back({"conversion fidelity", worst < 1e-6,
                        "max abs diff " + format_double(worst)});
    }

    // spiking parity against the base model
    {
        EvalResult base = evaluate(*lm.model, ds.split.test, ctx.cfg.target);
        SnnEvalResult spiking = evaluate_snn(snn, ds.split.test, ctx.cfg.target);
        double diff = std::abs(base.accuracy - spiking.accuracy);
        rows.push_back({"snn parity", diff <= 0.02,
                        "base " + format_double(base.accuracy) + ", snn " +
                            format_double(spiking.accuracy)});
    }

    // t-SNE calibration on the embedding just produced
    {
        EmbeddingPlot plot = embed(*lm.model, ds.split.test, ctx.cfg.target,
                                   ctx.cfg.tsne, ctx.cfg.tsne_max_points);
        double worst = 0.0;
        for (double h : plot.achieved_entropy)
            worst = std::max(worst,
                             std::abs(h - std::log(ctx.cfg.tsne.perplexity)));
        bool ok = worst < 1e-4 && plot.final_kl < plot.initial_kl;
        rows.push_back({"t-SNE calibration", ok,
                        "entropy err " + format_double(worst) + ", KL " +
                            format_double(plot.initial_kl) + " -> " +
                            format_double(plot.final_kl)});
    }

    bool all = true;
    std::cout << "\nacceptance table\n----------------\n";
    for (const auto& r : rows) {
        all = all && r.pass;
        std::cout << (r.pass ? "PASS" : "FAIL") << "  " << r.name << " ("
                  << r.detail << ")\n";
    }
    if (!all) throw TrainingError("repro: one or more pipeline checks failed");
}

}  // namespace surgkin::cli
