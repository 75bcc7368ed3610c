#include "surgkin/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include "surgkin/csvio.hpp"

namespace surgkin {

std::size_t ConfusionMatrix::total() const {
    std::size_t t = 0;
    for (std::size_t c : counts) t += c;
    return t;
}

double ConfusionMatrix::accuracy() const {
    std::size_t tr = 0;
    for (std::size_t i = 0; i < n(); ++i) tr += at(i, i);
    std::size_t tot = total();
    return tot == 0 ? 0.0 : static_cast<double>(tr) / static_cast<double>(tot);
}

ConfusionMatrix confusion(const std::vector<std::size_t>& preds,
                          const std::vector<std::size_t>& labels,
                          const std::vector<std::string>& class_names) {
    if (preds.size() != labels.size())
        throw InputError("confusion: prediction/label count mismatch");
    ConfusionMatrix cm;
    cm.class_names = class_names;
    const std::size_t C = class_names.size();
    cm.counts.assign(C * C, 0);
    for (std::size_t i = 0; i < preds.size(); ++i) {
        if (labels[i] >= C || preds[i] >= C)
            throw InputError("confusion: class index out of range");
        ++cm.counts[labels[i] * C + preds[i]];
    }
    return cm;
}

std::vector<std::string> class_names_for(LabelTarget target) {
    std::vector<std::string> names;
    if (target == LabelTarget::Task) {
        for (auto t : {TaskId::PickAndPlace, TaskId::PegBoard,
                       TaskId::ThreadTheRings, TaskId::RingAndRail})
            names.push_back(to_string(t));
    } else {
        for (auto o : {OperatorId::A, OperatorId::B, OperatorId::C, OperatorId::D})
            names.push_back(to_string(o));
    }
    return names;
}

namespace {

// One retraining on the (optionally ablated) encoding; returns test accuracy.
double run_once(const std::vector<KinematicLog>& logs, const EncodeConfig& ecfg,
                ModelSpec spec, TrainConfig tcfg, LabelTarget target,
                std::uint64_t seed, std::size_t dropped_feature,
                bool drop) {
    EncodedDataset ds = drop
        ? build_encoded_dataset_ablated(logs, ecfg, dropped_feature)
        : build_encoded_dataset(logs, ecfg);
    if (drop) spec.input_features = kNumFeatures - 1;
    tcfg.seed = seed;
    Model model(spec, seed);
    train(model, ds.split, target, tcfg);
    return evaluate(model, ds.split.test, target).accuracy;
}

double mean_over_seeds(const std::vector<KinematicLog>& logs,
                       const EncodeConfig& ecfg, const ModelSpec& spec,
                       const TrainConfig& tcfg, LabelTarget target,
                       const std::vector<std::uint64_t>& seeds,
                       std::size_t dropped_feature, bool drop) {
    if (seeds.empty()) throw InputError("ablation: need at least one seed");
    double acc = 0.0;
    for (std::uint64_t s : seeds)
        acc += run_once(logs, ecfg, spec, tcfg, target, s, dropped_feature, drop);
    return acc / static_cast<double>(seeds.size());
}

}  // namespace

double ablation_baseline(const std::vector<KinematicLog>& logs,
                         const EncodeConfig& ecfg, const ModelSpec& spec,
                         const TrainConfig& tcfg, LabelTarget target,
                         const std::vector<std::uint64_t>& seeds) {
    return mean_over_seeds(logs, ecfg, spec, tcfg, target, seeds, 0, false);
}

AblationRow ablate(const std::vector<KinematicLog>& logs,
                   std::size_t feature_index, const EncodeConfig& ecfg,
                   const ModelSpec& spec, const TrainConfig& tcfg,
                   LabelTarget target, const std::vector<std::uint64_t>& seeds,
                   double baseline_accuracy) {
    if (feature_index >= kNumFeatures)
        throw InputError("ablate: feature index out of range");
    AblationRow row;
    row.feature_index = feature_index;
    row.feature_name = feature_schema().names[feature_index];
    row.baseline_accuracy = baseline_accuracy;
    row.ablated_accuracy =
        mean_over_seeds(logs, ecfg, spec, tcfg, target, seeds, feature_index, true);
    row.delta = row.baseline_accuracy - row.ablated_accuracy;
    return row;
}

AblationReport ablation_sweep(const std::vector<KinematicLog>& logs,
                              const EncodeConfig& ecfg, const ModelSpec& spec,
                              const TrainConfig& tcfg, LabelTarget target,
                              const std::vector<std::uint64_t>& seeds,
                              std::size_t jobs) {
    AblationReport report;
    report.seeds = seeds;
    report.kind = spec.kind;
    report.target = target;
    double baseline = ablation_baseline(logs, ecfg, spec, tcfg, target, seeds);
    report.rows.resize(kNumFeatures);
    if (jobs < 1) jobs = 1;
    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            std::size_t f = next.fetch_add(1);
            if (f >= kNumFeatures) return;
            report.rows[f] =
                ablate(logs, f, ecfg, spec, tcfg, target, seeds, baseline);
        }
    };
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < jobs; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return report;
}

Tensor collect_embeddings(Model& model,
                          const std::vector<EventWindow>& windows) {
    if (windows.empty()) throw InputError("collect_embeddings: no windows");
    const std::size_t N = windows.size();
    Tensor out({N, 16});
    const std::size_t chunk = 64;
    for (std::size_t base = 0; base < N; base += chunk) {
        std::vector<std::size_t> idx;
        for (std::size_t i = base; i < std::min(base + chunk, N); ++i)
            idx.push_back(i);
        Tensor batch = batch_tensor(windows, idx);
        auto res = model.forward(batch, Mode::Eval);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < 16; ++c)
                out.at(base + r, c) = res.embedding.at(r, c);
    }
    return out;
}

EmbeddingPlot embed(Model& model, const std::vector<EventWindow>& windows,
                    LabelTarget target, const TsneConfig& cfg,
                    std::size_t max_points) {
    std::vector<std::size_t> idx(windows.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (max_points > 0 && windows.size() > max_points) {
        Rng rng(cfg.seed);
        rng.shuffle(idx);
        idx.resize(max_points);
        std::sort(idx.begin(), idx.end());
    }
    std::vector<EventWindow> chosen;
    chosen.reserve(idx.size());
    for (std::size_t i : idx) chosen.push_back(windows[i]);

    Tensor emb = collect_embeddings(model, chosen);
    TsneResult ts = tsne(emb, cfg);

    EmbeddingPlot plot;
    plot.points = std::move(ts.y);
    plot.config = cfg;
    plot.achieved_entropy = std::move(ts.achieved_entropy);
    plot.initial_kl = ts.initial_kl;
    plot.final_kl = ts.final_kl;
    plot.class_names = class_names_for(target);
    for (const auto& w : chosen) plot.labels.push_back(label_of(w, target));
    return plot;
}

SpreadStats spread_stats(const EmbeddingPlot& plot) {
    const std::size_t C = plot.class_names.size();
    const std::size_t N = plot.labels.size();
    std::vector<double> cx(C, 0.0), cy(C, 0.0);
    std::vector<std::size_t> count(C, 0);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t c = plot.labels[i];
        cx[c] += plot.points.at(i, 0);
        cy[c] += plot.points.at(i, 1);
        ++count[c];
    }
    for (std::size_t c = 0; c < C; ++c)
        if (count[c]) {
            cx[c] /= static_cast<double>(count[c]);
            cy[c] /= static_cast<double>(count[c]);
        }

    SpreadStats st;
    st.within.assign(C, 0.0);
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t c = plot.labels[i];
        double dx = plot.points.at(i, 0) - cx[c];
        double dy = plot.points.at(i, 1) - cy[c];
        st.within[c] += std::sqrt(dx * dx + dy * dy);
    }
    std::size_t present = 0;
    for (std::size_t c = 0; c < C; ++c)
        if (count[c]) {
            st.within[c] /= static_cast<double>(count[c]);
            st.mean_within += st.within[c];
            ++present;
        }
    if (present) st.mean_within /= static_cast<double>(present);

    std::size_t pairs = 0;
    for (std::size_t a = 0; a < C; ++a)
        for (std::size_t b = a + 1; b < C; ++b) {
            if (!count[a] || !count[b]) continue;
            double dx = cx[a] - cx[b];
            double dy = cy[a] - cy[b];
            st.centroid_separation += std::sqrt(dx * dx + dy * dy);
            ++pairs;
        }
    if (pairs) st.centroid_separation /= static_cast<double>(pairs);
    st.ratio = st.mean_within > 0.0 ? st.centroid_separation / st.mean_within : 0.0;
    return st;
}

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << "true\\pred";
    for (const auto& n : cm.class_names) out << "," << n;
    out << "\n";
    for (std::size_t t = 0; t < cm.n(); ++t) {
        out << cm.class_names[t];
        for (std::size_t p = 0; p < cm.n(); ++p) out << "," << cm.at(t, p);
        out << "\n";
    }
}

void write_ablation_csv(const AblationReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << "feature_index,feature_name,baseline_accuracy,ablated_accuracy,delta\n";
    for (const auto& r : report.rows)
        out << r.feature_index << "," << r.feature_name << ","
            << format_double(r.baseline_accuracy) << ","
            << format_double(r.ablated_accuracy) << ","
            << format_double(r.delta) << "\n";
}

void write_embedding_csv(const EmbeddingPlot& plot, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << "x,y,label,class\n";
    for (std::size_t i = 0; i < plot.labels.size(); ++i)
        out << format_double(plot.points.at(i, 0)) << ","
            << format_double(plot.points.at(i, 1)) << "," << plot.labels[i]
            << "," << plot.class_names[plot.labels[i]] << "\n";
}

}  // namespace surgkin
