#pragma once

#include <string>
#include <vector>

#include "surgkin/nets.hpp"
#include "surgkin/tsne.hpp"

namespace surgkin {

struct ConfusionMatrix {
    std::vector<std::string> class_names;
    std::vector<std::size_t> counts;  // row = true label, col = prediction

    std::size_t n() const { return class_names.size(); }
    std::size_t at(std::size_t t, std::size_t p) const { return counts[t * n() + p]; }
    std::size_t total() const;
    double accuracy() const;  // trace / total
};

ConfusionMatrix confusion(const std::vector<std::size_t>& preds,
                          const std::vector<std::size_t>& labels,
                          const std::vector<std::string>& class_names);

std::vector<std::string> class_names_for(LabelTarget target);

struct AblationRow {
    std::size_t feature_index = 0;
    std::string feature_name;
    double baseline_accuracy = 0.0;
    double ablated_accuracy = 0.0;
    double delta = 0.0;  // baseline - ablated
};

struct AblationReport {
    std::vector<AblationRow> rows;  // one per feature, schema order
    std::vector<std::uint64_t> seeds;
    ModelKind kind;
    LabelTarget target;
};

// Mean test accuracy over per-seed retrainings of the full 20-feature input.
double ablation_baseline(const std::vector<KinematicLog>& logs,
                         const EncodeConfig& ecfg, const ModelSpec& spec,
                         const TrainConfig& tcfg, LabelTarget target,
                         const std::vector<std::uint64_t>& seeds);

// Retrains with one feature column removed and reports the accuracy delta
// against a precomputed baseline.
AblationRow ablate(const std::vector<KinematicLog>& logs,
                   std::size_t feature_index, const EncodeConfig& ecfg,
                   const ModelSpec& spec, const TrainConfig& tcfg,
                   LabelTarget target, const std::vector<std::uint64_t>& seeds,
                   double baseline_accuracy);

AblationReport ablation_sweep(const std::vector<KinematicLog>& logs,
                              const EncodeConfig& ecfg, const ModelSpec& spec,
                              const TrainConfig& tcfg, LabelTarget target,
                              const std::vector<std::uint64_t>& seeds,
                              std::size_t jobs = 1);

// Eval-mode 16-dim penultimate activations, one row per window.
Tensor collect_embeddings(Model& model, const std::vector<EventWindow>& windows);

struct EmbeddingPlot {
    Tensor points;  // {N, 2}
    std::vector<std::size_t> labels;
    std::vector<std::string> class_names;
    TsneConfig config;
    std::vector<double> achieved_entropy;
    double initial_kl = 0.0;
    double final_kl = 0.0;
};

// Exact t-SNE of the model's embeddings; above max_points a seeded subsample
// is embedded instead.
EmbeddingPlot embed(Model& model, const std::vector<EventWindow>& windows,
                    LabelTarget target, const TsneConfig& cfg = {},
                    std::size_t max_points = 5000);

struct SpreadStats {
    std::vector<double> within;  // mean distance to own class centroid
    double mean_within = 0.0;
    double centroid_separation = 0.0;  // mean pairwise centroid distance
    double ratio = 0.0;                // separation / mean_within
};

SpreadStats spread_stats(const EmbeddingPlot& plot);

void write_confusion_csv(const ConfusionMatrix& cm, const std::string& path);
void write_ablation_csv(const AblationReport& report, const std::string& path);
void write_embedding_csv(const EmbeddingPlot& plot, const std::string& path);

}  // namespace surgkin
