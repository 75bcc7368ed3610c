#pragma once

#include <string>

#include "surgkin/analysis.hpp"

namespace surgkin {

// Self-contained SVG documents; no external assets.
std::string svg_confusion_heatmap(const ConfusionMatrix& cm,
                                  const std::string& title);
std::string svg_ablation_bars(const AblationReport& report,
                              const std::string& title);
// One <circle> element per embedded window.
std::string svg_embedding_scatter(const EmbeddingPlot& plot,
                                  const std::string& title);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace surgkin
