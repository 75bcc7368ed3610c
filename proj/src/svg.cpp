#include "surgkin/svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace surgkin {

namespace {

std::string esc(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << std::fixed << v;
    return ss.str();
}

std::string header(double w, double h) {
    std::ostringstream ss;
    ss << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(w)
       << "\" height=\"" << num(h) << "\" viewBox=\"0 0 " << num(w) << " "
       << num(h) << "\">\n";
    return ss.str();
}

const char* kPalette[] = {"#4477aa", "#ee6677", "#228833", "#ccbb44",
                          "#66ccee", "#aa3377", "#bbbbbb", "#000000"};

}  // namespace

std::string svg_confusion_heatmap(const ConfusionMatrix& cm,
                                  const std::string& title) {
    const std::size_t C = cm.n();
    const double cell = 64.0, left = 120.0, top = 70.0;
    const double w = left + C * cell + 30.0, h = top + C * cell + 60.0;
    std::size_t max_count = 1;
    for (std::size_t c : cm.counts) max_count = std::max(max_count, c);

    std::ostringstream ss;
    ss << header(w, h);
    ss << "<text x=\"" << num(w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">"
       << esc(title) << "</text>\n";
    for (std::size_t t = 0; t < C; ++t) {
        for (std::size_t p = 0; p < C; ++p) {
            double frac = static_cast<double>(cm.at(t, p)) /
                          static_cast<double>(max_count);
            int shade = static_cast<int>(std::lround(255.0 * (1.0 - frac)));
            double x = left + p * cell, y = top + t * cell;
            ss << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
               << num(cell) << "\" height=\"" << num(cell) << "\" fill=\"rgb("
               << shade << "," << shade << ",255)\" stroke=\"#333\"/>\n";
            ss << "<text x=\"" << num(x + cell / 2) << "\" y=\""
               << num(y + cell / 2 + 5) << "\" text-anchor=\"middle\" "
                  "font-family=\"sans-serif\" font-size=\"13\">"
               << cm.at(t, p) << "</text>\n";
        }
        ss << "<text x=\"" << num(left - 8) << "\" y=\""
           << num(top + t * cell + cell / 2 + 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"12\">"
           << esc(cm.class_names[t]) << "</text>\n";
        ss << "<text x=\"" << num(left + t * cell + cell / 2) << "\" y=\""
           << num(top - 10)
           << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
              "font-size=\"12\">"
           << esc(cm.class_names[t]) << "</text>\n";
    }
    ss << "<text x=\"" << num(left + C * cell / 2) << "\" y=\""
       << num(top + C * cell + 36)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">predicted (rows: true)</text>\n";
    ss << "</svg>\n";
    return ss.str();
}

std::string svg_ablation_bars(const AblationReport& report,
                              const std::string& title) {
    const std::size_t N = report.rows.size();
    const double bar_h = 18.0, left = 170.0, top = 50.0;
    const double plot_w = 420.0;
    const double w = left + plot_w + 40.0, h = top + N * (bar_h + 4.0) + 40.0;

    double max_abs = 1e-9;
    for (const auto& r : report.rows) max_abs = std::max(max_abs, std::abs(r.delta));

    std::ostringstream ss;
    ss << header(w, h);
    ss << "<text x=\"" << num(w / 2) << "\" y=\"24\" text-anchor=\"middle\" "
          "font-family=\"sans-serif\" font-size=\"16\">"
       << esc(title) << "</text>\n";
    double zero_x = left + plot_w / 2;
    ss << "<line x1=\"" << num(zero_x) << "\" y1=\"" << num(top - 8) << "\" x2=\""
       << num(zero_x) << "\" y2=\"" << num(top + N * (bar_h + 4.0))
       << "\" stroke=\"#888\"/>\n";
    for (std::size_t i = 0; i < N; ++i) {
        const auto& r = report.rows[i];
        double y = top + i * (bar_h + 4.0);
        double len = (plot_w / 2) * (r.delta / max_abs);
        double x = len >= 0 ? zero_x : zero_x + len;
        ss << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\""
           << num(std::abs(len)) << "\" height=\"" << num(bar_h)
           << "\" fill=\"" << (len >= 0 ? "#4477aa" : "#ee6677") << "\"/>\n";
        ss << "<text x=\"" << num(left - 6) << "\" y=\"" << num(y + bar_h - 4)
           << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
              "font-size=\"11\">"
           << esc(r.feature_name) << "</text>\n";
    }
    ss << "<text x=\"" << num(zero_x) << "\" y=\"" << num(h - 12)
       << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"12\">accuracy delta (baseline - ablated)</text>\n";
    ss << "</svg>\n";
    return ss.str();
}

std::string svg_embedding_scatter(const EmbeddingPlot& plot,
                                  const std::string& title) {
    const std::size_t N = plot.labels.size();
    const double size = 520.0, margin = 50.0;
    const double w = size + 2 * margin + 140.0, h = size + 2 * margin;

    double lo_x = 0.0, hi_x = 0.0, lo_y = 0.0, hi_y = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        lo_x = std::min(lo_x, plot.points.at(i, 0));
        hi_x = std::max(hi_x, plot.points.at(i, 0));
        lo_y = std::min(lo_y, plot.points.at(i, 1));
        hi_y = std::max(hi_y, plot.points.at(i, 1));
    }
    double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-9});

    std::ostringstream ss;
    ss << header(w, h);
    ss << "<text x=\"" << num((size + 2 * margin) / 2)
       << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
          "font-size=\"16\">"
       << esc(title) << "</text>\n";
    for (std::size_t i = 0; i < N; ++i) {
        double px = margin + (plot.points.at(i, 0) - lo_x) / span * size;
        double py = margin + (plot.points.at(i, 1) - lo_y) / span * size;
        ss << "<circle cx=\"" << num(px) << "\" cy=\"" << num(py)
           << "\" r=\"3\" fill=\"" << kPalette[plot.labels[i] % 8]
           << "\" fill-opacity=\"0.7\"/>\n";
    }
    for (std::size_t c = 0; c < plot.class_names.size(); ++c) {
        double ly = margin + 20.0 * c;
        ss << "<rect x=\"" << num(size + 2 * margin) << "\" y=\"" << num(ly)
           << "\" width=\"12\" height=\"12\" fill=\"" << kPalette[c % 8]
           << "\"/>\n";
        ss << "<text x=\"" << num(size + 2 * margin + 18) << "\" y=\""
           << num(ly + 11)
           << "\" font-family=\"sans-serif\" font-size=\"12\">"
           << esc(plot.class_names[c]) << "</text>\n";
    }
    ss << "</svg>\n";
    return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << content;
}

}  // namespace surgkin
