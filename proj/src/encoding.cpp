#include "surgkin/encoding.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace surgkin {

MovementSequence deltas(const KinematicLog& log) {
    const std::size_t T = log.num_frames();
    if (T < 2) throw InputError("deltas: log needs at least 2 frames");
    const std::size_t F = log.frames.dim(1);
    MovementSequence m;
    m.deltas = Tensor({T - 1, F});
    for (std::size_t t = 0; t + 1 < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
            m.deltas.at(t, f) = log.frames.at(t + 1, f) - log.frames.at(t, f);
    return m;
}

ThresholdVector calibrate_thresholds(const std::vector<MovementSequence>& corpus,
                                     double fraction) {
    if (corpus.empty()) throw InputError("calibrate_thresholds: empty corpus");
    if (fraction <= 0.0) throw InputError("calibrate_thresholds: fraction must be > 0");
    const std::size_t F = corpus.front().deltas.dim(1);
    std::vector<double> sum(F, 0.0);
    std::size_t rows = 0;
    for (const auto& m : corpus) {
        if (m.deltas.dim(1) != F)
            throw ShapeError("calibrate_thresholds: feature width mismatch");
        const std::size_t T = m.deltas.dim(0);
        for (std::size_t t = 0; t < T; ++t)
            for (std::size_t f = 0; f < F; ++f)
                sum[f] += std::abs(m.deltas.at(t, f));
        rows += T;
    }
    ThresholdVector tv;
    tv.calibration_fraction = fraction;
    tv.theta.resize(F);
    for (std::size_t f = 0; f < F; ++f)
        tv.theta[f] = fraction * sum[f] / static_cast<double>(rows);
    return tv;
}

EventSequence encode_events(const MovementSequence& movements,
                            const ThresholdVector& theta) {
    const std::size_t F = movements.deltas.dim(1);
    if (theta.theta.size() != F)
        throw ShapeError("encode_events: threshold dimension mismatch");
    EventSequence e;
    e.log_id = movements.log_id;
    e.events = Tensor({movements.deltas.dim(0), F});
    const std::size_t T = movements.deltas.dim(0);
    for (std::size_t t = 0; t < T; ++t)
        for (std::size_t f = 0; f < F; ++f)
            e.events.at(t, f) =
                std::abs(movements.deltas.at(t, f)) > theta.theta[f] ? 1.0 : 0.0;
    return e;
}

std::vector<EventWindow> window(const EventSequence& events,
                                std::size_t length, std::size_t stride,
                                TaskId task, OperatorId op) {
    if (length < 1 || stride < 1)
        throw InputError("window: length and stride must be >= 1");
    std::vector<EventWindow> out;
    const std::size_t T = events.events.dim(0);
    const std::size_t F = events.events.dim(1);
    for (std::size_t off = 0; off + length <= T; off += stride) {
        EventWindow w;
        w.x = Tensor({length, F});
        for (std::size_t t = 0; t < length; ++t)
            for (std::size_t f = 0; f < F; ++f)
                w.x.at(t, f) = events.events.at(off + t, f);
        w.task = task;
        w.op = op;
        w.log_id = events.log_id;
        w.start = off;
        out.push_back(std::move(w));
    }
    return out;
}

double sparsity(const EventSequence& events) {
    if (events.events.size() == 0) throw InputError("sparsity: empty sequence");
    double ones = 0.0;
    for (std::size_t i = 0; i < events.events.size(); ++i)
        ones += events.events[i];
    return ones / static_cast<double>(events.events.size());
}

namespace {

std::size_t cell_of(TaskId t, OperatorId o) {
    return static_cast<std::size_t>(t) * 4 + static_cast<std::size_t>(o);
}

// Seeded per-cell holdout draw over log ids.
std::vector<std::size_t> pick_holdout(
    const std::map<std::size_t, std::vector<std::size_t>>& cells,
    std::size_t holdout_per_cell, std::uint64_t seed) {
    std::vector<std::size_t> test_ids;
    for (const auto& [cell, ids_in] : cells) {
        if (ids_in.size() <= holdout_per_cell)
            throw InputError("split_stratified: cell " + std::to_string(cell) +
                             " has too few exercises for the holdout");
        std::vector<std::size_t> ids = ids_in;
        std::sort(ids.begin(), ids.end());
        Rng rng(Rng(seed).child(cell).next_u64());
        rng.shuffle(ids);
        for (std::size_t i = 0; i < holdout_per_cell; ++i)
            test_ids.push_back(ids[i]);
    }
    return test_ids;
}

}  // namespace

DatasetSplit split_stratified(const std::vector<EventWindow>& windows,
                              std::size_t holdout_exercises_per_cell,
                              std::uint64_t seed) {
    std::map<std::size_t, std::vector<std::size_t>> cells;
    for (const auto& w : windows) {
        auto& ids = cells[cell_of(w.task, w.op)];
        if (std::find(ids.begin(), ids.end(), w.log_id) == ids.end())
            ids.push_back(w.log_id);
    }
    std::vector<std::size_t> test_ids =
        pick_holdout(cells, holdout_exercises_per_cell, seed);

    DatasetSplit split;
    split.holdout = std::to_string(holdout_exercises_per_cell) +
                    " exercises per (task, operator) cell, seed " +
                    std::to_string(seed);
    auto is_test = [&](std::size_t id) {
        return std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end();
    };
    for (const auto& w : windows)
        (is_test(w.log_id) ? split.test : split.train).push_back(w);
    for (const auto& [cell, ids] : cells)
        for (std::size_t id : ids)
            (is_test(id) ? split.test_log_ids : split.train_log_ids).push_back(id);
    return split;
}

namespace {

EncodedDataset build_impl(const std::vector<KinematicLog>& logs,
                          const EncodeConfig& cfg,
                          std::size_t dropped_feature, bool drop) {
    if (logs.empty()) throw InputError("build_encoded_dataset: no logs");

    // Movements, with the ablated column removed up front if requested.
    std::vector<MovementSequence> movements(logs.size());
    for (std::size_t i = 0; i < logs.size(); ++i) {
        MovementSequence m = deltas(logs[i]);
        m.log_id = i;
        if (drop) {
            const std::size_t T = m.deltas.dim(0), F = m.deltas.dim(1);
            Tensor reduced({T, F - 1});
            for (std::size_t t = 0; t < T; ++t) {
                std::size_t out = 0;
                for (std::size_t f = 0; f < F; ++f) {
                    if (f == dropped_feature) continue;
                    reduced.at(t, out++) = m.deltas.at(t, f);
                }
            }
            m.deltas = std::move(reduced);
        }
        movements[i] = std::move(m);
    }
    const std::size_t F = movements.front().deltas.dim(1);

    // Decide the per-cell holdout on log ids before any calibration so the
    // thresholds and raw statistics see train logs only.
    std::map<std::size_t, std::vector<std::size_t>> cells;
    for (std::size_t i = 0; i < logs.size(); ++i)
        cells[cell_of(logs[i].task, logs[i].op)].push_back(i);
    std::vector<std::size_t> test_ids =
        pick_holdout(cells, cfg.holdout_per_cell, cfg.split_seed);
    auto is_test = [&](std::size_t id) {
        return std::find(test_ids.begin(), test_ids.end(), id) != test_ids.end();
    };

    std::vector<MovementSequence> train_corpus;
    for (const auto& m : movements)
        if (!is_test(m.log_id)) train_corpus.push_back(m);

    EncodedDataset out;
    out.split.holdout = std::to_string(cfg.holdout_per_cell) +
                        " exercises per cell, seed " +
                        std::to_string(cfg.split_seed);

    double delta_nonzero = 0.0, event_ones = 0.0, total = 0.0;

    if (!cfg.raw_mode) {
        out.thresholds = calibrate_thresholds(train_corpus, cfg.fraction);
        for (const auto& m : movements) {
            EventSequence ev = encode_events(m, out.thresholds);
            for (std::size_t i = 0; i < ev.events.size(); ++i) {
                event_ones += ev.events[i];
                if (m.deltas[i] != 0.0) delta_nonzero += 1.0;
            }
            total += static_cast<double>(ev.events.size());
            auto ws = window(ev, cfg.window_length, cfg.stride,
                             logs[m.log_id].task, logs[m.log_id].op);
            for (auto& w : ws)
                (is_test(w.log_id) ? out.split.test : out.split.train)
                    .push_back(std::move(w));
        }
    } else {
        // Standardize by train mean/std per feature; zero-variance features
        // map to zero.
        out.raw_stats.mean.assign(F, 0.0);
        out.raw_stats.stddev.assign(F, 0.0);
        std::size_t rows = 0;
        for (const auto& m : train_corpus) {
            const std::size_t T = m.deltas.dim(0);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t f = 0; f < F; ++f)
                    out.raw_stats.mean[f] += m.deltas.at(t, f);
            rows += T;
        }
        for (std::size_t f = 0; f < F; ++f)
            out.raw_stats.mean[f] /= static_cast<double>(rows);
        for (const auto& m : train_corpus) {
            const std::size_t T = m.deltas.dim(0);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t f = 0; f < F; ++f) {
                    double d = m.deltas.at(t, f) - out.raw_stats.mean[f];
                    out.raw_stats.stddev[f] += d * d;
                }
        }
        for (std::size_t f = 0; f < F; ++f)
            out.raw_stats.stddev[f] =
                std::sqrt(out.raw_stats.stddev[f] / static_cast<double>(rows));

        for (const auto& m : movements) {
            EventSequence scaled;  // reuse the windowing path
            scaled.log_id = m.log_id;
            scaled.events = Tensor({m.deltas.dim(0), F});
            for (std::size_t t = 0; t < m.deltas.dim(0); ++t)
                for (std::size_t f = 0; f < F; ++f) {
                    double sd = out.raw_stats.stddev[f];
                    scaled.events.at(t, f) =
                        sd > 0.0 ? (m.deltas.at(t, f) - out.raw_stats.mean[f]) / sd
                                 : 0.0;
                    if (m.deltas.at(t, f) != 0.0) delta_nonzero += 1.0;
                }
            total += static_cast<double>(scaled.events.size());
            auto ws = window(scaled, cfg.window_length, cfg.stride,
                             logs[m.log_id].task, logs[m.log_id].op);
            for (auto& w : ws)
                (is_test(w.log_id) ? out.split.test : out.split.train)
                    .push_back(std::move(w));
        }
    }

    out.event_nonzero_fraction = total > 0.0 ? event_ones / total : 0.0;
    out.delta_nonzero_fraction = total > 0.0 ? delta_nonzero / total : 0.0;
    for (const auto& [cell, ids] : cells)
        for (std::size_t id : ids)
            (is_test(id) ? out.split.test_log_ids : out.split.train_log_ids)
                .push_back(id);
    return out;
}

}  // namespace

EncodedDataset build_encoded_dataset(const std::vector<KinematicLog>& logs,
                                     const EncodeConfig& cfg) {
    return build_impl(logs, cfg, 0, false);
}

EncodedDataset build_encoded_dataset_ablated(const std::vector<KinematicLog>& logs,
                                             const EncodeConfig& cfg,
                                             std::size_t dropped_feature) {
    if (dropped_feature >= kNumFeatures)
        throw InputError("ablate: feature index out of range");
    return build_impl(logs, cfg, dropped_feature, true);
}

}  // namespace surgkin
