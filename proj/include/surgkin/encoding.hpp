#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "surgkin/datagen.hpp"
#include "surgkin/schema.hpp"
#include "surgkin/tensor.hpp"

namespace surgkin {

// Per-step movement of one log: row t = frames[t+1] - frames[t].
struct MovementSequence {
    Tensor deltas;  // {T-1, F}
    std::size_t log_id = 0;
};

struct ThresholdVector {
    std::vector<double> theta;  // one per feature
    double calibration_fraction = 0.5;
};

// Binary spike matrix: 1 where |delta| strictly exceeds theta.
struct EventSequence {
    Tensor events;  // {T-1, F}, entries in {0,1}
    std::size_t log_id = 0;
};

struct EventWindow {
    Tensor x;  // {length, F}; binary for event mode, standardized deltas for raw
    TaskId task;
    OperatorId op;
    std::size_t log_id;
    std::size_t start;
};

struct DatasetSplit {
    std::vector<EventWindow> train;
    std::vector<EventWindow> test;
    std::vector<std::size_t> train_log_ids;
    std::vector<std::size_t> test_log_ids;
    std::string holdout;  // description
};

MovementSequence deltas(const KinematicLog& log);

ThresholdVector calibrate_thresholds(const std::vector<MovementSequence>& corpus,
                                     double fraction);

EventSequence encode_events(const MovementSequence& movements,
                            const ThresholdVector& theta);

std::vector<EventWindow> window(const EventSequence& events,
                                std::size_t length, std::size_t stride,
                                TaskId task, OperatorId op);

double sparsity(const EventSequence& events);

DatasetSplit split_stratified(const std::vector<EventWindow>& windows,
                              std::size_t holdout_exercises_per_cell,
                              std::uint64_t seed);

// Pipeline configuration shared by the CLI and tests.
struct EncodeConfig {
    double fraction = 0.5;
    std::size_t window_length = 40;
    std::size_t stride = 20;
    bool raw_mode = false;  // feed standardized deltas instead of events
    std::size_t holdout_per_cell = 2;
    std::uint64_t split_seed = 1;
};

struct RawStats {
    std::vector<double> mean;  // per feature, train corpus
    std::vector<double> stddev;
};

struct EncodedDataset {
    DatasetSplit split;
    ThresholdVector thresholds;  // event mode
    RawStats raw_stats;          // raw mode
    double event_nonzero_fraction = 0.0;
    double delta_nonzero_fraction = 0.0;
};

// Full encode path: split logs by (task, operator) cell first, calibrate on
// the train side only, then window. Keeps the leak-freedom invariant by
// construction.
EncodedDataset build_encoded_dataset(const std::vector<KinematicLog>& logs,
                                     const EncodeConfig& cfg);

// Same pipeline with one feature column removed before windowing.
EncodedDataset build_encoded_dataset_ablated(const std::vector<KinematicLog>& logs,
                                             const EncodeConfig& cfg,
                                             std::size_t dropped_feature);

}  // namespace surgkin
