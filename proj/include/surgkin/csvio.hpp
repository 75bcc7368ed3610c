#pragma once

#include <string>
#include <vector>

#include "surgkin/datagen.hpp"
#include "surgkin/encoding.hpp"
#include "surgkin/nets.hpp"

namespace surgkin {

// Shortest round-trip decimal form; identical bytes on reload.
std::string format_double(double v);

void write_log_csv(const KinematicLog& log, const std::string& path);
KinematicLog read_log_csv(const std::string& path, TaskId task, OperatorId op,
                          std::uint64_t seed);

void write_manifest(const std::vector<ManifestEntry>& manifest,
                    const std::string& path);
std::vector<ManifestEntry> read_manifest(const std::string& path);

void write_event_csv(const EventSequence& events, const std::string& path);

void write_thresholds_json(const ThresholdVector& tv, const std::string& path);
ThresholdVector read_thresholds_json(const std::string& path);

void write_split_json(const DatasetSplit& split, const std::string& path);

void write_history_csv(const TrainHistory& hist, const std::string& path);

}  // namespace surgkin
