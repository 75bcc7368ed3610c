#pragma once

#include <cstdint>
#include <vector>

#include "surgkin/rng.hpp"
#include "surgkin/schema.hpp"
#include "surgkin/tensor.hpp"

namespace surgkin {

constexpr double kSampleRateHz = 30.0;

// One recorded exercise: T x 20 positions at 30 Hz.
struct KinematicLog {
    TaskId task;
    OperatorId op;
    Tensor frames;  // {T, 20}
    std::uint64_t seed = 0;

    std::size_t num_frames() const { return frames.dim(0); }
};

// Motion signature presets. A is the steadiest hand.
struct OperatorStyle {
    double speed_multiplier;
    double tremor_amplitude;
    double tremor_frequency_hz;
    double pause_probability;  // per waypoint
    double move_fraction;      // share of each segment spent reaching
    double jaw_twitch_rate_hz;  // grip micro-adjustments per second
    std::size_t smoothing_window;  // frames
};

const OperatorStyle& operator_style(OperatorId op);

// Nominal exercise geometry: per-arm waypoint sequences of 7-vectors in
// schema order (jaw, pitch, roll, x, y, yaw, z). Individual recordings draw
// their own waypoint layout from the same statistics; this describes the
// exercise, not any particular run.
struct TaskScript {
    std::vector<std::array<double, 7>> left_waypoints;
    std::vector<std::array<double, 7>> right_waypoints;
    double rotation_intensity;
    double waypoint_period_s;
    bool camera_motion;
};

const TaskScript& task_script(TaskId task);

struct DatagenConfig {
    double duration_min_s = 30.0;
    double duration_max_s = 180.0;
    // Master switch; when off the camera block is held constant even for
    // scripts that would move it.
    bool camera_motion = false;
};

KinematicLog generate_log(TaskId task, OperatorId op, double duration_s,
                          std::uint64_t seed, const DatagenConfig& cfg = {});

struct ManifestEntry {
    std::string path;
    TaskId task;
    OperatorId op;
    std::uint64_t seed;
    std::size_t frames;
};

struct Dataset {
    std::vector<KinematicLog> logs;
    std::vector<ManifestEntry> manifest;  // paths filled by the writer
};

Dataset generate_dataset(std::size_t reps_per_cell, std::uint64_t base_seed,
                         const DatagenConfig& cfg = {}, std::size_t jobs = 1);

}  // namespace surgkin
