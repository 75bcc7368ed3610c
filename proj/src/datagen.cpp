#include "surgkin/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <thread>

namespace surgkin {

namespace {

constexpr double kTau = 6.283185307179586;

// Within-arm feature layout (offsets into the 7-wide arm block).
constexpr std::size_t kJaw = 0, kPitch = 1, kRoll = 2, kX = 3, kY = 4,
                      kYaw = 5, kZ = 6;

// Tremor and jitter are strongest on translation, nearly absent on the
// orientation axes so that low-rotation tasks keep quiet rotation channels.
double channel_scale(std::size_t arm_offset) {
    switch (arm_offset) {
        case kX: case kY: return 0.5;
        case kZ: return 0.6;
        case kJaw: return 0.10;
        default: return 0.05;  // pitch/roll/yaw
    }
}

struct TaskParams {
    double xyz_amp;
    double rotation_intensity;
    double jaw_amp_left;
    double jaw_amp_right;
    double waypoint_period_s;
    double z_ratio;  // vertical travel relative to in-plane travel
    bool camera_motion;
};

TaskParams task_params(TaskId t) {
    switch (t) {
        // Tool-tip cruise speed is an operator property, not a task property,
        // so translation amplitude scales with the waypoint period; tasks
        // differ in pacing, rotation demand, grasp width and how much of the
        // travel is vertical.
        case TaskId::PickAndPlace:
            return {0.62 * 2.6, 0.0, 0.55, 0.36, 2.6, 1.6, false};
        case TaskId::PegBoard:
            return {0.62 * 1.2, 0.35, 0.43, 0.29, 1.2, 1.0, false};
        case TaskId::ThreadTheRings:
            return {0.62 * 3.2, 1.00, 0.49, 0.32, 3.2, 1.3, true};
        case TaskId::RingAndRail:
            return {0.62 * 1.8, 0.60, 0.37, 0.24, 1.8, 0.8, true};
    }
    return {};
}

std::vector<std::array<double, 7>> make_waypoints(Rng rng, const TaskParams& p,
                                                  double jaw_amp) {
    constexpr std::size_t kWaypoints = 32;
    const double rot_amp = 0.40 * p.rotation_intensity;
    std::vector<std::array<double, 7>> wps(kWaypoints);
    for (auto& wp : wps) {
        wp[kJaw] = jaw_amp * rng.uniform();
        wp[kPitch] = rot_amp * rng.uniform(-1.0, 1.0);
        wp[kRoll] = 1.5 * rot_amp * rng.uniform(-1.0, 1.0);
        wp[kYaw] = 1.35 * rot_amp * rng.uniform(-1.0, 1.0);
        wp[kX] = p.xyz_amp * rng.uniform(-1.0, 1.0);
        wp[kY] = p.xyz_amp * rng.uniform(-1.0, 1.0);
        wp[kZ] = p.z_ratio * p.xyz_amp * rng.uniform(-1.0, 1.0);
    }
    return wps;
}

TaskScript make_script(TaskId t) {
    TaskParams p = task_params(t);
    TaskScript s;
    // Nominal exercise layout. Recordings redraw their own waypoint set (the
    // objects are re-racked between runs), so this copy only documents the
    // task's geometry statistics.
    std::uint64_t tag = 0xC0FFEE00ULL + static_cast<std::uint64_t>(t);
    s.left_waypoints = make_waypoints(Rng(tag).child(1), p, p.jaw_amp_left);
    s.right_waypoints = make_waypoints(Rng(tag).child(2), p, p.jaw_amp_right);
    s.rotation_intensity = p.rotation_intensity;
    s.waypoint_period_s = p.waypoint_period_s;
    s.camera_motion = p.camera_motion;
    return s;
}

// Piecewise-linear traversal of the waypoint loop with seeded segment
// timing, pauses, tremor and jitter. Writes the arm's 7 columns.
void synth_arm(Tensor& frames, std::size_t col0,
               const std::vector<std::array<double, 7>>& wps,
               double period_s, const OperatorStyle& style, Rng rng) {
    const std::size_t T = frames.dim(0);
    const std::size_t K = wps.size();

    std::array<double, 7> tremor_phase;
    for (auto& ph : tremor_phase) ph = rng.uniform(0.0, kTau);

    std::size_t wp = 0;
    // Motion is bursty: each segment travels during an initial reach phase
    // and dwells at the target for the rest, like discrete pick/place moves.
    // The dwell keeps most per-frame deltas far below the segment's travel
    // deltas, which is what makes threshold encoding sparse.
    auto draw_seg = [&](double& seg, double& move) {
        seg = std::max(4.0, period_s * kSampleRateHz / style.speed_multiplier *
                                rng.uniform(0.75, 1.25));
        move = std::max(2.0, seg * (style.move_fraction +
                                    rng.uniform(-0.04, 0.04)));
    };
    double seg_frames = 0.0, move_frames = 0.0;
    draw_seg(seg_frames, move_frames);
    double frame_in_seg = 0.0;
    std::size_t pause_left = 0;
    // Grip micro-adjustments: short jaw blips at an operator-specific rate.
    std::size_t twitch_left = 0;
    double twitch_amp = 0.0;

    for (std::size_t t = 0; t < T; ++t) {
        if (pause_left > 0) {
            --pause_left;
        } else {
            frame_in_seg += 1.0;
            if (frame_in_seg >= seg_frames) {
                frame_in_seg = 0.0;
                wp = (wp + 1) % K;
                draw_seg(seg_frames, move_frames);
                if (rng.uniform() < style.pause_probability)
                    pause_left = static_cast<std::size_t>(
                        rng.uniform(0.3, 1.2) * kSampleRateHz);
            }
        }
        if (twitch_left > 0) {
            --twitch_left;
        } else if (rng.uniform() < style.jaw_twitch_rate_hz / kSampleRateHz) {
            twitch_left = 2 + rng.index(3);
            twitch_amp = rng.uniform() < 0.5 ? 0.008 : -0.008;
        }
        double alpha = std::min(1.0, frame_in_seg / move_frames);
        const auto& a = wps[wp];
        const auto& b = wps[(wp + 1) % K];
        double time_s = static_cast<double>(t) / kSampleRateHz;
        for (std::size_t j = 0; j < 7; ++j) {
            double scale = channel_scale(j);
            double v = a[j] + alpha * (b[j] - a[j]);
            v += style.tremor_amplitude * scale *
                 std::sin(kTau * style.tremor_frequency_hz * time_s +
                          tremor_phase[j]);
            v += style.tremor_amplitude * 0.3 * scale * rng.gaussian();
            if (j == kJaw && twitch_left > 0) v += twitch_amp;
            frames.at(t, col0 + j) = v;
        }
    }
}

void synth_camera(Tensor& frames, Rng rng) {
    const std::size_t T = frames.dim(0);
    // Slow drift: the camera is repositioned occasionally, not tracked.
    std::array<double, 6> amp, freq, phase;
    for (std::size_t j = 0; j < 6; ++j) {
        amp[j] = 0.22 * rng.uniform(0.6, 1.4);
        freq[j] = rng.uniform(0.04, 0.12);
        phase[j] = rng.uniform(0.0, kTau);
    }
    for (std::size_t t = 0; t < T; ++t) {
        double time_s = static_cast<double>(t) / kSampleRateHz;
        for (std::size_t j = 0; j < 6; ++j)
            frames.at(t, j) = amp[j] * std::sin(kTau * freq[j] * time_s + phase[j]);
    }
}

void smooth_columns(Tensor& frames, std::size_t window) {
    if (window <= 1) return;
    const std::size_t T = frames.dim(0);
    const std::size_t F = frames.dim(1);
    std::size_t half = window / 2;
    std::vector<double> col(T);
    for (std::size_t f = 0; f < F; ++f) {
        for (std::size_t t = 0; t < T; ++t) col[t] = frames.at(t, f);
        for (std::size_t t = 0; t < T; ++t) {
            std::size_t lo = t >= half ? t - half : 0;
            std::size_t hi = std::min(T - 1, t + half);
            double s = 0.0;
            for (std::size_t u = lo; u <= hi; ++u) s += col[u];
            frames.at(t, f) = s / static_cast<double>(hi - lo + 1);
        }
    }
}

}  // namespace

const OperatorStyle& operator_style(OperatorId op) {
    static const OperatorStyle styles[4] = {
        // speed, tremor amp, tremor hz, pause prob, move fraction,
        // jaw twitch rate, smoothing
        // Each operator has a characteristic duty cycle (deliberate movers
        // reach quickly and dwell long, hesitant ones spread the reach out)
        // and a characteristic rate of grip micro-adjustments.
        {0.75, 0.0020, 8.0, 0.05, 0.16, 0.1, 5},  // A
        {1.50, 0.0055, 6.0, 0.30, 0.40, 1.0, 3},  // B
        {0.90, 0.0110, 9.0, 0.45, 0.28, 2.5, 3},  // C
        {1.20, 0.0035, 5.0, 0.02, 0.58, 0.4, 7},  // D
    };
    return styles[static_cast<std::size_t>(op)];
}

const TaskScript& task_script(TaskId task) {
    static const TaskScript scripts[4] = {
        make_script(TaskId::PickAndPlace), make_script(TaskId::PegBoard),
        make_script(TaskId::ThreadTheRings), make_script(TaskId::RingAndRail)};
    return scripts[static_cast<std::size_t>(task)];
}

KinematicLog generate_log(TaskId task, OperatorId op, double duration_s,
                          std::uint64_t seed, const DatagenConfig& cfg) {
    if (duration_s < 2.0)
        throw InputError("generate_log: duration must be at least 2 s");
    const TaskParams params = task_params(task);
    const OperatorStyle& style = operator_style(op);

    std::size_t T = static_cast<std::size_t>(std::llround(duration_s * kSampleRateHz));
    KinematicLog log;
    log.task = task;
    log.op = op;
    log.seed = seed;
    log.frames = Tensor({T, kNumFeatures});

    Rng root(seed);
    if (cfg.camera_motion && params.camera_motion)
        synth_camera(log.frames, root.child(10));
    // else: camera columns stay identically zero
    // The objects are re-racked between recordings, so each log draws its
    // own waypoint layout from the task's geometry statistics.
    synth_arm(log.frames, kLeftBegin,
              make_waypoints(root.child(13), params, params.jaw_amp_left),
              params.waypoint_period_s, style, root.child(11));
    synth_arm(log.frames, kRightBegin,
              make_waypoints(root.child(14), params, params.jaw_amp_right),
              params.waypoint_period_s, style, root.child(12));
    smooth_columns(log.frames, style.smoothing_window);
    return log;
}

Dataset generate_dataset(std::size_t reps_per_cell, std::uint64_t base_seed,
                         const DatagenConfig& cfg, std::size_t jobs) {
    if (reps_per_cell < 2)
        throw InputError("generate_dataset: reps_per_cell must be >= 2");

    struct Job {
        TaskId task;
        OperatorId op;
        double duration;
        std::uint64_t seed;
        std::size_t rep;
    };
    std::vector<Job> plan;
    Rng root(base_seed);
    for (std::size_t ti = 0; ti < kAllTasks.size(); ++ti) {
        for (std::size_t oi = 0; oi < kAllOperators.size(); ++oi) {
            for (std::size_t r = 0; r < reps_per_cell; ++r) {
                std::uint64_t tag = (ti * 4 + oi) * 100000ULL + r;
                Rng cell = root.child(tag);
                Job j;
                j.task = kAllTasks[ti];
                j.op = kAllOperators[oi];
                j.duration = cell.uniform(cfg.duration_min_s, cfg.duration_max_s);
                j.seed = cell.next_u64();
                j.rep = r;
                plan.push_back(j);
            }
        }
    }

    Dataset ds;
    ds.logs.resize(plan.size());
    auto worker = [&](std::size_t begin, std::size_t step) {
        for (std::size_t i = begin; i < plan.size(); i += step)
            ds.logs[i] = generate_log(plan[i].task, plan[i].op,
                                      plan[i].duration, plan[i].seed, cfg);
    };
    if (jobs <= 1) {
        worker(0, 1);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t w = 0; w < jobs; ++w) pool.emplace_back(worker, w, jobs);
        for (auto& th : pool) th.join();
    }

    for (std::size_t i = 0; i < plan.size(); ++i) {
        char rep[8];
        std::snprintf(rep, sizeof rep, "%03zu", plan[i].rep);
        ManifestEntry e;
        e.path = "logs/" + to_string(plan[i].task) + "_" + to_string(plan[i].op) +
                 "_" + rep + ".csv";
        e.task = plan[i].task;
        e.op = plan[i].op;
        e.seed = plan[i].seed;
        e.frames = ds.logs[i].num_frames();
        ds.manifest.push_back(e);
    }
    return ds;
}

}  // namespace surgkin
