#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace surgkin {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr std::size_t kNumFeatures = 20;

enum class TaskId { PickAndPlace, PegBoard, ThreadTheRings, RingAndRail };
enum class OperatorId { A, B, C, D };

constexpr std::array<TaskId, 4> kAllTasks = {
    TaskId::PickAndPlace, TaskId::PegBoard, TaskId::ThreadTheRings,
    TaskId::RingAndRail};
constexpr std::array<OperatorId, 4> kAllOperators = {
    OperatorId::A, OperatorId::B, OperatorId::C, OperatorId::D};

std::string to_string(TaskId t);
std::string to_string(OperatorId o);
TaskId task_from_string(const std::string& s);       // throws InputError
OperatorId operator_from_string(const std::string& s);

enum class FeatureGroup { Camera, LeftTool, RightTool };

// Fixed 20-feature layout used everywhere: camera block (6), left tool (7),
// right tool (7). Order and names match the simulator log header.
struct FeatureSchema {
    std::array<std::string, kNumFeatures> names;
    std::array<FeatureGroup, kNumFeatures> groups;
    // Mean |delta| per step observed on reference hardware; camera rows are
    // zero, one tool row is unpublished and left empty.
    std::array<std::optional<double>, kNumFeatures> reference_mean_movement;

    std::size_t index_of(const std::string& name) const;  // throws InputError
};

const FeatureSchema& feature_schema();

// Convenience feature indices.
constexpr std::size_t kCameraBegin = 0, kCameraEnd = 6;
constexpr std::size_t kLeftBegin = 6, kLeftEnd = 13;
constexpr std::size_t kRightBegin = 13, kRightEnd = 20;

bool is_rotation_feature(std::size_t f);  // pitch/roll/yaw of either tool
bool is_camera_feature(std::size_t f);

}  // namespace surgkin
