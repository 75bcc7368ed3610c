#include "surgkin/schema.hpp"

namespace surgkin {

std::string to_string(TaskId t) {
    switch (t) {
        case TaskId::PickAndPlace: return "PickAndPlace";
        case TaskId::PegBoard: return "PegBoard";
        case TaskId::ThreadTheRings: return "ThreadTheRings";
        case TaskId::RingAndRail: return "RingAndRail";
    }
    return "?";
}

std::string to_string(OperatorId o) {
    switch (o) {
        case OperatorId::A: return "A";
        case OperatorId::B: return "B";
        case OperatorId::C: return "C";
        case OperatorId::D: return "D";
    }
    return "?";
}

TaskId task_from_string(const std::string& s) {
    for (TaskId t : kAllTasks)
        if (to_string(t) == s) return t;
    throw InputError("unknown task id: " + s);
}

OperatorId operator_from_string(const std::string& s) {
    for (OperatorId o : kAllOperators)
        if (to_string(o) == s) return o;
    throw InputError("unknown operator id: " + s);
}

namespace {

FeatureSchema make_schema() {
    FeatureSchema s;
    s.names = {
        "Tool Camera Pitch", "Tool Camera Roll", "Tool Camera X",
        "Tool Camera Y", "Tool Camera Yaw", "Tool Camera Z",
        "Tool Left Jaw Opening Angle", "Tool Left Pitch", "Tool Left Roll",
        "Tool Left X", "Tool Left Y", "Tool Left Yaw", "Tool Left Z",
        "Tool Right Jaw Opening Angle", "Tool Right Pitch", "Tool Right Roll",
        "Tool Right X", "Tool Right Y", "Tool Right Yaw", "Tool Right Z"};
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        if (f < kCameraEnd)
            s.groups[f] = FeatureGroup::Camera;
        else if (f < kLeftEnd)
            s.groups[f] = FeatureGroup::LeftTool;
        else
            s.groups[f] = FeatureGroup::RightTool;
    }
    // Reference per-step mean |delta| from a single hardware log. The left
    // pitch entry was not published; it stays empty and is calibrated from
    // data like everything else.
    s.reference_mean_movement = {
        0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
        0.003162, std::nullopt, 0.003628, 0.015099, 0.014671, 0.003408, 0.020905,
        0.001955, 0.002691, 0.004513, 0.016174, 0.017899, 0.002792, 0.019928};
    return s;
}

}  // namespace

const FeatureSchema& feature_schema() {
    static const FeatureSchema s = make_schema();
    return s;
}

std::size_t FeatureSchema::index_of(const std::string& name) const {
    for (std::size_t f = 0; f < kNumFeatures; ++f)
        if (names[f] == name) return f;
    throw InputError("unknown feature name: " + name);
}

bool is_camera_feature(std::size_t f) { return f < kCameraEnd; }

bool is_rotation_feature(std::size_t f) {
    const auto& n = feature_schema().names[f];
    if (is_camera_feature(f)) return false;
    return n.find("Pitch") != std::string::npos ||
           n.find("Roll") != std::string::npos ||
           n.find("Yaw") != std::string::npos;
}

}  // namespace surgkin
