#pragma once

#include <map>
#include <string>

#include "surgkin/nets.hpp"

namespace surgkin {

struct FormatError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

constexpr int kModelFormatVersion = 1;

std::string encode_base64(const double* data, std::size_t n);
std::vector<double> decode_base64(const std::string& s);

struct ModelMetrics {
    double test_accuracy = 0.0;
    double train_accuracy = 0.0;
    std::string label_target = "task";
};

void save_model(const Model& model, const TrainConfig& cfg,
                const ModelMetrics& metrics, const std::string& path);

struct LoadedModel {
    std::unique_ptr<Model> model;
    TrainConfig train_config;
    ModelMetrics metrics;
};

LoadedModel load_model(const std::string& path);  // throws FormatError

// Spec + tensors only (no training config); used to embed a model inside
// other documents.
std::string model_to_json_string(const Model& model);
std::unique_ptr<Model> model_from_json_string(const std::string& s);

}  // namespace surgkin
