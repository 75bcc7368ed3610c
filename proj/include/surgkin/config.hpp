#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "surgkin/encoding.hpp"
#include "surgkin/nets.hpp"
#include "surgkin/snn.hpp"
#include "surgkin/tsne.hpp"

namespace surgkin {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat dotted keys ("train.batch_size") stored sorted; serialization groups
// them under [section] headers, so parse -> serialize -> parse is identity.
class Config {
public:
    static Config parse(const std::string& text);  // throws ConfigError
    static Config load(const std::string& path);
    std::string serialize() const;
    void save(const std::string& path) const;

    bool has(const std::string& key) const;
    void set(const std::string& key, const std::string& value);
    // "section.key=value" from the command line
    void apply_override(const std::string& assignment);

    std::string get_string(const std::string& key, const std::string& dflt) const;
    double get_double(const std::string& key, double dflt) const;
    std::int64_t get_int(const std::string& key, std::int64_t dflt) const;
    std::uint64_t get_u64(const std::string& key, std::uint64_t dflt) const;
    bool get_bool(const std::string& key, bool dflt) const;
    std::vector<std::uint64_t> get_u64_list(const std::string& key,
                                            std::vector<std::uint64_t> dflt) const;

    const std::map<std::string, std::string>& entries() const { return kv_; }

private:
    std::map<std::string, std::string> kv_;
};

// Everything one pipeline run needs, with the shipped defaults.
struct RunConfig {
    // dataset
    std::size_t reps_per_cell = 8;
    std::uint64_t dataset_seed = 42;
    DatagenConfig datagen;
    // encoding
    EncodeConfig encode;
    // model + training
    ModelKind model_kind = ModelKind::LSTM;
    LabelTarget target = LabelTarget::Task;
    double dropout_rate = 0.2;
    bool batchnorm = true;
    TrainConfig train;
    // snn
    SpikingNeuronModel neuron;
    SimConfig sim;
    // ablation
    ModelKind ablation_kind = ModelKind::FCN;
    std::vector<std::uint64_t> ablation_seeds = {1, 2, 3};
    std::size_t ablation_max_epochs = 6;
    // embedding
    TsneConfig tsne;
    std::size_t tsne_max_points = 1000;
    // artifacts
    std::string output_dir = "out";

    ModelSpec model_spec() const;

    static RunConfig from_config(const Config& c);  // throws ConfigError
    Config to_config() const;
};

}  // namespace surgkin
