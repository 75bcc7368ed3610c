#pragma once

#include <memory>
#include <string>
#include <vector>

#include "surgkin/nets.hpp"
#include "surgkin/serialize.hpp"

namespace surgkin {

struct ConversionError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class NeuronKind { SpikingRectifiedLinear, LIF };

NeuronKind neuron_kind_from_string(const std::string& s);
std::string to_string(NeuronKind k);

struct SpikingNeuronModel {
    NeuronKind kind = NeuronKind::SpikingRectifiedLinear;
    double tau_rc = 0.02;   // seconds, LIF only
    double tau_ref = 0.002; // seconds, LIF only
    double amplitude = 1.0;
};

struct NeuronState {
    double voltage = 0.0;
    double refractory = 0.0;  // seconds remaining
};

// One integration step; returns spike 0/1.
int neuron_step(NeuronState& state, double input_current,
                const SpikingNeuronModel& model, double dt);

struct SimConfig {
    double dt = 0.001;
    std::size_t steps = 200;
    double input_gain = 1.0;
};

// Affine stage of the converted network. Batch norm is already folded in,
// dropout removed.
struct SnnLayer {
    enum class Op { Dense, Conv1d, AvgPoolTime };
    Op op = Op::Dense;
    std::string name;
    Tensor W;  // Dense: {in, out}; Conv1d: {K, Cin, Cout}
    Tensor b;
    bool spiking = true;  // readout layer runs non-spiking
    // Firing-rate scale: the neuron sees gain*u and outgoing estimates are
    // divided by gain, so the layer stays rate-matched while quantization
    // error shrinks.
    double gain = 100.0;
    // conv/pool geometry
    std::size_t steps = 0, in_ch = 0, out_ch = 0, kernel = 3;

    std::size_t output_size() const;
};

struct SpikingNetwork {
    ModelSpec source_spec;
    bool hybrid = false;                   // recurrent front kept in rate mode
    std::shared_ptr<Model> source_model;   // hybrid front (full source net)
    std::vector<SnnLayer> layers;
    SpikingNeuronModel neuron;
    SimConfig sim;
};

struct ConvertOptions {
    SpikingNeuronModel neuron;
    SimConfig sim;
    // When false an LSTM source is rejected instead of falling back to the
    // hybrid configuration.
    bool allow_hybrid = true;
    // Windows used to measure per-layer activation ceilings for the firing
    // rate scale; empty keeps the default gain.
    std::vector<EventWindow> calibration;
};

SpikingNetwork convert(const Model& model, const ConvertOptions& opts = {});

// Exact rate-mode forward of the converted network (ReLU in place of the
// spiking neurons). Used for the conversion fidelity check.
Tensor rate_forward(const SpikingNetwork& snn, const Tensor& batch);

struct SimStats {
    std::vector<std::size_t> spikes_per_layer;
    std::size_t total_spikes = 0;
    std::size_t synaptic_events = 0;  // spikes (and input events) x fan-out
    std::size_t input_events = 0;     // nonzero input components
};

struct SimTraceRow {
    std::size_t step;
    std::size_t layer;
    std::size_t spikes;
};

// Constant-current presentation for sim.steps steps per layer; spike trains
// are read out as spike-count averages and fed forward.
Tensor simulate(const SpikingNetwork& snn, const EventWindow& window,
                std::size_t steps = 0, double dt = 0.0,
                SimStats* stats = nullptr,
                std::vector<SimTraceRow>* trace = nullptr);

struct SnnEvalResult {
    double accuracy = 0.0;
    std::vector<std::size_t> predictions;
    double mean_synaptic_events = 0.0;
};

SnnEvalResult evaluate_snn(const SpikingNetwork& snn,
                           const std::vector<EventWindow>& windows,
                           LabelTarget target, std::size_t steps = 0,
                           double dt = 0.0);

void save_snn(const SpikingNetwork& snn, const std::string& path);
SpikingNetwork load_snn(const std::string& path);

}  // namespace surgkin
