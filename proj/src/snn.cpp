#include "surgkin/snn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "json.hpp"

namespace surgkin {

namespace {
using json = nlohmann::ordered_json;
}

NeuronKind neuron_kind_from_string(const std::string& s) {
    if (s == "srl" || s == "spiking_rectified_linear")
        return NeuronKind::SpikingRectifiedLinear;
    if (s == "lif") return NeuronKind::LIF;
    throw InputError("unknown neuron kind: " + s);
}

std::string to_string(NeuronKind k) {
    return k == NeuronKind::SpikingRectifiedLinear ? "srl" : "lif";
}

int neuron_step(NeuronState& state, double input_current,
                const SpikingNeuronModel& model, double dt) {
    if (dt <= 0.0) throw InputError("neuron_step: dt must be positive");
    if (model.kind == NeuronKind::SpikingRectifiedLinear) {
        state.voltage += std::max(0.0, input_current) * dt;
        if (state.voltage >= 1.0) {
            state.voltage -= 1.0;
            return 1;
        }
        return 0;
    }
    // LIF with exponential Euler and a hard refractory hold
    if (state.refractory > 0.0) {
        state.refractory = std::max(0.0, state.refractory - dt);
        state.voltage = 0.0;
        return 0;
    }
    double decay = std::exp(-dt / model.tau_rc);
    state.voltage = input_current + (state.voltage - input_current) * decay;
    if (state.voltage >= 1.0) {
        state.voltage = 0.0;
        state.refractory = model.tau_ref;
        return 1;
    }
    return 0;
}

std::size_t SnnLayer::output_size() const {
    switch (op) {
        case Op::Dense: return W.dim(1);
        case Op::Conv1d: return steps * out_ch;
        case Op::AvgPoolTime: return in_ch;
    }
    return 0;
}

namespace {

// Fold batch norm running statistics into an affine layer.
// Per output unit c: scale = gamma/sqrt(var+eps), b' = (b-mean)*scale+beta.
void fold_bn(Tensor& W, Tensor& b, const BatchNorm& bn, bool per_out_col) {
    const std::size_t C = b.size();
    for (std::size_t c = 0; c < C; ++c) {
        double scale = bn.gamma.value[c] /
                       std::sqrt(bn.running_var.value[c] + bn.eps);
        b[c] = (b[c] - bn.running_mean.value[c]) * scale + bn.beta.value[c];
        if (per_out_col) {
            // W {in, out}: scale column c
            const std::size_t in = W.dim(0);
            for (std::size_t i = 0; i < in; ++i) W.at(i, c) *= scale;
        } else {
            // conv W {K, Cin, Cout}: scale output channel c
            const std::size_t K = W.dim(0), Cin = W.dim(1), Cout = W.dim(2);
            for (std::size_t k = 0; k < K; ++k)
                for (std::size_t i = 0; i < Cin; ++i)
                    W.data()[(k * Cin + i) * Cout + c] *= scale;
        }
    }
}

SnnLayer dense_layer(const std::string& name, const Dense& d,
                     const BatchNorm* bn, bool spiking) {
    SnnLayer l;
    l.op = SnnLayer::Op::Dense;
    l.name = name;
    l.W = d.W.value;
    l.b = d.b.value;
    l.spiking = spiking;
    if (bn) fold_bn(l.W, l.b, *bn, true);
    return l;
}

// Current from one affine stage given the previous rate estimate.
std::vector<double> apply_layer(const SnnLayer& l, const std::vector<double>& x) {
    switch (l.op) {
        case SnnLayer::Op::Dense: {
            const std::size_t in = l.W.dim(0), out = l.W.dim(1);
            if (x.size() != in)
                throw ShapeError("snn layer " + l.name + ": input size mismatch");
            std::vector<double> y(l.b.data(), l.b.data() + out);
            kernels().matmul_acc(x.data(), l.W.data(), y.data(), 1, in, out);
            return y;
        }
        case SnnLayer::Op::Conv1d: {
            const std::size_t T = l.steps, Cin = l.in_ch, Cout = l.out_ch,
                              K = l.kernel, half = l.kernel / 2;
            if (x.size() != T * Cin)
                throw ShapeError("snn layer " + l.name + ": input size mismatch");
            std::vector<double> y(T * Cout, 0.0);
            for (std::size_t kk = 0; kk < K; ++kk) {
                const double* wk = l.W.data() + kk * Cin * Cout;
                std::size_t t_out_lo = kk < half ? half - kk : 0;
                std::size_t t_out_hi = kk > half ? T - (kk - half) : T;
                if (t_out_lo >= t_out_hi) continue;
                kernels().matmul_acc(x.data() + (t_out_lo + kk - half) * Cin, wk,
                                     y.data() + t_out_lo * Cout,
                                     t_out_hi - t_out_lo, Cin, Cout);
            }
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t c = 0; c < Cout; ++c) y[t * Cout + c] += l.b[c];
            return y;
        }
        case SnnLayer::Op::AvgPoolTime: {
            const std::size_t T = l.steps, C = l.in_ch;
            if (x.size() != T * C)
                throw ShapeError("snn layer " + l.name + ": input size mismatch");
            std::vector<double> y(C, 0.0);
            for (std::size_t t = 0; t < T; ++t)
                for (std::size_t c = 0; c < C; ++c)
                    y[c] += x[t * C + c] / static_cast<double>(T);
            return y;
        }
    }
    return {};
}

std::vector<double> input_vector(const SpikingNetwork& snn,
                                 const EventWindow& window) {
    if (snn.hybrid) {
        Tensor batch({1, window.x.dim(0), window.x.dim(1)},
                     std::vector<double>(window.x.data(),
                                         window.x.data() + window.x.size()));
        Tensor front = snn.source_model->recurrent_front(batch);
        return std::vector<double>(front.data(), front.data() + front.size());
    }
    return std::vector<double>(window.x.data(),
                               window.x.data() + window.x.size());
}

}  // namespace

SpikingNetwork convert(const Model& model, const ConvertOptions& opts) {
    const ModelSpec& spec = model.spec();
    SpikingNetwork snn;
    snn.source_spec = spec;
    snn.neuron = opts.neuron;
    snn.sim = opts.sim;

    bool use_bn = spec.batchnorm;
    switch (spec.kind) {
        case ModelKind::FCN: {
            const auto& s = model.fcn();
            snn.layers.push_back(dense_layer("dense1", s.dense1,
                                             use_bn ? &s.bn1 : nullptr, true));
            snn.layers.push_back(dense_layer("dense2", s.dense2,
                                             use_bn ? &s.bn2 : nullptr, true));
            snn.layers.push_back(dense_layer("dense3", s.dense3,
                                             use_bn ? &s.bn3 : nullptr, true));
            snn.layers.push_back(dense_layer("out", s.out, nullptr, false));
            break;
        }
        case ModelKind::CNN: {
            const auto& s = model.cnn();
            SnnLayer conv;
            conv.op = SnnLayer::Op::Conv1d;
            conv.name = "conv";
            conv.W = s.conv.W.value;
            conv.b = s.conv.b.value;
            conv.spiking = true;
            conv.steps = spec.input_steps;
            conv.in_ch = spec.input_features;
            conv.out_ch = s.conv.W.value.dim(2);
            conv.kernel = s.conv.kernel_size();
            if (use_bn) fold_bn(conv.W, conv.b, s.bnc, false);
            snn.layers.push_back(std::move(conv));

            SnnLayer pool;
            pool.op = SnnLayer::Op::AvgPoolTime;
            pool.name = "pool";
            pool.spiking = false;
            pool.steps = spec.input_steps;
            pool.in_ch = 128;
            snn.layers.push_back(std::move(pool));

            snn.layers.push_back(dense_layer("dense1", s.dense1,
                                             use_bn ? &s.bn1 : nullptr, true));
            snn.layers.push_back(dense_layer("dense2", s.dense2,
                                             use_bn ? &s.bn2 : nullptr, true));
            snn.layers.push_back(dense_layer("out", s.out, nullptr, false));
            break;
        }
        case ModelKind::LSTM: {
            if (!opts.allow_hybrid)
                throw ConversionError(
                    "layer rnn1 (bidirectional LSTM) has no spiking equivalent; "
                    "only the hybrid configuration is supported");
            const auto& s = model.lstm();
            snn.hybrid = true;
            snn.source_model = std::make_shared<Model>(model.spec(), 0);
            // copy trained parameters into the retained front
            auto src = model.params();
            auto dst = snn.source_model->params();
            for (std::size_t i = 0; i < src.size(); ++i)
                dst[i]->value = src[i]->value;
            snn.layers.push_back(dense_layer("dense1", s.dense1,
                                             use_bn ? &s.bn1 : nullptr, true));
            snn.layers.push_back(dense_layer("dense2", s.dense2,
                                             use_bn ? &s.bn2 : nullptr, true));
            snn.layers.push_back(dense_layer("out", s.out, nullptr, false));
            break;
        }
    }

    // Firing-rate scale per spiking layer: keep the per-step voltage
    // increment under 0.9 at the largest pre-activation seen on the
    // calibration set, so one spike per step suffices and the quantization
    // error stays near 1/steps of the ceiling.
    if (!opts.calibration.empty() &&
        snn.neuron.kind == NeuronKind::SpikingRectifiedLinear) {
        std::vector<double> max_u(snn.layers.size(), 0.0);
        for (const auto& w : opts.calibration) {
            std::vector<double> x = input_vector(snn, w);
            for (double& v : x) v *= snn.sim.input_gain;
            for (std::size_t li = 0; li < snn.layers.size(); ++li) {
                std::vector<double> u = apply_layer(snn.layers[li], x);
                if (snn.layers[li].spiking) {
                    for (double v : u) max_u[li] = std::max(max_u[li], v);
                    for (double& v : u) v = std::max(0.0, v);
                }
                x = std::move(u);
            }
        }
        for (std::size_t li = 0; li < snn.layers.size(); ++li)
            if (snn.layers[li].spiking && max_u[li] > 0.0)
                snn.layers[li].gain = 0.9 / (snn.sim.dt * max_u[li]);
    }
    return snn;
}

Tensor rate_forward(const SpikingNetwork& snn, const Tensor& batch) {
    const std::size_t B = batch.dim(0);
    Tensor logits;
    for (std::size_t bi = 0; bi < B; ++bi) {
        EventWindow w;
        w.x = Tensor({batch.dim(1), batch.dim(2)},
                     std::vector<double>(batch.data() + bi * batch.dim(1) * batch.dim(2),
                                         batch.data() + (bi + 1) * batch.dim(1) * batch.dim(2)));
        w.task = TaskId::PickAndPlace;
        w.op = OperatorId::A;
        w.log_id = 0;
        w.start = 0;
        std::vector<double> x = input_vector(snn, w);
        for (const auto& l : snn.layers) {
            x = apply_layer(l, x);
            if (l.spiking)
                for (double& v : x) v = std::max(0.0, v);
        }
        if (bi == 0) logits = Tensor({B, x.size()});
        for (std::size_t j = 0; j < x.size(); ++j) logits.at(bi, j) = x[j];
    }
    Tensor probs;
    softmax_rows(logits, probs);
    return probs;
}

Tensor simulate(const SpikingNetwork& snn, const EventWindow& window,
                std::size_t steps, double dt, SimStats* stats,
                std::vector<SimTraceRow>* trace) {
    if (steps == 0) steps = snn.sim.steps;
    if (dt <= 0.0) dt = snn.sim.dt;
    if (steps < 1) throw InputError("simulate: need at least one step");

    std::vector<double> x = input_vector(snn, window);
    std::size_t input_events = 0;
    for (double v : x)
        if (v != 0.0) ++input_events;
    for (double& v : x) v *= snn.sim.input_gain;

    SimStats local;
    SimStats& st = stats ? *stats : local;
    st = SimStats{};
    st.input_events = input_events;
    if (!snn.layers.empty())
        st.synaptic_events += input_events * snn.layers.front().output_size();

    std::vector<double> logits;
    for (std::size_t li = 0; li < snn.layers.size(); ++li) {
        const SnnLayer& l = snn.layers[li];
        std::vector<double> u = apply_layer(l, x);
        if (!l.spiking) {
            st.spikes_per_layer.push_back(0);
            x = std::move(u);
            if (li + 1 == snn.layers.size()) logits = x;
            continue;
        }
        // constant-current presentation of this layer for `steps` steps
        const std::size_t N = u.size();
        std::vector<NeuronState> states(N);
        std::vector<std::size_t> counts(N, 0);
        for (std::size_t t = 0; t < steps; ++t) {
            std::size_t step_spikes = 0;
            for (std::size_t i = 0; i < N; ++i) {
                int s = neuron_step(states[i], l.gain * u[i], snn.neuron, dt);
                counts[i] += s;
                step_spikes += s;
            }
            if (trace) trace->push_back({t, li, step_spikes});
        }
        std::size_t layer_spikes = 0;
        double denom = static_cast<double>(steps) * dt * l.gain;
        x.assign(N, 0.0);
        for (std::size_t i = 0; i < N; ++i) {
            layer_spikes += counts[i];
            x[i] = snn.neuron.amplitude * static_cast<double>(counts[i]) / denom;
        }
        st.spikes_per_layer.push_back(layer_spikes);
        st.total_spikes += layer_spikes;
        std::size_t fanout = 0;
        for (std::size_t lj = li + 1; lj < snn.layers.size(); ++lj)
            if (snn.layers[lj].op != SnnLayer::Op::AvgPoolTime) {
                fanout = snn.layers[lj].output_size();
                break;
            }
        st.synaptic_events += layer_spikes * fanout;
    }

    const std::size_t C = logits.size();
    Tensor lt({1, C}, std::move(logits));
    Tensor probs;
    softmax_rows(lt, probs);
    return probs;
}

SnnEvalResult evaluate_snn(const SpikingNetwork& snn,
                           const std::vector<EventWindow>& windows,
                           LabelTarget target, std::size_t steps, double dt) {
    if (windows.empty()) throw InputError("evaluate_snn: no windows");
    SnnEvalResult res;
    std::size_t correct = 0;
    double events = 0.0;
    for (const auto& w : windows) {
        SimStats st;
        Tensor probs = simulate(snn, w, steps, dt, &st);
        std::size_t best = 0;
        for (std::size_t c = 1; c < probs.dim(1); ++c)
            if (probs.at(0, c) > probs.at(0, best)) best = c;
        res.predictions.push_back(best);
        events += static_cast<double>(st.synaptic_events);
        if (best == label_of(w, target)) ++correct;
    }
    res.accuracy = static_cast<double>(correct) / windows.size();
    res.mean_synaptic_events = events / static_cast<double>(windows.size());
    return res;
}

namespace {

const char* op_name(SnnLayer::Op op) {
    switch (op) {
        case SnnLayer::Op::Dense: return "dense";
        case SnnLayer::Op::Conv1d: return "conv1d";
        case SnnLayer::Op::AvgPoolTime: return "avgpool_time";
    }
    return "?";
}

SnnLayer::Op op_from_name(const std::string& s) {
    if (s == "dense") return SnnLayer::Op::Dense;
    if (s == "conv1d") return SnnLayer::Op::Conv1d;
    if (s == "avgpool_time") return SnnLayer::Op::AvgPoolTime;
    throw FormatError("unknown snn layer op: " + s);
}

}  // namespace

void save_snn(const SpikingNetwork& snn, const std::string& path) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["neuron"] = {{"kind", to_string(snn.neuron.kind)},
                   {"tau_rc", snn.neuron.tau_rc},
                   {"tau_ref", snn.neuron.tau_ref},
                   {"amplitude", snn.neuron.amplitude}};
    j["sim"] = {{"dt", snn.sim.dt},
                {"steps", snn.sim.steps},
                {"input_gain", snn.sim.input_gain}};
    j["hybrid"] = snn.hybrid;
    if (snn.hybrid)
        j["source_model"] = json::parse(model_to_json_string(*snn.source_model));
    j["source_spec"] = {{"kind", to_string(snn.source_spec.kind)},
                        {"layer_sizes", snn.source_spec.layer_sizes},
                        {"dropout_rate", snn.source_spec.dropout_rate},
                        {"batchnorm", snn.source_spec.batchnorm},
                        {"num_classes", snn.source_spec.num_classes},
                        {"input_steps", snn.source_spec.input_steps},
                        {"input_features", snn.source_spec.input_features}};
    json layers = json::array();
    for (const auto& l : snn.layers) {
        json lj;
        lj["name"] = l.name;
        lj["op"] = op_name(l.op);
        lj["spiking"] = l.spiking;
        lj["gain"] = l.gain;
        lj["steps"] = l.steps;
        lj["in_ch"] = l.in_ch;
        lj["out_ch"] = l.out_ch;
        lj["kernel"] = l.kernel;
        if (l.W.size() > 0) {
            lj["W_shape"] = l.W.shape();
            lj["W"] = encode_base64(l.W.data(), l.W.size());
            lj["b"] = encode_base64(l.b.data(), l.b.size());
        }
        layers.push_back(lj);
    }
    j["layers"] = layers;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write snn file: " + path);
    out << j.dump(1) << "\n";
}

SpikingNetwork load_snn(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read snn file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("snn file is not valid JSON: " + std::string(e.what()));
    }
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw FormatError("unsupported snn format version");
        SpikingNetwork snn;
        snn.neuron.kind =
            neuron_kind_from_string(j.at("neuron").at("kind").get<std::string>());
        snn.neuron.tau_rc = j.at("neuron").at("tau_rc").get<double>();
        snn.neuron.tau_ref = j.at("neuron").at("tau_ref").get<double>();
        snn.neuron.amplitude = j.at("neuron").at("amplitude").get<double>();
        snn.sim.dt = j.at("sim").at("dt").get<double>();
        snn.sim.steps = j.at("sim").at("steps").get<std::size_t>();
        snn.sim.input_gain = j.at("sim").at("input_gain").get<double>();
        snn.hybrid = j.at("hybrid").get<bool>();
        if (snn.hybrid)
            snn.source_model =
                model_from_json_string(j.at("source_model").dump());
        const json& sj = j.at("source_spec");
        snn.source_spec.kind =
            model_kind_from_string(sj.at("kind").get<std::string>());
        snn.source_spec.layer_sizes =
            sj.at("layer_sizes").get<std::vector<std::size_t>>();
        snn.source_spec.dropout_rate = sj.at("dropout_rate").get<double>();
        snn.source_spec.batchnorm = sj.at("batchnorm").get<bool>();
        snn.source_spec.num_classes = sj.at("num_classes").get<std::size_t>();
        snn.source_spec.input_steps = sj.at("input_steps").get<std::size_t>();
        snn.source_spec.input_features =
            sj.at("input_features").get<std::size_t>();
        for (const auto& lj : j.at("layers")) {
            SnnLayer l;
            l.name = lj.at("name").get<std::string>();
            l.op = op_from_name(lj.at("op").get<std::string>());
            l.spiking = lj.at("spiking").get<bool>();
            l.gain = lj.at("gain").get<double>();
            l.steps = lj.at("steps").get<std::size_t>();
            l.in_ch = lj.at("in_ch").get<std::size_t>();
            l.out_ch = lj.at("out_ch").get<std::size_t>();
            l.kernel = lj.at("kernel").get<std::size_t>();
            if (lj.contains("W")) {
                auto shape = lj.at("W_shape").get<std::vector<std::size_t>>();
                l.W = Tensor(shape, decode_base64(lj.at("W").get<std::string>()));
                auto bdata = decode_base64(lj.at("b").get<std::string>());
                const std::size_t blen = bdata.size();
                l.b = Tensor({blen}, std::move(bdata));
            }
            snn.layers.push_back(std::move(l));
        }
        return snn;
    } catch (const json::exception& e) {
        throw FormatError("snn file malformed: " + std::string(e.what()));
    }
}

}  // namespace surgkin
