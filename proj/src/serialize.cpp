#include "surgkin/serialize.hpp"

#include <cstring>
#include <fstream>

#include "json.hpp"

namespace surgkin {

namespace {

using json = nlohmann::ordered_json;

constexpr char kB64Chars[] =
    "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

}  // namespace

std::string encode_base64(const double* data, std::size_t n) {
    const unsigned char* bytes = reinterpret_cast<const unsigned char*>(data);
    std::size_t len = n * sizeof(double);
    std::string out;
    out.reserve((len + 2) / 3 * 4);
    for (std::size_t i = 0; i < len; i += 3) {
        unsigned v = bytes[i] << 16;
        if (i + 1 < len) v |= bytes[i + 1] << 8;
        if (i + 2 < len) v |= bytes[i + 2];
        out.push_back(kB64Chars[(v >> 18) & 63]);
        out.push_back(kB64Chars[(v >> 12) & 63]);
        out.push_back(i + 1 < len ? kB64Chars[(v >> 6) & 63] : '=');
        out.push_back(i + 2 < len ? kB64Chars[v & 63] : '=');
    }
    return out;
}

std::vector<double> decode_base64(const std::string& s) {
    if (s.size() % 4 != 0) throw FormatError("base64 payload has bad length");
    static int rev[256];
    static bool ready = false;
    if (!ready) {
        std::memset(rev, -1, sizeof rev);
        for (int i = 0; i < 64; ++i) rev[static_cast<unsigned char>(kB64Chars[i])] = i;
        ready = true;
    }
    std::vector<unsigned char> bytes;
    bytes.reserve(s.size() / 4 * 3);
    for (std::size_t i = 0; i < s.size(); i += 4) {
        unsigned v = 0;
        int pads = 0;
        for (int j = 0; j < 4; ++j) {
            char c = s[i + j];
            if (c == '=') {
                ++pads;
                v <<= 6;
            } else {
                int d = rev[static_cast<unsigned char>(c)];
                if (d < 0) throw FormatError("base64 payload has bad character");
                v = (v << 6) | static_cast<unsigned>(d);
            }
        }
        bytes.push_back((v >> 16) & 0xFF);
        if (pads < 2) bytes.push_back((v >> 8) & 0xFF);
        if (pads < 1) bytes.push_back(v & 0xFF);
    }
    if (bytes.size() % sizeof(double) != 0)
        throw FormatError("base64 payload is not a whole number of doubles");
    std::vector<double> out(bytes.size() / sizeof(double));
    std::memcpy(out.data(), bytes.data(), bytes.size());
    return out;
}

namespace {

json spec_to_json(const ModelSpec& s) {
    json j;
    j["kind"] = to_string(s.kind);
    j["layer_sizes"] = s.layer_sizes;
    j["dropout_rate"] = s.dropout_rate;
    j["batchnorm"] = s.batchnorm;
    j["num_classes"] = s.num_classes;
    j["input_steps"] = s.input_steps;
    j["input_features"] = s.input_features;
    return j;
}

ModelSpec spec_from_json(const json& j) {
    ModelSpec s;
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    s.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
    s.dropout_rate = j.at("dropout_rate").get<double>();
    s.batchnorm = j.at("batchnorm").get<bool>();
    s.num_classes = j.at("num_classes").get<std::size_t>();
    s.input_steps = j.at("input_steps").get<std::size_t>();
    s.input_features = j.at("input_features").get<std::size_t>();
    return s;
}

json cfg_to_json(const TrainConfig& c) {
    json j;
    j["learning_rate"] = c.learning_rate;
    j["beta1"] = c.beta1;
    j["beta2"] = c.beta2;
    j["adam_eps"] = c.adam_eps;
    j["batch_size"] = c.batch_size;
    j["max_epochs"] = c.max_epochs;
    j["patience"] = c.patience;
    j["seed"] = c.seed;
    j["max_windows_per_log"] = c.max_windows_per_log;
    j["monitor_windows_per_log"] = c.monitor_windows_per_log;
    return j;
}

TrainConfig cfg_from_json(const json& j) {
    TrainConfig c;
    c.learning_rate = j.at("learning_rate").get<double>();
    c.beta1 = j.at("beta1").get<double>();
    c.beta2 = j.at("beta2").get<double>();
    c.adam_eps = j.at("adam_eps").get<double>();
    c.batch_size = j.at("batch_size").get<std::size_t>();
    c.max_epochs = j.at("max_epochs").get<std::size_t>();
    c.patience = j.at("patience").get<std::size_t>();
    c.seed = j.at("seed").get<std::uint64_t>();
    c.max_windows_per_log = j.at("max_windows_per_log").get<std::size_t>();
    c.monitor_windows_per_log = j.at("monitor_windows_per_log").get<std::size_t>();
    return c;
}

}  // namespace

void save_model(const Model& model, const TrainConfig& cfg,
                const ModelMetrics& metrics, const std::string& path) {
    json j;
    j["format_version"] = kModelFormatVersion;
    j["spec"] = spec_to_json(model.spec());
    j["training_config"] = cfg_to_json(cfg);
    j["metrics"] = {{"test_accuracy", metrics.test_accuracy},
                    {"train_accuracy", metrics.train_accuracy},
                    {"label_target", metrics.label_target}};
    json tensors = json::object();
    for (const Param* p : model.params()) {
        json t;
        t["shape"] = p->value.shape();
        t["data"] = encode_base64(p->value.data(), p->value.size());
        tensors[p->name] = t;
    }
    j["tensors"] = tensors;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError("cannot write model file: " + path);
    out << j.dump(1) << "\n";
}

LoadedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot read model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError("model file is not valid JSON: " + std::string(e.what()));
    }
    try {
        if (j.at("format_version").get<int>() != kModelFormatVersion)
            throw FormatError("unsupported model format version");
        LoadedModel lm;
        ModelSpec spec = spec_from_json(j.at("spec"));
        lm.train_config = cfg_from_json(j.at("training_config"));
        lm.metrics.test_accuracy = j.at("metrics").at("test_accuracy").get<double>();
        lm.metrics.train_accuracy = j.at("metrics").at("train_accuracy").get<double>();
        lm.metrics.label_target = j.at("metrics").at("label_target").get<std::string>();
        lm.model = std::make_unique<Model>(spec, 0);
        const json& tensors = j.at("tensors");
        for (Param* p : lm.model->params()) {
            if (!tensors.contains(p->name))
                throw FormatError("model file missing tensor " + p->name);
            const json& t = tensors.at(p->name);
            auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (shape != p->value.shape())
                throw FormatError("tensor " + p->name + " has mismatched shape");
            auto data = decode_base64(t.at("data").get<std::string>());
            if (data.size() != p->value.size())
                throw FormatError("tensor " + p->name + " has mismatched length");
            p->value = Tensor(shape, std::move(data));
        }
        return lm;
    } catch (const json::exception& e) {
        throw FormatError("model file malformed: " + std::string(e.what()));
    }
}

std::string model_to_json_string(const Model& model) {
    json j;
    j["spec"] = spec_to_json(model.spec());
    json tensors = json::object();
    for (const Param* p : model.params()) {
        json t;
        t["shape"] = p->value.shape();
        t["data"] = encode_base64(p->value.data(), p->value.size());
        tensors[p->name] = t;
    }
    j["tensors"] = tensors;
    return j.dump();
}

std::unique_ptr<Model> model_from_json_string(const std::string& s) {
    try {
        json j = json::parse(s);
        auto model = std::make_unique<Model>(spec_from_json(j.at("spec")), 0);
        const json& tensors = j.at("tensors");
        for (Param* p : model->params()) {
            if (!tensors.contains(p->name))
                throw FormatError("embedded model missing tensor " + p->name);
            const json& t = tensors.at(p->name);
            auto shape = t.at("shape").get<std::vector<std::size_t>>();
            if (shape != p->value.shape())
                throw FormatError("tensor " + p->name + " has mismatched shape");
            auto data = decode_base64(t.at("data").get<std::string>());
            if (data.size() != p->value.size())
                throw FormatError("tensor " + p->name + " has mismatched length");
            p->value = Tensor(shape, std::move(data));
        }
        return model;
    } catch (const json::exception& e) {
        throw FormatError("embedded model malformed: " + std::string(e.what()));
    }
}

}  // namespace surgkin
