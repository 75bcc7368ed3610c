#include "surgkin/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "surgkin/csvio.hpp"

namespace surgkin {

namespace {

std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace

Config Config::parse(const std::string& text) {
    Config c;
    std::istringstream in(text);
    std::string line, section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        if (t.front() == '[') {
            if (t.back() != ']')
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": unterminated section header");
            section = trim(t.substr(1, t.size() - 2));
            if (section.empty())
                throw ConfigError("line " + std::to_string(lineno) +
                                  ": empty section name");
            continue;
        }
        std::size_t eq = t.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) +
                              ": expected key=value");
        std::string key = trim(t.substr(0, eq));
        std::string value = trim(t.substr(eq + 1));
        if (key.empty())
            throw ConfigError("line " + std::to_string(lineno) + ": empty key");
        if (!section.empty()) key = section + "." + key;
        c.kv_[key] = value;
    }
    return c;
}

Config Config::load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse(ss.str());
}

std::string Config::serialize() const {
    std::ostringstream out;
    std::string section;
    bool first = true;
    for (const auto& [key, value] : kv_) {
        std::size_t dot = key.find('.');
        std::string sec = dot == std::string::npos ? "" : key.substr(0, dot);
        std::string name = dot == std::string::npos ? key : key.substr(dot + 1);
        if (sec != section || first) {
            if (!first) out << "\n";
            if (!sec.empty()) out << "[" << sec << "]\n";
            section = sec;
            first = false;
        }
        out << name << " = " << value << "\n";
    }
    return out.str();
}

void Config::save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write config file: " + path);
    out << serialize();
}

bool Config::has(const std::string& key) const { return kv_.count(key) > 0; }

void Config::set(const std::string& key, const std::string& value) {
    kv_[key] = value;
}

void Config::apply_override(const std::string& assignment) {
    std::size_t eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("override must look like section.key=value: " +
                          assignment);
    kv_[trim(assignment.substr(0, eq))] = trim(assignment.substr(eq + 1));
}

std::string Config::get_string(const std::string& key,
                               const std::string& dflt) const {
    auto it = kv_.find(key);
    return it == kv_.end() ? dflt : it->second;
}

double Config::get_double(const std::string& key, double dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& s = it->second;
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(key + ": expected a number, got '" + s + "'");
    return v;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& s = it->second;
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(key + ": expected an integer, got '" + s + "'");
    return v;
}

std::uint64_t Config::get_u64(const std::string& key, std::uint64_t dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    const std::string& s = it->second;
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size())
        throw ConfigError(key + ": expected an unsigned integer, got '" + s + "'");
    return v;
}

bool Config::get_bool(const std::string& key, bool dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError(key + ": expected true/false, got '" + it->second + "'");
}

std::vector<std::uint64_t> Config::get_u64_list(
    const std::string& key, std::vector<std::uint64_t> dflt) const {
    auto it = kv_.find(key);
    if (it == kv_.end()) return dflt;
    std::vector<std::uint64_t> out;
    std::stringstream ss(it->second);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        std::uint64_t v = 0;
        auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
        if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
            throw ConfigError(key + ": bad list entry '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty()) throw ConfigError(key + ": empty list");
    return out;
}

ModelSpec RunConfig::model_spec() const {
    ModelSpec spec;
    spec.kind = model_kind;
    spec.dropout_rate = dropout_rate;
    spec.batchnorm = batchnorm;
    spec.input_steps = encode.window_length;
    spec.apply_defaults();
    return spec;
}

RunConfig RunConfig::from_config(const Config& c) {
    RunConfig r;
    try {
        r.reps_per_cell = c.get_u64("dataset.reps_per_cell", r.reps_per_cell);
        r.dataset_seed = c.get_u64("dataset.seed", r.dataset_seed);
        r.datagen.duration_min_s =
            c.get_double("dataset.duration_min_s", r.datagen.duration_min_s);
        r.datagen.duration_max_s =
            c.get_double("dataset.duration_max_s", r.datagen.duration_max_s);
        r.datagen.camera_motion =
            c.get_bool("dataset.camera_motion", r.datagen.camera_motion);

        r.encode.fraction = c.get_double("encode.fraction", r.encode.fraction);
        r.encode.window_length =
            c.get_u64("encode.window_length", r.encode.window_length);
        r.encode.stride = c.get_u64("encode.stride", r.encode.stride);
        std::string mode = c.get_string("encode.mode", "event");
        if (mode == "raw")
            r.encode.raw_mode = true;
        else if (mode == "event")
            r.encode.raw_mode = false;
        else
            throw ConfigError("encode.mode: expected event or raw, got '" +
                              mode + "'");
        r.encode.holdout_per_cell =
            c.get_u64("encode.holdout_per_cell", r.encode.holdout_per_cell);
        r.encode.split_seed = c.get_u64("encode.split_seed", r.encode.split_seed);

        r.model_kind =
            model_kind_from_string(c.get_string("model.kind", "lstm"));
        r.target =
            label_target_from_string(c.get_string("model.target", "task"));
        r.dropout_rate = c.get_double("model.dropout_rate", r.dropout_rate);
        r.batchnorm = c.get_bool("model.batchnorm", r.batchnorm);

        r.train.learning_rate =
            c.get_double("train.learning_rate", r.train.learning_rate);
        r.train.batch_size = c.get_u64("train.batch_size", r.train.batch_size);
        r.train.max_epochs = c.get_u64("train.max_epochs", r.train.max_epochs);
        r.train.patience = c.get_u64("train.patience", r.train.patience);
        r.train.seed = c.get_u64("train.seed", r.train.seed);
        r.train.max_windows_per_log =
            c.get_u64("train.max_windows_per_log", r.train.max_windows_per_log);
        r.train.monitor_windows_per_log = c.get_u64(
            "train.monitor_windows_per_log", r.train.monitor_windows_per_log);

        r.neuron.kind =
            neuron_kind_from_string(c.get_string("snn.neuron", "srl"));
        r.neuron.tau_rc = c.get_double("snn.tau_rc", r.neuron.tau_rc);
        r.neuron.tau_ref = c.get_double("snn.tau_ref", r.neuron.tau_ref);
        r.sim.steps = c.get_u64("snn.steps", r.sim.steps);
        r.sim.dt = c.get_double("snn.dt", r.sim.dt);
        r.sim.input_gain = c.get_double("snn.input_gain", r.sim.input_gain);

        r.ablation_kind =
            model_kind_from_string(c.get_string("ablation.kind", "fcn"));
        r.ablation_seeds = c.get_u64_list("ablation.seeds", r.ablation_seeds);
        r.ablation_max_epochs =
            c.get_u64("ablation.max_epochs", r.ablation_max_epochs);

        r.tsne.perplexity = c.get_double("tsne.perplexity", r.tsne.perplexity);
        r.tsne.iters = c.get_u64("tsne.iters", r.tsne.iters);
        r.tsne.learning_rate =
            c.get_double("tsne.learning_rate", r.tsne.learning_rate);
        r.tsne.early_exaggeration =
            c.get_double("tsne.early_exaggeration", r.tsne.early_exaggeration);
        r.tsne.seed = c.get_u64("tsne.seed", r.tsne.seed);
        r.tsne_max_points = c.get_u64("tsne.max_points", r.tsne_max_points);

        r.output_dir = c.get_string("output.dir", r.output_dir);
    } catch (const InputError& e) {
        throw ConfigError(e.what());
    }
    if (r.reps_per_cell < 1) throw ConfigError("dataset.reps_per_cell must be >= 1");
    if (r.encode.fraction <= 0.0 || r.encode.fraction >= 1.0)
        throw ConfigError("encode.fraction must lie in (0,1)");
    if (r.encode.window_length < 2) throw ConfigError("encode.window_length too small");
    if (r.encode.stride < 1) throw ConfigError("encode.stride must be >= 1");
    if (r.sim.steps < 1) throw ConfigError("snn.steps must be >= 1");
    if (r.sim.dt <= 0.0) throw ConfigError("snn.dt must be positive");
    return r;
}

Config RunConfig::to_config() const {
    Config c;
    c.set("dataset.reps_per_cell", std::to_string(reps_per_cell));
    c.set("dataset.seed", std::to_string(dataset_seed));
    c.set("dataset.duration_min_s", format_double(datagen.duration_min_s));
    c.set("dataset.duration_max_s", format_double(datagen.duration_max_s));
    c.set("dataset.camera_motion", datagen.camera_motion ? "true" : "false");

    c.set("encode.fraction", format_double(encode.fraction));
    c.set("encode.window_length", std::to_string(encode.window_length));
    c.set("encode.stride", std::to_string(encode.stride));
    c.set("encode.mode", encode.raw_mode ? "raw" : "event");
    c.set("encode.holdout_per_cell", std::to_string(encode.holdout_per_cell));
    c.set("encode.split_seed", std::to_string(encode.split_seed));

    c.set("model.kind", to_string(model_kind));
    c.set("model.target", to_string(target));
    c.set("model.dropout_rate", format_double(dropout_rate));
    c.set("model.batchnorm", batchnorm ? "true" : "false");

    c.set("train.learning_rate", format_double(train.learning_rate));
    c.set("train.batch_size", std::to_string(train.batch_size));
    c.set("train.max_epochs", std::to_string(train.max_epochs));
    c.set("train.patience", std::to_string(train.patience));
    c.set("train.seed", std::to_string(train.seed));
    c.set("train.max_windows_per_log", std::to_string(train.max_windows_per_log));
    c.set("train.monitor_windows_per_log",
          std::to_string(train.monitor_windows_per_log));

    c.set("snn.neuron", to_string(neuron.kind));
    c.set("snn.tau_rc", format_double(neuron.tau_rc));
    c.set("snn.tau_ref", format_double(neuron.tau_ref));
    c.set("snn.steps", std::to_string(sim.steps));
    c.set("snn.dt", format_double(sim.dt));
    c.set("snn.input_gain", format_double(sim.input_gain));

    c.set("ablation.kind", to_string(ablation_kind));
    {
        std::string s;
        for (std::size_t i = 0; i < ablation_seeds.size(); ++i)
            s += (i ? "," : "") + std::to_string(ablation_seeds[i]);
        c.set("ablation.seeds", s);
    }
    c.set("ablation.max_epochs", std::to_string(ablation_max_epochs));

    c.set("tsne.perplexity", format_double(tsne.perplexity));
    c.set("tsne.iters", std::to_string(tsne.iters));
    c.set("tsne.learning_rate", format_double(tsne.learning_rate));
    c.set("tsne.early_exaggeration", format_double(tsne.early_exaggeration));
    c.set("tsne.seed", std::to_string(tsne.seed));
    c.set("tsne.max_points", std::to_string(tsne_max_points));

    c.set("output.dir", output_dir);
    return c;
}

}  // namespace surgkin
