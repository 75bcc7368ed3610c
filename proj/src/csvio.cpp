#include "surgkin/csvio.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace surgkin {

namespace {
using json = nlohmann::ordered_json;

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) out.push_back(cur);
    return out;
}

}  // namespace

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

void write_log_csv(const KinematicLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    const auto& schema = feature_schema();
    for (std::size_t f = 0; f < kNumFeatures; ++f)
        out << (f ? "," : "") << schema.names[f];
    out << "\n";
    const std::size_t T = log.num_frames();
    for (std::size_t t = 0; t < T; ++t) {
        for (std::size_t f = 0; f < kNumFeatures; ++f)
            out << (f ? "," : "") << format_double(log.frames.at(t, f));
        out << "\n";
    }
}

KinematicLog read_log_csv(const std::string& path, TaskId task, OperatorId op,
                          std::uint64_t seed) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::string line;
    if (!std::getline(in, line)) throw InputError("empty log file: " + path);
    auto header = split_csv_line(line);
    const auto& schema = feature_schema();
    if (header.size() != kNumFeatures)
        throw InputError(path + ": expected 20 columns");
    for (std::size_t f = 0; f < kNumFeatures; ++f)
        if (header[f] != schema.names[f])
            throw InputError(path + ": unexpected column " + header[f]);
    std::vector<double> data;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != kNumFeatures)
            throw InputError(path + ": short row");
        for (const auto& c : cells) {
            double v = 0.0;
            auto res = std::from_chars(c.data(), c.data() + c.size(), v);
            if (res.ec != std::errc())
                throw InputError(path + ": bad number '" + c + "'");
            data.push_back(v);
        }
    }
    KinematicLog log;
    log.task = task;
    log.op = op;
    log.seed = seed;
    const std::size_t rows = data.size() / kNumFeatures;
    log.frames = Tensor({rows, kNumFeatures}, std::move(data));
    return log;
}

void write_manifest(const std::vector<ManifestEntry>& manifest,
                    const std::string& path) {
    json arr = json::array();
    for (const auto& e : manifest) {
        json j;
        j["path"] = e.path;
        j["task"] = to_string(e.task);
        j["operator"] = to_string(e.op);
        j["seed"] = e.seed;
        j["frames"] = e.frames;
        arr.push_back(j);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << arr.dump(1) << "\n";
}

std::vector<ManifestEntry> read_manifest(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    json arr;
    in >> arr;
    std::vector<ManifestEntry> out;
    for (const auto& j : arr) {
        ManifestEntry e;
        e.path = j.at("path").get<std::string>();
        e.task = task_from_string(j.at("task").get<std::string>());
        e.op = operator_from_string(j.at("operator").get<std::string>());
        e.seed = j.at("seed").get<std::uint64_t>();
        e.frames = j.at("frames").get<std::size_t>();
        out.push_back(e);
    }
    return out;
}

void write_event_csv(const EventSequence& events, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    const auto& schema = feature_schema();
    const std::size_t F = events.events.dim(1);
    for (std::size_t f = 0; f < F; ++f)
        out << (f ? "," : "") << schema.names[f];
    out << "\n";
    for (std::size_t t = 0; t < events.events.dim(0); ++t) {
        for (std::size_t f = 0; f < F; ++f)
            out << (f ? "," : "")
                << (events.events.at(t, f) != 0.0 ? '1' : '0');
        out << "\n";
    }
}

void write_thresholds_json(const ThresholdVector& tv, const std::string& path) {
    const auto& schema = feature_schema();
    json j;
    j["fraction"] = tv.calibration_fraction;
    json th = json::object();
    for (std::size_t f = 0; f < tv.theta.size(); ++f)
        th[schema.names[f]] = tv.theta[f];
    j["theta"] = th;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(1) << "\n";
}

ThresholdVector read_thresholds_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    json j;
    in >> j;
    const auto& schema = feature_schema();
    ThresholdVector tv;
    tv.calibration_fraction = j.at("fraction").get<double>();
    const json& th = j.at("theta");
    for (std::size_t f = 0; f < kNumFeatures; ++f)
        tv.theta.push_back(th.at(schema.names[f]).get<double>());
    return tv;
}

void write_split_json(const DatasetSplit& split, const std::string& path) {
    json j;
    j["holdout"] = split.holdout;
    j["train_log_ids"] = split.train_log_ids;
    j["test_log_ids"] = split.test_log_ids;
    j["train_windows"] = split.train.size();
    j["test_windows"] = split.test.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << j.dump(1) << "\n";
}

void write_history_csv(const TrainHistory& hist, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path);
    out << "epoch,train_loss,train_accuracy,test_accuracy\n";
    for (std::size_t e = 0; e < hist.train_loss.size(); ++e)
        out << e << "," << format_double(hist.train_loss[e]) << ","
            << format_double(hist.train_accuracy[e]) << ","
            << format_double(hist.test_accuracy[e]) << "\n";
}

}  // namespace surgkin
