#include <cmath>
#include <filesystem>
#include <set>

#include "doctest.h"
#include "surgkin/csvio.hpp"
#include "surgkin/encoding.hpp"

using namespace surgkin;

namespace {

MovementSequence constant_deltas(double value, std::size_t rows) {
    MovementSequence m;
    m.deltas = Tensor({rows, kNumFeatures});
    for (std::size_t t = 0; t < rows; ++t)
        for (std::size_t f = 0; f < kNumFeatures; ++f)
            m.deltas.at(t, f) = value;
    return m;
}

}  // namespace

TEST_CASE("deltas telescope back to the endpoint difference") {
    KinematicLog log = generate_log(TaskId::RingAndRail, OperatorId::D, 20.0, 3);
    MovementSequence m = deltas(log);
    const std::size_t T = log.num_frames();
    CHECK(m.deltas.dim(0) == T - 1);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double s = 0.0;
        for (std::size_t t = 0; t + 1 < T; ++t) s += m.deltas.at(t, f);
        double expect = log.frames.at(T - 1, f) - log.frames.at(0, f);
        double scale = std::max({std::abs(s), std::abs(expect), 1e-12});
        CHECK(std::abs(s - expect) / scale < 1e-9);
    }
}

TEST_CASE("thresholds scale the corpus mean absolute movement") {
    // a column with constant |delta| 0.020905 and fraction 0.5 must produce
    // theta 0.0104525 exactly
    std::vector<MovementSequence> corpus{constant_deltas(0.020905, 50)};
    ThresholdVector tv = calibrate_thresholds(corpus, 0.5);
    for (double th : tv.theta) CHECK(th == doctest::Approx(0.0104525).epsilon(1e-12));

    // all-zero corpus: theta all zeros
    std::vector<MovementSequence> zeros{constant_deltas(0.0, 50)};
    for (double th : calibrate_thresholds(zeros, 0.5).theta) CHECK(th == 0.0);

    // fraction 1.0 equals an independently recomputed mean
    KinematicLog log = generate_log(TaskId::PegBoard, OperatorId::A, 15.0, 9);
    std::vector<MovementSequence> one{deltas(log)};
    ThresholdVector full = calibrate_thresholds(one, 1.0);
    for (std::size_t f = 0; f < kNumFeatures; ++f) {
        double s = 0.0;
        const auto& d = one[0].deltas;
        for (std::size_t t = 0; t < d.dim(0); ++t) s += std::abs(d.at(t, f));
        CHECK(full.theta[f] ==
              doctest::Approx(s / d.dim(0)).epsilon(1e-12));
    }
    CHECK_THROWS_AS(calibrate_thresholds({}, 0.5), InputError);
}

TEST_CASE("events use a strict inequality") {
    MovementSequence m = constant_deltas(0.0, 3);
    m.deltas.at(0, 12) = 0.02;       // above
    m.deltas.at(1, 12) = 0.0104525;  // exactly at the threshold
    ThresholdVector tv;
    tv.theta.assign(kNumFeatures, 0.0104525);
    EventSequence e = encode_events(m, tv);
    CHECK(e.events.at(0, 12) == 1.0);
    CHECK(e.events.at(1, 12) == 0.0);
    CHECK(e.events.at(2, 12) == 0.0);
    for (std::size_t i = 0; i < e.events.size(); ++i)
        CHECK((e.events[i] == 0.0 || e.events[i] == 1.0));
}

TEST_CASE("windowing yields the expected count and offsets") {
    EventSequence e;
    e.events = Tensor({100, kNumFeatures});
    e.log_id = 4;
    auto ws = window(e, 40, 20, TaskId::PegBoard, OperatorId::C);
    REQUIRE(ws.size() == 4);  // starts 0, 20, 40, 60
    for (std::size_t i = 0; i < ws.size(); ++i) {
        CHECK(ws[i].start == i * 20);
        CHECK(ws[i].x.dim(0) == 40);
        CHECK(ws[i].log_id == 4);
        CHECK(ws[i].task == TaskId::PegBoard);
        CHECK(ws[i].op == OperatorId::C);
    }
    EventSequence tiny;
    tiny.events = Tensor({39, kNumFeatures});
    CHECK(window(tiny, 40, 20, TaskId::PegBoard, OperatorId::C).empty());
}

TEST_CASE("sparsity falls as thresholds rise") {
    KinematicLog log = generate_log(TaskId::RingAndRail, OperatorId::B, 30.0, 21);
    MovementSequence m = deltas(log);
    ThresholdVector base = calibrate_thresholds({m}, 1.0);
    Rng rng(33);
    for (int i = 0; i < 20; ++i) {
        double lo = rng.uniform(0.0, 1.5);
        double hi = lo + rng.uniform(0.0, 1.5);
        ThresholdVector a = base, b = base;
        for (std::size_t f = 0; f < kNumFeatures; ++f) {
            a.theta[f] *= lo;
            b.theta[f] *= hi;
        }
        CHECK(sparsity(encode_events(m, a)) >= sparsity(encode_events(m, b)));
    }
}

TEST_CASE("stratified split holds out whole exercises per cell") {
    DatagenConfig cfg;
    cfg.duration_min_s = 8.0;
    cfg.duration_max_s = 12.0;
    Dataset ds = generate_dataset(3, 17, cfg);
    EncodeConfig ec;
    ec.holdout_per_cell = 1;
    EncodedDataset enc = build_encoded_dataset(ds.logs, ec);

    std::set<std::size_t> train_ids(enc.split.train_log_ids.begin(),
                                    enc.split.train_log_ids.end());
    std::set<std::size_t> test_ids(enc.split.test_log_ids.begin(),
                                   enc.split.test_log_ids.end());
    CHECK(train_ids.size() == 32);
    CHECK(test_ids.size() == 16);
    for (std::size_t id : test_ids) CHECK(train_ids.count(id) == 0);
    for (const auto& w : enc.split.train) CHECK(train_ids.count(w.log_id) == 1);
    for (const auto& w : enc.split.test) CHECK(test_ids.count(w.log_id) == 1);

    // identical seed reproduces the same split
    EncodedDataset enc2 = build_encoded_dataset(ds.logs, ec);
    CHECK(enc.split.train_log_ids == enc2.split.train_log_ids);
    CHECK(enc.split.train.size() == enc2.split.train.size());
}

TEST_CASE("raw mode standardizes with train statistics only") {
    DatagenConfig cfg;
    cfg.duration_min_s = 8.0;
    cfg.duration_max_s = 12.0;
    Dataset ds = generate_dataset(2, 23, cfg);
    EncodeConfig ec;
    ec.raw_mode = true;
    ec.holdout_per_cell = 1;
    EncodedDataset enc = build_encoded_dataset(ds.logs, ec);
    REQUIRE(!enc.raw_stats.mean.empty());
    // camera features have zero variance and must map to exactly zero
    for (const auto& w : enc.split.train)
        for (std::size_t t = 0; t < w.x.dim(0); ++t)
            for (std::size_t f = 0; f < kCameraEnd; ++f)
                CHECK(w.x.at(t, f) == 0.0);
    // moving features should be roughly standardized on the train side
    double s = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (const auto& w : enc.split.train)
        for (std::size_t t = 0; t < w.x.dim(0); ++t) {
            double v = w.x.at(t, kLeftBegin + 3);  // a translation channel
            s += v;
            s2 += v * v;
            ++n;
        }
    double mean = s / n;
    double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.2);
    CHECK(var > 0.5);
    CHECK(var < 2.0);
}

TEST_CASE("ablated encoding drops exactly one column") {
    DatagenConfig cfg;
    cfg.duration_min_s = 8.0;
    cfg.duration_max_s = 10.0;
    Dataset ds = generate_dataset(2, 29, cfg);
    EncodeConfig ec;
    ec.holdout_per_cell = 1;
    EncodedDataset enc = build_encoded_dataset_ablated(ds.logs, ec, 9);
    for (const auto& w : enc.split.train) CHECK(w.x.dim(1) == kNumFeatures - 1);
    CHECK_THROWS_AS(build_encoded_dataset_ablated(ds.logs, ec, 20), InputError);
}

TEST_CASE("log CSV and threshold JSON round-trip") {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() / "surgkin_encoding_test";
    fs::create_directories(dir);
    KinematicLog log = generate_log(TaskId::PickAndPlace, OperatorId::D, 10.0, 77);
    write_log_csv(log, (dir / "log.csv").string());
    KinematicLog back = read_log_csv((dir / "log.csv").string(), log.task,
                                     log.op, log.seed);
    REQUIRE(back.num_frames() == log.num_frames());
    for (std::size_t i = 0; i < log.frames.size(); ++i)
        CHECK(back.frames[i] == log.frames[i]);

    ThresholdVector tv = calibrate_thresholds({deltas(log)}, 0.5);
    write_thresholds_json(tv, (dir / "th.json").string());
    ThresholdVector tb = read_thresholds_json((dir / "th.json").string());
    CHECK(tb.calibration_fraction == tv.calibration_fraction);
    for (std::size_t f = 0; f < kNumFeatures; ++f)
        CHECK(tb.theta[f] == tv.theta[f]);
    fs::remove_all(dir);
}
