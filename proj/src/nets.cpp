#include "surgkin/nets.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace surgkin {

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::LSTM: return "lstm";
        case ModelKind::CNN: return "cnn";
        case ModelKind::FCN: return "fcn";
    }
    return "?";
}

std::string to_string(LabelTarget t) {
    return t == LabelTarget::Task ? "task" : "operator";
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "lstm") return ModelKind::LSTM;
    if (s == "cnn") return ModelKind::CNN;
    if (s == "fcn") return ModelKind::FCN;
    throw InputError("unknown model kind: " + s);
}

LabelTarget label_target_from_string(const std::string& s) {
    if (s == "task") return LabelTarget::Task;
    if (s == "operator") return LabelTarget::Operator;
    throw InputError("unknown label target: " + s);
}

std::size_t label_of(const EventWindow& w, LabelTarget target) {
    return target == LabelTarget::Task ? static_cast<std::size_t>(w.task)
                                       : static_cast<std::size_t>(w.op);
}

void ModelSpec::apply_defaults() {
    if (!layer_sizes.empty()) return;
    switch (kind) {
        case ModelKind::LSTM: layer_sizes = {128, 64, 64, 16}; break;
        case ModelKind::CNN: layer_sizes = {128, 128, 16}; break;
        case ModelKind::FCN: layer_sizes = {128, 64, 16}; break;
    }
}

void ModelSpec::validate() const {
    auto expect = [&](std::initializer_list<std::size_t> want) {
        if (!std::equal(layer_sizes.begin(), layer_sizes.end(), want.begin(),
                        want.end()))
            throw ShapeError("unsupported layer_sizes for model kind " +
                             to_string(kind));
    };
    switch (kind) {
        case ModelKind::LSTM: expect({128, 64, 64, 16}); break;
        case ModelKind::CNN: expect({128, 128, 16}); break;
        case ModelKind::FCN: expect({128, 64, 16}); break;
    }
    if (layer_sizes.back() != 16)
        throw ShapeError("final hidden layer must have 16 units");
    if (num_classes < 2) throw ShapeError("need at least 2 classes");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw ShapeError("dropout rate out of range");
}

Model::Model(const ModelSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.apply_defaults();
    spec_.validate();
    Rng rng(seed);
    double p = spec_.dropout_rate;
    switch (spec_.kind) {
        case ModelKind::LSTM: {
            lstm_ = std::make_unique<LstmStack>();
            auto& s = *lstm_;
            s.rnn1 = BiLSTM("rnn1", spec_.input_features, 64, true);
            s.rnn2 = BiLSTM("rnn2", 128, 32, false);
            s.drop1 = Dropout(p);
            s.drop2 = Dropout(p);
            s.drop3 = Dropout(p);
            s.dense1 = Dense("dense1", 64, 64);
            s.bn1 = BatchNorm("bn1", 64);
            s.dense2 = Dense("dense2", 64, 16);
            s.bn2 = BatchNorm("bn2", 16);
            s.out = Dense("out", 16, spec_.num_classes);
            s.rnn1.init(rng);
            s.rnn2.init(rng);
            s.dense1.init(rng);
            s.dense2.init(rng);
            s.out.init(rng);
            break;
        }
        case ModelKind::CNN: {
            cnn_ = std::make_unique<CnnStack>();
            auto& s = *cnn_;
            s.conv = Conv1D("conv", spec_.input_features, 128, 3);
            s.bnc = BatchNorm("bnc", 128);
            s.dropc = Dropout(p);
            s.dense1 = Dense("dense1", 128, 128);
            s.bn1 = BatchNorm("bn1", 128);
            s.drop1 = Dropout(p);
            s.dense2 = Dense("dense2", 128, 16);
            s.bn2 = BatchNorm("bn2", 16);
            s.out = Dense("out", 16, spec_.num_classes);
            s.conv.init(rng);
            s.dense1.init(rng);
            s.dense2.init(rng);
            s.out.init(rng);
            break;
        }
        case ModelKind::FCN: {
            fcn_ = std::make_unique<FcnStack>();
            auto& s = *fcn_;
            std::size_t flat = spec_.input_steps * spec_.input_features;
            s.dense1 = Dense("dense1", flat, 128);
            s.bn1 = BatchNorm("bn1", 128);
            s.drop1 = Dropout(p);
            s.dense2 = Dense("dense2", 128, 64);
            s.bn2 = BatchNorm("bn2", 64);
            s.drop2 = Dropout(p);
            s.dense3 = Dense("dense3", 64, 16);
            s.bn3 = BatchNorm("bn3", 16);
            s.out = Dense("out", 16, spec_.num_classes);
            s.dense1.init(rng);
            s.dense2.init(rng);
            s.dense3.init(rng);
            s.out.init(rng);
            break;
        }
    }
}

namespace {

Tensor flatten_batch(const Tensor& batch) {
    // {B, T, F} -> {B, T*F}
    return Tensor({batch.dim(0), batch.dim(1) * batch.dim(2)},
                  std::vector<double>(batch.data(), batch.data() + batch.size()));
}

Tensor reshape_rows(const Tensor& x, std::size_t rows, std::size_t cols) {
    return Tensor({rows, cols},
                  std::vector<double>(x.data(), x.data() + x.size()));
}

}  // namespace

Model::Output Model::forward(const Tensor& batch, Mode mode, Rng* dropout_rng) {
    if (batch.rank() != 3 || batch.dim(1) != spec_.input_steps ||
        batch.dim(2) != spec_.input_features)
        throw ShapeError("forward: batch shape mismatch");
    if (batch.dim(0) == 0) throw InputError("forward: empty batch");
    Rng local(0);
    Rng& rng = dropout_rng ? *dropout_rng : local;

    Output out;
    Tensor emb;
    switch (spec_.kind) {
        case ModelKind::LSTM: {
            auto& s = *lstm_;
            Tensor h = s.rnn1.forward(batch);
            h = s.drop1.forward(h, mode, rng);
            h = s.rnn2.forward(h);
            h = s.drop2.forward(h, mode, rng);
            h = s.dense1.forward(h);
            if (spec_.batchnorm) h = s.bn1.forward(h, mode);
            h = s.relu1.forward(h);
            h = s.drop3.forward(h, mode, rng);
            h = s.dense2.forward(h);
            if (spec_.batchnorm) h = s.bn2.forward(h, mode);
            emb = s.relu2.forward(h);
            last_logits_ = s.out.forward(emb);
            break;
        }
        case ModelKind::CNN: {
            auto& s = *cnn_;
            Tensor h = s.conv.forward(batch);
            std::size_t B = h.dim(0), T = h.dim(1), C = h.dim(2);
            Tensor flat = reshape_rows(h, B * T, C);
            if (spec_.batchnorm) flat = s.bnc.forward(flat, mode);
            flat = s.reluc.forward(flat);
            flat = s.dropc.forward(flat, mode, rng);
            Tensor seq({B, T, C}, std::vector<double>(flat.data(),
                                                      flat.data() + flat.size()));
            Tensor p = s.pool.forward(seq);
            p = s.dense1.forward(p);
            if (spec_.batchnorm) p = s.bn1.forward(p, mode);
            p = s.relu1.forward(p);
            p = s.drop1.forward(p, mode, rng);
            p = s.dense2.forward(p);
            if (spec_.batchnorm) p = s.bn2.forward(p, mode);
            emb = s.relu2.forward(p);
            last_logits_ = s.out.forward(emb);
            break;
        }
        case ModelKind::FCN: {
            auto& s = *fcn_;
            Tensor h = flatten_batch(batch);
            h = s.dense1.forward(h);
            if (spec_.batchnorm) h = s.bn1.forward(h, mode);
            h = s.relu1.forward(h);
            h = s.drop1.forward(h, mode, rng);
            h = s.dense2.forward(h);
            if (spec_.batchnorm) h = s.bn2.forward(h, mode);
            h = s.relu2.forward(h);
            h = s.drop2.forward(h, mode, rng);
            h = s.dense3.forward(h);
            if (spec_.batchnorm) h = s.bn3.forward(h, mode);
            emb = s.relu3.forward(h);
            last_logits_ = s.out.forward(emb);
            break;
        }
    }
    softmax_rows(last_logits_, out.probs);
    out.embedding = emb;
    return out;
}

double Model::loss_and_grads(const Tensor& batch,
                             const std::vector<std::size_t>& labels,
                             Rng* dropout_rng) {
    forward(batch, Mode::Train, dropout_rng);
    Tensor probs, dlogits;
    double loss = softmax_cross_entropy(last_logits_, labels, probs, dlogits);

    switch (spec_.kind) {
        case ModelKind::LSTM: {
            auto& s = *lstm_;
            Tensor d = s.out.backward(dlogits);
            d = s.relu2.backward(d);
            if (spec_.batchnorm) d = s.bn2.backward(d);
            d = s.dense2.backward(d);
            d = s.drop3.backward(d);
            d = s.relu1.backward(d);
            if (spec_.batchnorm) d = s.bn1.backward(d);
            d = s.dense1.backward(d);
            d = s.drop2.backward(d);
            d = s.rnn2.backward(d);
            d = s.drop1.backward(d);
            s.rnn1.backward(d);
            break;
        }
        case ModelKind::CNN: {
            auto& s = *cnn_;
            Tensor d = s.out.backward(dlogits);
            d = s.relu2.backward(d);
            if (spec_.batchnorm) d = s.bn2.backward(d);
            d = s.dense2.backward(d);
            d = s.drop1.backward(d);
            d = s.relu1.backward(d);
            if (spec_.batchnorm) d = s.bn1.backward(d);
            d = s.dense1.backward(d);
            d = s.pool.backward(d);
            std::size_t B = d.dim(0), T = d.dim(1), C = d.dim(2);
            Tensor flat = reshape_rows(d, B * T, C);
            flat = s.dropc.backward(flat);
            flat = s.reluc.backward(flat);
            if (spec_.batchnorm) flat = s.bnc.backward(flat);
            Tensor seq({B, T, C}, std::vector<double>(flat.data(),
                                                      flat.data() + flat.size()));
            s.conv.backward(seq);
            break;
        }
        case ModelKind::FCN: {
            auto& s = *fcn_;
            Tensor d = s.out.backward(dlogits);
            d = s.relu3.backward(d);
            if (spec_.batchnorm) d = s.bn3.backward(d);
            d = s.dense3.backward(d);
            d = s.drop2.backward(d);
            d = s.relu2.backward(d);
            if (spec_.batchnorm) d = s.bn2.backward(d);
            d = s.dense2.backward(d);
            d = s.drop1.backward(d);
            d = s.relu1.backward(d);
            if (spec_.batchnorm) d = s.bn1.backward(d);
            s.dense1.backward(d);
            break;
        }
    }
    return loss;
}

Tensor Model::recurrent_front(const Tensor& batch) {
    if (spec_.kind != ModelKind::LSTM)
        throw InputError("recurrent_front: only defined for the LSTM model");
    auto& s = *lstm_;
    Rng dummy(0);
    Tensor h = s.rnn1.forward(batch);
    h = s.drop1.forward(h, Mode::Eval, dummy);
    h = s.rnn2.forward(h);
    return s.drop2.forward(h, Mode::Eval, dummy);
}

std::vector<Param*> Model::params() {
    std::vector<Param*> ps;
    auto add_bn = [&](BatchNorm& bn) {
        ps.push_back(&bn.gamma);
        ps.push_back(&bn.beta);
        ps.push_back(&bn.running_mean);
        ps.push_back(&bn.running_var);
    };
    auto add_lstm = [&](BiLSTM& r) {
        for (LSTMDir* d : {&r.fwd, &r.bwd}) {
            ps.push_back(&d->Wx);
            ps.push_back(&d->Wh);
            ps.push_back(&d->b);
        }
    };
    switch (spec_.kind) {
        case ModelKind::LSTM: {
            auto& s = *lstm_;
            add_lstm(s.rnn1);
            add_lstm(s.rnn2);
            ps.push_back(&s.dense1.W);
            ps.push_back(&s.dense1.b);
            add_bn(s.bn1);
            ps.push_back(&s.dense2.W);
            ps.push_back(&s.dense2.b);
            add_bn(s.bn2);
            ps.push_back(&s.out.W);
            ps.push_back(&s.out.b);
            break;
        }
        case ModelKind::CNN: {
            auto& s = *cnn_;
            ps.push_back(&s.conv.W);
            ps.push_back(&s.conv.b);
            add_bn(s.bnc);
            ps.push_back(&s.dense1.W);
            ps.push_back(&s.dense1.b);
            add_bn(s.bn1);
            ps.push_back(&s.dense2.W);
            ps.push_back(&s.dense2.b);
            add_bn(s.bn2);
            ps.push_back(&s.out.W);
            ps.push_back(&s.out.b);
            break;
        }
        case ModelKind::FCN: {
            auto& s = *fcn_;
            ps.push_back(&s.dense1.W);
            ps.push_back(&s.dense1.b);
            add_bn(s.bn1);
            ps.push_back(&s.dense2.W);
            ps.push_back(&s.dense2.b);
            add_bn(s.bn2);
            ps.push_back(&s.dense3.W);
            ps.push_back(&s.dense3.b);
            add_bn(s.bn3);
            ps.push_back(&s.out.W);
            ps.push_back(&s.out.b);
            break;
        }
    }
    return ps;
}

std::vector<const Param*> Model::params() const {
    auto ps = const_cast<Model*>(this)->params();
    return std::vector<const Param*>(ps.begin(), ps.end());
}

void Model::zero_grads() {
    for (Param* p : params()) p->zero_grad();
}

std::size_t Model::param_count() const {
    std::size_t n = 0;
    for (const Param* p : params())
        if (p->trainable) n += p->value.size();
    return n;
}

std::vector<double> Model::flatten_params() const {
    std::vector<double> flat;
    for (const Param* p : params())
        if (p->trainable)
            flat.insert(flat.end(), p->value.data(), p->value.data() + p->value.size());
    return flat;
}

void Model::unflatten_params(const std::vector<double>& flat) {
    std::size_t off = 0;
    for (Param* p : params())
        if (p->trainable) {
            std::copy(flat.begin() + off, flat.begin() + off + p->value.size(),
                      p->value.data());
            off += p->value.size();
        }
    if (off != flat.size()) throw ShapeError("unflatten_params: length mismatch");
}

std::vector<double> Model::flatten_grads() const {
    std::vector<double> flat;
    for (const Param* p : params())
        if (p->trainable)
            flat.insert(flat.end(), p->grad.data(), p->grad.data() + p->grad.size());
    return flat;
}

// ---- batching / training ----

Tensor batch_tensor(const std::vector<EventWindow>& windows,
                    const std::vector<std::size_t>& idx) {
    if (idx.empty()) throw InputError("batch_tensor: empty selection");
    const std::size_t T = windows[idx[0]].x.dim(0);
    const std::size_t F = windows[idx[0]].x.dim(1);
    Tensor batch({idx.size(), T, F});
    for (std::size_t i = 0; i < idx.size(); ++i)
        std::copy(windows[idx[i]].x.data(),
                  windows[idx[i]].x.data() + T * F,
                  batch.data() + i * T * F);
    return batch;
}

namespace {

// Seeded per-log cap on window indices.
std::vector<std::size_t> capped_indices(const std::vector<EventWindow>& windows,
                                        std::size_t cap, Rng rng) {
    std::vector<std::size_t> idx;
    if (cap == 0) {
        idx.resize(windows.size());
        for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
        return idx;
    }
    std::map<std::size_t, std::vector<std::size_t>> by_log;
    for (std::size_t i = 0; i < windows.size(); ++i)
        by_log[windows[i].log_id].push_back(i);
    for (auto& [log, ids] : by_log) {
        if (ids.size() > cap) {
            Rng sub = rng.child(log);
            sub.shuffle(ids);
            ids.resize(cap);
            std::sort(ids.begin(), ids.end());
        }
        idx.insert(idx.end(), ids.begin(), ids.end());
    }
    return idx;
}

double accuracy_on(Model& model, const std::vector<EventWindow>& windows,
                   const std::vector<std::size_t>& idx, LabelTarget target,
                   std::size_t batch_size) {
    std::size_t correct = 0;
    for (std::size_t off = 0; off < idx.size(); off += batch_size) {
        std::vector<std::size_t> chunk(
            idx.begin() + off,
            idx.begin() + std::min(idx.size(), off + batch_size));
        Tensor batch = batch_tensor(windows, chunk);
        auto out = model.forward(batch, Mode::Eval);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < out.probs.dim(1); ++c)
                if (out.probs.at(i, c) > out.probs.at(i, best)) best = c;
            if (best == label_of(windows[chunk[i]], target)) ++correct;
        }
    }
    return idx.empty() ? 0.0 : static_cast<double>(correct) / idx.size();
}

}  // namespace

AdamOptimizer::AdamOptimizer(std::vector<Param*> params, const TrainConfig& cfg)
    : params_(std::move(params)),
      lr_(cfg.learning_rate),
      beta1_(cfg.beta1),
      beta2_(cfg.beta2),
      eps_(cfg.adam_eps) {
    for (Param* p : params_) {
        m_.emplace_back(p->value.shape());
        v_.emplace_back(p->value.shape());
    }
}

void AdamOptimizer::step() {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t pi = 0; pi < params_.size(); ++pi) {
        Param* p = params_[pi];
        if (!p->trainable) continue;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            double g = p->grad[i];
            m_[pi][i] = beta1_ * m_[pi][i] + (1.0 - beta1_) * g;
            v_[pi][i] = beta2_ * v_[pi][i] + (1.0 - beta2_) * g * g;
            double mhat = m_[pi][i] / bc1;
            double vhat = v_[pi][i] / bc2;
            p->value[i] -= lr_ * mhat / (std::sqrt(vhat) + eps_);
        }
    }
}

TrainHistory train(Model& model, const DatasetSplit& split, LabelTarget target,
                   const TrainConfig& cfg) {
    if (split.train.empty() || split.test.empty())
        throw InputError("train: both split sides must be nonempty");
    if (cfg.learning_rate <= 0.0 || cfg.batch_size == 0)
        throw InputError("train: bad optimizer configuration");

    Rng rng(cfg.seed);
    std::vector<std::size_t> train_idx =
        capped_indices(split.train, cfg.max_windows_per_log, rng.child(1));
    std::vector<std::size_t> monitor_idx =
        capped_indices(split.test, cfg.monitor_windows_per_log, rng.child(2));

    AdamOptimizer adam(model.params(), cfg);
    Rng dropout_rng = rng.child(3);
    Rng shuffle_rng = rng.child(4);

    TrainHistory hist;
    std::vector<double> best_params;
    std::vector<Tensor> best_running;  // non-trainable state at the best epoch
    std::size_t since_best = 0;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        shuffle_rng.shuffle(train_idx);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t off = 0; off < train_idx.size(); off += cfg.batch_size) {
            std::vector<std::size_t> chunk(
                train_idx.begin() + off,
                train_idx.begin() +
                    std::min(train_idx.size(), off + cfg.batch_size));
            if (chunk.size() < 2) continue;  // batch norm needs >1 row
            Tensor batch = batch_tensor(split.train, chunk);
            std::vector<std::size_t> labels(chunk.size());
            for (std::size_t i = 0; i < chunk.size(); ++i)
                labels[i] = label_of(split.train[chunk[i]], target);
            model.zero_grads();
            double loss = model.loss_and_grads(batch, labels, &dropout_rng);
            if (!std::isfinite(loss))
                throw TrainingError("training diverged at epoch " +
                                    std::to_string(epoch));
            adam.step();
            loss_sum += loss;
            ++batches;
        }
        double train_acc =
            accuracy_on(model, split.train, train_idx, target, cfg.batch_size);
        double test_acc =
            accuracy_on(model, split.test, monitor_idx, target, cfg.batch_size);
        hist.train_loss.push_back(batches ? loss_sum / batches : 0.0);
        hist.train_accuracy.push_back(train_acc);
        hist.test_accuracy.push_back(test_acc);

        if (epoch == 0 || test_acc > hist.best_test_accuracy) {
            hist.best_test_accuracy = test_acc;
            hist.best_epoch = epoch;
            best_params = model.flatten_params();
            best_running.clear();
            for (Param* p : model.params())
                if (!p->trainable) best_running.push_back(p->value);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }

    model.unflatten_params(best_params);
    std::size_t ri = 0;
    for (Param* p : model.params())
        if (!p->trainable) p->value = best_running[ri++];
    return hist;
}

EvalResult evaluate(Model& model, const std::vector<EventWindow>& windows,
                    LabelTarget target) {
    if (windows.empty()) throw InputError("evaluate: no windows");
    EvalResult res;
    res.predictions.resize(windows.size());
    std::size_t correct = 0;
    const std::size_t bs = 64;
    for (std::size_t off = 0; off < windows.size(); off += bs) {
        std::vector<std::size_t> chunk;
        for (std::size_t i = off; i < std::min(windows.size(), off + bs); ++i)
            chunk.push_back(i);
        Tensor batch = batch_tensor(windows, chunk);
        auto out = model.forward(batch, Mode::Eval);
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            std::size_t best = 0;
            for (std::size_t c = 1; c < out.probs.dim(1); ++c)
                if (out.probs.at(i, c) > out.probs.at(i, best)) best = c;
            res.predictions[chunk[i]] = best;
            if (best == label_of(windows[chunk[i]], target)) ++correct;
        }
    }
    res.accuracy = static_cast<double>(correct) / windows.size();

    // majority vote per exercise, ties to the lowest class index
    std::map<std::size_t, std::vector<std::size_t>> votes;
    std::map<std::size_t, std::size_t> truth;
    for (std::size_t i = 0; i < windows.size(); ++i) {
        auto& v = votes[windows[i].log_id];
        if (v.empty()) v.assign(model.spec().num_classes, 0);
        v[res.predictions[i]]++;
        truth[windows[i].log_id] = label_of(windows[i], target);
    }
    std::size_t log_correct = 0;
    for (const auto& [log, v] : votes) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < v.size(); ++c)
            if (v[c] > v[best]) best = c;
        if (best == truth[log]) ++log_correct;
    }
    res.per_exercise_accuracy =
        votes.empty() ? 0.0 : static_cast<double>(log_correct) / votes.size();
    return res;
}

}  // namespace surgkin
