#include "chftpp/training.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

namespace chftpp {

void TrainConfig::validate() const {
    if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be positive");
    if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (patience < 1) throw std::invalid_argument("patience must be >= 1");
    if (max_epochs < 0) throw std::invalid_argument("max_epochs must be >= 0");
}

Adam::Adam(ParameterStore& store, double lr, double beta1, double beta2, double epsilon)
    : store_(&store), lr_(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {
    m_.resize(store.count());
    v_.resize(store.count());
    for (std::size_t i = 0; i < store.count(); ++i) {
        m_[i].assign(store.at(static_cast<int>(i)).value.size(), 0.0);
        v_[i].assign(store.at(static_cast<int>(i)).value.size(), 0.0);
    }
}

void Adam::step() {
    ++steps_;
    double c1 = 1.0 - std::pow(beta1_, static_cast<double>(steps_));
    double c2 = 1.0 - std::pow(beta2_, static_cast<double>(steps_));
    for (std::size_t i = 0; i < store_->count(); ++i) {
        auto& t = store_->at(static_cast<int>(i));
        for (std::size_t k = 0; k < t.value.size(); ++k) {
            double g = t.grad[k];
            m_[i][k] = beta1_ * m_[i][k] + (1.0 - beta1_) * g;
            v_[i][k] = beta2_ * v_[i][k] + (1.0 - beta2_) * g * g;
            double mh = m_[i][k] / c1;
            double vh = v_[i][k] / c2;
            t.value[k] -= lr_ * mh / (std::sqrt(vh) + epsilon_);
        }
    }
}

BatchLoss batch_loss(Model& model, const Batch& batch, double alpha, bool compute_grad) {
    Tape tape(&model.params);
    Forward fwd(tape, model);
    Var nll_sum = tape.constant(0.0);
    Var se_sum = tape.constant(0.0);
    std::size_t events = 0;
    for (int s = 0; s < batch.batch_size; ++s) {
        Var h = fwd.initial_state();
        std::size_t base = static_cast<std::size_t>(s) * batch.max_len;
        for (int k = 0; k < batch.lengths[static_cast<std::size_t>(s)]; ++k) {
            int type = batch.types[base + k];
            double tau = batch.taus[base + k];
            Var tau_plain = tape.input(tau, 0.0);
            Var tau_seeded = tape.input(tau, 1.0);
            Var log_dens = fwd.log_density(h, tau_seeded);
            Var log_type = fwd.log_type_prob(h, tau_plain, type);
            nll_sum = tape.sub(nll_sum, tape.add(log_dens, log_type));
            Var err = tape.sub(fwd.time_pred(h), tau_plain);
            se_sum = tape.add(se_sum, tape.mul(err, err));
            ++events;
            h = fwd.rnn_step(h, fwd.embed(type, tau_plain));
        }
    }
    if (events == 0) throw std::invalid_argument("batch_loss: batch has no events");
    double inv_n = 1.0 / static_cast<double>(events);
    Var loss = tape.mul(tape.add(nll_sum, tape.mul(tape.constant(alpha), se_sum)),
                        tape.constant(inv_n));
    if (compute_grad) tape.backward(loss);
    BatchLoss out;
    out.composite = tape.scalar(loss);
    out.nll = tape.scalar(nll_sum);
    out.mse = tape.scalar(se_sum);
    out.events = events;
    return out;
}

double sequence_nll(const Model& model, const EventSequence& seq) {
    return Inference(model).sequence_nll(seq);
}

namespace {

std::string param_norms(const Model& model) {
    std::string out;
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        const auto& t = model.params.at(static_cast<int>(i));
        double n = 0.0;
        for (double v : t.value) n += v * v;
        char buf[128];
        std::snprintf(buf, sizeof(buf), "%s=%.3e ", t.name.c_str(), std::sqrt(n));
        out += buf;
    }
    return out;
}

std::vector<std::vector<double>> snapshot(const Model& model) {
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        values.push_back(model.params.at(static_cast<int>(i)).value);
    }
    return values;
}

void restore(Model& model, const std::vector<std::vector<double>>& values) {
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        model.params.at(static_cast<int>(i)).value = values[i];
    }
}

}  // namespace

TrainResult train(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg) {
    cfg.validate();
    if (train_ds.num_types != val_ds.num_types || train_ds.num_types != model.config.num_types) {
        throw std::invalid_argument("train: num_types mismatch between model and datasets");
    }
    Adam opt(model.params, cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    TrainResult result;
    std::vector<std::vector<double>> best = snapshot(model);
    result.best_val_nll = std::numeric_limits<double>::infinity();
    int since_best = 0;
    auto start = std::chrono::steady_clock::now();

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        std::vector<Batch> batches =
            make_batches(train_ds, cfg.batch_size, true, cfg.seed * 1000003ULL + epoch);
        double loss_events = 0.0;
        double loss_weighted = 0.0;
        for (std::size_t b = 0; b < batches.size(); ++b) {
            model.params.zero_grad();
            BatchLoss bl = batch_loss(model, batches[b], cfg.alpha, true);
            if (!std::isfinite(bl.composite)) {
                throw TrainingDiverged(epoch, static_cast<int>(b), param_norms(model));
            }
            opt.step();
            model.params.project();
            loss_weighted += bl.composite * static_cast<double>(bl.events);
            loss_events += static_cast<double>(bl.events);
        }

        EvalReport val = evaluate(model, val_ds);
        EpochLog log;
        log.epoch = epoch;
        log.train_loss = loss_weighted / loss_events;
        log.val_nll = val.nll_per_event;
        log.val_f1 = val.weighted_f1;
        log.val_mae = val.time_mae;
        log.elapsed_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        result.history.push_back(log);

        if (val.nll_per_event < result.best_val_nll) {
            result.best_val_nll = val.nll_per_event;
            result.best_epoch = epoch;
            best = snapshot(model);
            since_best = 0;
        } else if (++since_best >= cfg.patience) {
            break;
        }
    }
    restore(model, best);
    return result;
}

double weighted_f1(const std::vector<int>& truth, const std::vector<int>& predicted,
                   int num_classes) {
    if (truth.size() != predicted.size() || truth.empty()) {
        throw std::invalid_argument("weighted_f1: label vectors must be nonempty and equal-sized");
    }
    std::vector<double> tp(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> fp(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> fn(static_cast<std::size_t>(num_classes), 0.0);
    std::vector<double> support(static_cast<std::size_t>(num_classes), 0.0);
    for (std::size_t i = 0; i < truth.size(); ++i) {
        std::size_t t = static_cast<std::size_t>(truth[i]);
        std::size_t p = static_cast<std::size_t>(predicted[i]);
        support[t] += 1.0;
        if (t == p) tp[t] += 1.0;
        else {
            fp[p] += 1.0;
            fn[t] += 1.0;
        }
    }
    double total = static_cast<double>(truth.size());
    double score = 0.0;
    for (int k = 0; k < num_classes; ++k) {
        std::size_t sk = static_cast<std::size_t>(k);
        if (support[sk] == 0.0) continue;
        double denom = 2.0 * tp[sk] + fp[sk] + fn[sk];
        double f1 = denom > 0.0 ? 2.0 * tp[sk] / denom : 0.0;
        score += (support[sk] / total) * f1;
    }
    return score;
}

EvalReport evaluate(const Model& model, const Dataset& ds) {
    Inference inf(model);
    EvalReport report;
    report.sequence_count = ds.sequences.size();
    double nll = 0.0;
    double abs_err = 0.0;
    std::vector<int> truth, predicted;
    for (const auto& seq : ds.sequences) {
        std::vector<std::vector<double>> states = inf.encode_states(seq);
        std::vector<double> taus = seq.inter_event_times();
        for (std::size_t i = 0; i < seq.size(); ++i) {
            const auto& h = states[i];
            double tau = taus[i];
            int type = seq.events[i].type_id;
            nll -= inf.log_density(h, tau);
            std::vector<double> probs = inf.type_probs(h, tau);
            nll -= std::log(std::max(probs[static_cast<std::size_t>(type)], kLogFloor));
            double tau_hat = inf.predict_time(h);
            abs_err += std::fabs(tau - tau_hat);
            truth.push_back(type);
            predicted.push_back(inf.predict_type(h, tau_hat));
            ++report.event_count;
        }
    }
    report.nll_per_event = nll / static_cast<double>(report.event_count);
    report.nll_per_sequence = nll / static_cast<double>(report.sequence_count);
    report.time_mae = abs_err / static_cast<double>(report.event_count);
    report.weighted_f1 = weighted_f1(truth, predicted, ds.num_types);
    return report;
}

void write_training_log(const std::vector<EpochLog>& history, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write training log to " + path);
    out << "epoch,train_loss,val_nll,val_f1,val_mae,elapsed_seconds\n";
    char buf[256];
    for (const auto& h : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g,%.3f\n", h.epoch, h.train_loss,
                      h.val_nll, h.val_f1, h.val_mae, h.elapsed_seconds);
        out << buf;
    }
}

}  // namespace chftpp
