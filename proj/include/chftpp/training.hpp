#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "chftpp/data.hpp"
#include "chftpp/model.hpp"

namespace chftpp {

struct TrainConfig {
    double learning_rate = 1e-3;
    double alpha = 0.01;  // weight of the time-prediction loss
    int batch_size = 64;
    int patience = 10;
    int max_epochs = 200;
    std::uint64_t seed = 0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_epsilon = 1e-8;

    void validate() const;
};

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_nll = 0.0;  // per event
    double val_f1 = 0.0;
    double val_mae = 0.0;
    double elapsed_seconds = 0.0;
};

struct TrainResult {
    std::vector<EpochLog> history;
    int best_epoch = -1;
    double best_val_nll = 0.0;
};

struct EvalReport {
    double nll_per_sequence = 0.0;
    double nll_per_event = 0.0;
    double weighted_f1 = 0.0;
    double time_mae = 0.0;
    std::size_t event_count = 0;
    std::size_t sequence_count = 0;
};

struct TrainingDiverged : std::runtime_error {
    TrainingDiverged(int epoch, int batch, const std::string& detail)
        : std::runtime_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(batch) + ": " + detail),
          epoch(epoch),
          batch(batch) {}
    int epoch;
    int batch;
};

class Adam {
public:
    Adam(ParameterStore& store, double lr, double beta1, double beta2, double epsilon);
    void step();

private:
    ParameterStore* store_;
    double lr_, beta1_, beta2_, epsilon_;
    long steps_ = 0;
    std::vector<std::vector<double>> m_, v_;
};

struct BatchLoss {
    double composite = 0.0;  // mean-per-event NLL + alpha * mean-per-event MSE
    double nll = 0.0;        // summed over events
    double mse = 0.0;        // summed squared errors
    std::size_t events = 0;
};

// Forward + backward over one padded batch; gradients accumulate into the
// model's parameter store. Masked positions contribute nothing.
BatchLoss batch_loss(Model& model, const Batch& batch, double alpha, bool compute_grad);

double sequence_nll(const Model& model, const EventSequence& seq);

TrainResult train(Model& model, const Dataset& train_ds, const Dataset& val_ds,
                  const TrainConfig& cfg);

EvalReport evaluate(const Model& model, const Dataset& ds);

double weighted_f1(const std::vector<int>& truth, const std::vector<int>& predicted,
                   int num_classes);

void write_training_log(const std::vector<EpochLog>& history, const std::string& path);

}  // namespace chftpp
