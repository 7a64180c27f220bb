#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "chftpp/data.hpp"
#include "chftpp/tape.hpp"

namespace chftpp {

enum class Activation { Tanh, Relu, Prelu, Softplus, Sigmoid };
enum class CellKind { Vanilla, Gated };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);
CellKind cell_from_string(const std::string& s);
std::string to_string(CellKind c);

struct ModelConfig {
    int num_types = 0;
    int hidden_dim = 64;  // d
    int embed_dim = 32;   // d_m
    Activation activation = Activation::Tanh;
    CellKind cell = CellKind::Vanilla;
    bool time_head_hidden_relu = false;
};

// Event encoder, CHF network, type head and time head over one shared
// parameter store. Weight layout notes:
//  - the first CHF layer is stored split as W1_h (free) and w1_tau
//    (positive), so the positivity constraint applies exactly to the
//    column acting on tau;
//  - gamma = relu(v_gamma . h + b_gamma) scales the linear residual.
class Model {
public:
    explicit Model(ModelConfig cfg);

    void init(std::uint64_t seed);

    ModelConfig config;
    ParameterStore params;

    struct TensorIndex {
        int embedding = -1;
        int enc_w = -1, enc_b = -1;
        int enc_wz = -1, enc_bz = -1, enc_wr = -1, enc_br = -1, enc_wc = -1, enc_bc = -1;
        int chf_w1 = -1, chf_w1_tau = -1, chf_b1 = -1;
        int chf_w2 = -1, chf_b2 = -1, chf_v = -1, chf_b3 = -1;
        int chf_v_gamma = -1, chf_b_gamma = -1;
        int chf_eta1 = -1, chf_eta2 = -1;
        int type_w1 = -1, type_w1_tau = -1, type_b1 = -1, type_w2 = -1, type_b2 = -1;
        int time_w1 = -1, time_b1 = -1, time_v = -1, time_b2 = -1;
    } idx;
};

void save_checkpoint(const Model& model, const std::string& path);
Model load_checkpoint(const std::string& path);

// Recorded forward pass over one tape. Parameter leaves are created once
// per Forward and shared across all events of the batch.
class Forward {
public:
    Forward(Tape& tape, const Model& model);

    Var initial_state() const;
    // tau_plain must carry tangent 0 (the embedding path is not the
    // differentiation variable of the CHF).
    Var embed(int type_id, Var tau_plain) const;
    Var rnn_step(Var h_prev, Var event_embedding) const;

    struct ChfEval {
        Var phi;
        Var intensity;
        Var gamma;
    };
    // tau_seeded should be an input with tangent 1.
    ChfEval chf(Var h, Var tau_seeded) const;
    Var log_density(Var h, Var tau_seeded) const;  // log d(phi)/d(tau) - phi

    Var type_logits(Var h, Var tau_plain) const;
    Var log_type_prob(Var h, Var tau_plain, int type_id) const;

    Var time_pred(Var h) const;

private:
    Var activate(Var x) const;

    Tape* tape_;
    const Model* model_;
    Var h0_;
    Var embedding_, enc_w_, enc_b_;
    Var enc_wz_, enc_bz_, enc_wr_, enc_br_, enc_wc_, enc_bc_;
    Var chf_w1_, chf_w1_tau_, chf_b1_, chf_w2_, chf_b2_, chf_v_, chf_b3_;
    Var chf_v_gamma_, chf_b_gamma_, chf_eta1_, chf_eta2_;
    Var type_w1_, type_w1_tau_, type_b1_, type_w2_, type_b2_;
    Var time_w1_, time_b1_, time_v_, time_b2_;
};

struct HorizonExceeded : std::runtime_error {
    explicit HorizonExceeded(double partial_integral)
        : std::runtime_error("survival did not decay below cutoff within the horizon"),
          partial(partial_integral) {}
    double partial;
};

// Tape-free evaluation path used for prediction, metrics and sweeps.
// Derivatives w.r.t. tau are carried by dual numbers.
class Inference {
public:
    explicit Inference(const Model& model) : model_(&model) {}

    std::vector<std::vector<double>> encode_states(const EventSequence& seq) const;
    std::vector<double> step(const std::vector<double>& h_prev, int type_id, double tau) const;

    void chf_dual(const std::vector<double>& h, double tau, double* phi, double* dphi) const;
    double gamma(const std::vector<double>& h) const;
    double log_density(const std::vector<double>& h, double tau) const;

    std::vector<double> type_probs(const std::vector<double>& h, double tau) const;
    int predict_type(const std::vector<double>& h, double tau) const;

    double predict_time_raw(const std::vector<double>& h) const;
    double predict_time(const std::vector<double>& h) const;  // clamped at 0

    double sequence_nll(const EventSequence& seq) const;

    struct ExpectedTimeOptions {
        double mean_tau = 1.0;
        double rel_tol = 1e-6;
        double horizon_factor = 1e4;
        double survival_cutoff = 1e-9;
    };
    double expected_time(const std::vector<double>& h, const ExpectedTimeOptions& opt) const;

private:
    const Model* model_;
};

}  // namespace chftpp
