#include "chftpp/model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include <json.hpp>

namespace chftpp {

Activation activation_from_string(const std::string& s) {
    if (s == "tanh") return Activation::Tanh;
    if (s == "relu") return Activation::Relu;
    if (s == "prelu") return Activation::Prelu;
    if (s == "softplus") return Activation::Softplus;
    if (s == "sigmoid") return Activation::Sigmoid;
    throw std::invalid_argument("unknown activation: " + s);
}

std::string to_string(Activation a) {
    switch (a) {
        case Activation::Tanh: return "tanh";
        case Activation::Relu: return "relu";
        case Activation::Prelu: return "prelu";
        case Activation::Softplus: return "softplus";
        case Activation::Sigmoid: return "sigmoid";
    }
    return "tanh";
}

CellKind cell_from_string(const std::string& s) {
    if (s == "vanilla") return CellKind::Vanilla;
    if (s == "gated") return CellKind::Gated;
    throw std::invalid_argument("unknown cell kind: " + s);
}

std::string to_string(CellKind c) { return c == CellKind::Vanilla ? "vanilla" : "gated"; }

Model::Model(ModelConfig cfg) : config(cfg) {
    if (cfg.num_types < 1) throw std::invalid_argument("num_types must be >= 1");
    int d = cfg.hidden_dim;
    int dm = cfg.embed_dim;
    int m = cfg.num_types;
    int enc_in = d + dm + 1;

    idx.embedding = params.add("type_embedding", m, dm, false, dm);
    if (cfg.cell == CellKind::Vanilla) {
        idx.enc_w = params.add("enc.W_h", d, enc_in, false, enc_in);
        idx.enc_b = params.add("enc.b_h", d, 1, false, enc_in);
    } else {
        idx.enc_wz = params.add("enc.W_z", d, enc_in, false, enc_in);
        idx.enc_bz = params.add("enc.b_z", d, 1, false, enc_in);
        idx.enc_wr = params.add("enc.W_r", d, enc_in, false, enc_in);
        idx.enc_br = params.add("enc.b_r", d, 1, false, enc_in);
        idx.enc_wc = params.add("enc.W_c", d, enc_in, false, enc_in);
        idx.enc_bc = params.add("enc.b_c", d, 1, false, enc_in);
    }

    idx.chf_w1 = params.add("chf.W1_h", d, d, false, d + 1);
    idx.chf_w1_tau = params.add("chf.w1_tau", d, 1, true, d + 1);
    idx.chf_b1 = params.add("chf.b1", d, 1, false, d + 1);
    idx.chf_w2 = params.add("chf.W2", d, d, true, d);
    idx.chf_b2 = params.add("chf.b2", d, 1, false, d);
    idx.chf_v = params.add("chf.v", d, 1, true, d);
    idx.chf_b3 = params.add("chf.b3", 1, 1, false, d);
    idx.chf_v_gamma = params.add("chf.v_gamma", d, 1, false, d);
    idx.chf_b_gamma = params.add("chf.b_gamma", 1, 1, false, d);
    if (cfg.activation == Activation::Prelu) {
        idx.chf_eta1 = params.add("chf.eta1", 1, 1, true, 1);
    }
    if (cfg.activation == Activation::Softplus) {
        idx.chf_eta2 = params.add("chf.eta2", 1, 1, false, 1);
    }

    idx.type_w1 = params.add("type.W1_h", d, d, false, d + 1);
    idx.type_w1_tau = params.add("type.w1_tau", d, 1, false, d + 1);
    idx.type_b1 = params.add("type.b1", d, 1, false, d + 1);
    idx.type_w2 = params.add("type.W2", m, d, false, d);
    idx.type_b2 = params.add("type.b2", m, 1, false, d);

    idx.time_w1 = params.add("time.W1", d, d, false, d);
    idx.time_b1 = params.add("time.b1", d, 1, false, d);
    idx.time_v = params.add("time.v", d, 1, false, d);
    idx.time_b2 = params.add("time.b2", 1, 1, false, d);
}

void Model::init(std::uint64_t seed) {
    params.init_uniform(seed);
    if (idx.chf_eta1 >= 0) params.at(idx.chf_eta1).value[0] = 0.25;
    if (idx.chf_eta2 >= 0) params.at(idx.chf_eta2).value[0] = 1.0;
}

Forward::Forward(Tape& tape, const Model& model) : tape_(&tape), model_(&model) {
    const auto& ix = model.idx;
    h0_ = tape.constant(std::vector<double>(static_cast<std::size_t>(model.config.hidden_dim), 0.0));
    embedding_ = tape.param(ix.embedding);
    if (model.config.cell == CellKind::Vanilla) {
        enc_w_ = tape.param(ix.enc_w);
        enc_b_ = tape.param(ix.enc_b);
    } else {
        enc_wz_ = tape.param(ix.enc_wz);
        enc_bz_ = tape.param(ix.enc_bz);
        enc_wr_ = tape.param(ix.enc_wr);
        enc_br_ = tape.param(ix.enc_br);
        enc_wc_ = tape.param(ix.enc_wc);
        enc_bc_ = tape.param(ix.enc_bc);
    }
    chf_w1_ = tape.param(ix.chf_w1);
    chf_w1_tau_ = tape.param(ix.chf_w1_tau);
    chf_b1_ = tape.param(ix.chf_b1);
    chf_w2_ = tape.param(ix.chf_w2);
    chf_b2_ = tape.param(ix.chf_b2);
    chf_v_ = tape.param(ix.chf_v);
    chf_b3_ = tape.param(ix.chf_b3);
    chf_v_gamma_ = tape.param(ix.chf_v_gamma);
    chf_b_gamma_ = tape.param(ix.chf_b_gamma);
    if (ix.chf_eta1 >= 0) chf_eta1_ = tape.param(ix.chf_eta1);
    if (ix.chf_eta2 >= 0) chf_eta2_ = tape.param(ix.chf_eta2);
    type_w1_ = tape.param(ix.type_w1);
    type_w1_tau_ = tape.param(ix.type_w1_tau);
    type_b1_ = tape.param(ix.type_b1);
    type_w2_ = tape.param(ix.type_w2);
    type_b2_ = tape.param(ix.type_b2);
    time_w1_ = tape.param(ix.time_w1);
    time_b1_ = tape.param(ix.time_b1);
    time_v_ = tape.param(ix.time_v);
    time_b2_ = tape.param(ix.time_b2);
}

Var Forward::initial_state() const { return h0_; }

Var Forward::embed(int type_id, Var tau_plain) const {
    if (type_id < 0 || type_id >= model_->config.num_types) {
        throw std::out_of_range("embed: type_id out of range");
    }
    return tape_->concat(tape_->row(embedding_, type_id), tau_plain);
}

Var Forward::rnn_step(Var h_prev, Var event_embedding) const {
    Tape& t = *tape_;
    Var x = t.concat(h_prev, event_embedding);
    if (model_->config.cell == CellKind::Vanilla) {
        return t.tanh_(t.add(t.matvec(enc_w_, x), enc_b_));
    }
    Var z = t.sigmoid(t.add(t.matvec(enc_wz_, x), enc_bz_));
    Var r = t.sigmoid(t.add(t.matvec(enc_wr_, x), enc_br_));
    Var xc = t.concat(t.mul(r, h_prev), event_embedding);
    Var c = t.tanh_(t.add(t.matvec(enc_wc_, xc), enc_bc_));
    Var one = t.constant(1.0);
    return t.add(t.mul(t.sub(one, z), h_prev), t.mul(z, c));
}

Var Forward::activate(Var x) const {
    switch (model_->config.activation) {
        case Activation::Tanh: return tape_->tanh_(x);
        case Activation::Relu: return tape_->relu(x);
        case Activation::Sigmoid: return tape_->sigmoid(x);
        case Activation::Prelu: return tape_->prelu(x, chf_eta1_);
        case Activation::Softplus: return tape_->softplus(x, chf_eta2_);
    }
    return tape_->tanh_(x);
}

Forward::ChfEval Forward::chf(Var h, Var tau_seeded) const {
    Tape& t = *tape_;
    if (t.scalar(tau_seeded) < 0.0) throw std::domain_error("chf: tau must be >= 0");
    // The tau-free preactivation is shared between the f(tau) and f(0)
    // passes; at tau = 0 the tau column contributes exactly zero.
    Var u = t.add(t.matvec(chf_w1_, h), chf_b1_);
    Var z2 = activate(t.add(u, t.mul(tau_seeded, chf_w1_tau_)));
    Var z3 = activate(t.add(t.matvec(chf_w2_, z2), chf_b2_));
    Var f_tau = t.add(t.sum(t.mul(chf_v_, z3)), chf_b3_);
    Var z2_0 = activate(u);
    Var z3_0 = activate(t.add(t.matvec(chf_w2_, z2_0), chf_b2_));
    Var f_0 = t.add(t.sum(t.mul(chf_v_, z3_0)), chf_b3_);
    Var gamma = t.relu(t.add(t.sum(t.mul(chf_v_gamma_, h)), chf_b_gamma_));
    Var phi = t.add(t.sub(f_tau, f_0), t.mul(gamma, tau_seeded));
    return ChfEval{phi, t.tangent_of(phi), gamma};
}

Var Forward::log_density(Var h, Var tau_seeded) const {
    ChfEval e = chf(h, tau_seeded);
    return tape_->sub(tape_->log_guard(e.intensity), e.phi);
}

Var Forward::type_logits(Var h, Var tau_plain) const {
    Tape& t = *tape_;
    Var pre = t.add(t.add(t.matvec(type_w1_, h), t.mul(tau_plain, type_w1_tau_)), type_b1_);
    return t.add(t.matvec(type_w2_, t.relu(pre)), type_b2_);
}

Var Forward::log_type_prob(Var h, Var tau_plain, int type_id) const {
    return tape_->log_softmax_at(type_logits(h, tau_plain), type_id);
}

Var Forward::time_pred(Var h) const {
    Tape& t = *tape_;
    Var inner = t.add(t.matvec(time_w1_, h), time_b1_);
    if (model_->config.time_head_hidden_relu) inner = t.relu(inner);
    return t.add(t.sum(t.mul(time_v_, inner)), time_b2_);
}

// ---------------------------------------------------------------------------
// Plain inference path.

namespace {

struct Dual {
    double v = 0.0;
    double d = 0.0;
};

inline Dual operator+(Dual a, Dual b) { return {a.v + b.v, a.d + b.d}; }
inline Dual operator-(Dual a, Dual b) { return {a.v - b.v, a.d - b.d}; }
inline Dual operator*(Dual a, Dual b) { return {a.v * b.v, a.d * b.v + a.v * b.d}; }
inline Dual operator*(double a, Dual b) { return {a * b.v, a * b.d}; }
inline Dual dtanh(Dual x) {
    double y = std::tanh(x.v);
    return {y, (1.0 - y * y) * x.d};
}
inline Dual drelu(Dual x) { return x.v > 0.0 ? x : Dual{0.0, 0.0}; }
inline Dual dsigmoid(Dual x) {
    double y = 1.0 / (1.0 + std::exp(-x.v));
    return {y, y * (1.0 - y) * x.d};
}

Dual activate_dual(Dual x, Activation act, double eta1, double eta2) {
    switch (act) {
        case Activation::Tanh: return dtanh(x);
        case Activation::Relu: return drelu(x);
        case Activation::Sigmoid: return dsigmoid(x);
        case Activation::Prelu: {
            Dual scaled{eta1 * x.v, eta1 * x.d};
            return scaled.v >= x.v ? scaled : x;
        }
        case Activation::Softplus: {
            double s = eta2 * x.v;
            double lp = std::log1p(std::exp(s));
            return {lp / eta2, (1.0 / (1.0 + std::exp(-s))) * x.d};
        }
    }
    return dtanh(x);
}

const std::vector<double>& vals(const Model& m, int index) { return m.params.at(index).value; }

void matvec_plain(const ParameterStore::Tensor& w, const std::vector<double>& x,
                  std::vector<double>& out) {
    out.assign(static_cast<std::size_t>(w.rows), 0.0);
    for (int i = 0; i < w.rows; ++i) {
        const double* row = w.value.data() + static_cast<std::size_t>(i) * w.cols;
        double s = 0.0;
        for (int j = 0; j < w.cols; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
        out[static_cast<std::size_t>(i)] = s;
    }
}

}  // namespace

std::vector<double> Inference::step(const std::vector<double>& h_prev, int type_id,
                                    double tau) const {
    const Model& m = *model_;
    if (type_id < 0 || type_id >= m.config.num_types) {
        throw std::out_of_range("step: type_id out of range");
    }
    int d = m.config.hidden_dim;
    int dm = m.config.embed_dim;
    std::vector<double> x;
    x.reserve(static_cast<std::size_t>(d + dm + 1));
    x.insert(x.end(), h_prev.begin(), h_prev.end());
    const auto& emb = m.params.at(m.idx.embedding);
    const double* row = emb.value.data() + static_cast<std::size_t>(type_id) * dm;
    x.insert(x.end(), row, row + dm);
    x.push_back(tau);

    std::vector<double> h(static_cast<std::size_t>(d));
    if (m.config.cell == CellKind::Vanilla) {
        std::vector<double> pre;
        matvec_plain(m.params.at(m.idx.enc_w), x, pre);
        const auto& b = vals(m, m.idx.enc_b);
        for (int i = 0; i < d; ++i) {
            h[static_cast<std::size_t>(i)] =
                std::tanh(pre[static_cast<std::size_t>(i)] + b[static_cast<std::size_t>(i)]);
        }
        return h;
    }
    std::vector<double> z, r, c;
    matvec_plain(m.params.at(m.idx.enc_wz), x, z);
    matvec_plain(m.params.at(m.idx.enc_wr), x, r);
    const auto& bz = vals(m, m.idx.enc_bz);
    const auto& br = vals(m, m.idx.enc_br);
    for (int i = 0; i < d; ++i) {
        z[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-(z[static_cast<std::size_t>(i)] + bz[static_cast<std::size_t>(i)])));
        r[static_cast<std::size_t>(i)] =
            1.0 / (1.0 + std::exp(-(r[static_cast<std::size_t>(i)] + br[static_cast<std::size_t>(i)])));
    }
    std::vector<double> xc;
    xc.reserve(x.size());
    for (int i = 0; i < d; ++i) {
        xc.push_back(r[static_cast<std::size_t>(i)] * h_prev[static_cast<std::size_t>(i)]);
    }
    xc.insert(xc.end(), x.begin() + d, x.end());
    matvec_plain(m.params.at(m.idx.enc_wc), xc, c);
    const auto& bc = vals(m, m.idx.enc_bc);
    for (int i = 0; i < d; ++i) {
        double ci = std::tanh(c[static_cast<std::size_t>(i)] + bc[static_cast<std::size_t>(i)]);
        double zi = z[static_cast<std::size_t>(i)];
        h[static_cast<std::size_t>(i)] = (1.0 - zi) * h_prev[static_cast<std::size_t>(i)] + zi * ci;
    }
    return h;
}

std::vector<std::vector<double>> Inference::encode_states(const EventSequence& seq) const {
    std::vector<std::vector<double>> states;
    states.reserve(seq.size() + 1);
    states.emplace_back(static_cast<std::size_t>(model_->config.hidden_dim), 0.0);
    std::vector<double> taus = seq.inter_event_times();
    for (std::size_t i = 0; i < seq.size(); ++i) {
        states.push_back(step(states.back(), seq.events[i].type_id, taus[i]));
    }
    return states;
}

void Inference::chf_dual(const std::vector<double>& h, double tau, double* phi,
                         double* dphi) const {
    const Model& m = *model_;
    if (tau < 0.0) throw std::domain_error("chf: tau must be >= 0");
    int d = m.config.hidden_dim;
    double eta1 = m.idx.chf_eta1 >= 0 ? vals(m, m.idx.chf_eta1)[0] : 0.0;
    double eta2 = m.idx.chf_eta2 >= 0 ? vals(m, m.idx.chf_eta2)[0] : 1.0;

    std::vector<double> u;
    matvec_plain(m.params.at(m.idx.chf_w1), h, u);
    const auto& b1 = vals(m, m.idx.chf_b1);
    const auto& wtau = vals(m, m.idx.chf_w1_tau);
    std::vector<Dual> z2(static_cast<std::size_t>(d));
    std::vector<double> z2_0(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
        std::size_t si = static_cast<std::size_t>(i);
        Dual pre{u[si] + b1[si] + wtau[si] * tau, wtau[si]};
        z2[si] = activate_dual(pre, m.config.activation, eta1, eta2);
        z2_0[si] = activate_dual(Dual{u[si] + b1[si], 0.0}, m.config.activation, eta1, eta2).v;
    }

    const auto& w2 = m.params.at(m.idx.chf_w2);
    const auto& b2 = vals(m, m.idx.chf_b2);
    const auto& v = vals(m, m.idx.chf_v);
    Dual f_tau{vals(m, m.idx.chf_b3)[0], 0.0};
    double f_0 = vals(m, m.idx.chf_b3)[0];
    for (int i = 0; i < d; ++i) {
        std::size_t si = static_cast<std::size_t>(i);
        const double* row = w2.value.data() + si * w2.cols;
        Dual pre{b2[si], 0.0};
        double pre0 = b2[si];
        for (int j = 0; j < d; ++j) {
            std::size_t sj = static_cast<std::size_t>(j);
            pre = pre + row[j] * z2[sj];
            pre0 += row[j] * z2_0[sj];
        }
        f_tau = f_tau + v[si] * activate_dual(pre, m.config.activation, eta1, eta2);
        f_0 += v[si] * activate_dual(Dual{pre0, 0.0}, m.config.activation, eta1, eta2).v;
    }

    double g = gamma(h);
    *phi = f_tau.v - f_0 + g * tau;
    *dphi = f_tau.d + g;
}

double Inference::gamma(const std::vector<double>& h) const {
    const Model& m = *model_;
    const auto& vg = vals(m, m.idx.chf_v_gamma);
    double s = vals(m, m.idx.chf_b_gamma)[0];
    for (std::size_t i = 0; i < h.size(); ++i) s += vg[i] * h[i];
    return s > 0.0 ? s : 0.0;
}

double Inference::log_density(const std::vector<double>& h, double tau) const {
    double phi = 0.0, dphi = 0.0;
    chf_dual(h, tau, &phi, &dphi);
    return std::log(std::max(dphi, kLogFloor)) - phi;
}

std::vector<double> Inference::type_probs(const std::vector<double>& h, double tau) const {
    const Model& m = *model_;
    std::vector<double> pre;
    matvec_plain(m.params.at(m.idx.type_w1), h, pre);
    const auto& b1 = vals(m, m.idx.type_b1);
    const auto& wtau = vals(m, m.idx.type_w1_tau);
    for (std::size_t i = 0; i < pre.size(); ++i) {
        pre[i] = std::max(0.0, pre[i] + b1[i] + wtau[i] * tau);
    }
    std::vector<double> logits;
    matvec_plain(m.params.at(m.idx.type_w2), pre, logits);
    const auto& b2 = vals(m, m.idx.type_b2);
    double mx = -1e300;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        logits[i] += b2[i];
        mx = std::max(mx, logits[i]);
    }
    double z = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - mx);
        z += v;
    }
    for (auto& v : logits) v /= z;
    return logits;
}

int Inference::predict_type(const std::vector<double>& h, double tau) const {
    std::vector<double> p = type_probs(h, tau);
    int best = 0;
    for (std::size_t i = 1; i < p.size(); ++i) {
        if (p[i] > p[static_cast<std::size_t>(best)]) best = static_cast<int>(i);
    }
    return best;
}

double Inference::predict_time_raw(const std::vector<double>& h) const {
    const Model& m = *model_;
    std::vector<double> inner;
    matvec_plain(m.params.at(m.idx.time_w1), h, inner);
    const auto& b1 = vals(m, m.idx.time_b1);
    const auto& v = vals(m, m.idx.time_v);
    double s = vals(m, m.idx.time_b2)[0];
    for (std::size_t i = 0; i < inner.size(); ++i) {
        double x = inner[i] + b1[i];
        if (m.config.time_head_hidden_relu && x < 0.0) x = 0.0;
        s += v[i] * x;
    }
    return s;
}

double Inference::predict_time(const std::vector<double>& h) const {
    return std::max(0.0, predict_time_raw(h));
}

double Inference::sequence_nll(const EventSequence& seq) const {
    std::vector<std::vector<double>> states = encode_states(seq);
    std::vector<double> taus = seq.inter_event_times();
    double nll = 0.0;
    for (std::size_t i = 0; i < seq.size(); ++i) {
        const auto& h = states[i];
        double tau = taus[i];
        std::vector<double> probs = type_probs(h, tau);
        nll -= log_density(h, tau);
        nll -= std::log(std::max(probs[static_cast<std::size_t>(seq.events[i].type_id)], kLogFloor));
    }
    return nll;
}

double Inference::expected_time(const std::vector<double>& h,
                                const ExpectedTimeOptions& opt) const {
    auto survival = [&](double tau) {
        double phi = 0.0, dphi = 0.0;
        chf_dual(h, tau, &phi, &dphi);
        return std::exp(-phi);
    };
    double hard_horizon = opt.horizon_factor * opt.mean_tau;
    double t_end = std::max(opt.mean_tau * 1e-3, 1e-12);
    while (survival(t_end) >= opt.survival_cutoff) {
        t_end *= 2.0;
        if (t_end > hard_horizon) {
            // Report the integral up to the hard horizon with the error.
            double partial = 0.0;
            int n = 4096;
            double step = hard_horizon / n;
            double prev = survival(0.0);
            for (int i = 1; i <= n; ++i) {
                double cur = survival(step * i);
                partial += 0.5 * (prev + cur) * step;
                prev = cur;
            }
            throw HorizonExceeded(partial);
        }
    }
    // E[tau] = integral of the survival function, since phi(0) = 0 and
    // the survival has decayed below the cutoff by t_end.
    double prev_estimate = 0.0;
    for (int n = 64; n <= (1 << 22); n *= 2) {
        double step = t_end / n;
        double acc = 0.5 * (survival(0.0) + survival(t_end));
        for (int i = 1; i < n; ++i) acc += survival(step * i);
        double estimate = acc * step;
        if (n > 64 && std::fabs(estimate - prev_estimate) < opt.rel_tol * std::fabs(estimate)) {
            return estimate;
        }
        prev_estimate = estimate;
    }
    return prev_estimate;
}

// ---------------------------------------------------------------------------
// Checkpoints.

void save_checkpoint(const Model& model, const std::string& path) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["config"] = {
        {"num_types", model.config.num_types},
        {"hidden_dim", model.config.hidden_dim},
        {"embed_dim", model.config.embed_dim},
        {"activation", to_string(model.config.activation)},
        {"cell", to_string(model.config.cell)},
        {"time_head_hidden_relu", model.config.time_head_hidden_relu},
    };
    nlohmann::json tensors = nlohmann::json::array();
    for (std::size_t i = 0; i < model.params.count(); ++i) {
        const auto& t = model.params.at(static_cast<int>(i));
        tensors.push_back({{"name", t.name},
                           {"rows", t.rows},
                           {"cols", t.cols},
                           {"positive", t.positive},
                           {"values", t.value}});
    }
    j["tensors"] = std::move(tensors);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write checkpoint to " + path);
    out << j.dump(2) << "\n";
}

Model load_checkpoint(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open checkpoint " + path);
    nlohmann::json j;
    in >> j;
    if (j.value("format_version", 0) != 1) {
        throw std::runtime_error("unsupported checkpoint format version");
    }
    ModelConfig cfg;
    const auto& c = j.at("config");
    cfg.num_types = c.at("num_types").get<int>();
    cfg.hidden_dim = c.at("hidden_dim").get<int>();
    cfg.embed_dim = c.at("embed_dim").get<int>();
    cfg.activation = activation_from_string(c.at("activation").get<std::string>());
    cfg.cell = cell_from_string(c.at("cell").get<std::string>());
    cfg.time_head_hidden_relu = c.at("time_head_hidden_relu").get<bool>();
    Model model(cfg);
    for (const auto& t : j.at("tensors")) {
        auto& dst = model.params.at(t.at("name").get<std::string>());
        std::vector<double> values = t.at("values").get<std::vector<double>>();
        if (values.size() != dst.value.size()) {
            throw std::runtime_error("checkpoint tensor size mismatch for " +
                                     t.at("name").get<std::string>());
        }
        dst.value = std::move(values);
    }
    return model;
}

}  // namespace chftpp
