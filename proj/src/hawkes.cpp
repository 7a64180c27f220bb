#include "chftpp/hawkes.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace chftpp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Solve (I - A/beta) x = mu by Gaussian elimination; M is small.
std::vector<double> solve_stationary(const HawkesParams& p) {
    int m = p.num_types();
    std::vector<std::vector<double>> a(m, std::vector<double>(m + 1, 0.0));
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) {
            a[i][j] = (i == j ? 1.0 : 0.0) - p.excite[i][j] / p.beta;
        }
        a[i][m] = p.mu[i];
    }
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r) {
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        }
        std::swap(a[piv], a[col]);
        if (std::fabs(a[col][col]) < 1e-14) throw std::runtime_error("singular stationarity system");
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            double f = a[r][col] / a[col][col];
            for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<double> x(m);
    for (int i = 0; i < m; ++i) x[i] = a[i][m] / a[i][i];
    return x;
}

}  // namespace

void HawkesParams::validate() const {
    int m = num_types();
    if (m < 1) throw std::invalid_argument("HawkesParams: need at least one type");
    if (beta <= 0.0) throw std::invalid_argument("HawkesParams: beta must be positive");
    for (double v : mu) {
        if (!(v > 0.0) || !std::isfinite(v)) {
            throw std::invalid_argument("HawkesParams: mu entries must be positive and finite");
        }
    }
    if (static_cast<int>(excite.size()) != m) {
        throw std::invalid_argument("HawkesParams: excitation matrix row count mismatch");
    }
    for (const auto& row : excite) {
        if (static_cast<int>(row.size()) != m) {
            throw std::invalid_argument("HawkesParams: excitation matrix column count mismatch");
        }
        for (double v : row) {
            if (v < 0.0 || !std::isfinite(v)) {
                throw std::invalid_argument("HawkesParams: excitation entries must be >= 0");
            }
        }
    }
    if (spectral_radius_bound() >= 1.0) {
        throw std::invalid_argument("HawkesParams: A/beta row sums must stay below 1");
    }
}

double HawkesParams::spectral_radius_bound() const {
    double worst = 0.0;
    for (const auto& row : excite) {
        double s = 0.0;
        for (double v : row) s += v;
        worst = std::max(worst, s / beta);
    }
    return worst;
}

std::vector<double> HawkesParams::stationary_rates() const { return solve_stationary(*this); }

double hawkes_intensity(const HawkesParams& params, const EventSequence& history, int type_id,
                        double t) {
    if (!history.events.empty() && t < history.events.back().time) {
        throw std::invalid_argument("intensity query before last event");
    }
    double lam = params.mu[static_cast<std::size_t>(type_id)];
    for (const auto& e : history.events) {
        lam += params.excite[static_cast<std::size_t>(type_id)][static_cast<std::size_t>(e.type_id)] *
               std::exp(-params.beta * (t - e.time));
    }
    return lam;
}

EventSequence simulate_sequence(const HawkesParams& params, double horizon, std::uint64_t seed) {
    int m = params.num_types();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double mu_total = 0.0;
    for (double v : params.mu) mu_total += v;

    std::vector<double> excitation(static_cast<std::size_t>(m), 0.0);
    EventSequence seq;
    double t = 0.0;
    while (true) {
        double lam_bar = mu_total;
        for (double e : excitation) lam_bar += e;
        double dt = -std::log(1.0 - unif(rng)) / lam_bar;
        double t_next = t + dt;
        if (t_next > horizon) break;
        double decay = std::exp(-params.beta * dt);
        for (auto& e : excitation) e *= decay;
        t = t_next;
        double lam = mu_total;
        for (double e : excitation) lam += e;
        // Total intensity only decays between events, so lam_bar dominates.
        if (unif(rng) * lam_bar <= lam) {
            double u = unif(rng) * lam;
            int k = m - 1;
            double accum = 0.0;
            for (int j = 0; j < m; ++j) {
                accum += params.mu[static_cast<std::size_t>(j)] + excitation[static_cast<std::size_t>(j)];
                if (u <= accum) { k = j; break; }
            }
            seq.events.push_back(Event{k, t});
            for (int j = 0; j < m; ++j) {
                excitation[static_cast<std::size_t>(j)] +=
                    params.excite[static_cast<std::size_t>(j)][static_cast<std::size_t>(k)];
            }
        }
    }
    return seq;
}

Dataset simulate(const HawkesParams& params, const SimConfig& cfg) {
    params.validate();
    if (cfg.num_sequences < 1) throw std::invalid_argument("num_sequences must be >= 1");
    if (cfg.horizon <= 0.0) throw std::invalid_argument("horizon must be positive");
    Dataset ds;
    ds.num_types = params.num_types();
    ds.sequences.reserve(static_cast<std::size_t>(cfg.num_sequences));
    for (int i = 0; i < cfg.num_sequences; ++i) {
        // Resample empty draws; a sequence must carry at least one event.
        for (std::uint64_t salt = 0;; ++salt) {
            std::uint64_t stream =
                splitmix64(cfg.seed ^ splitmix64(static_cast<std::uint64_t>(i) * 2654435761ULL + salt));
            EventSequence seq = simulate_sequence(params, cfg.horizon, stream);
            if (!seq.events.empty()) {
                ds.sequences.push_back(std::move(seq));
                break;
            }
        }
    }
    return ds;
}

double oracle_nll(const HawkesParams& params, const EventSequence& seq, double horizon) {
    int m = params.num_types();
    std::vector<double> excitation(static_cast<std::size_t>(m), 0.0);
    double prev = 0.0;
    double nll = 0.0;
    for (const auto& e : seq.events) {
        double decay = std::exp(-params.beta * (e.time - prev));
        for (auto& x : excitation) x *= decay;
        double lam = params.mu[static_cast<std::size_t>(e.type_id)] +
                     excitation[static_cast<std::size_t>(e.type_id)];
        nll -= std::log(lam);
        for (int j = 0; j < m; ++j) {
            excitation[static_cast<std::size_t>(j)] +=
                params.excite[static_cast<std::size_t>(j)][static_cast<std::size_t>(e.type_id)];
        }
        prev = e.time;
    }
    // Compensator: mu_k T + sum_i (A[k][m_i]/beta)(1 - exp(-beta (T - t_i)))
    for (int k = 0; k < m; ++k) {
        nll += params.mu[static_cast<std::size_t>(k)] * horizon;
    }
    for (const auto& e : seq.events) {
        double w = (1.0 - std::exp(-params.beta * (horizon - e.time))) / params.beta;
        for (int k = 0; k < m; ++k) {
            nll += params.excite[static_cast<std::size_t>(k)][static_cast<std::size_t>(e.type_id)] * w;
        }
    }
    return nll;
}

double oracle_nll_per_event(const HawkesParams& params, const Dataset& ds) {
    double total = 0.0;
    std::size_t events = 0;
    for (const auto& seq : ds.sequences) {
        total += oracle_nll(params, seq, seq.events.back().time);
        events += seq.size();
    }
    return total / static_cast<double>(events);
}

namespace {

HawkesParams random_excitation(int m, double mu, double beta, double radius, double density,
                               std::uint64_t seed) {
    HawkesParams p;
    p.mu.assign(static_cast<std::size_t>(m), mu);
    p.beta = beta;
    p.excite.assign(static_cast<std::size_t>(m), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    for (auto& row : p.excite) {
        for (auto& v : row) {
            if (unif(rng) < density) v = 0.2 + 0.8 * unif(rng);
        }
    }
    double worst = 0.0;
    for (const auto& row : p.excite) {
        double s = 0.0;
        for (double v : row) s += v;
        worst = std::max(worst, s);
    }
    double scale = radius * beta / worst;
    for (auto& row : p.excite) {
        for (auto& v : row) v *= scale;
    }
    return p;
}

}  // namespace

HawkesParams hawkes1_like_params() { return random_excitation(9, 0.1, 1.0, 0.5, 0.35, 20240901); }

HawkesParams hawkes2_like_params() { return random_excitation(9, 0.08, 2.0, 0.7, 0.5, 20240902); }

}  // namespace chftpp
