#pragma once

#include <cstdint>
#include <vector>

#include "chftpp/data.hpp"

namespace chftpp {

// Multivariate Hawkes process with exponential kernel and a shared decay:
//   lambda_k(t) = mu_k + sum_i A[k][m_i] exp(-beta (t - t_i))
struct HawkesParams {
    std::vector<double> mu;          // length M
    std::vector<std::vector<double>> excite;  // M x M, excite[k][j]: jump in type k when j fires
    double beta = 1.0;

    int num_types() const { return static_cast<int>(mu.size()); }
    void validate() const;
    double spectral_radius_bound() const;  // max row sum of excite / beta
    // Stationary event rates (I - A/beta)^{-1} mu.
    std::vector<double> stationary_rates() const;
};

struct SimConfig {
    int num_sequences = 1000;
    double horizon = 5.0;
    std::uint64_t seed = 0;
};

double hawkes_intensity(const HawkesParams& params, const EventSequence& history, int type_id,
                        double t);

EventSequence simulate_sequence(const HawkesParams& params, double horizon, std::uint64_t seed);
Dataset simulate(const HawkesParams& params, const SimConfig& cfg);

// Exact negative log-likelihood of the sequence on [0, horizon]:
//   -sum_i log lambda_{m_i}(t_i) + sum_k integral_0^T lambda_k(s) ds
// with the compensator in closed form.
double oracle_nll(const HawkesParams& params, const EventSequence& seq, double horizon);

// Mean oracle NLL per event across a dataset, with per-sequence horizon
// at the last event time (matches the event-terms-only model likelihood).
double oracle_nll_per_event(const HawkesParams& params, const Dataset& ds);

HawkesParams hawkes1_like_params();
HawkesParams hawkes2_like_params();

}  // namespace chftpp
