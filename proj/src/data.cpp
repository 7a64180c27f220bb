#include "chftpp/data.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include <json.hpp>

namespace chftpp {

std::vector<double> EventSequence::inter_event_times() const {
    std::vector<double> taus;
    taus.reserve(events.size());
    double prev = 0.0;
    for (const auto& e : events) {
        taus.push_back(e.time - prev);
        prev = e.time;
    }
    return taus;
}

std::size_t Dataset::total_events() const {
    std::size_t n = 0;
    for (const auto& s : sequences) n += s.size();
    return n;
}

void validate_sequence(const EventSequence& seq, int num_types) {
    if (seq.events.empty()) throw DataError("sequence is empty");
    double prev = 0.0;
    bool first = true;
    for (const auto& e : seq.events) {
        if (e.type_id < 0 || e.type_id >= num_types) {
            throw DataError("type_id " + std::to_string(e.type_id) + " out of range [0, " +
                            std::to_string(num_types) + ")");
        }
        if (e.time < 0.0) throw DataError("negative timestamp");
        if (!first && e.time <= prev) {
            throw DataError("timestamps not strictly increasing");
        }
        prev = e.time;
        first = false;
    }
}

EventSequence parse_sequence_line(const std::string& line, int num_types, int line_number) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("line " + std::to_string(line_number) + ": " + e.what());
    }
    if (!j.is_array()) {
        throw DataError("line " + std::to_string(line_number) + ": expected a JSON array");
    }
    EventSequence seq;
    for (const auto& item : j) {
        if (!item.is_array() || item.size() != 2) {
            throw DataError("line " + std::to_string(line_number) +
                            ": each event must be a [type_id, timestamp] pair");
        }
        Event e;
        e.type_id = item[0].get<int>();
        e.time = item[1].get<double>();
        seq.events.push_back(e);
    }
    try {
        validate_sequence(seq, num_types);
    } catch (const DataError& e) {
        throw DataError("line " + std::to_string(line_number) + ": " + e.what());
    }
    return seq;
}

Dataset load_dataset(const std::string& path, int num_types) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    Dataset ds;
    ds.num_types = num_types;
    std::string line;
    int line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ds.sequences.push_back(parse_sequence_line(line, num_types, line_number));
    }
    return ds;
}

void save_dataset(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open " + path + " for writing");
    for (const auto& seq : ds.sequences) {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& e : seq.events) j.push_back({e.type_id, e.time});
        out << j.dump() << "\n";
    }
}

SplitResult split(const Dataset& ds, double train_frac, double val_frac, double test_frac,
                  std::uint64_t seed) {
    if (train_frac <= 0.0 || val_frac <= 0.0 || test_frac <= 0.0 ||
        std::fabs(train_frac + val_frac + test_frac - 1.0) > 1e-9) {
        throw DataError("split fractions must be positive and sum to 1");
    }
    std::vector<std::size_t> order(ds.sequences.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::size_t n = order.size();
    std::size_t n_train = static_cast<std::size_t>(std::llround(train_frac * n));
    std::size_t n_val = static_cast<std::size_t>(std::llround(val_frac * n));
    n_train = std::min(n_train, n);
    n_val = std::min(n_val, n - n_train);

    SplitResult r;
    r.train.num_types = r.val.num_types = r.test.num_types = ds.num_types;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& seq = ds.sequences[order[i]];
        if (i < n_train) r.train.sequences.push_back(seq);
        else if (i < n_train + n_val) r.val.sequences.push_back(seq);
        else r.test.sequences.push_back(seq);
    }
    return r;
}

std::vector<Batch> make_batches(const Dataset& ds, int batch_size, bool shuffle,
                                std::uint64_t seed) {
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (ds.sequences.empty()) throw DataError("cannot batch an empty dataset");

    std::vector<std::size_t> order(ds.sequences.size());
    std::iota(order.begin(), order.end(), 0);
    if (shuffle) {
        std::mt19937_64 rng(seed);
        std::shuffle(order.begin(), order.end(), rng);
    }

    std::vector<Batch> batches;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
        std::size_t end = std::min(start + batch_size, order.size());
        Batch b;
        b.batch_size = static_cast<int>(end - start);
        int max_len = 0;
        for (std::size_t i = start; i < end; ++i) {
            max_len = std::max(max_len, static_cast<int>(ds.sequences[order[i]].size()));
        }
        b.max_len = max_len;
        std::size_t cells = static_cast<std::size_t>(b.batch_size) * max_len;
        b.types.assign(cells, 0);
        b.taus.assign(cells, 0.0);
        b.mask.assign(cells, 0.0);
        for (std::size_t i = start; i < end; ++i) {
            const auto& seq = ds.sequences[order[i]];
            std::vector<double> taus = seq.inter_event_times();
            std::size_t r = (i - start) * max_len;
            b.lengths.push_back(static_cast<int>(seq.size()));
            for (std::size_t k = 0; k < seq.size(); ++k) {
                b.types[r + k] = seq.events[k].type_id;
                b.taus[r + k] = taus[k];
                b.mask[r + k] = 1.0;
            }
        }
        batches.push_back(std::move(b));
    }
    return batches;
}

}  // namespace chftpp
