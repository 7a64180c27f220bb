#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace chftpp {

struct Event {
    int type_id = 0;
    double time = 0.0;
};

// Timestamps strictly increasing; the first inter-event time is measured
// from the time-0 origin.
struct EventSequence {
    std::vector<Event> events;

    std::size_t size() const { return events.size(); }
    std::vector<double> inter_event_times() const;
};

struct Dataset {
    std::vector<EventSequence> sequences;
    int num_types = 0;

    std::size_t total_events() const;
};

// Sequences padded to a common length; mask is 1 exactly on real events.
struct Batch {
    int batch_size = 0;
    int max_len = 0;
    std::vector<int> types;      // batch_size x max_len, row-major
    std::vector<double> taus;    // batch_size x max_len
    std::vector<double> mask;    // batch_size x max_len
    std::vector<int> lengths;
};

struct DataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void validate_sequence(const EventSequence& seq, int num_types);

// One JSON array of [type_id, timestamp] pairs per line.
Dataset load_dataset(const std::string& path, int num_types);
void save_dataset(const Dataset& ds, const std::string& path);
EventSequence parse_sequence_line(const std::string& line, int num_types, int line_number);

struct SplitResult {
    Dataset train, val, test;
};

SplitResult split(const Dataset& ds, double train_frac, double val_frac, double test_frac,
                  std::uint64_t seed);

std::vector<Batch> make_batches(const Dataset& ds, int batch_size, bool shuffle,
                                std::uint64_t seed);

}  // namespace chftpp
