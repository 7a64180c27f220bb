#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "chftpp/data.hpp"

using namespace chftpp;

namespace {

std::string write_temp(const std::string& contents) {
    static int counter = 0;
    std::string path = "test_data_tmp_" + std::to_string(counter++) + ".jsonl";
    std::ofstream out(path);
    out << contents;
    return path;
}

Dataset random_dataset(int n, int num_types, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> len(1, 8);
    std::uniform_int_distribution<int> type(0, num_types - 1);
    std::exponential_distribution<double> gap(1.0);
    Dataset ds;
    ds.num_types = num_types;
    for (int i = 0; i < n; ++i) {
        EventSequence seq;
        double t = 0.0;
        int l = len(rng);
        for (int k = 0; k < l; ++k) {
            t += gap(rng) + 1e-6;
            seq.events.push_back(Event{type(rng), t});
        }
        ds.sequences.push_back(seq);
    }
    return ds;
}

}  // namespace

TEST_CASE("parse line with inter-event times") {
    EventSequence seq = parse_sequence_line("[[0,0.5],[2,1.3]]", 3, 1);
    REQUIRE(seq.size() == 2);
    auto taus = seq.inter_event_times();
    CHECK(taus[0] == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(taus[1] == doctest::Approx(0.8).epsilon(1e-12));
}

TEST_CASE("non-increasing timestamps are rejected") {
    CHECK_THROWS_AS(parse_sequence_line("[[0,1.0],[0,1.0]]", 3, 1), DataError);
    CHECK_THROWS_AS(parse_sequence_line("[[0,2.0],[0,1.0]]", 3, 1), DataError);
}

TEST_CASE("type out of range and malformed lines are rejected with line numbers") {
    std::string path = write_temp("[[0,0.5]]\n[[9,1.0]]\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, 3),
                         doctest::Contains("line 2"), DataError);
    std::remove(path.c_str());

    path = write_temp("[[0,0.5]]\nnot json\n");
    CHECK_THROWS_WITH_AS(load_dataset(path, 3), doctest::Contains("line 2"), DataError);
    std::remove(path.c_str());
}

TEST_CASE("round trip: save then load recovers timestamps") {
    Dataset ds = random_dataset(20, 4, 42);
    std::string path = write_temp("");
    save_dataset(ds, path);
    Dataset back = load_dataset(path, 4);
    std::remove(path.c_str());
    REQUIRE(back.sequences.size() == ds.sequences.size());
    for (std::size_t i = 0; i < ds.sequences.size(); ++i) {
        auto taus = back.sequences[i].inter_event_times();
        double t = 0.0;
        for (std::size_t k = 0; k < taus.size(); ++k) {
            t += taus[k];
            CHECK(t == doctest::Approx(ds.sequences[i].events[k].time).epsilon(1e-12));
        }
    }
}

TEST_CASE("split sizes and determinism") {
    Dataset ds = random_dataset(10, 2, 1);
    SplitResult r = split(ds, 0.6, 0.2, 0.2, 0);
    CHECK(r.train.sequences.size() == 6);
    CHECK(r.val.sequences.size() == 2);
    CHECK(r.test.sequences.size() == 2);

    SplitResult r2 = split(ds, 0.6, 0.2, 0.2, 0);
    for (std::size_t i = 0; i < r.train.sequences.size(); ++i) {
        CHECK(r.train.sequences[i].events[0].time == r2.train.sequences[i].events[0].time);
    }

    CHECK_THROWS_AS(split(ds, 0.5, 0.2, 0.2, 0), DataError);
}

TEST_CASE("split at Table-I scale partitions every sequence") {
    Dataset ds = random_dataset(9494, 3, 9);
    SplitResult r = split(ds, 0.6, 0.2, 0.2, 3);
    std::size_t total = r.train.sequences.size() + r.val.sequences.size() + r.test.sequences.size();
    CHECK(total == 9494);
    CHECK(std::llabs(static_cast<long long>(r.train.sequences.size()) - 5696) <= 1);
    CHECK(std::llabs(static_cast<long long>(r.val.sequences.size()) - 1899) <= 1);

    // partition: multiset of first timestamps must match
    std::map<double, int> counts;
    for (const auto& s : ds.sequences) counts[s.events[0].time]++;
    for (const auto* part : {&r.train, &r.val, &r.test}) {
        for (const auto& s : part->sequences) counts[s.events[0].time]--;
    }
    for (const auto& [k, v] : counts) CHECK(v == 0);
}

TEST_CASE("batching covers each sequence once with correct masks") {
    Dataset ds = random_dataset(130, 3, 5);
    auto batches = make_batches(ds, 64, false, 0);
    REQUIRE(batches.size() == 3);
    CHECK(batches[0].batch_size == 64);
    CHECK(batches[1].batch_size == 64);
    CHECK(batches[2].batch_size == 2);

    std::size_t masked_events = 0;
    for (const auto& b : batches) {
        for (int s = 0; s < b.batch_size; ++s) {
            for (int k = 0; k < b.max_len; ++k) {
                double m = b.mask[static_cast<std::size_t>(s) * b.max_len + k];
                if (k < b.lengths[static_cast<std::size_t>(s)]) CHECK(m == 1.0);
                else CHECK(m == 0.0);
                if (m == 1.0) ++masked_events;
            }
        }
    }
    CHECK(masked_events == ds.total_events());

    CHECK_THROWS_AS(make_batches(Dataset{{}, 3}, 4, false, 0), DataError);
    CHECK_THROWS_AS(make_batches(ds, 0, false, 0), DataError);
}

TEST_CASE("padding example: lengths 3 and 5") {
    Dataset ds;
    ds.num_types = 1;
    EventSequence a, b;
    for (int i = 1; i <= 3; ++i) a.events.push_back(Event{0, static_cast<double>(i)});
    for (int i = 1; i <= 5; ++i) b.events.push_back(Event{0, static_cast<double>(i)});
    ds.sequences = {a, b};
    auto batches = make_batches(ds, 2, false, 0);
    REQUIRE(batches.size() == 1);
    CHECK(batches[0].max_len == 5);
    std::vector<double> row0(batches[0].mask.begin(), batches[0].mask.begin() + 5);
    std::vector<double> row1(batches[0].mask.begin() + 5, batches[0].mask.end());
    CHECK(row0 == std::vector<double>{1, 1, 1, 0, 0});
    CHECK(row1 == std::vector<double>{1, 1, 1, 1, 1});
}
