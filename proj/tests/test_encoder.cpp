#include <doctest.h>

#include <cmath>

#include "chftpp/model.hpp"
#include "chftpp/training.hpp"
#include "test_util.hpp"

using namespace chftpp;
using namespace chftpp::testutil;

TEST_CASE("event embedding is [type row || tau]") {
    Model m = small_model(3, 4, 2);
    zero_all(m);
    Tape tape(&m.params);
    Forward fwd(tape, m);
    Var e = fwd.embed(1, tape.input(0.8, 0.0));
    CHECK(tape.value(e) == std::vector<double>{0.0, 0.0, 0.8});

    auto& emb = m.params.at(m.idx.embedding);
    emb.value[2] = 0.1;   // row 1
    emb.value[3] = -0.3;
    Tape tape2(&m.params);
    Forward fwd2(tape2, m);
    Var e2 = fwd2.embed(1, tape2.input(1.0, 0.0));
    CHECK(tape2.value(e2) == std::vector<double>{0.1, -0.3, 1.0});

    CHECK_THROWS(fwd2.embed(3, tape2.input(0.0, 0.0)));
}

TEST_CASE("vanilla rnn step: zero weights give zero state, scalar toy") {
    Model m = small_model(2, 4, 2);
    zero_all(m);
    Tape tape(&m.params);
    Forward fwd(tape, m);
    Var h = fwd.rnn_step(fwd.initial_state(), fwd.embed(0, tape.input(0.5, 0.0)));
    for (double v : tape.value(h)) CHECK(v == 0.0);

    // d=1, d_m=0, W_h=(1,1): h = tanh(0 + 0.5)
    ModelConfig cfg;
    cfg.num_types = 1;
    cfg.hidden_dim = 1;
    cfg.embed_dim = 0;
    Model toy(cfg);
    zero_all(toy);
    toy.params.at(toy.idx.enc_w).value = {1.0, 1.0};
    Tape tape2(&toy.params);
    Forward fwd2(tape2, toy);
    Var h2 = fwd2.rnn_step(fwd2.initial_state(), fwd2.embed(0, tape2.input(0.5, 0.0)));
    CHECK(tape2.value(h2)[0] == doctest::Approx(std::tanh(0.5)).epsilon(1e-15));
}

TEST_CASE("vanilla states stay strictly inside (-1, 1)") {
    Model m = small_model(3, 6, 2, Activation::Tanh, 9);
    Inference inf(m);
    Dataset ds = random_dataset(10, 3, 21);
    for (const auto& seq : ds.sequences) {
        auto states = inf.encode_states(seq);
        for (std::size_t i = 1; i < states.size(); ++i) {
            for (double v : states[i]) {
                CHECK(v > -1.0);
                CHECK(v < 1.0);
            }
        }
    }
}

TEST_CASE("causality: h_i ignores later events") {
    Model m = small_model(3, 6, 2, Activation::Tanh, 4);
    Inference inf(m);
    EventSequence seq;
    seq.events = {Event{0, 0.5}, Event{2, 1.0}, Event{1, 1.7}, Event{0, 2.4}};
    auto states = inf.encode_states(seq);

    EventSequence altered = seq;
    altered.events[3] = Event{2, 9.0};
    auto states2 = inf.encode_states(altered);
    for (std::size_t i = 0; i <= 3; ++i) {
        CHECK(states[i] == states2[i]);
    }
    CHECK(states[4] != states2[4]);
}

TEST_CASE("tape forward and plain inference agree exactly") {
    for (CellKind cell : {CellKind::Vanilla, CellKind::Gated}) {
        ModelConfig cfg;
        cfg.num_types = 3;
        cfg.hidden_dim = 5;
        cfg.embed_dim = 2;
        cfg.cell = cell;
        Model m(cfg);
        m.init(7);
        m.params.project();
        Inference inf(m);

        EventSequence seq;
        seq.events = {Event{1, 0.3}, Event{0, 0.9}, Event{2, 2.0}};
        auto plain = inf.encode_states(seq);

        Tape tape(&m.params);
        Forward fwd(tape, m);
        Var h = fwd.initial_state();
        auto taus = seq.inter_event_times();
        for (std::size_t i = 0; i < seq.size(); ++i) {
            h = fwd.rnn_step(h, fwd.embed(seq.events[i].type_id, tape.input(taus[i], 0.0)));
            for (std::size_t k = 0; k < plain[i + 1].size(); ++k) {
                CHECK(tape.value(h)[k] == doctest::Approx(plain[i + 1][k]).epsilon(1e-15));
            }
        }
    }
}

TEST_CASE("embedding rows of absent types receive zero gradient") {
    Model m = small_model(3, 4, 2, Activation::Tanh, 13);
    Dataset ds;
    ds.num_types = 3;
    EventSequence seq;
    seq.events = {Event{0, 0.4}, Event{1, 1.1}};  // type 2 never occurs
    ds.sequences = {seq};
    auto batches = make_batches(ds, 1, false, 0);
    m.params.zero_grad();
    batch_loss(m, batches[0], 0.01, true);
    const auto& emb = m.params.at(m.idx.embedding);
    double row2 = 0.0, rows01 = 0.0;
    for (int c = 0; c < emb.cols; ++c) {
        row2 += std::fabs(emb.grad[static_cast<std::size_t>(2 * emb.cols + c)]);
        rows01 += std::fabs(emb.grad[static_cast<std::size_t>(c)]) +
                  std::fabs(emb.grad[static_cast<std::size_t>(emb.cols + c)]);
    }
    CHECK(row2 == 0.0);
    CHECK(rows01 > 0.0);
}

TEST_CASE("encoder weight gradient matches finite differences") {
    Model m = small_model(2, 4, 2, Activation::Tanh, 3);
    Dataset ds;
    ds.num_types = 2;
    EventSequence seq;
    seq.events = {Event{0, 0.4}, Event{1, 1.0}, Event{0, 1.9}};
    ds.sequences = {seq};
    auto batches = make_batches(ds, 1, false, 0);

    m.params.zero_grad();
    batch_loss(m, batches[0], 0.0, true);
    std::vector<double> grad = m.params.at(m.idx.enc_w).grad;

    auto& w = m.params.at(m.idx.enc_w);
    const double eps = 1e-5;
    for (std::size_t i = 0; i < w.value.size(); ++i) {
        double saved = w.value[i];
        w.value[i] = saved + eps;
        double up = batch_loss(m, batches[0], 0.0, false).composite;
        w.value[i] = saved - eps;
        double down = batch_loss(m, batches[0], 0.0, false).composite;
        w.value[i] = saved;
        double fd = (up - down) / (2.0 * eps);
        double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
        CHECK(std::fabs(grad[i] - fd) / denom < 1e-4);
    }
}
