#include <doctest.h>

#include <cmath>
#include <numeric>

#include "chftpp/model.hpp"
#include "chftpp/training.hpp"
#include "test_util.hpp"

using namespace chftpp;
using namespace chftpp::testutil;

TEST_CASE("zero logits give the uniform distribution and the smallest index") {
    for (int m_types : {2, 3, 9}) {
        Model m = small_model(m_types, 4, 2);
        zero_all(m);
        Inference inf(m);
        std::vector<double> h(4, 0.0);
        auto p = inf.type_probs(h, 0.7);
        REQUIRE(static_cast<int>(p.size()) == m_types);
        double sum = std::accumulate(p.begin(), p.end(), 0.0);
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-14));
        for (double v : p) CHECK(v == doctest::Approx(1.0 / m_types).epsilon(1e-14));
        CHECK(inf.predict_type(h, 0.7) == 0);
    }
}

TEST_CASE("two-class softmax with logits (1, 0)") {
    Model m = small_model(2, 4, 2);
    zero_all(m);
    m.params.at(m.idx.type_b2).value = {1.0, 0.0};
    Inference inf(m);
    std::vector<double> h(4, 0.0);
    auto p = inf.type_probs(h, 0.0);
    double e = std::exp(1.0);
    CHECK(p[0] == doctest::Approx(e / (e + 1.0)).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(1.0 / (e + 1.0)).epsilon(1e-12));
    CHECK(inf.predict_type(h, 0.0) == 0);
}

TEST_CASE("softmax is invariant to a common logit shift") {
    Model m = small_model(3, 4, 2, Activation::Tanh, 11);
    Inference inf(m);
    auto h = random_state(4, 6);
    auto p = inf.type_probs(h, 0.4);

    for (auto& b : m.params.at(m.idx.type_b2).value) b += 37.0;
    Inference inf2(m);
    auto q = inf2.type_probs(h, 0.4);
    for (std::size_t k = 0; k < p.size(); ++k) {
        CHECK(q[k] == doctest::Approx(p[k]).epsilon(1e-12));
    }
}

TEST_CASE("exact ties resolve to the smallest type index") {
    Model m = small_model(3, 4, 2);
    zero_all(m);
    m.params.at(m.idx.type_b2).value = {0.5, 0.5, 0.1};
    Inference inf(m);
    CHECK(inf.predict_type(std::vector<double>(4, 0.0), 1.0) == 0);
}

TEST_CASE("the type distribution depends on tau") {
    // relu(pre) = (tau, 0); logits = (tau, 1). The argmax flips at tau = 1.
    Model m = small_model(2, 2, 1);
    zero_all(m);
    m.params.at(m.idx.type_w1_tau).value = {1.0, 0.0};
    m.params.at(m.idx.type_w2).value = {1.0, 0.0, 0.0, 0.0};
    m.params.at(m.idx.type_b2).value = {0.0, 1.0};
    Inference inf(m);
    std::vector<double> h(2, 0.0);
    CHECK(inf.predict_type(h, 0.2) == 1);
    CHECK(inf.predict_type(h, 3.0) == 0);
    auto near = inf.type_probs(h, 1.0);
    CHECK(near[0] == doctest::Approx(near[1]).epsilon(1e-14));
}

TEST_CASE("log type probability on the tape matches the plain softmax") {
    Model m = small_model(3, 5, 2, Activation::Tanh, 19);
    Inference inf(m);
    auto h = random_state(5, 9);
    double tau = 0.6;
    auto p = inf.type_probs(h, tau);

    Tape tape(&m.params);
    Forward fwd(tape, m);
    Var hv = tape.constant(h);
    Var tv = tape.input(tau, 0.0);
    for (int k = 0; k < 3; ++k) {
        double lp = tape.scalar(fwd.log_type_prob(hv, tv, k));
        CHECK(lp == doctest::Approx(std::log(p[static_cast<std::size_t>(k)])).epsilon(1e-12));
    }
}

TEST_CASE("time head: zero weights predict zero, bias passes through") {
    Model m = small_model(2, 4, 2);
    zero_all(m);
    Inference inf(m);
    std::vector<double> h(4, 0.0);
    CHECK(inf.predict_time_raw(h) == 0.0);
    CHECK(inf.predict_time(h) == 0.0);

    m.params.at(m.idx.time_b2).value[0] = 1.7;
    CHECK(inf.predict_time_raw(h) == doctest::Approx(1.7));
    m.params.at(m.idx.time_b2).value[0] = -0.4;
    CHECK(inf.predict_time_raw(h) == doctest::Approx(-0.4));
    CHECK(inf.predict_time(h) == 0.0);  // clamped
}

TEST_CASE("time head tape value equals plain inference") {
    for (bool relu_hidden : {false, true}) {
        ModelConfig cfg;
        cfg.num_types = 2;
        cfg.hidden_dim = 5;
        cfg.embed_dim = 2;
        cfg.time_head_hidden_relu = relu_hidden;
        Model m(cfg);
        m.init(23);
        m.params.project();
        Inference inf(m);
        auto h = random_state(5, 14);

        Tape tape(&m.params);
        Forward fwd(tape, m);
        double taped = tape.scalar(fwd.time_pred(tape.constant(h)));
        CHECK(taped == doctest::Approx(inf.predict_time_raw(h)).epsilon(1e-14));
    }
}

TEST_CASE("squared-error gradient of the time bias is 2 alpha (pred - tau) / events") {
    // Unit-exponential CHF: the NLL part does not touch time-head weights.
    Model m = small_model(2, 4, 2);
    make_unit_exponential(m, 1.0);
    Dataset ds;
    ds.num_types = 2;
    EventSequence seq;
    seq.events = {Event{0, 0.5}, Event{1, 1.7}};  // taus 0.5 and 1.2, preds 0
    ds.sequences = {seq};
    auto batches = make_batches(ds, 1, false, 0);

    double alpha = 0.3;
    m.params.zero_grad();
    BatchLoss loss = batch_loss(m, batches[0], alpha, true);
    CHECK(loss.events == 2);
    CHECK(loss.mse == doctest::Approx(0.5 * 0.5 + 1.2 * 1.2).epsilon(1e-12));
    // each event also pays -log p(type) = log 2 under the uniform head
    CHECK(loss.nll == doctest::Approx(0.5 + 1.2 + 2.0 * std::log(2.0)).epsilon(1e-12));
    CHECK(loss.composite ==
          doctest::Approx((loss.nll + alpha * loss.mse) / 2.0).epsilon(1e-12));

    double expected = alpha * (2.0 * (0.0 - 0.5) + 2.0 * (0.0 - 1.2)) / 2.0;
    CHECK(m.params.at(m.idx.time_b2).grad[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("type head gradient matches finite differences") {
    Model m = small_model(3, 4, 2, Activation::Tanh, 8);
    Dataset ds = random_dataset(3, 3, 40, 5);
    auto batches = make_batches(ds, 3, false, 0);

    m.params.zero_grad();
    batch_loss(m, batches[0], 0.01, true);
    for (int index : {m.idx.type_w2, m.idx.type_w1_tau, m.idx.type_b1}) {
        std::vector<double> grad = m.params.at(index).grad;
        auto& t = m.params.at(index);
        const double eps = 1e-6;
        for (std::size_t i = 0; i < t.value.size(); ++i) {
            double saved = t.value[i];
            t.value[i] = saved + eps;
            double up = batch_loss(m, batches[0], 0.01, false).composite;
            t.value[i] = saved - eps;
            double down = batch_loss(m, batches[0], 0.01, false).composite;
            t.value[i] = saved;
            double fd = (up - down) / (2.0 * eps);
            double denom = std::max({std::fabs(fd), std::fabs(grad[i]), 1e-8});
            CHECK(std::fabs(grad[i] - fd) / denom < 1e-4);
        }
    }
}
