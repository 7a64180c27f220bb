#include <doctest.h>

#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "chftpp/model.hpp"
#include "chftpp/training.hpp"
#include "test_util.hpp"

using namespace chftpp;
using namespace chftpp::testutil;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/chftpp_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("checkpoint round trip is bitwise exact") {
    for (CellKind cell : {CellKind::Vanilla, CellKind::Gated}) {
        for (Activation act : {Activation::Tanh, Activation::Prelu, Activation::Softplus}) {
            ModelConfig cfg;
            cfg.num_types = 3;
            cfg.hidden_dim = 5;
            cfg.embed_dim = 2;
            cfg.activation = act;
            cfg.cell = cell;
            cfg.time_head_hidden_relu = (cell == CellKind::Gated);
            Model m(cfg);
            m.init(41);
            m.params.project();

            TempFile f("roundtrip.json");
            save_checkpoint(m, f.path);
            Model r = load_checkpoint(f.path);

            CHECK(r.config.num_types == cfg.num_types);
            CHECK(r.config.hidden_dim == cfg.hidden_dim);
            CHECK(r.config.embed_dim == cfg.embed_dim);
            CHECK(r.config.activation == cfg.activation);
            CHECK(r.config.cell == cfg.cell);
            CHECK(r.config.time_head_hidden_relu == cfg.time_head_hidden_relu);
            REQUIRE(r.params.count() == m.params.count());
            for (std::size_t i = 0; i < m.params.count(); ++i) {
                const auto& a = m.params.at(static_cast<int>(i));
                const auto& b = r.params.at(static_cast<int>(i));
                CHECK(a.name == b.name);
                CHECK(a.value == b.value);  // bitwise
            }
        }
    }
}

TEST_CASE("reloaded model reproduces losses and predictions exactly") {
    Model m = small_model(3, 6, 3, Activation::Tanh, 77);
    Dataset ds = random_dataset(8, 3, 19, 6);

    TempFile f("reload.json");
    save_checkpoint(m, f.path);
    Model r = load_checkpoint(f.path);

    for (const auto& seq : ds.sequences) {
        CHECK(sequence_nll(m, seq) == sequence_nll(r, seq));
    }
    EvalReport a = evaluate(m, ds);
    EvalReport b = evaluate(r, ds);
    CHECK(a.nll_per_event == b.nll_per_event);
    CHECK(a.weighted_f1 == b.weighted_f1);
    CHECK(a.time_mae == b.time_mae);
}

TEST_CASE("corrupt checkpoints are rejected") {
    Model m = small_model(2, 4, 2);
    TempFile f("corrupt.json");
    save_checkpoint(m, f.path);

    nlohmann::json j;
    {
        std::ifstream in(f.path);
        in >> j;
    }

    SUBCASE("tensor size mismatch") {
        j["tensors"][0]["values"].push_back(0.0);
        std::ofstream(f.path) << j.dump();
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                             doctest::Contains("size mismatch"), std::runtime_error);
    }
    SUBCASE("unknown tensor name") {
        j["tensors"][0]["name"] = "nonexistent";
        std::ofstream(f.path) << j.dump();
        CHECK_THROWS(load_checkpoint(f.path));
    }
    SUBCASE("unsupported format version") {
        j["format_version"] = 99;
        std::ofstream(f.path) << j.dump();
        CHECK_THROWS_WITH_AS(load_checkpoint(f.path),
                             doctest::Contains("format version"), std::runtime_error);
    }
    SUBCASE("missing file") {
        CHECK_THROWS(load_checkpoint("/tmp/chftpp_test_does_not_exist.json"));
    }
}
