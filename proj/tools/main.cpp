#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "chftpp/data.hpp"
#include "chftpp/hawkes.hpp"
#include "chftpp/model.hpp"
#include "chftpp/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace chftpp;

namespace {

constexpr const char* kVersion = "chftpp 0.1.0";

std::string iso_now() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[64];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
    return buf;
}

std::string fnv1a_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return "missing";
    std::uint64_t h = 1469598103934665603ULL;
    char c;
    while (in.get(c)) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

struct Manifest {
    std::string command;
    json config;
    std::uint64_t seed = 0;
    std::vector<std::string> inputs;
    std::string path;

    void write(const std::string& end_time = "") const {
        json j;
        j["command"] = command;
        j["config"] = config;
        j["seed"] = seed;
        j["code_version"] = kVersion;
        json hashes = json::object();
        for (const auto& p : inputs) hashes[p] = fnv1a_file(p);
        j["dataset_hashes"] = hashes;
        j["start_time"] = start_time;
        if (!end_time.empty()) j["end_time"] = end_time;
        std::ofstream out(path);
        out << j.dump(2) << "\n";
    }

    std::string start_time = iso_now();
};

struct SequenceStats {
    double mean_length = 0.0;
    double interval_mean = 0.0;
    double interval_std = 0.0;
};

SequenceStats corpus_stats(const Dataset& ds) {
    SequenceStats s;
    double n_tau = 0.0, sum = 0.0, sum2 = 0.0;
    for (const auto& seq : ds.sequences) {
        s.mean_length += static_cast<double>(seq.size());
        for (double tau : seq.inter_event_times()) {
            sum += tau;
            sum2 += tau * tau;
            n_tau += 1.0;
        }
    }
    s.mean_length /= static_cast<double>(ds.sequences.size());
    s.interval_mean = sum / n_tau;
    s.interval_std = std::sqrt(std::max(0.0, sum2 / n_tau - s.interval_mean * s.interval_mean));
    return s;
}

double dataset_mean_tau(const Dataset& ds) {
    double sum = 0.0, n = 0.0;
    for (const auto& seq : ds.sequences) {
        for (double tau : seq.inter_event_times()) {
            sum += tau;
            n += 1.0;
        }
    }
    return n > 0.0 ? sum / n : 1.0;
}

HawkesParams params_from_json(const json& j) {
    HawkesParams p;
    p.mu = j.at("mu").get<std::vector<double>>();
    p.excite = j.at("excite").get<std::vector<std::vector<double>>>();
    p.beta = j.at("beta").get<double>();
    return p;
}

json params_to_json(const HawkesParams& p) {
    return json{{"mu", p.mu}, {"excite", p.excite}, {"beta", p.beta}};
}

int resolve_num_types(int flag_value, const std::string& data_path) {
    if (flag_value > 0) return flag_value;
    fs::path sidecar = fs::path(data_path).parent_path() / "metadata.json";
    if (fs::exists(sidecar)) {
        std::ifstream in(sidecar);
        json j;
        in >> j;
        if (j.contains("num_types")) return j.at("num_types").get<int>();
    }
    throw std::runtime_error("num_types not given and no metadata.json sidecar found next to " +
                             data_path);
}

int cmd_simulate(const std::string& preset, const std::string& params_file, int sequences,
                 std::uint64_t seed, double horizon, const std::string& out_dir) {
    HawkesParams params;
    double target_length = 7.4;
    if (!params_file.empty()) {
        std::ifstream in(params_file);
        if (!in) {
            std::cerr << "cannot open params file " << params_file << "\n";
            return 1;
        }
        json j;
        in >> j;
        params = params_from_json(j);
        if (j.contains("target_length")) target_length = j.at("target_length").get<double>();
    } else if (preset == "hawkes1-like") {
        params = hawkes1_like_params();
        target_length = 7.4;
    } else if (preset == "hawkes2-like") {
        params = hawkes2_like_params();
        target_length = 10.4;
    } else {
        std::cerr << "unknown preset " << preset << "\n";
        return 1;
    }
    try {
        params.validate();
    } catch (const std::exception& e) {
        std::cerr << "invalid Hawkes parameters: " << e.what() << "\n";
        return 1;
    }
    if (sequences < 1) {
        std::cerr << "--sequences must be >= 1\n";
        return 1;
    }

    if (horizon <= 0.0) {
        double total_rate = 0.0;
        for (double r : params.stationary_rates()) total_rate += r;
        horizon = target_length / total_rate;
    }

    fs::create_directories(out_dir);
    Manifest manifest;
    manifest.command = "simulate";
    manifest.seed = seed;
    manifest.config = {{"preset", preset},       {"sequences", sequences},
                       {"horizon", horizon},     {"params", params_to_json(params)},
                       {"out_dir", out_dir}};
    manifest.path = (fs::path(out_dir) / "manifest.json").string();
    manifest.write();

    SimConfig cfg;
    cfg.num_sequences = sequences;
    cfg.horizon = horizon;
    cfg.seed = seed;
    Dataset ds = simulate(params, cfg);
    SplitResult parts = split(ds, 0.6, 0.2, 0.2, seed);
    save_dataset(parts.train, (fs::path(out_dir) / "train.jsonl").string());
    save_dataset(parts.val, (fs::path(out_dir) / "val.jsonl").string());
    save_dataset(parts.test, (fs::path(out_dir) / "test.jsonl").string());

    SequenceStats stats = corpus_stats(ds);
    json meta = {{"num_types", ds.num_types},
                 {"seed", seed},
                 {"horizon", horizon},
                 {"hawkes_params", params_to_json(params)},
                 {"sequences", {{"train", parts.train.sequences.size()},
                                {"val", parts.val.sequences.size()},
                                {"test", parts.test.sequences.size()}}},
                 {"mean_length", stats.mean_length},
                 {"interval_mean", stats.interval_mean},
                 {"interval_std", stats.interval_std}};
    std::ofstream meta_out(fs::path(out_dir) / "metadata.json");
    meta_out << meta.dump(2) << "\n";

    std::printf("types=%d sequences=%zu mean_length=%.2f interval=%.3f(%.3f)\n", ds.num_types,
                ds.sequences.size(), stats.mean_length, stats.interval_mean, stats.interval_std);
    manifest.write(iso_now());
    return 0;
}

int cmd_train(const std::string& train_path, const std::string& val_path, int num_types_flag,
              const std::string& out_dir, TrainConfig cfg, ModelConfig mcfg,
              const std::string& activation, const std::string& cell) {
    int num_types = resolve_num_types(num_types_flag, train_path);
    mcfg.num_types = num_types;
    mcfg.activation = activation_from_string(activation);
    mcfg.cell = cell_from_string(cell);

    Dataset train_ds = load_dataset(train_path, num_types);
    Dataset val_ds = load_dataset(val_path, num_types);

    fs::create_directories(out_dir);
    Manifest manifest;
    manifest.command = "train";
    manifest.seed = cfg.seed;
    manifest.inputs = {train_path, val_path};
    manifest.config = {{"lr", cfg.learning_rate},   {"alpha", cfg.alpha},
                       {"batch_size", cfg.batch_size}, {"patience", cfg.patience},
                       {"max_epochs", cfg.max_epochs}, {"num_types", num_types},
                       {"hidden_dim", mcfg.hidden_dim}, {"embed_dim", mcfg.embed_dim},
                       {"activation", activation},   {"cell", cell},
                       {"time_head_hidden_relu", mcfg.time_head_hidden_relu}};
    manifest.path = (fs::path(out_dir) / "manifest.json").string();
    manifest.write();

    Model model(mcfg);
    model.init(cfg.seed);
    try {
        TrainResult result = train(model, train_ds, val_ds, cfg);
        save_checkpoint(model, (fs::path(out_dir) / "checkpoint.json").string());
        write_training_log(result.history, (fs::path(out_dir) / "training_log.csv").string());
        if (result.best_epoch >= 0) {
            std::printf("best_epoch=%d best_val_nll_per_event=%.6f\n", result.best_epoch,
                        result.best_val_nll);
        } else {
            std::printf("no training epochs run; wrote untrained checkpoint\n");
        }
    } catch (const TrainingDiverged& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 2;
    }
    manifest.write(iso_now());
    return 0;
}

int cmd_evaluate(const std::string& checkpoint_path, const std::string& data_path,
                 int num_types_flag, const std::string& out_path) {
    Model model = load_checkpoint(checkpoint_path);
    int num_types = num_types_flag > 0 ? num_types_flag : model.config.num_types;
    if (num_types != model.config.num_types) {
        std::cerr << "num_types mismatch: checkpoint has " << model.config.num_types
                  << ", data declared " << num_types << "\n";
        return 1;
    }
    Dataset ds = load_dataset(data_path, num_types);

    fs::path manifest_path =
        out_path.empty() ? fs::path(data_path).parent_path() / "evaluate_manifest.json"
                         : fs::path(out_path).parent_path() / "evaluate_manifest.json";
    Manifest manifest;
    manifest.command = "evaluate";
    manifest.inputs = {checkpoint_path, data_path};
    manifest.config = {{"checkpoint", checkpoint_path}, {"data", data_path}};
    manifest.path = manifest_path.string();
    manifest.write();

    EvalReport report = evaluate(model, ds);
    json j = {{"nll_per_sequence", report.nll_per_sequence},
              {"nll_per_event", report.nll_per_event},
              {"weighted_f1", report.weighted_f1},
              {"time_mae", report.time_mae},
              {"event_count", report.event_count},
              {"sequence_count", report.sequence_count},
              {"manifest", manifest.path}};
    std::string text = j.dump(2);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << text << "\n";
    }
    std::cout << text << "\n";
    manifest.write(iso_now());
    return 0;
}

int cmd_predict(const std::string& checkpoint_path, const std::string& input_path,
                int num_types_flag, bool expectation, int topk) {
    Model model = load_checkpoint(checkpoint_path);
    int num_types = num_types_flag > 0 ? num_types_flag : model.config.num_types;
    if (num_types != model.config.num_types) {
        std::cerr << "num_types mismatch with checkpoint\n";
        return 1;
    }
    Dataset ds = load_dataset(input_path, num_types);
    Inference inf(model);
    Inference::ExpectedTimeOptions opt;
    opt.mean_tau = dataset_mean_tau(ds);

    for (std::size_t s = 0; s < ds.sequences.size(); ++s) {
        const auto& seq = ds.sequences[s];
        std::vector<std::vector<double>> states = inf.encode_states(seq);
        for (std::size_t i = 1; i < states.size(); ++i) {
            const auto& h = states[i];
            json rec;
            rec["sequence"] = s;
            rec["after_event"] = i;
            double tau_hat = inf.predict_time(h);
            rec["tau_hat"] = tau_hat;
            if (expectation) {
                try {
                    rec["tau_exp"] = inf.expected_time(h, opt);
                } catch (const HorizonExceeded& e) {
                    rec["tau_exp_error"] = "horizon-exceeded";
                    rec["tau_exp_partial"] = e.partial;
                }
            }
            std::vector<double> probs = inf.type_probs(h, tau_hat);
            rec["type_hat"] = inf.predict_type(h, tau_hat);
            std::vector<int> order(probs.size());
            for (std::size_t k = 0; k < order.size(); ++k) order[k] = static_cast<int>(k);
            std::stable_sort(order.begin(), order.end(),
                             [&](int a, int b) { return probs[a] > probs[b]; });
            json dist = json::array();
            for (int k = 0; k < std::min<int>(topk, static_cast<int>(probs.size())); ++k) {
                dist.push_back({{"type", order[k]}, {"p", probs[order[k]]}});
            }
            rec["type_distribution"] = dist;
            std::cout << rec.dump() << "\n";
        }
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cumulative-hazard temporal point process toolkit"};
    app.require_subcommand(1);

    std::string default_out = ".";
    if (const char* env = std::getenv("CHFTPP_OUT_DIR")) default_out = env;

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic Hawkes corpus");
    std::string preset = "hawkes1-like", params_file, sim_out = default_out;
    int sequences = 1000;
    std::uint64_t sim_seed = 0;
    double horizon = 0.0;
    sim->add_option("--preset", preset, "hawkes1-like or hawkes2-like");
    sim->add_option("--params", params_file, "JSON file with mu/excite/beta");
    sim->add_option("--sequences", sequences, "number of sequences");
    sim->add_option("--seed", sim_seed, "simulation seed");
    sim->add_option("--horizon", horizon, "time horizon (0 = auto from target length)");
    sim->add_option("--out", sim_out, "output directory");

    // train
    auto* tr = app.add_subcommand("train", "Train a model");
    std::string train_path, val_path, train_out = default_out;
    std::string activation = "tanh", cell = "vanilla";
    int num_types = 0;
    TrainConfig tcfg;
    ModelConfig mcfg;
    tr->add_option("--train", train_path, "training data (jsonl)")->required();
    tr->add_option("--val", val_path, "validation data (jsonl)")->required();
    tr->add_option("--num-types", num_types, "number of event types (else metadata.json)");
    tr->add_option("--out", train_out, "output directory");
    tr->add_option("--lr", tcfg.learning_rate, "learning rate");
    tr->add_option("--alpha", tcfg.alpha, "time-loss weight");
    tr->add_option("--batch-size", tcfg.batch_size, "sequences per batch");
    tr->add_option("--patience", tcfg.patience, "early-stopping patience in epochs");
    tr->add_option("--max-epochs", tcfg.max_epochs, "maximum epochs");
    tr->add_option("--seed", tcfg.seed, "training seed");
    tr->add_option("--d", mcfg.hidden_dim, "history vector dimension");
    tr->add_option("--dm", mcfg.embed_dim, "type embedding dimension");
    tr->add_option("--activation", activation, "CHF activation: tanh|relu|prelu|softplus|sigmoid");
    tr->add_option("--cell", cell, "encoder cell: vanilla|gated");
    tr->add_flag("--time-head-relu", mcfg.time_head_hidden_relu,
                 "insert relu in the time predictor's hidden layer");

    // evaluate
    auto* ev = app.add_subcommand("evaluate", "Evaluate a checkpoint on a dataset");
    std::string ckpt_path, eval_data, eval_out;
    int eval_types = 0;
    ev->add_option("--checkpoint", ckpt_path, "checkpoint file")->required();
    ev->add_option("--data", eval_data, "dataset (jsonl)")->required();
    ev->add_option("--num-types", eval_types, "number of event types");
    ev->add_option("--out", eval_out, "write the JSON report here too");

    // predict
    auto* pr = app.add_subcommand("predict", "Per-prefix next-event predictions");
    std::string pred_ckpt, pred_input;
    int pred_types = 0, topk = 3;
    bool expectation = false;
    pr->add_option("--checkpoint", pred_ckpt, "checkpoint file")->required();
    pr->add_option("--input", pred_input, "input sequences (jsonl)")->required();
    pr->add_option("--num-types", pred_types, "number of event types");
    pr->add_flag("--expectation", expectation, "also compute the quadrature expectation");
    pr->add_option("--topk", topk, "how many types to list in the distribution");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (sim->parsed()) {
            return cmd_simulate(preset, params_file, sequences, sim_seed, horizon, sim_out);
        }
        if (tr->parsed()) {
            return cmd_train(train_path, val_path, num_types, train_out, tcfg, mcfg, activation,
                             cell);
        }
        if (ev->parsed()) return cmd_evaluate(ckpt_path, eval_data, eval_types, eval_out);
        if (pr->parsed()) return cmd_predict(pred_ckpt, pred_input, pred_types, expectation, topk);
    } catch (const TrainingDiverged& e) {
        std::cerr << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
