// qfp: generate RB fidelity datasets, train the LSTM predictor, and rank
// circuit layouts against the gate-error-product baseline.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qfp/baseline.hpp"
#include "qfp/dataset.hpp"
#include "qfp/layout.hpp"
#include "qfp/metrics.hpp"
#include "qfp/nn.hpp"
#include "qfp/rb.hpp"
#include "qfp/simulator.hpp"
#include "qfp/tokenizer.hpp"
#include "qfp/transpile.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

nlohmann::json load_json_file(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw qfp::InvalidArgument("cannot open '" + path + "'");
    try {
        return nlohmann::json::parse(f);
    } catch (const nlohmann::json::exception& e) {
        throw qfp::ParseError("bad JSON in '" + path + "': " + e.what());
    }
}

// Circuits may arrive in the abstract gate set; prediction, pricing and
// ranking all operate on the device basis, so lower on load.
qfp::Circuit load_circuit(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw qfp::InvalidArgument("cannot open circuit '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return qfp::cancel_adjacent_inverses(
        qfp::decompose_to_basis(qfp::parse_circuit(ss.str()), qfp::BasisSet::ibm_default()));
}

qfp::CouplingMap load_coupling_map(const std::string& name_or_path) {
    if (name_or_path == "nairobi") return qfp::CouplingMap::nairobi();
    if (name_or_path == "montreal") return qfp::CouplingMap::montreal();
    return qfp::CouplingMap::from_json(load_json_file(name_or_path));
}

// Atomic-ish write: stage to a temp file, rename into place on success.
void write_file(const std::string& path, const std::string& content) {
    std::string tmp = path + ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary);
        if (!f) throw qfp::InvalidArgument("cannot open '" + tmp + "' for writing");
        f << content;
        if (!f.good()) throw qfp::InvalidArgument("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

qfp::TokenizedCircuit tokenize_for(const qfp::Model<float>& m, const qfp::Vocab& vocab,
                                   const qfp::Circuit& c) {
    return qfp::encode(qfp::labelize(c, m.cfg.lanes), vocab, m.cfg.T);
}

std::vector<qfp::LabeledSample<float>> to_samples(const std::vector<qfp::DatasetRecord>& recs,
                                                  const qfp::Vocab& vocab, int lanes, int T) {
    std::vector<qfp::LabeledSample<float>> out;
    out.reserve(recs.size());
    for (const auto& r : recs) {
        auto c = qfp::parse_circuit(r.circuit);
        out.push_back({qfp::encode(qfp::labelize(c, lanes), vocab, T),
                       static_cast<float>(r.label)});
    }
    return out;
}

int cmd_gen_dataset(const std::string& config_path, const std::string& out_dir) {
    auto cfg = qfp::DatasetConfig::from_json(load_json_file(config_path));
    qfp::DatasetStats stats;
    auto ds = qfp::build_dataset(cfg, &stats);

    std::filesystem::create_directories(out_dir);
    {
        std::ostringstream ss;
        qfp::save_jsonl(ds, ss);
        write_file(out_dir + "/dataset.jsonl", ss.str());
    }
    write_file(out_dir + "/stats.json", stats.to_json().dump(2) + "\n");

    qfp::VocabBuilder vb;
    for (const auto& r : ds.records)
        vb.add(qfp::labelize(qfp::parse_circuit(r.circuit), cfg.coupling.n_qubits));
    write_file(out_dir + "/vocab.json", vb.build().to_json().dump(2) + "\n");

    std::cout << "records: " << ds.records.size() << " (generated " << stats.generated
              << ", retained " << stats.retained << ")\n";
    return 0;
}

int cmd_train(const std::string& dataset_path, const std::string& vocab_path,
              const std::string& out_path, const nlohmann::json& overrides) {
    auto ds = qfp::load_jsonl_file(dataset_path);
    auto vocab = qfp::Vocab::from_json(load_json_file(vocab_path));

    qfp::ModelConfig mc;
    mc.vocab_size = vocab.size();
    int width = 0;
    for (const auto& r : ds.records) width = std::max(width, qfp::parse_circuit(r.circuit).n_qubits);
    mc.lanes = width;
    mc.embed_dim = overrides.value("embed_dim", 64);
    mc.lstm_units = overrides.value("lstm_units", 256);
    if (overrides.contains("dense_sizes"))
        mc.dense_sizes = overrides.at("dense_sizes").get<std::vector<int>>();
    mc.T = overrides.value("T", 500);
    mc.shared_embedding = overrides.value("shared_embedding", true);

    qfp::TrainConfig tc;
    tc.batch_size = overrides.value("batch_size", 32);
    tc.lr = overrides.value("lr", 1e-3);
    tc.epochs = overrides.value("epochs", 20);
    tc.patience = overrides.value("patience", 5);
    tc.seed = overrides.value("seed", std::uint64_t{0});
    std::array<double, 3> ratios{0.7, 0.2, 0.1};
    if (overrides.contains("split_ratios")) {
        auto v = overrides.at("split_ratios").get<std::vector<double>>();
        ratios = {v.at(0), v.at(1), v.at(2)};
    }

    auto parts = qfp::split(ds.records, ratios, qfp::child_seed(tc.seed, 0xDA7A));
    auto train_set = to_samples(parts.train, vocab, mc.lanes, mc.T);
    auto val_set = to_samples(parts.val, vocab, mc.lanes, mc.T);
    auto test_set = to_samples(parts.test, vocab, mc.lanes, mc.T);

    auto model = qfp::init_model<float>(mc, qfp::child_seed(tc.seed, 0x11117));
    model.vocab_hash = vocab.hash();
    auto hist = qfp::train(model, train_set, val_set, tc);

    {
        std::ostringstream ss;
        qfp::save_checkpoint(model, ss);
        write_file(out_path, ss.str());
    }
    nlohmann::ordered_json report = hist.to_json();
    report["test_mse"] = qfp::evaluate_mse(model, test_set);
    write_file(out_path + ".history.json", report.dump(2) + "\n");
    std::cout << "best epoch " << hist.best_epoch << ", val loss "
              << hist.val_loss[hist.best_epoch] << ", test mse " << report["test_mse"] << "\n";
    return 0;
}

int cmd_predict(const std::string& model_path, const std::string& vocab_path,
                const std::vector<std::string>& circuits) {
    auto model = qfp::load_checkpoint_file<float>(model_path);
    auto vocab = qfp::Vocab::from_json(load_json_file(vocab_path));
    if (model.vocab_hash != 0 && model.vocab_hash != vocab.hash())
        throw qfp::InvalidArgument("vocabulary does not match the model checkpoint");
    for (const auto& path : circuits) {
        auto c = load_circuit(path);
        float f = qfp::forward(model, tokenize_for(model, vocab, c));
        std::cout << path << "," << f << "\n";
    }
    return 0;
}

int cmd_baseline(const std::string& circuit_path, const std::string& error_map_path) {
    auto c = load_circuit(circuit_path);
    auto em = qfp::ErrorMap::from_json(load_json_file(error_map_path));
    std::cout << qfp::estimate_fidelity(c, em) << "\n";
    return 0;
}

int cmd_layouts(const std::string& circuit_path, const std::string& map_arg,
                const std::string& scorer_name, const std::string& error_map_path,
                const std::string& model_path, const std::string& vocab_path) {
    auto c = load_circuit(circuit_path);
    auto cm = load_coupling_map(map_arg);

    std::function<double(const qfp::Circuit&)> scorer;
    qfp::Model<float> model;
    qfp::Vocab vocab;
    qfp::ErrorMap em;
    if (scorer_name == "baseline") {
        if (error_map_path.empty()) throw qfp::InvalidArgument("--error-map required");
        em = qfp::ErrorMap::from_json(load_json_file(error_map_path));
        scorer = [&em](const qfp::Circuit& rc) { return qfp::estimate_fidelity(rc, em); };
    } else if (scorer_name == "model") {
        if (model_path.empty() || vocab_path.empty())
            throw qfp::InvalidArgument("--model and --vocab required");
        model = qfp::load_checkpoint_file<float>(model_path);
        vocab = qfp::Vocab::from_json(load_json_file(vocab_path));
        scorer = [&model, &vocab](const qfp::Circuit& rc) {
            return static_cast<double>(qfp::forward(model, tokenize_for(model, vocab, rc)));
        };
    } else {
        throw qfp::InvalidArgument("scorer must be 'baseline' or 'model'");
    }

    auto ranked = qfp::rank_layouts(c, cm, scorer);
    auto graph = qfp::interaction_graph(c);
    std::cout << "rank,score,layout\n";
    int rank = 1;
    for (const auto& [layout, score] : ranked) {
        std::cout << rank++ << "," << score << ",";
        bool sep = false;
        for (int v : graph.vertices) {
            if (sep) std::cout << " ";
            std::cout << v << "->" << layout.map.at(v);
            sep = true;
        }
        std::cout << "\n";
    }
    return 0;
}

int cmd_eval(const std::string& model_path, const std::string& vocab_path,
             const std::string& noise_path, const std::string& error_map_path,
             const std::vector<std::string>& circuits, int trials, std::uint64_t shots,
             std::uint64_t seed) {
    auto model = qfp::load_checkpoint_file<float>(model_path);
    auto vocab = qfp::Vocab::from_json(load_json_file(vocab_path));
    auto nm = qfp::NoiseModel::from_json(load_json_file(noise_path));
    auto em = qfp::ErrorMap::from_json(load_json_file(error_map_path));

    std::cout << "name,depth,cnots,mean_fidelity,baseline_pred,baseline_rmse,model_pred,"
                 "model_rmse\n";
    for (std::size_t ci = 0; ci < circuits.size(); ci++) {
        auto c = load_circuit(circuits[ci]);
        auto ideal = qfp::expected_ideal_counts(qfp::run_ideal(c), shots);
        std::vector<double> measured(trials);
        for (int t = 0; t < trials; t++) {
            auto noisy = qfp::run_noisy(c, nm, shots, qfp::child_seed(seed + ci, t));
            measured[t] = qfp::d_r2(qfp::align(ideal, noisy));
        }
        double mean = 0;
        for (double v : measured) mean += v;
        mean /= trials;
        double bl = qfp::estimate_fidelity(c, em);
        double pred = qfp::forward(model, tokenize_for(model, vocab, c));
        auto rmse = [&](double p) {
            double s = 0;
            for (double v : measured) s += (p - v) * (p - v);
            return std::sqrt(s / trials);
        };
        std::string name = std::filesystem::path(circuits[ci]).stem().string();
        std::cout << name << "," << qfp::depth(c) << "," << qfp::cnot_count(c) << "," << mean
                  << "," << bl << "," << rmse(bl) << "," << pred << "," << rmse(pred) << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"quantum circuit fidelity prediction toolkit"};
    app.require_subcommand(1);
    app.fallthrough(); // accept global options like --config after the subcommand

    std::string config_path;
    if (const char* env = std::getenv("QFP_CONFIG")) config_path = env;
    app.add_option("--config", config_path, "JSON config file (default from $QFP_CONFIG)");

    auto* gen = app.add_subcommand("gen-dataset", "generate a labeled RB circuit dataset");
    std::string gen_out = "dataset";
    gen->add_option("-o,--out", gen_out, "output directory");

    auto* train = app.add_subcommand("train", "train the fidelity predictor");
    std::string train_dataset, train_vocab, train_out = "model.ckpt";
    train->add_option("--dataset", train_dataset, "dataset.jsonl")->required();
    train->add_option("--vocab", train_vocab, "vocab.json")->required();
    train->add_option("-o,--out", train_out, "checkpoint path");

    auto* predict = app.add_subcommand("predict", "predict fidelity of circuits");
    std::string pr_model, pr_vocab;
    std::vector<std::string> pr_circuits;
    predict->add_option("--model", pr_model)->required();
    predict->add_option("--vocab", pr_vocab)->required();
    predict->add_option("circuits", pr_circuits)->required();

    auto* layouts = app.add_subcommand("layouts", "rank circuit-to-device layouts");
    std::string ly_circuit, ly_map, ly_scorer = "baseline", ly_em, ly_model, ly_vocab;
    layouts->add_option("--circuit", ly_circuit)->required();
    layouts->add_option("--map", ly_map, "coupling map name or JSON file")->required();
    layouts->add_option("--scorer", ly_scorer, "baseline | model");
    layouts->add_option("--error-map", ly_em);
    layouts->add_option("--model", ly_model);
    layouts->add_option("--vocab", ly_vocab);

    auto* baseline = app.add_subcommand("baseline", "gate-error-product fidelity estimate");
    std::string bl_circuit, bl_em;
    baseline->add_option("--circuit", bl_circuit)->required();
    baseline->add_option("--error-map", bl_em)->required();

    auto* eval = app.add_subcommand("eval", "measured-vs-predicted fidelity report");
    std::string ev_model, ev_vocab, ev_noise, ev_em;
    std::vector<std::string> ev_circuits;
    int ev_trials = 50;
    std::uint64_t ev_shots = 1024, ev_seed = 0;
    eval->add_option("--model", ev_model)->required();
    eval->add_option("--vocab", ev_vocab)->required();
    eval->add_option("--noise", ev_noise)->required();
    eval->add_option("--error-map", ev_em)->required();
    eval->add_option("--trials", ev_trials);
    eval->add_option("--shots", ev_shots);
    eval->add_option("--seed", ev_seed);
    eval->add_option("circuits", ev_circuits)->required();

    CLI11_PARSE(app, argc, argv);

    try {
        nlohmann::json overrides = nlohmann::json::object();
        if (!config_path.empty()) overrides = load_json_file(config_path);

        if (gen->parsed()) {
            if (config_path.empty())
                throw qfp::InvalidArgument("gen-dataset requires --config (or $QFP_CONFIG)");
            return cmd_gen_dataset(config_path, gen_out);
        }
        if (train->parsed()) return cmd_train(train_dataset, train_vocab, train_out, overrides);
        if (predict->parsed()) return cmd_predict(pr_model, pr_vocab, pr_circuits);
        if (layouts->parsed())
            return cmd_layouts(ly_circuit, ly_map, ly_scorer, ly_em, ly_model, ly_vocab);
        if (baseline->parsed()) return cmd_baseline(bl_circuit, bl_em);
        if (eval->parsed())
            return cmd_eval(ev_model, ev_vocab, ev_noise, ev_em, ev_circuits, ev_trials, ev_shots,
                            ev_seed);
    } catch (const qfp::ParseError& e) {
        std::cerr << "input error: " << e.what() << "\n";
        return kExitInput;
    } catch (const qfp::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const qfp::InvalidArgument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
    return 0;
}
