#include "run_config.hpp"

#include "attnlens/error.hpp"
#include "attnlens/experiment/bots.hpp"
#include "attnlens/experiment/http_api.hpp"
#include "attnlens/experiment/service.hpp"
#include "attnlens/experiment/trial_bank.hpp"
#include "attnlens/explain/explainers.hpp"
#include "attnlens/model/checkpoint.hpp"
#include "attnlens/model/corpus.hpp"
#include "attnlens/model/training.hpp"
#include "attnlens/stats/analysis.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace attnlens;

namespace {

struct Flags {
    std::optional<std::uint64_t> seed;
    std::string config;
    bool verbose = false;
    std::optional<std::string> corpus, model, out, addr, experiment, method, text, responses;
    std::vector<std::string> banks;
    std::optional<std::size_t> bots, epochs, n, lime_samples, shap_permutations, iterations;
};

void require_file(const std::string& path, const char* what) {
    if (path.empty()) {
        fail(ErrorKind::input, std::string("missing --") + what);
    }
    if (!fs::is_regular_file(path)) {
        fail(ErrorKind::io, std::string(what) + " file not found: " + path);
    }
}

std::string out_or(const cli::RunConfig& c, const char* fallback) {
    return c.out.empty() ? std::string(fallback) : c.out;
}

void print(const json& j) { std::cout << j.dump() << std::endl; }

int run_gen_corpus(const cli::RunConfig& c) {
    const auto lex = model::task_lexicon(c.experiment);
    const auto ec = experiment::default_experiment(c.experiment);
    const auto corpus = model::cue_corpus(lex, c.corpus_size, c.corpus_min_words.value_or(ec.min_words),
                                          c.corpus_max_words.value_or(ec.max_words), c.seed);
    const auto out = out_or(c, "corpus.jsonl");
    model::write_corpus(out, corpus);
    print({{"corpus", out}, {"texts", corpus.size()}});
    return 0;
}

int run_train(const cli::RunConfig& c) {
    require_file(c.corpus, "corpus");
    const auto corpus = model::read_corpus(c.corpus);
    std::vector<std::string> texts;
    for (const auto& t : corpus) texts.push_back(t.text);
    auto vocab = model::Vocabulary::build(texts, c.vocab_max_words, c.vocab_min_count);
    auto mc = c.model_config;
    mc.vocab_size = vocab.size();
    model::Transformer m(mc, vocab, c.seed);
    const auto seqs = model::to_sequences(corpus, m.vocab(), mc.max_seq_len);
    auto tc = c.train;
    tc.seed = c.seed;
    const auto result = model::train(m, seqs, tc);
    const auto out = out_or(c, "model.json");
    model::save_checkpoint(m, out);
    print({{"model", out},
           {"train_accuracy", model::accuracy(m, seqs)},
           {"loss_history", result.loss_history}});
    return 0;
}

int run_explain(const cli::RunConfig& c) {
    require_file(c.model, "model");
    if (c.text.empty()) {
        fail(ErrorKind::input, "missing --text");
    }
    const auto m = model::load_checkpoint(c.model);
    const auto seq = m.tokenize(c.text);
    const auto method = explain::method_from_string(c.method);
    explain::ImportanceVector v;
    switch (method) {
    case explain::Method::cls_a:
        v = explain::cls_a(m, seq);
        break;
    case explain::Method::lime: {
        explain::LimeConfig lc;
        lc.n_samples = c.lime_samples;
        lc.seed = c.seed;
        v = explain::lime_explain(m, seq, lc);
        break;
    }
    case explain::Method::shap: {
        explain::ShapConfig sc;
        sc.n_permutations = c.shap_permutations;
        sc.seed = c.seed;
        v = explain::shap_permutation(m, seq, sc);
        break;
    }
    case explain::Method::shap_exact:
        v = explain::shap_exact(m, seq);
        break;
    case explain::Method::random:
        v = explain::random_baseline(seq, c.seed);
        break;
    }
    std::cout << explain::explanation_to_json(v, seq.raw_words, m.predict_proba(seq)) << std::endl;
    return 0;
}

int run_build_bank(const cli::RunConfig& c) {
    require_file(c.model, "model");
    require_file(c.corpus, "corpus");
    const auto m = model::load_checkpoint(c.model);
    const auto corpus = model::read_corpus(c.corpus);
    const auto bank = experiment::build_trial_bank(m, corpus, c.experiment_config());
    const auto out = out_or(c, "bank.json");
    experiment::save_bank(bank, out);
    print({{"bank", out}, {"experiment", bank.config.id}, {"texts", bank.texts.size()}});
    return 0;
}

std::pair<std::string, int> split_addr(const std::string& addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        fail(ErrorKind::input, "--addr must look like host:port");
    }
    try {
        const int port = std::stoi(addr.substr(colon + 1));
        if (port < 0 || port > 65535) throw std::out_of_range("port");
        return {addr.substr(0, colon), port};
    } catch (const std::logic_error&) {
        fail(ErrorKind::input, "bad port in --addr " + addr);
    }
}

int run_serve(const cli::RunConfig& c) {
    if (c.banks.empty()) {
        fail(ErrorKind::input, "serve needs at least one --bank");
    }
    for (const auto& b : c.banks) require_file(b, "bank");
    const auto [host, port] = split_addr(c.addr);

    // Block the stop signals before any thread starts so only the waiter sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    experiment::ExperimentService service({out_or(c, "data"), true, 1.0});
    for (const auto& b : c.banks) service.add_bank(experiment::load_bank(b));
    experiment::HttpServer server(service);
    const int bound = server.bind(host, port);
    print({{"listening", host + ":" + std::to_string(bound)}, {"experiments", service.experiment_ids()}});

    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        server.stop();
    });
    server.run();
    // run() can also return on its own; wake the waiter then.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return 0;
}

int run_simulate(const cli::RunConfig& c) {
    if (c.banks.size() != 1) {
        fail(ErrorKind::input, "simulate needs exactly one --bank");
    }
    require_file(c.banks[0], "bank");
    auto bank = experiment::load_bank(c.banks[0]);
    const std::string id = bank.config.id;
    const auto profile = c.bot_profile(id);
    const auto out = out_or(c, "data");
    auto clock = std::make_shared<experiment::ManualClock>(0.0);
    experiment::ExperimentService service({out, true, 1.0}, clock);
    service.add_bank(std::move(bank));
    experiment::simulate_participants(service, *clock, id, c.bots, profile);
    print({{"experiment", id},
           {"bots", c.bots},
           {"records", service.records(id).size()},
           {"responses", (fs::path(out) / ("responses-" + id + ".jsonl")).string()}});
    return 0;
}

int run_analyze(const cli::RunConfig& c) {
    require_file(c.responses, "responses");
    auto records = experiment::read_records(c.responses);
    if (c.experiment_given && c.experiment != "all") {
        std::erase_if(records, [&](const auto& r) { return r.experiment_id != c.experiment; });
    }
    auto ac = c.analysis;
    ac.seed = c.seed;
    const auto report = stats::analysis_report(records, ac);
    const auto out = out_or(c, "report");
    stats::write_report_bundle(report, out);
    json exps = json::array();
    for (const auto& e : report.experiments) exps.push_back(e.experiment_id);
    print({{"report", out}, {"records", records.size()}, {"experiments", exps},
           {"warnings", report.warnings.size()}});
    return 0;
}

int run_report(const cli::RunConfig& c) {
    const auto dir = fs::path(out_or(c, "report"));
    const auto path = (dir / "report.json").string();
    require_file(path, "report");
    std::ifstream in(path);
    const json r = json::parse(in, nullptr, false);
    if (r.is_discarded() || r.value("version", "") != stats::kReportVersion) {
        fail(ErrorKind::io, path + " is not a report bundle");
    }
    for (const auto& e : r.at("experiments")) {
        std::printf("experiment %s: %zu records, %zu participants\n",
                    e.at("experiment_id").get<std::string>().c_str(),
                    e.at("n_valid").get<std::size_t>(), e.at("n_participants").get<std::size_t>());
        std::printf("  %-8s %6s %10s %9s\n", "method", "n", "mean RT", "accuracy");
        for (const auto& row : e.at("summary")) {
            std::printf("  %-8s %6zu %9.2fs %8.1f%%\n", row.at("method").get<std::string>().c_str(),
                        row.at("n").get<std::size_t>(), row.at("mean_rt_s").get<double>(),
                        100.0 * row.at("accuracy").get<double>());
        }
        std::printf("  RT difference vs RANDOM (one-tailed, less):\n");
        for (const auto& t : e.at("rt_tests")) {
            const auto& test = t.at("test");
            if (test.is_null()) continue;
            std::printf("    %-6s %+8.3fs  t=%7.3f  p=%.4g %s\n", t.at("method").get<std::string>().c_str(),
                        test.at("mean_diff").get<double>(), test.at("t").get<double>(),
                        test.at("p").get<double>(), test.at("stars").get<std::string>().c_str());
        }
    }
    return 0;
}

json error_json(std::string_view kind, const std::string& message) {
    return {{"error", {{"kind", kind}, {"message", message}}}};
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"attnlens: attention highlighting workbench"};
    app.require_subcommand(1);
    Flags f;

    auto common = [&](CLI::App* s) {
        s->add_option("--seed", f.seed, "Master seed");
        s->add_option("--config", f.config, "JSON config file; flags override it");
        s->add_flag("--verbose", f.verbose, "Print the resolved config to stderr");
        s->add_option("--experiment", f.experiment, "Experiment id (exp1, exp2, exp3)");
        s->add_option("--out", f.out, "Output path");
    };
    auto* gen = app.add_subcommand("gen-corpus", "Write a synthetic cue-word corpus");
    auto* train = app.add_subcommand("train", "Train the transformer classifier");
    auto* expl = app.add_subcommand("explain", "Explain one text");
    auto* bank = app.add_subcommand("build-bank", "Build a trial bank");
    auto* serve = app.add_subcommand("serve", "Run the experiment HTTP service");
    auto* sim = app.add_subcommand("simulate", "Play simulated participants through a bank");
    auto* analyze = app.add_subcommand("analyze", "Analyze responses into a report bundle");
    auto* report = app.add_subcommand("report", "Print the tables of a report bundle");
    for (auto* s : {gen, train, expl, bank, serve, sim, analyze, report}) common(s);

    gen->add_option("--n", f.n, "Number of texts");
    train->add_option("--corpus", f.corpus, "JSON-lines corpus {text, label}");
    train->add_option("--epochs", f.epochs, "Training epochs");
    expl->add_option("--model", f.model, "Model checkpoint");
    expl->add_option("--method", f.method, "cls-a, lime, shap, shap-exact or random");
    expl->add_option("--text", f.text, "Text to explain");
    expl->add_option("--lime-samples", f.lime_samples);
    expl->add_option("--shap-permutations", f.shap_permutations);
    bank->add_option("--model", f.model, "Model checkpoint");
    bank->add_option("--corpus", f.corpus, "JSON-lines corpus {text, label}");
    bank->add_option("--lime-samples", f.lime_samples);
    bank->add_option("--shap-permutations", f.shap_permutations);
    serve->add_option("--bank", f.banks, "Trial bank (repeatable)");
    serve->add_option("--addr", f.addr, "host:port, port 0 for any");
    sim->add_option("--bank", f.banks, "Trial bank");
    sim->add_option("--bots", f.bots, "Number of simulated participants");
    analyze->add_option("--responses", f.responses, "Response log (JSON lines)");
    analyze->add_option("--iterations", f.iterations, "Balanced subsampling iterations");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << error_json("usage", e.what()).dump() << std::endl;
        return 2;
    }

    cli::RunConfig c;
    try {
        for (auto* s : app.get_subcommands()) c.subcommand = s->get_name();
        if (!f.config.empty()) {
            require_file(f.config, "config");
            std::ifstream in(f.config);
            const json j = json::parse(in, nullptr, false);
            if (j.is_discarded()) fail(ErrorKind::input, "config is not valid JSON: " + f.config);
            c.apply_file(j);
        }
        if (f.seed) c.seed = *f.seed;
        if (f.experiment) {
            c.experiment = *f.experiment;
            c.experiment_given = true;
        }
        if (f.corpus) c.corpus = *f.corpus;
        if (f.model) c.model = *f.model;
        if (f.out) c.out = *f.out;
        if (f.addr) c.addr = *f.addr;
        if (f.method) c.method = *f.method;
        if (f.text) c.text = *f.text;
        if (f.responses) c.responses = *f.responses;
        if (!f.banks.empty()) c.banks = f.banks;
        if (f.bots) c.bots = *f.bots;
        if (f.epochs) c.train.epochs = *f.epochs;
        if (f.n) c.corpus_size = *f.n;
        if (f.lime_samples) c.lime_samples = *f.lime_samples;
        if (f.shap_permutations) c.shap_permutations = *f.shap_permutations;
        if (f.iterations) c.analysis.iterations = *f.iterations;
        c.verbose = f.verbose;
        if (c.verbose) std::cerr << c.to_json().dump() << std::endl;

        const auto& s = c.subcommand;
        if (s == "gen-corpus") return run_gen_corpus(c);
        if (s == "train") return run_train(c);
        if (s == "explain") return run_explain(c);
        if (s == "build-bank") return run_build_bank(c);
        if (s == "serve") return run_serve(c);
        if (s == "simulate") return run_simulate(c);
        if (s == "analyze") return run_analyze(c);
        if (s == "report") return run_report(c);
        fail(ErrorKind::input, "unknown subcommand");
    } catch (const Error& e) {
        std::cerr << error_json(to_string(e.kind()), e.what()).dump() << std::endl;
        return e.kind() == ErrorKind::input ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << error_json("internal", e.what()).dump() << std::endl;
        return 1;
    }
}
