#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmclass/dataset_io.hpp"
#include "pmclass/gbdt.hpp"
#include "pmclass/hmc.hpp"
#include "pmclass/lstm.hpp"
#include "pmclass/metrics.hpp"
#include "pmclass/model_io.hpp"
#include "pmclass/simulator.hpp"
#include "pmclass/stream.hpp"

namespace {

using namespace pmclass;

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing '" + path + "'");
}

SessionPlan parse_plan_flag(const std::string& text) {
    SessionPlan plan;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t end = text.find(',', pos);
        const std::string entry =
            text.substr(pos, end == std::string::npos ? std::string::npos : end - pos);
        pos = end == std::string::npos ? text.size() + 1 : end + 1;
        if (entry.empty()) continue;
        const std::size_t colon = entry.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("plan entry '" + entry + "' is not label:seconds");
        }
        const auto label = try_parse_label(entry.substr(0, colon));
        if (!label) {
            throw ConfigError("plan entry '" + entry + "' names an unknown label");
        }
        const auto seconds = parse_int(entry.substr(colon + 1), "plan entry '" + entry + "'");
        if (seconds <= 0 || seconds > 1000000) {
            throw ConfigError("plan entry '" + entry + "' needs a duration in [1, 1e6] s");
        }
        plan.entries.push_back({*label, static_cast<int>(seconds)});
    }
    if (plan.entries.empty()) throw ConfigError("plan is empty");
    return plan;
}

std::string loss_log_csv(const std::vector<double>& history) {
    std::string out = "iteration,loss\n";
    for (std::size_t i = 0; i < history.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += format_double(history[i]);
        out += '\n';
    }
    return out;
}

struct TrainFlags {
    std::string model_kind;
    std::string data_path;
    std::string out_path;
    double train_fraction = 0.7;
    std::uint64_t seed = 42;
    int iterations = -1;    // -1: per-model default
    double lr = -1.0;       // -1: per-model default
    double epsilon = 1e-6;  // hmc transition floor
    int rounds = 100;
    double eta = 0.3;
    double lambda = 1.0;
    double gamma = 0.0;
    int max_depth = 6;
};

int run_train(const TrainFlags& flags) {
    const Dataset full = load_sessions(flags.data_path);
    const auto [train, test] = chronological_split(full, flags.train_fraction);
    (void)test;

    std::vector<double> history;
    const ModelKind kind = parse_model_kind(flags.model_kind);
    switch (kind) {
        case ModelKind::Hmc: {
            HmcOptions options;
            options.epsilon = flags.epsilon;
            options.emission.iterations = flags.iterations < 0 ? 5000 : flags.iterations;
            options.emission.learning_rate = flags.lr < 0 ? 0.01 : flags.lr;
            auto result = train_hmc(train, options);
            save_model(result.model, flags.out_path);
            history = std::move(result.emission_loss_history);
            break;
        }
        case ModelKind::Lstm: {
            LstmOptions options;
            options.iterations = flags.iterations < 0 ? 1000 : flags.iterations;
            options.learning_rate = flags.lr < 0 ? 0.001 : flags.lr;
            options.seed = flags.seed;
            auto result = train_lstm(train, options);
            save_model(result.model, flags.out_path);
            history = std::move(result.loss_history);
            break;
        }
        case ModelKind::Gbdt: {
            GbdtOptions options;
            options.rounds = flags.rounds;
            options.eta = flags.eta;
            options.tree.lambda = flags.lambda;
            options.tree.gamma = flags.gamma;
            options.tree.max_depth = flags.max_depth;
            auto result = train_gbdt(train, options);
            save_model(result.model, flags.out_path);
            history = std::move(result.loss_history);
            break;
        }
    }
    write_text_file(flags.out_path + ".loss.csv", loss_log_csv(history));
    std::cout << "trained " << flags.model_kind << " on " << train.total_points()
              << " points across " << train.sequences.size() << " sessions\n"
              << "model: " << flags.out_path << "\n"
              << "loss log: " << flags.out_path << ".loss.csv\n";
    return 0;
}

int run_eval(const std::string& model_path, const std::string& data_path,
             double train_fraction, const std::string& scope,
             const std::string& out_path) {
    const auto classifier = load_classifier(model_path);
    const Dataset full = load_sessions(data_path);

    Dataset scoped;
    if (scope == "all") {
        scoped = full;
    } else {
        auto [train, test] = chronological_split(full, train_fraction);
        scoped = scope == "train" ? std::move(train) : std::move(test);
    }
    if (scoped.empty()) throw DataError("evaluation scope '" + scope + "' is empty");

    std::vector<PollutantLabel> truth;
    std::vector<PollutantLabel> predicted;
    truth.reserve(scoped.total_points());
    predicted.reserve(scoped.total_points());
    for (const auto& sequence : scoped.sequences) {
        classifier->reset();
        for (std::size_t i = 0; i < sequence.size(); ++i) {
            predicted.push_back(classifier->predict(sequence.frames[i]).label);
            truth.push_back(sequence.labels[i]);
        }
    }

    const EvalReport report = evaluate(truth, predicted);
    std::cout << to_text(report);
    if (!out_path.empty()) {
        write_text_file(out_path, to_json(report));
        write_text_file(out_path + ".confusion.csv", confusion_csv(report.confusion));
        std::cout << "\nreport: " << out_path << "\n"
                  << "confusion: " << out_path << ".confusion.csv\n";
    }
    return 0;
}

int run_stream(const std::string& model_path, const std::string& reset_token) {
    const auto classifier = load_classifier(model_path);
    std::string line;
    while (std::getline(std::cin, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line == reset_token) {
            classifier->reset();
            continue;
        }
        try {
            const SensorFrame frame = parse_stream_row(line);
            const StreamPrediction prediction = classifier->predict(frame);
            std::cout << frame.timestamp << ',' << label_name(prediction.label);
            for (int k = 0; k < kNumClasses; ++k) {
                std::cout << ',' << format_double(prediction.proba[k]);
            }
            std::cout << '\n' << std::flush;
        } catch (const Error& e) {
            std::cerr << "stream: " << e.what() << '\n' << std::flush;
        }
    }
    return 0;
}

int run_simulate(const std::string& out_path, std::uint64_t seed,
                 const std::string& plan_text, const std::string& profiles_path) {
    const ProfileMap profiles =
        profiles_path.empty() ? default_profiles() : load_profiles(profiles_path);
    const SessionPlan plan =
        plan_text.empty() ? default_session_plan() : parse_plan_flag(plan_text);
    const Dataset corpus = generate_corpus(plan, profiles, seed);
    save_sessions(corpus, out_path);
    std::cout << "wrote " << corpus.sequences.size() << " sessions / "
              << corpus.total_points() << " points to " << out_path << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pmclass: streaming pollutant classification from optical particle counts"};
    app.require_subcommand(1);

    auto* simulate = app.add_subcommand(
        "simulate", "Generate a labeled synthetic session corpus CSV");
    std::string sim_out;
    std::uint64_t sim_seed = 42;
    std::string sim_plan;
    std::string sim_profiles;
    simulate->add_option("--out", sim_out, "Output CSV path")->required();
    simulate->add_option("--seed", sim_seed, "Deterministic corpus seed");
    simulate->add_option("--plan", sim_plan,
                         "Session plan, label:seconds pairs, comma separated "
                         "(default: the recorded 1500 s plan)");
    simulate->add_option("--profiles", sim_profiles,
                         "Scenario profile config (default: built-in profiles)");

    auto* train = app.add_subcommand("train", "Train a classifier on a session CSV");
    TrainFlags tf;
    train->add_option("--model", tf.model_kind, "Model kind: hmc, lstm, or gbdt")
        ->required()
        ->check(CLI::IsMember({"hmc", "lstm", "gbdt"}));
    train->add_option("--data", tf.data_path, "Session CSV path")->required();
    train->add_option("--out", tf.out_path, "Model file output path")->required();
    train->add_option("--train-fraction", tf.train_fraction,
                      "Leading fraction of points used for training")->capture_default_str();
    train->add_option("--seed", tf.seed, "Initialization seed (lstm)")->capture_default_str();
    train->add_option("--iterations", tf.iterations,
                      "Optimizer iterations (default: 5000 hmc, 1000 lstm)");
    train->add_option("--lr", tf.lr, "Learning rate (default: 0.01 hmc, 0.001 lstm)");
    train->add_option("--epsilon", tf.epsilon, "Transition probability floor (hmc)")
        ->capture_default_str();
    train->add_option("--rounds", tf.rounds, "Boosting rounds (gbdt)")->capture_default_str();
    train->add_option("--eta", tf.eta, "Shrinkage (gbdt)")->capture_default_str();
    train->add_option("--lambda", tf.lambda, "L2 leaf regularization (gbdt)")->capture_default_str();
    train->add_option("--gamma", tf.gamma, "Per-leaf split penalty (gbdt)")->capture_default_str();
    train->add_option("--max-depth", tf.max_depth, "Tree depth limit (gbdt)")->capture_default_str();

    auto* eval = app.add_subcommand("eval", "Evaluate a model file on a session CSV");
    std::string eval_model;
    std::string eval_data;
    double eval_fraction = 0.7;
    std::string eval_scope = "test";
    std::string eval_out;
    eval->add_option("--model", eval_model, "Model file path")->required();
    eval->add_option("--data", eval_data, "Session CSV path")->required();
    eval->add_option("--train-fraction", eval_fraction,
                     "Chronological split point for scopes train/test")->capture_default_str();
    eval->add_option("--scope", eval_scope, "Points to score: test, train, or all")->capture_default_str()
        ->check(CLI::IsMember({"test", "train", "all"}));
    eval->add_option("--out", eval_out, "Write the report as JSON to this path");

    auto* stream = app.add_subcommand(
        "stream", "Classify stream rows (timestamp,ch1..ch5) from stdin, one "
                  "prediction line per row");
    std::string stream_model;
    std::string reset_token = "RESET";
    stream->add_option("--model", stream_model, "Model file path")->required();
    stream->add_option("--reset-token", reset_token,
                       "Input line that resets sequence state")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (simulate->parsed()) return run_simulate(sim_out, sim_seed, sim_plan, sim_profiles);
        if (train->parsed()) return run_train(tf);
        if (eval->parsed())
            return run_eval(eval_model, eval_data, eval_fraction, eval_scope, eval_out);
        if (stream->parsed()) return run_stream(stream_model, reset_token);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return 3;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return 4;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 0;
}
