#include <doctest.h>

#include <json.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "pmclass/dataset_io.hpp"
#include "pmclass/sensor_model.hpp"
#include "support/test_util.hpp"

using namespace pmclass;
using namespace pmclass::test;

namespace {

const std::string kCli = PMCLASS_CLI_PATH;
const std::string kShippedProfiles =
    std::string(PMCLASS_CONFIG_DIR) + "/default_profiles.ini";

// Short plan whose leading 70% still contains every class.
const std::string kSmallPlan = "background:40,ash:30,sand:30,candle:30,background:20";

std::string simulate_corpus(const TempDir& dir, const std::string& name,
                            const std::string& plan = kSmallPlan) {
    const std::string path = dir.file(name);
    const CommandResult r = run_command(
        dir, kCli + " simulate --out '" + path + "' --seed 42 --plan '" + plan + "'");
    REQUIRE(r.exit_code == 0);
    return path;
}

std::string train_model(const TempDir& dir, const std::string& corpus,
                        const std::string& kind, const std::string& extra) {
    const std::string path = dir.file("model_" + kind);
    const CommandResult r =
        run_command(dir, kCli + " train --model " + kind + " --data '" + corpus +
                             "' --out '" + path + "' " + extra);
    REQUIRE(r.exit_code == 0);
    return path;
}

std::vector<std::string> stream_rows(const std::string& corpus, std::size_t limit) {
    const Dataset data = load_sessions(corpus);
    std::vector<std::string> rows;
    for (const auto& seq : data.sequences) {
        for (const auto& frame : seq.frames) {
            if (rows.size() == limit) return rows;
            rows.push_back(format_stream_row(frame));
        }
    }
    return rows;
}

std::string join_lines(const std::vector<std::string>& lines) {
    std::string out;
    for (const auto& line : lines) {
        out += line;
        out += '\n';
    }
    return out;
}

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
        const std::size_t comma = line.find(',', pos);
        fields.push_back(line.substr(pos, comma - pos));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return fields;
}

}  // namespace

TEST_CASE("simulate writes the default 1500 s corpus deterministically") {
    TempDir dir;
    const std::string a = dir.file("a.csv");
    const std::string b = dir.file("b.csv");
    const CommandResult ra =
        run_command(dir, kCli + " simulate --out '" + a + "' --seed 42");
    CHECK(ra.exit_code == 0);
    CHECK(ra.out.find("wrote") != std::string::npos);
    const CommandResult rb =
        run_command(dir, kCli + " simulate --out '" + b + "' --seed 42");
    CHECK(rb.exit_code == 0);

    const std::string text_a = read_file(a);
    CHECK(text_a == read_file(b));
    const auto lines = split_lines(text_a);
    REQUIRE(lines.size() == 1501);
    CHECK(lines[0] == kSessionCsvHeader);

    const std::string c = dir.file("c.csv");
    const CommandResult rc =
        run_command(dir, kCli + " simulate --out '" + c + "' --seed 43");
    CHECK(rc.exit_code == 0);
    CHECK(read_file(c) != text_a);
}

TEST_CASE("simulate honors a custom plan") {
    TempDir dir;
    const std::string path = dir.file("plan.csv");
    const CommandResult r = run_command(
        dir, kCli + " simulate --out '" + path + "' --plan background:10 --seed 7");
    CHECK(r.exit_code == 0);
    const auto lines = split_lines(read_file(path));
    REQUIRE(lines.size() == 11);
    for (std::size_t i = 1; i < lines.size(); ++i) {
        CHECK(lines[i].find(",background") != std::string::npos);
    }
}

TEST_CASE("simulate with the shipped profile file matches the built-ins") {
    TempDir dir;
    const std::string a = dir.file("builtin.csv");
    const std::string b = dir.file("shipped.csv");
    REQUIRE(run_command(dir, kCli + " simulate --out '" + a + "' --seed 5").exit_code == 0);
    REQUIRE(run_command(dir, kCli + " simulate --out '" + b + "' --seed 5 --profiles '" +
                                 kShippedProfiles + "'")
                .exit_code == 0);
    CHECK(read_file(a) == read_file(b));
}

TEST_CASE("simulate rejects malformed plans and missing profile files") {
    TempDir dir;
    const std::string out = dir.file("x.csv");
    CHECK(run_command(dir, kCli + " simulate --out '" + out + "' --plan lava:10")
              .exit_code == 2);
    CHECK(run_command(dir, kCli + " simulate --out '" + out + "' --plan background")
              .exit_code == 2);
    CHECK(run_command(dir, kCli + " simulate --out '" + out + "' --plan background:0")
              .exit_code == 2);
    CHECK(run_command(dir, kCli + " simulate --out '" + out + "' --profiles '" +
                               dir.file("absent.ini") + "'")
              .exit_code == 2);
}

TEST_CASE("train hmc writes a model file and a loss log") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = dir.file("m.hmc");
    const CommandResult r =
        run_command(dir, kCli + " train --model hmc --data '" + corpus + "' --out '" +
                             model + "' --iterations 50");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("trained hmc") != std::string::npos);

    const std::string text = read_file(model);
    CHECK(text.rfind("pmclass-model 1\nkind hmc\n", 0) == 0);

    const auto loss_lines = split_lines(read_file(model + ".loss.csv"));
    REQUIRE(loss_lines.size() == 51);
    CHECK(loss_lines[0] == "iteration,loss");
    CHECK(loss_lines[1].rfind("0,", 0) == 0);

    const CommandResult again =
        run_command(dir, kCli + " train --model hmc --data '" + corpus + "' --out '" +
                             dir.file("m2.hmc") + "' --iterations 50");
    CHECK(again.exit_code == 0);
    CHECK(read_file(dir.file("m2.hmc")) == text);
}

TEST_CASE("train gbdt controls the ensemble size through --rounds") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "gbdt", "--rounds 5");
    const std::string text = read_file(model);
    CHECK(text.find("kind gbdt\n") != std::string::npos);
    CHECK(text.find("\ntrees 20\n") != std::string::npos);
    int tree_lines = 0;
    for (const auto& line : split_lines(text)) {
        if (line.rfind("tree ", 0) == 0) ++tree_lines;
    }
    CHECK(tree_lines == 20);
    const auto loss_lines = split_lines(read_file(model + ".loss.csv"));
    CHECK(loss_lines.size() == 7);
}

TEST_CASE("train lstm records the geometry and seed") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model =
        train_model(dir, corpus, "lstm", "--iterations 5 --seed 9");
    const std::string text = read_file(model);
    CHECK(text.find("kind lstm\n") != std::string::npos);
    CHECK(text.find("\ndims 10 50\n") != std::string::npos);
    CHECK(text.find("\nseed 9\n") != std::string::npos);
}

TEST_CASE("train validates flags before touching data") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string out = dir.file("m");
    CHECK(run_command(dir, kCli + " train --model forest --data '" + corpus +
                               "' --out '" + out + "'")
              .exit_code == 2);
    CHECK(run_command(dir, kCli + " train --model hmc --data '" + corpus + "' --out '" +
                               out + "' --train-fraction 1.5")
              .exit_code == 2);
    CHECK(run_command(dir, kCli + " train --model hmc --data '" + dir.file("no.csv") +
                               "' --out '" + out + "'")
              .exit_code == 3);
    CHECK(run_command(dir, kCli + " train --data '" + corpus + "' --out '" + out + "'")
              .exit_code == 2);
}

TEST_CASE("eval reports metrics and writes json plus confusion csv") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model =
        train_model(dir, corpus, "hmc", "--iterations 500");
    const std::string report_path = dir.file("report.json");

    const CommandResult r =
        run_command(dir, kCli + " eval --model '" + model + "' --data '" + corpus +
                             "' --out '" + report_path + "'");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("accuracy:") != std::string::npos);

    const auto j = nlohmann::json::parse(read_file(report_path));
    CHECK(j["points"] == 45);  // trailing 30% of the 150-point corpus
    CHECK(j["accuracy"].is_number());
    CHECK(j["weighted_f1"].is_number());
    CHECK(j["classes"]["background"].contains("recall"));
    CHECK(j["confusion"].contains("candle"));

    const auto csv_lines = split_lines(read_file(report_path + ".confusion.csv"));
    REQUIRE(csv_lines.size() == 5);
    CHECK(csv_lines[0] == "truth\\predicted,background,ash,sand,candle");

    const CommandResult train_scope =
        run_command(dir, kCli + " eval --model '" + model + "' --data '" + corpus +
                             "' --scope train --out '" + dir.file("train.json") + "'");
    CHECK(train_scope.exit_code == 0);
    const auto jt = nlohmann::json::parse(read_file(dir.file("train.json")));
    CHECK(jt["points"] == 105);
    CHECK(jt["accuracy"].get<double>() >= 0.95);

    const CommandResult all_scope =
        run_command(dir, kCli + " eval --model '" + model + "' --data '" + corpus +
                             "' --scope all --out '" + dir.file("all.json") + "'");
    CHECK(all_scope.exit_code == 0);
    CHECK(nlohmann::json::parse(read_file(dir.file("all.json")))["points"] == 150);
}

TEST_CASE("eval rejects a tampered model fingerprint") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "gbdt", "--rounds 2");

    std::string text = read_file(model);
    const std::string fingerprint = kFeatureOrderFingerprint;
    const auto pos = text.find(fingerprint);
    REQUIRE(pos != std::string::npos);
    text.replace(pos, fingerprint.size(), "b2/b1,mystery-layout");
    const std::string tampered = dir.file("tampered");
    write_file(tampered, text);

    const CommandResult r = run_command(
        dir, kCli + " eval --model '" + tampered + "' --data '" + corpus + "'");
    CHECK(r.exit_code == 3);
    CHECK(r.err.find("data error") != std::string::npos);
}

TEST_CASE("eval validates scope and model path") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    CHECK(run_command(dir, kCli + " eval --model '" + dir.file("absent") + "' --data '" +
                               corpus + "'")
              .exit_code == 3);
    const std::string model = train_model(dir, corpus, "gbdt", "--rounds 2");
    CHECK(run_command(dir, kCli + " eval --model '" + model + "' --data '" + corpus +
                               "' --scope half")
              .exit_code == 2);
}

TEST_CASE("stream answers every row with exactly one prediction line") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "hmc", "--iterations 200");
    const auto rows = stream_rows(corpus, 40);

    const CommandResult r =
        run_command(dir, kCli + " stream --model '" + model + "'", join_lines(rows));
    CHECK(r.exit_code == 0);
    CHECK(r.err.empty());
    const auto lines = split_lines(r.out);
    REQUIRE(lines.size() == rows.size());
    for (std::size_t i = 0; i < lines.size(); ++i) {
        const auto out_fields = split_csv(lines[i]);
        REQUIRE(out_fields.size() == 6);
        CHECK(out_fields[0] == split_csv(rows[i])[0]);
        CHECK(try_parse_label(out_fields[1]).has_value());
        double total = 0.0;
        for (int k = 0; k < 4; ++k) total += std::stod(out_fields[static_cast<std::size_t>(2 + k)]);
        CHECK(std::abs(total - 1.0) < 1e-9);
    }
}

TEST_CASE("the reset token restarts hmc sequence state silently") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "hmc", "--iterations 200");
    const std::string row = stream_rows(corpus, 1)[0];

    const CommandResult without_reset =
        run_command(dir, kCli + " stream --model '" + model + "'", join_lines({row, row}));
    REQUIRE(without_reset.exit_code == 0);
    const auto plain = split_lines(without_reset.out);
    REQUIRE(plain.size() == 2);
    CHECK(plain[0] != plain[1]);  // the second step consults the transition model

    const CommandResult with_reset = run_command(
        dir, kCli + " stream --model '" + model + "'", join_lines({row, "RESET", row}));
    REQUIRE(with_reset.exit_code == 0);
    const auto reset_lines = split_lines(with_reset.out);
    REQUIRE(reset_lines.size() == 2);
    CHECK(reset_lines[0] == plain[0]);
    CHECK(reset_lines[1] == plain[0]);

    const CommandResult custom = run_command(
        dir, kCli + " stream --model '" + model + "' --reset-token FLUSH",
        join_lines({row, "FLUSH", row}));
    REQUIRE(custom.exit_code == 0);
    CHECK(split_lines(custom.out)[1] == plain[0]);
}

TEST_CASE("gbdt stream predictions are independent of row order") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "gbdt", "--rounds 10");
    const auto rows = stream_rows(corpus, 12);

    std::vector<std::string> reversed(rows.rbegin(), rows.rend());
    const CommandResult forward =
        run_command(dir, kCli + " stream --model '" + model + "'", join_lines(rows));
    const CommandResult backward =
        run_command(dir, kCli + " stream --model '" + model + "'", join_lines(reversed));
    REQUIRE(forward.exit_code == 0);
    REQUIRE(backward.exit_code == 0);

    auto forward_lines = split_lines(forward.out);
    auto backward_lines = split_lines(backward.out);
    REQUIRE(forward_lines.size() == backward_lines.size());
    std::vector<std::string> back_reversed(backward_lines.rbegin(), backward_lines.rend());
    CHECK(forward_lines == back_reversed);
}

TEST_CASE("malformed stream rows go to stderr without stopping the run") {
    TempDir dir;
    const std::string corpus = simulate_corpus(dir, "corpus.csv");
    const std::string model = train_model(dir, corpus, "gbdt", "--rounds 2");
    const auto rows = stream_rows(corpus, 2);

    const CommandResult r = run_command(
        dir, kCli + " stream --model '" + model + "'",
        join_lines({rows[0], "not,a,row", rows[1], "0,5,4,3,2,-1"}));
    CHECK(r.exit_code == 0);
    CHECK(split_lines(r.out).size() == 2);
    const auto errors = split_lines(r.err);
    REQUIRE(errors.size() == 2);
    CHECK(errors[0].rfind("stream:", 0) == 0);
    CHECK(errors[1].rfind("stream:", 0) == 0);

    CHECK(run_command(dir, kCli + " stream --model '" + dir.file("absent") + "'")
              .exit_code == 3);
}

TEST_CASE("bare invocations and help behave like a conventional cli") {
    TempDir dir;
    CHECK(run_command(dir, kCli).exit_code == 2);
    CHECK(run_command(dir, kCli + " --help").exit_code == 0);
    CHECK(run_command(dir, kCli + " train --help").exit_code == 0);
    CHECK(run_command(dir, kCli + " frobnicate").exit_code == 2);
}
