#include <doctest.h>

#include <string>
#include <vector>

#include "pmclass/errors.hpp"
#include "pmclass/model_io.hpp"
#include "pmclass/rng.hpp"
#include "support/test_util.hpp"

using namespace pmclass;
using namespace pmclass::test;

namespace {

HmcModel trained_hmc() {
    HmcOptions options;
    options.emission.iterations = 60;
    return train_hmc(toy_corpus(5), options).model;
}

LstmModel trained_lstm() {
    LstmOptions options;
    options.hidden_dim = 5;
    options.iterations = 25;
    options.seed = 3;
    return train_lstm(toy_corpus(4), options).model;
}

GbdtModel trained_gbdt() {
    GbdtOptions options;
    options.rounds = 6;
    return train_gbdt(toy_corpus(5), options).model;
}

std::string replace_once(std::string text, const std::string& needle,
                         const std::string& replacement) {
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    return text.replace(pos, needle.size(), replacement);
}

}  // namespace

TEST_CASE("model kind names round-trip") {
    CHECK(model_kind_name(ModelKind::Hmc) == std::string("hmc"));
    CHECK(model_kind_name(ModelKind::Lstm) == std::string("lstm"));
    CHECK(model_kind_name(ModelKind::Gbdt) == std::string("gbdt"));
    CHECK(try_parse_model_kind("hmc") == ModelKind::Hmc);
    CHECK(try_parse_model_kind("lstm") == ModelKind::Lstm);
    CHECK(try_parse_model_kind("gbdt") == ModelKind::Gbdt);
    CHECK(!try_parse_model_kind("forest").has_value());
    CHECK(!try_parse_model_kind("HMC").has_value());
    CHECK(parse_model_kind("gbdt") == ModelKind::Gbdt);
    CHECK_THROWS_AS(parse_model_kind("boosted"), ConfigError);
}

TEST_CASE("hmc models survive a save/load round trip byte for byte") {
    TempDir dir;
    const HmcModel model = trained_hmc();
    const std::string path = dir.file("model.hmc");
    save_model(model, path);

    CHECK(peek_model_kind(path) == ModelKind::Hmc);
    const HmcModel loaded = load_hmc_model(path);
    CHECK(serialize_model(loaded) == serialize_model(model));
    CHECK(loaded.prior == model.prior);
    CHECK(loaded.transition == model.transition);
    CHECK(loaded.emission.weights == model.emission.weights);
    CHECK(loaded.emission.bias == model.emission.bias);
    CHECK(loaded.emission.scaler.mean == model.emission.scaler.mean);
    CHECK(loaded.emission.scaler.std == model.emission.scaler.std);
    CHECK(loaded.epsilon == model.epsilon);

    const Dataset corpus = toy_corpus(3);
    for (const auto& seq : corpus.sequences) {
        CHECK(predict_sequence(loaded, seq.frames) == predict_sequence(model, seq.frames));
    }
}

TEST_CASE("lstm models survive a save/load round trip byte for byte") {
    TempDir dir;
    const LstmModel model = trained_lstm();
    const std::string path = dir.file("model.lstm");
    save_model(model, path);

    CHECK(peek_model_kind(path) == ModelKind::Lstm);
    const LstmModel loaded = load_lstm_model(path);
    CHECK(serialize_model(loaded) == serialize_model(model));
    CHECK(loaded.input_dim == model.input_dim);
    CHECK(loaded.hidden_dim == model.hidden_dim);
    CHECK(loaded.seed == model.seed);
    CHECK(loaded.parameter_vector() == model.parameter_vector());
    CHECK(loaded.scaler.mean == model.scaler.mean);
    CHECK(loaded.scaler.std == model.scaler.std);

    const Dataset corpus = toy_corpus(3);
    for (const auto& seq : corpus.sequences) {
        CHECK(predict_sequence(loaded, seq.frames) == predict_sequence(model, seq.frames));
    }
}

TEST_CASE("gbdt models survive a save/load round trip byte for byte") {
    TempDir dir;
    const GbdtModel model = trained_gbdt();
    const std::string path = dir.file("model.gbdt");
    save_model(model, path);

    CHECK(peek_model_kind(path) == ModelKind::Gbdt);
    const GbdtModel loaded = load_gbdt_model(path);
    CHECK(serialize_model(loaded) == serialize_model(model));
    CHECK(loaded.rounds == model.rounds);
    CHECK(loaded.eta == model.eta);
    CHECK(loaded.lambda == model.lambda);
    CHECK(loaded.gamma == model.gamma);
    CHECK(loaded.max_depth == model.max_depth);
    CHECK(loaded.min_points == model.min_points);
    CHECK(loaded.base_score == model.base_score);
    REQUIRE(loaded.trees.size() == model.trees.size());

    const Dataset corpus = toy_corpus(3);
    for (const FeatureVector& x : corpus.feature_matrix()) {
        CHECK(loaded.predict_logits(x) == model.predict_logits(x));
    }
}

TEST_CASE("extreme doubles survive serialization exactly") {
    HmcModel model = trained_hmc();
    model.emission.weights(0, 0) = 1.0 / 3.0;
    model.emission.weights(1, 1) = -1e-300;
    model.emission.weights(2, 2) = 9.87654321e250;
    model.emission.bias[3] = 5e-324;  // subnormal minimum
    const HmcModel loaded = parse_hmc_model(serialize_model(model), "mem");
    CHECK(loaded.emission.weights == model.emission.weights);
    CHECK(loaded.emission.bias == model.emission.bias);
}

TEST_CASE("a tampered fingerprint is rejected") {
    const std::string text = serialize_model(trained_gbdt());
    const std::string bad =
        replace_once(text, kFeatureOrderFingerprint, "c1/c2,c1/c3,other-layout");
    try {
        parse_gbdt_model(bad, "mem");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("mem") != std::string::npos);
    }
}

TEST_CASE("a foreign magic line is rejected") {
    const std::string text = serialize_model(trained_hmc());
    CHECK_THROWS_AS(parse_hmc_model(replace_once(text, "pmclass-model 1", "pmclass-model 2"),
                                    "mem"),
                    DataError);
    CHECK_THROWS_AS(parse_hmc_model(replace_once(text, "pmclass-model 1", "other-format"),
                                    "mem"),
                    DataError);
    CHECK_THROWS_AS(parse_hmc_model("", "mem"), DataError);
}

TEST_CASE("loading a file as the wrong kind is rejected") {
    TempDir dir;
    const std::string path = dir.file("model.lstm");
    save_model(trained_lstm(), path);
    CHECK_THROWS_AS(load_hmc_model(path), DataError);
    CHECK_THROWS_AS(load_gbdt_model(path), DataError);
}

TEST_CASE("truncation and trailing garbage are rejected") {
    const std::string text = serialize_model(trained_gbdt());
    CHECK_THROWS_AS(parse_gbdt_model(text.substr(0, text.size() / 2), "mem"), DataError);
    CHECK_THROWS_AS(parse_gbdt_model(text + "extra line\n", "mem"), DataError);

    const std::string hmc_text = serialize_model(trained_hmc());
    CHECK_THROWS_AS(parse_hmc_model(hmc_text.substr(0, hmc_text.size() - 20), "mem"),
                    DataError);
    CHECK_THROWS_AS(parse_hmc_model(hmc_text + "trailing\n", "mem"), DataError);
}

TEST_CASE("corrupt numeric fields name the source line") {
    const std::string text = serialize_model(trained_hmc());
    const std::string bad = replace_once(text, "epsilon", "epsilon junk\nwas");
    try {
        parse_hmc_model(bad, "model.txt");
        FAIL("expected DataError");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("model.txt:") != std::string::npos);
    }
}

TEST_CASE("gbdt tree counts must match the declared rounds") {
    GbdtModel model = trained_gbdt();
    const std::string good = serialize_model(model);
    const std::string bad =
        replace_once(good, "trees " + std::to_string(model.trees.size()),
                     "trees " + std::to_string(model.trees.size() - 1));
    CHECK_THROWS_AS(parse_gbdt_model(bad, "mem"), DataError);
}

TEST_CASE("a broken stochastic constraint fails the load") {
    HmcModel model = trained_hmc();
    const std::string text = serialize_model(model);
    // Corrupt one transition entry so its row no longer sums to 1.
    const std::string needle = "\ntransition\n";
    const auto pos = text.find(needle);
    REQUIRE(pos != std::string::npos);
    const auto row_start = pos + needle.size();
    const auto row_end = text.find('\n', row_start);
    std::string bad = text;
    bad.replace(row_start, row_end - row_start, "0.9 0.9 0.05 0.05");
    CHECK_THROWS_AS(parse_hmc_model(bad, "mem"), DataError);
}

TEST_CASE("peek_model_kind rejects missing and foreign files") {
    TempDir dir;
    CHECK_THROWS_AS(peek_model_kind(dir.file("absent")), DataError);
    const std::string path = dir.file("noise.txt");
    write_file(path, "timestamp,c1,c2\n0,1,2\n");
    CHECK_THROWS_AS(peek_model_kind(path), DataError);
}
