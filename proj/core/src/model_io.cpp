#include "pmclass/model_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "pmclass/dataset_io.hpp"

namespace pmclass {

namespace {

constexpr const char* kMagic = "pmclass-model 1";

std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && line[i] == ' ') ++i;
        const std::size_t start = i;
        while (i < line.size() && line[i] != ' ') ++i;
        if (i > start) tokens.push_back(line.substr(start, i - start));
    }
    return tokens;
}

struct LineReader {
    std::string_view text;
    std::string origin;
    std::size_t pos = 0;
    int line_no = 0;

    std::optional<std::string_view> next() {
        if (pos >= text.size()) return std::nullopt;
        const std::size_t end = text.find('\n', pos);
        std::string_view line = end == std::string_view::npos
                                    ? text.substr(pos)
                                    : text.substr(pos, end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        return line;
    }

    std::string_view require(const std::string& what) {
        auto line = next();
        if (!line) fail("unexpected end of file, expected " + what);
        return *line;
    }

    [[noreturn]] void fail(const std::string& message) const {
        throw DataError(origin + ":" + std::to_string(line_no) + ": " + message);
    }

    std::string context(const std::string& what) const {
        return origin + ":" + std::to_string(line_no) + ": " + what;
    }
};

std::uint64_t parse_u64(std::string_view text, const LineReader& reader,
                        const std::string& what) {
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size()) {
        reader.fail("malformed " + what + " '" + std::string(text) + "'");
    }
    return value;
}

std::vector<double> read_keyed_row(LineReader& reader, const std::string& key,
                                   std::size_t count) {
    const auto tokens = split_ws(reader.require("'" + key + "' line"));
    if (tokens.empty() || tokens[0] != key) {
        reader.fail("expected '" + key + "' line");
    }
    if (tokens.size() != count + 1) {
        reader.fail("'" + key + "' needs " + std::to_string(count) + " values, got " +
                    std::to_string(tokens.size() - 1));
    }
    std::vector<double> values(count);
    for (std::size_t i = 0; i < count; ++i) {
        values[i] = parse_double(tokens[i + 1], reader.context(key));
    }
    return values;
}

double read_keyed_double(LineReader& reader, const std::string& key) {
    return read_keyed_row(reader, key, 1)[0];
}

Eigen::MatrixXd read_matrix_block(LineReader& reader, const std::string& key,
                                  Eigen::Index rows, Eigen::Index cols) {
    const auto header = reader.require("'" + key + "' block");
    if (header != key) reader.fail("expected '" + key + "' block");
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto tokens = split_ws(reader.require(key + " row"));
        if (tokens.size() != static_cast<std::size_t>(cols)) {
            reader.fail(key + " row needs " + std::to_string(cols) + " values, got " +
                        std::to_string(tokens.size()));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = parse_double(tokens[static_cast<std::size_t>(c)],
                                   reader.context(key));
        }
    }
    return m;
}

void read_header(LineReader& reader, ModelKind expected) {
    if (reader.require("magic line") != kMagic) {
        reader.fail("not a pmclass model file");
    }
    const auto kind_tokens = split_ws(reader.require("'kind' line"));
    if (kind_tokens.size() != 2 || kind_tokens[0] != "kind") {
        reader.fail("expected 'kind <name>'");
    }
    const auto kind = try_parse_model_kind(kind_tokens[1]);
    if (!kind) reader.fail("unknown model kind '" + std::string(kind_tokens[1]) + "'");
    if (*kind != expected) {
        reader.fail(std::string("model kind is '") + model_kind_name(*kind) +
                    "', expected '" + model_kind_name(expected) + "'");
    }
    const auto features = reader.require("'features' line");
    constexpr std::string_view prefix = "features ";
    if (!features.starts_with(prefix) ||
        features.substr(prefix.size()) != kFeatureOrderFingerprint) {
        reader.fail("feature layout fingerprint does not match this build");
    }
}

void append_header(std::string& out, ModelKind kind) {
    out += kMagic;
    out += "\nkind ";
    out += model_kind_name(kind);
    out += "\nfeatures ";
    out += kFeatureOrderFingerprint;
    out += '\n';
}

void append_keyed(std::string& out, const char* key, double value) {
    out += key;
    out += ' ';
    out += format_double(value);
    out += '\n';
}

template <typename Derived>
void append_row_values(std::string& out, const Eigen::DenseBase<Derived>& row) {
    for (Eigen::Index i = 0; i < row.size(); ++i) {
        out += ' ';
        out += format_double(row(i));
    }
    out += '\n';
}

void append_keyed_row(std::string& out, const char* key, const Eigen::VectorXd& values) {
    out += key;
    append_row_values(out, values);
}

void append_matrix_block(std::string& out, const char* key, const Eigen::MatrixXd& m) {
    out += key;
    out += '\n';
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        std::string row;
        append_row_values(row, m.row(r));
        out += row.substr(1);  // rows carry no key, drop the leading space
    }
}

void append_array(std::string& out, const char* key, const FeatureVector& values) {
    out += key;
    for (double v : values) {
        out += ' ';
        out += format_double(v);
    }
    out += '\n';
}

FeatureVector read_feature_array(LineReader& reader, const std::string& key) {
    const auto values = read_keyed_row(reader, key, kNumFeatures);
    FeatureVector out;
    std::copy(values.begin(), values.end(), out.begin());
    return out;
}

void expect_eof(LineReader& reader) {
    while (auto line = reader.next()) {
        if (!split_ws(*line).empty()) reader.fail("trailing content after model body");
    }
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open model file '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    if (in.bad()) throw DataError("failed reading model file '" + path + "'");
    return buffer.str();
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write model file '" + path + "'");
    out << content;
    out.flush();
    if (!out) throw DataError("failed writing model file '" + path + "'");
}

int serialize_tree_node(std::string& out, const Tree& tree, int index, int& written) {
    const TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
    ++written;
    if (node.feature < 0) {
        out += "l ";
        out += format_double(node.weight);
        out += '\n';
        return written;
    }
    out += "s ";
    out += std::to_string(node.feature);
    out += ' ';
    out += format_double(node.threshold);
    out += '\n';
    serialize_tree_node(out, tree, node.left, written);
    serialize_tree_node(out, tree, node.right, written);
    return written;
}

int parse_tree_node(LineReader& reader, Tree& tree, int depth) {
    if (depth > 64) reader.fail("tree nesting too deep");
    const auto tokens = split_ws(reader.require("tree node"));
    const int index = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back(TreeNode{});
    if (tokens.size() == 2 && tokens[0] == "l") {
        tree.nodes[static_cast<std::size_t>(index)].weight =
            parse_double(tokens[1], reader.context("leaf weight"));
        return index;
    }
    if (tokens.size() == 3 && tokens[0] == "s") {
        const auto feature = parse_int(tokens[1], reader.context("split feature"));
        if (feature < 0 || feature >= kNumFeatures) {
            reader.fail("split feature out of range");
        }
        const double threshold = parse_double(tokens[2], reader.context("threshold"));
        const int left = parse_tree_node(reader, tree, depth + 1);
        const int right = parse_tree_node(reader, tree, depth + 1);
        TreeNode& node = tree.nodes[static_cast<std::size_t>(index)];
        node.feature = static_cast<int>(feature);
        node.threshold = threshold;
        node.left = left;
        node.right = right;
        return index;
    }
    reader.fail("expected 's <feature> <threshold>' or 'l <weight>'");
}

}  // namespace

const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Hmc: return "hmc";
        case ModelKind::Lstm: return "lstm";
        case ModelKind::Gbdt: return "gbdt";
    }
    throw ConfigError("unknown model kind code");
}

std::optional<ModelKind> try_parse_model_kind(std::string_view text) {
    if (text == "hmc") return ModelKind::Hmc;
    if (text == "lstm") return ModelKind::Lstm;
    if (text == "gbdt") return ModelKind::Gbdt;
    return std::nullopt;
}

ModelKind parse_model_kind(std::string_view text) {
    const auto kind = try_parse_model_kind(text);
    if (!kind) {
        throw ConfigError("unknown model kind '" + std::string(text) +
                          "' (expected hmc, lstm, or gbdt)");
    }
    return *kind;
}

std::string serialize_model(const HmcModel& model) {
    std::string out;
    append_header(out, ModelKind::Hmc);
    append_keyed(out, "epsilon", model.epsilon);
    append_keyed_row(out, "prior", model.prior);
    append_matrix_block(out, "transition", model.transition);
    append_matrix_block(out, "emission_weights", model.emission.weights);
    append_keyed_row(out, "emission_bias", model.emission.bias);
    append_array(out, "scaler_mean", model.emission.scaler.mean);
    append_array(out, "scaler_std", model.emission.scaler.std);
    return out;
}

std::string serialize_model(const LstmModel& model) {
    std::string out;
    append_header(out, ModelKind::Lstm);
    out += "dims " + std::to_string(model.input_dim) + ' ' +
           std::to_string(model.hidden_dim) + '\n';
    out += "seed " + std::to_string(model.seed) + '\n';
    append_array(out, "scaler_mean", model.scaler.mean);
    append_array(out, "scaler_std", model.scaler.std);
    append_matrix_block(out, "w_f", model.w_f);
    append_matrix_block(out, "w_i", model.w_i);
    append_matrix_block(out, "w_o", model.w_o);
    append_matrix_block(out, "w_c", model.w_c);
    append_matrix_block(out, "u_f", model.u_f);
    append_matrix_block(out, "u_i", model.u_i);
    append_matrix_block(out, "u_o", model.u_o);
    append_matrix_block(out, "u_c", model.u_c);
    append_keyed_row(out, "b_f", model.b_f);
    append_keyed_row(out, "b_i", model.b_i);
    append_keyed_row(out, "b_o", model.b_o);
    append_keyed_row(out, "b_c", model.b_c);
    append_matrix_block(out, "head_w", model.head_w);
    append_keyed_row(out, "head_b", model.head_b);
    return out;
}

std::string serialize_model(const GbdtModel& model) {
    std::string out;
    append_header(out, ModelKind::Gbdt);
    out += "rounds " + std::to_string(model.rounds) + '\n';
    append_keyed(out, "eta", model.eta);
    append_keyed(out, "lambda", model.lambda);
    append_keyed(out, "gamma", model.gamma);
    out += "max_depth " + std::to_string(model.max_depth) + '\n';
    out += "min_points " + std::to_string(model.min_points) + '\n';
    append_keyed(out, "base_score", model.base_score);
    out += "trees " + std::to_string(model.trees.size()) + '\n';
    for (const Tree& tree : model.trees) {
        std::string body;
        int written = 0;
        if (tree.nodes.empty()) throw DataError("serialize: tree has no nodes");
        serialize_tree_node(body, tree, 0, written);
        out += "tree " + std::to_string(written) + '\n';
        out += body;
    }
    return out;
}

void save_model(const HmcModel& model, const std::string& path) {
    write_file(path, serialize_model(model));
}

void save_model(const LstmModel& model, const std::string& path) {
    write_file(path, serialize_model(model));
}

void save_model(const GbdtModel& model, const std::string& path) {
    write_file(path, serialize_model(model));
}

ModelKind peek_model_kind(const std::string& path) {
    const std::string text = read_file(path);
    LineReader reader{text, path};
    if (reader.require("magic line") != kMagic) {
        reader.fail("not a pmclass model file");
    }
    const auto tokens = split_ws(reader.require("'kind' line"));
    if (tokens.size() != 2 || tokens[0] != "kind") reader.fail("expected 'kind <name>'");
    const auto kind = try_parse_model_kind(tokens[1]);
    if (!kind) reader.fail("unknown model kind '" + std::string(tokens[1]) + "'");
    return *kind;
}

HmcModel parse_hmc_model(std::string_view text, const std::string& origin) {
    LineReader reader{text, origin};
    read_header(reader, ModelKind::Hmc);
    HmcModel model;
    model.epsilon = read_keyed_double(reader, "epsilon");
    const auto prior = read_keyed_row(reader, "prior", kNumClasses);
    for (int i = 0; i < kNumClasses; ++i) model.prior[i] = prior[static_cast<std::size_t>(i)];
    model.transition = read_matrix_block(reader, "transition", kNumClasses, kNumClasses);
    model.emission.weights =
        read_matrix_block(reader, "emission_weights", kNumClasses, kNumFeatures);
    const auto bias = read_keyed_row(reader, "emission_bias", kNumClasses);
    for (int i = 0; i < kNumClasses; ++i) model.emission.bias[i] = bias[static_cast<std::size_t>(i)];
    model.emission.scaler.mean = read_feature_array(reader, "scaler_mean");
    model.emission.scaler.std = read_feature_array(reader, "scaler_std");
    expect_eof(reader);
    try {
        model.validate();
    } catch (const Error& e) {
        throw DataError(origin + ": " + e.what());
    }
    return model;
}

LstmModel parse_lstm_model(std::string_view text, const std::string& origin) {
    LineReader reader{text, origin};
    read_header(reader, ModelKind::Lstm);

    const auto dims = split_ws(reader.require("'dims' line"));
    if (dims.size() != 3 || dims[0] != "dims") reader.fail("expected 'dims <in> <hidden>'");
    const auto input_dim = parse_int(dims[1], reader.context("input dim"));
    const auto hidden_dim = parse_int(dims[2], reader.context("hidden dim"));
    if (input_dim <= 0 || hidden_dim <= 0 || input_dim > 4096 || hidden_dim > 4096) {
        reader.fail("dims out of range");
    }

    const auto seed_tokens = split_ws(reader.require("'seed' line"));
    if (seed_tokens.size() != 2 || seed_tokens[0] != "seed") {
        reader.fail("expected 'seed <value>'");
    }

    LstmModel model;
    model.input_dim = static_cast<int>(input_dim);
    model.hidden_dim = static_cast<int>(hidden_dim);
    model.seed = parse_u64(seed_tokens[1], reader, "seed");
    model.scaler.mean = read_feature_array(reader, "scaler_mean");
    model.scaler.std = read_feature_array(reader, "scaler_std");

    const Eigen::Index h = hidden_dim;
    const Eigen::Index d = input_dim;
    model.w_f = read_matrix_block(reader, "w_f", h, d);
    model.w_i = read_matrix_block(reader, "w_i", h, d);
    model.w_o = read_matrix_block(reader, "w_o", h, d);
    model.w_c = read_matrix_block(reader, "w_c", h, d);
    model.u_f = read_matrix_block(reader, "u_f", h, h);
    model.u_i = read_matrix_block(reader, "u_i", h, h);
    model.u_o = read_matrix_block(reader, "u_o", h, h);
    model.u_c = read_matrix_block(reader, "u_c", h, h);
    auto read_bias = [&](const std::string& key) {
        const auto values = read_keyed_row(reader, key, static_cast<std::size_t>(h));
        return Eigen::Map<const Eigen::VectorXd>(values.data(), h).eval();
    };
    model.b_f = read_bias("b_f");
    model.b_i = read_bias("b_i");
    model.b_o = read_bias("b_o");
    model.b_c = read_bias("b_c");
    model.head_w = read_matrix_block(reader, "head_w", kNumClasses, h);
    const auto head_b = read_keyed_row(reader, "head_b", kNumClasses);
    for (int i = 0; i < kNumClasses; ++i) model.head_b[i] = head_b[static_cast<std::size_t>(i)];
    expect_eof(reader);
    return model;
}

GbdtModel parse_gbdt_model(std::string_view text, const std::string& origin) {
    LineReader reader{text, origin};
    read_header(reader, ModelKind::Gbdt);

    GbdtModel model;
    auto read_keyed_int = [&](const std::string& key) {
        const auto tokens = split_ws(reader.require("'" + key + "' line"));
        if (tokens.size() != 2 || tokens[0] != key) {
            reader.fail("expected '" + key + " <value>'");
        }
        return parse_int(tokens[1], reader.context(key));
    };
    model.rounds = static_cast<int>(read_keyed_int("rounds"));
    model.eta = read_keyed_double(reader, "eta");
    model.lambda = read_keyed_double(reader, "lambda");
    model.gamma = read_keyed_double(reader, "gamma");
    model.max_depth = static_cast<int>(read_keyed_int("max_depth"));
    model.min_points = static_cast<int>(read_keyed_int("min_points"));
    model.base_score = read_keyed_double(reader, "base_score");

    const auto tree_count = read_keyed_int("trees");
    if (tree_count < 0 || tree_count % kNumClasses != 0) {
        reader.fail("tree count must be a non-negative multiple of " +
                    std::to_string(kNumClasses));
    }
    if (tree_count != static_cast<std::int64_t>(model.rounds) * kNumClasses) {
        reader.fail("tree count is inconsistent with the round count");
    }
    model.trees.reserve(static_cast<std::size_t>(tree_count));
    for (std::int64_t t = 0; t < tree_count; ++t) {
        const auto header = split_ws(reader.require("'tree' line"));
        if (header.size() != 2 || header[0] != "tree") {
            reader.fail("expected 'tree <node count>'");
        }
        const auto node_count = parse_int(header[1], reader.context("tree node count"));
        Tree tree;
        parse_tree_node(reader, tree, 0);
        if (static_cast<std::int64_t>(tree.nodes.size()) != node_count) {
            reader.fail("tree declared " + std::to_string(node_count) + " nodes, found " +
                        std::to_string(tree.nodes.size()));
        }
        model.trees.push_back(std::move(tree));
    }
    expect_eof(reader);
    return model;
}

HmcModel load_hmc_model(const std::string& path) {
    const std::string text = read_file(path);
    return parse_hmc_model(text, path);
}

LstmModel load_lstm_model(const std::string& path) {
    const std::string text = read_file(path);
    return parse_lstm_model(text, path);
}

GbdtModel load_gbdt_model(const std::string& path) {
    const std::string text = read_file(path);
    return parse_gbdt_model(text, path);
}

}  // namespace pmclass
