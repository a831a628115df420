#include "pmclass/lstm.hpp"

#include <cmath>

#include "pmclass/rng.hpp"

namespace pmclass {
namespace {

double sigmoid_scalar(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Eigen::VectorXd sigmoid(const Eigen::VectorXd& x) {
    Eigen::VectorXd out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out[i] = sigmoid_scalar(x[i]);
    return out;
}

Eigen::MatrixXd scaled_inputs(const Scaler& scaler, std::span<const SensorFrame> frames) {
    Eigen::MatrixXd inputs(kNumFeatures, static_cast<Eigen::Index>(frames.size()));
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const FeatureVector x = scaler.transform(compute_ratios(frames[t]));
        for (int d = 0; d < kNumFeatures; ++d) {
            inputs(d, static_cast<Eigen::Index>(t)) = x[d];
        }
    }
    return inputs;
}

// Shared walk so the flat parameter layout has a single definition.
template <typename ModelT, typename Fn>
void for_each_block(ModelT& m, Fn&& fn) {
    fn(m.w_f); fn(m.w_i); fn(m.w_o); fn(m.w_c);
    fn(m.u_f); fn(m.u_i); fn(m.u_o); fn(m.u_c);
    fn(m.b_f); fn(m.b_i); fn(m.b_o); fn(m.b_c);
    fn(m.head_w);
}

}  // namespace

LstmModel LstmModel::init(int input_dim, int hidden_dim, std::uint64_t seed) {
    if (input_dim < 1 || hidden_dim < 1) {
        throw ConfigError("lstm: input and hidden dimensions must be >= 1");
    }
    LstmModel m;
    m.input_dim = input_dim;
    m.hidden_dim = hidden_dim;
    m.seed = seed;

    Rng rng(seed);
    const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
    auto fill = [&](Eigen::MatrixXd& w, Eigen::Index rows, Eigen::Index cols) {
        w.resize(rows, cols);
        for (Eigen::Index r = 0; r < rows; ++r) {
            for (Eigen::Index c = 0; c < cols; ++c) w(r, c) = rng.uniform(-k, k);
        }
    };
    fill(m.w_f, hidden_dim, input_dim);
    fill(m.w_i, hidden_dim, input_dim);
    fill(m.w_o, hidden_dim, input_dim);
    fill(m.w_c, hidden_dim, input_dim);
    fill(m.u_f, hidden_dim, hidden_dim);
    fill(m.u_i, hidden_dim, hidden_dim);
    fill(m.u_o, hidden_dim, hidden_dim);
    fill(m.u_c, hidden_dim, hidden_dim);
    m.b_f = Eigen::VectorXd::Zero(hidden_dim);
    m.b_i = Eigen::VectorXd::Zero(hidden_dim);
    m.b_o = Eigen::VectorXd::Zero(hidden_dim);
    m.b_c = Eigen::VectorXd::Zero(hidden_dim);
    fill(m.head_w, kNumClasses, hidden_dim);
    m.head_b.setZero();
    return m;
}

Eigen::Index LstmModel::parameter_count() const {
    const Eigen::Index h = hidden_dim;
    const Eigen::Index d = input_dim;
    return 4 * h * d + 4 * h * h + 4 * h + kNumClasses * h + kNumClasses;
}

Eigen::VectorXd LstmModel::parameter_vector() const {
    Eigen::VectorXd out(parameter_count());
    Eigen::Index offset = 0;
    for_each_block(*this, [&](const auto& block) {
        out.segment(offset, block.size()) =
            Eigen::Map<const Eigen::VectorXd>(block.data(), block.size());
        offset += block.size();
    });
    out.segment(offset, kNumClasses) = head_b;
    return out;
}

void LstmModel::set_parameters(const Eigen::VectorXd& params) {
    if (params.size() != parameter_count()) {
        throw ConfigError("lstm: parameter vector size mismatch");
    }
    Eigen::Index offset = 0;
    for_each_block(*this, [&](auto& block) {
        Eigen::Map<Eigen::VectorXd>(block.data(), block.size()) =
            params.segment(offset, block.size());
        offset += block.size();
    });
    head_b = params.segment(offset, kNumClasses);
}

LstmTape lstm_forward(const LstmModel& model, const Eigen::MatrixXd& inputs) {
    if (inputs.rows() != model.input_dim) {
        throw ConfigError("lstm_forward: input dimension mismatch");
    }
    if (inputs.cols() == 0) throw ConfigError("lstm_forward: empty sequence");
    if (!inputs.allFinite()) throw NumericError("lstm_forward: non-finite input");

    const Eigen::Index h = model.hidden_dim;
    const Eigen::Index steps = inputs.cols();
    LstmTape tape;
    tape.inputs = inputs;
    tape.f.resize(h, steps);
    tape.i.resize(h, steps);
    tape.o.resize(h, steps);
    tape.cand.resize(h, steps);
    tape.c.resize(h, steps);
    tape.h.resize(h, steps);
    tape.logits.resize(kNumClasses, steps);

    Eigen::VectorXd h_prev = Eigen::VectorXd::Zero(h);
    Eigen::VectorXd c_prev = Eigen::VectorXd::Zero(h);
    for (Eigen::Index t = 0; t < steps; ++t) {
        const auto x = inputs.col(t);
        const Eigen::VectorXd f = sigmoid(model.w_f * x + model.u_f * h_prev + model.b_f);
        const Eigen::VectorXd i = sigmoid(model.w_i * x + model.u_i * h_prev + model.b_i);
        const Eigen::VectorXd o = sigmoid(model.w_o * x + model.u_o * h_prev + model.b_o);
        const Eigen::VectorXd cand =
            (model.w_c * x + model.u_c * h_prev + model.b_c).array().tanh().matrix();
        const Eigen::VectorXd c =
            (f.array() * c_prev.array() + i.array() * cand.array()).matrix();
        const Eigen::VectorXd h_t = (o.array() * c.array().tanh()).matrix();

        tape.f.col(t) = f;
        tape.i.col(t) = i;
        tape.o.col(t) = o;
        tape.cand.col(t) = cand;
        tape.c.col(t) = c;
        tape.h.col(t) = h_t;
        tape.logits.col(t) = model.head_w * h_t + model.head_b;

        h_prev = h_t;
        c_prev = c;
    }
    return tape;
}

Eigen::VectorXd lstm_backward(const LstmModel& model, const LstmTape& tape,
                              const Eigen::MatrixXd& dlogits) {
    const Eigen::Index h = model.hidden_dim;
    const Eigen::Index steps = tape.length();
    if (tape.h.rows() != h || tape.inputs.rows() != model.input_dim) {
        throw ConfigError("lstm_backward: tape does not match the model");
    }
    if (dlogits.rows() != kNumClasses || dlogits.cols() != steps) {
        throw ConfigError("lstm_backward: dlogits shape does not match the tape");
    }

    LstmModel grads;  // reuses the parameter layout for the gradient blocks
    grads.input_dim = model.input_dim;
    grads.hidden_dim = model.hidden_dim;
    grads.w_f.setZero(h, model.input_dim);
    grads.w_i.setZero(h, model.input_dim);
    grads.w_o.setZero(h, model.input_dim);
    grads.w_c.setZero(h, model.input_dim);
    grads.u_f.setZero(h, h);
    grads.u_i.setZero(h, h);
    grads.u_o.setZero(h, h);
    grads.u_c.setZero(h, h);
    grads.b_f.setZero(h);
    grads.b_i.setZero(h);
    grads.b_o.setZero(h);
    grads.b_c.setZero(h);
    grads.head_w.setZero(kNumClasses, h);
    grads.head_b.setZero();

    Eigen::ArrayXd dh_carry = Eigen::ArrayXd::Zero(h);
    Eigen::ArrayXd dc_carry = Eigen::ArrayXd::Zero(h);
    for (Eigen::Index t = steps - 1; t >= 0; --t) {
        const Eigen::ArrayXd f = tape.f.col(t).array();
        const Eigen::ArrayXd i = tape.i.col(t).array();
        const Eigen::ArrayXd o = tape.o.col(t).array();
        const Eigen::ArrayXd cand = tape.cand.col(t).array();
        const Eigen::ArrayXd tanh_c = tape.c.col(t).array().tanh();

        grads.head_w += dlogits.col(t) * tape.h.col(t).transpose();
        grads.head_b += dlogits.col(t);

        const Eigen::ArrayXd dh =
            (model.head_w.transpose() * dlogits.col(t)).array() + dh_carry;
        const Eigen::ArrayXd do_ = dh * tanh_c;
        const Eigen::ArrayXd dc = dh * o * (1.0 - tanh_c.square()) + dc_carry;
        Eigen::ArrayXd df = Eigen::ArrayXd::Zero(h);
        if (t > 0) df = dc * tape.c.col(t - 1).array();
        const Eigen::ArrayXd di = dc * cand;
        const Eigen::ArrayXd dcand = dc * i;

        const Eigen::VectorXd dz_f = (df * f * (1.0 - f)).matrix();
        const Eigen::VectorXd dz_i = (di * i * (1.0 - i)).matrix();
        const Eigen::VectorXd dz_o = (do_ * o * (1.0 - o)).matrix();
        const Eigen::VectorXd dz_c = (dcand * (1.0 - cand.square())).matrix();

        const auto x_t = tape.inputs.col(t).transpose();
        grads.w_f += dz_f * x_t;
        grads.w_i += dz_i * x_t;
        grads.w_o += dz_o * x_t;
        grads.w_c += dz_c * x_t;
        if (t > 0) {
            const auto h_prev = tape.h.col(t - 1).transpose();
            grads.u_f += dz_f * h_prev;
            grads.u_i += dz_i * h_prev;
            grads.u_o += dz_o * h_prev;
            grads.u_c += dz_c * h_prev;
        }
        grads.b_f += dz_f;
        grads.b_i += dz_i;
        grads.b_o += dz_o;
        grads.b_c += dz_c;

        dh_carry = (model.u_f.transpose() * dz_f + model.u_i.transpose() * dz_i +
                    model.u_o.transpose() * dz_o + model.u_c.transpose() * dz_c)
                       .array();
        dc_carry = dc * f;
    }
    return grads.parameter_vector();
}

LstmTrainResult train_lstm(const Dataset& train, const LstmOptions& options) {
    if (train.empty()) throw DataError("lstm training set is empty");
    if (options.iterations < 0) throw ConfigError("iterations must be >= 0");

    const Scaler scaler = Scaler::fit(train.feature_matrix());

    std::vector<Eigen::MatrixXd> session_inputs;
    std::vector<std::vector<int>> session_targets;
    std::size_t total_steps = 0;
    for (const auto& seq : train.sequences) {
        if (seq.frames.empty()) continue;
        session_inputs.push_back(scaled_inputs(scaler, seq.frames));
        std::vector<int> targets(seq.size());
        for (std::size_t i = 0; i < seq.size(); ++i) {
            targets[i] = static_cast<int>(seq.labels[i]);
        }
        session_targets.push_back(std::move(targets));
        total_steps += seq.size();
    }

    LstmModel model = LstmModel::init(kNumFeatures, options.hidden_dim, options.seed);
    model.scaler = scaler;
    Eigen::VectorXd params = model.parameter_vector();
    AdamOptimizer adam(options.learning_rate, params.size());

    LstmTrainResult result;
    result.loss_history.reserve(options.iterations);
    const double inv_n = 1.0 / static_cast<double>(total_steps);

    for (int it = 0; it < options.iterations; ++it) {
        model.set_parameters(params);
        Eigen::VectorXd grad = Eigen::VectorXd::Zero(params.size());
        double loss = 0.0;
        for (std::size_t s = 0; s < session_inputs.size(); ++s) {
            const LstmTape tape = lstm_forward(model, session_inputs[s]);
            const auto& targets = session_targets[s];
            Eigen::MatrixXd dlogits(kNumClasses, tape.length());
            for (Eigen::Index t = 0; t < tape.length(); ++t) {
                auto [step_loss, step_grad] = softmax_cross_entropy(
                    tape.logits.col(t),
                    static_cast<PollutantLabel>(targets[static_cast<std::size_t>(t)]));
                loss += step_loss;
                dlogits.col(t) = step_grad * inv_n;
            }
            grad += lstm_backward(model, tape, dlogits);
        }
        result.loss_history.push_back(loss * inv_n);
        adam.step(params, grad);
    }
    model.set_parameters(params);
    result.model = std::move(model);
    return result;
}

ProbVector lstm_step(const LstmModel& model, LstmState& state, const FeatureVector& x) {
    if (model.input_dim != kNumFeatures) {
        throw ConfigError("lstm_step expects a ratio-feature sized input layer");
    }
    const FeatureVector scaled = model.scaler.transform(x);
    Eigen::VectorXd xv(kNumFeatures);
    for (int d = 0; d < kNumFeatures; ++d) xv[d] = scaled[d];

    const Eigen::VectorXd f = sigmoid(model.w_f * xv + model.u_f * state.h + model.b_f);
    const Eigen::VectorXd i = sigmoid(model.w_i * xv + model.u_i * state.h + model.b_i);
    const Eigen::VectorXd o = sigmoid(model.w_o * xv + model.u_o * state.h + model.b_o);
    const Eigen::VectorXd cand =
        (model.w_c * xv + model.u_c * state.h + model.b_c).array().tanh().matrix();
    state.c = (f.array() * state.c.array() + i.array() * cand.array()).matrix();
    state.h = (o.array() * state.c.array().tanh()).matrix();
    return softmax(model.head_w * state.h + model.head_b);
}

std::vector<PollutantLabel> predict_sequence(const LstmModel& model,
                                             std::span<const SensorFrame> frames) {
    std::vector<PollutantLabel> out;
    out.reserve(frames.size());
    LstmState state(model.hidden_dim);
    for (const auto& frame : frames) {
        const ProbVector probs = lstm_step(model, state, compute_ratios(frame));
        out.push_back(static_cast<PollutantLabel>(argmax_class(probs)));
    }
    return out;
}

}  // namespace pmclass
