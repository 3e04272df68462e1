#include "stance/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "stance/error.hpp"
#include "stance/num_format.hpp"
#include "stance/rng.hpp"

namespace stance {

PredictionMatrix align_predictions(const std::vector<ProbList>& model_outputs) {
    if (model_outputs.empty()) throw DataError("no model outputs to align");

    PredictionMatrix m;
    m.n_models = model_outputs.size();
    const ProbList& first = model_outputs.front();
    m.row_ids.reserve(first.size());
    for (const auto& [id, _] : first) m.row_ids.push_back(id);

    m.cells.assign(first.size() * m.n_models, ProbVector{});
    for (std::size_t r = 0; r < first.size(); ++r) m.cells[r * m.n_models] = first[r].second;

    for (std::size_t j = 1; j < m.n_models; ++j) {
        const ProbList& outputs = model_outputs[j];
        if (outputs.size() != first.size())
            throw DataError("model " + std::to_string(j) + " has " +
                            std::to_string(outputs.size()) + " rows, expected " +
                            std::to_string(first.size()));
        std::unordered_map<std::string, const ProbVector*> by_id;
        by_id.reserve(outputs.size());
        for (const auto& [id, v] : outputs) by_id.emplace(id, &v);
        for (std::size_t r = 0; r < m.row_ids.size(); ++r) {
            auto it = by_id.find(m.row_ids[r]);
            if (it == by_id.end())
                throw DataError("model " + std::to_string(j) + " is missing row '" +
                                m.row_ids[r] + "'");
            m.cells[r * m.n_models + j] = *it->second;
        }
    }
    return m;
}

StackedFeatures stack_features(const PredictionMatrix& m) {
    StackedFeatures f;
    f.row_ids = m.row_ids;
    f.n_cols = 3 * m.n_models;
    f.values.reserve(f.row_ids.size() * f.n_cols);
    for (std::size_t r = 0; r < f.row_ids.size(); ++r)
        for (std::size_t j = 0; j < m.n_models; ++j) {
            const ProbVector& v = m.at(r, j);
            f.values.push_back(v[0]);
            f.values.push_back(v[1]);
            f.values.push_back(v[2]);
        }
    return f;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw DataError("learning_rate must be positive");
    if (max_epochs == 0) throw DataError("max_epochs must be positive");
    if (batch_size == 0) throw DataError("batch_size must be positive");
    if (patience > max_epochs) throw DataError("patience must not exceed max_epochs");
}

namespace {

// logits -> probabilities and log-probabilities, shifted by the max logit.
void softmax3(const double* logits, double* probs, double* logprobs) {
    const double m = std::max(logits[0], std::max(logits[1], logits[2]));
    double sum = 0.0;
    for (int c = 0; c < 3; ++c) sum += std::exp(logits[c] - m);
    const double lse = m + std::log(sum);
    for (int c = 0; c < 3; ++c) {
        logprobs[c] = logits[c] - lse;
        probs[c] = std::exp(logprobs[c]);
    }
}

struct Forward {
    std::vector<double> hidden;  // tanh activations, when a hidden layer exists
    double logits[3];
};

void forward_row(const StackerModel& model, std::span<const double> x, Forward& f) {
    const std::size_t nf = model.n_features;
    if (model.hidden_width == 0) {
        for (int c = 0; c < 3; ++c) {
            double z = model.w1[nf * 3 + c];  // bias row
            for (std::size_t i = 0; i < nf; ++i) z += model.w1[i * 3 + c] * x[i];
            f.logits[c] = z;
        }
        return;
    }
    const std::size_t h = model.hidden_width;
    f.hidden.resize(h);
    for (std::size_t j = 0; j < h; ++j) {
        double z = model.w1[nf * h + j];
        for (std::size_t i = 0; i < nf; ++i) z += model.w1[i * h + j] * x[i];
        f.hidden[j] = std::tanh(z);
    }
    for (int c = 0; c < 3; ++c) {
        double z = model.w2[h * 3 + c];
        for (std::size_t j = 0; j < h; ++j) z += model.w2[j * 3 + c] * f.hidden[j];
        f.logits[c] = z;
    }
}

}  // namespace

ProbVector StackerModel::predict_row(std::span<const double> features) const {
    Forward f;
    forward_row(*this, features, f);
    ProbVector out;
    double logprobs[3];
    softmax3(f.logits, out.p.data(), logprobs);
    return out;
}

double stacker_loss_and_gradient(const StackerModel& model, const StackedFeatures& feats,
                                 std::span<const std::size_t> rows,
                                 const std::vector<ProbVector>& targets,
                                 std::vector<double>& grad) {
    grad.assign(model.n_parameters(), 0.0);
    if (rows.empty()) return 0.0;

    const std::size_t nf = model.n_features;
    const std::size_t h = model.hidden_width;
    const double inv_n = 1.0 / static_cast<double>(rows.size());
    double* g1 = grad.data();
    double* g2 = grad.data() + model.w1.size();

    double loss = 0.0;
    Forward f;
    for (std::size_t r : rows) {
        const auto x = feats.row(r);
        forward_row(model, x, f);
        double probs[3], logprobs[3];
        softmax3(f.logits, probs, logprobs);

        const ProbVector& t = targets[r];
        double dlogits[3];
        for (int c = 0; c < 3; ++c) {
            loss -= t[c] * logprobs[c] * inv_n;
            dlogits[c] = (probs[c] - t[c]) * inv_n;
        }

        if (h == 0) {
            for (int c = 0; c < 3; ++c) {
                for (std::size_t i = 0; i < nf; ++i) g1[i * 3 + c] += x[i] * dlogits[c];
                g1[nf * 3 + c] += dlogits[c];
            }
        } else {
            std::vector<double> dhidden(h, 0.0);
            for (int c = 0; c < 3; ++c) {
                for (std::size_t j = 0; j < h; ++j) {
                    g2[j * 3 + c] += f.hidden[j] * dlogits[c];
                    dhidden[j] += model.w2[j * 3 + c] * dlogits[c];
                }
                g2[h * 3 + c] += dlogits[c];
            }
            for (std::size_t j = 0; j < h; ++j) {
                const double da = (1.0 - f.hidden[j] * f.hidden[j]) * dhidden[j];
                for (std::size_t i = 0; i < nf; ++i) g1[i * h + j] += x[i] * da;
                g1[nf * h + j] += da;
            }
        }
    }
    return loss;
}

namespace {

double validation_accuracy(const StackerModel& model, const StackedFeatures& val,
                           const std::vector<Label>& val_labels) {
    std::size_t correct = 0;
    for (std::size_t r = 0; r < val.n_rows(); ++r)
        if (model.predict_row(val.row(r)).argmax() == val_labels[r]) ++correct;
    return static_cast<double>(correct) / static_cast<double>(val.n_rows());
}

void check_finite(const StackedFeatures& f, const char* which) {
    for (double v : f.values)
        if (!std::isfinite(v))
            throw DataError(std::string("non-finite feature value in ") + which + " features");
}

}  // namespace

StackerModel train_stacker(const StackedFeatures& train, const std::vector<ProbVector>& train_targets,
                           const StackedFeatures& val, const std::vector<Label>& val_labels,
                           const TrainConfig& cfg) {
    cfg.validate();
    if (train.n_rows() == 0) throw DataError("empty training set");
    if (val.n_rows() == 0) throw DataError("empty validation set");
    if (train_targets.size() != train.n_rows())
        throw DataError("training targets do not align with feature rows");
    if (val_labels.size() != val.n_rows())
        throw DataError("validation labels do not align with feature rows");
    if (val.n_cols != train.n_cols) throw DataError("train/val feature width mismatch");
    check_finite(train, "train");
    check_finite(val, "validation");
    for (const auto& t : train_targets)
        if (!t.valid(1e-6)) throw DataError("training target is not a probability vector");
    {
        std::unordered_set<std::string> train_ids(train.row_ids.begin(), train.row_ids.end());
        for (const auto& id : val.row_ids)
            if (train_ids.count(id))
                throw DataError("row '" + id + "' appears in both train and validation");
    }

    StackerModel model;
    model.n_features = train.n_cols;
    model.hidden_width = cfg.hidden_width;
    model.seed = cfg.seed;

    Rng rng(cfg.seed);
    if (cfg.hidden_width == 0) {
        model.w1.assign((model.n_features + 1) * 3, 0.0);
    } else {
        const std::size_t h = cfg.hidden_width;
        model.w1.resize((model.n_features + 1) * h);
        model.w2.resize((h + 1) * 3);
        const double r1 = 1.0 / std::sqrt(static_cast<double>(model.n_features));
        const double r2 = 1.0 / std::sqrt(static_cast<double>(h));
        for (double& w : model.w1) w = rng.uniform(-r1, r1);
        for (double& w : model.w2) w = rng.uniform(-r2, r2);
    }

    std::vector<std::size_t> order(train.n_rows());
    std::iota(order.begin(), order.end(), std::size_t{0});

    StackerModel best = model;
    double best_acc = -1.0;
    std::size_t since_improve = 0;
    std::size_t epochs_run = 0;
    std::vector<double> grad;

    for (std::size_t epoch = 0; epoch < cfg.max_epochs; ++epoch) {
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t len = std::min(cfg.batch_size, order.size() - start);
            std::span<const std::size_t> batch(order.data() + start, len);
            stacker_loss_and_gradient(model, train, batch, train_targets, grad);
            for (std::size_t k = 0; k < model.w1.size(); ++k)
                model.w1[k] -= cfg.learning_rate * grad[k];
            for (std::size_t k = 0; k < model.w2.size(); ++k)
                model.w2[k] -= cfg.learning_rate * grad[model.w1.size() + k];
        }
        ++epochs_run;

        const double acc = validation_accuracy(model, val, val_labels);
        if (acc > best_acc) {
            best_acc = acc;
            best = model;
            since_improve = 0;
        } else {
            ++since_improve;
        }
        if (since_improve >= cfg.patience) break;
    }

    best.epochs_run = epochs_run;
    best.best_val_accuracy = best_acc;
    return best;
}

ProbList stacker_predict(const StackerModel& model, const StackedFeatures& feats) {
    if (feats.n_cols != model.n_features)
        throw DataError("feature width " + std::to_string(feats.n_cols) +
                        " does not match model width " + std::to_string(model.n_features));
    ProbList out;
    out.reserve(feats.n_rows());
    for (std::size_t r = 0; r < feats.n_rows(); ++r)
        out.emplace_back(feats.row_ids[r], model.predict_row(feats.row(r)));
    return out;
}

void save_stacker(const std::filesystem::path& path, const StackerModel& model) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write file: " + path.string());
    const std::size_t out_width = model.hidden_width == 0 ? 3 : model.hidden_width;
    out << "stacker-model v1\n";
    out << "n_models " << model.n_models() << "\n";
    out << "hidden_width " << model.hidden_width << "\n";
    out << "seed " << model.seed << "\n";
    out << "epochs_run " << model.epochs_run << "\n";
    out << "best_val_accuracy " << format_double(model.best_val_accuracy) << "\n";
    out << "w1 " << model.n_features + 1 << " " << out_width << "\n";
    for (std::size_t r = 0; r <= model.n_features; ++r) {
        for (std::size_t c = 0; c < out_width; ++c) {
            if (c) out << ' ';
            out << format_double(model.w1[r * out_width + c]);
        }
        out << '\n';
    }
    const std::size_t w2_rows = model.hidden_width == 0 ? 0 : model.hidden_width + 1;
    out << "w2 " << w2_rows << " " << (w2_rows ? 3 : 0) << "\n";
    for (std::size_t r = 0; r < w2_rows; ++r) {
        for (std::size_t c = 0; c < 3; ++c) {
            if (c) out << ' ';
            out << format_double(model.w2[r * 3 + c]);
        }
        out << '\n';
    }
}

namespace {

std::string expect_line(std::istream& in, const std::string& origin) {
    std::string line;
    if (!std::getline(in, line)) throw DataError(origin + ": truncated model file");
    return line;
}

std::uint64_t parse_header_int(const std::string& line, const std::string& key,
                               const std::string& origin) {
    std::istringstream ss(line);
    std::string k;
    std::uint64_t v = 0;
    if (!(ss >> k >> v) || k != key)
        throw DataError(origin + ": expected '" + key + " <n>', got '" + line + "'");
    return v;
}

}  // namespace

StackerModel load_stacker(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    const std::string origin = path.string();

    if (expect_line(in, origin) != "stacker-model v1")
        throw DataError(origin + ": not a v1 stacker model file");

    StackerModel model;
    const std::uint64_t n_models = parse_header_int(expect_line(in, origin), "n_models", origin);
    model.n_features = static_cast<std::size_t>(n_models) * 3;
    model.hidden_width =
        static_cast<std::size_t>(parse_header_int(expect_line(in, origin), "hidden_width", origin));
    model.seed = parse_header_int(expect_line(in, origin), "seed", origin);
    model.epochs_run =
        static_cast<std::size_t>(parse_header_int(expect_line(in, origin), "epochs_run", origin));
    {
        std::istringstream ss(expect_line(in, origin));
        std::string k, v;
        if (!(ss >> k >> v) || k != "best_val_accuracy")
            throw DataError(origin + ": expected best_val_accuracy line");
        model.best_val_accuracy = parse_double(v, origin + ": best_val_accuracy");
    }

    auto read_matrix = [&](const std::string& name, std::vector<double>& w, std::size_t& rows,
                           std::size_t& cols) {
        std::istringstream ss(expect_line(in, origin));
        std::string k;
        if (!(ss >> k >> rows >> cols) || k != name)
            throw DataError(origin + ": expected '" + name + " <rows> <cols>' header");
        w.resize(rows * cols);
        for (std::size_t r = 0; r < rows; ++r) {
            std::istringstream row(expect_line(in, origin));
            std::string cell;
            for (std::size_t c = 0; c < cols; ++c) {
                if (!(row >> cell))
                    throw DataError(origin + ": short row in " + name);
                w[r * cols + c] = parse_double(cell, origin + ": " + name);
            }
        }
    };

    std::size_t rows = 0, cols = 0;
    read_matrix("w1", model.w1, rows, cols);
    const std::size_t out_width = model.hidden_width == 0 ? 3 : model.hidden_width;
    if (rows != model.n_features + 1 || cols != out_width)
        throw DataError(origin + ": w1 dimensions do not match the header");
    read_matrix("w2", model.w2, rows, cols);
    if (model.hidden_width == 0) {
        if (!model.w2.empty()) throw DataError(origin + ": unexpected w2 for a linear model");
    } else if (rows != model.hidden_width + 1 || cols != 3) {
        throw DataError(origin + ": w2 dimensions do not match the header");
    }
    for (const auto* w : {&model.w1, &model.w2})
        for (double v : *w)
            if (!std::isfinite(v)) throw DataError(origin + ": non-finite weight");
    return model;
}

}  // namespace stance
