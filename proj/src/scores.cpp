#include "oodgen/scores.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "oodgen/errors.hpp"
#include "oodgen/rng.hpp"

namespace oodgen {

namespace {

void softmax_row(std::span<const double> logits, std::span<double> out) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp(logits[i] - m);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
}

bool row_finite(std::span<const double> row) {
    for (double v : row) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

// Distance from one normalized embedding to its k-th nearest bank row.
// Returns the index of the selected neighbor through *neighbor.
double knn_of_row(const EmbeddingBank& bank, std::span<const double> z,
                  std::size_t* neighbor = nullptr) {
    std::vector<double> d2(bank.size());
    for (std::size_t i = 0; i < bank.size(); ++i) {
        const double* b = bank.vectors.data.data() + i * bank.vectors.cols;
        double acc = 0.0;
        for (std::size_t c = 0; c < bank.vectors.cols; ++c) {
            const double diff = z[c] - b[c];
            acc += diff * diff;
        }
        d2[i] = acc;
    }
    std::vector<std::size_t> idx(bank.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::nth_element(idx.begin(), idx.begin() + (bank.k - 1), idx.end(),
                     [&](std::size_t a, std::size_t b) { return d2[a] < d2[b]; });
    const std::size_t sel = idx[bank.k - 1];
    if (neighbor) *neighbor = sel;
    return std::sqrt(d2[sel]);
}

}  // namespace

std::string_view score_kind_name(ScoreKind k) {
    return k == ScoreKind::image_energy ? "image_energy" : "feature_knn";
}

ScoreKind score_kind_from_name(std::string_view name) {
    if (name == "image_energy") return ScoreKind::image_energy;
    if (name == "feature_knn") return ScoreKind::feature_knn;
    throw ValueError("unknown score kind: " + std::string(name));
}

Classifier train_classifier(const LabeledDataset& train, const ClassifierTrainConfig& config,
                            TrainLog* log) {
    if (train.size() == 0) throw ValueError("train_classifier: empty dataset");
    Rng rng(config.seed);
    const std::size_t in_dim = train.points.cols;
    const std::size_t out_dim = static_cast<std::size_t>(train.num_classes);
    const std::size_t dims[] = {in_dim, config.hidden, config.hidden, config.embed, out_dim};
    const Activation acts[] = {Activation::relu, Activation::relu, Activation::relu,
                               Activation::identity};
    Classifier clf;
    clf.net = make_mlp(dims, acts, rng);

    SgdMomentum opt(config.lr, config.momentum, 0.0);
    SgdMomentum::MlpState state;

    const std::size_t n = train.size();
    const std::size_t batch = std::min(config.batch, n);
    const std::size_t steps = (n + batch - 1) / batch;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        for (std::size_t i = n; i > 1; --i) {
            std::swap(order[i - 1], order[rng.uniform_index(i)]);
        }
        double epoch_loss = 0.0;
        for (std::size_t step = 0; step < steps; ++step) {
            const std::size_t b0 = step * batch;
            const std::size_t bs = std::min(batch, n - b0);
            DenseMatrix x(bs, in_dim);
            for (std::size_t r = 0; r < bs; ++r) x.set_row(r, train.points, order[b0 + r]);
            auto cache = clf.net.forward(x);
            const auto& logits = cache.output();

            DenseMatrix upstream(bs, out_dim);
            double loss = 0.0;
            std::vector<double> probs(out_dim);
            for (std::size_t r = 0; r < bs; ++r) {
                const int label = train.labels[order[b0 + r]];
                softmax_row(logits.row(r), probs);
                loss -= std::log(std::max(probs[label], 1e-300));
                for (std::size_t c = 0; c < out_dim; ++c) {
                    upstream(r, c) = probs[c] / static_cast<double>(bs);
                }
                upstream(r, static_cast<std::size_t>(label)) -= 1.0 / static_cast<double>(bs);
            }
            epoch_loss += loss;
            auto grads = clf.net.param_grad(cache, upstream);
            opt.step(clf.net, grads, state);
        }
        if (log) log->epoch_loss.push_back(epoch_loss / static_cast<double>(n));
    }
    return clf;
}

double energy(std::span<const double> logits) {
    if (logits.empty()) throw ValueError("energy: empty logits");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - m);
    return -(m + std::log(sum));
}

std::vector<double> energies(const Classifier& clf, const DenseMatrix& x) {
    const DenseMatrix logits = clf.logits(x);
    std::vector<double> out(x.rows);
    for (std::size_t r = 0; r < x.rows; ++r) out[r] = energy(logits.row(r));
    return out;
}

DenseMatrix grad_energy_wrt_input(const Classifier& clf, const DenseMatrix& x) {
    auto cache = clf.net.forward(x);
    const auto& logits = cache.output();
    DenseMatrix upstream(logits.rows, logits.cols);
    std::vector<double> probs(logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        softmax_row(logits.row(r), probs);
        for (std::size_t c = 0; c < logits.cols; ++c) upstream(r, c) = -probs[c];
    }
    return clf.net.input_grad(cache, upstream);
}

EmbeddingBank build_bank(const Classifier& clf, const DenseMatrix& id_points, std::size_t k) {
    if (id_points.rows == 0) throw ValueError("build_bank: empty point set");
    if (k < 1 || k > id_points.rows) throw ValueError("build_bank: need 1 <= k <= n");
    auto cache = clf.net.forward(id_points);
    const DenseMatrix& emb = cache.post[clf.embed_layer()];
    EmbeddingBank bank;
    bank.k = k;
    bank.vectors = emb;
    for (std::size_t r = 0; r < emb.rows; ++r) {
        auto row = bank.vectors.row(r);
        double norm = 0.0;
        for (double v : row) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            throw NumericError("build_bank: degenerate (zero-norm) embedding at row " +
                               std::to_string(r));
        }
        for (auto& v : row) v /= norm;
    }
    return bank;
}

std::vector<double> knn_distances(const EmbeddingBank& bank, const Classifier& clf,
                                  const DenseMatrix& x) {
    if (bank.size() == 0) throw ValueError("knn_distances: empty bank");
    auto cache = clf.net.forward(x);
    const DenseMatrix& emb = cache.post[clf.embed_layer()];
    std::vector<double> out(x.rows);
    std::vector<double> z(emb.cols);
    for (std::size_t r = 0; r < x.rows; ++r) {
        auto f = emb.row(r);
        double norm = 0.0;
        for (double v : f) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            throw NumericError("knn_distances: degenerate (zero-norm) embedding at row " +
                               std::to_string(r));
        }
        for (std::size_t c = 0; c < emb.cols; ++c) z[c] = f[c] / norm;
        out[r] = knn_of_row(bank, z);
    }
    return out;
}

namespace {

// Shared core of the strict op and the guidance-path evaluation. When strict,
// degenerate rows throw; otherwise they produce NaN values and zero gradients.
ScoreEval knn_value_and_grad(const Classifier& clf, const EmbeddingBank& bank,
                             const DenseMatrix& x, double feat_scale, bool strict) {
    auto cache = clf.net.forward(x);
    const DenseMatrix& emb = cache.post[clf.embed_layer()];
    const std::size_t e = emb.cols;
    ScoreEval eval;
    eval.value.assign(x.rows, std::numeric_limits<double>::quiet_NaN());
    DenseMatrix upstream(x.rows, e);  // gradient w.r.t. the embedding layer output
    std::vector<double> z(e);
    for (std::size_t r = 0; r < x.rows; ++r) {
        auto f = emb.row(r);
        if (!row_finite(f)) {
            if (strict) throw NumericError("grad_knn: non-finite embedding");
            continue;
        }
        double norm = 0.0;
        for (double v : f) norm += v * v;
        norm = std::sqrt(norm);
        if (norm < 1e-12) {
            if (strict) throw NumericError("grad_knn: degenerate (zero-norm) embedding");
            continue;
        }
        for (std::size_t c = 0; c < e; ++c) z[c] = f[c] / norm;
        std::size_t neighbor = 0;
        const double dist = knn_of_row(bank, z, &neighbor);
        eval.value[r] = feat_scale * dist;
        if (dist < 1e-9) {
            if (strict) throw NumericError("grad_knn: zero k-NN distance, gradient undefined");
            continue;  // subgradient 0 at the minimum
        }
        // dD/dz = (z - z_k)/D, then through z = f/|f|: (I - z z^T)/|f|.
        const double* zk = bank.vectors.data.data() + neighbor * e;
        double dot = 0.0;
        std::vector<double> dz(e);
        for (std::size_t c = 0; c < e; ++c) {
            dz[c] = (z[c] - zk[c]) / dist;
            dot += dz[c] * z[c];
        }
        for (std::size_t c = 0; c < e; ++c) {
            upstream(r, c) = feat_scale * (dz[c] - dot * z[c]) / norm;
        }
    }
    eval.grad = clf.net.input_grad_from(cache, upstream, clf.embed_layer());
    return eval;
}

}  // namespace

DenseMatrix grad_knn_wrt_input(const Classifier& clf, const EmbeddingBank& bank,
                               const DenseMatrix& x) {
    return knn_value_and_grad(clf, bank, x, 1.0, /*strict=*/true).grad;
}

ScoreEval score_and_grad(ScoreKind kind, const Classifier& clf, const EmbeddingBank* bank,
                         const DenseMatrix& x, double feat_scale) {
    if (kind == ScoreKind::feature_knn) {
        if (!bank) throw ValueError("score_and_grad: feature_knn target requires a bank");
        return knn_value_and_grad(clf, *bank, x, feat_scale, /*strict=*/false);
    }
    ScoreEval eval;
    eval.value.assign(x.rows, std::numeric_limits<double>::quiet_NaN());
    auto cache = clf.net.forward(x);
    const auto& logits = cache.output();
    DenseMatrix upstream(logits.rows, logits.cols);
    std::vector<double> probs(logits.cols);
    for (std::size_t r = 0; r < logits.rows; ++r) {
        auto row = logits.row(r);
        if (!row_finite(row)) continue;  // NaN value, zero upstream
        eval.value[r] = energy(row);
        softmax_row(row, probs);
        for (std::size_t c = 0; c < logits.cols; ++c) upstream(r, c) = -probs[c];
    }
    eval.grad = clf.net.input_grad(cache, upstream);
    return eval;
}

nlohmann::json bank_to_json(const EmbeddingBank& bank) {
    nlohmann::json doc;
    doc["k"] = bank.k;
    doc["dim"] = bank.vectors.cols;
    auto& rows = doc["vectors"] = nlohmann::json::array();
    for (std::size_t r = 0; r < bank.vectors.rows; ++r) {
        auto row = bank.vectors.row(r);
        rows.push_back(std::vector<double>(row.begin(), row.end()));
    }
    return doc;
}

EmbeddingBank bank_from_json(const nlohmann::json& doc) {
    EmbeddingBank bank;
    bank.k = doc.at("k").get<std::size_t>();
    const auto& rows = doc.at("vectors");
    const std::size_t dim = doc.at("dim").get<std::size_t>();
    bank.vectors = DenseMatrix(rows.size(), dim);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto row = rows.at(r).get<std::vector<double>>();
        if (row.size() != dim) throw ValueError("bank json: inconsistent vector length");
        for (std::size_t c = 0; c < dim; ++c) bank.vectors(r, c) = row[c];
    }
    if (bank.k < 1 || bank.k > bank.size()) throw ValueError("bank json: k out of range");
    return bank;
}

}  // namespace oodgen
