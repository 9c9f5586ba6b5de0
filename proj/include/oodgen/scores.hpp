#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oodgen/dataset.hpp"
#include "oodgen/matrix.hpp"
#include "oodgen/mlp.hpp"

namespace oodgen {

/// ID classifier with architecture in -> h -> h -> e -> C. The e-dim layer
/// output (post-activation) is the feature embedding; the final affine map
/// produces the logits. Both come out of one forward pass.
struct Classifier {
    Mlp net;

    std::size_t embed_layer() const { return net.layer_count() - 2; }
    std::size_t embed_dim() const { return net.layers[embed_layer()].out_dim(); }
    int num_classes() const { return static_cast<int>(net.output_dim()); }

    DenseMatrix logits(const DenseMatrix& x) const { return net.forward_output(x); }
};

struct ClassifierTrainConfig {
    std::size_t hidden = 64;
    std::size_t embed = 16;
    std::size_t epochs = 100;
    std::size_t batch = 128;
    double lr = 1e-3;
    double momentum = 0.9;
    std::uint64_t seed = 2;
};

/// Cross-entropy training on labeled ID data.
Classifier train_classifier(const LabeledDataset& train, const ClassifierTrainConfig& config,
                            TrainLog* log = nullptr);

/// Free energy E(x) = -log sum_k exp(f_k), via the max-shift identity.
double energy(std::span<const double> logits);

/// Per-row free energy of a batch of points.
std::vector<double> energies(const Classifier& clf, const DenseMatrix& x);

/// Exact gradient of energy(classifier(x)) with respect to x. The upstream
/// at the logits is -softmax(logits), which sums to -1 per sample.
DenseMatrix grad_energy_wrt_input(const Classifier& clf, const DenseMatrix& x);

/// Unit-normalized embeddings of ID training points plus the neighbor index k.
struct EmbeddingBank {
    DenseMatrix vectors;  // n x e, each row unit norm
    std::size_t k = 1;

    std::size_t size() const { return vectors.rows; }
};

/// Embeds id_points, unit-normalizes, and records k. Throws NumericError if
/// any embedding norm falls below 1e-12, and ValueError when k > n.
EmbeddingBank build_bank(const Classifier& clf, const DenseMatrix& id_points, std::size_t k);

/// Euclidean distance from each row's normalized embedding to its k-th
/// nearest bank row (full scan, ascending, 1-indexed).
std::vector<double> knn_distances(const EmbeddingBank& bank, const Classifier& clf,
                                  const DenseMatrix& x);

/// Exact chain-rule gradient of the k-NN distance through the normalization
/// z = f/|f|, with the selected neighbor held fixed. Throws NumericError when
/// any row's distance is below 1e-9 (the norm gradient is undefined there).
DenseMatrix grad_knn_wrt_input(const Classifier& clf, const EmbeddingBank& bank,
                               const DenseMatrix& x);

enum class ScoreKind { image_energy, feature_knn };

std::string_view score_kind_name(ScoreKind k);
ScoreKind score_kind_from_name(std::string_view name);

/// Batched score value + input gradient used by the guidance loop. feat_scale
/// multiplies the k-NN distance before differentiation (it is ignored by the
/// energy target). Rows that are non-finite, degenerate (zero embedding norm)
/// or at zero k-NN distance get a NaN value and a zero gradient instead of
/// throwing, so a diverged sampling chain can be detected and excluded by the
/// caller without bringing down the batch.
struct ScoreEval {
    std::vector<double> value;
    DenseMatrix grad;
};
ScoreEval score_and_grad(ScoreKind kind, const Classifier& clf, const EmbeddingBank* bank,
                         const DenseMatrix& x, double feat_scale);

nlohmann::json bank_to_json(const EmbeddingBank& bank);
EmbeddingBank bank_from_json(const nlohmann::json& doc);

}  // namespace oodgen
