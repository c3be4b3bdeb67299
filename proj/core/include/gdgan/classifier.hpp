#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <torch/nn.h>

#include "gdgan/gan_bundle.hpp"
#include "gdgan/image_store.hpp"
#include "gdgan/labels.hpp"
#include "gdgan/manifest.hpp"
#include "gdgan/metrics.hpp"

namespace gdgan {

/// VGG-19 layout (16 3×3 convolutions in five pooled blocks) with a 1-channel
/// input and one logit per detailed label. At 64×64 the last block leaves a
/// 2×2 map, so the dense head is 4·(8·width) → dense → dense → labels.
struct ClassifierArch {
    int width = 64;
    int dense = 512;
    int num_labels = 14;
    bool batch_norm = true;

    std::string to_text() const;
    static ClassifierArch from_text(const std::string& text);
    std::string descriptor() const;
};

class VggNetImpl : public torch::nn::Module {
public:
    explicit VggNetImpl(const ClassifierArch& arch);
    torch::Tensor forward(const torch::Tensor& images);

private:
    torch::nn::Sequential features_{nullptr};
    torch::nn::Sequential head_{nullptr};
};
TORCH_MODULE(VggNet);

struct ClassifierConfig {
    double learning_rate = 0.0002;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    int epochs = 10;
    std::int64_t batch_size = 64;
    std::uint64_t seed = 0;

    std::string to_json() const;
    static ClassifierConfig from_json(const std::string& text);
};

struct ClassifierBundle {
    ClassifierArch arch;
    VggNet net{nullptr};
    ClassifierConfig train_config;

    ClassifierBundle(ClassifierArch arch, std::uint64_t init_seed);

    std::vector<NamedTensor> named_parameters() const;
    /// Logits [n, labels] in eval mode, computed in chunks.
    torch::Tensor predict_logits(const torch::Tensor& images, std::int64_t chunk = 256);

    void save(const std::filesystem::path& path) const;
    /// Throws VersionMismatch when the file is not a classifier checkpoint.
    static ClassifierBundle load(const std::filesystem::path& path);
};

/// Images [n,1,64,64] with detailed labels [n, D] and the row ids.
struct LabeledSet {
    torch::Tensor images;
    torch::Tensor labels;
    std::vector<std::string> ids;
    std::vector<std::string> sources;

    std::int64_t size() const { return images.defined() ? images.size(0) : 0; }
};

/// Loads every manifest row's source image from `store`.
LabeledSet load_labeled_set(const TrainingManifest& manifest, const ImageStore& store);
LabeledSet load_labeled_set(const std::vector<LabelRecord>& records, const ImageStore& store);

struct EpochRecord {
    int epoch = 0;
    double train_loss = 0.0;
    double validation_mean_auc = 0.0;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    int best_epoch = -1;

    std::string to_json() const;
};

/// Mean AUC over labels that have both classes present; NaN when none do.
double mean_auc(const torch::Tensor& logits, const torch::Tensor& labels);

/// Multi-label sigmoid BCE (summed over labels), Adam, per-epoch shuffling.
/// The returned parameters are those of the epoch with the best validation mean
/// AUC. Throws DivergenceDetected on a non-finite loss and BadArgument when
/// train and validation share a source image.
ClassifierBundle train_classifier(const ClassifierArch& arch, const LabeledSet& train, const LabeledSet& validation,
                                  const ClassifierConfig& config, TrainHistory* history = nullptr);

struct EvaluationResult {
    std::map<std::string, RocCurve> per_label;
    std::string focus_label;
    double focus_auc = 0.0;
};

/// Per-label ROC from logits; throws SingleClass(label) for a label without both classes.
EvaluationResult evaluate_logits(const torch::Tensor& logits, const torch::Tensor& labels, const LabelSchema& schema,
                                 const std::string& focus_label);

/// Scores the test set only. When `expected_test_hash` is given the test ids
/// must hash to it (guards against an augmented or altered test split).
EvaluationResult evaluate_classifier(ClassifierBundle& bundle, const std::vector<LabelRecord>& test,
                                     const ImageStore& store, const LabelSchema& schema,
                                     const std::string& focus_label,
                                     std::optional<std::uint64_t> expected_test_hash = std::nullopt);

}  // namespace gdgan
