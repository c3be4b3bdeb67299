#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include <torch/nn.h>

#include "gdgan/metrics.hpp"

namespace gdgan {

/// Five-way "which mark" classifier for toy images (class 0 = no mark,
/// class k = mark k−1). Plays the role of the pretrained Inception network
/// when scoring toy-scale generators.
class ToyMarkNetImpl : public torch::nn::Module {
public:
    ToyMarkNetImpl();
    torch::Tensor forward(const torch::Tensor& images);

private:
    torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr};
    torch::nn::Linear fc_{nullptr};
};
TORCH_MODULE(ToyMarkNet);

struct ToyOracleRecipe {
    std::uint64_t seed = 0;
    std::int64_t images_per_class = 400;
    int epochs = 4;
    std::int64_t batch_size = 64;
    double learning_rate = 1e-3;
};

class ToyOracle final : public LabelProbabilityOracle {
public:
    static constexpr int kClasses = 5;

    /// Trains from freshly rendered single-mark images; deterministic per recipe.
    static ToyOracle train(const ToyOracleRecipe& recipe, double* final_accuracy = nullptr);
    static ToyOracle load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

    torch::Tensor probabilities(const torch::Tensor& images) override;
    int num_classes() const override { return kClasses; }
    std::string descriptor() const override { return "toy-mark-cnn (serial)"; }

private:
    ToyOracle();
    ToyMarkNet net_;
};

}  // namespace gdgan
