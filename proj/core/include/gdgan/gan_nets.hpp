#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <torch/nn.h>
#include <ATen/core/Generator.h>

namespace gdgan {

/// Output of a critic/discriminator. `general_logits` holds one [n, K_i]
/// tensor per general label; `detailed_logits` is [n, D] (independent binary
/// logits) or undefined when the network has no detailed head.
struct CriticOutput {
    torch::Tensor score;
    std::vector<torch::Tensor> general_logits;
    torch::Tensor detailed_logits;
};

/// DCGAN-style critic for 64×64 inputs: four stride-2 4×4 convolutions with
/// per-sample layer normalization (GroupNorm with one group) and leaky-ReLU 0.2.
/// No batch statistics are used, so each sample's output depends only on itself.
class CriticImpl : public torch::nn::Module {
public:
    CriticImpl(int width, std::vector<int> general_cardinalities, int detailed_count);

    CriticOutput forward(const torch::Tensor& images);
    /// Scalar head only; cheaper when class logits are not needed.
    torch::Tensor score(const torch::Tensor& images);

    torch::nn::Linear& score_head() { return score_head_; }
    torch::nn::Linear& general_head() { return general_head_; }
    torch::nn::Linear& detailed_head() { return detailed_head_; }
    const std::vector<int>& general_cardinalities() const { return general_cards_; }

private:
    torch::Tensor features(const torch::Tensor& images);

    std::vector<int> general_cards_;
    int detailed_count_;
    torch::nn::Conv2d c1_{nullptr}, c2_{nullptr}, c3_{nullptr}, c4_{nullptr};
    torch::nn::GroupNorm n2_{nullptr}, n3_{nullptr}, n4_{nullptr};
    torch::nn::Linear score_head_{nullptr}, general_head_{nullptr}, detailed_head_{nullptr};
};
TORCH_MODULE(Critic);

/// Noise-to-image generator (stage 1 and the ACGAN baseline): the condition
/// vector is concatenated to z, projected to 4×4×(8·width) and upsampled by
/// four stride-2 transposed convolutions to 64×64 with a tanh head.
class NoiseGeneratorImpl : public torch::nn::Module {
public:
    NoiseGeneratorImpl(int noise_dim, int condition_dim, int width);

    torch::Tensor forward(const torch::Tensor& z, const torch::Tensor& condition);

private:
    int width_;
    torch::nn::Linear project_{nullptr};
    torch::nn::GroupNorm n0_{nullptr}, n1_{nullptr}, n2_{nullptr}, n3_{nullptr};
    torch::nn::ConvTranspose2d t1_{nullptr}, t2_{nullptr}, t3_{nullptr}, t4_{nullptr};
};
TORCH_MODULE(NoiseGenerator);

/// Image-to-image generator (stage 2): a three-level encoder–decoder with skip
/// connections. Detailed labels enter as constant channels broadcast over the image.
class RefinerImpl : public torch::nn::Module {
public:
    RefinerImpl(int detailed_count, int width);

    torch::Tensor forward(const torch::Tensor& images, const torch::Tensor& detailed);

    int input_channels() const { return 1 + detailed_count_; }

private:
    int detailed_count_;
    torch::nn::Conv2d e1_{nullptr}, e2_{nullptr}, e3_{nullptr}, out_{nullptr};
    torch::nn::GroupNorm ne2_{nullptr}, ne3_{nullptr}, nd2_{nullptr}, nd1_{nullptr}, nd0_{nullptr};
    torch::nn::ConvTranspose2d d2_{nullptr}, d1_{nullptr}, d0_{nullptr};
};
TORCH_MODULE(Refiner);

/// Re-initializes every parameter of `module` from `gen`: conv/linear weights
/// ~ N(0, std), normalization scales 1, all biases 0.
void init_parameters(torch::nn::Module& module, at::Generator& gen, double weight_std = 0.02);

/// Broadcasts [n, D] labels to [n, D, h, w] constant planes.
torch::Tensor label_planes(const torch::Tensor& labels, std::int64_t height, std::int64_t width);

/// [n, G] integer labels -> [n, sum(K_i)] concatenated one-hot encoding.
torch::Tensor one_hot_general(const torch::Tensor& general, const std::vector<int>& cardinalities,
                              torch::Dtype dtype = torch::kFloat32);

}  // namespace gdgan
