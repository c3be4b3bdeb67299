#pragma once

#include <functional>
#include <string>

#include <ATen/core/Generator.h>
#include <torch/types.h>

#include "gdgan/gan_nets.hpp"

namespace gdgan {

/// Weights combining the loss components. Defaults: λ_gp = 10 (WGAN-GP),
/// unit class-NLL weights, reconstruction weight 10.
struct LossWeights {
    double lambda_gp = 10.0;
    double w_cls_general = 1.0;
    double w_cls_detailed = 1.0;
    double w_mse = 10.0;
};

/// Scalar loss components. `wasserstein_term` carries the adversarial term;
/// for the ACGAN baseline that is the standard (cross-entropy) GAN loss.
/// total = wasserstein + λ_gp·gp + w_general·general_nll + w_detailed·detailed_nll + w_mse·mse.
struct LossBreakdown {
    double wasserstein_term = 0.0;
    double gradient_penalty_term = 0.0;
    double general_class_nll = 0.0;
    double detailed_class_nll = 0.0;
    double reconstruction_mse = 0.0;
    double total = 0.0;

    double weighted_sum(const LossWeights& w) const;
    bool finite() const;
    std::string to_json() const;
};

/// Differentiable total plus its reported components.
struct LossResult {
    torch::Tensor total;
    LossBreakdown parts;
};

/// Maps an image batch to one score per image.
using ScoreFn = std::function<torch::Tensor(const torch::Tensor&)>;

/// Per-sample ‖∇ₓ D(x)‖₂ with a graph retained for higher-order gradients.
/// A critic whose output does not depend on x has zero gradient.
torch::Tensor input_gradient_norms(const ScoreFn& critic, const torch::Tensor& x);

/// x̂ = ε·real + (1−ε)·fake with ε ~ U[0,1] drawn per sample from `gen`.
torch::Tensor random_interpolates(const torch::Tensor& real, const torch::Tensor& fake, at::Generator& gen);

/// E[(‖∇ D(x̂)‖₂ − 1)²] over interpolates of real and fake. Differentiable w.r.t.
/// the critic's parameters. Throws ShapeMismatch when real/fake shapes differ.
torch::Tensor gradient_penalty(const ScoreFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               at::Generator& gen);
torch::Tensor gradient_penalty(Critic& critic, const torch::Tensor& real, const torch::Tensor& fake, at::Generator& gen);

/// Σ over general labels of the batch-mean cross-entropy.
torch::Tensor general_nll(const std::vector<torch::Tensor>& logits, const torch::Tensor& general);
/// Batch mean of the per-image sum of binary cross-entropies over detailed labels.
torch::Tensor detailed_nll(const torch::Tensor& logits, const torch::Tensor& detailed);

/// Stage-1 critic: mean D(fake) − mean D(real) + λ_gp·GP + w_general·NLL_real.
/// The class heads learn from real images only, so a generator that has not
/// yet rendered a label cannot teach them the wrong association.
/// `fake` should be detached from the generator graph.
LossResult stage1_critic_loss(Critic& critic, const torch::Tensor& real, const torch::Tensor& real_general,
                              const torch::Tensor& fake, const LossWeights& w, at::Generator& gen);

/// Stage-1 generator: −mean D(fake) + w_general·NLL(general heads on fake vs conditioning labels).
LossResult stage1_generator_loss(Critic& critic, const torch::Tensor& fake, const torch::Tensor& general,
                                 const LossWeights& w);

/// Stage-2 critic: the stage-1 form with the detailed head in place of the general heads.
LossResult stage2_critic_loss(Critic& critic, const torch::Tensor& real, const torch::Tensor& real_detailed,
                              const torch::Tensor& fake, const LossWeights& w, at::Generator& gen);

/// Stage-2 generator: −mean D₂(fake) + w_detailed·NLL(D₂ detailed head, c_d)
/// + w_general·NLL(D₁ general heads on fake, general used for the base images)
/// + w_mse·mean((fake − base)²). `stage1_critic` is treated as frozen.
LossResult stage2_generator_loss(Critic& critic, Critic& stage1_critic, const torch::Tensor& base,
                                 const torch::Tensor& fake, const torch::Tensor& detailed,
                                 const torch::Tensor& general, const LossWeights& w);

/// ACGAN discriminator: BCE(real→1) + BCE(fake→0) + class NLLs on real and fake.
LossResult acgan_discriminator_loss(Critic& disc, const torch::Tensor& real, const torch::Tensor& real_general,
                                    const torch::Tensor& real_detailed, const torch::Tensor& fake,
                                    const torch::Tensor& fake_general, const torch::Tensor& fake_detailed,
                                    const LossWeights& w);

/// ACGAN generator: BCE(fake→1) + class NLLs on fake vs conditioning labels.
LossResult acgan_generator_loss(Critic& disc, const torch::Tensor& fake, const torch::Tensor& general,
                                const torch::Tensor& detailed, const LossWeights& w);

}  // namespace gdgan
