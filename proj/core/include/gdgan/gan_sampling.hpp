#pragma once

#include <cstdint>

#include <ATen/core/Generator.h>
#include <torch/types.h>

#include "gdgan/gan_bundle.hpp"
#include "gdgan/image.hpp"

namespace gdgan {

/// n×dim noise, i.i.d. uniform on [-1, 1].
torch::Tensor sample_noise(std::int64_t n, const NoiseSpec& spec, at::Generator& gen,
                           torch::Dtype dtype = torch::kFloat32);

/// G₁(z, general). Differentiable w.r.t. the stage-1 generator parameters.
torch::Tensor generator1_forward(GanBundle& stage1, const torch::Tensor& z, const torch::Tensor& general);
/// G₂(base, detailed). Differentiable w.r.t. the stage-2 generator parameters.
torch::Tensor generator2_forward(GanBundle& stage2, const torch::Tensor& base, const torch::Tensor& detailed);
/// ACGAN generator conditioned on general one-hot + detailed multi-hot.
torch::Tensor acgan_generator_forward(GanBundle& acgan, const torch::Tensor& z, const torch::Tensor& general,
                                      const torch::Tensor& detailed);
CriticOutput critic_forward(GanBundle& bundle, const torch::Tensor& images);

/// Generated images together with the labels they were conditioned on.
struct LabeledImages {
    ImageBatch images;
    torch::Tensor general;   // [n, G] int64
    torch::Tensor detailed;  // [n, D] float
};

/// G₂(G₁(z, general), detailed) with z drawn from `gen`; no autograd graph is kept.
LabeledImages sample_gdgan(GanBundle& stage1, GanBundle& stage2, const torch::Tensor& general,
                           const torch::Tensor& detailed, at::Generator& gen);
LabeledImages sample_acgan(GanBundle& acgan, const torch::Tensor& general, const torch::Tensor& detailed,
                           at::Generator& gen);
/// Stage-1 output only (general labels), for inspecting the intermediate images.
ImageBatch sample_stage1(GanBundle& stage1, const torch::Tensor& general, at::Generator& gen);

}  // namespace gdgan
