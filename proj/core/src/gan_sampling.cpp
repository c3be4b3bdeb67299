#include "gdgan/gan_sampling.hpp"

#include <torch/torch.h>

#include "gdgan/error.hpp"

namespace gdgan {

torch::Tensor sample_noise(std::int64_t n, const NoiseSpec& spec, at::Generator& gen, torch::Dtype dtype) {
    if (n < 1) raise(ErrorKind::BadArgument, "noise batch must have n >= 1");
    if (spec.dim <= 0) raise(ErrorKind::BadArgument, "noise dimension must be positive");
    return torch::rand({n, spec.dim}, gen, torch::TensorOptions().dtype(dtype)) * 2.0 - 1.0;
}

torch::Tensor generator1_forward(GanBundle& stage1, const torch::Tensor& z, const torch::Tensor& general) {
    if (stage1.stage() != StageTag::stage1) raise(ErrorKind::BadArgument, "generator1_forward needs a stage1 bundle");
    if (z.size(0) != general.size(0)) raise(ErrorKind::ShapeMismatch, "noise and general label batches disagree");
    return stage1.noise_generator()->forward(z, one_hot_general(general, stage1.arch().general_cardinalities, z.scalar_type()));
}

torch::Tensor generator2_forward(GanBundle& stage2, const torch::Tensor& base, const torch::Tensor& detailed) {
    if (stage2.stage() != StageTag::stage2) raise(ErrorKind::BadArgument, "generator2_forward needs a stage2 bundle");
    return stage2.refiner()->forward(base, detailed);
}

torch::Tensor acgan_generator_forward(GanBundle& acgan, const torch::Tensor& z, const torch::Tensor& general,
                                      const torch::Tensor& detailed) {
    if (acgan.stage() != StageTag::acgan) raise(ErrorKind::BadArgument, "acgan_generator_forward needs an acgan bundle");
    if (z.size(0) != general.size(0) || z.size(0) != detailed.size(0))
        raise(ErrorKind::ShapeMismatch, "noise and label batches disagree");
    if (detailed.dim() != 2 || detailed.size(1) != acgan.arch().detailed_count)
        raise(ErrorKind::ShapeMismatch, "detailed labels have the wrong width");
    const auto condition = torch::cat(
        {one_hot_general(general, acgan.arch().general_cardinalities, z.scalar_type()), detailed.to(z.scalar_type())}, 1);
    return acgan.noise_generator()->forward(z, condition);
}

CriticOutput critic_forward(GanBundle& bundle, const torch::Tensor& images) { return bundle.critic()->forward(images); }

LabeledImages sample_gdgan(GanBundle& stage1, GanBundle& stage2, const torch::Tensor& general,
                           const torch::Tensor& detailed, at::Generator& gen) {
    torch::NoGradGuard guard;
    const auto z = sample_noise(general.size(0), NoiseSpec{stage1.arch().noise_dim}, gen, stage1.dtype());
    const auto base = generator1_forward(stage1, z, general);
    auto out = generator2_forward(stage2, base, detailed.to(base.scalar_type()));
    return {ImageBatch{out.to(torch::kFloat32).contiguous(), {}}, general, detailed};
}

LabeledImages sample_acgan(GanBundle& acgan, const torch::Tensor& general, const torch::Tensor& detailed,
                           at::Generator& gen) {
    torch::NoGradGuard guard;
    const auto z = sample_noise(general.size(0), NoiseSpec{acgan.arch().noise_dim}, gen, acgan.dtype());
    auto out = acgan_generator_forward(acgan, z, general, detailed);
    return {ImageBatch{out.to(torch::kFloat32).contiguous(), {}}, general, detailed};
}

ImageBatch sample_stage1(GanBundle& stage1, const torch::Tensor& general, at::Generator& gen) {
    torch::NoGradGuard guard;
    const auto z = sample_noise(general.size(0), NoiseSpec{stage1.arch().noise_dim}, gen, stage1.dtype());
    return ImageBatch{generator1_forward(stage1, z, general).to(torch::kFloat32).contiguous(), {}};
}

}  // namespace gdgan
