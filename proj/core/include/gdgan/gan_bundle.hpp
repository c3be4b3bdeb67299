#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "gdgan/gan_nets.hpp"

namespace gdgan {

enum class StageTag { stage1, stage2, acgan };

std::string to_string(StageTag tag);
StageTag stage_tag_from_string(const std::string& s);

struct NoiseSpec {
    int dim = 100;
};

/// Architecture parameters of one generator/critic pair.
struct GanArch {
    StageTag stage = StageTag::stage1;
    int noise_dim = 100;
    int generator_width = 64;
    int critic_width = 64;
    std::vector<int> general_cardinalities{2, 2};
    int detailed_count = 4;

    /// Canonical single-line `key=value;...` encoding (round-trips via from_text).
    std::string to_text() const;
    static GanArch from_text(const std::string& text);
    /// Human-readable layer list; the canonical architecture identity stored in checkpoints.
    std::string descriptor() const;

    int general_one_hot_width() const;
    /// Width of the generator's condition vector (stage1: general one-hot;
    /// acgan: general one-hot + detailed; stage2: detailed channels).
    int condition_dim() const;
};

using NamedTensor = std::pair<std::string, torch::Tensor>;

/// Parameters plus architecture metadata of one generator/critic pair.
///
/// stage1: noise generator conditioned on general labels; critic with a
///         Wasserstein head and general-label heads.
/// stage2: refiner conditioned on detailed labels; critic with a Wasserstein
///         head and a detailed-label head.
/// acgan:  noise generator conditioned on general + detailed labels;
///         discriminator with a real/fake head, general heads and a detailed head.
///
/// Move-only; use clone() for an independent deep copy.
class GanBundle {
public:
    GanBundle(GanArch arch, std::uint64_t init_seed);
    GanBundle(GanBundle&&) = default;
    GanBundle& operator=(GanBundle&&) = default;
    GanBundle(const GanBundle&) = delete;
    GanBundle& operator=(const GanBundle&) = delete;

    const GanArch& arch() const { return arch_; }
    StageTag stage() const { return arch_.stage; }

    NoiseGenerator& noise_generator();
    Refiner& refiner();
    Critic& critic() { return critic_; }
    torch::nn::Module& generator_module();
    const torch::nn::Module& generator_module() const;

    std::vector<torch::Tensor> generator_parameters();
    std::vector<torch::Tensor> critic_parameters();
    /// "generator.<name>" then "critic.<name>", in registration order.
    std::vector<NamedTensor> named_parameters() const;

    GanBundle clone() const;
    void to(torch::Dtype dtype);
    torch::Dtype dtype() const;

    /// Copies parameter values from `other` (same architecture required).
    void copy_parameters_from(const GanBundle& other);
    bool parameters_equal(const GanBundle& other) const;

private:
    GanArch arch_;
    NoiseGenerator noise_generator_{nullptr};
    Refiner refiner_{nullptr};
    Critic critic_{nullptr};
};

/// Bitwise equality of two parameter lists (names, shapes, dtypes and bytes).
bool tensors_bitwise_equal(const std::vector<NamedTensor>& a, const std::vector<NamedTensor>& b);
std::vector<NamedTensor> snapshot(const std::vector<NamedTensor>& params);

}  // namespace gdgan
