#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <ATen/core/Generator.h>
#include <torch/optim/optimizer.h>
#include <torch/types.h>

#include "gdgan/gan_bundle.hpp"
#include "gdgan/gan_losses.hpp"
#include "gdgan/image.hpp"
#include "gdgan/labels.hpp"

namespace gdgan {

struct TrainConfig {
    double learning_rate = 0.0002;
    double adam_beta1 = 0.0;
    double adam_beta2 = 0.9;
    std::int64_t batch_size = 64;
    int n_critic = 5;
    LossWeights weights;
    std::int64_t total_generator_steps = 1000;
    std::uint64_t seed = 0;
    /// Detailed labels that condition fake images: 0 draws them from training
    /// records; a rate r in (0, 1) draws every label independently with P(1) = r,
    /// so rare labels are requested as often as common ones.
    double detailed_condition_rate = 0.0;
    /// Generator steps between checkpoint callbacks (0 disables).
    std::int64_t checkpoint_interval = 0;

    /// Standard-GAN settings for the ACGAN baseline: β = (0.5, 0.999), one
    /// discriminator step per generator step, no gradient penalty.
    static TrainConfig acgan_defaults();

    void validate() const;
    std::string to_json() const;
    static TrainConfig from_json(const std::string& text);
    std::uint64_t hash() const;
};

/// Training tensors: images [N,1,64,64], general [N,G] int64, detailed [N,D] float.
struct GanDataset {
    torch::Tensor images;
    torch::Tensor general;
    torch::Tensor detailed;

    std::int64_t size() const { return images.size(0); }
    static GanDataset from(const ImageBatch& images, const std::vector<LabelRecord>& records);
};

struct StepRecord {
    std::int64_t step = 0;
    LossBreakdown critic;
    LossBreakdown generator;
    double wall_seconds = 0.0;
};

struct TrainingLog {
    std::vector<StepRecord> steps;

    /// One JSON object per line: {step, critic:{...}, generator:{...}, wall_time}.
    std::string to_ndjson() const;
    void write(const std::string& path) const;
};

using CheckpointFn = std::function<void(const GanBundle&, std::int64_t step)>;

/// Runs the alternating critic/generator optimization for one bundle.
///
/// Each phase owns one Adam optimizer over exactly one parameter set: a critic
/// step never touches generator parameters and vice versa. Stage-2 training
/// needs the trained stage-1 bundle, which is only read.
class StageTrainer {
public:
    StageTrainer(GanBundle& bundle, const GanDataset& data, TrainConfig config, GanBundle* stage1 = nullptr);
    ~StageTrainer();
    StageTrainer(const StageTrainer&) = delete;
    StageTrainer& operator=(const StageTrainer&) = delete;

    LossBreakdown critic_step();
    LossBreakdown generator_step();
    /// n_critic critic steps followed by one generator step.
    StepRecord train_step();
    /// Runs until config.total_generator_steps. On a non-finite loss the bundle
    /// is restored to the last checkpoint snapshot and DivergenceDetected is thrown.
    TrainingLog run(const CheckpointFn& on_checkpoint = {});

    std::int64_t generator_steps_done() const { return step_; }

private:
    struct Batch {
        torch::Tensor images, general, detailed;
    };
    Batch real_batch();
    /// Conditioning labels drawn from the training records; returns generated
    /// images (graph kept only when `with_grad`) plus the base images for stage 2.
    struct FakeBatch {
        torch::Tensor images, base, general, detailed;
    };
    FakeBatch fake_batch(bool with_grad);
    void set_requires_grad(std::vector<torch::Tensor> params, bool flag);

    GanBundle& bundle_;
    const GanDataset& data_;
    TrainConfig config_;
    GanBundle* stage1_;
    at::Generator gen_;
    std::unique_ptr<torch::optim::Optimizer> critic_opt_;
    std::unique_ptr<torch::optim::Optimizer> generator_opt_;
    std::int64_t step_ = 0;
};

/// Trains `bundle` in place (stage1 or stage2) and returns the step log.
TrainingLog train_stage(GanBundle& bundle, const GanDataset& data, const TrainConfig& config,
                        GanBundle* stage1 = nullptr, const CheckpointFn& on_checkpoint = {});

/// Trains an ACGAN baseline bundle in place.
TrainingLog train_acgan(GanBundle& bundle, const GanDataset& data, const TrainConfig& config,
                        const CheckpointFn& on_checkpoint = {});

}  // namespace gdgan
