#include "gdgan/gan_train.hpp"

#include <chrono>
#include <optional>
#include <fstream>
#include <sstream>

#include <json.hpp>
#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/gan_sampling.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

using nlohmann::json;

TrainConfig TrainConfig::acgan_defaults() {
    TrainConfig c;
    c.adam_beta1 = 0.5;
    c.adam_beta2 = 0.999;
    c.n_critic = 1;
    c.weights.lambda_gp = 0.0;
    c.weights.w_mse = 0.0;
    return c;
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0)) raise(ErrorKind::BadArgument, "learning_rate must be > 0");
    if (n_critic < 1) raise(ErrorKind::BadArgument, "n_critic must be >= 1");
    if (batch_size < 1) raise(ErrorKind::BadArgument, "batch_size must be >= 1");
    if (total_generator_steps < 0) raise(ErrorKind::BadArgument, "total_generator_steps must be >= 0");
    const auto& w = weights;
    if (w.lambda_gp < 0 || w.w_cls_general < 0 || w.w_cls_detailed < 0 || w.w_mse < 0)
        raise(ErrorKind::BadArgument, "loss weights must be >= 0");
    if (!(detailed_condition_rate >= 0.0 && detailed_condition_rate < 1.0))
        raise(ErrorKind::BadArgument, "detailed_condition_rate must be in [0, 1)");
}

std::string TrainConfig::to_json() const {
    json j;
    j["learning_rate"] = learning_rate;
    j["adam_beta1"] = adam_beta1;
    j["adam_beta2"] = adam_beta2;
    j["batch_size"] = batch_size;
    j["n_critic"] = n_critic;
    j["lambda_gp"] = weights.lambda_gp;
    j["w_cls_general"] = weights.w_cls_general;
    j["w_cls_detailed"] = weights.w_cls_detailed;
    j["w_mse"] = weights.w_mse;
    j["total_generator_steps"] = total_generator_steps;
    j["seed"] = seed;
    j["checkpoint_interval"] = checkpoint_interval;
    j["detailed_condition_rate"] = detailed_condition_rate;
    return j.dump();
}

TrainConfig TrainConfig::from_json(const std::string& text) {
    const auto j = json::parse(text);
    TrainConfig c;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.adam_beta1 = j.value("adam_beta1", c.adam_beta1);
    c.adam_beta2 = j.value("adam_beta2", c.adam_beta2);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.n_critic = j.value("n_critic", c.n_critic);
    c.weights.lambda_gp = j.value("lambda_gp", c.weights.lambda_gp);
    c.weights.w_cls_general = j.value("w_cls_general", c.weights.w_cls_general);
    c.weights.w_cls_detailed = j.value("w_cls_detailed", c.weights.w_cls_detailed);
    c.weights.w_mse = j.value("w_mse", c.weights.w_mse);
    c.total_generator_steps = j.value("total_generator_steps", c.total_generator_steps);
    c.seed = j.value("seed", c.seed);
    c.checkpoint_interval = j.value("checkpoint_interval", c.checkpoint_interval);
    c.detailed_condition_rate = j.value("detailed_condition_rate", c.detailed_condition_rate);
    return c;
}

std::uint64_t TrainConfig::hash() const { return fnv1a64(to_json()); }

GanDataset GanDataset::from(const ImageBatch& images, const std::vector<LabelRecord>& records) {
    if (images.size() != static_cast<std::int64_t>(records.size()))
        raise(ErrorKind::ShapeMismatch, "image batch and records disagree in length");
    if (records.empty()) raise(ErrorKind::EmptyInput, "empty training set");
    const auto n = static_cast<std::int64_t>(records.size());
    const auto g = static_cast<std::int64_t>(records.front().general.size());
    const auto d = static_cast<std::int64_t>(records.front().detailed.size());
    auto general = torch::empty({n, g}, torch::kLong);
    auto detailed = torch::empty({n, d}, torch::kFloat32);
    auto ga = general.accessor<std::int64_t, 2>();
    auto da = detailed.accessor<float, 2>();
    for (std::int64_t i = 0; i < n; ++i) {
        for (std::int64_t k = 0; k < g; ++k) ga[i][k] = records[i].general[k];
        for (std::int64_t k = 0; k < d; ++k) da[i][k] = records[i].detailed[k];
    }
    return {images.data, general, detailed};
}

std::string TrainingLog::to_ndjson() const {
    std::ostringstream os;
    for (const auto& s : steps) {
        json j;
        j["step"] = s.step;
        j["critic"] = json::parse(s.critic.to_json());
        j["generator"] = json::parse(s.generator.to_json());
        j["wall_time"] = s.wall_seconds;
        os << j.dump() << '\n';
    }
    return os.str();
}

void TrainingLog::write(const std::string& path) const {
    std::ofstream f(path, std::ios::trunc);
    if (!f) raise(ErrorKind::IoError, "cannot write " + path);
    f << to_ndjson();
}

StageTrainer::StageTrainer(GanBundle& bundle, const GanDataset& data, TrainConfig config, GanBundle* stage1)
    : bundle_(bundle), data_(data), config_(std::move(config)), stage1_(stage1),
      gen_(make_torch_generator(derive_seed(config_.seed, {"train", to_string(bundle.stage())}))) {
    config_.validate();
    if (data_.size() < 1) raise(ErrorKind::EmptyInput, "empty training set");
    if (bundle_.stage() == StageTag::stage2) {
        if (!stage1_ || stage1_->stage() != StageTag::stage1)
            raise(ErrorKind::BadArgument, "stage-2 training requires the trained stage-1 bundle");
        set_requires_grad(stage1_->generator_parameters(), false);
        set_requires_grad(stage1_->critic_parameters(), false);
    }
    const auto betas = std::make_tuple(config_.adam_beta1, config_.adam_beta2);
    critic_opt_ = std::make_unique<torch::optim::Adam>(
        bundle_.critic_parameters(), torch::optim::AdamOptions(config_.learning_rate).betas(betas));
    generator_opt_ = std::make_unique<torch::optim::Adam>(
        bundle_.generator_parameters(), torch::optim::AdamOptions(config_.learning_rate).betas(betas));
}

StageTrainer::~StageTrainer() {
    if (stage1_) {
        set_requires_grad(stage1_->generator_parameters(), true);
        set_requires_grad(stage1_->critic_parameters(), true);
    }
}

void StageTrainer::set_requires_grad(std::vector<torch::Tensor> params, bool flag) {
    for (auto& p : params) p.requires_grad_(flag);
}

StageTrainer::Batch StageTrainer::real_batch() {
    const auto idx = torch::randint(data_.size(), {config_.batch_size}, gen_, torch::kLong);
    const auto dtype = bundle_.dtype();
    return {data_.images.index_select(0, idx).to(dtype), data_.general.index_select(0, idx),
            data_.detailed.index_select(0, idx).to(dtype)};
}

StageTrainer::FakeBatch StageTrainer::fake_batch(bool with_grad) {
    const auto idx = torch::randint(data_.size(), {config_.batch_size}, gen_, torch::kLong);
    const auto dtype = bundle_.dtype();
    FakeBatch fb;
    fb.general = data_.general.index_select(0, idx);
    if (config_.detailed_condition_rate > 0.0) {
        const auto u = torch::rand({config_.batch_size, data_.detailed.size(1)}, gen_, torch::kFloat64);
        fb.detailed = u.lt(config_.detailed_condition_rate).to(dtype);
    } else {
        fb.detailed = data_.detailed.index_select(0, idx).to(dtype);
    }
    std::optional<torch::NoGradGuard> no_grad;
    if (!with_grad) no_grad.emplace();
    switch (bundle_.stage()) {
        case StageTag::stage1: {
            const auto z = sample_noise(config_.batch_size, NoiseSpec{bundle_.arch().noise_dim}, gen_, dtype);
            fb.images = generator1_forward(bundle_, z, fb.general);
            break;
        }
        case StageTag::stage2: {
            {
                torch::NoGradGuard frozen;
                const auto z = sample_noise(config_.batch_size, NoiseSpec{stage1_->arch().noise_dim}, gen_, stage1_->dtype());
                fb.base = generator1_forward(*stage1_, z, fb.general).to(dtype);
            }
            fb.images = generator2_forward(bundle_, fb.base, fb.detailed);
            break;
        }
        case StageTag::acgan: {
            const auto z = sample_noise(config_.batch_size, NoiseSpec{bundle_.arch().noise_dim}, gen_, dtype);
            fb.images = acgan_generator_forward(bundle_, z, fb.general, fb.detailed);
            break;
        }
    }
    return fb;
}

LossBreakdown StageTrainer::critic_step() {
    const auto real = real_batch();
    const auto fake = fake_batch(false);
    const auto& w = config_.weights;
    LossResult loss;
    switch (bundle_.stage()) {
        case StageTag::stage1:
            loss = stage1_critic_loss(bundle_.critic(), real.images, real.general, fake.images, w, gen_);
            break;
        case StageTag::stage2:
            loss = stage2_critic_loss(bundle_.critic(), real.images, real.detailed, fake.images, w, gen_);
            break;
        case StageTag::acgan:
            loss = acgan_discriminator_loss(bundle_.critic(), real.images, real.general, real.detailed, fake.images,
                                            fake.general, fake.detailed, w);
            break;
    }
    if (!loss.parts.finite()) return loss.parts;
    critic_opt_->zero_grad();
    loss.total.backward();
    critic_opt_->step();
    return loss.parts;
}

LossBreakdown StageTrainer::generator_step() {
    set_requires_grad(bundle_.critic_parameters(), false);
    const auto fake = fake_batch(true);
    const auto& w = config_.weights;
    LossResult loss;
    switch (bundle_.stage()) {
        case StageTag::stage1:
            loss = stage1_generator_loss(bundle_.critic(), fake.images, fake.general, w);
            break;
        case StageTag::stage2:
            loss = stage2_generator_loss(bundle_.critic(), stage1_->critic(), fake.base, fake.images, fake.detailed,
                                         fake.general, w);
            break;
        case StageTag::acgan:
            loss = acgan_generator_loss(bundle_.critic(), fake.images, fake.general, fake.detailed, w);
            break;
    }
    if (loss.parts.finite()) {
        generator_opt_->zero_grad();
        loss.total.backward();
        generator_opt_->step();
    }
    set_requires_grad(bundle_.critic_parameters(), true);
    return loss.parts;
}

StepRecord StageTrainer::train_step() {
    const auto t0 = std::chrono::steady_clock::now();
    StepRecord rec;
    for (int i = 0; i < config_.n_critic; ++i) {
        rec.critic = critic_step();
        if (!rec.critic.finite()) break;
    }
    if (rec.critic.finite()) rec.generator = generator_step();
    rec.step = ++step_;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return rec;
}

TrainingLog StageTrainer::run(const CheckpointFn& on_checkpoint) {
    TrainingLog log;
    auto good = snapshot(bundle_.named_parameters());
    std::int64_t good_step = step_;
    while (step_ < config_.total_generator_steps) {
        auto rec = train_step();
        if (!rec.critic.finite() || !rec.generator.finite()) {
            torch::NoGradGuard guard;
            auto params = bundle_.named_parameters();
            for (std::size_t i = 0; i < params.size(); ++i) params[i].second.copy_(good[i].second);
            raise(ErrorKind::DivergenceDetected, "non-finite loss at generator step " + std::to_string(rec.step) +
                                                     " (" + to_string(bundle_.stage()) +
                                                     "); bundle restored to step " + std::to_string(good_step));
        }
        log.steps.push_back(rec);
        if (config_.checkpoint_interval > 0 && step_ % config_.checkpoint_interval == 0) {
            good = snapshot(bundle_.named_parameters());
            good_step = step_;
            if (on_checkpoint) on_checkpoint(bundle_, step_);
        }
    }
    return log;
}

TrainingLog train_stage(GanBundle& bundle, const GanDataset& data, const TrainConfig& config, GanBundle* stage1,
                        const CheckpointFn& on_checkpoint) {
    if (bundle.stage() == StageTag::acgan) raise(ErrorKind::BadArgument, "use train_acgan for the ACGAN baseline");
    StageTrainer trainer(bundle, data, config, stage1);
    return trainer.run(on_checkpoint);
}

TrainingLog train_acgan(GanBundle& bundle, const GanDataset& data, const TrainConfig& config,
                        const CheckpointFn& on_checkpoint) {
    if (bundle.stage() != StageTag::acgan) raise(ErrorKind::BadArgument, "train_acgan needs an acgan bundle");
    StageTrainer trainer(bundle, data, config);
    return trainer.run(on_checkpoint);
}

}  // namespace gdgan
