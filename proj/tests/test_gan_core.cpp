#include "doctest_torch.hpp"

#include <cmath>

#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/gan_bundle.hpp"
#include "gdgan/gan_losses.hpp"
#include "gdgan/gan_sampling.hpp"
#include "gdgan/gan_train.hpp"
#include "gdgan/image_store.hpp"
#include "gdgan/rng.hpp"
#include "gdgan/toy_corpus.hpp"

using namespace gdgan;

namespace {

GanArch small_arch(StageTag stage) {
    GanArch a;
    a.stage = stage;
    a.noise_dim = 8;
    a.generator_width = 4;
    a.critic_width = 4;
    return a;
}

GanDataset toy_dataset(std::size_t n = 128) {
    const ToyCorpus corpus = generate_toy_corpus(n, 0.2, 3);
    std::vector<std::string> ids;
    for (const auto& r : corpus.records) ids.push_back(r.image_id);
    return GanDataset::from(load_batch(corpus.images, ids), corpus.records);
}

TrainConfig quick_config(StageTag stage, std::int64_t steps = 2) {
    TrainConfig c = stage == StageTag::acgan ? TrainConfig::acgan_defaults() : TrainConfig{};
    c.batch_size = 8;
    c.n_critic = stage == StageTag::acgan ? 1 : 2;
    c.total_generator_steps = steps;
    c.seed = 5;
    return c;
}

/// Central-difference ‖∇ₓ score‖ for one image, perturbing pixels in chunks.
double finite_difference_norm(Critic& critic, const torch::Tensor& x, double h) {
    torch::NoGradGuard guard;
    const std::int64_t pixels = x.numel();
    const std::int64_t chunk = 128;
    const auto base = x.reshape({1, pixels});
    auto buf = base.expand({chunk, pixels}).clone();
    double sum_sq = 0;
    for (std::int64_t s = 0; s < pixels; s += chunk) {
        const std::int64_t m = std::min(chunk, pixels - s);
        auto rows = buf.slice(0, 0, m);
        rows.copy_(base.expand({m, pixels}));
        // Row i perturbs pixel s + i.
        rows.diagonal(s).add_(h);
        const auto up = critic->score(rows.reshape({m, 1, 64, 64}));
        rows.diagonal(s).sub_(2 * h);
        const auto down = critic->score(rows.reshape({m, 1, 64, 64}));
        sum_sq += ((up - down) / (2 * h)).pow(2).sum().item<double>();
    }
    return std::sqrt(sum_sq);
}

}  // namespace

TEST_CASE("architecture text round-trips") {
    for (StageTag s : {StageTag::stage1, StageTag::stage2, StageTag::acgan}) {
        GanArch a = small_arch(s);
        a.general_cardinalities = {2, 3};
        a.detailed_count = 14;
        const GanArch b = GanArch::from_text(a.to_text());
        CHECK(b.to_text() == a.to_text());
        CHECK(b.descriptor() == a.descriptor());
    }
    CHECK(stage_tag_from_string("1") == StageTag::stage1);
    CHECK(stage_tag_from_string("2") == StageTag::stage2);
    CHECK(stage_tag_from_string("acgan") == StageTag::acgan);
}

TEST_CASE("generator outputs are 64x64 images in [-1, 1]") {
    GanBundle s1(small_arch(StageTag::stage1), 1);
    GanBundle s2(small_arch(StageTag::stage2), 2);
    GanBundle ac(small_arch(StageTag::acgan), 3);
    auto gen = make_torch_generator(4);
    const auto general = torch::tensor({0, 1, 1, 0, 1, 1}, torch::kLong).reshape({3, 2});
    const auto detailed = torch::tensor({1.f, 0.f, 0.f, 1.f, 0.f, 1.f, 1.f, 0.f, 0.f, 0.f, 0.f, 0.f}).reshape({3, 4});
    const LabeledImages g = sample_gdgan(s1, s2, general, detailed, gen);
    const LabeledImages a = sample_acgan(ac, general, detailed, gen);
    for (const auto* b : {&g.images, &a.images}) {
        CHECK(b->data.sizes() == torch::IntArrayRef({3, 1, 64, 64}));
        CHECK_NOTHROW(b->validate());
        CHECK_FALSE(b->data.requires_grad());
    }
    CHECK(torch::equal(g.detailed, detailed));
    const auto out = critic_forward(s1, g.images.data);
    CHECK(out.score.sizes() == torch::IntArrayRef({3}));
    CHECK(out.general_logits.size() == 2);
    const auto out2 = critic_forward(s2, g.images.data);
    CHECK(out2.detailed_logits.sizes() == torch::IntArrayRef({3, 4}));
}

TEST_CASE("noise is uniform on [-1, 1] and reproducible") {
    auto g1 = make_torch_generator(9);
    auto g2 = make_torch_generator(9);
    const auto a = sample_noise(500, NoiseSpec{100}, g1);
    const auto b = sample_noise(500, NoiseSpec{100}, g2);
    CHECK(torch::equal(a, b));
    CHECK(a.min().item<float>() >= -1.0f);
    CHECK(a.max().item<float>() <= 1.0f);
    CHECK(std::abs(a.mean().item<float>()) < 0.02);
}

TEST_CASE("one-hot general encoding and label planes") {
    const auto g = torch::tensor({1, 0, 0, 2}, torch::kLong).reshape({2, 2});
    const auto oh = one_hot_general(g, {2, 3});
    CHECK(torch::equal(oh, torch::tensor({0.f, 1.f, 1.f, 0.f, 0.f, 1.f, 0.f, 0.f, 0.f, 1.f}).reshape({2, 5})));
    const auto planes = label_planes(torch::tensor({1.f, 0.f}).reshape({1, 2}), 4, 4);
    CHECK(planes.sizes() == torch::IntArrayRef({1, 2, 4, 4}));
    CHECK(planes[0][0].sum().item<float>() == 16.0f);
    CHECK(planes[0][1].sum().item<float>() == 0.0f);
}

TEST_CASE("gradient penalty closed forms") {
    auto gen = make_torch_generator(1);
    const auto real = torch::rand({6, 1, 64, 64}, torch::kFloat64) * 2 - 1;
    const auto fake = torch::rand({6, 1, 64, 64}, torch::kFloat64) * 2 - 1;

    auto u = torch::randn({1, 1, 64, 64}, torch::kFloat64);
    u = u / u.norm();
    const ScoreFn unit_linear = [u](const torch::Tensor& x) { return (x * u).flatten(1).sum(1); };
    CHECK(gradient_penalty(unit_linear, real, fake, gen).item<double>() == doctest::Approx(0.0).epsilon(1e-6));

    const ScoreFn scaled = [u](const torch::Tensor& x) { return 3.0 * (x * u).flatten(1).sum(1); };
    CHECK(gradient_penalty(scaled, real, fake, gen).item<double>() == doctest::Approx(4.0).epsilon(1e-9));

    const ScoreFn constant = [](const torch::Tensor& x) {
        return torch::full({x.size(0)}, 2.5, x.options().requires_grad(false));
    };
    CHECK(std::abs(gradient_penalty(constant, real, fake, gen).item<double>() - 1.0) < 1e-6);

    const ScoreFn detached = [](const torch::Tensor& x) { return x.detach().flatten(1).sum(1) * 0 + 1; };
    CHECK(std::abs(gradient_penalty(detached, real, fake, gen).item<double>() - 1.0) < 1e-6);

    CHECK_THROWS_AS(gradient_penalty(unit_linear, real, fake.slice(0, 0, 3), gen), Error);
}

TEST_CASE("interpolates lie on the segment between real and fake") {
    auto gen = make_torch_generator(2);
    const auto real = torch::ones({5, 1, 64, 64}, torch::kFloat64);
    const auto fake = -torch::ones({5, 1, 64, 64}, torch::kFloat64);
    const auto x = random_interpolates(real, fake, gen);
    CHECK(x.requires_grad());
    for (int i = 0; i < 5; ++i) {
        const auto v = x[i];
        // Constant per sample: one ε per image.
        CHECK(v.max().item<double>() == v.min().item<double>());
        CHECK(std::abs(v.max().item<double>()) <= 1.0);
    }
}

TEST_CASE("analytic interpolate gradient norms match central differences") {
    torch::manual_seed(3);
    Critic critic(2, std::vector<int>{2, 2}, 4);
    auto gen = make_torch_generator(7);
    init_parameters(*critic, gen, 0.3);
    critic->to(torch::kFloat64);
    std::int64_t params = 0;
    for (const auto& p : critic->parameters()) params += p.numel();
    CHECK(params <= 10000);

    const ScoreFn fn = [&](const torch::Tensor& x) { return critic->score(x); };
    for (int batch = 0; batch < 3; ++batch) {
        const auto real = torch::rand({2, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto fake = torch::rand({2, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto x = random_interpolates(real, fake, gen);
        const auto norms = input_gradient_norms(fn, x);
        for (int i = 0; i < 2; ++i) {
            const double fd = finite_difference_norm(critic, x[i].detach().unsqueeze(0), 1e-5);
            const double analytic = norms[i].item<double>();
            CHECK(std::abs(analytic - fd) <= 1e-3 * fd);
        }
    }
}

TEST_CASE("gradient penalty is differentiable w.r.t. critic parameters") {
    Critic critic(2, std::vector<int>{2, 2}, 4);
    auto gen = make_torch_generator(3);
    init_parameters(*critic, gen, 0.2);
    const auto real = torch::rand({4, 1, 64, 64}) * 2 - 1;
    const auto fake = torch::rand({4, 1, 64, 64}) * 2 - 1;
    const auto gp = gradient_penalty(critic, real, fake, gen);
    gp.backward();
    double grad_mass = 0;
    for (const auto& p : critic->parameters())
        if (p.grad().defined()) grad_mass += p.grad().abs().sum().item<double>();
    CHECK(grad_mass > 0);
}

TEST_CASE("loss totals equal the weighted component sums") {
    GanBundle s1(small_arch(StageTag::stage1), 1);
    GanBundle s2(small_arch(StageTag::stage2), 2);
    GanBundle ac(small_arch(StageTag::acgan), 3);
    for (auto* b : {&s1, &s2, &ac}) b->to(torch::kFloat64);
    auto gen = make_torch_generator(11);
    Rng rng(12);
    for (int trial = 0; trial < 10; ++trial) {
        LossWeights w{rng.uniform(0, 20), rng.uniform(0, 3), rng.uniform(0, 3), rng.uniform(0, 20)};
        switch (trial) {
            case 0: w.lambda_gp = 0; break;
            case 1: w.w_cls_general = 0; break;
            case 2: w.w_cls_detailed = 0; break;
            case 3: w.w_mse = 0; break;
            default: break;
        }
        const auto real = torch::rand({4, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto fake = torch::rand({4, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
        const auto general = torch::randint(0, 2, {4, 2}, gen, torch::kLong);
        const auto detailed = torch::randint(0, 2, {4, 4}, gen, torch::kFloat64);
        const std::vector<LossResult> results = {
            stage1_critic_loss(s1.critic(), real, general, fake, w, gen),
            stage1_generator_loss(s1.critic(), fake, general, w),
            stage2_critic_loss(s2.critic(), real, detailed, fake, w, gen),
            stage2_generator_loss(s2.critic(), s1.critic(), real, fake, detailed, general, w),
            acgan_discriminator_loss(ac.critic(), real, general, detailed, fake, general, detailed, w),
            acgan_generator_loss(ac.critic(), fake, general, detailed, w),
        };
        for (const auto& r : results) {
            const auto& p = r.parts;
            const double recomputed = p.wasserstein_term + w.lambda_gp * p.gradient_penalty_term +
                                      w.w_cls_general * p.general_class_nll +
                                      w.w_cls_detailed * p.detailed_class_nll + w.w_mse * p.reconstruction_mse;
            CHECK(std::abs(p.total - recomputed) <= 1e-6 * std::max(1.0, std::abs(recomputed)));
            CHECK(p.total == doctest::Approx(r.total.item<double>()).epsilon(1e-12));
            CHECK(p.finite());
        }
    }
}

TEST_CASE("stage-2 generator components are what they claim") {
    GanBundle s1(small_arch(StageTag::stage1), 1);
    GanBundle s2(small_arch(StageTag::stage2), 2);
    s1.to(torch::kFloat64);
    s2.to(torch::kFloat64);
    auto gen = make_torch_generator(5);
    const auto base = torch::rand({3, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
    const auto fake = torch::rand({3, 1, 64, 64}, gen, torch::kFloat64) * 2 - 1;
    const auto general = torch::tensor({0, 1, 1, 1, 0, 0}, torch::kLong).reshape({3, 2});
    const auto detailed = torch::tensor({1., 0., 0., 0., 0., 1., 1., 0., 1., 1., 1., 1.}, torch::kFloat64).reshape({3, 4});
    const LossResult r = stage2_generator_loss(s2.critic(), s1.critic(), base, fake, detailed, general, {});
    torch::NoGradGuard guard;
    const double mse = (fake - base).pow(2).mean().item<double>();
    CHECK(r.parts.reconstruction_mse == doctest::Approx(mse).epsilon(1e-12));
    const auto out2 = s2.critic()->forward(fake);
    CHECK(r.parts.wasserstein_term == doctest::Approx(-out2.score.mean().item<double>()).epsilon(1e-12));
    // BCE by hand: −[y log σ(l) + (1−y) log(1−σ(l))], summed over labels, mean over images.
    const auto l = out2.detailed_logits;
    const auto bce = -(detailed * torch::log_sigmoid(l) + (1 - detailed) * torch::log_sigmoid(-l));
    CHECK(r.parts.detailed_class_nll == doctest::Approx(bce.sum().item<double>() / 3).epsilon(1e-10));
    const auto out1 = s1.critic()->forward(fake);
    double ce = 0;
    for (int g = 0; g < 2; ++g) {
        const auto logp = torch::log_softmax(out1.general_logits[g], 1);
        ce += -logp.gather(1, general.select(1, g).unsqueeze(1)).mean().item<double>();
    }
    CHECK(r.parts.general_class_nll == doctest::Approx(ce).epsilon(1e-10));
}

TEST_CASE("critic and generator steps touch only their own parameters") {
    const GanDataset data = toy_dataset();
    for (StageTag stage : {StageTag::stage1, StageTag::acgan}) {
        GanBundle b(small_arch(stage), 1);
        StageTrainer trainer(b, data, quick_config(stage));
        const auto before = snapshot(b.named_parameters());
        trainer.critic_step();
        const auto after_critic = snapshot(b.named_parameters());
        trainer.generator_step();
        const auto after_gen = b.named_parameters();
        for (std::size_t i = 0; i < before.size(); ++i) {
            const bool is_gen = before[i].first.rfind("generator.", 0) == 0;
            const bool critic_moved = !torch::equal(before[i].second, after_critic[i].second);
            const bool gen_moved = !torch::equal(after_critic[i].second, after_gen[i].second);
            if (is_gen) CHECK_FALSE(critic_moved);
            else CHECK_FALSE(gen_moved);
        }
    }
}

TEST_CASE("stage-2 training never modifies the stage-1 bundle") {
    const GanDataset data = toy_dataset();
    GanBundle s1(small_arch(StageTag::stage1), 1);
    GanBundle s2(small_arch(StageTag::stage2), 2);
    const auto frozen = snapshot(s1.named_parameters());
    const TrainingLog log = train_stage(s2, data, quick_config(StageTag::stage2), &s1);
    CHECK(log.steps.size() == 2);
    CHECK(tensors_bitwise_equal(frozen, s1.named_parameters()));
    for (const auto& p : s1.generator_parameters()) CHECK(p.requires_grad());
    CHECK(log.steps.back().generator.reconstruction_mse > 0);
    CHECK_THROWS_AS(train_stage(s2, data, quick_config(StageTag::stage2)), Error);
}

TEST_CASE("training is bitwise reproducible for a fixed seed") {
    const GanDataset data = toy_dataset();
    GanBundle a(small_arch(StageTag::stage1), 4);
    GanBundle b(small_arch(StageTag::stage1), 4);
    CHECK(a.parameters_equal(b));
    const TrainingLog la = train_stage(a, data, quick_config(StageTag::stage1, 3));
    const TrainingLog lb = train_stage(b, data, quick_config(StageTag::stage1, 3));
    CHECK(a.parameters_equal(b));
    REQUIRE(la.steps.size() == lb.steps.size());
    for (std::size_t i = 0; i < la.steps.size(); ++i) CHECK(la.steps[i].critic.total == lb.steps[i].critic.total);
    GanBundle c(small_arch(StageTag::stage1), 5);
    CHECK_FALSE(a.parameters_equal(c));
}

TEST_CASE("non-finite losses raise DivergenceDetected and restore the last snapshot") {
    GanDataset data = toy_dataset();
    data.images = torch::full_like(data.images, std::nan(""));
    GanBundle b(small_arch(StageTag::stage1), 1);
    const auto initial = snapshot(b.named_parameters());
    try {
        train_stage(b, data, quick_config(StageTag::stage1));
        FAIL("expected DivergenceDetected");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::DivergenceDetected);
    }
    CHECK(tensors_bitwise_equal(initial, b.named_parameters()));
}

TEST_CASE("checkpoint callbacks fire at the configured interval") {
    const GanDataset data = toy_dataset();
    GanBundle b(small_arch(StageTag::acgan), 1);
    TrainConfig c = quick_config(StageTag::acgan, 4);
    c.checkpoint_interval = 2;
    std::vector<std::int64_t> seen;
    train_acgan(b, data, c, [&](const GanBundle&, std::int64_t step) { seen.push_back(step); });
    CHECK((seen == std::vector<std::int64_t>{2, 4}));
}

TEST_CASE("training log is one JSON object per step") {
    const GanDataset data = toy_dataset();
    GanBundle b(small_arch(StageTag::stage1), 1);
    const TrainingLog log = train_stage(b, data, quick_config(StageTag::stage1, 3));
    const std::string text = log.to_ndjson();
    CHECK(std::count(text.begin(), text.end(), '\n') == 3);
    CHECK(text.find("\"critic\"") != std::string::npos);
    CHECK(text.find("\"wall_time\"") != std::string::npos);
}

TEST_CASE("train config validation and JSON round-trip") {
    TrainConfig c;
    c.detailed_condition_rate = 0.3;
    c.weights.w_mse = 2.5;
    const TrainConfig back = TrainConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.hash() == c.hash());
    TrainConfig bad = c;
    bad.n_critic = 0;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.weights.lambda_gp = -1;
    CHECK_THROWS_AS(bad.validate(), Error);
    bad = c;
    bad.detailed_condition_rate = 1.0;
    CHECK_THROWS_AS(bad.validate(), Error);
    const TrainConfig ac = TrainConfig::acgan_defaults();
    CHECK(ac.adam_beta1 == 0.5);
    CHECK(ac.n_critic == 1);
}

TEST_CASE("bundle clone is deep and copy_parameters_from makes bundles equal") {
    GanBundle a(small_arch(StageTag::stage2), 1);
    GanBundle b = a.clone();
    CHECK(a.parameters_equal(b));
    {
        torch::NoGradGuard guard;
        b.critic_parameters().front().add_(1.0);
    }
    CHECK_FALSE(a.parameters_equal(b));
    b.copy_parameters_from(a);
    CHECK(a.parameters_equal(b));
    GanBundle other(small_arch(StageTag::stage1), 1);
    CHECK_THROWS_AS(other.copy_parameters_from(a), Error);
}
