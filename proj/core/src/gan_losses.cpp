#include "gdgan/gan_losses.hpp"

#include <cmath>
#include <sstream>

#include <json.hpp>
#include <torch/torch.h>

#include "gdgan/error.hpp"

namespace gdgan {

namespace F = torch::nn::functional;

double LossBreakdown::weighted_sum(const LossWeights& w) const {
    return wasserstein_term + w.lambda_gp * gradient_penalty_term + w.w_cls_general * general_class_nll +
           w.w_cls_detailed * detailed_class_nll + w.w_mse * reconstruction_mse;
}

bool LossBreakdown::finite() const {
    return std::isfinite(wasserstein_term) && std::isfinite(gradient_penalty_term) &&
           std::isfinite(general_class_nll) && std::isfinite(detailed_class_nll) &&
           std::isfinite(reconstruction_mse) && std::isfinite(total);
}

std::string LossBreakdown::to_json() const {
    nlohmann::json j;
    j["wasserstein_term"] = wasserstein_term;
    j["gradient_penalty_term"] = gradient_penalty_term;
    j["general_class_nll"] = general_class_nll;
    j["detailed_class_nll"] = detailed_class_nll;
    j["reconstruction_mse"] = reconstruction_mse;
    j["total"] = total;
    return j.dump();
}

namespace {

double value(const torch::Tensor& t) { return t.defined() ? t.item<double>() : 0.0; }

/// Assembles the weighted total from component tensors (undefined = absent).
LossResult assemble(const torch::Tensor& adversarial, const torch::Tensor& gp, const torch::Tensor& gen_nll,
                    const torch::Tensor& det_nll, const torch::Tensor& mse, const LossWeights& w) {
    auto total = adversarial;
    if (gp.defined()) total = total + w.lambda_gp * gp;
    if (gen_nll.defined()) total = total + w.w_cls_general * gen_nll;
    if (det_nll.defined()) total = total + w.w_cls_detailed * det_nll;
    if (mse.defined()) total = total + w.w_mse * mse;
    LossResult r;
    r.total = total;
    r.parts.wasserstein_term = value(adversarial);
    r.parts.gradient_penalty_term = value(gp);
    r.parts.general_class_nll = value(gen_nll);
    r.parts.detailed_class_nll = value(det_nll);
    r.parts.reconstruction_mse = value(mse);
    r.parts.total = value(total);
    return r;
}

void check_same_shape(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
    if (a.sizes() != b.sizes()) raise(ErrorKind::ShapeMismatch, std::string(what) + " shapes differ");
}

}  // namespace

torch::Tensor input_gradient_norms(const ScoreFn& critic, const torch::Tensor& x) {
    const auto scores = critic(x);
    if (!scores.requires_grad()) return torch::zeros({x.size(0)}, x.options().requires_grad(false));
    auto grads = torch::autograd::grad({scores.sum()}, {x}, /*grad_outputs=*/{}, /*retain_graph=*/true,
                                       /*create_graph=*/true, /*allow_unused=*/true);
    if (!grads[0].defined()) return torch::zeros({x.size(0)}, x.options().requires_grad(false));
    return grads[0].flatten(1).norm(2, 1);
}

torch::Tensor random_interpolates(const torch::Tensor& real, const torch::Tensor& fake, at::Generator& gen) {
    check_same_shape(real, fake, "real and fake");
    auto eps = torch::rand({real.size(0), 1, 1, 1}, gen, real.options().requires_grad(false));
    return (eps * real.detach() + (1.0 - eps) * fake.detach()).requires_grad_(true);
}

torch::Tensor gradient_penalty(const ScoreFn& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               at::Generator& gen) {
    const auto x_hat = random_interpolates(real, fake, gen);
    return (input_gradient_norms(critic, x_hat) - 1.0).pow(2).mean();
}

torch::Tensor gradient_penalty(Critic& critic, const torch::Tensor& real, const torch::Tensor& fake,
                               at::Generator& gen) {
    return gradient_penalty([&](const torch::Tensor& x) { return critic->score(x); }, real, fake, gen);
}

torch::Tensor general_nll(const std::vector<torch::Tensor>& logits, const torch::Tensor& general) {
    if (general.dim() != 2 || general.size(1) != static_cast<std::int64_t>(logits.size()))
        raise(ErrorKind::ShapeMismatch, "general labels do not match the number of general heads");
    torch::Tensor sum;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        auto term = F::cross_entropy(logits[i], general.select(1, static_cast<std::int64_t>(i)).to(torch::kLong));
        sum = sum.defined() ? sum + term : term;
    }
    return sum;
}

torch::Tensor detailed_nll(const torch::Tensor& logits, const torch::Tensor& detailed) {
    check_same_shape(logits, detailed, "detailed logits and labels");
    return F::binary_cross_entropy_with_logits(
               logits, detailed.to(logits.dtype()),
               F::BinaryCrossEntropyWithLogitsFuncOptions().reduction(torch::kSum)) /
           static_cast<double>(logits.size(0));
}

LossResult stage1_critic_loss(Critic& critic, const torch::Tensor& real, const torch::Tensor& real_general,
                              const torch::Tensor& fake, const LossWeights& w, at::Generator& gen) {
    check_same_shape(real, fake, "real and fake");
    const auto out_real = critic->forward(real);
    const auto out_fake = critic->forward(fake);
    const auto adversarial = out_fake.score.mean() - out_real.score.mean();
    const auto gp = gradient_penalty(critic, real, fake, gen);
    return assemble(adversarial, gp, general_nll(out_real.general_logits, real_general), {}, {}, w);
}

LossResult stage1_generator_loss(Critic& critic, const torch::Tensor& fake, const torch::Tensor& general,
                                 const LossWeights& w) {
    const auto out = critic->forward(fake);
    return assemble(-out.score.mean(), {}, general_nll(out.general_logits, general), {}, {}, w);
}

LossResult stage2_critic_loss(Critic& critic, const torch::Tensor& real, const torch::Tensor& real_detailed,
                              const torch::Tensor& fake, const LossWeights& w, at::Generator& gen) {
    check_same_shape(real, fake, "real and fake");
    const auto out_real = critic->forward(real);
    const auto out_fake = critic->forward(fake);
    const auto adversarial = out_fake.score.mean() - out_real.score.mean();
    const auto gp = gradient_penalty(critic, real, fake, gen);
    return assemble(adversarial, gp, {}, detailed_nll(out_real.detailed_logits, real_detailed), {}, w);
}

LossResult stage2_generator_loss(Critic& critic, Critic& stage1_critic, const torch::Tensor& base,
                                 const torch::Tensor& fake, const torch::Tensor& detailed,
                                 const torch::Tensor& general, const LossWeights& w) {
    check_same_shape(base, fake, "base and refined images");
    const auto out = critic->forward(fake);
    const auto general_out = stage1_critic->forward(fake);
    const auto mse = (fake - base.detach()).pow(2).mean();
    return assemble(-out.score.mean(), {}, general_nll(general_out.general_logits, general),
                    detailed_nll(out.detailed_logits, detailed), mse, w);
}

LossResult acgan_discriminator_loss(Critic& disc, const torch::Tensor& real, const torch::Tensor& real_general,
                                    const torch::Tensor& real_detailed, const torch::Tensor& fake,
                                    const torch::Tensor& fake_general, const torch::Tensor& fake_detailed,
                                    const LossWeights& w) {
    check_same_shape(real, fake, "real and fake");
    const auto out_real = disc->forward(real);
    const auto out_fake = disc->forward(fake);
    const auto adversarial =
        F::binary_cross_entropy_with_logits(out_real.score, torch::ones_like(out_real.score)) +
        F::binary_cross_entropy_with_logits(out_fake.score, torch::zeros_like(out_fake.score));
    const auto gen_nll = general_nll(out_real.general_logits, real_general) +
                         general_nll(out_fake.general_logits, fake_general);
    const auto det_nll = detailed_nll(out_real.detailed_logits, real_detailed) +
                         detailed_nll(out_fake.detailed_logits, fake_detailed);
    return assemble(adversarial, {}, gen_nll, det_nll, {}, w);
}

LossResult acgan_generator_loss(Critic& disc, const torch::Tensor& fake, const torch::Tensor& general,
                                const torch::Tensor& detailed, const LossWeights& w) {
    const auto out = disc->forward(fake);
    const auto adversarial = F::binary_cross_entropy_with_logits(out.score, torch::ones_like(out.score));
    return assemble(adversarial, {}, general_nll(out.general_logits, general), detailed_nll(out.detailed_logits, detailed),
                    {}, w);
}

}  // namespace gdgan
