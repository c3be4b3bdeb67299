#include "gdgan/gan_nets.hpp"

#include <numeric>

#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/image.hpp"

namespace gdgan {

namespace nn = torch::nn;
namespace F = torch::nn::functional;

namespace {
nn::Conv2d down(int in, int out) { return nn::Conv2d(nn::Conv2dOptions(in, out, 4).stride(2).padding(1)); }
nn::ConvTranspose2d up(int in, int out) {
    return nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1));
}
nn::GroupNorm layer_norm(int channels) { return nn::GroupNorm(nn::GroupNormOptions(1, channels)); }
torch::Tensor lrelu(const torch::Tensor& x) { return F::leaky_relu(x, F::LeakyReLUFuncOptions().negative_slope(0.2)); }

void check_images(const torch::Tensor& images) {
    if (images.dim() != 4 || images.size(1) != 1 || images.size(2) != kImageSize || images.size(3) != kImageSize)
        raise(ErrorKind::ShapeMismatch, "expected images of shape [n, 1, 64, 64]");
}
}  // namespace

CriticImpl::CriticImpl(int width, std::vector<int> general_cardinalities, int detailed_count)
    : general_cards_(std::move(general_cardinalities)), detailed_count_(detailed_count) {
    c1_ = register_module("c1", down(1, width));
    c2_ = register_module("c2", down(width, 2 * width));
    c3_ = register_module("c3", down(2 * width, 4 * width));
    c4_ = register_module("c4", down(4 * width, 8 * width));
    n2_ = register_module("n2", layer_norm(2 * width));
    n3_ = register_module("n3", layer_norm(4 * width));
    n4_ = register_module("n4", layer_norm(8 * width));
    const int flat = 8 * width * 4 * 4;
    score_head_ = register_module("score_head", nn::Linear(flat, 1));
    if (!general_cards_.empty()) {
        const int k = std::accumulate(general_cards_.begin(), general_cards_.end(), 0);
        general_head_ = register_module("general_head", nn::Linear(flat, k));
    }
    if (detailed_count_ > 0) detailed_head_ = register_module("detailed_head", nn::Linear(flat, detailed_count_));
}

torch::Tensor CriticImpl::features(const torch::Tensor& images) {
    check_images(images);
    auto h = lrelu(c1_(images));
    h = lrelu(n2_(c2_(h)));
    h = lrelu(n3_(c3_(h)));
    h = lrelu(n4_(c4_(h)));
    return h.flatten(1);
}

torch::Tensor CriticImpl::score(const torch::Tensor& images) { return score_head_(features(images)).squeeze(1); }

CriticOutput CriticImpl::forward(const torch::Tensor& images) {
    const auto f = features(images);
    CriticOutput out;
    out.score = score_head_(f).squeeze(1);
    if (general_head_) {
        const auto all = general_head_(f);
        std::int64_t offset = 0;
        for (int k : general_cards_) {
            out.general_logits.push_back(all.narrow(1, offset, k));
            offset += k;
        }
    }
    if (detailed_head_) out.detailed_logits = detailed_head_(f);
    return out;
}

NoiseGeneratorImpl::NoiseGeneratorImpl(int noise_dim, int condition_dim, int width) : width_(width) {
    project_ = register_module("project", nn::Linear(noise_dim + condition_dim, 8 * width * 4 * 4));
    n0_ = register_module("n0", layer_norm(8 * width));
    t1_ = register_module("t1", up(8 * width, 4 * width));
    n1_ = register_module("n1", layer_norm(4 * width));
    t2_ = register_module("t2", up(4 * width, 2 * width));
    n2_ = register_module("n2", layer_norm(2 * width));
    t3_ = register_module("t3", up(2 * width, width));
    n3_ = register_module("n3", layer_norm(width));
    t4_ = register_module("t4", up(width, 1));
}

torch::Tensor NoiseGeneratorImpl::forward(const torch::Tensor& z, const torch::Tensor& condition) {
    if (z.dim() != 2 || condition.dim() != 2 || z.size(0) != condition.size(0))
        raise(ErrorKind::ShapeMismatch, "noise and condition batches disagree");
    auto h = project_(torch::cat({z, condition.to(z.dtype())}, 1)).view({z.size(0), 8 * width_, 4, 4});
    h = torch::relu(n0_(h));
    h = torch::relu(n1_(t1_(h)));
    h = torch::relu(n2_(t2_(h)));
    h = torch::relu(n3_(t3_(h)));
    return torch::tanh(t4_(h));
}

RefinerImpl::RefinerImpl(int detailed_count, int width) : detailed_count_(detailed_count) {
    const int in = 1 + detailed_count;
    e1_ = register_module("e1", down(in, width));
    e2_ = register_module("e2", down(width, 2 * width));
    ne2_ = register_module("ne2", layer_norm(2 * width));
    e3_ = register_module("e3", down(2 * width, 4 * width));
    ne3_ = register_module("ne3", layer_norm(4 * width));
    d2_ = register_module("d2", up(4 * width, 2 * width));
    nd2_ = register_module("nd2", layer_norm(2 * width));
    d1_ = register_module("d1", up(4 * width, width));
    nd1_ = register_module("nd1", layer_norm(width));
    d0_ = register_module("d0", up(2 * width, width));
    nd0_ = register_module("nd0", layer_norm(width));
    out_ = register_module("out", nn::Conv2d(nn::Conv2dOptions(width + in, 1, 3).padding(1)));
}

torch::Tensor RefinerImpl::forward(const torch::Tensor& images, const torch::Tensor& detailed) {
    check_images(images);
    if (detailed.dim() != 2 || detailed.size(0) != images.size(0) || detailed.size(1) != detailed_count_)
        raise(ErrorKind::ShapeMismatch, "detailed labels must be [n, " + std::to_string(detailed_count_) + "]");
    const auto x = torch::cat({images, label_planes(detailed.to(images.dtype()), kImageSize, kImageSize)}, 1);
    const auto h1 = lrelu(e1_(x));
    const auto h2 = lrelu(ne2_(e2_(h1)));
    const auto h3 = lrelu(ne3_(e3_(h2)));
    auto u = torch::relu(nd2_(d2_(h3)));
    u = torch::relu(nd1_(d1_(torch::cat({u, h2}, 1))));
    u = torch::relu(nd0_(d0_(torch::cat({u, h1}, 1))));
    return torch::tanh(out_(torch::cat({u, x}, 1)));
}

void init_parameters(torch::nn::Module& module, at::Generator& gen, double weight_std) {
    torch::NoGradGuard guard;
    for (auto& item : module.named_parameters(/*recurse=*/true)) {
        const auto& name = item.key();
        auto& p = item.value();
        const bool is_bias = name.size() >= 4 && name.compare(name.size() - 4, 4, "bias") == 0;
        if (is_bias) {
            p.zero_();
        } else if (p.dim() == 1) {
            p.fill_(1.0);  // normalization scale
        } else {
            p.normal_(0.0, weight_std, gen);
        }
    }
}

torch::Tensor label_planes(const torch::Tensor& labels, std::int64_t height, std::int64_t width) {
    return labels.view({labels.size(0), labels.size(1), 1, 1}).expand({labels.size(0), labels.size(1), height, width});
}

torch::Tensor one_hot_general(const torch::Tensor& general, const std::vector<int>& cardinalities, torch::Dtype dtype) {
    if (general.dim() != 2 || general.size(1) != static_cast<std::int64_t>(cardinalities.size()))
        raise(ErrorKind::ShapeMismatch, "general labels must be [n, " + std::to_string(cardinalities.size()) + "]");
    std::vector<torch::Tensor> parts;
    for (std::size_t i = 0; i < cardinalities.size(); ++i)
        parts.push_back(F::one_hot(general.select(1, static_cast<std::int64_t>(i)).to(torch::kLong), cardinalities[i]).to(dtype));
    return torch::cat(parts, 1);
}

}  // namespace gdgan
