#include "gdgan/toy_oracle.hpp"

#include <torch/torch.h>

#include "gdgan/checkpoint.hpp"
#include "gdgan/error.hpp"
#include "gdgan/gan_nets.hpp"
#include "gdgan/rng.hpp"
#include "gdgan/toy_corpus.hpp"

namespace gdgan {

namespace nn = torch::nn;

ToyMarkNetImpl::ToyMarkNetImpl() {
    c1_ = register_module("c1", nn::Conv2d(nn::Conv2dOptions(1, 8, 4).stride(2).padding(1)));
    c2_ = register_module("c2", nn::Conv2d(nn::Conv2dOptions(8, 16, 4).stride(2).padding(1)));
    c3_ = register_module("c3", nn::Conv2d(nn::Conv2dOptions(16, 16, 4).stride(2).padding(1)));
    fc_ = register_module("fc", nn::Linear(16 * 8 * 8, ToyOracle::kClasses));
}

torch::Tensor ToyMarkNetImpl::forward(const torch::Tensor& images) {
    auto h = torch::relu(c1_(images));
    h = torch::relu(c2_(h));
    h = torch::relu(c3_(h));
    return fc_(h.flatten(1));
}

ToyOracle::ToyOracle() : net_() {}

ToyOracle ToyOracle::train(const ToyOracleRecipe& recipe, double* final_accuracy) {
    ToyOracle oracle;
    auto init = make_torch_generator(derive_seed(recipe.seed, {"oracle", "init"}));
    init_parameters(*oracle.net_, init, 0.05);

    // Each image carries at most one mark so the class is unambiguous.
    const std::int64_t n = recipe.images_per_class * kClasses;
    Rng rng(derive_seed(recipe.seed, {"oracle", "data"}));
    std::vector<FloatImage> images;
    auto targets = torch::empty({n}, torch::kLong);
    for (std::int64_t i = 0; i < n; ++i) {
        const int cls = static_cast<int>(i % kClasses);
        std::vector<int> general = {static_cast<int>(rng.below(2)), static_cast<int>(rng.below(2))};
        std::vector<std::uint8_t> detailed(4, 0);
        if (cls > 0) detailed[cls - 1] = 1;
        images.push_back(preprocess(render_toy_image(general, detailed, rng)));
        targets[i] = cls;
    }
    const auto x = ImageBatch::from_images(images).data;

    auto gen = make_torch_generator(derive_seed(recipe.seed, {"oracle", "shuffle"}));
    torch::optim::Adam opt(oracle.net_->parameters(), torch::optim::AdamOptions(recipe.learning_rate));
    for (int epoch = 0; epoch < recipe.epochs; ++epoch) {
        const auto order = torch::randperm(n, gen, torch::kLong);
        for (std::int64_t s = 0; s < n; s += recipe.batch_size) {
            const auto idx = order.narrow(0, s, std::min(recipe.batch_size, n - s));
            const auto loss = torch::nn::functional::cross_entropy(oracle.net_->forward(x.index_select(0, idx)),
                                                                   targets.index_select(0, idx));
            opt.zero_grad();
            loss.backward();
            opt.step();
        }
    }
    if (final_accuracy) {
        torch::NoGradGuard guard;
        *final_accuracy = (oracle.net_->forward(x).argmax(1) == targets).to(torch::kFloat64).mean().item<double>();
    }
    return oracle;
}

torch::Tensor ToyOracle::probabilities(const torch::Tensor& images) {
    torch::NoGradGuard guard;
    return torch::softmax(net_->forward(images.to(torch::kFloat32)).to(torch::kFloat64), 1);
}

void ToyOracle::save(const std::filesystem::path& path) const {
    CheckpointData data;
    data.header.stage_tag = "toy_oracle";
    data.header.arch_text = "toy-mark-cnn";
    data.header.descriptor = "conv 1-8-16-16 k4 s2 relu; linear 1024->5";
    for (const auto& p : net_->named_parameters()) data.tensors.emplace_back(p.key(), p.value());
    write_checkpoint_file(path, data);
}

ToyOracle ToyOracle::load(const std::filesystem::path& path) {
    auto data = read_checkpoint_file(path);
    if (data.header.stage_tag != "toy_oracle")
        raise(ErrorKind::VersionMismatch, "checkpoint holds '" + data.header.stage_tag + "', expected 'toy_oracle'");
    ToyOracle oracle;
    std::vector<NamedTensor> dst;
    for (const auto& p : oracle.net_->named_parameters()) dst.emplace_back(p.key(), p.value());
    assign_tensors(data.tensors, dst);
    return oracle;
}

}  // namespace gdgan
