#include "gdgan/gan_bundle.hpp"

#include <cstring>
#include <map>
#include <numeric>
#include <sstream>

#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

std::string to_string(StageTag tag) {
    switch (tag) {
        case StageTag::stage1: return "stage1";
        case StageTag::stage2: return "stage2";
        case StageTag::acgan: return "acgan";
    }
    return "unknown";
}

StageTag stage_tag_from_string(const std::string& s) {
    if (s == "stage1" || s == "1") return StageTag::stage1;
    if (s == "stage2" || s == "2") return StageTag::stage2;
    if (s == "acgan") return StageTag::acgan;
    raise(ErrorKind::BadArgument, "unknown stage '" + s + "'");
}

int GanArch::general_one_hot_width() const {
    return std::accumulate(general_cardinalities.begin(), general_cardinalities.end(), 0);
}

int GanArch::condition_dim() const {
    switch (stage) {
        case StageTag::stage1: return general_one_hot_width();
        case StageTag::stage2: return detailed_count;
        case StageTag::acgan: return general_one_hot_width() + detailed_count;
    }
    return 0;
}

std::string GanArch::to_text() const {
    std::ostringstream os;
    os << "stage=" << to_string(stage) << ";noise_dim=" << noise_dim << ";generator_width=" << generator_width
       << ";critic_width=" << critic_width << ";general=";
    for (std::size_t i = 0; i < general_cardinalities.size(); ++i)
        os << (i ? "," : "") << general_cardinalities[i];
    os << ";detailed=" << detailed_count;
    return os.str();
}

GanArch GanArch::from_text(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ';')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos) raise(ErrorKind::CorruptFile, "bad architecture text '" + text + "'");
        kv[item.substr(0, eq)] = item.substr(eq + 1);
    }
    try {
        GanArch a;
        a.stage = stage_tag_from_string(kv.at("stage"));
        a.noise_dim = std::stoi(kv.at("noise_dim"));
        a.generator_width = std::stoi(kv.at("generator_width"));
        a.critic_width = std::stoi(kv.at("critic_width"));
        a.general_cardinalities.clear();
        std::istringstream gs(kv.at("general"));
        std::string c;
        while (std::getline(gs, c, ',')) a.general_cardinalities.push_back(std::stoi(c));
        a.detailed_count = std::stoi(kv.at("detailed"));
        return a;
    } catch (const std::exception& e) {
        raise(ErrorKind::CorruptFile, "bad architecture text '" + text + "': " + e.what());
    }
}

std::string GanArch::descriptor() const {
    std::ostringstream os;
    const int g = generator_width;
    const int c = critic_width;
    os << "stage " << to_string(stage) << '\n';
    if (stage == StageTag::stage2) {
        const int in = 1 + detailed_count;
        os << "generator conditioning image+detailed_planes(" << detailed_count << ")\n"
           << "generator conv in=" << in << " out=" << g << " k=4 s=2 norm=none act=leaky0.2\n"
           << "generator conv in=" << g << " out=" << 2 * g << " k=4 s=2 norm=layer act=leaky0.2\n"
           << "generator conv in=" << 2 * g << " out=" << 4 * g << " k=4 s=2 norm=layer act=leaky0.2\n"
           << "generator convT in=" << 4 * g << " out=" << 2 * g << " k=4 s=2 norm=layer act=relu skip=concat\n"
           << "generator convT in=" << 4 * g << " out=" << g << " k=4 s=2 norm=layer act=relu skip=concat\n"
           << "generator convT in=" << 2 * g << " out=" << g << " k=4 s=2 norm=layer act=relu skip=concat_input\n"
           << "generator conv in=" << g + in << " out=1 k=3 s=1 norm=none act=tanh\n";
    } else {
        os << "generator conditioning noise(" << noise_dim << ")+"
           << (stage == StageTag::acgan ? "general_one_hot+detailed" : "general_one_hot") << '(' << condition_dim()
           << ")\n"
           << "generator linear in=" << noise_dim + condition_dim() << " out=" << 8 * g * 16
           << " reshape=" << 8 * g << "x4x4 norm=layer act=relu\n"
           << "generator convT in=" << 8 * g << " out=" << 4 * g << " k=4 s=2 norm=layer act=relu\n"
           << "generator convT in=" << 4 * g << " out=" << 2 * g << " k=4 s=2 norm=layer act=relu\n"
           << "generator convT in=" << 2 * g << " out=" << g << " k=4 s=2 norm=layer act=relu\n"
           << "generator convT in=" << g << " out=1 k=4 s=2 norm=none act=tanh\n";
    }
    os << "critic conv in=1 out=" << c << " k=4 s=2 norm=none act=leaky0.2\n"
       << "critic conv in=" << c << " out=" << 2 * c << " k=4 s=2 norm=layer act=leaky0.2\n"
       << "critic conv in=" << 2 * c << " out=" << 4 * c << " k=4 s=2 norm=layer act=leaky0.2\n"
       << "critic conv in=" << 4 * c << " out=" << 8 * c << " k=4 s=2 norm=layer act=leaky0.2\n"
       << "critic head " << (stage == StageTag::acgan ? "real_fake" : "wasserstein") << " out=1\n";
    if (stage != StageTag::stage2) {
        os << "critic head general out=";
        for (std::size_t i = 0; i < general_cardinalities.size(); ++i)
            os << (i ? "," : "") << general_cardinalities[i];
        os << '\n';
    }
    if (stage != StageTag::stage1) os << "critic head detailed out=" << detailed_count << " binary\n";
    return os.str();
}

GanBundle::GanBundle(GanArch arch, std::uint64_t init_seed) : arch_(std::move(arch)) {
    if (arch_.noise_dim <= 0 || arch_.generator_width <= 0 || arch_.critic_width <= 0)
        raise(ErrorKind::BadArgument, "architecture widths must be positive");
    if (arch_.general_cardinalities.empty() || arch_.detailed_count <= 0)
        raise(ErrorKind::BadArgument, "architecture needs general and detailed labels");
    auto gen = make_torch_generator(derive_seed(init_seed, {"init", to_string(arch_.stage)}));
    switch (arch_.stage) {
        case StageTag::stage1:
            noise_generator_ = NoiseGenerator(arch_.noise_dim, arch_.condition_dim(), arch_.generator_width);
            critic_ = Critic(arch_.critic_width, arch_.general_cardinalities, 0);
            break;
        case StageTag::stage2:
            refiner_ = Refiner(arch_.detailed_count, arch_.generator_width);
            critic_ = Critic(arch_.critic_width, std::vector<int>{}, arch_.detailed_count);
            break;
        case StageTag::acgan:
            noise_generator_ = NoiseGenerator(arch_.noise_dim, arch_.condition_dim(), arch_.generator_width);
            critic_ = Critic(arch_.critic_width, arch_.general_cardinalities, arch_.detailed_count);
            break;
    }
    init_parameters(generator_module(), gen);
    init_parameters(*critic_, gen);
}

NoiseGenerator& GanBundle::noise_generator() {
    if (!noise_generator_) raise(ErrorKind::BadArgument, "bundle " + to_string(stage()) + " has no noise generator");
    return noise_generator_;
}

Refiner& GanBundle::refiner() {
    if (!refiner_) raise(ErrorKind::BadArgument, "bundle " + to_string(stage()) + " has no refiner");
    return refiner_;
}

torch::nn::Module& GanBundle::generator_module() {
    if (refiner_) return *refiner_;
    return *noise_generator_;
}

const torch::nn::Module& GanBundle::generator_module() const {
    if (refiner_) return *refiner_;
    return *noise_generator_;
}

std::vector<torch::Tensor> GanBundle::generator_parameters() { return generator_module().parameters(); }
std::vector<torch::Tensor> GanBundle::critic_parameters() { return critic_->parameters(); }

std::vector<NamedTensor> GanBundle::named_parameters() const {
    std::vector<NamedTensor> out;
    for (const auto& p : generator_module().named_parameters()) out.emplace_back("generator." + p.key(), p.value());
    for (const auto& p : critic_->named_parameters()) out.emplace_back("critic." + p.key(), p.value());
    return out;
}

GanBundle GanBundle::clone() const {
    GanBundle copy(arch_, 0);
    copy.to(dtype());
    copy.copy_parameters_from(*this);
    return copy;
}

void GanBundle::to(torch::Dtype dtype) {
    generator_module().to(dtype);
    critic_->to(dtype);
}

torch::Dtype GanBundle::dtype() const {
    return critic_->parameters().front().scalar_type();
}

void GanBundle::copy_parameters_from(const GanBundle& other) {
    if (arch_.to_text() != other.arch_.to_text()) raise(ErrorKind::ShapeMismatch, "architectures differ");
    torch::NoGradGuard guard;
    auto dst = named_parameters();
    auto src = other.named_parameters();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i].second.copy_(src[i].second);
}

bool GanBundle::parameters_equal(const GanBundle& other) const {
    return tensors_bitwise_equal(named_parameters(), other.named_parameters());
}

bool tensors_bitwise_equal(const std::vector<NamedTensor>& a, const std::vector<NamedTensor>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].first != b[i].first) return false;
        const auto x = a[i].second.contiguous();
        const auto y = b[i].second.contiguous();
        if (x.scalar_type() != y.scalar_type() || x.sizes() != y.sizes()) return false;
        if (std::memcmp(x.data_ptr(), y.data_ptr(), x.nbytes()) != 0) return false;
    }
    return true;
}

std::vector<NamedTensor> snapshot(const std::vector<NamedTensor>& params) {
    std::vector<NamedTensor> out;
    out.reserve(params.size());
    for (const auto& [name, t] : params) out.emplace_back(name, t.detach().clone());
    return out;
}

}  // namespace gdgan
