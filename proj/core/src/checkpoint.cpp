#include "gdgan/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <torch/torch.h>

#include "gdgan/error.hpp"
#include "gdgan/rng.hpp"

namespace gdgan {

namespace {

constexpr char kMagic[8] = {'G', 'D', 'G', 'A', 'N', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

class Writer {
public:
    void raw(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        buf_.insert(buf_.end(), b, b + n);
    }
    template <typename T>
    void pod(T v) {
        raw(&v, sizeof v);
    }
    void str(const std::string& s) {
        pod(static_cast<std::uint32_t>(s.size()));
        raw(s.data(), s.size());
    }
    std::vector<std::uint8_t>& bytes() { return buf_; }

private:
    std::vector<std::uint8_t> buf_;
};

class Reader {
public:
    Reader(const std::vector<std::uint8_t>& b, std::size_t end) : buf_(b), end_(end) {}
    void raw(void* p, std::size_t n) {
        if (n > end_ - pos_) raise(ErrorKind::CorruptFile, "checkpoint truncated");
        std::memcpy(p, buf_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T pod() {
        T v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint32_t>();
        if (n > end_ - pos_) raise(ErrorKind::CorruptFile, "checkpoint string overruns file");
        std::string s(reinterpret_cast<const char*>(buf_.data() + pos_), n);
        pos_ += n;
        return s;
    }
    bool done() const { return pos_ == end_; }

private:
    const std::vector<std::uint8_t>& buf_;
    std::size_t end_;
    std::size_t pos_ = 0;
};

std::uint64_t checksum(const std::vector<std::uint8_t>& b, std::size_t n) {
    return fnv1a64(std::string_view(reinterpret_cast<const char*>(b.data()), n));
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data) {
    Writer w;
    w.raw(kMagic, sizeof kMagic);
    w.pod(data.header.format_version);
    w.str(data.header.stage_tag);
    w.str(data.header.arch_text);
    w.str(data.header.descriptor);
    w.pod(data.header.config_hash);
    w.pod(static_cast<std::uint32_t>(data.tensors.size()));
    for (const auto& [name, tensor] : data.tensors) {
        const auto t = tensor.detach().to(torch::kFloat32).contiguous();
        w.str(name);
        w.pod(static_cast<std::uint32_t>(t.dim()));
        for (auto d : t.sizes()) w.pod(static_cast<std::int64_t>(d));
        w.raw(t.data_ptr<float>(), t.numel() * sizeof(float));
    }
    const auto sum = checksum(w.bytes(), w.bytes().size());
    w.pod(sum);
    return std::move(w.bytes());
}

CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
    if (bytes.size() < sizeof kMagic + sizeof(std::uint64_t) || std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0)
        raise(ErrorKind::CorruptFile, "not a checkpoint (bad magic)");
    const std::size_t body = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body, sizeof stored);
    if (stored != checksum(bytes, body)) raise(ErrorKind::CorruptFile, "checkpoint checksum mismatch");

    Reader r(bytes, body);
    char magic[8];
    r.raw(magic, sizeof magic);
    CheckpointData data;
    data.header.format_version = r.pod<std::uint32_t>();
    if (data.header.format_version != kCheckpointFormatVersion)
        raise(ErrorKind::VersionMismatch, "checkpoint format version " + std::to_string(data.header.format_version) +
                                              ", expected " + std::to_string(kCheckpointFormatVersion));
    data.header.stage_tag = r.str();
    data.header.arch_text = r.str();
    data.header.descriptor = r.str();
    data.header.config_hash = r.pod<std::uint64_t>();
    const auto count = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < count; ++i) {
        auto name = r.str();
        const auto ndim = r.pod<std::uint32_t>();
        if (ndim > 8) raise(ErrorKind::CorruptFile, "implausible tensor rank");
        std::vector<std::int64_t> dims(ndim);
        std::int64_t numel = 1;
        for (auto& d : dims) {
            d = r.pod<std::int64_t>();
            if (d < 0 || d > (1LL << 31)) raise(ErrorKind::CorruptFile, "implausible tensor dimension");
            numel *= d;
        }
        auto t = torch::empty(dims, torch::kFloat32);
        r.raw(t.data_ptr<float>(), static_cast<std::size_t>(numel) * sizeof(float));
        data.tensors.emplace_back(std::move(name), std::move(t));
    }
    if (!r.done()) raise(ErrorKind::CorruptFile, "trailing bytes in checkpoint");
    return data;
}

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data) {
    const auto bytes = encode_checkpoint(data);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) raise(ErrorKind::IoError, "cannot write " + tmp.string());
        f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
        if (!f) raise(ErrorKind::IoError, "short write to " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) raise(ErrorKind::MissingArtifact, "cannot open checkpoint " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

void save_checkpoint(const GanBundle& bundle, const std::filesystem::path& path, std::uint64_t config_hash) {
    CheckpointData data;
    data.header.stage_tag = to_string(bundle.stage());
    data.header.arch_text = bundle.arch().to_text();
    data.header.descriptor = bundle.arch().descriptor();
    data.header.config_hash = config_hash;
    data.tensors = bundle.named_parameters();
    write_checkpoint_file(path, data);
}

void assign_tensors(const std::vector<NamedTensor>& stored, const std::vector<NamedTensor>& dst) {
    if (stored.size() != dst.size()) raise(ErrorKind::CorruptFile, "checkpoint parameter count differs");
    torch::NoGradGuard guard;
    for (std::size_t i = 0; i < dst.size(); ++i) {
        if (stored[i].first != dst[i].first || stored[i].second.sizes() != dst[i].second.sizes())
            raise(ErrorKind::CorruptFile, "checkpoint parameter '" + stored[i].first + "' does not match");
        dst[i].second.copy_(stored[i].second);
    }
}

GanBundle load_checkpoint(const std::filesystem::path& path, std::optional<StageTag> expected) {
    auto data = read_checkpoint_file(path);
    if (expected && data.header.stage_tag != to_string(*expected))
        raise(ErrorKind::VersionMismatch, "checkpoint holds stage '" + data.header.stage_tag + "', expected '" +
                                              to_string(*expected) + "'");
    if (data.header.stage_tag != "stage1" && data.header.stage_tag != "stage2" && data.header.stage_tag != "acgan")
        raise(ErrorKind::VersionMismatch, "checkpoint stage '" + data.header.stage_tag + "' is not a GAN bundle");
    auto arch = GanArch::from_text(data.header.arch_text);
    if (arch.descriptor() != data.header.descriptor)
        raise(ErrorKind::CorruptFile, "architecture descriptor does not match architecture parameters");
    GanBundle bundle(arch, 0);
    assign_tensors(data.tensors, bundle.named_parameters());
    return bundle;
}

}  // namespace gdgan
