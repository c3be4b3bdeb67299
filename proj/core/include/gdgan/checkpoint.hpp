#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gdgan/gan_bundle.hpp"

namespace gdgan {

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

/// Versioned binary container shared by GAN bundles and the classifier.
///
/// Layout (all integers little-endian):
///   "GDGANCKP" | u32 version | str stage_tag | str arch_text | str descriptor |
///   u64 config_hash | u32 count | count × (str name | u32 ndim | i64 dims[ndim] |
///   f32 data[prod(dims)]) | u64 FNV-1a of every preceding byte
/// where str = u32 length + bytes.
struct CheckpointHeader {
    std::uint32_t format_version = kCheckpointFormatVersion;
    std::string stage_tag;
    std::string arch_text;
    std::string descriptor;
    std::uint64_t config_hash = 0;
};

struct CheckpointData {
    CheckpointHeader header;
    std::vector<NamedTensor> tensors;
};

std::vector<std::uint8_t> encode_checkpoint(const CheckpointData& data);
/// Throws CorruptFile (bad magic, checksum, truncation) or VersionMismatch.
CheckpointData decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void write_checkpoint_file(const std::filesystem::path& path, const CheckpointData& data);
CheckpointData read_checkpoint_file(const std::filesystem::path& path);

void save_checkpoint(const GanBundle& bundle, const std::filesystem::path& path, std::uint64_t config_hash = 0);
/// Rebuilds the bundle from the stored architecture. When `expected` is given,
/// a file of another stage is rejected with VersionMismatch.
GanBundle load_checkpoint(const std::filesystem::path& path, std::optional<StageTag> expected = std::nullopt);

/// Copies stored tensors into `dst` by name; shapes must match (CorruptFile otherwise).
void assign_tensors(const std::vector<NamedTensor>& stored, const std::vector<NamedTensor>& dst);

}  // namespace gdgan
