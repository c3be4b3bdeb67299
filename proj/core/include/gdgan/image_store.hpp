#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "gdgan/image.hpp"

namespace gdgan {

/// Keyed image storage. Implementations must be safe for concurrent reads.
class ImageStore {
public:
    virtual ~ImageStore() = default;
    virtual RawImage read(const std::string& id) const = 0;
    virtual bool contains(const std::string& id) const = 0;
    /// Throws StoreWriteFailure for read-only stores or I/O failure.
    virtual void write(const std::string& id, const RawImage& image) = 0;
};

/// Directory of `<image_id>.png` files.
class DirectoryStore final : public ImageStore {
public:
    explicit DirectoryStore(std::filesystem::path root, bool create = false);

    RawImage read(const std::string& id) const override;
    bool contains(const std::string& id) const override;
    void write(const std::string& id, const RawImage& image) override;

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path path_for(const std::string& id) const;

private:
    std::filesystem::path root_;
};

class MemoryStore final : public ImageStore {
public:
    RawImage read(const std::string& id) const override;
    bool contains(const std::string& id) const override;
    void write(const std::string& id, const RawImage& image) override;

    std::size_t size() const { return images_.size(); }
    /// Writes every image as PNG into a directory store.
    void flush_to(ImageStore& target) const;
    const std::map<std::string, RawImage>& images() const { return images_; }

private:
    std::map<std::string, RawImage> images_;
};

/// Read-only view that consults `top` first, then `base`.
class OverlayStore final : public ImageStore {
public:
    OverlayStore(const ImageStore& top, const ImageStore& base) : top_(top), base_(base) {}

    RawImage read(const std::string& id) const override;
    bool contains(const std::string& id) const override;
    void write(const std::string& id, const RawImage& image) override;

private:
    const ImageStore& top_;
    const ImageStore& base_;
};

/// Reads and preprocesses `ids` into a validated batch (order preserved).
ImageBatch load_batch(const ImageStore& store, const std::vector<std::string>& ids);

}  // namespace gdgan
