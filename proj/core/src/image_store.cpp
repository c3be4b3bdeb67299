#include "gdgan/image_store.hpp"

#include "gdgan/error.hpp"
#include "gdgan/png_io.hpp"

namespace gdgan {

namespace fs = std::filesystem;

DirectoryStore::DirectoryStore(fs::path root, bool create) : root_(std::move(root)) {
    if (create) {
        std::error_code ec;
        fs::create_directories(root_, ec);
        if (ec) raise(ErrorKind::StoreWriteFailure, "cannot create " + root_.string() + ": " + ec.message());
    }
}

fs::path DirectoryStore::path_for(const std::string& id) const { return root_ / (id + ".png"); }

RawImage DirectoryStore::read(const std::string& id) const { return read_png(path_for(id)); }

bool DirectoryStore::contains(const std::string& id) const { return fs::exists(path_for(id)); }

void DirectoryStore::write(const std::string& id, const RawImage& image) {
    // Write-then-rename keeps a half-written file from ever being visible.
    const auto final_path = path_for(id);
    auto tmp = final_path;
    tmp += ".tmp";
    write_png(tmp, image);
    std::error_code ec;
    fs::rename(tmp, final_path, ec);
    if (ec) raise(ErrorKind::StoreWriteFailure, "cannot finalize " + final_path.string());
}

RawImage MemoryStore::read(const std::string& id) const {
    auto it = images_.find(id);
    if (it == images_.end()) raise(ErrorKind::IoError, "image '" + id + "' not in store");
    return it->second;
}

bool MemoryStore::contains(const std::string& id) const { return images_.count(id) != 0; }

void MemoryStore::write(const std::string& id, const RawImage& image) { images_[id] = image; }

void MemoryStore::flush_to(ImageStore& target) const {
    for (const auto& [id, img] : images_) target.write(id, img);
}

RawImage OverlayStore::read(const std::string& id) const {
    return top_.contains(id) ? top_.read(id) : base_.read(id);
}

bool OverlayStore::contains(const std::string& id) const { return top_.contains(id) || base_.contains(id); }

void OverlayStore::write(const std::string& id, const RawImage&) {
    raise(ErrorKind::StoreWriteFailure, "overlay store is read-only (writing '" + id + "')");
}

ImageBatch load_batch(const ImageStore& store, const std::vector<std::string>& ids) {
    std::vector<FloatImage> images;
    images.reserve(ids.size());
    for (const auto& id : ids) images.push_back(preprocess(store.read(id)));
    return ImageBatch::from_images(images, ids);
}

}  // namespace gdgan
