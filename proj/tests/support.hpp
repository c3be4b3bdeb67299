#pragma once

#include <atomic>
#include <filesystem>
#include <mutex>
#include <set>
#include <string>
#include <unistd.h>

#include "gdgan/image_store.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<int> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("gdgan_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
        std::filesystem::remove_all(path_);
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

private:
    std::filesystem::path path_;
};

/// Store wrapper that records every id read through it.
class AuditingStore final : public gdgan::ImageStore {
public:
    explicit AuditingStore(const gdgan::ImageStore& inner) : inner_(inner) {}
    gdgan::RawImage read(const std::string& id) const override {
        std::lock_guard lock(mu_);
        reads_.insert(id);
        return inner_.read(id);
    }
    bool contains(const std::string& id) const override { return inner_.contains(id); }
    void write(const std::string&, const gdgan::RawImage&) override {
        throw std::logic_error("auditing store is read-only");
    }
    std::set<std::string> reads() const {
        std::lock_guard lock(mu_);
        return reads_;
    }

private:
    const gdgan::ImageStore& inner_;
    mutable std::mutex mu_;
    mutable std::set<std::string> reads_;
};

}  // namespace testing
