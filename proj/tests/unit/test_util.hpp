#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <string>

// Shared scratch-space and fixture-path helpers for the unit suites.

inline std::filesystem::path fixture_dir() {
    return std::filesystem::path(CDTLAB_FIXTURE_DIR);
}

inline std::string fixture(const std::string& name) {
    return (fixture_dir() / name).string();
}

// Unique per-instance directory under the system temp root, removed on scope
// exit.
struct TempDir {
    std::filesystem::path path;

    TempDir() {
        static std::atomic<int> counter{0};
        auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path = std::filesystem::temp_directory_path() /
               ("cdtlab-test-" + std::to_string(stamp) + "-" +
                std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path);
    }

    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }

    std::string str() const { return path.string(); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};
