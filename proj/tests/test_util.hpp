#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "t2p/rng.hpp"
#include "t2p/tensor.hpp"

namespace t2p::test {

inline nn::Tensor random_tensor(std::vector<int> dims, Rng& rng, double lo = -1.0, double hi = 1.0) {
    nn::Tensor t(std::move(dims));
    for (auto& v : t.vec()) v = rng.uniform(lo, hi);
    return t;
}

inline std::vector<double> random_values(size_t n, Rng& rng, double lo = 0.0, double hi = 1.0) {
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(lo, hi);
    return v;
}

// Unique per-process scratch directory under the build tree.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        dir_ = std::filesystem::temp_directory_path() /
               ("t2p_test_" + tag + "_" + std::to_string(::getpid()));
        std::filesystem::remove_all(dir_);
        std::filesystem::create_directories(dir_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(dir_, ec);
    }
    const std::filesystem::path& path() const { return dir_; }

private:
    std::filesystem::path dir_;
};

}  // namespace t2p::test
