#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "t2p/image.hpp"

namespace t2p {

// Embeddings are stored as float32 (the on-disk matrix format); similarity
// accumulates in double.
using EmbeddingVector = std::vector<float>;

double cosine_similarity(std::span<const float> a, std::span<const float> b);

struct ScoredEntry {
    std::string image_id;
    double score = 0.0;
};

// Immutable after load; exhaustive parallel scan with a deterministic merge
// (descending score, ties by ascending image_id).
class EmbeddingIndex {
public:
    EmbeddingIndex() = default;
    explicit EmbeddingIndex(int dim) : dim_(dim) {}

    void add(std::string image_id, std::string image_path, const EmbeddingVector& v);

    int dim() const { return dim_; }
    size_t size() const { return ids_.size(); }
    const std::string& id_at(size_t i) const { return ids_[i]; }
    const std::string& path_at(size_t i) const { return paths_[i]; }
    std::span<const float> vector_at(size_t i) const {
        return {matrix_.data() + i * static_cast<size_t>(dim_), static_cast<size_t>(dim_)};
    }
    const std::string& path_for(const std::string& image_id) const;

    std::vector<ScoredEntry> top_k(std::span<const float> query, int k) const;

    // JSON manifest + row-major little-endian float32 matrix next to it.
    void save(const std::filesystem::path& manifest_path) const;
    static EmbeddingIndex load(const std::filesystem::path& manifest_path);

private:
    int dim_ = 0;
    std::vector<std::string> ids_;
    std::vector<std::string> paths_;
    std::vector<float> matrix_;
};

class TextEmbedder {
public:
    virtual ~TextEmbedder() = default;
    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual EmbeddingVector embed(const std::string& text) const = 0;
};

class ImageEmbedder {
public:
    virtual ~ImageEmbedder() = default;
    virtual std::string name() const = 0;
    virtual int dim() const = 0;
    virtual EmbeddingVector embed(const RasterImage& image) const = 0;
};

// Deterministic hashed character-trigram + word-unigram embedding,
// L2-normalized. Desk-scale stand-in for a pretrained text encoder.
class HashedNgramTextEmbedder final : public TextEmbedder {
public:
    explicit HashedNgramTextEmbedder(int dim = 256) : dim_(dim) {}
    std::string name() const override { return "toy-text/1"; }
    int dim() const override { return dim_; }
    EmbeddingVector embed(const std::string& text) const override;

private:
    int dim_;
};

// Deterministic signed random projection of an 8x8 RGB thumbnail,
// L2-normalized. Desk-scale stand-in for a pretrained image encoder.
class ThumbnailProjectionImageEmbedder final : public ImageEmbedder {
public:
    explicit ThumbnailProjectionImageEmbedder(int dim = 256) : dim_(dim) {}
    std::string name() const override { return "toy-image/1"; }
    int dim() const override { return dim_; }
    EmbeddingVector embed(const RasterImage& image) const override;

private:
    int dim_;
};

// Joins the input texts with single spaces, in order (the query the paper
// feeds its text encoder).
std::string join_texts(const std::vector<std::string>& texts);

}  // namespace t2p
