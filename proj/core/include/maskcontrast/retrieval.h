#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "maskcontrast/dataset.h"
#include "maskcontrast/eval.h"

MC_NAMESPACE_BEGIN

struct SegmentDescriptor {
  static constexpr std::uint32_t kUnknownClass = std::numeric_limits<std::uint32_t>::max();

  std::string image_id;
  std::uint32_t cls = kUnknownClass;
  std::vector<Real> embedding;  // unit norm
};

class SegmentIndex {
 public:
  SegmentIndex() = default;
  SegmentIndex(std::int64_t dim, std::string split) : dim_(dim), split_(std::move(split)) {}

  /// Normalises `embedding`. Throws DataError on a duplicate image id, a
  /// dimension mismatch or a zero vector.
  void add(std::string image_id, std::uint32_t cls, std::span<const Real> embedding);

  std::int64_t dim() const { return dim_; }
  const std::string& split() const { return split_; }
  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const SegmentDescriptor& operator[](std::size_t i) const { return entries_[i]; }
  const std::vector<SegmentDescriptor>& entries() const { return entries_; }

 private:
  std::int64_t dim_ = 0;
  std::string split_;
  std::vector<SegmentDescriptor> entries_;
  std::map<std::string, std::size_t> by_id_;
};

/// One descriptor per image with a non-empty object mask: the masked mean
/// embedding, normalised. The class is the most frequent object label under
/// the mask (kUnknownClass without labels). Empty masks are skipped with a
/// warning.
SegmentIndex build_index(const std::vector<ImageEmbedding>& images, const Dataset& data, const std::string& split);

struct Neighbor {
  std::size_t index = 0;
  double similarity = 0;
};

/// Top-k entries by cosine similarity, descending; equal similarities keep
/// index order.
std::vector<Neighbor> query(const SegmentIndex& index, std::span<const Real> descriptor, std::size_t topk);

struct RetrievalScore {
  double precision = 0;  // mean precision@k over queries
  std::map<std::uint32_t, double> per_class;
  std::size_t queries = 0;
};

/// Precision@k of `queries` against `index` by class agreement. With
/// `exclude_same_id`, an entry with the query's image id is not counted as a
/// neighbour (leave-one-out on a shared split).
RetrievalScore retrieval_score(const SegmentIndex& index, const SegmentIndex& queries, std::size_t topk,
                               bool exclude_same_id = false);

// Index file: "MCSI", u32 version = 1, u32 dim, string split, u32 count, then
// per record {string image_id, u32 class, dim x f32}. Strings are u32 length
// + bytes; all integers and floats little-endian.
void save_index(const std::filesystem::path& path, const SegmentIndex& index);
SegmentIndex load_index(const std::filesystem::path& path);

MC_NAMESPACE_END
