#include "maskcontrast/retrieval.h"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "maskcontrast/autodiff.h"

MC_NAMESPACE_BEGIN

namespace {

constexpr std::uint32_t kIndexVersion = 1;

double dot(std::span<const Real> a, std::span<const Real> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<double>(a[i]) * b[i];
  return s;
}

std::uint32_t majority_class(const LabelMap& labels, const ObjectMask& mask) {
  std::map<int, std::int64_t> votes;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    const int v = labels.labels[i];
    if (mask.bits()[i] && v != 0 && v != LabelMap::kIgnore) ++votes[v];
  }
  if (votes.empty()) return 0;
  auto best = votes.begin();
  for (auto it = votes.begin(); it != votes.end(); ++it)
    if (it->second > best->second) best = it;
  return static_cast<std::uint32_t>(best->first);
}

}  // namespace

void SegmentIndex::add(std::string image_id, std::uint32_t cls, std::span<const Real> embedding) {
  if (static_cast<std::int64_t>(embedding.size()) != dim_) {
    throw DataError("descriptor for " + image_id + " has dimension " + std::to_string(embedding.size()) +
                    ", index expects " + std::to_string(dim_));
  }
  if (by_id_.count(image_id)) throw DataError("duplicate image id in segment index: " + image_id);
  const double norm = std::sqrt(dot(embedding, embedding));
  if (!(norm > 1e-12) || !std::isfinite(norm)) throw DataError("descriptor for " + image_id + " has zero norm");
  SegmentDescriptor d;
  d.image_id = image_id;
  d.cls = cls;
  d.embedding.resize(embedding.size());
  for (std::size_t i = 0; i < embedding.size(); ++i) d.embedding[i] = static_cast<Real>(embedding[i] / norm);
  by_id_.emplace(std::move(image_id), entries_.size());
  entries_.push_back(std::move(d));
}

SegmentIndex build_index(const std::vector<ImageEmbedding>& images, const Dataset& data, const std::string& split) {
  if (images.size() != data.size()) throw DataError("build_index: embeddings do not match the dataset");
  if (images.empty()) throw DataError("build_index: empty dataset");
  SegmentIndex index(images.front().embeddings.dim(0), split);
  for (std::size_t i = 0; i < images.size(); ++i) {
    const Sample& s = data.samples[i];
    if (images[i].object.empty()) {
      log_warning("image " + s.id + " has an empty object mask; not indexed");
      continue;
    }
    Graph g;
    const Var pooled = masked_mean_pool(g.constant(images[i].embeddings), images[i].object.bits());
    const std::uint32_t cls = s.labels ? majority_class(*s.labels, images[i].object) : SegmentDescriptor::kUnknownClass;
    index.add(s.id, cls, pooled.value().values());
  }
  return index;
}

std::vector<Neighbor> query(const SegmentIndex& index, std::span<const Real> descriptor, std::size_t topk) {
  if (index.empty()) throw DataError("query: the segment index is empty");
  if (static_cast<std::int64_t>(descriptor.size()) != index.dim()) {
    throw DataError("query descriptor has dimension " + std::to_string(descriptor.size()) + ", index expects " +
                    std::to_string(index.dim()));
  }
  if (topk > index.size()) {
    throw DataError("topk " + std::to_string(topk) + " exceeds index size " + std::to_string(index.size()));
  }
  const double qq = dot(descriptor, descriptor);
  if (!(qq > 0)) throw DataError("query descriptor has zero norm");
  std::vector<Neighbor> all(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    const auto& e = index[i].embedding;
    all[i] = Neighbor{i, dot(descriptor, e) / std::sqrt(qq * dot(e, e))};
  }
  std::stable_sort(all.begin(), all.end(), [](const Neighbor& a, const Neighbor& b) { return a.similarity > b.similarity; });
  all.resize(topk);
  return all;
}

RetrievalScore retrieval_score(const SegmentIndex& index, const SegmentIndex& queries, std::size_t topk,
                               bool exclude_same_id) {
  if (topk == 0) throw DataError("topk must be >= 1");
  RetrievalScore score;
  std::map<std::uint32_t, std::pair<double, int>> per_class;
  for (const auto& q : queries.entries()) {
    std::vector<Neighbor> nn = query(index, q.embedding, std::min(index.size(), topk + (exclude_same_id ? 1 : 0)));
    if (exclude_same_id) {
      std::erase_if(nn, [&](const Neighbor& n) { return index[n.index].image_id == q.image_id; });
    }
    if (nn.size() > topk) nn.resize(topk);
    if (nn.empty()) continue;
    int hits = 0;
    for (const auto& n : nn) hits += index[n.index].cls == q.cls;
    const double p = static_cast<double>(hits) / static_cast<double>(nn.size());
    score.precision += p;
    per_class[q.cls].first += p;
    ++per_class[q.cls].second;
    ++score.queries;
  }
  if (score.queries) score.precision /= static_cast<double>(score.queries);
  for (const auto& [cls, acc] : per_class) score.per_class[cls] = acc.first / acc.second;
  return score;
}

void save_index(const std::filesystem::path& path, const SegmentIndex& index) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.write("MCSI", 4);
  io::write_u32(out, kIndexVersion);
  io::write_u32(out, static_cast<std::uint32_t>(index.dim()));
  io::write_string(out, index.split());
  io::write_u32(out, static_cast<std::uint32_t>(index.size()));
  for (const auto& e : index.entries()) {
    io::write_string(out, e.image_id);
    io::write_u32(out, e.cls);
    for (Real v : e.embedding) io::write_f32(out, static_cast<float>(v));
  }
  if (!out) throw Error("write failed: " + path.string());
}

SegmentIndex load_index(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open index " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "MCSI", 4) != 0) throw DataError(path.string() + ": bad MCSI magic");
  const std::uint32_t version = io::read_u32(in);
  if (version != kIndexVersion) throw DataError(path.string() + ": unsupported index version " + std::to_string(version));
  const std::uint32_t dim = io::read_u32(in);
  if (dim == 0 || dim > (1u << 16)) throw DataError(path.string() + ": implausible descriptor dimension");
  SegmentIndex index(dim, io::read_string(in, 4096));
  const std::uint32_t count = io::read_u32(in);
  std::vector<Real> v(dim);
  for (std::uint32_t r = 0; r < count; ++r) {
    std::string id = io::read_string(in, 4096);
    const std::uint32_t cls = io::read_u32(in);
    for (auto& x : v) x = static_cast<Real>(io::read_f32(in));
    index.add(std::move(id), cls, v);
  }
  return index;
}

MC_NAMESPACE_END
