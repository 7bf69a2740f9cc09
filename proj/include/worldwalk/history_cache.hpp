#pragma once

// Latent history: a capacity-bounded cache whose first slot (the scene-image
// latent) is pinned and whose other slots are evicted first-in first-out, plus
// pooled cosine top-k retrieval over everything cached.

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "worldwalk/image.hpp"

namespace worldwalk {

struct LatentOrigin {
  enum class Kind { kSceneImage, kStep } kind = Kind::kStep;
  int step = 0;   // interaction step n
  int index = 0;  // latent index within the step, 1-based
  bool operator==(const LatentOrigin&) const = default;
};

/// C x H' x W' latent, channel-major.
struct LatentFrame {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> values;
  LatentOrigin origin;

  std::size_t size() const { return values.size(); }
  bool same_shape(const LatentFrame& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
  /// Throws InvalidArgument on a shape/size mismatch or a non-finite value.
  void validate() const;
  bool operator==(const LatentFrame&) const = default;
};

/// Temporal groups for f frames at ratio r: 1 + (f - 1) / r.
int latent_count(int frames, int temporal_factor);

/// Patch-mean encoder: each latent pixel is the per-channel mean of a
/// spatial_factor x spatial_factor patch mapped to [0, 1]; latent 1 encodes
/// frame 1 alone and each later latent averages the next r frames.
std::vector<LatentFrame> encode_latents(std::span<const Frame> frames, int spatial_factor,
                                        int temporal_factor, LatentOrigin origin = {});

class LatentEncoder {
 public:
  virtual ~LatentEncoder() = default;
  virtual std::vector<LatentFrame> encode(std::span<const Frame> frames, LatentOrigin origin) const = 0;
};

class PatchMeanEncoder final : public LatentEncoder {
 public:
  static constexpr int kDefaultSpatialFactor = 8;
  static constexpr int kDefaultTemporalFactor = 4;

  explicit PatchMeanEncoder(int spatial_factor = kDefaultSpatialFactor,
                            int temporal_factor = kDefaultTemporalFactor)
      : spatial_(spatial_factor), temporal_(temporal_factor) {}

  std::vector<LatentFrame> encode(std::span<const Frame> frames, LatentOrigin origin) const override {
    return encode_latents(frames, spatial_, temporal_, origin);
  }
  int spatial_factor() const { return spatial_; }
  int temporal_factor() const { return temporal_; }

 private:
  int spatial_;
  int temporal_;
};

/// Per-channel spatial mean.
std::vector<double> pool(const LatentFrame& latent);

/// <q, c> / (|q| |c|), or 0 when either norm is below 1e-12.
double cosine_similarity(std::span<const double> q, std::span<const double> c);

struct CacheEntry {
  std::uint64_t index = 0;  // 0 for the pinned latent, then arrival order from 1
  std::shared_ptr<const LatentFrame> latent;
  std::vector<double> pooled;
};

class HistoryCache;
struct CacheUpdate;
CacheUpdate cache_update(const HistoryCache& cache, std::span<const LatentFrame> step_latents);

class HistoryCache {
 public:
  static constexpr std::size_t kDefaultCapacity = 20;

  explicit HistoryCache(std::size_t capacity = kDefaultCapacity);

  std::size_t capacity() const { return capacity_; }
  /// Pinned latent plus non-pinned entries.
  std::size_t occupancy() const { return (pinned_ ? 1 : 0) + entries_.size(); }
  bool empty() const { return occupancy() == 0; }
  const std::optional<CacheEntry>& pinned() const { return pinned_; }
  const std::vector<CacheEntry>& entries() const { return entries_; }
  std::uint64_t next_index() const { return next_index_; }

  /// Copy of this cache with `latent` pinned. Throws InvalidArgument if a pin exists.
  HistoryCache with_pinned(const LatentFrame& latent) const;

  /// Visits the pinned entry (if any) then entries in arrival order.
  template <typename Fn>
  void for_each(Fn&& fn) const {
    if (pinned_) fn(*pinned_);
    for (const CacheEntry& e : entries_) fn(e);
  }

  bool operator==(const HistoryCache& o) const;

 private:
  friend CacheUpdate cache_update(const HistoryCache&, std::span<const LatentFrame>);

  void check_shape(const LatentFrame& latent) const;
  CacheEntry make_entry(const LatentFrame& latent, std::uint64_t index) const;

  std::size_t capacity_;
  std::optional<CacheEntry> pinned_;
  std::vector<CacheEntry> entries_;
  std::uint64_t next_index_ = 1;
};

struct CacheUpdate {
  HistoryCache cache;
  std::vector<std::uint64_t> evicted;  // indices in eviction order
};

/// Appends latents 1..n-1 of a step (the last one is held back for the next
/// interaction). With no pin yet, the first appended latent becomes the pin.
/// Oldest non-pinned entries are evicted until occupancy <= capacity.
CacheUpdate cache_update(const HistoryCache& cache, std::span<const LatentFrame> step_latents);

struct RetrievedEntry {
  std::uint64_t index = 0;
  double score = 0.0;
  std::shared_ptr<const LatentFrame> latent;
};

struct RetrievalResult {
  std::vector<RetrievedEntry> selected;  // descending score, ties by smaller index
};

inline constexpr std::size_t kRetrieveTopK = 3;

/// Ranks every cached latent (pinned included) by pooled cosine similarity to
/// the query. Empty cache gives an empty result.
RetrievalResult retrieve(const HistoryCache& cache, const LatentFrame& query,
                         std::size_t top_k = kRetrieveTopK);

/// Selected latents concatenated in result order.
std::vector<double> assemble_history_tokens(const RetrievalResult& result);

}  // namespace worldwalk
