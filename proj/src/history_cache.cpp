#include "worldwalk/history_cache.hpp"

#include <algorithm>
#include <cmath>

#include "worldwalk/error.hpp"
#include "worldwalk/kernels.hpp"

namespace worldwalk {

void LatentFrame::validate() const {
  if (channels <= 0 || height <= 0 || width <= 0 ||
      values.size() != static_cast<std::size_t>(channels) * height * width) {
    throw InvalidArgument("latent: values do not match C x H x W");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("latent: non-finite value");
  }
}

int latent_count(int frames, int temporal_factor) {
  if (temporal_factor < 1) throw InvalidArgument("latent_count: temporal factor must be >= 1");
  if (frames < 1 || (frames - 1) % temporal_factor != 0) {
    throw InvalidArgument("latent_count: frame count must be 1 mod the temporal factor");
  }
  return 1 + (frames - 1) / temporal_factor;
}

namespace {

LatentFrame encode_spatial(const Frame& frame, int s) {
  LatentFrame latent;
  latent.channels = 3;
  latent.height = frame.height / s;
  latent.width = frame.width / s;
  const std::size_t plane = static_cast<std::size_t>(latent.height) * latent.width;
  latent.values.assign(plane * 3, 0.0);
  const double norm = 255.0 * s * s;
  for (int ly = 0; ly < latent.height; ++ly) {
    for (int lx = 0; lx < latent.width; ++lx) {
      unsigned sum[3] = {0, 0, 0};
      for (int y = ly * s; y < (ly + 1) * s; ++y) {
        const std::uint8_t* row = &frame.pixels[(static_cast<std::size_t>(y) * frame.width + lx * s) * 3];
        for (int x = 0; x < s; ++x) {
          sum[0] += row[x * 3];
          sum[1] += row[x * 3 + 1];
          sum[2] += row[x * 3 + 2];
        }
      }
      const std::size_t at = static_cast<std::size_t>(ly) * latent.width + lx;
      for (int c = 0; c < 3; ++c) latent.values[c * plane + at] = sum[c] / norm;
    }
  }
  return latent;
}

}  // namespace

std::vector<LatentFrame> encode_latents(std::span<const Frame> frames, int spatial_factor,
                                        int temporal_factor, LatentOrigin origin) {
  if (spatial_factor < 1) throw InvalidArgument("encode_latents: spatial factor must be >= 1");
  const int count = latent_count(static_cast<int>(frames.size()), temporal_factor);
  for (const Frame& f : frames) {
    f.validate();
    if (f.width != frames[0].width || f.height != frames[0].height) {
      throw InvalidArgument("encode_latents: frames differ in size");
    }
    if (f.width % spatial_factor != 0 || f.height % spatial_factor != 0 || f.width == 0 ||
        f.height == 0) {
      throw InvalidArgument("encode_latents: frame size not divisible by the spatial factor");
    }
  }

  std::vector<LatentFrame> latents;
  latents.reserve(count);
  latents.push_back(encode_spatial(frames[0], spatial_factor));
  for (int g = 1; g < count; ++g) {
    LatentFrame acc = encode_spatial(frames[1 + (g - 1) * temporal_factor], spatial_factor);
    for (int j = 1; j < temporal_factor; ++j) {
      const LatentFrame next = encode_spatial(frames[1 + (g - 1) * temporal_factor + j], spatial_factor);
      for (std::size_t i = 0; i < acc.values.size(); ++i) acc.values[i] += next.values[i];
    }
    for (double& v : acc.values) v /= temporal_factor;
    latents.push_back(std::move(acc));
  }
  for (int i = 0; i < count; ++i) {
    latents[i].origin = origin;
    latents[i].origin.index = i + 1;
  }
  return latents;
}

std::vector<double> pool(const LatentFrame& latent) {
  const std::size_t plane = static_cast<std::size_t>(latent.height) * latent.width;
  std::vector<double> pooled(latent.channels);
  const kernels::KernelTable& k = kernels::active();
  for (int c = 0; c < latent.channels; ++c) {
    pooled[c] = k.sum(std::span<const double>(latent.values).subspan(c * plane, plane)) /
                static_cast<double>(plane);
  }
  return pooled;
}

double cosine_similarity(std::span<const double> q, std::span<const double> c) {
  if (q.size() != c.size()) throw InvalidArgument("cosine_similarity: length mismatch");
  const kernels::KernelTable& k = kernels::active();
  const double nq = std::sqrt(k.dot(q, q));
  const double nc = std::sqrt(k.dot(c, c));
  if (nq < 1e-12 || nc < 1e-12) return 0.0;
  return std::clamp(k.dot(q, c) / (nq * nc), -1.0, 1.0);
}

// ---------------------------------------------------------------------------

HistoryCache::HistoryCache(std::size_t capacity) : capacity_(capacity) {
  if (capacity < 1) throw InvalidArgument("history cache: capacity must be >= 1");
}

void HistoryCache::check_shape(const LatentFrame& latent) const {
  latent.validate();
  bool mismatch = false;
  for_each([&](const CacheEntry& e) { mismatch = mismatch || !e.latent->same_shape(latent); });
  if (mismatch) throw InvalidArgument("history cache: latent shape differs from cached latents");
}

CacheEntry HistoryCache::make_entry(const LatentFrame& latent, std::uint64_t index) const {
  return {index, std::make_shared<const LatentFrame>(latent), pool(latent)};
}

HistoryCache HistoryCache::with_pinned(const LatentFrame& latent) const {
  if (pinned_) throw InvalidArgument("history cache: pinned latent already set");
  check_shape(latent);
  HistoryCache next = *this;
  next.pinned_ = make_entry(latent, 0);
  while (next.occupancy() > next.capacity_) next.entries_.erase(next.entries_.begin());
  return next;
}

bool HistoryCache::operator==(const HistoryCache& o) const {
  auto same = [](const CacheEntry& a, const CacheEntry& b) {
    return a.index == b.index && *a.latent == *b.latent;
  };
  if (capacity_ != o.capacity_ || next_index_ != o.next_index_ ||
      pinned_.has_value() != o.pinned_.has_value() || entries_.size() != o.entries_.size()) {
    return false;
  }
  if (pinned_ && !same(*pinned_, *o.pinned_)) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (!same(entries_[i], o.entries_[i])) return false;
  }
  return true;
}

CacheUpdate cache_update(const HistoryCache& cache, std::span<const LatentFrame> step_latents) {
  CacheUpdate out{cache, {}};
  HistoryCache& next = out.cache;
  if (step_latents.size() < 2) return out;
  for (const LatentFrame& l : step_latents) {
    next.check_shape(l);
    if (!l.same_shape(step_latents.front())) {
      throw InvalidArgument("history cache: step latents differ in shape");
    }
  }
  for (std::size_t i = 0; i + 1 < step_latents.size(); ++i) {
    if (!next.pinned_) {
      next.pinned_ = next.make_entry(step_latents[i], 0);
      continue;
    }
    next.entries_.push_back(next.make_entry(step_latents[i], next.next_index_++));
  }
  std::size_t drop = 0;
  while (next.occupancy() - drop > next.capacity_) {
    out.evicted.push_back(next.entries_[drop].index);
    ++drop;
  }
  next.entries_.erase(next.entries_.begin(), next.entries_.begin() + static_cast<std::ptrdiff_t>(drop));
  return out;
}

RetrievalResult retrieve(const HistoryCache& cache, const LatentFrame& query, std::size_t top_k) {
  query.validate();
  RetrievalResult result;
  if (cache.empty()) return result;
  const std::vector<double> q = pool(query);
  std::vector<RetrievedEntry> ranked;
  ranked.reserve(cache.occupancy());
  cache.for_each([&](const CacheEntry& e) {
    if (!e.latent->same_shape(query)) {
      throw InvalidArgument("retrieve: query shape differs from cached latents");
    }
    ranked.push_back({e.index, cosine_similarity(q, e.pooled), e.latent});
  });
  const std::size_t keep = std::min(top_k, ranked.size());
  std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(keep), ranked.end(),
                    [](const RetrievedEntry& a, const RetrievedEntry& b) {
                      if (a.score != b.score) return a.score > b.score;
                      return a.index < b.index;
                    });
  ranked.resize(keep);
  result.selected = std::move(ranked);
  return result;
}

std::vector<double> assemble_history_tokens(const RetrievalResult& result) {
  std::vector<double> payload;
  std::size_t total = 0;
  for (const RetrievedEntry& e : result.selected) total += e.latent->size();
  payload.reserve(total);
  for (const RetrievedEntry& e : result.selected) {
    payload.insert(payload.end(), e.latent->values.begin(), e.latent->values.end());
  }
  return payload;
}

}  // namespace worldwalk
