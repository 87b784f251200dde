#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "geoground/error.hpp"
#include "geoground/geo_index.hpp"

namespace geoground {

using Embedding = std::vector<double>;

inline constexpr std::size_t kDefaultEmbeddingDim = 512;

inline double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size())
    fail(ErrorCode::DimensionMismatch,
         "embedding dimensions differ: " + std::to_string(a.size()) + " vs " + std::to_string(b.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

inline Embedding normalized(Embedding v) {
  const double n = l2_norm(v);
  if (!(n > 0.0)) fail(ErrorCode::InvalidArgument, "cannot normalize a zero vector");
  for (double& x : v) x /= n;
  return v;
}

inline bool is_unit(std::span<const double> v, double tol = 1e-6) { return std::abs(l2_norm(v) - 1.0) <= tol; }

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Portable standard normal draws. std::normal_distribution is
// implementation-defined, which would break cross-platform determinism.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : rng_(seed) {}

  double uniform() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(2.0 * std::numbers::pi * u2);
    has_spare_ = true;
    return r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

inline Embedding random_unit_vector(std::size_t dim, std::uint64_t seed) {
  GaussianSource g(seed);
  Embedding v(dim);
  for (double& x : v) x = g.next();
  return normalized(std::move(v));
}

// Text for the place-side embedding: name, category, lat/lon.
inline std::string place_descriptor(const Poi& p) {
  char coords[64];
  std::snprintf(coords, sizeof(coords), "%.6f, %.6f", p.location.lat, p.location.lon);
  return p.name + ", " + p.category + ", " + coords;
}

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  virtual Embedding embed_text(std::string_view text) const = 0;
  virtual Embedding embed_image(std::string_view asset_ref) const = 0;
};

// Offline stand-in for a contrastive image/text encoder: every string maps to
// a seeded pseudo-random unit vector. Text and images live in separate hash
// domains, except image refs of the form "descriptor:<text>" which embed
// exactly like that text (handy for fixtures).
class HashEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit HashEmbeddingProvider(std::size_t dim = kDefaultEmbeddingDim, std::uint64_t seed = 0)
      : dim_(dim), seed_(seed) {
    if (dim_ == 0) fail(ErrorCode::InvalidArgument, "embedding dimension must be positive");
  }

  std::size_t dimension() const override { return dim_; }

  Embedding embed_text(std::string_view text) const override {
    return random_unit_vector(dim_, fnv1a64(text, fnv1a64("text", seed_ ^ 0x9e3779b97f4a7c15ULL)));
  }

  Embedding embed_image(std::string_view asset_ref) const override {
    constexpr std::string_view prefix = "descriptor:";
    if (asset_ref.starts_with(prefix)) return embed_text(asset_ref.substr(prefix.size()));
    return random_unit_vector(dim_, fnv1a64(asset_ref, fnv1a64("image", seed_ ^ 0x9e3779b97f4a7c15ULL)));
  }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

}  // namespace geoground
