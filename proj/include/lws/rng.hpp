#pragma once

#include <cstdint>
#include <random>
#include <string>

#include "lws/tensor.hpp"

namespace lws {

using RandomEngine = std::mt19937_64;

// Uniform draw in [0, 1) with 53-bit resolution. Hand-rolled mapping so the
// stream is identical across standard library implementations.
inline double uniform01(RandomEngine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform_range(RandomEngine& rng, double lo, double hi) {
  return lo + uniform01(rng) * (hi - lo);
}

// Uniform index in [0, n); n must be positive.
std::size_t uniform_index(RandomEngine& rng, std::size_t n);

// Independent engine for (seed, stream_id); distinct ids give distinct
// streams for the same seed.
RandomEngine make_stream(std::uint64_t seed, std::uint64_t stream_id);

// Exact engine state as text, restorable with deserialize_engine.
std::string serialize_engine(const RandomEngine& rng);
RandomEngine deserialize_engine(const std::string& text);

// Entries i.i.d. uniform on [-sqrt(6 / fan_in), sqrt(6 / fan_in)].
Tensor he_uniform_init(Shape shape, std::size_t fan_in, RandomEngine& rng);

}  // namespace lws
