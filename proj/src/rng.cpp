#include "lws/rng.hpp"

#include <cmath>
#include <sstream>

#include "lws/errors.hpp"

namespace lws {

std::size_t uniform_index(RandomEngine& rng, std::size_t n) {
  if (n == 0) throw ArgumentError("uniform_index: n must be positive");
  std::size_t i = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(n));
  return i < n ? i : n - 1;
}

RandomEngine make_stream(std::uint64_t seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream_id & 0xffffffffu),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return RandomEngine(seq);
}

std::string serialize_engine(const RandomEngine& rng) {
  std::ostringstream out;
  out << rng;
  return out.str();
}

RandomEngine deserialize_engine(const std::string& text) {
  std::istringstream in(text);
  RandomEngine rng;
  in >> rng;
  if (in.fail()) throw FormatError("invalid serialized random engine state");
  return rng;
}

Tensor he_uniform_init(Shape shape, std::size_t fan_in, RandomEngine& rng) {
  if (fan_in == 0) throw ArgumentError("he_uniform_init: fan_in must be positive");
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
  Tensor t(std::move(shape));
  for (std::size_t i = 0; i < t.numel(); ++i) {
    t[i] = uniform_range(rng, -limit, limit);
  }
  return t;
}

}  // namespace lws
