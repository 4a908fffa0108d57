#include "holotel/types.hpp"

#include <cmath>

#include "holotel/errors.hpp"

namespace holotel {

void GridSpec::validate() const {
  if (!(delta > 0.0) || !std::isfinite(delta))
    throw ConfigError("grid.delta", "must be finite and > 0");
  if (!(t_window > 0.0) || !std::isfinite(t_window))
    throw ConfigError("grid.t_window", "must be finite and > 0");
  if (nx < 1) throw ConfigError("grid.nx", "must be >= 1");
  if (ny < 1) throw ConfigError("grid.ny", "must be >= 1");
  if (nt < 1) throw ConfigError("grid.nt", "must be >= 1");
  for (auto [v, key] : {std::pair{x0, "grid.x0"}, std::pair{y0, "grid.y0"},
                        std::pair{t0, "grid.t0"}}) {
    if (!std::isfinite(v)) throw ConfigError(key, "must be finite");
  }
}

std::uint64_t fnv1a(const void* data, std::size_t bytes, std::uint64_t seed) {
  const auto* p = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed ? seed : 0xcbf29ce484222325ull;
  for (std::size_t i = 0; i < bytes; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace holotel
