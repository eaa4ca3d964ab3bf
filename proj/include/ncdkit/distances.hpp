#pragma once

#include <cstdint>
#include <string>

#include "ncdkit/bytes.hpp"
#include "ncdkit/compressor.hpp"

namespace ncdkit {

enum class MetricId { NCD, NID, ID, NGD };

const char* metric_name(MetricId m);

// One computed distance with provenance: which metric, over which operand
// pair (content hash), under which compressor or hit-count provider.
struct DistanceValue {
  double value = 0.0;
  MetricId metric = MetricId::NCD;
  std::string inputs_hash;
  std::string source_id;
  // number of negative-numerator clamps applied (0 or 1 per value)
  std::uint32_t clamps = 0;
};

// Concatenation order for the joint term Gamma(xy).
//   canonical: operands ordered by (length, then lexicographic byte order)
//              before concatenation, making NCD exactly symmetric.
//   raw:       x-then-y as given; exposes real compressor asymmetry.
enum class ConcatOrder { canonical, raw };

// Orders {x, y} canonically and concatenates.
Bytes canonical_concat(const Bytes& x, const Bytes& y);

// NCD(x,y) = (Gamma(xy) - min(Gamma(x), Gamma(y))) / max(Gamma(x), Gamma(y)).
// A negative numerator (possible only when the compressor violates
// monotonicity) is clamped to 0 and counted in DistanceValue::clamps.
// Values above 1 are reported as-is.
DistanceValue ncd(const Bytes& x, const Bytes& y, const Compressor& c,
                  ConcatOrder order = ConcatOrder::canonical);

// Same distance computed from the max-of-conditionals form
// max(Gamma(yx) - Gamma(y), Gamma(xy) - Gamma(x)) / max(Gamma(x), Gamma(y)).
// Under canonical order both joint terms equal Gamma(x (+) y), so this is
// exactly equal to ncd(); under raw order the two joints differ on
// asymmetric compressors.
DistanceValue ncd_max_form(const Bytes& x, const Bytes& y, const Compressor& c,
                           ConcatOrder order = ConcatOrder::canonical);

// The min-form ratio from already-known sizes; shared by ncd() and the
// matrix builder so cached Gamma values go through the same arithmetic.
double ncd_from_sizes(std::uint64_t gx, std::uint64_t gy, std::uint64_t gxy,
                      std::uint32_t* clamps = nullptr);

// NID(x,y) = max(K(x|y), K(y|x)) / max(K(x), K(y)), pure arithmetic over
// K values supplied by the toyk oracle. The ideal, non-computable distance
// NCD approximates; kept as a function so the formula has exactly one home.
DistanceValue nid_ideal(std::uint64_t kx, std::uint64_t ky,
                        std::uint64_t kxy_cond, std::uint64_t kyx_cond);

}  // namespace ncdkit
