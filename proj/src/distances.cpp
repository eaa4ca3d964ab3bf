#include "ncdkit/distances.hpp"

#include <algorithm>

#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

// Content hash of the unordered operand pair: hash the canonically ordered
// pair with length framing so ("ab","c") and ("a","bc") cannot collide.
bool canonical_less(const Bytes& a, const Bytes& b) {
  if (a.size() != b.size()) return a.size() < b.size();
  return a < b;
}

std::string pair_hash(const Bytes& x, const Bytes& y) {
  const Bytes* a = &x;
  const Bytes* b = &y;
  if (canonical_less(*b, *a)) std::swap(a, b);
  Bytes framed;
  framed.reserve(a->size() + b->size() + 20);
  framed += std::to_string(a->size());
  framed += ':';
  framed += *a;
  framed += *b;
  return sha256_hex(framed);
}

Bytes joint(const Bytes& x, const Bytes& y, ConcatOrder order) {
  return order == ConcatOrder::canonical ? canonical_concat(x, y) : x + y;
}

}  // namespace

const char* metric_name(MetricId m) {
  switch (m) {
    case MetricId::NCD: return "NCD";
    case MetricId::NID: return "NID";
    case MetricId::ID: return "ID";
    case MetricId::NGD: return "NGD";
  }
  return "?";
}

Bytes canonical_concat(const Bytes& x, const Bytes& y) {
  if (canonical_less(y, x)) return y + x;
  return x + y;
}

double ncd_from_sizes(std::uint64_t gx, std::uint64_t gy, std::uint64_t gxy,
                      std::uint32_t* clamps) {
  const std::uint64_t lo = std::min(gx, gy);
  const std::uint64_t hi = std::max(gx, gy);
  if (hi == 0)
    throw DegenerateInputError("ncd needs max(Gamma(x), Gamma(y)) > 0");
  if (gxy < lo) {
    if (clamps) ++*clamps;
    return 0.0;
  }
  return static_cast<double>(gxy - lo) / static_cast<double>(hi);
}

DistanceValue ncd(const Bytes& x, const Bytes& y, const Compressor& c,
                  ConcatOrder order) {
  if (x.empty() && y.empty())
    throw DegenerateInputError("ncd of two empty operands");
  const std::uint64_t gx = c.compressed_size(x);
  const std::uint64_t gy = c.compressed_size(y);
  const std::uint64_t gxy = c.compressed_size(joint(x, y, order));
  DistanceValue d;
  d.metric = MetricId::NCD;
  d.inputs_hash = pair_hash(x, y);
  d.source_id = c.profile().id;
  d.value = ncd_from_sizes(gx, gy, gxy, &d.clamps);
  return d;
}

DistanceValue ncd_max_form(const Bytes& x, const Bytes& y, const Compressor& c,
                           ConcatOrder order) {
  if (x.empty() && y.empty())
    throw DegenerateInputError("ncd of two empty operands");
  const std::uint64_t gx = c.compressed_size(x);
  const std::uint64_t gy = c.compressed_size(y);
  // under canonical order both directed joints are the same string
  const std::uint64_t gxy = c.compressed_size(joint(x, y, order));
  const std::uint64_t gyx = order == ConcatOrder::canonical
                                ? gxy
                                : c.compressed_size(y + x);
  const std::uint64_t hi = std::max(gx, gy);
  if (hi == 0)
    throw DegenerateInputError("ncd needs max(Gamma(x), Gamma(y)) > 0");
  const auto cond_yx = static_cast<std::int64_t>(gxy) - static_cast<std::int64_t>(gx);
  const auto cond_xy = static_cast<std::int64_t>(gyx) - static_cast<std::int64_t>(gy);
  std::int64_t num = std::max(cond_xy, cond_yx);
  DistanceValue d;
  d.metric = MetricId::NCD;
  d.inputs_hash = pair_hash(x, y);
  d.source_id = c.profile().id;
  if (num < 0) {
    num = 0;
    d.clamps = 1;
  }
  d.value = static_cast<double>(num) / static_cast<double>(hi);
  return d;
}

DistanceValue nid_ideal(std::uint64_t kx, std::uint64_t ky,
                        std::uint64_t kxy_cond, std::uint64_t kyx_cond) {
  const std::uint64_t hi = std::max(kx, ky);
  if (hi == 0) throw DegenerateInputError("nid needs max(K(x), K(y)) > 0");
  DistanceValue d;
  d.metric = MetricId::NID;
  d.source_id = "toyk";
  d.value = static_cast<double>(std::max(kxy_cond, kyx_cond)) /
            static_cast<double>(hi);
  return d;
}

}  // namespace ncdkit
