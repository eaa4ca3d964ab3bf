#pragma once

#include <atomic>
#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ncdkit/bytes.hpp"

namespace ncdkit {

// Identity and parameters of a deterministic size function Gamma. Equal
// (id, params, version) must give byte-identical compressed streams.
struct CompressorProfile {
  std::string id;
  bool deterministic = false;
  std::vector<std::pair<std::string, std::string>> params;
  std::string version;
};

// A compressor exposes only its size function Gamma(x): the byte length of
// the full compressed stream, header included. Implementations must be safe
// to call concurrently.
class Compressor {
 public:
  virtual ~Compressor() = default;

  const CompressorProfile& profile() const { return profile_; }

  // Gamma(x). Counts one invocation (the counter feeds the matrix module's
  // invocation-economy checks).
  std::uint64_t compressed_size(const Bytes& x) const {
    calls_.fetch_add(1, std::memory_order_relaxed);
    return do_compressed_size(x);
  }

  std::uint64_t invocation_count() const {
    return calls_.load(std::memory_order_relaxed);
  }
  void reset_invocation_count() const {
    calls_.store(0, std::memory_order_relaxed);
  }

 protected:
  explicit Compressor(CompressorProfile p) : profile_(std::move(p)) {}
  virtual std::uint64_t do_compressed_size(const Bytes& x) const = 0;

 private:
  CompressorProfile profile_;
  mutable std::atomic<std::uint64_t> calls_{0};
};

// In-repo reference compressor (id "nklz", format version 1): greedy
// single-pass LZ with an unbounded window and byte-oriented varint framing,
// plus a stored mode so Gamma(x) <= |x| + kMaxOverhead always holds. Output
// is bit-exact across platforms; all golden values in the test suite depend
// on this format staying frozen.
class ReferenceCompressor : public Compressor {
 public:
  ReferenceCompressor();

  // The full compressed stream. compressed_size() is its length.
  static Bytes compress(const Bytes& x);

  // Header bytes + worst-case length varint for the stored mode.
  static constexpr std::uint64_t kMaxOverhead = 4 + 10;

 protected:
  std::uint64_t do_compressed_size(const Bytes& x) const override;
};

// Adapter for an external compressor: feeds input to the command's stdin in
// compress-to-stdout mode and counts output bytes. Spawns one subprocess per
// call, so concurrent use is safe. Excluded from golden tests.
class CommandCompressor : public Compressor {
 public:
  // `command` is a shell command reading stdin and writing the compressed
  // stream to stdout (e.g. "gzip -9 -c"). `version` is either a literal
  // string or, via probe_version(), the first output line of a probe command.
  CommandCompressor(std::string id, std::string command, std::string version);

  static std::string probe_version(const std::string& probe_command);

 protected:
  std::uint64_t do_compressed_size(const Bytes& x) const override;

 private:
  std::string command_;
};

// Registry of compressors by id.
class CompressorRegistry {
 public:
  // Registry with the in-repo reference compressor registered.
  static CompressorRegistry with_builtins();

  void add(std::unique_ptr<Compressor> c);
  const Compressor& get(const std::string& id) const;
  std::vector<std::string> ids() const;

  // Loads external adapters from a UTF-8 table: one record per line,
  // tab-separated fields id, command, version probe command. Lines starting
  // with '#' and blank lines are skipped. A version probe field may instead
  // be "=literal" to pin the version string directly.
  void load_table(const std::string& path);

 private:
  std::map<std::string, std::unique_ptr<Compressor>> by_id_;
};

// Gamma(y|x) = Gamma(xy) - Gamma(x), raw and clamped-at-zero. Concatenation
// is raw x-then-y byte concatenation with no separator.
struct ConditionalSize {
  std::int64_t raw;
  std::uint64_t clamped;
};
ConditionalSize conditional_size(const Bytes& x, const Bytes& y,
                                 const Compressor& c);

// Empirical compressor-quality audit over a sample set: how far Gamma is
// from the idempotency / symmetry / monotonicity a distance needs.
struct NormalityReport {
  std::uint64_t idempotency_gap = 0;      // max |Gamma(xx) - Gamma(x)|
  std::uint64_t symmetry_gap = 0;         // max |Gamma(xy) - Gamma(yx)|
  std::uint64_t monotonicity_violations = 0;  // ordered pairs Gamma(xy) < Gamma(x)
  std::size_t sample_count = 0;
};
NormalityReport normality_audit(const Compressor& c,
                                std::span<const Bytes> samples);

}  // namespace ncdkit
