#pragma once

#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "ncdkit/compressor.hpp"
#include "ncdkit/corpus.hpp"

namespace ncdkit {

struct BuildMeta {
  std::string timestamp;  // RFC3339; informational, never exported
  int worker_count = 1;
  std::uint64_t cache_hits = 0;
};

// Symmetric labeled matrix of pairwise distances with build provenance.
// The diagonal is reported as 0.0 by construction: the build compresses
// exactly the n documents and the n(n-1)/2 unordered distinct pairs, so the
// self-joint Gamma(dd) a true ncd(d,d) would need is never computed. Use
// ncd() directly for self-distances.
struct DistanceMatrix {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> values;
  std::string metric_id = "NCD";
  std::string compressor_id;
  BuildMeta build_meta;

  std::size_t size() const { return labels.size(); }
};

// Gamma memo keyed by (compressor id + version, content hash). Optionally
// backed by an append-only log file; concurrent get/put is safe and values
// are deterministic, so last-writer-wins never changes a value.
class GammaCache {
 public:
  GammaCache() = default;                          // memory only
  explicit GammaCache(const std::string& store_path);  // loads existing log

  static std::string key_for(const CompressorProfile& profile,
                             const Bytes& content);

  std::optional<std::uint64_t> get(const std::string& key) const;
  void put(const std::string& key, std::uint64_t value);

  // Gamma via the cache: hit returns the stored value, miss compresses and
  // stores. `hit` (optional) reports which happened.
  std::uint64_t gamma(const Bytes& x, const Compressor& c, bool* hit = nullptr);

  std::size_t entry_count() const;

  // Rewrites the backing log with one record per key. No-op for
  // memory-only caches.
  void compact();

 private:
  void load();
  void append_record(const std::string& key, std::uint64_t value);

  mutable std::mutex mu_;
  std::unordered_map<std::string, std::uint64_t> entries_;
  std::string store_path_;
};

// Full pairwise NCD matrix over a corpus: n singleton compressions plus
// n(n-1)/2 canonical-order pair compressions, fanned out over `workers`
// threads. Output is byte-identical for any worker count. All Gamma values
// go through `cache` when given.
DistanceMatrix build_matrix(const std::vector<Document>& docs,
                            const Compressor& compressor, int workers,
                            GammaCache* cache = nullptr);

// TSV round-trip: first row "#<metric>\t<compressor>", second row the
// labels, then n rows of n 6-decimal values.
void export_matrix(const DistanceMatrix& m, const std::string& path);
std::string matrix_to_tsv(const DistanceMatrix& m);
DistanceMatrix import_matrix(const std::string& path);

}  // namespace ncdkit
