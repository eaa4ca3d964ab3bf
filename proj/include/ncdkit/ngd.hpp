#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ncdkit/corpus.hpp"

namespace ncdkit {

// Hit-count oracle: Lambda(terms) is the hit count of the conjunctive
// query over the term set, total() the provider's index size Upsilon.
// Implementations must tolerate concurrent lambda() calls.
class HitCountProvider {
 public:
  virtual ~HitCountProvider() = default;
  virtual std::uint64_t lambda(const std::vector<std::string>& terms) = 0;
  virtual std::uint64_t total() = 0;
  virtual std::string id() const = 0;
};

// lowercased, sorted, deduplicated
std::vector<std::string> canonical_terms(std::vector<std::string> terms);

// NGD(x,y) = (max(lg L(x), lg L(y)) - lg L(x,y))
//          / (lg Upsilon - min(lg L(x), lg L(y)))
// computed in base 2 (the ratio is base-invariant). A hit-less conjunction
// (L(x,y) = 0) yields the distinct INFINITE result, not an error. A joint
// count above a marginal is impossible for a consistent index; the value is
// still computed as the formula gives and flagged.
struct NgdValue {
  bool infinite = false;
  double value = 0.0;  // meaningful when !infinite
  bool flagged_inconsistent_joint = false;
  std::string provider_id;
};

NgdValue ngd(const std::string& x, const std::string& y, HitCountProvider& p);

// Reproducible stand-in for a search engine: Lambda(terms) counts the
// documents whose normalized bytes contain every term as a case-folded
// (ASCII) substring; total() is the document count.
class OfflineProvider : public HitCountProvider {
 public:
  explicit OfflineProvider(const std::vector<Document>& docs);

  std::uint64_t lambda(const std::vector<std::string>& terms) override;
  std::uint64_t total() override;
  std::string id() const override { return "offline"; }

 private:
  std::vector<std::string> folded_docs_;
};

// Caching decorator: within max_age, repeated queries are answered from an
// append-only store of timestamped HitCountRecords; the store survives
// restarts. Web counts move, so every observation keeps its timestamp.
//
// Store format: one record per line,
//   terms \t count \t total \t provider \t RFC3339-timestamp
// (terms canonicalized and comma-joined, with %/,/tab/newline escaped).
// A malformed tail (torn append) is recovered by truncating the store back
// to the last intact record.
class CachedProvider : public HitCountProvider {
 public:
  using Clock = std::function<std::int64_t()>;  // epoch seconds

  CachedProvider(HitCountProvider& inner, std::string store_path,
                 std::int64_t max_age_seconds, Clock clock = nullptr);

  std::uint64_t lambda(const std::vector<std::string>& terms) override;
  std::uint64_t total() override { return inner_.total(); }
  std::string id() const override { return inner_.id(); }

  std::uint64_t inner_calls() const { return inner_calls_; }

  struct Record {
    std::vector<std::string> terms;
    std::uint64_t count = 0;
    std::uint64_t total_at_query = 0;
    std::string provider_id;
    std::int64_t epoch_seconds = 0;
  };
  // all intact records currently in the store, oldest first
  static std::vector<Record> read_store(const std::string& store_path);

 private:
  void load();
  void append(const Record& r);

  HitCountProvider& inner_;
  std::string store_path_;
  std::int64_t max_age_;
  Clock clock_;
  std::mutex mu_;
  std::map<std::string, Record> newest_;  // by canonical key
  std::uint64_t inner_calls_ = 0;
};

// Live hit-count provider over an HTTP endpoint.
struct HttpProviderConfig {
  // full URL template with a {query} placeholder, e.g.
  // "http://localhost:8080/search?q={query}"
  std::string endpoint;
  // dot-path to the count in the JSON response body, e.g. "hits.count"
  std::string count_field = "count";
  std::string auth_header;  // header name; empty disables auth
  std::string auth_token;
  double requests_per_second = 2.0;
  std::uint64_t total_pages = 8'000'000'000ULL;  // Upsilon is configuration
  int max_retries = 3;
  int backoff_ms = 100;  // exponential: backoff_ms, 2x, 4x
  int timeout_seconds = 10;
};

class HttpProvider : public HitCountProvider {
 public:
  explicit HttpProvider(HttpProviderConfig config);
  ~HttpProvider() override;

  // One GET per call, token-bucket rate limited across callers; transient
  // failures (connect errors, 429, 5xx) retry with exponential backoff up
  // to max_retries. Auth failures and malformed bodies do not retry.
  std::uint64_t lambda(const std::vector<std::string>& terms) override;
  std::uint64_t total() override { return config_.total_pages; }
  std::string id() const override;

 private:
  struct Impl;
  HttpProviderConfig config_;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ncdkit
