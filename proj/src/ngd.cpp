#include "ncdkit/ngd.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

std::string ascii_fold(const std::string& s) {
  std::string out = s;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return out;
}

std::string escape_term(const std::string& t) {
  std::string out;
  for (char c : t) {
    switch (c) {
      case '%': out += "%25"; break;
      case ',': out += "%2C"; break;
      case '\t': out += "%09"; break;
      case '\n': out += "%0A"; break;
      default: out += c;
    }
  }
  return out;
}

std::string unescape_term(const std::string& t) {
  std::string out;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == '%' && i + 2 < t.size()) {
      const std::string hex = t.substr(i + 1, 2);
      out += static_cast<char>(std::stoi(hex, nullptr, 16));
      i += 2;
    } else {
      out += t[i];
    }
  }
  return out;
}

std::string terms_key(const std::vector<std::string>& canonical) {
  std::string key;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (i) key += ',';
    key += escape_term(canonical[i]);
  }
  return key;
}

std::string rfc3339(std::int64_t epoch) {
  std::time_t t = static_cast<std::time_t>(epoch);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::int64_t parse_rfc3339(const std::string& s) {
  std::tm tm{};
  if (!strptime(s.c_str(), "%Y-%m-%dT%H:%M:%SZ", &tm))
    throw ParseError("bad timestamp '" + s + "'", 0, 0);
  return static_cast<std::int64_t>(timegm(&tm));
}

}  // namespace

std::vector<std::string> canonical_terms(std::vector<std::string> terms) {
  for (auto& t : terms) t = ascii_fold(t);
  std::sort(terms.begin(), terms.end());
  terms.erase(std::unique(terms.begin(), terms.end()), terms.end());
  return terms;
}

NgdValue ngd(const std::string& x, const std::string& y,
             HitCountProvider& p) {
  const std::uint64_t lx = p.lambda({x});
  const std::uint64_t ly = p.lambda({y});
  if (lx == 0 || ly == 0)
    throw ZeroMarginalError("ngd needs nonzero marginal hit counts (" + x +
                            ": " + std::to_string(lx) + ", " + y + ": " +
                            std::to_string(ly) + ")");
  const std::uint64_t upsilon = p.total();
  if (upsilon <= std::max(lx, ly))
    throw DegenerateTotalError(
        "index size must exceed both marginals (total " +
        std::to_string(upsilon) + ")");

  NgdValue v;
  v.provider_id = p.id();
  const std::uint64_t lxy = p.lambda({x, y});
  if (lxy == 0) {
    v.infinite = true;  // a hit-less conjunction is data, not an error
    return v;
  }
  const double log_x = std::log2(static_cast<double>(lx));
  const double log_y = std::log2(static_cast<double>(ly));
  const double log_xy = std::log2(static_cast<double>(lxy));
  const double log_total = std::log2(static_cast<double>(upsilon));
  v.value = (std::max(log_x, log_y) - log_xy) /
            (log_total - std::min(log_x, log_y));
  v.flagged_inconsistent_joint = lxy > std::min(lx, ly);
  return v;
}

OfflineProvider::OfflineProvider(const std::vector<Document>& docs) {
  if (docs.empty())
    throw EmptyCorpusError("offline provider needs a non-empty corpus");
  folded_docs_.reserve(docs.size());
  for (const auto& d : docs) folded_docs_.push_back(ascii_fold(d.normalized_bytes));
}

std::uint64_t OfflineProvider::lambda(const std::vector<std::string>& terms) {
  const auto canonical = canonical_terms(terms);
  if (canonical.empty())
    throw ValidationError("lambda needs a non-empty term set");
  std::uint64_t hits = 0;
  for (const auto& doc : folded_docs_) {
    bool all = true;
    for (const auto& t : canonical) {
      if (doc.find(t) == std::string::npos) {
        all = false;
        break;
      }
    }
    if (all) ++hits;
  }
  return hits;
}

std::uint64_t OfflineProvider::total() { return folded_docs_.size(); }

CachedProvider::CachedProvider(HitCountProvider& inner, std::string store_path,
                               std::int64_t max_age_seconds, Clock clock)
    : inner_(inner),
      store_path_(std::move(store_path)),
      max_age_(max_age_seconds),
      clock_(clock ? std::move(clock) : [] {
        return static_cast<std::int64_t>(std::time(nullptr));
      }) {
  load();
}

std::vector<CachedProvider::Record> CachedProvider::read_store(
    const std::string& store_path) {
  std::vector<Record> records;
  std::ifstream in(store_path);
  if (!in) return records;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      auto tab = line.find('\t', start);
      if (tab == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, tab - start));
      start = tab + 1;
    }
    if (fields.size() != 5) break;  // corrupt from here on
    Record r;
    try {
      if (!fields[0].empty()) {
        std::size_t s = 0;
        for (;;) {
          auto c = fields[0].find(',', s);
          r.terms.push_back(unescape_term(
              fields[0].substr(s, c == std::string::npos ? c : c - s)));
          if (c == std::string::npos) break;
          s = c + 1;
        }
      }
      std::size_t used = 0;
      r.count = std::stoull(fields[1], &used);
      if (used != fields[1].size()) break;
      r.total_at_query = std::stoull(fields[2], &used);
      if (used != fields[2].size()) break;
      r.provider_id = fields[3];
      r.epoch_seconds = parse_rfc3339(fields[4]);
    } catch (const std::exception&) {
      break;
    }
    records.push_back(std::move(r));
  }
  return records;
}

void CachedProvider::load() {
  const auto records = read_store(store_path_);

  // recovery by truncation: rewrite the store to exactly the intact
  // records, dropping any corrupt tail
  std::ifstream probe(store_path_, std::ios::binary | std::ios::ate);
  if (probe) {
    std::size_t intact_lines = records.size();
    std::ifstream count_in(store_path_);
    std::string line;
    std::size_t total_lines = 0;
    while (std::getline(count_in, line)) ++total_lines;
    if (total_lines != intact_lines) {
      std::string good;
      for (const auto& r : records) {
        good += terms_key(r.terms) + '\t' + std::to_string(r.count) + '\t' +
                std::to_string(r.total_at_query) + '\t' + r.provider_id +
                '\t' + rfc3339(r.epoch_seconds) + '\n';
      }
      std::ofstream out(store_path_, std::ios::trunc | std::ios::binary);
      if (!out)
        throw StoreCorruptError("cannot truncate corrupt store: " + store_path_);
      out << good;
    }
  }

  for (const auto& r : records) newest_[terms_key(r.terms)] = r;
}

void CachedProvider::append(const Record& r) {
  std::ofstream out(store_path_, std::ios::app);
  if (!out) throw StoreCorruptError("cannot append to store: " + store_path_);
  out << terms_key(r.terms) << '\t' << r.count << '\t' << r.total_at_query
      << '\t' << r.provider_id << '\t' << rfc3339(r.epoch_seconds) << '\n';
}

std::uint64_t CachedProvider::lambda(const std::vector<std::string>& terms) {
  const auto canonical = canonical_terms(terms);
  const std::string key = terms_key(canonical);
  std::lock_guard lock(mu_);
  const std::int64_t now = clock_();
  auto it = newest_.find(key);
  if (it != newest_.end() && it->second.provider_id == inner_.id() &&
      now - it->second.epoch_seconds <= max_age_)
    return it->second.count;

  ++inner_calls_;
  Record r;
  r.terms = canonical;
  r.count = inner_.lambda(canonical);
  r.total_at_query = inner_.total();
  r.provider_id = inner_.id();
  r.epoch_seconds = now;
  append(r);
  newest_[key] = r;
  return r.count;
}

// --- HTTP provider -----------------------------------------------------

namespace {

struct ParsedUrl {
  std::string base;  // scheme://host[:port]
  std::string path_template;
};

ParsedUrl split_url(const std::string& endpoint) {
  auto scheme_end = endpoint.find("://");
  if (scheme_end == std::string::npos)
    throw ValidationError("endpoint must be a full URL: " + endpoint);
  auto path_start = endpoint.find('/', scheme_end + 3);
  if (path_start == std::string::npos)
    return {endpoint, "/"};
  return {endpoint.substr(0, path_start), endpoint.substr(path_start)};
}

std::string url_encode(const std::string& s) {
  static const char* hex = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out += static_cast<char>(c);
    } else {
      out += '%';
      out += hex[c >> 4];
      out += hex[c & 0xf];
    }
  }
  return out;
}

class TokenBucket {
 public:
  explicit TokenBucket(double per_second)
      : rate_(per_second > 0 ? per_second : 1.0),
        capacity_(std::max(1.0, rate_)),
        tokens_(capacity_),
        last_(std::chrono::steady_clock::now()) {}

  // blocks until a token is available
  void acquire() {
    std::unique_lock lock(mu_);
    for (;;) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const std::chrono::duration<double> dt = now - last_;
    last_ = now;
    tokens_ = std::min(capacity_, tokens_ + dt.count() * rate_);
  }

  std::mutex mu_;
  const double rate_;
  const double capacity_;
  double tokens_;
  std::chrono::steady_clock::time_point last_;
};

std::uint64_t extract_count(const nlohmann::json& body,
                            const std::string& dot_path) {
  const nlohmann::json* cur = &body;
  std::size_t start = 0;
  while (start <= dot_path.size()) {
    auto dot = dot_path.find('.', start);
    const std::string field = dot_path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!cur->is_object() || !cur->contains(field))
      throw ResponseParseError("count field '" + dot_path +
                               "' missing in response body");
    cur = &cur->at(field);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (cur->is_number_unsigned()) return cur->get<std::uint64_t>();
  if (cur->is_number_integer()) {
    auto v = cur->get<std::int64_t>();
    if (v >= 0) return static_cast<std::uint64_t>(v);
  }
  if (cur->is_number_float()) {
    auto v = cur->get<double>();
    if (v >= 0) return static_cast<std::uint64_t>(v);
  }
  throw ResponseParseError("count field '" + dot_path +
                           "' is not a non-negative number");
}

}  // namespace

struct HttpProvider::Impl {
  explicit Impl(const HttpProviderConfig& cfg)
      : url(split_url(cfg.endpoint)), bucket(cfg.requests_per_second) {}

  ParsedUrl url;
  TokenBucket bucket;
};

HttpProvider::HttpProvider(HttpProviderConfig config)
    : config_(std::move(config)),
      impl_(std::make_unique<Impl>(config_)) {
  if (config_.endpoint.find("{query}") == std::string::npos)
    throw ValidationError("endpoint template needs a {query} placeholder");
}

HttpProvider::~HttpProvider() = default;

std::string HttpProvider::id() const { return "http:" + impl_->url.base; }

std::uint64_t HttpProvider::lambda(const std::vector<std::string>& terms) {
  const auto canonical = canonical_terms(terms);
  if (canonical.empty())
    throw ValidationError("lambda needs a non-empty term set");
  std::string query;
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (i) query += '+';
    query += url_encode(canonical[i]);
  }
  std::string path = impl_->url.path_template;
  for (auto pos = path.find("{query}"); pos != std::string::npos;
       pos = path.find("{query}"))
    path.replace(pos, 7, query);

  httplib::Headers headers;
  if (!config_.auth_header.empty())
    headers.emplace(config_.auth_header, config_.auth_token);

  std::string last_error;
  bool rate_limited = false;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(
          config_.backoff_ms * (1 << (attempt - 1))));
    impl_->bucket.acquire();

    httplib::Client client(impl_->url.base);
    client.set_connection_timeout(config_.timeout_seconds);
    client.set_read_timeout(config_.timeout_seconds);
    auto res = client.Get(path, headers);

    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      rate_limited = false;
      continue;
    }
    if (res->status == 401 || res->status == 403)
      throw AuthFailureError("authentication rejected (status " +
                             std::to_string(res->status) + ")");
    if (res->status == 429) {
      last_error = "rate limited by server";
      rate_limited = true;
      continue;
    }
    if (res->status >= 500) {
      last_error = "server error (status " + std::to_string(res->status) + ")";
      rate_limited = false;
      continue;
    }
    if (res->status != 200)
      throw TransportError("unexpected status " + std::to_string(res->status));

    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res->body);
    } catch (const nlohmann::json::parse_error& e) {
      throw ResponseParseError(std::string("bad response body: ") + e.what());
    }
    return extract_count(body, config_.count_field);
  }
  if (rate_limited) throw RateLimitedError(last_error);
  throw TransportError(last_error.empty() ? "request failed" : last_error);
}

}  // namespace ncdkit
