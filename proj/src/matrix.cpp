#include "ncdkit/matrix.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>
#include <thread>

#include "ncdkit/distances.hpp"
#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

std::string rfc3339_now() {
  std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string format_value(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

GammaCache::GammaCache(const std::string& store_path)
    : store_path_(store_path) {
  load();
}

std::string GammaCache::key_for(const CompressorProfile& profile,
                                const Bytes& content) {
  return profile.id + "/" + profile.version + "/" + sha256_hex(content);
}

std::optional<std::uint64_t> GammaCache::get(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void GammaCache::put(const std::string& key, std::uint64_t value) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = entries_.emplace(key, value);
  if (inserted && !store_path_.empty()) append_record(key, value);
}

std::uint64_t GammaCache::gamma(const Bytes& x, const Compressor& c,
                                bool* hit) {
  const std::string key = key_for(c.profile(), x);
  if (auto cached = get(key)) {
    if (hit) *hit = true;
    return *cached;
  }
  if (hit) *hit = false;
  const std::uint64_t value = c.compressed_size(x);
  put(key, value);
  return value;
}

std::size_t GammaCache::entry_count() const {
  std::lock_guard lock(mu_);
  return entries_.size();
}

void GammaCache::load() {
  std::ifstream in(store_path_, std::ios::binary);
  if (!in) return;  // nothing persisted yet
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string content = buf.str();

  // only newline-terminated records count; a torn final append is dropped
  std::size_t lineno = 0;
  std::size_t start = 0;
  for (auto nl = content.find('\n'); nl != std::string::npos;
       start = nl + 1, nl = content.find('\n', start)) {
    ++lineno;
    const std::string line = content.substr(start, nl - start);
    if (line.empty()) continue;
    auto tab = line.find('\t');
    bool ok = tab != std::string::npos && tab + 1 < line.size();
    std::uint64_t value = 0;
    if (ok) {
      try {
        std::size_t used = 0;
        value = std::stoull(line.substr(tab + 1), &used);
        ok = used == line.size() - tab - 1;
      } catch (const std::exception&) {
        ok = false;
      }
    }
    if (!ok) throw ParseError("bad gamma cache record", lineno, 1);
    entries_[line.substr(0, tab)] = value;
  }
}

void GammaCache::append_record(const std::string& key, std::uint64_t value) {
  std::ofstream out(store_path_, std::ios::app);
  if (!out) throw Error("cannot append to gamma cache: " + store_path_);
  out << key << '\t' << value << '\n';
}

void GammaCache::compact() {
  std::lock_guard lock(mu_);
  if (store_path_.empty()) return;
  const std::string tmp = store_path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw Error("cannot write gamma cache: " + tmp);
    for (const auto& [key, value] : entries_)
      out << key << '\t' << value << '\n';
  }
  if (std::rename(tmp.c_str(), store_path_.c_str()) != 0)
    throw Error("cannot replace gamma cache: " + store_path_);
}

DistanceMatrix build_matrix(const std::vector<Document>& docs,
                            const Compressor& compressor, int workers,
                            GammaCache* cache) {
  if (docs.size() < 2)
    throw ValidationError("matrix build needs >= 2 documents");
  if (!compressor.profile().deterministic)
    throw ValidationError("matrix builds need a deterministic compressor; '" +
                          compressor.profile().id + "' is not");
  workers = std::max(workers, 1);

  GammaCache local_cache;
  GammaCache& gc = cache ? *cache : local_cache;
  const std::size_t n = docs.size();

  DistanceMatrix m;
  m.compressor_id = compressor.profile().id;
  m.build_meta.worker_count = workers;
  m.build_meta.timestamp = rfc3339_now();
  m.labels.reserve(n);
  for (const auto& d : docs) m.labels.push_back(d.id);
  m.values.assign(n, std::vector<double>(n, 0.0));

  std::atomic<std::uint64_t> cache_hits{0};

  // singleton sizes first so pair jobs never race to compress the same doc
  std::vector<std::uint64_t> single(n);
  {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    auto work = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n || failed.load()) return;
        try {
          bool hit = false;
          single[i] = gc.gamma(docs[i].normalized_bytes, compressor, &hit);
          if (hit) cache_hits.fetch_add(1);
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mu);
          failed = true;
          error = "document '" + docs[i].id + "': " + e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failed) throw CompressorFailureError(error);
  }

  // unordered distinct pairs in fixed (i, j) order; slot writes are
  // disjoint, so any scheduling yields the same matrix
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(n * (n - 1) / 2);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);

  {
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex error_mu;
    auto work = [&] {
      for (;;) {
        const std::size_t k = next.fetch_add(1);
        if (k >= pairs.size() || failed.load()) return;
        const auto [i, j] = pairs[k];
        try {
          bool hit = false;
          const Bytes joint = canonical_concat(docs[i].normalized_bytes,
                                               docs[j].normalized_bytes);
          const std::uint64_t gxy = gc.gamma(joint, compressor, &hit);
          if (hit) cache_hits.fetch_add(1);
          const double v = ncd_from_sizes(single[i], single[j], gxy);
          m.values[i][j] = v;
          m.values[j][i] = v;
        } catch (const std::exception& e) {
          std::lock_guard lock(error_mu);
          failed = true;
          error = "pair ('" + docs[i].id + "', '" + docs[j].id + "'): " +
                  e.what();
        }
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
    if (failed) throw CompressorFailureError(error);
  }

  m.build_meta.cache_hits = cache_hits.load();
  return m;
}

std::string matrix_to_tsv(const DistanceMatrix& m) {
  std::string out = "#" + m.metric_id + "\t" + m.compressor_id + "\n";
  for (std::size_t i = 0; i < m.labels.size(); ++i) {
    out += m.labels[i];
    out += i + 1 < m.labels.size() ? '\t' : '\n';
  }
  for (const auto& row : m.values) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      out += format_value(row[j]);
      out += j + 1 < row.size() ? '\t' : '\n';
    }
  }
  return out;
}

void export_matrix(const DistanceMatrix& m, const std::string& path) {
  write_file(path, matrix_to_tsv(m));
}

namespace {

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto tab = line.find('\t', start);
    if (tab == std::string::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

}  // namespace

DistanceMatrix import_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path);

  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#')
    throw ParseError("expected '#metric\\tcompressor' header", 1, 1);
  auto header = split_tabs(line.substr(1));
  if (header.size() != 2)
    throw ParseError("header needs exactly metric and compressor", 1, 1);

  DistanceMatrix m;
  m.metric_id = header[0];
  m.compressor_id = header[1];

  if (!std::getline(in, line))
    throw ParseError("missing label row", 2, 1);
  m.labels = split_tabs(line);
  const std::size_t n = m.labels.size();
  if (n == 0 || (n == 1 && m.labels[0].empty()))
    throw ParseError("empty label row", 2, 1);

  m.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::getline(in, line))
      throw ParseError("expected " + std::to_string(n) + " data rows", 3 + i, 1);
    auto cells = split_tabs(line);
    if (cells.size() != n)
      throw ParseError("row has " + std::to_string(cells.size()) +
                           " cells, expected " + std::to_string(n),
                       3 + i, 1);
    for (std::size_t j = 0; j < n; ++j) {
      try {
        std::size_t used = 0;
        m.values[i][j] = std::stod(cells[j], &used);
        if (used != cells[j].size()) throw std::invalid_argument("trailing");
      } catch (const std::exception&) {
        throw ParseError("bad value '" + cells[j] + "'", 3 + i, j + 1);
      }
      if (!std::isfinite(m.values[i][j]))
        throw ValidationError("matrix values must be finite");
    }
  }

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (m.values[i][j] != m.values[j][i])
        throw ValidationError("matrix is not symmetric at (" +
                              m.labels[i] + ", " + m.labels[j] + ")");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (m.values[i][j] < 0)
        throw ValidationError("matrix values must be non-negative");
  return m;
}

}  // namespace ncdkit
