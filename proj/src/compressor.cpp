#include "ncdkit/compressor.hpp"

#include <sys/stat.h>
#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

constexpr char kMagic0 = 'N';
constexpr char kMagic1 = 'K';
constexpr unsigned char kFormatVersion = 0x01;
constexpr unsigned char kModeStored = 0x00;
constexpr unsigned char kModeLz = 0x01;

constexpr std::size_t kMinMatch = 4;
constexpr int kHashBits = 16;
constexpr std::size_t kChainLimit = 1024;

void put_varint(Bytes& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<char>((v & 0x7f) | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<char>(v));
}

inline std::uint32_t hash4(const unsigned char* p) {
  // explicit byte combine: bucket layout (and thus chain truncation) must
  // not depend on host endianness
  const std::uint32_t v = static_cast<std::uint32_t>(p[0]) |
                          (static_cast<std::uint32_t>(p[1]) << 8) |
                          (static_cast<std::uint32_t>(p[2]) << 16) |
                          (static_cast<std::uint32_t>(p[3]) << 24);
  return (v * 2654435761u) >> (32 - kHashBits);
}

// Greedy LZ parse of x into (literal run, match) segments appended to `out`.
// Match sources may overlap the match itself (offset < length is legal and
// the run-length case offset=1 relies on it).
void emit_lz_payload(const Bytes& x, Bytes& out) {
  const auto* s = reinterpret_cast<const unsigned char*>(x.data());
  const std::size_t n = x.size();

  std::vector<std::int64_t> head(std::size_t{1} << kHashBits, -1);
  std::vector<std::int64_t> prev(n, -1);
  auto insert = [&](std::size_t pos) {
    if (pos + kMinMatch > n) return;
    std::uint32_t h = hash4(s + pos);
    prev[pos] = head[h];
    head[h] = static_cast<std::int64_t>(pos);
  };

  std::size_t i = 0;
  std::size_t lit_start = 0;
  while (i < n) {
    std::size_t best_len = 0;
    std::size_t best_off = 0;
    if (i + kMinMatch <= n) {
      std::int64_t cand = head[hash4(s + i)];
      std::size_t depth = 0;
      while (cand >= 0 && depth < kChainLimit) {
        const auto j = static_cast<std::size_t>(cand);
        // one-byte rejection test before the full compare
        if (best_len == 0 || (i + best_len < n && s[j + best_len] == s[i + best_len])) {
          std::size_t len = 0;
          while (i + len < n && s[j + len] == s[i + len]) ++len;
          if (len > best_len) {
            best_len = len;
            best_off = i - j;
            if (i + best_len >= n) break;  // cannot be beaten
          }
        }
        cand = prev[j];
        ++depth;
      }
    }

    if (best_len >= kMinMatch) {
      put_varint(out, i - lit_start);
      out.append(x, lit_start, i - lit_start);
      put_varint(out, best_len - kMinMatch);
      put_varint(out, best_off);
      for (std::size_t k = 0; k < best_len; ++k) insert(i + k);
      i += best_len;
      lit_start = i;
    } else {
      insert(i);
      ++i;
    }
  }
  if (lit_start < n || n == 0) {
    put_varint(out, n - lit_start);
    out.append(x, lit_start, n - lit_start);
  }
}

}  // namespace

ReferenceCompressor::ReferenceCompressor()
    : Compressor(CompressorProfile{
          .id = "nklz",
          .deterministic = true,
          .params = {{"min_match", "4"}, {"window", "unbounded"}},
          .version = "1",
      }) {}

Bytes ReferenceCompressor::compress(const Bytes& x) {
  Bytes header;
  header.push_back(kMagic0);
  header.push_back(kMagic1);
  header.push_back(static_cast<char>(kFormatVersion));

  Bytes lz;
  emit_lz_payload(x, lz);

  // stored mode keeps Gamma(x) <= |x| + overhead on incompressible input
  if (lz.size() >= x.size()) {
    header.push_back(static_cast<char>(kModeStored));
    put_varint(header, x.size());
    return header + x;
  }
  header.push_back(static_cast<char>(kModeLz));
  put_varint(header, x.size());
  return header + lz;
}

std::uint64_t ReferenceCompressor::do_compressed_size(const Bytes& x) const {
  return compress(x).size();
}

CommandCompressor::CommandCompressor(std::string id, std::string command,
                                     std::string version)
    : Compressor(CompressorProfile{
          .id = std::move(id),
          .deterministic = true,
          .params = {{"command", command}},
          .version = std::move(version),
      }),
      command_(std::move(command)) {}

std::string CommandCompressor::probe_version(const std::string& probe_command) {
  FILE* pipe = popen((probe_command + " 2>&1").c_str(), "r");
  if (!pipe) throw CompressorFailureError("version probe failed to start: " + probe_command);
  std::array<char, 256> buf{};
  std::string line;
  if (fgets(buf.data(), buf.size(), pipe)) line = buf.data();
  pclose(pipe);
  while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
  if (line.empty()) throw CompressorFailureError("version probe produced no output: " + probe_command);
  return line;
}

std::uint64_t CommandCompressor::do_compressed_size(const Bytes& x) const {
  char in_path[] = "/tmp/ncdkit-in-XXXXXX";
  char out_path[] = "/tmp/ncdkit-out-XXXXXX";
  int in_fd = mkstemp(in_path);
  if (in_fd < 0) throw CompressorFailureError("mkstemp failed");
  int out_fd = mkstemp(out_path);
  if (out_fd < 0) {
    close(in_fd);
    unlink(in_path);
    throw CompressorFailureError("mkstemp failed");
  }
  close(out_fd);

  std::uint64_t size = 0;
  std::string failure;
  ssize_t written = write(in_fd, x.data(), x.size());
  close(in_fd);
  if (written < 0 || static_cast<std::size_t>(written) != x.size()) {
    failure = "failed to stage compressor input";
  } else {
    std::string cmd = command_;
    cmd += " < ";
    cmd += in_path;
    cmd += " > ";
    cmd += out_path;
    int rc = std::system(cmd.c_str());
    if (rc != 0) {
      failure = "compressor command failed (" + command_ + "), status " +
                std::to_string(rc);
    } else {
      struct stat st {};
      if (stat(out_path, &st) != 0) {
        failure = "cannot stat compressor output";
      } else {
        size = static_cast<std::uint64_t>(st.st_size);
      }
    }
  }
  unlink(in_path);
  unlink(out_path);
  if (!failure.empty()) throw CompressorFailureError(failure);
  return size;
}

CompressorRegistry CompressorRegistry::with_builtins() {
  CompressorRegistry r;
  r.add(std::make_unique<ReferenceCompressor>());
  return r;
}

void CompressorRegistry::add(std::unique_ptr<Compressor> c) {
  const std::string id = c->profile().id;
  if (by_id_.count(id)) throw ValidationError("compressor id already registered: " + id);
  by_id_[id] = std::move(c);
}

const Compressor& CompressorRegistry::get(const std::string& id) const {
  auto it = by_id_.find(id);
  if (it == by_id_.end()) throw UnknownCompressorError(id);
  return *it->second;
}

std::vector<std::string> CompressorRegistry::ids() const {
  std::vector<std::string> out;
  out.reserve(by_id_.size());
  for (const auto& [id, _] : by_id_) out.push_back(id);
  return out;
}

void CompressorRegistry::load_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    auto t1 = line.find('\t');
    auto t2 = t1 == std::string::npos ? std::string::npos : line.find('\t', t1 + 1);
    if (t2 == std::string::npos)
      throw ParseError("compressor table record needs 3 tab-separated fields", lineno, 1);
    std::string id = line.substr(0, t1);
    std::string command = line.substr(t1 + 1, t2 - t1 - 1);
    std::string version_field = line.substr(t2 + 1);
    std::string version = version_field.starts_with("=")
                              ? version_field.substr(1)
                              : CommandCompressor::probe_version(version_field);
    add(std::make_unique<CommandCompressor>(id, command, version));
  }
}

ConditionalSize conditional_size(const Bytes& x, const Bytes& y,
                                 const Compressor& c) {
  const std::uint64_t gx = c.compressed_size(x);
  const std::uint64_t gxy = c.compressed_size(x + y);
  const auto raw = static_cast<std::int64_t>(gxy) - static_cast<std::int64_t>(gx);
  return ConditionalSize{raw, raw > 0 ? static_cast<std::uint64_t>(raw) : 0};
}

NormalityReport normality_audit(const Compressor& c,
                                std::span<const Bytes> samples) {
  if (samples.size() < 2)
    throw InsufficientSamplesError("normality audit needs >= 2 samples, got " +
                                   std::to_string(samples.size()));
  NormalityReport report;
  report.sample_count = samples.size();

  std::vector<std::uint64_t> single(samples.size());
  for (std::size_t i = 0; i < samples.size(); ++i)
    single[i] = c.compressed_size(samples[i]);

  for (std::size_t i = 0; i < samples.size(); ++i) {
    const std::uint64_t gxx = c.compressed_size(samples[i] + samples[i]);
    const std::uint64_t gap = gxx > single[i] ? gxx - single[i] : single[i] - gxx;
    report.idempotency_gap = std::max(report.idempotency_gap, gap);
  }

  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < samples.size(); ++j) {
      if (i == j) continue;
      const std::uint64_t gxy = c.compressed_size(samples[i] + samples[j]);
      const std::uint64_t gyx = c.compressed_size(samples[j] + samples[i]);
      const std::uint64_t gap = gxy > gyx ? gxy - gyx : gyx - gxy;
      report.symmetry_gap = std::max(report.symmetry_gap, gap);
      if (gxy < single[i]) ++report.monotonicity_violations;
    }
  }
  return report;
}

}  // namespace ncdkit
