#include "ncdkit/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <set>

#include <json.hpp>

#include "ncdkit/errors.hpp"

namespace ncdkit {

namespace {

using json = nlohmann::json;

const std::set<std::string> kStepNames = {
    "none",       "newline-fold",  "whitespace-collapse",
    "lowercase",  "strip-markup",  "decode-to-utf8",
};

std::pair<std::string, std::string> split_step(const std::string& step) {
  auto colon = step.find(':');
  if (colon == std::string::npos) return {step, ""};
  return {step.substr(0, colon), step.substr(colon + 1)};
}

Bytes newline_fold(const Bytes& in) {
  Bytes out;
  out.reserve(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    if (in[i] == '\r') {
      out.push_back('\n');
      if (i + 1 < in.size() && in[i + 1] == '\n') ++i;
    } else {
      out.push_back(in[i]);
    }
  }
  return out;
}

Bytes whitespace_collapse(const Bytes& in) {
  Bytes out;
  out.reserve(in.size());
  bool in_run = false;
  for (char c : in) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_run = true;
    } else {
      if (in_run && !out.empty()) out.push_back(' ');
      in_run = false;
      out.push_back(c);
    }
  }
  return out;
}

Bytes ascii_lowercase(const Bytes& in) {
  Bytes out = in;
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 'a' - 'A';
  return out;
}

Bytes strip_markup(const Bytes& in) {
  Bytes out;
  out.reserve(in.size());
  bool in_tag = false;
  for (char c : in) {
    if (in_tag) {
      if (c == '>') in_tag = false;
    } else if (c == '<') {
      in_tag = true;
    } else {
      out.push_back(c);
    }
  }
  return out;
}

// Strict UTF-8 validation (rejects overlongs, surrogates, > U+10FFFF).
// Returns the offset of the first invalid byte, or npos if valid.
std::size_t utf8_invalid_at(const Bytes& s) {
  const auto* p = reinterpret_cast<const unsigned char*>(s.data());
  std::size_t i = 0;
  const std::size_t n = s.size();
  while (i < n) {
    const unsigned char b = p[i];
    std::size_t len;
    std::uint32_t cp;
    if (b < 0x80) {
      ++i;
      continue;
    } else if ((b & 0xe0) == 0xc0) {
      len = 2;
      cp = b & 0x1f;
    } else if ((b & 0xf0) == 0xe0) {
      len = 3;
      cp = b & 0x0f;
    } else if ((b & 0xf8) == 0xf0) {
      len = 4;
      cp = b & 0x07;
    } else {
      return i;
    }
    if (i + len > n) return i;
    for (std::size_t k = 1; k < len; ++k) {
      if ((p[i + k] & 0xc0) != 0x80) return i + k;
      cp = (cp << 6) | (p[i + k] & 0x3f);
    }
    if ((len == 2 && cp < 0x80) || (len == 3 && cp < 0x800) ||
        (len == 4 && cp < 0x10000))
      return i;  // overlong
    if (cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) return i;
    i += len;
  }
  return std::string::npos;
}

void append_utf8(Bytes& out, std::uint32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xc0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xe0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  } else {
    out.push_back(static_cast<char>(0xf0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3f)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3f)));
  }
}

Bytes decode_utf16(const Bytes& in, bool little_endian, std::size_t start) {
  if ((in.size() - start) % 2 != 0)
    throw DecodeError("utf-16 input has odd byte length", in.size() - 1);
  const auto* p = reinterpret_cast<const unsigned char*>(in.data());
  Bytes out;
  out.reserve(in.size() / 2);
  for (std::size_t i = start; i < in.size(); i += 2) {
    std::uint32_t unit = little_endian
                             ? (p[i] | (std::uint32_t{p[i + 1]} << 8))
                             : ((std::uint32_t{p[i]} << 8) | p[i + 1]);
    if (unit >= 0xd800 && unit <= 0xdbff) {
      if (i + 3 >= in.size())
        throw DecodeError("truncated utf-16 surrogate pair", i);
      std::uint32_t low = little_endian
                              ? (p[i + 2] | (std::uint32_t{p[i + 3]} << 8))
                              : ((std::uint32_t{p[i + 2]} << 8) | p[i + 3]);
      if (low < 0xdc00 || low > 0xdfff)
        throw DecodeError("unpaired utf-16 high surrogate", i);
      unit = 0x10000 + ((unit - 0xd800) << 10) + (low - 0xdc00);
      i += 2;
    } else if (unit >= 0xdc00 && unit <= 0xdfff) {
      throw DecodeError("unpaired utf-16 low surrogate", i);
    }
    append_utf8(out, unit);
  }
  return out;
}

Bytes decode_latin1(const Bytes& in) {
  Bytes out;
  out.reserve(in.size());
  for (unsigned char c : in) append_utf8(out, c);
  return out;
}

// Ensure-UTF-8 semantics: BOMs win, then NUL-free valid UTF-8 passes through
// unchanged (this is what makes the step idempotent), then the declared
// encoding applies.
Bytes decode_to_utf8(const Bytes& in, const std::string& encoding) {
  if (in.size() >= 3 && in.compare(0, 3, "\xef\xbb\xbf") == 0) {
    Bytes body = in.substr(3);
    auto bad = utf8_invalid_at(body);
    if (bad != std::string::npos)
      throw DecodeError("invalid utf-8 after BOM", bad + 3);
    return body;
  }
  if (in.size() >= 2 && in.compare(0, 2, "\xff\xfe") == 0)
    return decode_utf16(in, true, 2);
  if (in.size() >= 2 && in.compare(0, 2, "\xfe\xff") == 0)
    return decode_utf16(in, false, 2);
  if (utf8_invalid_at(in) == std::string::npos &&
      in.find('\0') == std::string::npos)
    return in;

  const std::string enc = encoding.empty() ? "utf-8" : encoding;
  if (enc == "utf-8") {
    auto bad = utf8_invalid_at(in);
    if (bad != std::string::npos) throw DecodeError("invalid utf-8", bad);
    return in;  // only reachable when the input contains NUL bytes
  }
  if (enc == "utf-16le") return decode_utf16(in, true, 0);
  if (enc == "utf-16be") return decode_utf16(in, false, 0);
  if (enc == "latin-1") return decode_latin1(in);
  throw UnknownStepError("decode-to-utf8:" + enc);
}

}  // namespace

Bytes apply_step(const std::string& step, const Bytes& input) {
  auto [name, param] = split_step(step);
  if (name == "none") return input;
  if (name == "newline-fold") return newline_fold(input);
  if (name == "whitespace-collapse") return whitespace_collapse(input);
  if (name == "lowercase") return ascii_lowercase(input);
  if (name == "strip-markup") return strip_markup(input);
  if (name == "decode-to-utf8") return decode_to_utf8(input, param);
  throw UnknownStepError(step);
}

CorpusManifest CorpusManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError(path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest: ") + e.what(), 0, 0);
  }

  CorpusManifest m;
  m.base_dir = std::filesystem::path(path).parent_path().string();
  if (j.contains("normalization")) {
    for (const auto& s : j.at("normalization")) {
      const auto step = s.get<std::string>();
      auto [name, param] = split_step(step);
      if (!kStepNames.count(name)) throw UnknownStepError(step);
      m.normalization.push_back(step);
    }
  }
  std::set<std::string> seen;
  for (const auto& e : j.at("entries")) {
    ManifestEntry entry;
    entry.id = e.at("id").get<std::string>();
    entry.path = e.at("path").get<std::string>();
    if (entry.id.empty() ||
        entry.id.find_first_of("\t\n\r") != std::string::npos)
      throw ValidationError("document id must be non-empty and contain no "
                            "tabs or newlines: '" + entry.id + "'");
    if (!seen.insert(entry.id).second) throw DuplicateIdError(entry.id);
    if (e.contains("tags"))
      for (const auto& [k, v] : e.at("tags").items())
        entry.tags[k] = v.get<std::string>();
    m.entries.push_back(std::move(entry));
  }
  return m;
}

std::vector<Document> ingest(const CorpusManifest& manifest) {
  std::vector<Document> docs;
  docs.reserve(manifest.entries.size());
  for (const auto& entry : manifest.entries) {
    std::filesystem::path p(entry.path);
    if (p.is_relative() && !manifest.base_dir.empty())
      p = std::filesystem::path(manifest.base_dir) / p;
    Document d;
    d.id = entry.id;
    d.source_path = p.string();
    d.tags = entry.tags;
    d.raw_bytes = read_file(d.source_path);
    d.normalized_bytes = d.raw_bytes;
    for (const auto& step : manifest.normalization) {
      d.normalized_bytes = apply_step(step, d.normalized_bytes);
      d.norm_steps.push_back(step);
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

}  // namespace ncdkit
