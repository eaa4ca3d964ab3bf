#pragma once

#include <map>
#include <string>
#include <vector>

#include "ncdkit/bytes.hpp"

namespace ncdkit {

// One normalized byte object in a corpus, with provenance.
struct Document {
  std::string id;
  std::string source_path;
  Bytes raw_bytes;
  Bytes normalized_bytes;
  std::map<std::string, std::string> tags;
  std::vector<std::string> norm_steps;  // exactly as applied, in order
};

struct ManifestEntry {
  std::string id;
  std::string path;  // relative paths resolve against the manifest directory
  std::map<std::string, std::string> tags;
};

// Declarative ingestion recipe. Normalization steps are strings of the form
// "name" or "name:param" and apply to every entry, in order. Registered
// steps: none, newline-fold, whitespace-collapse, lowercase, strip-markup,
// decode-to-utf8[:utf-8|utf-16le|utf-16be|latin-1].
struct CorpusManifest {
  std::vector<std::string> normalization;
  std::vector<ManifestEntry> entries;
  std::string base_dir;

  // Parses the manifest JSON file (top-level keys "normalization" and
  // "entries"), validates ids and step names.
  static CorpusManifest load(const std::string& path);
};

// Applies one registered normalization step. Throws UnknownStepError or
// DecodeError (with byte offset).
Bytes apply_step(const std::string& step, const Bytes& input);

// Reads and normalizes every entry, in manifest order.
std::vector<Document> ingest(const CorpusManifest& manifest);

}  // namespace ncdkit
