// ncdkit: classify byte objects by compression distance.
//
// Pipeline: ingest a manifest into a normalized corpus, compute pairwise
// NCD under a deterministic compressor, cluster the matrix into a tree;
// plus NGD over hit-count providers and an exact bounded-K oracle.
//
// Exit codes: 0 success, 1 usage error, 2 data/provider error.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <CLI11.hpp>
#include <json.hpp>

#include "ncdkit/cluster.hpp"
#include "ncdkit/compressor.hpp"
#include "ncdkit/corpus.hpp"
#include "ncdkit/distances.hpp"
#include "ncdkit/errors.hpp"
#include "ncdkit/matrix.hpp"
#include "ncdkit/ngd.hpp"
#include "ncdkit/toyk.hpp"

namespace {

using json = nlohmann::json;

// Per-field resolution order: flag > environment variable > config file >
// built-in default. Fields without a listed env var skip that tier.
//   cache_dir   --cache-dir   NCDKIT_CACHE_DIR       ""  (no persistence)
//   config file --config      NCDKIT_CONFIG          (none)
//   compressor  --compressor                         "nklz"
//   total       --total                              8e9
//   workers     --workers                            1
//   verbosity   --verbose                            0
//   http.*      --endpoint .. NCDKIT_HTTP_*          (see README)
struct RunConfig {
  std::string cache_dir;
  std::string compressor = "nklz";
  std::uint64_t total = 8'000'000'000ULL;
  int workers = 1;
  int verbosity = 0;
  json file;  // raw config-file object for per-command keys

  std::string http_str(const std::string& key, const char* env,
                       const std::string& fallback) const {
    if (const char* v = std::getenv(env)) return v;
    if (file.contains("http") && file["http"].contains(key))
      return file["http"][key].get<std::string>();
    return fallback;
  }
};

std::optional<std::string> env_value(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

RunConfig resolve_config(const std::string& config_flag,
                         const std::string& cache_dir_flag,
                         int verbose_flag = 0) {
  RunConfig rc;
  std::string config_path = config_flag;
  if (config_path.empty())
    config_path = env_value("NCDKIT_CONFIG").value_or("");
  if (!config_path.empty()) {
    std::ifstream in(config_path);
    if (!in) throw ncdkit::MissingFileError(config_path);
    try {
      rc.file = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ncdkit::ParseError(std::string("config: ") + e.what(), 0, 0);
    }
    if (rc.file.contains("cache_dir")) rc.cache_dir = rc.file["cache_dir"];
    if (rc.file.contains("compressor")) rc.compressor = rc.file["compressor"];
    if (rc.file.contains("total_pages")) rc.total = rc.file["total_pages"];
    if (rc.file.contains("workers")) rc.workers = rc.file["workers"];
    if (rc.file.contains("verbosity")) rc.verbosity = rc.file["verbosity"];
  }
  if (auto env = env_value("NCDKIT_CACHE_DIR")) rc.cache_dir = *env;
  if (!cache_dir_flag.empty()) rc.cache_dir = cache_dir_flag;
  if (verbose_flag > 0) rc.verbosity = verbose_flag;
  return rc;
}

std::string gamma_cache_path(const RunConfig& rc) {
  if (rc.cache_dir.empty()) return "";
  std::filesystem::create_directories(rc.cache_dir);
  return (std::filesystem::path(rc.cache_dir) / "gamma-cache.tsv").string();
}

ncdkit::CompressorRegistry make_registry(const std::string& registry_path) {
  auto registry = ncdkit::CompressorRegistry::with_builtins();
  if (!registry_path.empty()) registry.load_table(registry_path);
  return registry;
}

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

// Shared flag state; CLI11 writes into these, commands read them.
struct Flags {
  std::string config;
  std::string cache_dir;
  int verbose = 0;
  std::string registry;
  std::string compressor;  // empty = resolve from config
  std::string format = "text";

  std::string file_a, file_b;

  std::string manifest;
  std::string out;
  int workers = 0;  // 0 = resolve from config

  std::string matrix_path;
  std::string method = "nj";
  std::string tree_format = "newick";

  std::string terms;
  std::string provider = "offline";
  std::string corpus;
  std::uint64_t total = 0;  // 0 = resolve from config
  std::string endpoint;
  std::string count_field;
  std::string auth_header;
  std::string auth_token;
  double rps = 0.0;
  std::string hit_cache;
  std::int64_t max_age = 86400;

  std::string bits;
  std::string cond;
  int audit_n = -1;
  int max_len = 18;
  std::int64_t steps = 1000;
  int toyk_workers = 1;
};

int cmd_ncd(const Flags& f) {
  const auto rc = resolve_config(f.config, f.cache_dir);
  const auto registry = make_registry(f.registry);
  const auto& comp =
      registry.get(f.compressor.empty() ? rc.compressor : f.compressor);
  const ncdkit::Bytes a = ncdkit::read_file(f.file_a);
  const ncdkit::Bytes b = ncdkit::read_file(f.file_b);
  const auto d = ncdkit::ncd(a, b, comp);
  if (f.format == "tsv") {
    std::cout << "metric\tcompressor\tinputs_hash\tvalue\n"
              << ncdkit::metric_name(d.metric) << '\t' << d.source_id << '\t'
              << d.inputs_hash << '\t' << format6(d.value) << '\n';
  } else {
    std::cout << "NCD(" << f.file_a << ", " << f.file_b
              << ") = " << format6(d.value) << " [" << d.source_id << "]\n";
  }
  return 0;
}

int cmd_matrix(const Flags& f) {
  const auto rc = resolve_config(f.config, f.cache_dir, f.verbose);
  const auto registry = make_registry(f.registry);
  const auto& comp =
      registry.get(f.compressor.empty() ? rc.compressor : f.compressor);
  const int workers = f.workers > 0 ? f.workers : rc.workers;

  const auto manifest = ncdkit::CorpusManifest::load(f.manifest);
  const auto docs = ncdkit::ingest(manifest);

  std::optional<ncdkit::GammaCache> persistent;
  const std::string cache_path = gamma_cache_path(rc);
  if (!cache_path.empty()) persistent.emplace(cache_path);

  const auto m = ncdkit::build_matrix(docs, comp, workers,
                                      persistent ? &*persistent : nullptr);
  ncdkit::export_matrix(m, f.out);
  if (rc.verbosity > 0)
    std::cerr << "matrix " << m.size() << "x" << m.size() << " -> " << f.out
              << " (workers " << workers << ", cache hits "
              << m.build_meta.cache_hits << ")\n";
  return 0;
}

int cmd_tree(const Flags& f) {
  const auto m = ncdkit::import_matrix(f.matrix_path);
  const auto tree =
      f.method == "upgma" ? ncdkit::upgma(m) : ncdkit::neighbor_joining(m);
  ncdkit::export_tree(tree,
                      f.tree_format == "dot" ? ncdkit::TreeFormat::dot
                                             : ncdkit::TreeFormat::newick,
                      f.out);
  return 0;
}

int cmd_ngd(const Flags& f) {
  const auto rc = resolve_config(f.config, f.cache_dir);
  auto comma = f.terms.find(',');
  if (comma == std::string::npos)
    throw CLI::ValidationError("--terms", "expected two comma-separated keywords");
  const std::string x = f.terms.substr(0, comma);
  const std::string y = f.terms.substr(comma + 1);

  std::unique_ptr<ncdkit::HitCountProvider> base;
  std::vector<ncdkit::Document> docs;
  if (f.provider == "offline") {
    if (f.corpus.empty())
      throw CLI::ValidationError("--corpus", "offline provider needs a manifest");
    docs = ncdkit::ingest(ncdkit::CorpusManifest::load(f.corpus));
    base = std::make_unique<ncdkit::OfflineProvider>(docs);
  } else if (f.provider == "http") {
    ncdkit::HttpProviderConfig cfg;
    cfg.endpoint = !f.endpoint.empty()
                       ? f.endpoint
                       : rc.http_str("endpoint", "NCDKIT_HTTP_ENDPOINT", "");
    if (cfg.endpoint.empty())
      throw CLI::ValidationError("--endpoint", "http provider needs an endpoint");
    cfg.count_field =
        !f.count_field.empty()
            ? f.count_field
            : rc.http_str("count_field", "NCDKIT_HTTP_COUNT_FIELD", "count");
    cfg.auth_header =
        !f.auth_header.empty()
            ? f.auth_header
            : rc.http_str("auth_header", "NCDKIT_HTTP_AUTH_HEADER", "");
    cfg.auth_token =
        !f.auth_token.empty()
            ? f.auth_token
            : rc.http_str("auth_token", "NCDKIT_HTTP_AUTH_TOKEN", "");
    const std::string rps =
        rc.http_str("requests_per_second", "NCDKIT_HTTP_RPS", "");
    cfg.requests_per_second =
        f.rps > 0 ? f.rps : (rps.empty() ? 2.0 : std::stod(rps));
    cfg.total_pages = f.total > 0 ? f.total : rc.total;
    base = std::make_unique<ncdkit::HttpProvider>(std::move(cfg));
  } else {
    throw CLI::ValidationError("--provider", "must be offline or http");
  }

  // Upsilon override for the offline provider is intentionally absent: its
  // total is the corpus size, anything else breaks the provider invariant.
  std::unique_ptr<ncdkit::CachedProvider> cached;
  ncdkit::HitCountProvider* provider = base.get();
  if (!f.hit_cache.empty()) {
    cached = std::make_unique<ncdkit::CachedProvider>(*base, f.hit_cache,
                                                      f.max_age);
    provider = cached.get();
  }

  const auto v = ncdkit::ngd(x, y, *provider);
  const std::string value_str = v.infinite ? "INFINITE" : format6(v.value);
  if (f.format == "tsv") {
    std::cout << "metric\tprovider\tx\ty\tvalue\n"
              << "NGD\t" << v.provider_id << '\t' << x << '\t' << y << '\t'
              << value_str << '\n';
  } else {
    std::cout << "NGD(" << x << ", " << y << ") = " << value_str << " ["
              << v.provider_id << "]";
    if (v.flagged_inconsistent_joint)
      std::cout << " (flag: joint count exceeds a marginal)";
    std::cout << '\n';
  }
  return 0;
}

int cmd_toyk(const Flags& f) {
  ncdkit::toyk::Budgets budgets{f.max_len, f.steps};
  if (f.audit_n >= 0) {
    const auto rep =
        ncdkit::toyk::theorem_audit(f.audit_n, budgets, f.toyk_workers);
    std::cout << "machine " << ncdkit::toyk::kMachineVersion << ", audit n="
              << rep.n << ", max-len " << rep.budget.max_program_bits
              << ", steps " << rep.budget.steps << "\n";
    std::cout << "c_identity\t" << rep.c_identity << "\n";
    std::cout << "symmetry_ok\t" << (rep.symmetry_ok ? "true" : "false")
              << "\n";
    std::cout << "triangle_slack_max\t" << rep.triangle_slack_max << "\n";
    std::cout << "log_adjusted_slack_max\t" << format6(rep.log_adjusted_slack_max)
              << "\n";
    std::cout << "unknown_cells\t" << rep.unknown_cells << "\n";
    std::cout << "id table (rows/cols in length-then-lex order; '-' unknown; "
                 "e = empty string)\n";
    std::cout << "x\\y";
    for (const auto& s : rep.strings)
      std::cout << '\t' << (s.empty() ? "e" : s);
    std::cout << '\n';
    for (std::size_t i = 0; i < rep.strings.size(); ++i) {
      std::cout << (rep.strings[i].empty() ? "e" : rep.strings[i]);
      for (std::size_t j = 0; j < rep.strings.size(); ++j) {
        if (rep.id_table[i][j] < 0)
          std::cout << "\t-";
        else
          std::cout << '\t' << rep.id_table[i][j];
      }
      std::cout << '\n';
    }
    return 0;
  }

  const auto r = f.cond.empty()
                     ? ncdkit::toyk::k_bounded(f.bits, budgets, f.toyk_workers)
                     : ncdkit::toyk::k_cond_bounded(f.bits, f.cond, budgets,
                                                    f.toyk_workers);
  const std::string kind = f.cond.empty() ? "K" : "K(.|.)";
  if (f.format == "tsv") {
    std::cout << "machine\tkind\tx\tcond\tk_bits\twitness\tmax_len\tsteps\n"
              << ncdkit::toyk::kMachineVersion << '\t' << kind << '\t'
              << f.bits << '\t' << f.cond << '\t'
              << (r.known ? std::to_string(r.k_value) : "UNKNOWN") << '\t'
              << r.witness << '\t' << f.max_len << '\t' << f.steps << '\n';
  } else if (r.known) {
    std::cout << kind << "(\"" << f.bits << "\""
              << (f.cond.empty() ? "" : " | \"" + f.cond + "\"")
              << ") = " << r.k_value << " bits, witness " << r.witness
              << "  [" << ncdkit::toyk::kMachineVersion << ", max-len "
              << f.max_len << ", steps " << f.steps << "]\n";
  } else {
    std::cout << kind << "(\"" << f.bits << "\""
              << (f.cond.empty() ? "" : " | \"" + f.cond + "\"")
              << ") = UNKNOWN within budget  [" << ncdkit::toyk::kMachineVersion
              << ", max-len " << f.max_len << ", steps " << f.steps << "]\n";
  }
  return 0;
}

int cmd_audit_compressor(const Flags& f) {
  const auto rc = resolve_config(f.config, f.cache_dir);
  const auto registry = make_registry(f.registry);
  const auto& comp =
      registry.get(f.compressor.empty() ? rc.compressor : f.compressor);
  const auto docs = ncdkit::ingest(ncdkit::CorpusManifest::load(f.manifest));
  std::vector<ncdkit::Bytes> samples;
  samples.reserve(docs.size());
  for (const auto& d : docs) samples.push_back(d.normalized_bytes);
  const auto rep = ncdkit::normality_audit(comp, samples);
  if (f.format == "tsv") {
    std::cout << "compressor\tsamples\tidempotency_gap\tsymmetry_gap\t"
                 "monotonicity_violations\n"
              << comp.profile().id << '\t' << rep.sample_count << '\t'
              << rep.idempotency_gap << '\t' << rep.symmetry_gap << '\t'
              << rep.monotonicity_violations << '\n';
  } else {
    std::cout << "normality audit of '" << comp.profile().id << "' over "
              << rep.sample_count << " samples\n"
              << "  idempotency_gap          " << rep.idempotency_gap
              << " bytes\n"
              << "  symmetry_gap             " << rep.symmetry_gap
              << " bytes\n"
              << "  monotonicity_violations  " << rep.monotonicity_violations
              << "\n";
  }
  return 0;
}

int cmd_cache_compact(const Flags& f) {
  const auto rc = resolve_config(f.config, f.cache_dir);
  const std::string path = gamma_cache_path(rc);
  if (path.empty())
    throw CLI::ValidationError("--cache-dir", "no cache directory configured");
  ncdkit::GammaCache cache(path);
  cache.compact();
  std::cout << "compacted " << path << " (" << cache.entry_count()
            << " entries)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ncdkit: compression-distance classification toolkit"};
  app.require_subcommand(1);
  Flags f;

  app.add_option("--config", f.config,
                 "config file (JSON); default $NCDKIT_CONFIG");
  app.add_option("--cache-dir", f.cache_dir,
                 "cache directory; default $NCDKIT_CACHE_DIR, else no "
                 "persistent cache");
  app.add_flag("-v,--verbose", f.verbose, "log progress to stderr");

  auto* ncd = app.add_subcommand("ncd", "NCD between two files");
  ncd->add_option("fileA", f.file_a, "first input file")->required();
  ncd->add_option("fileB", f.file_b, "second input file")->required();
  ncd->add_option("--compressor", f.compressor, "compressor id")
      ->capture_default_str();
  ncd->add_option("--registry", f.registry, "external compressor table");
  ncd->add_option("--format", f.format, "output format: text|tsv")
      ->capture_default_str();

  auto* matrix = app.add_subcommand("matrix", "pairwise NCD matrix -> TSV");
  matrix->add_option("--manifest", f.manifest, "corpus manifest (JSON)")
      ->required();
  matrix->add_option("--compressor", f.compressor, "compressor id")
      ->capture_default_str();
  matrix->add_option("--registry", f.registry, "external compressor table");
  matrix->add_option("--workers", f.workers, "worker threads (default 1)");
  matrix->add_option("--out", f.out, "output TSV path")->required();

  auto* tree = app.add_subcommand("tree", "classification tree from a matrix");
  tree->add_option("--matrix", f.matrix_path, "matrix TSV path")->required();
  tree->add_option("--method", f.method, "nj|upgma")->capture_default_str();
  tree->add_option("--format", f.tree_format, "newick|dot")
      ->capture_default_str();
  tree->add_option("--out", f.out, "output path")->required();

  auto* ngd = app.add_subcommand("ngd", "NGD between two keywords");
  ngd->add_option("--terms", f.terms, "two keywords, comma separated")
      ->required();
  ngd->add_option("--provider", f.provider, "offline|http")
      ->capture_default_str();
  ngd->add_option("--corpus", f.corpus, "manifest for the offline provider");
  ngd->add_option("--total", f.total,
                  "index size Upsilon for the http provider (default 8e9)");
  ngd->add_option("--endpoint", f.endpoint,
                  "http endpoint template with {query}");
  ngd->add_option("--count-field", f.count_field,
                  "dot-path of the count in the response body");
  ngd->add_option("--auth-header", f.auth_header, "auth header name");
  ngd->add_option("--auth-token", f.auth_token, "auth header value");
  ngd->add_option("--rps", f.rps, "request rate limit per second");
  ngd->add_option("--cache", f.hit_cache, "hit-count cache store path");
  ngd->add_option("--max-age", f.max_age, "cache max age in seconds")
      ->capture_default_str();
  ngd->add_option("--format", f.format, "output format: text|tsv")
      ->capture_default_str();

  auto* toyk = app.add_subcommand(
      "toyk", "bounded Kolmogorov oracle on the tm8-v1 micro-machine");
  toyk->add_option("--string", f.bits, "target bit-string for K");
  toyk->add_option("--cond", f.cond, "conditioning bit-string for K(x|y)");
  toyk->add_option("--audit-n", f.audit_n,
                   "run the distance-axiom audit over strings of length <= n");
  toyk->add_option("--max-len", f.max_len, "max program length in bits")
      ->capture_default_str();
  toyk->add_option("--steps", f.steps, "step budget per program run")
      ->capture_default_str();
  toyk->add_option("--workers", f.toyk_workers, "enumeration worker threads")
      ->capture_default_str();
  toyk->add_option("--format", f.format, "output format: text|tsv")
      ->capture_default_str();

  auto* audit = app.add_subcommand("audit-compressor",
                                   "normality audit over a corpus");
  audit->add_option("--manifest", f.manifest, "corpus manifest (JSON)")
      ->required();
  audit->add_option("--compressor", f.compressor, "compressor id")
      ->capture_default_str();
  audit->add_option("--registry", f.registry, "external compressor table");
  audit->add_option("--format", f.format, "output format: text|tsv")
      ->capture_default_str();

  auto* compact = app.add_subcommand("cache-compact",
                                     "rewrite the gamma cache log, one "
                                     "record per key");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // CLI11 prints --help via this path with exit code 0
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (ncd->parsed()) return cmd_ncd(f);
    if (matrix->parsed()) return cmd_matrix(f);
    if (tree->parsed()) return cmd_tree(f);
    if (ngd->parsed()) return cmd_ngd(f);
    if (toyk->parsed()) {
      if (f.audit_n < 0 && f.bits.empty() && f.cond.empty()) {
        std::cerr << "toyk: pass --string BITS or --audit-n N "
                     "(see ncdkit toyk --help)\n";
        return 1;
      }
      return cmd_toyk(f);
    }
    if (audit->parsed()) return cmd_audit_compressor(f);
    if (compact->parsed()) return cmd_cache_compact(f);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const ncdkit::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 1;
}
