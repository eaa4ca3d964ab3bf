#include "ncdkit/toyk.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include "ncdkit/errors.hpp"

namespace ncdkit::toyk {

namespace {

enum Op : unsigned {
  kHalt = 0,
  kOut0 = 1,
  kOut1 = 2,
  kRdcp = 3,
  kCpya = 4,
  kNota = 5,
  kReva = 6,
  kBack = 7,
};

// Interpreter over a packed program (len bits of `bits`, MSB-first).
// Returns true iff the program halts within step_budget with output of at
// most cap bits; the output is then in buf[0..out_len).
bool run_packed(int len, std::uint32_t bits, const std::string& input,
                std::int64_t step_budget, std::size_t cap, char* buf,
                std::size_t* out_len) {
  int pc = 0;
  std::size_t head = 0;
  std::size_t out = 0;
  std::int64_t steps = 0;
  // progress snapshot at the previous BACK; identical snapshots mean the
  // machine state repeats exactly, i.e. a provable infinite loop
  std::size_t back_head = SIZE_MAX, back_out = SIZE_MAX;

  auto append_all = [&](bool negate, bool reverse) -> bool {
    if (out + input.size() > cap) return false;
    if (!reverse) {
      for (char c : input) buf[out++] = negate ? ('0' + '1' - c) : c;
    } else {
      for (auto it = input.rbegin(); it != input.rend(); ++it)
        buf[out++] = negate ? ('0' + '1' - *it) : *it;
    }
    return true;
  };

  while (true) {
    if (len - pc < 3) break;  // off the end: halt
    if (++steps > step_budget) return false;
    const unsigned op = (bits >> (len - pc - 3)) & 7u;
    pc += 3;
    switch (op) {
      case kHalt:
        return *out_len = out, true;
      case kOut0:
        if (out + 1 > cap) return false;
        buf[out++] = '0';
        break;
      case kOut1:
        if (out + 1 > cap) return false;
        buf[out++] = '1';
        break;
      case kRdcp:
        if (head >= input.size()) return *out_len = out, true;
        if (out + 1 > cap) return false;
        buf[out++] = input[head++];
        break;
      case kCpya:
        if (!append_all(false, false)) return false;
        break;
      case kNota:
        if (!append_all(true, false)) return false;
        break;
      case kReva:
        if (!append_all(false, true)) return false;
        break;
      case kBack:
        if (head == back_head && out == back_out) return false;
        back_head = head;
        back_out = out;
        pc = 0;
        break;
    }
  }
  *out_len = out;
  return true;
}

std::uint32_t pack_program(const std::string& program) {
  std::uint32_t bits = 0;
  for (char c : program) bits = (bits << 1) | static_cast<std::uint32_t>(c == '1');
  return bits;
}

std::string unpack_program(int len, std::uint32_t bits) {
  std::string p(static_cast<std::size_t>(len), '0');
  for (int i = 0; i < len; ++i)
    if ((bits >> (len - 1 - i)) & 1u) p[static_cast<std::size_t>(i)] = '1';
  return p;
}

void check_budgets(const Budgets& b) {
  if (b.max_program_bits < 0 || b.max_program_bits > kMaxProgramBits)
    throw BudgetTooLargeError(
        "max program length " + std::to_string(b.max_program_bits) +
        " exceeds enumeration guard " + std::to_string(kMaxProgramBits));
  if (b.steps < 1) throw BudgetTooLargeError("step budget must be >= 1");
}

void check_bits(const std::string& s) {
  for (char c : s)
    if (c != '0' && c != '1')
      throw ValidationError("bit-string may contain only '0'/'1': " + s);
}

KResult from_lookup(const OutputTable& table, const std::string& x,
                    Budgets b) {
  KResult r;
  r.budget = b;
  if (auto hit = table.lookup(x)) {
    r.known = true;
    r.k_value = hit->first;
    r.witness = hit->second;
  }
  return r;
}

}  // namespace

RunOutcome run_program(const std::string& program, const std::string& input,
                       std::int64_t step_budget, std::size_t max_output_bits) {
  check_bits(program);
  check_bits(input);
  if (program.size() > static_cast<std::size_t>(kMaxProgramBits))
    throw BudgetTooLargeError("program longer than enumeration guard");
  std::vector<char> buf(std::max<std::size_t>(max_output_bits, 1));
  std::size_t out_len = 0;
  RunOutcome r;
  r.halted = run_packed(static_cast<int>(program.size()),
                        pack_program(program), input, step_budget,
                        max_output_bits, buf.data(), &out_len);
  if (r.halted) r.output.assign(buf.data(), out_len);
  return r;
}

OutputTable OutputTable::build(const std::string& input, Budgets b,
                               std::size_t max_output_bits, int workers) {
  check_budgets(b);
  check_bits(input);
  workers = std::max(workers, 1);

  // global enumeration index g <-> (len, pattern): the strata of lengths
  // 0..L laid end to end; g+1's top bit position gives the length
  const std::uint64_t total =
      (std::uint64_t{2} << b.max_program_bits) - 1;  // 2^(L+1) - 1 programs
  using Local = std::unordered_map<std::string, std::pair<int, std::uint32_t>>;
  std::vector<Local> locals(static_cast<std::size_t>(workers));

  auto scan = [&](std::uint64_t begin, std::uint64_t end, Local& best) {
    std::vector<char> buf(std::max<std::size_t>(max_output_bits, 1));
    std::string key;
    for (std::uint64_t g = begin; g < end; ++g) {
      const int len = static_cast<int>(std::bit_width(g + 1)) - 1;
      const auto pattern =
          static_cast<std::uint32_t>(g + 1 - (std::uint64_t{1} << len));
      std::size_t out_len = 0;
      if (!run_packed(len, pattern, input, b.steps, max_output_bits,
                      buf.data(), &out_len))
        continue;
      key.assign(buf.data(), out_len);
      // first hit within a chunk is the canonical minimum for that chunk
      best.emplace(key, std::make_pair(len, pattern));
    }
  };

  if (workers == 1) {
    scan(0, total, locals[0]);
  } else {
    std::vector<std::thread> threads;
    for (int w = 0; w < workers; ++w) {
      const std::uint64_t begin = total * static_cast<std::uint64_t>(w) /
                                  static_cast<std::uint64_t>(workers);
      const std::uint64_t end = total * static_cast<std::uint64_t>(w + 1) /
                                static_cast<std::uint64_t>(workers);
      threads.emplace_back(scan, begin, end, std::ref(locals[static_cast<std::size_t>(w)]));
    }
    for (auto& t : threads) t.join();
  }

  OutputTable table;
  // chunks are merged in ascending enumeration order, so keep-first equals
  // the sequential result for any worker count
  for (auto& local : locals)
    for (auto& [key, entry] : local) table.best_.emplace(key, entry);
  return table;
}

std::optional<std::pair<int, std::string>> OutputTable::lookup(
    const std::string& output) const {
  auto it = best_.find(output);
  if (it == best_.end()) return std::nullopt;
  return std::make_pair(it->second.first,
                        unpack_program(it->second.first, it->second.second));
}

KResult k_bounded(const std::string& x, Budgets b, int workers) {
  check_bits(x);
  auto table = OutputTable::build("", b, x.size(), workers);
  return from_lookup(table, x, b);
}

KResult k_cond_bounded(const std::string& x, const std::string& y, Budgets b,
                       int workers) {
  check_bits(x);
  auto table = OutputTable::build(y, b, x.size(), workers);
  return from_lookup(table, x, b);
}

IdResult id_distance(const std::string& x, const std::string& y, Budgets b,
                     int workers) {
  const KResult xy = k_cond_bounded(x, y, b, workers);
  const KResult yx = k_cond_bounded(y, x, b, workers);
  if (!xy.known || !yx.known) return {};
  return IdResult{true, std::max(xy.k_value, yx.k_value)};
}

KResult id_prime_distance(const std::string& x, const std::string& y,
                          Budgets b, int workers) {
  check_budgets(b);
  check_bits(x);
  check_bits(y);
  (void)workers;  // scan is cheap enough sequentially; kept for symmetry
  const std::size_t cap = std::max(x.size(), y.size());
  std::vector<char> buf(std::max<std::size_t>(cap, 1));
  KResult r;
  r.budget = b;
  const std::uint64_t total = (std::uint64_t{2} << b.max_program_bits) - 1;
  for (std::uint64_t g = 0; g < total; ++g) {
    const int len = static_cast<int>(std::bit_width(g + 1)) - 1;
    const auto pattern =
        static_cast<std::uint32_t>(g + 1 - (std::uint64_t{1} << len));
    std::size_t out_len = 0;
    if (!run_packed(len, pattern, x, b.steps, cap, buf.data(), &out_len))
      continue;
    if (out_len != y.size() || y.compare(0, y.size(), buf.data(), out_len) != 0)
      continue;
    if (!run_packed(len, pattern, y, b.steps, cap, buf.data(), &out_len))
      continue;
    if (out_len != x.size() || x.compare(0, x.size(), buf.data(), out_len) != 0)
      continue;
    r.known = true;
    r.k_value = len;
    r.witness = unpack_program(len, pattern);
    return r;
  }
  return r;
}

TheoremAuditReport theorem_audit(int n, Budgets b, int workers) {
  if (n < 0 || n > 5)
    throw BudgetTooLargeError("theorem audit is desk-scale: n must be <= 5");
  check_budgets(b);

  TheoremAuditReport rep;
  rep.n = n;
  rep.budget = b;

  for (int len = 0; len <= n; ++len)
    for (std::uint64_t v = 0; v < (std::uint64_t{1} << len); ++v)
      rep.strings.push_back(unpack_program(len, static_cast<std::uint32_t>(v)));

  const std::size_t m = rep.strings.size();
  // K(x|y) for all x, via one enumeration per conditioning string y
  std::vector<std::vector<int>> k_cond(m, std::vector<int>(m, -1));
  for (std::size_t j = 0; j < m; ++j) {
    auto table = OutputTable::build(rep.strings[j], b,
                                    static_cast<std::size_t>(n), workers);
    for (std::size_t i = 0; i < m; ++i)
      if (auto hit = table.lookup(rep.strings[i]))
        k_cond[i][j] = hit->first;
  }

  rep.id_table.assign(m, std::vector<int>(m, -1));
  rep.symmetry_ok = true;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (k_cond[i][j] >= 0 && k_cond[j][i] >= 0)
        rep.id_table[i][j] = std::max(k_cond[i][j], k_cond[j][i]);
      else
        ++rep.unknown_cells;
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    rep.c_identity = std::max(rep.c_identity, rep.id_table[i][i]);
    for (std::size_t j = 0; j < m; ++j)
      if (rep.id_table[i][j] != rep.id_table[j][i]) rep.symmetry_ok = false;
  }

  rep.triangle_slack_max = std::numeric_limits<int>::min();
  rep.log_adjusted_slack_max = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j)
      for (std::size_t k = 0; k < m; ++k) {
        const int dxz = rep.id_table[i][k];
        const int dxy = rep.id_table[i][j];
        const int dyz = rep.id_table[j][k];
        if (dxz < 0 || dxy < 0 || dyz < 0) continue;
        const int slack = dxz - dxy - dyz;
        rep.triangle_slack_max = std::max(rep.triangle_slack_max, slack);
        rep.log_adjusted_slack_max =
            std::max(rep.log_adjusted_slack_max,
                     slack - 2.0 * std::log2(static_cast<double>(dxy + dyz) + 1.0));
      }
  return rep;
}

}  // namespace ncdkit::toyk
