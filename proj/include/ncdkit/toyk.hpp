#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace ncdkit::toyk {

// Exact bounded-resource Kolmogorov complexity oracle over a tiny fixed
// machine. Programs and data are bit-strings ('0'/'1' characters in the
// API). All golden K values depend on the opcode table staying frozen;
// any change must bump kMachineVersion.
//
// Machine tm8-v1: programs execute 3-bit opcodes MSB-first. Execution halts
// on HALT, on running past the program end (a trailing fragment of 1-2 bits
// is never executed), or on RDCP with the read head past the input end.
//
//   000 HALT   stop
//   001 OUT0   append 0 to output
//   010 OUT1   append 1 to output
//   011 RDCP   append input[head] and advance head; halts if exhausted
//   100 CPYA   append the entire input
//   101 NOTA   append the bitwise complement of the entire input
//   110 REVA   append the reversal of the entire input
//   111 BACK   jump to program start
inline constexpr const char* kMachineVersion = "tm8-v1";

// Enumeration guard: k queries refuse budgets beyond this.
inline constexpr int kMaxProgramBits = 24;

// Machine constants. A literal-emit program for x is 3|x| bits of OUT ops
// (plus off-end halt); the copy program is the single CPYA opcode.
inline constexpr int kBitsPerSymbol = 3;
inline constexpr int kLiteralOverheadBits = 0;
inline constexpr int kCopyProgramBits = 3;

struct Budgets {
  int max_program_bits = 18;
  std::int64_t steps = 1000;
};

struct RunOutcome {
  bool halted = false;
  std::string output;
};

// Runs one program on one input. Non-halting (budget exhausted, provable
// loop, or output past max_output_bits) reports halted = false.
RunOutcome run_program(const std::string& program, const std::string& input,
                       std::int64_t step_budget, std::size_t max_output_bits);

struct KResult {
  bool known = false;
  int k_value = 0;       // witness length in bits, when known
  std::string witness;   // canonical (length-then-lex first) witness program
  Budgets budget;
};

// K-value table for one fixed conditioning input: output string -> shortest
// program producing it within the budgets. Built by enumerating every
// program of length <= max_program_bits in length-then-lex order; the split
// across workers is by contiguous enumeration ranges, so the table is
// identical for any worker count.
class OutputTable {
 public:
  static OutputTable build(const std::string& input, Budgets b,
                           std::size_t max_output_bits, int workers = 1);

  // (k bits, witness) for the given output, if any program produced it.
  std::optional<std::pair<int, std::string>> lookup(
      const std::string& output) const;

 private:
  std::unordered_map<std::string, std::pair<int, std::uint32_t>> best_;
};

// min |p| with U(p, empty) = x within budgets; UNKNOWN when no program of
// allowed length halts with output x. Throws BudgetTooLargeError past the
// enumeration guard.
KResult k_bounded(const std::string& x, Budgets b, int workers = 1);

// min |p| with U(p, y) = x.
KResult k_cond_bounded(const std::string& x, const std::string& y, Budgets b,
                       int workers = 1);

struct IdResult {
  bool known = false;
  int value = 0;
};

// ID(x,y) = max(K(x|y), K(y|x)); unknown when either side is unknown.
IdResult id_distance(const std::string& x, const std::string& y, Budgets b,
                     int workers = 1);

// ID'(x,y): min |p| with U(p,x) = y and U(p,y) = x (one program, both
// directions).
KResult id_prime_distance(const std::string& x, const std::string& y,
                          Budgets b, int workers = 1);

// Empirical check of the distance axioms on the bounded machine, over all
// strings of length <= n (n <= 5).
struct TheoremAuditReport {
  int n = 0;
  Budgets budget;
  int c_identity = 0;          // max over x of id(x,x)
  bool symmetry_ok = false;    // id(x,y) == id(y,x) for all pairs
  int triangle_slack_max = 0;  // max id(x,z) - id(x,y) - id(y,z)
  // max over triples of slack - 2*log2(id(x,y) + id(y,z) + 1); the frozen
  // machine constant c_tri must stay >= this value
  double log_adjusted_slack_max = 0.0;
  std::size_t unknown_cells = 0;
  std::vector<std::string> strings;        // length-then-lex order
  std::vector<std::vector<int>> id_table;  // -1 marks unknown cells
};

TheoremAuditReport theorem_audit(int n, Budgets b, int workers = 1);

}  // namespace ncdkit::toyk
