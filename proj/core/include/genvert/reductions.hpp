#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "genvert/linalg.hpp"
#include "genvert/model.hpp"

namespace genvert {

/// 3-CNF formula. Literal +v is variable v, -v its negation (1-based).
/// Repeated literals inside a clause are allowed; they encode shorter clauses.
struct CnfFormula {
    std::size_t num_vars = 0;
    std::vector<std::array<int, 3>> clauses;

    /// Throws ValidationError for a zero literal or a variable outside [1, num_vars].
    void validate() const;
    /// True iff the +/-1 assignment (z_i = +1 means true) satisfies every clause.
    bool satisfied_by(const std::vector<int>& signs) const;
    std::size_t unsatisfied_count(const std::vector<int>& signs) const;
};

struct Gadget {
    GeneratorNetwork net;
    Vector target;
};

/// Two-layer network z -> 1^T ReLU(W1 z - 2) over {-1,+1}^k: row j of W1 holds
/// -1 per positive and +1 per negative literal of clause j, so for sign
/// inputs G(z) counts unsatisfied clauses. Target 0.
Gadget build_binary_gadget(const CnfFormula& f);

/// Four-layer real-input ReLU network with target (0, k); some z reaches the
/// target iff f is satisfiable. Writing v_i = clamp(z_i, -1, 1):
///
///     layer  width     units
///     1      2k        p_i = ReLU(z_i + 1),  q_i = ReLU(z_i - 1)
///     2      k         s_i = ReLU(p_i - q_i) = v_i + 1           (in [0, 2])
///     3      m + 2k    u_j = ReLU(sum_l sigma_l s_l - sum_l sigma_l - 2)
///                      a_i = ReLU(s_i - 1) = max(v_i, 0)
///                      b_i = ReLU(1 - s_i) = -min(v_i, 0)
///     4      2         x_1 = sum_j u_j,  x_2 = sum_i (a_i + b_i)
///
/// sigma_l is -1 for a positive and +1 for a negative literal, so u_j is the
/// binary clause unit evaluated at v. x_2 = k forces every |v_i| = 1. Constant
/// terms live in the biases; absorb_bias gives the bias-free form with a
/// constant-one channel.
Gadget build_real_gadget(const CnfFormula& f);

inline constexpr std::size_t kMaxBruteForceVars = 24;

/// Exhaustive search in increasing binary order (bit i set = variable i+1 true).
/// Returns +/-1 signs of the first satisfying assignment. Throws
/// InvalidArgument when num_vars exceeds kMaxBruteForceVars.
std::optional<std::vector<int>> brute_force_sat(const CnfFormula& f);

/// Uniform random 3-CNF: each literal picks a variable and a sign uniformly.
CnfFormula random_cnf(std::size_t num_vars, std::size_t num_clauses, std::uint64_t seed);

/// DIMACS subset: 'c' comments, one "p cnf V C" header, clauses terminated by
/// 0 (may span lines), optional trailing '%'. Clauses with 1 or 2 literals are
/// padded by repeating their last literal. Errors: ParseError.
CnfFormula read_dimacs(std::istream& in);
CnfFormula load_dimacs(const std::filesystem::path& path);
void write_dimacs(std::ostream& out, const CnfFormula& f);

}  // namespace genvert
