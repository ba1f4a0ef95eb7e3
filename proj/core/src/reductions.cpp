#include "genvert/reductions.hpp"

#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include "genvert/errors.hpp"
#include "genvert/random.hpp"

namespace genvert {

void CnfFormula::validate() const
{
    for (std::size_t j = 0; j < clauses.size(); ++j) {
        for (int lit : clauses[j]) {
            const std::size_t var = static_cast<std::size_t>(std::abs(lit));
            if (lit == 0 || var > num_vars)
                throw Error(ErrorCode::ValidationError, "clause " + std::to_string(j + 1) + " has literal " +
                                                            std::to_string(lit) + " outside 1.." +
                                                            std::to_string(num_vars));
        }
    }
}

namespace {

bool literal_true(int lit, const std::vector<int>& signs)
{
    const int value = signs[static_cast<std::size_t>(std::abs(lit)) - 1];
    return lit > 0 ? value > 0 : value < 0;
}

void check_signs(const CnfFormula& f, const std::vector<int>& signs)
{
    if (signs.size() != f.num_vars)
        throw Error(ErrorCode::DimensionMismatch, "assignment has " + std::to_string(signs.size()) +
                                                      " entries for " + std::to_string(f.num_vars) + " variables");
}

}  // namespace

std::size_t CnfFormula::unsatisfied_count(const std::vector<int>& signs) const
{
    check_signs(*this, signs);
    std::size_t count = 0;
    for (const auto& clause : clauses) {
        const bool sat = literal_true(clause[0], signs) || literal_true(clause[1], signs) ||
                         literal_true(clause[2], signs);
        count += sat ? 0 : 1;
    }
    return count;
}

bool CnfFormula::satisfied_by(const std::vector<int>& signs) const
{
    return unsatisfied_count(signs) == 0;
}

namespace {

// sigma per literal, accumulated over repeated variables.
void add_clause_row(Matrix& w, std::size_t row, std::size_t col_offset, const std::array<int, 3>& clause)
{
    for (int lit : clause) {
        const std::size_t var = static_cast<std::size_t>(std::abs(lit)) - 1;
        w(row, col_offset + var) += lit > 0 ? -1.0 : 1.0;
    }
}

}  // namespace

Gadget build_binary_gadget(const CnfFormula& f)
{
    f.validate();
    const std::size_t k = f.num_vars;
    const std::size_t m = f.clauses.size();
    if (k == 0)
        throw Error(ErrorCode::InvalidArgument, "formula has no variables");
    std::vector<Layer> layers;
    if (m == 0) {
        // No clause units: a single zero unit keeps the network well formed.
        layers.emplace_back(Matrix(1, k), Vector(1), Activation::relu());
        layers.emplace_back(Matrix(1, 1), Activation::relu());
    } else {
        Matrix w1(m, k);
        for (std::size_t j = 0; j < m; ++j)
            add_clause_row(w1, j, 0, f.clauses[j]);
        layers.emplace_back(std::move(w1), Vector(m, -2.0), Activation::relu());
        layers.emplace_back(Matrix(1, m, 1.0), Activation::relu());
    }
    return {GeneratorNetwork(std::move(layers)), Vector(1)};
}

Gadget build_real_gadget(const CnfFormula& f)
{
    f.validate();
    const std::size_t k = f.num_vars;
    const std::size_t m = f.clauses.size();
    if (k == 0)
        throw Error(ErrorCode::InvalidArgument, "formula has no variables");

    Matrix w1(2 * k, k);
    Vector b1(2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        w1(2 * i, i) = 1.0;
        b1[2 * i] = 1.0;
        w1(2 * i + 1, i) = 1.0;
        b1[2 * i + 1] = -1.0;
    }

    Matrix w2(k, 2 * k);
    for (std::size_t i = 0; i < k; ++i) {
        w2(i, 2 * i) = 1.0;
        w2(i, 2 * i + 1) = -1.0;
    }

    Matrix w3(m + 2 * k, k);
    Vector b3(m + 2 * k);
    for (std::size_t j = 0; j < m; ++j) {
        add_clause_row(w3, j, 0, f.clauses[j]);
        double sigma_sum = 0.0;
        for (int lit : f.clauses[j])
            sigma_sum += lit > 0 ? -1.0 : 1.0;
        b3[j] = -sigma_sum - 2.0;
    }
    for (std::size_t i = 0; i < k; ++i) {
        w3(m + 2 * i, i) = 1.0;
        b3[m + 2 * i] = -1.0;
        w3(m + 2 * i + 1, i) = -1.0;
        b3[m + 2 * i + 1] = 1.0;
    }

    Matrix w4(2, m + 2 * k);
    for (std::size_t j = 0; j < m; ++j)
        w4(0, j) = 1.0;
    for (std::size_t i = 0; i < 2 * k; ++i)
        w4(1, m + i) = 1.0;

    std::vector<Layer> layers;
    layers.emplace_back(std::move(w1), std::move(b1), Activation::relu());
    layers.emplace_back(std::move(w2), Activation::relu());
    layers.emplace_back(std::move(w3), std::move(b3), Activation::relu());
    layers.emplace_back(std::move(w4), Activation::relu());
    return {GeneratorNetwork(std::move(layers)), Vector{0.0, static_cast<double>(k)}};
}

std::optional<std::vector<int>> brute_force_sat(const CnfFormula& f)
{
    f.validate();
    if (f.num_vars > kMaxBruteForceVars)
        throw Error(ErrorCode::InvalidArgument, "brute force limited to " + std::to_string(kMaxBruteForceVars) +
                                                    " variables, formula has " + std::to_string(f.num_vars));
    const std::uint64_t total = std::uint64_t{1} << f.num_vars;
    std::vector<int> signs(f.num_vars);
    for (std::uint64_t mask = 0; mask < total; ++mask) {
        for (std::size_t i = 0; i < f.num_vars; ++i)
            signs[i] = (mask >> i) & 1U ? 1 : -1;
        if (f.satisfied_by(signs))
            return signs;
    }
    return std::nullopt;
}

CnfFormula random_cnf(std::size_t num_vars, std::size_t num_clauses, std::uint64_t seed)
{
    if (num_vars == 0)
        throw Error(ErrorCode::InvalidArgument, "random_cnf needs at least one variable");
    Rng rng(seed);
    CnfFormula f;
    f.num_vars = num_vars;
    f.clauses.resize(num_clauses);
    for (auto& clause : f.clauses) {
        for (int& lit : clause) {
            const int var = static_cast<int>(rng.below(num_vars)) + 1;
            lit = rng.below(2) == 0 ? var : -var;
        }
    }
    return f;
}

CnfFormula read_dimacs(std::istream& in)
{
    CnfFormula f;
    bool have_header = false;
    std::size_t declared_clauses = 0;
    std::vector<int> pending;
    std::string line;
    std::size_t line_no = 0;

    auto fail = [&line_no](const std::string& what) {
        throw Error(ErrorCode::ParseError, "dimacs line " + std::to_string(line_no) + ": " + what);
    };

    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream tokens(line);
        std::string first;
        if (!(tokens >> first))
            continue;
        if (first == "c")
            continue;
        if (first == "%")
            break;
        if (first == "p") {
            std::string fmt;
            long long vars = -1;
            long long clauses = -1;
            if (have_header)
                fail("duplicate header");
            if (!(tokens >> fmt >> vars >> clauses) || fmt != "cnf" || vars < 0 || clauses < 0)
                fail("expected 'p cnf <vars> <clauses>'");
            have_header = true;
            f.num_vars = static_cast<std::size_t>(vars);
            declared_clauses = static_cast<std::size_t>(clauses);
            continue;
        }
        if (!have_header)
            fail("clause before header");
        tokens.clear();
        tokens.seekg(0);
        std::string token;
        while (tokens >> token) {
            std::size_t used = 0;
            long long lit = 0;
            try {
                lit = std::stoll(token, &used);
            } catch (const std::exception&) {
                fail("bad literal '" + token + "'");
            }
            if (used != token.size())
                fail("bad literal '" + token + "'");
            if (lit == 0) {
                if (pending.empty())
                    fail("empty clause");
                if (pending.size() > 3)
                    fail("clause with " + std::to_string(pending.size()) + " literals");
                while (pending.size() < 3)
                    pending.push_back(pending.back());
                f.clauses.push_back({pending[0], pending[1], pending[2]});
                pending.clear();
                continue;
            }
            if (static_cast<std::size_t>(std::llabs(lit)) > f.num_vars)
                fail("literal " + token + " exceeds declared variable count");
            pending.push_back(static_cast<int>(lit));
        }
    }
    if (!have_header)
        throw Error(ErrorCode::ParseError, "dimacs: missing header");
    if (!pending.empty())
        throw Error(ErrorCode::ParseError, "dimacs: unterminated clause at end of input");
    if (f.clauses.size() != declared_clauses)
        throw Error(ErrorCode::ParseError, "dimacs: header declares " + std::to_string(declared_clauses) +
                                               " clauses, found " + std::to_string(f.clauses.size()));
    return f;
}

CnfFormula load_dimacs(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::ParseError, "cannot open " + path.string());
    return read_dimacs(in);
}

void write_dimacs(std::ostream& out, const CnfFormula& f)
{
    out << "p cnf " << f.num_vars << ' ' << f.clauses.size() << '\n';
    for (const auto& clause : f.clauses)
        out << clause[0] << ' ' << clause[1] << ' ' << clause[2] << " 0\n";
}

}  // namespace genvert
