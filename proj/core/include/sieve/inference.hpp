#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "sieve/clause.hpp"
#include "sieve/unify.hpp"

namespace sieve {

/// Binary resolvent of c1 on literal i with c2 on literal j. The second
/// clause is renamed apart by offsetting its variables; the result uses
/// variable ids above both parents' ranges. Absent when the literals have
/// equal polarity or their atoms do not unify.
std::optional<Clause> resolve(const Clause& c1, std::size_t i, const Clause& c2, std::size_t j);

/// All resolvents of c1 with c2 over every complementary literal pair.
std::vector<Clause> resolvents(const Clause& c1, const Clause& c2);

/// All factors obtained by unifying two literals of equal polarity,
/// deduplicated up to variable renaming.
std::vector<Clause> factor(const Clause& c);

/// True iff the clause contains some atom both positively and negatively.
bool is_tautology(const Clause& c) noexcept;

/// True iff some substitution maps c1's literals injectively onto c2's.
bool subsumes(const Clause& c1, const Clause& c2);

/// True iff the clauses are equal as literal multisets up to a bijective
/// variable renaming.
bool is_variant(const Clause& a, const Clause& b);

std::int64_t symbol_weight(const Clause& c, std::int64_t fw, std::int64_t vw) noexcept;

}  // namespace sieve
