#include "sieve/trace.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "sieve/inference.hpp"

namespace sieve {

const TraceRecord* DerivationTrace::find(ClauseId id) const {
  // ids are increasing; records are usually dense starting at 1
  if (id >= 1 && id <= records.size() && records[id - 1].id == id) return &records[id - 1];
  auto it = std::lower_bound(records.begin(), records.end(), id,
                             [](const TraceRecord& r, ClauseId v) { return r.id < v; });
  return (it != records.end() && it->id == id) ? &*it : nullptr;
}

std::string write_trace(const DerivationTrace& trace) {
  std::string out(kTraceHeader);
  out += '\n';
  for (const TraceRecord& r : trace.records) {
    out += std::to_string(r.id);
    out += '\t';
    out += rule_name(r.rule);
    out += '\t';
    if (r.parents.empty()) {
      out += '-';
    } else {
      for (std::size_t i = 0; i < r.parents.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(r.parents[i]);
      }
    }
    out += '\t';
    out += r.processed ? 'P' : '.';
    out += '\t';
    out += r.in_proof ? '*' : '.';
    out += '\t';
    out += r.text;
    out += '\n';
  }
  return out;
}

namespace {

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    auto p = s.find(sep, start);
    if (p == std::string_view::npos) {
      parts.push_back(s.substr(start));
      break;
    }
    parts.push_back(s.substr(start, p - start));
    start = p + 1;
  }
  return parts;
}

ClauseId parse_id(std::string_view s, std::size_t line) {
  if (s.empty()) throw TraceFormatError(line, "empty clause id");
  ClauseId v = 0;
  for (char c : s) {
    if (c < '0' || c > '9') throw TraceFormatError(line, "bad clause id '" + std::string(s) + "'");
    v = v * 10 + static_cast<ClauseId>(c - '0');
  }
  return v;
}

}  // namespace

DerivationTrace read_trace(std::string_view text) {
  DerivationTrace trace;
  std::size_t line_no = 0;
  bool header = false;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    std::string_view line = text.substr(start, end == std::string_view::npos ? end : end - start);
    start = end == std::string_view::npos ? text.size() : end + 1;
    ++line_no;
    if (!header) {
      if (line != kTraceHeader) throw TraceFormatError(line_no, "missing 'TRACE v1' header");
      header = true;
      continue;
    }
    if (line.empty()) continue;
    auto f = split(line, '\t');
    if (f.size() != 6) throw TraceFormatError(line_no, "expected 6 tab-separated fields");
    TraceRecord r;
    r.id = parse_id(f[0], line_no);
    try {
      r.rule = parse_rule(f[1]);
    } catch (const std::invalid_argument& e) {
      throw TraceFormatError(line_no, e.what());
    }
    if (f[2] != "-" && !f[2].empty()) {
      for (auto p : split(f[2], ',')) {
        r.parents.push_back(parse_id(p, line_no));
        if (r.parents.back() >= r.id) throw TraceFormatError(line_no, "parent id not below clause id");
      }
    }
    if (f[3] != "P" && f[3] != ".") throw TraceFormatError(line_no, "bad processed flag");
    if (f[4] != "*" && f[4] != ".") throw TraceFormatError(line_no, "bad proof flag");
    r.processed = f[3] == "P";
    r.in_proof = f[4] == "*";
    r.text = std::string(f[5]);
    if (!trace.records.empty() && trace.records.back().id >= r.id) {
      throw TraceFormatError(line_no, "clause ids must be increasing");
    }
    trace.records.push_back(std::move(r));
  }
  if (!header) throw TraceFormatError(1, "missing 'TRACE v1' header");
  return trace;
}

DerivationTrace load_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open trace '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return read_trace(ss.str());
}

void save_trace(const DerivationTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write trace '" + path + "'");
  out << write_trace(trace);
}

void mark_proof(DerivationTrace& trace) {
  auto empty = std::find_if(trace.records.begin(), trace.records.end(),
                            [](const TraceRecord& r) { return r.is_empty_clause(); });
  if (empty == trace.records.end()) return;
  std::vector<ClauseId> stack{empty->id};
  while (!stack.empty()) {
    ClauseId id = stack.back();
    stack.pop_back();
    TraceRecord* rec = trace.find(id);
    if (!rec || rec->in_proof) continue;
    rec->in_proof = true;
    for (ClauseId p : rec->parents) stack.push_back(p);
  }
}

std::optional<ProofObject> extract_proof(const DerivationTrace& trace) {
  auto empty = std::find_if(trace.records.begin(), trace.records.end(),
                            [](const TraceRecord& r) { return r.is_empty_clause(); });
  if (empty == trace.records.end()) return std::nullopt;
  std::set<ClauseId> keep;
  std::vector<ClauseId> stack{empty->id};
  while (!stack.empty()) {
    ClauseId id = stack.back();
    stack.pop_back();
    if (!keep.insert(id).second) continue;
    if (const TraceRecord* rec = trace.find(id)) {
      for (ClauseId p : rec->parents) stack.push_back(p);
    }
  }
  ProofObject proof;
  for (ClauseId id : keep) {
    if (const TraceRecord* rec = trace.find(id)) proof.steps.push_back(*rec);
  }
  return proof;
}

namespace {

ProofCheck fail(ClauseId id, std::string reason) {
  return ProofCheck{false, id, std::move(reason)};
}

}  // namespace

ProofCheck check_proof(const ProofObject& proof, const Problem& problem) {
  if (proof.steps.empty()) return ProofCheck{false, std::nullopt, "empty proof"};
  if (!proof.steps.back().is_empty_clause()) {
    return fail(proof.steps.back().id, "last step is not the empty clause");
  }

  // Parse against a copy so problem symbols keep their arities and anything
  // unknown is still rejected consistently.
  Signature sig = *problem.signature;
  std::map<ClauseId, Clause> seen;
  for (const TraceRecord& step : proof.steps) {
    Clause c;
    try {
      c.literals = parse_clause_text(step.text, sig);
    } catch (const std::exception& e) {
      return fail(step.id, std::string("unparsable clause: ") + e.what());
    }
    c.id = step.id;
    c.rule = step.rule;
    c.parents = step.parents;

    switch (step.rule) {
      case Rule::Input: {
        if (!step.parents.empty()) return fail(step.id, "input step has parents");
        bool found = std::any_of(problem.clauses.begin(), problem.clauses.end(),
                                 [&](const InputClause& ic) { return is_variant(ic.clause, c); });
        if (!found) return fail(step.id, "input clause not in problem");
        break;
      }
      case Rule::Resolution:
      case Rule::Factoring: {
        const std::size_t want = step.rule == Rule::Resolution ? 2 : 1;
        if (step.parents.size() != want) return fail(step.id, "wrong number of parents");
        std::vector<const Clause*> ps;
        for (ClauseId p : step.parents) {
          auto it = seen.find(p);
          if (it == seen.end() || p >= step.id) return fail(step.id, "parent not derived earlier");
          ps.push_back(&it->second);
        }
        std::vector<Clause> candidates =
            step.rule == Rule::Resolution ? resolvents(*ps[0], *ps[1]) : factor(*ps[0]);
        bool ok = std::any_of(candidates.begin(), candidates.end(),
                              [&](const Clause& r) { return is_variant(r, c); });
        if (!ok) return fail(step.id, "step does not replay from its parents");
        break;
      }
    }
    seen.emplace(step.id, std::move(c));
  }
  return ProofCheck{true, std::nullopt, {}};
}

}  // namespace sieve
