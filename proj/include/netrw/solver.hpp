#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "netrw/abstraction.hpp"
#include "netrw/net.hpp"
#include "netrw/realize.hpp"
#include "netrw/rewrite.hpp"
#include "netrw/rns.hpp"

namespace netrw {

enum class SolverErrorKind { CorruptEntry, BadManifest, NotAPresolution };

const char* to_string(SolverErrorKind k);

class SolverError : public std::runtime_error {
public:
    SolverError(SolverErrorKind kind, const std::string& what);
    SolverErrorKind kind() const { return kind_; }

private:
    SolverErrorKind kind_;
};

// ------------------------------------------------------------ recognizers

enum class RecognizerKind { NormalForm, Pattern, Delta, Realization, Conjunction };

const char* to_string(RecognizerKind k);

// Normal forms of `rns` must exist, and each must carry every `require` letter
// and no `forbid` letter.
struct LetterPredicate {
    std::set<std::string> require;
    std::set<std::string> forbid;
};

struct Recognizer {
    RecognizerKind kind = RecognizerKind::Delta;
    int budget = 16;                      // normal-form depth; fixpoint sweeps (0 = default bound)

    Rns rns;
    LetterPredicate letters;

    Net pattern;                          // must enclose into every net

    Delta target;                         // signature of the whole jungle

    std::shared_ptr<const AlgebraSpec> algebra;
    Generators inputs;                    // port tag name -> value
    std::map<std::string, ValueSet> expected;  // port tag name -> value set

    std::vector<Recognizer> parts;

    static Recognizer normal_form(const Rns& r, LetterPredicate p, int budget = 16);
    static Recognizer contains(const Net& pattern);
    static Recognizer signature(const Delta& d);
    static Recognizer realization(const AlgebraSpec& a, Generators inputs, std::map<std::string, ValueSet> expected,
                                  int budget = 0);
    static Recognizer all(std::vector<Recognizer> parts);
};

// Empty jungles are never recognized. budget > 0 overrides the recognizer's own.
Verdict recognize(const Recognizer& rec, const Jungle& j, int budget = 0);

// Every net of t is reachable from s under r within `budget` rewrite steps.
Verdict models(const Transducer& r, const Jungle& s, const Jungle& t, int budget);

bool associated_member(const std::vector<Jungle>& tuple, SisterMode mode,
                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

// ------------------------------------------------------------ problems

struct Limits {
    int max_derivation_steps = 16;    // per-stage budget ceiling
    int max_td_stages = 8;
    std::size_t max_origin_nodes = 6;
    int wall_budget_ms = 60000;
};

struct Problem {
    Jungle subject;
    Recognizer recognizer;
    Limits limits;
};

struct SolutionCheck {
    Verdict presolution = Verdict::Unknown;
    bool solution = false;
    Jungle product;
    std::vector<std::string> notes;
};

SolutionCheck check_solution(const Transducer& td, const Problem& p);

// ------------------------------------------------------------ memory

struct MemoryEntry {
    std::string id;
    Jungle subject;
    Recognizer recognizer;
    Transducer solution;
    Delta signature;
    std::map<std::string, std::string> metadata;
};

struct Quarantined {
    std::string id;
    std::string reason;
};

struct MemoryBank {
    std::vector<MemoryEntry> entries;
    std::vector<Quarantined> quarantined;

    // Verifies the solution against the entry's recognizer first; mints "e<k>" for an empty id.
    const MemoryEntry& add(MemoryEntry e);
    const MemoryEntry* find(const std::string& id) const;
};

MemoryEntry make_entry(const Jungle& subject, const Recognizer& rec, const Transducer& solution,
                       const std::string& id = "");

void save_bank(const MemoryBank& bank, const std::string& dir);
MemoryBank load_bank(const std::string& dir);

// Same ids, subjects, signatures, metadata, recognizers and transducers.
bool banks_equal(const MemoryBank& a, const MemoryBank& b);

// ------------------------------------------------------------ solving

enum class SolveStatus { Solved, NoSolutionWithinBudget };

const char* to_string(SolveStatus s);

struct CandidateFailure {
    std::string entry;
    std::string attempt;   // "direct" or "transfer"
    Verdict verdict = Verdict::No;
    std::string reason;
};

struct SolveReport {
    SolveStatus status = SolveStatus::NoSolutionWithinBudget;
    std::optional<Transducer> solution;
    Jungle product;
    std::optional<OriginWitness> witness;
    std::string via;  // "identity", "direct:<id>" or "transfer:<id>"
    std::vector<std::string> trace;
    std::vector<CandidateFailure> failures;
    bool any_unknown() const;
};

struct SolveOptions {
    bool auto_insert = false;
};

SolveReport solve(const Problem& p, const MemoryBank& mem);
// Solved problems are appended to the bank when opts.auto_insert is set.
SolveReport solve(const Problem& p, MemoryBank& mem, const SolveOptions& opts);

// ------------------------------------------------------------ JSON forms

// Nets, RNSs and algebras in manifests are either inline (NETF text / JSON
// object) or references "path" / "path#name" resolved against base_dir.
struct RefResolver {
    std::string base_dir = ".";
    Net net(const nlohmann::json& ref) const;
    Rns rns(const nlohmann::json& ref) const;
    AlgebraSpec algebra(const nlohmann::json& ref) const;
};

nlohmann::json recognizer_to_json(const Recognizer& r);
Recognizer recognizer_from_json(const nlohmann::json& j, const RefResolver& res = {});

nlohmann::json transducer_to_json(const Transducer& td);
Transducer transducer_from_json(const nlohmann::json& j, const RefResolver& res = {});

nlohmann::json limits_to_json(const Limits& l);
Limits limits_from_json(const nlohmann::json& j);

Problem problem_from_json(const nlohmann::json& j, const RefResolver& res = {});
Problem load_problem(const std::string& path);

nlohmann::json witness_to_json(const OriginWitness& w);
nlohmann::json report_to_json(const SolveReport& r);

std::string print_jungle(const Jungle& j, const std::string& prefix = "n");

}  // namespace netrw
