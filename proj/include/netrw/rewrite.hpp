#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "netrw/net.hpp"
#include "netrw/rns.hpp"

namespace netrw {

enum class RewriteErrorKind {
    ConditionViolated,
    BoundaryMismatch,
    BudgetExhausted,
    DirectionMismatch,
    NoFreePortOnImage,
    HeightUndefined,
    PlaceholderArityMismatch,
    StageBudgetExhausted,
};

const char* to_string(RewriteErrorKind k);

class RewriteError : public std::runtime_error {
public:
    RewriteError(RewriteErrorKind kind, const std::string& what, std::string stage = {});
    RewriteErrorKind kind() const { return kind_; }
    const std::string& stage() const { return stage_; }

private:
    RewriteErrorKind kind_;
    std::string stage_;
};

// ------------------------------------------------------------ substitution

// A variable image: a net plus the port glued to the variable's neighbour.
// An empty net means the variable is deleted and its neighbour port freed.
struct TiedNet {
    Net net;
    std::optional<PortRef> port;
    bool empty() const { return net.empty(); }
};

using Binding = std::map<std::string, TiedNet>;

// Variables are substituted in lexicographic name order unless `order` is given.
Net apply_substitution(const Binding& binding, const Net& t, const std::vector<std::string>& order = {});

struct InstanceResult {
    bool instance = false;
    Binding binding;
};

InstanceResult is_instance(const Net& t, const Net& s, std::size_t bound);

// ------------------------------------------------------------ matching

struct Match {
    std::size_t host = 0;  // index into the host jungle's nets()
    std::string rule;
    std::size_t preform = 0;
    NodeMap node_map;  // ranked pattern node -> host node
    std::set<std::string> redex;
    std::map<std::string, TiedNet> binding;
    std::map<std::string, std::set<std::string>> bound_nodes;  // host nodes taken by each variable
    std::map<std::string, PortRef> boundary;                   // tag name -> host port
};

std::vector<Match> find_matches(const Rns& r, const Jungle& host);
std::vector<Match> find_matches(const Rule& r, const Jungle& host);
std::vector<Match> find_matches_in(const Rns& r, const Net& host, std::size_t host_index = 0);

// Port provenance of one replacement.
struct ReplaceTrace {
    std::map<std::string, std::string> right_ids;  // right-side node -> result node
    std::map<PortRef, PortRef> boundary_ports;     // host port of the redex -> result port
    std::set<std::string> removed;
};

Net replace(const Net& host, const Preform& p, const Match& m, ReplaceTrace* trace = nullptr);

// Raises ConditionViolated for conditions that are checked against the whole host.
void check_conditions(const Rns& r, const Net& host);

// ------------------------------------------------------------ application

struct ApplyReport {
    Jungle result;
    std::vector<Match> matches;
};

Jungle apply(const Rns& r, const Jungle& host);
Jungle apply(const Rule& r, const Jungle& host);
Jungle apply(const std::vector<Rns>& rs, const Jungle& host);
ApplyReport apply_report(const std::vector<Rns>& rs, const Jungle& host);

// One-step successors of a single net; empty when nothing matches.
Jungle successors(const std::vector<Rns>& rs, const Net& n);
bool is_irreducible(const std::vector<Rns>& rs, const Net& n);
bool is_irreducible(const Rns& r, const Net& n);

struct DeriveResult {
    Jungle reachable;
    std::map<std::string, int> step;  // canonical key -> first step it appeared at
    bool budget_exhausted = false;
    bool cycle = false;
};

DeriveResult derive(const std::vector<Rns>& rs, const Jungle& start, int max_steps);

// Default cap on distinct states explored by normal_forms.
inline constexpr std::size_t kMaxStates = 200000;

// Irreducible reachable nets; throws BudgetExhausted when reducible nets remain
// at the depth budget or the state cap is hit.
Jungle normal_forms(const std::vector<Rns>& rs, const Jungle& start, int budget, std::size_t max_states = kMaxStates);
Jungle normal_forms(const Rns& r, const Jungle& start, int budget, std::size_t max_states = kMaxStates);

// ------------------------------------------------------------ typology

enum class Verdict { No, Yes, Unknown };
const char* to_string(Verdict v);

struct ClassifyOptions {
    bool heights = true;
    bool monadic = true;
    std::size_t monadic_bound = 6;  // right sides larger than this make a negative monadic search inconclusive
};

struct Classification {
    std::set<std::string> labels;
    Verdict monadic = Verdict::Unknown;
};

Classification classify_rule(const Rule& r, const ClassifyOptions& opts = {});
bool has_label(const Rule& r, const std::string& label);

Rule invert_rule(const Rule& r);
Rns invert_rns(const Rns& r);

// Disjoint union of a jungle as one (possibly broken) net.
Net jungle_as_net(const Jungle& j, const std::string& name = "");

struct RelationPair {
    Net source;
    Jungle targets;
};

Rns rns_of_relation(const std::vector<RelationPair>& pairs, const std::string& name = "relation");
// Same preform multiset, judged by tagged canonical keys.
bool same_preforms(const Rns& a, const Rns& b);

// ------------------------------------------------------------ homomorphisms

// Image of one letter. Placeholder tags "i<k>" / "o<k>" stand for the source
// node's k-th in/out port; extra copies are named "i<k>.<m>".
struct HomImage {
    int in_rank = 0;
    int out_rank = 0;
    Net image;
};

struct HomTable {
    std::map<std::string, HomImage> letters;  // letters absent from the table map to themselves
    bool preserving = false;                  // dropped placeholders become errors
};

Net apply_net_homomorphism(const HomTable& h, const Net& t);
std::set<std::string> classify_homomorphism(const HomTable& h);

// ------------------------------------------------------------ transducers

struct Stage {
    std::string id;
    std::vector<Rns> rnss;
    int budget = 1;
    bool normal_form = false;
};

// A linear pipeline of stages; the empty pipeline is the trivial transducer.
struct Transducer {
    std::string name;
    std::vector<Stage> stages;
    bool trivial() const { return stages.empty(); }
};

Jungle apply_transducer(const Transducer& td, const Jungle& start);
Transducer normal_form_td(const Transducer& td);
Transducer single_stage(const Rns& r, int budget = 1, const std::string& name = "");

}  // namespace netrw
