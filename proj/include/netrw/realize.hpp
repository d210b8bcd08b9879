#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "netrw/net.hpp"

namespace netrw {

enum class RealizeErrorKind {
    MissingInput,
    NoFixpointWithinBudget,
    GeneratorUnmapped,
    MissingTable,
    BadAlgebra,
    Cyclic,
};

const char* to_string(RealizeErrorKind k);

class RealizeError : public std::runtime_error {
public:
    RealizeError(RealizeErrorKind kind, const std::string& what);
    RealizeErrorKind kind() const { return kind_; }

private:
    RealizeErrorKind kind_;
};

using Value = std::string;
using ValueSet = std::set<Value>;

// One immediate up-neighbour of a node: its letter and the out-port the edge leaves from.
struct UpEntry {
    std::string letter;
    int port = 0;
    auto operator<=>(const UpEntry&) const = default;
};

// Derived from the net: sorted multiset of up-neighbours over occupied in-ports.
std::vector<UpEntry> up_context(const Net& t, const std::string& node);

inline const Value kAny = "*";

struct TableRow {
    std::vector<Value> in;                      // one per in-port; "*" matches anything
    std::optional<std::vector<UpEntry>> up;     // absent: any context
    std::vector<ValueSet> out;                  // one value set per out-port
};

struct AlgebraSpec {
    std::vector<Value> carrier;
    std::map<std::string, std::vector<TableRow>> tables;

    bool in_carrier(const Value& v) const;
    // Value sets of the node's out-ports for one input tuple.
    std::vector<ValueSet> apply(const Node& n, const std::vector<Value>& in, const std::vector<UpEntry>& up) const;
};

// {carrier:[...], tables:{letter:{entries:[{in:[...], up:[[letter,port],...], out:[...]}]}}}
// out entries are a value or an array of values (a value set) per out-port.
AlgebraSpec parse_algebra_json(const std::string& text);
AlgebraSpec load_algebra(const std::string& path);
std::string algebra_to_json(const AlgebraSpec& a);

// Sets of ranked letters with no table, frontier letters excluded.
std::set<std::string> missing_tables(const AlgebraSpec& a, const Net& t);

using PortValues = std::map<PortRef, ValueSet>;

struct Evaluation {
    PortValues outputs;       // unoccupied out-ports
    PortValues all_out;       // every out-port
    int iterations = 0;       // sweeps that changed something
    bool acyclic = true;
};

int default_fixpoint_budget(const Net& t, const AlgebraSpec& a);

// Least fixpoint over set-valued port assignments; budget <= 0 takes the default.
Evaluation evaluate(const Net& t, const AlgebraSpec& a, const std::map<PortRef, Value>& inputs, int budget = 0);
Evaluation evaluate_sets(const Net& t, const AlgebraSpec& a, const PortValues& inputs, int budget = 0);

// Generators are variable names, ground letters (nodes without in-ports), and
// the tag names (port_tag_name) of unoccupied in-ports of other nodes.
using Generators = std::map<std::string, Value>;

PortValues hom_extend(const Generators& phi, const Net& t, const AlgebraSpec& a);

// ------------------------------------------------------------ free generation

struct Generation {
    std::vector<Net> nets;      // deduplicated, in canonical key order
    std::size_t node_cap = 0;   // largest node count admitted
    bool capped = false;        // some construction was dropped by the cap
};

// One step forms sigma(s_1..s_k) for every letter sigma of the alphabet, each
// in-port left free or fed by one unoccupied out-port of a copy of a current element.
Generation generated_closure(const std::vector<Net>& q, const Alphabet& alphabet, int depth, std::size_t max_nodes = 12);

}  // namespace netrw
