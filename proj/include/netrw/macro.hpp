#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "netrw/abstraction.hpp"
#include "netrw/net.hpp"
#include "netrw/rewrite.hpp"
#include "netrw/rns.hpp"

namespace netrw {

enum class MacroErrorKind {
    RedexStraddlesUnsupported,
    ConstructionUnsupported,
    NotInConceptAlphabet,
    ClosureViolation,
};

const char* to_string(MacroErrorKind k);

class MacroError : public std::runtime_error {
public:
    MacroError(MacroErrorKind kind, const std::string& what);
    MacroErrorKind kind() const { return kind_; }

private:
    MacroErrorKind kind_;
};

struct MacroProvenance {
    std::string micro_result;              // canonical key of the substance result it reproduces
    std::set<std::string> blocks;          // concept ids consumed
};

struct MacroResult {
    Rns macro;
    Prns post;                             // contraction of every rewrite result
    Net concept_net;                       // concept of t under w
    Jungle micro_results;                  // normal forms of the micro on t
    std::map<std::string, MacroProvenance> provenance;  // macro rule -> origin
};

struct MacroOptions {
    int budget = 16;
    std::string letter_prefix = "_m";
    std::string rule_prefix = "M";
};

// Substance nodes of t that no result of the micro touches: same node, same
// incident edges in every result.
std::set<std::string> untouched_nodes(const Net& t, const Jungle& results);

MacroResult build_macro(const Rns& micro, const Prns& w, const Net& t, const MacroOptions& opts = {});

Rns solve_micro(const Rns& macro, const Prns& w, const Prns& w0, int budget = 16);

struct MacroEquation {
    Verdict verdict = Verdict::Unknown;
    Jungle left;   // via the concept side
    Jungle right;  // the micro directly
    std::string note;
};

MacroEquation verify_macro_equation(const Rns& w, const Rns& macro, const Rns& w0, const Rns& micro, const Jungle& t,
                                    int budget = 16);

// ------------------------------------------------------------ parallel transducers

struct ParallelStage {
    std::string stage;
    Net a, b, c;       // sisters and their origin before the stage
    Prns wa, wb;
    Rns lifted;        // the stage's effect on a, moved onto the origin
    Rns over_b;        // the lifted rules seen through wb
    bool trivial = false;
};

struct ParallelPair {
    Transducer micro;
    Transducer parallel;
    OriginWitness witness;
    std::vector<ParallelStage> stages;
};

ParallelPair parallel_td(const Transducer& r, const OriginWitness& witness, const MacroOptions& opts = {});

struct ParallelReport {
    bool results_sisters = false;   // results of both transducers are sisters
    bool macro_sisters = false;     // macro forms over wa and wb give sisters
    bool class_preserved = false;   // the micro keeps the unoccupied-port signature of a
    Jungle a_results, b_results;
    std::vector<std::string> notes;
    bool holds() const { return results_sisters && macro_sisters && class_preserved; }
};

ParallelReport verify_parallel(const ParallelPair& pair, const MacroOptions& opts = {});

// ------------------------------------------------------------ class algebra

struct NetClass {
    Delta key;
    Net centre;
    std::vector<Prns> prnss;     // partition systems of the centre
    std::vector<Net> members;    // centre plus its concepts
};

struct ClassOp {
    std::string name;
    std::optional<Rns> micro;            // absent for the identity
    std::map<std::string, std::vector<Rns>> bundle;  // class key -> macros built through that centre
};

struct ClassAlgebra {
    std::map<Delta, NetClass> classes;
    std::map<std::string, ClassOp> ops;

    ClassAlgebra();  // registers the identity op "I"
    void add_class(const Net& centre, const std::vector<Prns>& prnss);
    // Builds one macro per class and partition system; classes whose macro
    // construction fails are left without a bundle entry.
    void add_op(const std::string& name, const Rns& micro, const MacroOptions& opts = {});
};

std::string class_key_string(const Delta& d);

Delta class_apply(const ClassAlgebra& alg, const Delta& key, const std::string& op, int budget = 16);

struct ClosureSample {
    Delta key;
    std::string op;
    std::set<Delta> via_macros;    // signatures reached through the bundle, identity included
    std::set<Delta> via_centre;    // signatures of the centre under micro and identity
    bool agrees = false;
    std::string note;
};

struct ClosureReport {
    bool closed = true;
    std::vector<ClosureSample> samples;
    std::vector<std::string> violations;
};

ClosureReport check_closure(const ClassAlgebra& alg, const std::vector<Delta>& samples, int budget = 16);

}  // namespace netrw
