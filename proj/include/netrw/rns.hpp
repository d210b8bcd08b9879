#pragma once

#include <string>
#include <vector>

#include "netrw/net.hpp"

namespace netrw {

// One left/right pair. Tags name the interface; variables (frontier nodes)
// shared by name bind host subnets.
struct Preform {
    Net left;
    Net right;
};

struct Rule {
    std::string name;
    std::vector<Preform> preforms;
    bool simultaneous() const { return preforms.size() > 1; }
};

// RedexDisjoint and RedexAnchored are the two position predicates of the
// redex-restriction kind. Anchored redexes map pattern node ids onto the same
// host ids, which is how partition systems pin each block to its place.
enum class ConditionKind { FreshLetters, ApplyOrder, RedexDisjoint, RedexAnchored, LettersOutside };

const char* to_string(ConditionKind k);

struct Condition {
    ConditionKind kind = ConditionKind::FreshLetters;
    std::vector<std::string> args;
};

struct Rns {
    std::string name;
    std::vector<Rule> rules;
    std::vector<Condition> conditions;

    bool has(ConditionKind k) const;
    const Condition* find(ConditionKind k) const;
    const Rule* rule(const std::string& name) const;
    std::size_t preform_count() const;
};

class RuleError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Structural checks shared by the parser and constructors: variables are
// (1,1) with exactly one tie, right variables occur on the left, shared tags
// keep their direction, left sides are non-empty.
void check_preform(const Preform& p);
void check_rns(const Rns& r);

}  // namespace netrw
