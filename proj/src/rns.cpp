#include "netrw/rns.hpp"

#include <map>

namespace netrw {

const char* to_string(ConditionKind k) {
    switch (k) {
        case ConditionKind::FreshLetters: return "fresh-letters";
        case ConditionKind::ApplyOrder: return "order";
        case ConditionKind::RedexDisjoint: return "redex-disjoint";
        case ConditionKind::RedexAnchored: return "redex-anchored";
        case ConditionKind::LettersOutside: return "letters-outside";
    }
    return "?";
}

bool Rns::has(ConditionKind k) const { return find(k) != nullptr; }

const Condition* Rns::find(ConditionKind k) const {
    for (const auto& c : conditions)
        if (c.kind == k) return &c;
    return nullptr;
}

const Rule* Rns::rule(const std::string& n) const {
    for (const auto& r : rules)
        if (r.name == n) return &r;
    return nullptr;
}

std::size_t Rns::preform_count() const {
    std::size_t n = 0;
    for (const auto& r : rules) n += r.preforms.size();
    return n;
}

namespace {

// Direction of a variable's tie: Out when the variable feeds its neighbour.
std::map<std::string, Dir> var_ties(const Net& side, const char* which) {
    std::map<std::string, Dir> ties;
    for (const auto& [id, n] : side.nodes()) {
        if (!n.is_var) continue;
        int incident = 0;
        Dir tie = Dir::Out;
        for (const auto& p : side.ports(id)) {
            auto q = side.partner(p);
            if (!q) continue;
            ++incident;
            tie = p.dir;
            if (side.node(q->node).is_var)
                throw RuleError(std::string(which) + " side links two variables at " + id);
        }
        if (incident != 1)
            throw RuleError(std::string(which) + " side variable " + id + " must have exactly one tie");
        auto [it, fresh] = ties.emplace(n.letter, tie);
        if (!fresh && it->second != tie)
            throw RuleError("DirectionMismatch: variable " + n.letter + " tied in two directions");
    }
    return ties;
}

}  // namespace

void check_preform(const Preform& p) {
    bool has_ranked = false;
    for (const auto& [id, n] : p.left.nodes()) has_ranked = has_ranked || !n.is_var;
    if (!has_ranked) throw RuleError("left side needs at least one ranked node");
    auto lt = var_ties(p.left, "left");
    auto rt = var_ties(p.right, "right");
    for (const auto& [x, d] : rt) {
        auto it = lt.find(x);
        if (it == lt.end()) throw RuleError("right variable " + x + " does not occur on the left");
        if (it->second != d) throw RuleError("DirectionMismatch: variable " + x + " changes tie direction");
    }
    for (const auto& [name, port] : p.right.tags()) {
        auto it = p.left.tags().find(name);
        if (it != p.left.tags().end() && it->second.dir != port.dir)
            throw RuleError("tag " + name + " changes direction between sides");
    }
}

void check_rns(const Rns& r) {
    for (const auto& rule : r.rules) {
        if (rule.preforms.empty()) throw RuleError("rule " + rule.name + " has no preform");
        for (const auto& p : rule.preforms) check_preform(p);
    }
    if (const Condition* c = r.find(ConditionKind::ApplyOrder))
        for (const auto& name : c->args)
            if (!r.rule(name)) throw RuleError("order condition names unknown rule " + name);
}

}  // namespace netrw
