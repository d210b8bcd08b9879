#include "netrw/abstraction.hpp"

#include <algorithm>
#include <functional>
#include <numeric>

namespace netrw {

const char* to_string(AbstractionErrorKind k) {
    switch (k) {
        case AbstractionErrorKind::DisconnectedBlock: return "DisconnectedBlock";
        case AbstractionErrorKind::NotAPartition: return "NotAPartition";
        case AbstractionErrorKind::SearchExhausted: return "SearchExhausted";
        case AbstractionErrorKind::NotSisters: return "NotSisters";
        case AbstractionErrorKind::NonTerminatingColouring: return "NonTerminatingColouring";
        case AbstractionErrorKind::InvalidTarget: return "InvalidTarget";
    }
    return "?";
}

AbstractionError::AbstractionError(AbstractionErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

const BlockInfo* Prns::block_of_rule(const std::string& rule) const {
    for (const auto& b : blocks)
        if (b.rule == rule) return &b;
    return nullptr;
}

const BlockInfo* Prns::block_of_concept(const std::string& concept_id) const {
    for (const auto& b : blocks)
        if (b.concept_id == concept_id) return &b;
    return nullptr;
}

std::set<std::string> Prns::concept_letters() const {
    std::set<std::string> out;
    for (const auto& b : blocks) out.insert(b.concept_node.letter);
    return out;
}

std::vector<PortRef> block_boundary(const Net& c, const std::set<std::string>& block, Dir d) {
    std::vector<PortRef> out;
    for (const auto& id : block)
        for (const auto& p : c.ports(id)) {
            if (p.dir != d) continue;
            auto q = c.partner(p);
            if (!q || !block.count(q->node)) out.push_back(p);
        }
    std::sort(out.begin(), out.end());
    return out;
}

namespace {

bool has_vars(const Net& n) {
    for (const auto& [id, node] : n.nodes())
        if (node.is_var) return true;
    return false;
}

void check_blocks(const Net& c, const std::vector<std::set<std::string>>& blocks) {
    if (has_vars(c)) throw AbstractionError(AbstractionErrorKind::NotAPartition, "variable nodes cannot be contracted");
    std::set<std::string> covered;
    for (const auto& b : blocks) {
        if (b.empty()) throw AbstractionError(AbstractionErrorKind::NotAPartition, "empty block");
        for (const auto& n : b) {
            if (!c.has_node(n)) throw AbstractionError(AbstractionErrorKind::NotAPartition, "unknown node " + n);
            if (!covered.insert(n).second)
                throw AbstractionError(AbstractionErrorKind::NotAPartition, "node " + n + " lies in two blocks");
        }
    }
    if (covered.size() != c.size())
        throw AbstractionError(AbstractionErrorKind::NotAPartition, "blocks do not cover every node");
    for (const auto& b : blocks)
        if (!is_connected_set(c, b)) {
            PartitionSpec one{{b}};
            throw AbstractionError(AbstractionErrorKind::DisconnectedBlock, "block " + to_string(one) + " is disconnected");
        }
}

std::vector<PortRef> checked_ports(const std::vector<PortRef>& given, const std::vector<PortRef>& boundary) {
    if (given.empty()) return boundary;
    auto sorted = given;
    std::sort(sorted.begin(), sorted.end());
    if (sorted != boundary)
        throw AbstractionError(AbstractionErrorKind::InvalidTarget, "port map is not a permutation of the block boundary");
    return given;
}

}  // namespace

Prns contraction_prns(const Net& c, const std::vector<BlockTarget>& targets, FreshMinter* minter,
                      const std::string& name) {
    std::vector<std::set<std::string>> blocks;
    for (const auto& t : targets) blocks.push_back(t.nodes);
    check_blocks(c, blocks);

    FreshMinter local("_w");
    FreshMinter& fm = minter ? *minter : local;
    fm.avoid(c);
    auto letters = c.letters();

    Prns out;
    out.rns.name = name;
    out.rns.conditions.push_back({ConditionKind::FreshLetters, {}});
    out.rns.conditions.push_back({ConditionKind::RedexAnchored, {}});
    std::set<std::string> concept_ids;
    for (std::size_t k = 0; k < targets.size(); ++k) {
        const auto& t = targets[k];
        BlockInfo info;
        info.rule = name + std::to_string(k);
        info.nodes = t.nodes;
        info.concept_id = t.concept_id.empty() ? *t.nodes.begin() : t.concept_id;
        if (c.has_node(info.concept_id) && !t.nodes.count(info.concept_id))
            throw AbstractionError(AbstractionErrorKind::InvalidTarget, "concept id " + info.concept_id + " names another node");
        if (!concept_ids.insert(info.concept_id).second)
            throw AbstractionError(AbstractionErrorKind::InvalidTarget, "concept id " + info.concept_id + " used twice");
        std::string letter = t.letter.empty() ? fm.mint() : t.letter;
        if (letters.count(letter))
            throw AbstractionError(AbstractionErrorKind::InvalidTarget, "concept letter " + letter + " occurs in the substance");
        info.in_ports = checked_ports(t.in_ports, block_boundary(c, t.nodes, Dir::In));
        info.out_ports = checked_ports(t.out_ports, block_boundary(c, t.nodes, Dir::Out));
        info.concept_node = Node{letter, static_cast<int>(info.in_ports.size()), static_cast<int>(info.out_ports.size()), false};

        Net left = induced_subnet(c, t.nodes, TagPolicy::AllBoundary, false).renamed("");
        RawNet right;
        right.nodes[info.concept_id] = info.concept_node;
        for (std::size_t i = 0; i < info.in_ports.size(); ++i)
            right.tags[*left.tag_at(info.in_ports[i])] = {info.concept_id, Dir::In, static_cast<int>(i)};
        for (std::size_t i = 0; i < info.out_ports.size(); ++i)
            right.tags[*left.tag_at(info.out_ports[i])] = {info.concept_id, Dir::Out, static_cast<int>(i)};
        Rule rule;
        rule.name = info.rule;
        rule.preforms.push_back({left, validate_net(std::move(right))});
        out.rns.rules.push_back(std::move(rule));
        out.blocks.push_back(std::move(info));
    }
    return out;
}

Prns synthesize_prns(const Net& c, const PartitionSpec& blocks, FreshMinter* minter, const std::string& name) {
    std::vector<BlockTarget> targets;
    for (const auto& b : blocks.blocks) targets.push_back({b, {}, {}, {}, {}});
    return contraction_prns(c, targets, minter, name);
}

Prns invert_prns(const Prns& w) {
    Prns out = w;
    out.rns = invert_rns(w.rns);
    return out;
}

Prns prns_from_rns(const Rns& r) {
    Prns out;
    out.rns = r;
    for (const auto& rule : r.rules) {
        auto bad = [&](const std::string& why) {
            return AbstractionError(AbstractionErrorKind::InvalidTarget, "rule " + rule.name + ": " + why);
        };
        if (rule.preforms.size() != 1) throw bad("needs exactly one preform");
        const Preform& p = rule.preforms[0];
        if (p.right.size() != 1) throw bad("right side must be one node");
        if (!p.left.var_names().empty()) throw bad("left side holds variables");
        BlockInfo info;
        info.rule = rule.name;
        for (const auto& [id, n] : p.left.nodes()) info.nodes.insert(id);
        info.concept_id = p.right.nodes().begin()->first;
        info.concept_node = p.right.nodes().begin()->second;
        info.in_ports.resize(info.concept_node.in_rank);
        info.out_ports.resize(info.concept_node.out_rank);
        std::size_t seen = 0;
        for (const auto& [tag, rp] : p.right.tags()) {
            auto lp = p.left.tags().find(tag);
            if (lp == p.left.tags().end()) throw bad("tag " + tag + " missing on the left");
            (rp.dir == Dir::In ? info.in_ports : info.out_ports)[rp.index] = lp->second;
            ++seen;
        }
        if (seen != info.in_ports.size() + info.out_ports.size()) throw bad("concept ports left untagged");
        out.blocks.push_back(std::move(info));
    }
    return out;
}

// ------------------------------------------------------------ validation

const char* to_string(RnsType t) {
    switch (t) {
        case RnsType::PRNS: return "PRNS";
        case RnsType::GPRNS: return "GPRNS";
        case RnsType::CRNS: return "CRNS";
        case RnsType::GCRNS: return "GCRNS";
        case RnsType::GCdRNS: return "GCdRNS";
    }
    return "?";
}

std::optional<RnsType> parse_rns_type(const std::string& s) {
    for (RnsType t : {RnsType::PRNS, RnsType::GPRNS, RnsType::CRNS, RnsType::GCRNS, RnsType::GCdRNS})
        if (s == to_string(t)) return t;
    return std::nullopt;
}

bool ValidationReport::valid() const {
    return std::all_of(checks.begin(), checks.end(), [](const ConditionCheck& c) { return c.pass; });
}

namespace {

std::set<std::string> ranked_letters(const Net& n) {
    std::set<std::string> out;
    for (const auto& [id, node] : n.nodes())
        if (!node.is_var) out.insert(node.letter);
    return out;
}

std::set<std::string> ranked_letters(const Jungle& j) {
    std::set<std::string> out;
    for (const auto& [k, n] : j.by_key()) {
        auto l = ranked_letters(n);
        out.insert(l.begin(), l.end());
    }
    return out;
}

void fail(ConditionCheck& c, const std::string& rule) {
    c.pass = false;
    if (std::find(c.counterexamples.begin(), c.counterexamples.end(), rule) == c.counterexamples.end())
        c.counterexamples.push_back(rule);
}

// A one-rule system carrying the matching-relevant conditions of r.
Rns single_rule_view(const Rns& r, const Rule& rule, std::size_t preform) {
    Rns v;
    v.name = r.name;
    Rule one;
    one.name = rule.name;
    one.preforms.push_back(rule.preforms[preform]);
    v.rules.push_back(one);
    if (r.has(ConditionKind::RedexAnchored)) v.conditions.push_back({ConditionKind::RedexAnchored, {}});
    return v;
}

bool has_redex_in(const Rns& r, const Rule& rule, std::size_t preform, const Net& host) {
    return !find_matches_in(single_rule_view(r, rule, preform), host).empty();
}

}  // namespace

ValidationReport validate_rns_type(const Rns& r, RnsType type, const Jungle& subject, std::size_t search_bound,
                                   const std::optional<Net>& witness_host) {
    ValidationReport rep;
    rep.type = type;
    bool generalized = type == RnsType::GPRNS || type == RnsType::GCRNS || type == RnsType::GCdRNS;
    bool partition = type == RnsType::PRNS || type == RnsType::GPRNS;
    auto subject_letters = ranked_letters(subject);

    ConditionCheck might{generalized ? "not manoeuvre deleting, arity mightiness saving"
                                     : "manoeuvre mightiness saving, arity mightiness saving", true, {}, {}};
    for (const auto& rule : r.rules) {
        bool ok = has_label(rule, "arity mightiness saving") &&
                  (generalized ? !has_label(rule, "manoeuvre deleting") : has_label(rule, "manoeuvre mightiness saving"));
        if (!ok) fail(might, rule.name);
    }
    rep.checks.push_back(might);

    ConditionCheck insens{"not instance sensitive", true, {}, {}};
    insens.note = "right-side variables always take the left-side binding";
    rep.checks.push_back(insens);

    ConditionCheck shape{partition ? "single fresh concept letter per right side" : "right letters outside the subject", true, {}, {}};
    for (const auto& rule : r.rules)
        for (const auto& p : rule.preforms) {
            auto rl = ranked_letters(p.right);
            if (partition && rl.size() != 1) fail(shape, rule.name);
            for (const auto& l : rl)
                if (subject_letters.count(l)) fail(shape, rule.name);
            if (!generalized && component_count(p.right) > 1) fail(shape, rule.name);
        }
    rep.checks.push_back(shape);

    ConditionCheck inj{"left to right is an injection", true, {}, {}};
    {
        std::map<std::string, std::pair<std::string, std::string>> by_left;  // left key -> (right key, rule)
        std::map<std::string, std::string> by_right;                         // right key -> left key
        for (const auto& rule : r.rules)
            for (const auto& p : rule.preforms) {
                std::string lk = canonical_key(p.left, true), rk = canonical_key(p.right, true);
                auto [it, fresh] = by_left.emplace(lk, std::make_pair(rk, rule.name));
                if (!fresh && it->second.first != rk) {
                    fail(inj, it->second.second);
                    fail(inj, rule.name);
                }
                auto [jt, fresh_r] = by_right.emplace(rk, lk);
                if (!fresh_r && jt->second != lk) fail(inj, rule.name);
            }
    }
    rep.checks.push_back(inj);

    ConditionCheck fresh{"fresh-letters condition present", true, {}, {}};
    if (!r.has(ConditionKind::FreshLetters)) {
        fresh.pass = false;
        fresh.note = "condition fresh-letters is absent";
    }
    rep.checks.push_back(fresh);

    if (!partition) {
        ConditionCheck host{"every preform has a redex in a host enclosing the subject", true, {}, {}};
        auto every_redex = [&](const std::vector<Net>& hosts, ConditionCheck* record) {
            bool all = true;
            for (const auto& rule : r.rules)
                for (std::size_t i = 0; i < rule.preforms.size(); ++i) {
                    bool any = false;
                    for (const auto& h : hosts) any = any || has_redex_in(r, rule, i, h);
                    if (!any) {
                        all = false;
                        if (record) fail(*record, rule.name);
                    }
                }
            return all;
        };
        if (witness_host) {
            for (const auto& [k, s] : subject.by_key())
                if (!is_enclosure(s, *witness_host)) {
                    host.pass = false;
                    host.note = "subject net is not an enclosure of the supplied host";
                }
            every_redex({*witness_host}, &host);
            if (host.pass) host.note = "supplied host";
        } else if (every_redex(subject.nets(), nullptr)) {
            host.note = "the subject itself";
        } else {
            Jungle un = subject;
            std::size_t total = 0;
            for (const auto& rule : r.rules)
                for (const auto& p : rule.preforms) un.insert(p.left);
            for (const auto& [k, n] : un.by_key()) total += n.size();
            if (total <= search_bound && !r.has(ConditionKind::RedexAnchored)) {
                every_redex({jungle_as_net(un)}, &host);
                if (host.pass) host.note = "disjoint union of the subject and the left sides";
            } else {
                every_redex(subject.nets(), &host);
                host.note = "no host found within the search bound";
            }
        }
        rep.checks.push_back(host);
    }

    if (type == RnsType::GCdRNS) {
        // distinct = no two right sides overlap; any shared net contains a shared node
        ConditionCheck distinct{"right sides pairwise distinct", true, {}, {}};
        std::vector<std::pair<std::string, const Net*>> rights;
        for (const auto& rule : r.rules)
            for (const auto& p : rule.preforms) rights.push_back({rule.name, &p.right});
        for (std::size_t i = 0; i < rights.size(); ++i)
            for (std::size_t k = i + 1; k < rights.size(); ++k) {
                if (rights[i].second->empty() || rights[k].second->empty()) continue;
                if (overlaps(*rights[i].second, *rights[k].second, 1).overlap) {
                    fail(distinct, rights[i].first);
                    fail(distinct, rights[k].first);
                }
            }
        rep.checks.push_back(distinct);
    }
    return rep;
}

// ------------------------------------------------------------ concept

int concept_budget(const Rns& w, const Jungle& c) {
    std::size_t nodes = 0;
    for (const auto& [k, n] : c.by_key()) nodes += n.size();
    std::size_t b = w.rules.size() * nodes;
    return static_cast<int>(std::max<std::size_t>(1, b));
}

Jungle concept_of(const Jungle& c, const Rns& w) {
    return normal_forms(w, c, concept_budget(w, c));
}

Jungle roundtrip(const Jungle& c, const Rns& w) {
    return normal_forms(invert_rns(w), concept_of(c, w), concept_budget(w, c));
}

// ------------------------------------------------------------ characterization

namespace {

// Set partitions of items into at most max_blocks blocks, in restricted-growth order.
void for_each_partition(const std::vector<std::string>& items, std::size_t max_blocks,
                        const std::function<bool(const std::vector<std::set<std::string>>&)>& cb) {
    std::vector<std::size_t> label(items.size(), 0);
    bool stop = false;
    std::function<void(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t used) {
        if (stop) return;
        if (i == items.size()) {
            std::vector<std::set<std::string>> blocks(used);
            for (std::size_t k = 0; k < items.size(); ++k) blocks[label[k]].insert(items[k]);
            if (!cb(blocks)) stop = true;
            return;
        }
        for (std::size_t b = 0; b <= used && b < max_blocks; ++b) {
            label[i] = b;
            go(i + 1, std::max(used, b + 1));
            if (stop) return;
        }
    };
    go(0, 0);
}

std::pair<int, int> boundary_profile(const Net& c, const std::set<std::string>& block) {
    return {static_cast<int>(block_boundary(c, block, Dir::In).size()),
            static_cast<int>(block_boundary(c, block, Dir::Out).size())};
}

}  // namespace

Characterization characterization_check(const Net& a, const Net& b) {
    Characterization out;
    if (a.size() > kCharacterizationBound)
        throw AbstractionError(AbstractionErrorKind::SearchExhausted,
                               "partition scan is bounded at " + std::to_string(kCharacterizationBound) + " nodes");
    if (has_vars(a) || has_vars(b)) {
        out.reason = "variable nodes are not contracted";
        return out;
    }
    auto la = ranked_letters(a), lb = ranked_letters(b);
    for (const auto& l : la)
        if (lb.count(l)) {
            out.reason = "letter " + l + " occurs on both sides";
            return out;
        }
    if (a.empty() || b.empty()) {
        out.holds = a.empty() && b.empty();
        if (out.holds) out.witness = PartitionSpec{};
        else out.reason = "exactly one side is empty";
        return out;
    }
    std::vector<std::pair<int, int>> target;
    for (const auto& [id, n] : b.nodes()) target.push_back({n.in_rank, n.out_rank});
    std::sort(target.begin(), target.end());

    std::vector<std::string> items;
    for (const auto& [id, n] : a.nodes()) items.push_back(id);
    for_each_partition(items, target.size(), [&](const std::vector<std::set<std::string>>& blocks) {
        if (blocks.size() != target.size()) return true;
        std::vector<std::pair<int, int>> prof;
        for (const auto& blk : blocks) {
            if (!is_connected_set(a, blk)) return true;
            prof.push_back(boundary_profile(a, blk));
        }
        std::sort(prof.begin(), prof.end());
        if (prof != target) return true;
        out.holds = true;
        out.witness = PartitionSpec{blocks};
        return false;
    });
    if (!out.holds) out.reason = "no partition matches the port profile of the concept nodes";
    return out;
}

// ------------------------------------------------------------ sisters

const char* to_string(SisterMode m) { return m == SisterMode::Total ? "total" : "split"; }

bool abstract_sisters(const Jungle& a, const Jungle& b, SisterMode mode) {
    Delta da = delta_d(a), db = delta_d(b);
    return mode == SisterMode::Total ? da.total == db.total : da == db;
}

bool abstract_sisters(const Net& a, const Net& b, SisterMode mode) {
    return abstract_sisters(Jungle{a}, Jungle{b}, mode);
}

// ------------------------------------------------------------ origin search

namespace {

struct Cell {
    std::string a;
    std::string b;
    auto operator<=>(const Cell&) const = default;
};

// One way to realise an edge of either sister inside the origin.
struct Realised {
    Cell src;
    Cell dst;
    int a_edge = -1;  // index into a's edges, or -1
    int b_edge = -1;
};

struct Layout {
    std::vector<Cell> cells;
    std::vector<Realised> edges;
    std::vector<std::pair<PortRef, PortRef>> free_in;   // (a port, b port)
    std::vector<std::pair<PortRef, PortRef>> free_out;
};

bool has_self_loop(const Net& n) {
    for (const auto& e : n.edges())
        if (e.src == e.dst) return true;
    return false;
}

std::string id_prefix(const Net& a, const Net& b) {
    std::string p = "o";
    auto clash = [&](const std::string& pre) {
        for (const Net* n : {&a, &b})
            for (const auto& [id, node] : n->nodes())
                if (id.rfind(pre, 0) == 0) return true;
        return false;
    };
    while (clash(p)) p += "_";
    return p;
}

struct Built {
    Net origin;
    OriginWitness witness;
};

// Turns a layout into the origin net and both contraction systems.
Built build_origin(const Net& a, const Net& b, const Layout& L, const std::string& letter_prefix) {
    std::string pre = id_prefix(a, b);
    std::map<Cell, std::string> id;
    for (std::size_t i = 0; i < L.cells.size(); ++i) id[L.cells[i]] = pre + std::to_string(i);

    std::map<Cell, int> next_in, next_out;
    RawNet raw;
    std::map<PortRef, PortRef> a_port, b_port;  // sister port -> origin port
    auto ea = std::vector<Edge>(a.edges().begin(), a.edges().end());
    auto eb = std::vector<Edge>(b.edges().begin(), b.edges().end());
    for (const auto& r : L.edges) {
        int o = next_out[r.src]++, i = next_in[r.dst]++;
        raw.edges.insert({id[r.src], o, id[r.dst], i});
        PortRef so{id[r.src], Dir::Out, o}, di{id[r.dst], Dir::In, i};
        if (r.a_edge >= 0) {
            a_port[ea[r.a_edge].src_port()] = so;
            a_port[ea[r.a_edge].dst_port()] = di;
        }
        if (r.b_edge >= 0) {
            b_port[eb[r.b_edge].src_port()] = so;
            b_port[eb[r.b_edge].dst_port()] = di;
        }
    }
    for (const auto& [pa, pb] : L.free_in) {
        Cell c{pa.node, pb.node};
        PortRef op{id[c], Dir::In, next_in[c]++};
        a_port[pa] = op;
        b_port[pb] = op;
    }
    for (const auto& [pa, pb] : L.free_out) {
        Cell c{pa.node, pb.node};
        PortRef op{id[c], Dir::Out, next_out[c]++};
        a_port[pa] = op;
        b_port[pb] = op;
    }
    FreshMinter fm(letter_prefix);
    fm.avoid(a);
    fm.avoid(b);
    for (const auto& c : L.cells) raw.nodes[id[c]] = Node{fm.mint(), next_in[c], next_out[c], false};
    Net origin = validate_net(std::move(raw));

    auto targets_for = [&](const Net& s, const std::map<PortRef, PortRef>& port, bool side_a) {
        std::vector<BlockTarget> ts;
        for (const auto& [sid, node] : s.nodes()) {
            BlockTarget t;
            for (const auto& c : L.cells)
                if ((side_a ? c.a : c.b) == sid) t.nodes.insert(id.at(c));
            t.concept_id = sid;
            t.letter = node.letter;
            for (int k = 0; k < node.in_rank; ++k) t.in_ports.push_back(port.at({sid, Dir::In, k}));
            for (int k = 0; k < node.out_rank; ++k) t.out_ports.push_back(port.at({sid, Dir::Out, k}));
            ts.push_back(std::move(t));
        }
        return ts;
    };
    Built out;
    out.origin = origin;
    out.witness.origin = origin;
    out.witness.w_a = contraction_prns(origin, targets_for(a, a_port, true), nullptr, "Wa");
    out.witness.w_b = contraction_prns(origin, targets_for(b, b_port, false), nullptr, "Wb");
    return out;
}

// Enumerates edge realisations and free-port pairings for a fixed cell set.
class LayoutSearch {
public:
    LayoutSearch(const Net& a, const Net& b, const std::set<Cell>& cells, std::function<bool(const Layout&)> cb)
        : a_(a), b_(b), cells_(cells), cb_(std::move(cb)), ea_(a.edges().begin(), a.edges().end()),
          eb_(b.edges().begin(), b.edges().end()), b_used_(eb_.size(), false) {
        for (const auto& p : a.unoccupied_ports()) (p.dir == Dir::In ? fa_in_ : fa_out_).push_back(p);
        for (const auto& p : b.unoccupied_ports()) (p.dir == Dir::In ? fb_in_ : fb_out_).push_back(p);
        layout_.cells.assign(cells.begin(), cells.end());
    }

    void run() { a_edges(0); }

private:
    bool has(const std::string& x, const std::string& y) const { return cells_.count({x, y}) != 0; }

    void a_edges(std::size_t i) {
        if (stop_) return;
        if (i == ea_.size()) return b_edges(0);
        const Edge& e = ea_[i];
        for (std::size_t j = 0; j < eb_.size(); ++j) {
            if (b_used_[j]) continue;
            const Edge& f = eb_[j];
            if (!has(e.src, f.src) || !has(e.dst, f.dst)) continue;
            b_used_[j] = true;
            layout_.edges.push_back({{e.src, f.src}, {e.dst, f.dst}, static_cast<int>(i), static_cast<int>(j)});
            a_edges(i + 1);
            layout_.edges.pop_back();
            b_used_[j] = false;
            if (stop_) return;
        }
        for (const auto& [bid, node] : b_.nodes()) {
            if (!has(e.src, bid) || !has(e.dst, bid)) continue;
            layout_.edges.push_back({{e.src, bid}, {e.dst, bid}, static_cast<int>(i), -1});
            a_edges(i + 1);
            layout_.edges.pop_back();
            if (stop_) return;
        }
    }

    void b_edges(std::size_t j) {
        if (stop_) return;
        if (j == eb_.size()) return free_ports(0, Dir::In);
        if (b_used_[j]) return b_edges(j + 1);
        const Edge& f = eb_[j];
        for (const auto& [aid, node] : a_.nodes()) {
            if (!has(aid, f.src) || !has(aid, f.dst)) continue;
            layout_.edges.push_back({{aid, f.src}, {aid, f.dst}, -1, static_cast<int>(j)});
            b_edges(j + 1);
            layout_.edges.pop_back();
            if (stop_) return;
        }
    }

    void free_ports(std::size_t i, Dir d) {
        if (stop_) return;
        auto& fa = d == Dir::In ? fa_in_ : fa_out_;
        auto& fb = d == Dir::In ? fb_in_ : fb_out_;
        auto& pairs = d == Dir::In ? layout_.free_in : layout_.free_out;
        auto& used = d == Dir::In ? used_in_ : used_out_;
        if (used.size() != fb.size()) used.assign(fb.size(), false);
        if (fa.size() != fb.size()) return;
        if (i == fa.size()) {
            if (d == Dir::In) return free_ports(0, Dir::Out);
            if (blocks_connected()) stop_ = !cb_(layout_);
            return;
        }
        for (std::size_t k = 0; k < fb.size(); ++k) {
            if (used[k] || !has(fa[i].node, fb[k].node)) continue;
            used[k] = true;
            pairs.push_back({fa[i], fb[k]});
            free_ports(i + 1, d);
            pairs.pop_back();
            used[k] = false;
            if (stop_) return;
        }
    }

    bool blocks_connected() const {
        // rows are joined by b-edges inside one a-block, columns by a-edges inside one b-block
        auto connected = [&](bool row, const std::string& key) {
            std::vector<Cell> members;
            for (const auto& c : cells_)
                if ((row ? c.a : c.b) == key) members.push_back(c);
            std::set<Cell> seen{members.front()};
            std::vector<Cell> stack{members.front()};
            while (!stack.empty()) {
                Cell u = stack.back();
                stack.pop_back();
                for (const auto& r : layout_.edges) {
                    bool inside = row ? (r.src.a == key && r.dst.a == key) : (r.src.b == key && r.dst.b == key);
                    if (!inside) continue;
                    if (r.src == u && seen.insert(r.dst).second) stack.push_back(r.dst);
                    if (r.dst == u && seen.insert(r.src).second) stack.push_back(r.src);
                }
            }
            return seen.size() == members.size();
        };
        for (const auto& [id, n] : a_.nodes())
            if (!connected(true, id)) return false;
        for (const auto& [id, n] : b_.nodes())
            if (!connected(false, id)) return false;
        return true;
    }

    const Net& a_;
    const Net& b_;
    const std::set<Cell>& cells_;
    std::function<bool(const Layout&)> cb_;
    std::vector<Edge> ea_, eb_;
    std::vector<bool> b_used_;
    std::vector<PortRef> fa_in_, fa_out_, fb_in_, fb_out_;
    std::vector<bool> used_in_, used_out_;
    Layout layout_;
    bool stop_ = false;
};

}  // namespace

OriginSearchResult search_common_origin(const Net& a, const Net& b, const OriginSearchOptions& opts) {
    if (opts.precheck && !abstract_sisters(a, b, SisterMode::Split))
        throw AbstractionError(AbstractionErrorKind::NotSisters,
                               "unoccupied ports " + to_string(delta_d(a)) + " vs " + to_string(delta_d(b)));
    if (has_vars(a) || has_vars(b))
        throw AbstractionError(AbstractionErrorKind::InvalidTarget, "sisters with variable nodes have no contraction origin");
    OriginSearchResult res;
    if (a.empty() || b.empty() || has_self_loop(a) || has_self_loop(b)) return res;
    if (a.size() == 1 && b.size() == 1) {
        // closed form: one fresh node, ports paired by index
        const auto& [ia, na] = *a.nodes().begin();
        const auto& [ib, nb] = *b.nodes().begin();
        res.candidates = 1;
        if (na.in_rank != nb.in_rank || na.out_rank != nb.out_rank) return res;
        Layout L;
        L.cells.push_back({ia, ib});
        for (int k = 0; k < na.in_rank; ++k) L.free_in.push_back({{ia, Dir::In, k}, {ib, Dir::In, k}});
        for (int k = 0; k < na.out_rank; ++k) L.free_out.push_back({{ia, Dir::Out, k}, {ib, Dir::Out, k}});
        res.witness = build_origin(a, b, L, opts.letter_prefix).witness;
        return res;
    }

    std::vector<Cell> all;
    for (const auto& [x, nx] : a.nodes())
        for (const auto& [y, ny] : b.nodes()) all.push_back({x, y});
    std::size_t lo = std::max(a.size(), b.size());
    std::size_t hi = std::min(opts.max_origin_nodes, all.size());

    for (std::size_t size = lo; size <= hi; ++size) {
        std::optional<Built> best;
        std::pair<std::size_t, std::string> best_rank;
        std::vector<bool> pick(all.size(), false);
        std::fill(pick.begin(), pick.begin() + static_cast<long>(size), true);
        do {
            std::set<Cell> cells;
            std::set<std::string> rows, cols;
            for (std::size_t i = 0; i < all.size(); ++i)
                if (pick[i]) {
                    cells.insert(all[i]);
                    rows.insert(all[i].a);
                    cols.insert(all[i].b);
                }
            if (rows.size() != a.size() || cols.size() != b.size()) continue;
            ++res.candidates;
            LayoutSearch search(a, b, cells, [&](const Layout& L) {
                Built built = build_origin(a, b, L, opts.letter_prefix);
                std::pair<std::size_t, std::string> rank{built.origin.edges().size(), canonical_key(built.origin)};
                if (!best || rank < best_rank) {
                    best = built;
                    best_rank = rank;
                }
                return true;
            });
            search.run();
        } while (std::prev_permutation(pick.begin(), pick.end()));
        if (best) {
            res.witness = best->witness;
            return res;
        }
    }
    return res;
}

bool verify_origin(const OriginWitness& w, const Net& a, const Net& b) {
    Jungle c{w.origin};
    for (const Prns* p : {&w.w_a, &w.w_b})
        if (!validate_rns_type(p->rns, RnsType::PRNS, c).valid()) return false;
    try {
        return concept_of(c, w.w_a.rns) == Jungle{a} && concept_of(c, w.w_b.rns) == Jungle{b};
    } catch (const RewriteError&) {
        return false;
    }
}

// ------------------------------------------------------------ cover systems

namespace {

// Contracts one preform's left side onto its right side: finds a partition and
// a block -> node assignment whose contraction equals the right side exactly.
std::optional<std::vector<BlockTarget>> contraction_onto(const Net& left, const Net& right) {
    std::vector<std::pair<int, int>> target;
    std::vector<std::string> rnodes;
    for (const auto& [id, n] : right.nodes()) {
        target.push_back({n.in_rank, n.out_rank});
        rnodes.push_back(id);
    }
    std::vector<std::string> items;
    for (const auto& [id, n] : left.nodes()) items.push_back(id);
    std::optional<std::vector<BlockTarget>> found;

    for_each_partition(items, rnodes.size(), [&](const std::vector<std::set<std::string>>& blocks) {
        if (blocks.size() != rnodes.size()) return true;
        for (const auto& blk : blocks)
            if (!is_connected_set(left, blk)) return true;
        std::vector<std::size_t> perm(rnodes.size());
        std::iota(perm.begin(), perm.end(), 0);
        do {
            // block k becomes right node perm[k]
            bool ok = true;
            std::map<std::string, std::size_t> block_of;
            for (std::size_t k = 0; k < blocks.size(); ++k)
                for (const auto& n : blocks[k]) block_of[n] = k;
            std::vector<std::map<PortRef, PortRef>> maps(blocks.size());  // right port -> left port
            for (std::size_t k = 0; k < blocks.size() && ok; ++k) {
                const Node& rn = right.node(rnodes[perm[k]]);
                auto p = boundary_profile(left, blocks[k]);
                ok = p.first == rn.in_rank && p.second == rn.out_rank;
            }
            if (!ok) continue;
            // severed edges must pair with right edges between the images
            std::vector<Edge> cross;
            for (const auto& e : left.edges())
                if (block_of[e.src] != block_of[e.dst]) cross.push_back(e);
            std::vector<Edge> redges(right.edges().begin(), right.edges().end());
            if (cross.size() != redges.size()) continue;
            std::vector<bool> used(redges.size(), false);
            std::vector<std::map<PortRef, PortRef>> port_map(blocks.size());
            std::function<bool(std::size_t)> pair_edges = [&](std::size_t i) -> bool {
                if (i == cross.size()) {
                    // tagged free ports follow their tag; untagged ones pair in sorted order
                    auto pm = port_map;
                    for (std::size_t k = 0; k < blocks.size(); ++k) {
                        const std::string& rid = rnodes[perm[k]];
                        for (Dir d : {Dir::In, Dir::Out}) {
                            std::vector<PortRef> lfree, rfree;
                            for (const auto& p : block_boundary(left, blocks[k], d)) {
                                if (left.partner(p)) continue;
                                if (auto t = left.tag_at(p)) {
                                    auto rt = right.tags().find(*t);
                                    if (rt == right.tags().end() || rt->second.node != rid || rt->second.dir != d ||
                                        right.occupied(rt->second))
                                        return false;
                                    pm[k][rt->second] = p;
                                } else {
                                    lfree.push_back(p);
                                }
                            }
                            const Node& rn = right.node(rid);
                            for (int x = 0; x < rn.rank(d); ++x) {
                                PortRef rp{rid, d, x};
                                if (!right.occupied(rp) && !right.tag_at(rp)) rfree.push_back(rp);
                            }
                            if (lfree.size() != rfree.size()) return false;
                            for (std::size_t x = 0; x < lfree.size(); ++x) pm[k][rfree[x]] = lfree[x];
                        }
                    }
                    for (const auto& [name, rp] : right.tags())
                        if (!left.tags().count(name)) return false;
                    std::vector<BlockTarget> ts;
                    for (std::size_t k = 0; k < blocks.size(); ++k) {
                        const std::string& rid = rnodes[perm[k]];
                        const Node& rn = right.node(rid);
                        BlockTarget t;
                        t.nodes = blocks[k];
                        t.letter = rn.letter;
                        for (int x = 0; x < rn.in_rank; ++x) {
                            auto it = pm[k].find({rid, Dir::In, x});
                            if (it == pm[k].end()) return false;
                            t.in_ports.push_back(it->second);
                        }
                        for (int x = 0; x < rn.out_rank; ++x) {
                            auto it = pm[k].find({rid, Dir::Out, x});
                            if (it == pm[k].end()) return false;
                            t.out_ports.push_back(it->second);
                        }
                        ts.push_back(std::move(t));
                    }
                    found = ts;
                    return true;
                }
                const Edge& e = cross[i];
                std::size_t ks = block_of[e.src], kd = block_of[e.dst];
                for (std::size_t j = 0; j < redges.size(); ++j) {
                    if (used[j]) continue;
                    const Edge& f = redges[j];
                    if (f.src != rnodes[perm[ks]] || f.dst != rnodes[perm[kd]]) continue;
                    used[j] = true;
                    port_map[ks][f.src_port()] = e.src_port();
                    port_map[kd][f.dst_port()] = e.dst_port();
                    if (pair_edges(i + 1)) return true;
                    port_map[ks].erase(f.src_port());
                    port_map[kd].erase(f.dst_port());
                    used[j] = false;
                }
                return false;
            };
            if (pair_edges(0)) return false;
        } while (std::next_permutation(perm.begin(), perm.end()));
        return true;
    });
    return found;
}

}  // namespace

std::variant<Prns, NotConvertible> crns_to_prns(const Crns& r, const Jungle& t, FreshMinter* minter) {
    Prns out;
    out.rns.name = r.rns.name + "_prns";
    out.rns.conditions.push_back({ConditionKind::FreshLetters, {}});
    std::map<std::string, std::string> letter_owner;  // right letter -> preform label
    for (const auto& rule : r.rns.rules)
        for (std::size_t i = 0; i < rule.preforms.size(); ++i) {
            const Preform& p = rule.preforms[i];
            std::string label = rule.name + "." + std::to_string(i);
            if (has_vars(p.left) || has_vars(p.right)) return NotConvertible{rule.name, "variables in a cover preform"};
            auto ll = ranked_letters(p.left), rl = ranked_letters(p.right);
            for (const auto& l : rl)
                if (ll.count(l)) return NotConvertible{rule.name, "left and right sides are not distinct"};
            for (const auto& l : rl) {
                auto [it, fresh] = letter_owner.emplace(l, label);
                if (!fresh && it->second != label)
                    return NotConvertible{rule.name, "right letter " + l + " is shared with " + it->second};
            }
            if (p.left.size() > kCharacterizationBound)
                return NotConvertible{rule.name, "left side exceeds the partition scan bound"};
            if (!characterization_check(p.left.renamed(""), p.right.renamed("")).holds)
                return NotConvertible{rule.name, "no block arrangement matches the right side"};
            auto targets = contraction_onto(p.left, p.right);
            if (!targets) return NotConvertible{rule.name, "no contraction reproduces the right side"};
            // block patterns keep the preform's own interface tags
            for (std::size_t k = 0; k < targets->size(); ++k) {
                const BlockTarget& bt = (*targets)[k];
                BlockInfo info;
                info.rule = label + "." + std::to_string(k);
                info.nodes = bt.nodes;
                info.concept_id = *bt.nodes.begin();
                info.in_ports = bt.in_ports;
                info.out_ports = bt.out_ports;
                info.concept_node = Node{bt.letter, static_cast<int>(bt.in_ports.size()), static_cast<int>(bt.out_ports.size()), false};
                Net lhs = induced_subnet(p.left, bt.nodes, TagPolicy::Severed, true).renamed("");
                RawNet rhs;
                rhs.nodes[info.concept_id] = info.concept_node;
                for (std::size_t x = 0; x < bt.in_ports.size(); ++x)
                    if (auto tg = lhs.tag_at(bt.in_ports[x])) rhs.tags[*tg] = {info.concept_id, Dir::In, static_cast<int>(x)};
                for (std::size_t x = 0; x < bt.out_ports.size(); ++x)
                    if (auto tg = lhs.tag_at(bt.out_ports[x])) rhs.tags[*tg] = {info.concept_id, Dir::Out, static_cast<int>(x)};
                Rule wr;
                wr.name = info.rule;
                wr.preforms.push_back({lhs, validate_net(std::move(rhs))});
                out.rns.rules.push_back(std::move(wr));
                out.blocks.push_back(std::move(info));
            }
        }
    (void)minter;
    int budget = std::max(concept_budget(out.rns, t), concept_budget(r.rns, t));
    try {
        if (normal_forms(r.rns, t, budget) != normal_forms(out.rns, t, budget))
            return NotConvertible{"", "partial block matches make the normal forms diverge"};
    } catch (const RewriteError& e) {
        return NotConvertible{"", e.what()};
    }
    return out;
}

// ------------------------------------------------------------ colouring

ColouringResult colouring_overlaps(const Rns& w, const std::vector<ColouringRule>& colourings, const Net& r, int budget) {
    ColouringResult res;
    std::map<std::string, const Rns*> system;
    for (const auto& c : colourings) system[c.rule] = &c.colouring;

    auto colour = [&](const Rule& rule, const Net& against, Jungle& into) {
        auto sit = system.find(rule.name);
        if (sit == system.end()) return false;
        bool grew = false;
        for (const auto& p : rule.preforms) {
            if (p.left.empty() || against.empty()) continue;
            auto ov = overlaps(p.left, against, std::max(p.left.size(), against.size()));
            if (!ov.shared) continue;
            Net shared = ov.shared->renamed("");
            Jungle nf = normal_forms(*sit->second, Jungle{shared}, concept_budget(*sit->second, Jungle{shared}) + 1);
            for (const auto& [k, n] : nf.by_key()) grew = into.insert(n) || grew;
        }
        return grew;
    };

    for (const auto& rule : w.rules) colour(rule, r, res.coloured[rule.name]);
    for (int round = 0;; ++round) {
        bool grew = false;
        auto snapshot = res.coloured;
        for (const auto& t : w.rules)
            for (const auto& s : w.rules) {
                if (s.name == t.name) continue;
                for (const auto& [k, x] : snapshot[s.name].by_key()) grew = colour(t, x, res.coloured[t.name]) || grew;
            }
        if (!grew) break;
        if (round + 1 >= budget)
            throw AbstractionError(AbstractionErrorKind::NonTerminatingColouring,
                                   "coloured jungles still growing after " + std::to_string(budget) + " rounds");
    }
    for (auto it = res.coloured.begin(); it != res.coloured.end();)
        it = it->second.empty() ? res.coloured.erase(it) : std::next(it);

    for (const auto& [name, j] : res.coloured) {
        const Rule* rule = w.rule(name);
        bool ok = true;
        for (const auto& [k, x] : j.by_key()) {
            bool inside = false;
            for (const auto& p : rule->preforms) inside = inside || is_enclosure(x, p.right);
            ok = ok && inside;
        }
        if (!ok) {
            res.cross_colouring = false;
            res.failing.push_back(name);
        }
    }
    return res;
}

bool is_cross_colouring(const Rns& w, const std::vector<ColouringRule>& colourings, const Net& r, int budget) {
    return colouring_overlaps(w, colourings, r, budget).cross_colouring;
}

}  // namespace netrw
