#include "netrw/rewrite.hpp"

#include <algorithm>
#include <deque>
#include <functional>

namespace netrw {

const char* to_string(RewriteErrorKind k) {
    switch (k) {
        case RewriteErrorKind::ConditionViolated: return "ConditionViolated";
        case RewriteErrorKind::BoundaryMismatch: return "BoundaryMismatch";
        case RewriteErrorKind::BudgetExhausted: return "BudgetExhausted";
        case RewriteErrorKind::DirectionMismatch: return "DirectionMismatch";
        case RewriteErrorKind::NoFreePortOnImage: return "NoFreePortOnImage";
        case RewriteErrorKind::HeightUndefined: return "HeightUndefined";
        case RewriteErrorKind::PlaceholderArityMismatch: return "PlaceholderArityMismatch";
        case RewriteErrorKind::StageBudgetExhausted: return "StageBudgetExhausted";
    }
    return "?";
}

RewriteError::RewriteError(RewriteErrorKind kind, const std::string& what, std::string stage)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind), stage_(std::move(stage)) {}

const char* to_string(Verdict v) {
    switch (v) {
        case Verdict::No: return "no";
        case Verdict::Yes: return "yes";
        case Verdict::Unknown: return "unknown";
    }
    return "?";
}

namespace {

Rns as_rns(const Rule& r) {
    Rns out;
    out.name = r.name;
    out.rules.push_back(r);
    return out;
}

// The single occupied port of a variable node, if any.
std::optional<PortRef> var_tie(const Net& n, const std::string& id) {
    for (const auto& p : n.ports(id))
        if (n.occupied(p)) return p;
    return std::nullopt;
}

// Copies `src` into `dst`; ids are kept when free, otherwise renamed.
std::map<std::string, std::string> insert_copy(RawNet& dst, std::set<std::string>& used, const Net& src,
                                               bool keep_tags, const std::string& prefix = "") {
    std::map<std::string, std::string> ids;
    for (const auto& [id, node] : src.nodes()) {
        std::string nid = fresh_id(prefix + id, used);
        used.insert(nid);
        ids[id] = nid;
        dst.nodes[nid] = node;
    }
    for (const auto& e : src.edges()) dst.edges.insert({ids[e.src], e.out, ids[e.dst], e.in});
    if (keep_tags)
        for (const auto& [name, p] : src.tags())
            if (!dst.tags.count(name)) dst.tags[name] = {ids[p.node], p.dir, p.index};
    return ids;
}

std::set<std::string> node_ids(const RawNet& r) {
    std::set<std::string> s;
    for (const auto& [id, n] : r.nodes) s.insert(id);
    return s;
}

// Key of an image together with its glue port; host tags do not matter.
std::string tied_key(const TiedNet& t) {
    if (t.empty()) return "<empty>";
    RawNet r = t.net.raw();
    r.tags.clear();
    r.name.clear();
    if (t.port) r.tags["__tie"] = *t.port;
    return canonical_key(validate_net(std::move(r)), true);
}

std::set<std::string> image_of(const NodeMap& m) {
    std::set<std::string> s;
    for (const auto& [p, h] : m) s.insert(h);
    return s;
}

// Binds every variable of `pattern` under the ranked embedding `m`.
bool bind_vars(const Net& pattern, const Net& host, const NodeMap& m, std::map<std::string, TiedNet>& binding,
               std::map<std::string, std::set<std::string>>& bound_nodes) {
    std::set<std::string> image = image_of(m);
    std::set<std::string> taken;
    std::map<std::string, std::string> keys;
    for (const auto& [vid, vn] : pattern.nodes()) {
        if (!vn.is_var) continue;
        auto tie = var_tie(pattern, vid);
        TiedNet tn;
        std::set<std::string> comp;
        if (tie) {
            PortRef pq = *pattern.partner(*tie);
            auto mit = m.find(pq.node);
            if (mit == m.end()) return false;
            PortRef hp{mit->second, pq.dir, pq.index};
            auto hq = host.partner(hp);
            if (hq) {
                if (image.count(hq->node)) return false;
                std::deque<std::string> queue{hq->node};
                comp.insert(hq->node);
                while (!queue.empty()) {
                    std::string u = queue.front();
                    queue.pop_front();
                    for (const auto& p : host.ports(u)) {
                        auto q = host.partner(p);
                        if (!q) continue;
                        if (image.count(q->node)) {
                            if (!(p == *hq && *q == hp)) return false;  // outside loop
                            continue;
                        }
                        if (comp.insert(q->node).second) queue.push_back(q->node);
                    }
                }
                for (const auto& c : comp)
                    if (taken.count(c)) return false;
                taken.insert(comp.begin(), comp.end());
                tn.net = induced_subnet(host, comp, TagPolicy::None, true).renamed("");
                tn.port = *hq;
            }
        }
        std::string key = tied_key(tn);
        auto [kit, first] = keys.emplace(vn.letter, key);
        if (!first) {
            if (kit->second != key) return false;
            bound_nodes[vn.letter].insert(comp.begin(), comp.end());
            continue;
        }
        binding[vn.letter] = tn;
        bound_nodes[vn.letter] = comp;
    }
    return true;
}

void enumerate_preform(const Preform& pf, const Net& host, bool anchored, std::size_t host_index,
                       const std::string& rule, std::size_t pi, std::vector<Match>& out) {
    EmbedOptions opts;
    opts.induced = true;
    opts.skip_vars = true;
    opts.untagged_free_must_be_free = true;
    opts.anchored = anchored;
    for_each_embedding(pf.left, host, opts, [&](const NodeMap& m) {
        Match mt;
        if (!bind_vars(pf.left, host, m, mt.binding, mt.bound_nodes)) return true;
        mt.host = host_index;
        mt.rule = rule;
        mt.preform = pi;
        mt.node_map = m;
        mt.redex = image_of(m);
        for (const auto& [name, p] : pf.left.tags()) {
            auto it = m.find(p.node);
            if (it != m.end()) mt.boundary[name] = {it->second, p.dir, p.index};
        }
        out.push_back(std::move(mt));
        return true;
    });
}

bool overlapping(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
        if (b.count(x)) return true;
    return false;
}

}  // namespace

// ---------------------------------------------------------------- substitution

Net apply_substitution(const Binding& binding, const Net& t, const std::vector<std::string>& order) {
    std::vector<std::string> names = order;
    if (names.empty())
        for (const auto& [x, img] : binding) names.push_back(x);
    RawNet r = t.raw();
    std::set<std::string> used = node_ids(r);
    for (const auto& x : names) {
        auto bit = binding.find(x);
        if (bit == binding.end()) continue;
        const TiedNet& img = bit->second;
        bool first_copy = true;
        for (const auto& [vid, vn] : t.nodes()) {
            if (!vn.is_var || vn.letter != x) continue;
            auto tie = var_tie(t, vid);
            std::optional<PortRef> neighbour;
            if (tie) neighbour = t.partner(*tie);
            r.nodes.erase(vid);
            used.erase(vid);
            for (auto it = r.edges.begin(); it != r.edges.end();)
                it = (it->src == vid || it->dst == vid) ? r.edges.erase(it) : std::next(it);
            for (auto it = r.tags.begin(); it != r.tags.end();)
                it = it->second.node == vid ? r.tags.erase(it) : std::next(it);
            if (img.empty()) continue;
            if (tie) {
                if (!img.port || img.net.occupied(*img.port))
                    throw RewriteError(RewriteErrorKind::NoFreePortOnImage, "image of " + x + " has no free glue port");
                if (img.port->dir != tie->dir)
                    throw RewriteError(RewriteErrorKind::DirectionMismatch,
                                       "variable " + x + " is tied by an " + to_string(tie->dir) + " port");
            }
            auto ids = insert_copy(r, used, img.net, first_copy);
            first_copy = false;
            if (tie) {
                PortRef g{ids[img.port->node], img.port->dir, img.port->index};
                for (auto it = r.tags.begin(); it != r.tags.end();)
                    it = it->second == g ? r.tags.erase(it) : std::next(it);
                if (g.dir == Dir::Out)
                    r.edges.insert({g.node, g.index, neighbour->node, neighbour->index});
                else
                    r.edges.insert({neighbour->node, neighbour->index, g.node, g.index});
            }
        }
    }
    return validate_net(std::move(r));
}

InstanceResult is_instance(const Net& t, const Net& s, std::size_t bound) {
    InstanceResult res;
    RawNet pr = s.raw();
    pr.tags.clear();
    Net pattern = validate_net(std::move(pr));
    bool has_ranked = false;
    for (const auto& [id, n] : pattern.nodes()) has_ranked = has_ranked || !n.is_var;
    if (!has_ranked) {
        if (pattern.empty()) {
            res.instance = t.empty();
            return res;
        }
        if (pattern.size() != 1 || t.size() > bound) return res;
        res.instance = true;
        res.binding[pattern.nodes().begin()->second.letter] = TiedNet{t, std::nullopt};
        return res;
    }
    EmbedOptions opts;
    opts.induced = true;
    opts.skip_vars = true;
    opts.untagged_free_must_be_free = true;
    for_each_embedding(pattern, t, opts, [&](const NodeMap& m) {
        std::map<std::string, TiedNet> b;
        std::map<std::string, std::set<std::string>> bn;
        if (!bind_vars(pattern, t, m, b, bn)) return true;
        std::size_t covered = m.size();
        for (const auto& [x, nodes] : bn) {
            if (b[x].net.size() > bound) return true;
            covered += nodes.size();
        }
        if (covered != t.size()) return true;
        if (!nets_equal(apply_substitution(b, pattern), t)) return true;
        res.instance = true;
        res.binding = b;
        return false;
    });
    return res;
}

// ---------------------------------------------------------------- matching

std::vector<Match> find_matches_in(const Rns& r, const Net& host, std::size_t host_index) {
    bool anchored = r.has(ConditionKind::RedexAnchored);
    std::map<std::string, std::vector<Match>> per_rule;
    for (const auto& rule : r.rules)
        for (std::size_t i = 0; i < rule.preforms.size(); ++i)
            enumerate_preform(rule.preforms[i], host, anchored, host_index, rule.name, i, per_rule[rule.name]);

    std::vector<Match> out;
    std::set<std::string> listed;
    if (const Condition* c = r.find(ConditionKind::ApplyOrder)) {
        listed.insert(c->args.begin(), c->args.end());
        for (const auto& name : c->args) {
            auto it = per_rule.find(name);
            if (it != per_rule.end() && !it->second.empty()) {
                out = it->second;
                break;
            }
        }
    }
    for (const auto& rule : r.rules)
        if (!listed.count(rule.name))
            for (const auto& m : per_rule[rule.name]) out.push_back(m);

    if (r.has(ConditionKind::RedexDisjoint)) {
        std::vector<Match> kept;
        for (std::size_t i = 0; i < out.size(); ++i) {
            bool clash = false;
            for (std::size_t j = 0; j < out.size() && !clash; ++j)
                if (i != j && out[i].redex != out[j].redex && overlapping(out[i].redex, out[j].redex)) clash = true;
            if (!clash) kept.push_back(out[i]);
        }
        out = std::move(kept);
    }
    return out;
}

std::vector<Match> find_matches(const Rns& r, const Jungle& host) {
    std::vector<Match> out;
    auto nets = host.nets();
    for (std::size_t i = 0; i < nets.size(); ++i) {
        auto ms = find_matches_in(r, nets[i], i);
        out.insert(out.end(), ms.begin(), ms.end());
    }
    return out;
}

std::vector<Match> find_matches(const Rule& r, const Jungle& host) { return find_matches(as_rns(r), host); }

Net replace(const Net& host, const Preform& p, const Match& m, ReplaceTrace* trace) {
    std::set<std::string> removed = m.redex;
    for (const auto& [x, nodes] : m.bound_nodes) removed.insert(nodes.begin(), nodes.end());

    for (const auto& [name, port] : p.right.tags())
        if (!p.left.tags().count(name))
            throw RewriteError(RewriteErrorKind::BoundaryMismatch, "right side tag " + name + " is absent from the match");

    RawNet r;
    r.name = host.name();
    for (const auto& [id, n] : host.nodes())
        if (!removed.count(id)) r.nodes[id] = n;
    for (const auto& e : host.edges())
        if (!removed.count(e.src) && !removed.count(e.dst)) r.edges.insert(e);
    for (const auto& [name, port] : host.tags())
        if (!removed.count(port.node)) r.tags[name] = port;
    std::set<std::string> used = node_ids(r);

    std::map<std::string, std::string> ids;
    for (const auto& [rid, node] : p.right.nodes()) {
        if (node.is_var) continue;
        std::string base = rid;
        if (p.left.has_node(rid) && !p.left.node(rid).is_var) base = m.node_map.at(rid);
        std::string nid = fresh_id(base, used);
        used.insert(nid);
        ids[rid] = nid;
        r.nodes[nid] = node;
    }
    for (const auto& e : p.right.edges())
        if (ids.count(e.src) && ids.count(e.dst)) r.edges.insert({ids[e.src], e.out, ids[e.dst], e.in});

    // variable copies, lexicographic by name
    std::vector<std::pair<std::string, std::string>> vars;
    for (const auto& [rid, node] : p.right.nodes())
        if (node.is_var) vars.push_back({node.letter, rid});
    std::sort(vars.begin(), vars.end());
    std::set<std::string> copied;
    for (const auto& [x, vid] : vars) {
        auto bit = m.binding.find(x);
        if (bit == m.binding.end() || bit->second.empty()) continue;
        const TiedNet& img = bit->second;
        auto tie = var_tie(p.right, vid);
        bool first = copied.insert(x).second;
        auto cids = insert_copy(r, used, img.net, first);
        if (!tie) continue;
        PortRef rp = *p.right.partner(*tie);
        if (!img.port || img.port->dir != tie->dir)
            throw RewriteError(RewriteErrorKind::DirectionMismatch, "variable " + x + " changes tie direction");
        PortRef g{cids[img.port->node], img.port->dir, img.port->index};
        for (auto it = r.tags.begin(); it != r.tags.end();)
            it = it->second == g ? r.tags.erase(it) : std::next(it);
        PortRef np{ids[rp.node], rp.dir, rp.index};
        if (g.dir == Dir::Out)
            r.edges.insert({g.node, g.index, np.node, np.index});
        else
            r.edges.insert({np.node, np.index, g.node, g.index});
    }

    for (const auto& [name, hp] : m.boundary) {
        auto rt = p.right.tags().find(name);
        if (rt == p.right.tags().end() || !ids.count(rt->second.node)) continue;
        PortRef np{ids[rt->second.node], rt->second.dir, rt->second.index};
        if (auto ctx = host.partner(hp)) {
            if (np.dir == Dir::In)
                r.edges.insert({ctx->node, ctx->index, np.node, np.index});
            else
                r.edges.insert({np.node, np.index, ctx->node, ctx->index});
        } else if (auto ht = host.tag_at(hp)) {
            r.tags[*ht] = np;
        }
        if (trace) trace->boundary_ports[hp] = np;
    }
    if (trace) {
        trace->right_ids = ids;
        trace->removed = removed;
    }
    return validate_net(std::move(r));
}

void check_conditions(const Rns& r, const Net& host) {
    if (r.has(ConditionKind::FreshLetters))
        for (const auto& rule : r.rules)
            for (const auto& p : rule.preforms) {
                auto ll = p.left.letters();
                for (const auto& l : p.right.letters())
                    if (ll.count(l))
                        throw RewriteError(RewriteErrorKind::ConditionViolated,
                                           "fresh-letters: rule " + rule.name + " keeps letter " + l);
            }
    if (const Condition* c = r.find(ConditionKind::LettersOutside)) {
        auto hl = host.letters();
        for (const auto& l : c->args)
            if (hl.count(l))
                throw RewriteError(RewriteErrorKind::ConditionViolated, "letters-outside: host contains " + l);
    }
}

// ---------------------------------------------------------------- application

namespace {

const Preform& preform_of(const Rns& r, const Match& m) { return r.rule(m.rule)->preforms.at(m.preform); }

}  // namespace

ApplyReport apply_report(const std::vector<Rns>& rs, const Jungle& host) {
    ApplyReport rep;
    auto nets = host.nets();
    for (std::size_t i = 0; i < nets.size(); ++i) {
        bool any = false;
        for (const auto& r : rs) {
            check_conditions(r, nets[i]);
            for (auto& m : find_matches_in(r, nets[i], i)) {
                rep.result.insert(replace(nets[i], preform_of(r, m), m));
                rep.matches.push_back(std::move(m));
                any = true;
            }
        }
        if (!any) rep.result.insert(nets[i]);
    }
    return rep;
}

Jungle apply(const std::vector<Rns>& rs, const Jungle& host) { return apply_report(rs, host).result; }
Jungle apply(const Rns& r, const Jungle& host) { return netrw::apply(std::vector<Rns>{r}, host); }
Jungle apply(const Rule& r, const Jungle& host) { return netrw::apply(as_rns(r), host); }

Jungle successors(const std::vector<Rns>& rs, const Net& n) {
    Jungle out;
    for (const auto& r : rs) {
        check_conditions(r, n);
        for (const auto& m : find_matches_in(r, n)) out.insert(replace(n, preform_of(r, m), m));
    }
    return out;
}

bool is_irreducible(const std::vector<Rns>& rs, const Net& n) {
    for (const auto& r : rs)
        if (!find_matches_in(r, n).empty()) return false;
    return true;
}

bool is_irreducible(const Rns& r, const Net& n) { return is_irreducible(std::vector<Rns>{r}, n); }

DeriveResult derive(const std::vector<Rns>& rs, const Jungle& start, int max_steps) {
    DeriveResult res;
    std::map<std::string, Net> seen;
    std::map<std::string, std::set<std::string>> adj;
    std::vector<std::string> frontier;
    for (const auto& [k, n] : start.by_key()) {
        seen.emplace(k, n);
        res.step[k] = 0;
        frontier.push_back(k);
    }
    auto expand = [&](const std::string& k) {
        std::vector<std::pair<std::string, Net>> out;
        Jungle succ = successors(rs, seen.at(k));
        for (const auto& [sk, sn] : succ.by_key()) {
            adj[k].insert(sk);
            out.push_back({sk, sn});
        }
        return out;
    };
    for (int step = 1; step <= max_steps && !frontier.empty(); ++step) {
        std::vector<std::string> next;
        for (const auto& k : frontier)
            for (auto& [sk, sn] : expand(k))
                if (seen.emplace(sk, sn).second) {
                    res.step[sk] = step;
                    next.push_back(sk);
                }
        frontier = std::move(next);
    }
    if (max_steps >= 0)
        for (const auto& k : frontier)
            for (auto& [sk, sn] : expand(k))
                if (!seen.count(sk)) res.budget_exhausted = true;

    std::map<std::string, int> colour;
    std::function<void(const std::string&)> dfs = [&](const std::string& u) {
        colour[u] = 1;
        for (const auto& v : adj[u]) {
            if (colour[v] == 1) res.cycle = true;
            else if (colour[v] == 0 && seen.count(v)) dfs(v);
        }
        colour[u] = 2;
    };
    for (const auto& [k, n] : seen)
        if (colour[k] == 0) dfs(k);

    for (const auto& [k, n] : seen) res.reachable.insert(n);
    return res;
}

Jungle normal_forms(const std::vector<Rns>& rs, const Jungle& start, int budget, std::size_t max_states) {
    Jungle result;
    std::set<std::string> seen;
    std::vector<Net> level;
    for (const auto& [k, n] : start.by_key()) {
        seen.insert(k);
        level.push_back(n);
    }
    bool exhausted = false;
    for (int depth = 0; !level.empty(); ++depth) {
        std::vector<Net> next;
        for (const auto& n : level) {
            Jungle succ = successors(rs, n);
            if (succ.empty()) {
                result.insert(n);
                continue;
            }
            for (const auto& [k, s] : succ.by_key()) {
                if (seen.count(k)) continue;
                if (depth >= budget) {
                    exhausted = true;
                    continue;
                }
                seen.insert(k);
                next.push_back(s);
                if (seen.size() > max_states)
                    throw RewriteError(RewriteErrorKind::BudgetExhausted,
                                       "normal form search exceeded " + std::to_string(max_states) + " states");
            }
        }
        level = std::move(next);
    }
    if (exhausted)
        throw RewriteError(RewriteErrorKind::BudgetExhausted,
                           "reducible nets remain after " + std::to_string(budget) + " steps");
    return result;
}

Jungle normal_forms(const Rns& r, const Jungle& start, int budget, std::size_t max_states) {
    return normal_forms(std::vector<Rns>{r}, start, budget, max_states);
}

// ---------------------------------------------------------------- typology

namespace {

std::map<std::string, int> var_counts(const Net& n) {
    std::map<std::string, int> c;
    for (const auto& [id, node] : n.nodes())
        if (node.is_var) ++c[node.letter];
    return c;
}

std::set<std::string> key_set(const std::map<std::string, int>& m) {
    std::set<std::string> s;
    for (const auto& [k, v] : m) s.insert(k);
    return s;
}

std::set<std::string> tag_names(const Net& n) {
    std::set<std::string> s;
    for (const auto& [name, p] : n.tags())
        if (!n.node(p.node).is_var) s.insert(name);
    return s;
}

// Untagged unoccupied ports of ranked nodes, split by direction.
std::pair<int, int> anonymous_ports(const Net& n) {
    std::pair<int, int> c{0, 0};
    for (const auto& p : n.unoccupied_ports()) {
        if (n.node(p.node).is_var || n.tag_at(p)) continue;
        (p.dir == Dir::In ? c.first : c.second)++;
    }
    return c;
}

std::multiset<std::string> ranked_letters(const Net& n) {
    std::multiset<std::string> s;
    for (const auto& [id, node] : n.nodes())
        if (!node.is_var) s.insert(node.letter);
    return s;
}

template <class S>
bool proper_subset(const S& a, const S& b) {
    return a.size() < b.size() && std::includes(b.begin(), b.end(), a.begin(), a.end());
}

template <class S>
bool subset(const S& a, const S& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

int height_of(const Net& n) {
    auto s = structure(n);
    if (!s.height) throw RewriteError(RewriteErrorKind::HeightUndefined, "rule side contains a directed loop");
    return *s.height;
}

// Searches non-erasing linear homomorphisms: every left node maps onto a
// connected block of the right side, placeholders correspond one to one.
Verdict monadic_search(const Net& left, const Net& right, std::size_t bound) {
    if (nets_equal_tagged(left, right)) return Verdict::Yes;
    if (var_counts(left) != var_counts(right)) return Verdict::Unknown;
    std::vector<std::string> lnodes, rnodes;
    for (const auto& [id, n] : left.nodes())
        if (!n.is_var) lnodes.push_back(id);
    for (const auto& [id, n] : right.nodes())
        if (!n.is_var) rnodes.push_back(id);
    if (rnodes.size() > bound) return Verdict::Unknown;
    if (lnodes.empty() || rnodes.size() < lnodes.size()) return Verdict::No;

    std::size_t k = lnodes.size();
    std::vector<std::size_t> assign(rnodes.size(), 0);
    bool found = false;
    // strip variables: they map to themselves and are compared through their ties
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (found) return;
        if (i == rnodes.size()) {
            std::vector<std::set<std::string>> blocks(k);
            for (std::size_t j = 0; j < rnodes.size(); ++j) blocks[assign[j]].insert(rnodes[j]);
            for (const auto& b : blocks)
                if (b.empty() || !is_connected_set(right, b)) return;
            std::map<std::string, std::size_t> block_of;
            for (std::size_t j = 0; j < rnodes.size(); ++j) block_of[rnodes[j]] = assign[j];
            // every left port must map to exactly one right port of its block
            std::map<PortRef, PortRef> port_image;
            std::set<PortRef> used_right;
            // crossing right edges between blocks (and to variables) pair with left edges
            std::vector<Edge> crossing;
            for (const auto& e : right.edges()) {
                bool sv = right.node(e.src).is_var, dv = right.node(e.dst).is_var;
                if (sv || dv || block_of[e.src] != block_of[e.dst]) crossing.push_back(e);
            }
            std::vector<Edge> ledges(left.edges().begin(), left.edges().end());
            if (crossing.size() != ledges.size()) return;
            std::vector<bool> taken(crossing.size(), false);
            std::map<std::string, std::size_t> lidx;
            for (std::size_t j = 0; j < k; ++j) lidx[lnodes[j]] = j;
            auto endpoint_ok = [&](const std::string& lnode, const std::string& rnode) {
                bool lv = left.node(lnode).is_var, rv = right.node(rnode).is_var;
                if (lv || rv) return lv && rv && left.node(lnode).letter == right.node(rnode).letter;
                return block_of[rnode] == lidx[lnode];
            };
            std::function<bool(std::size_t)> pair_edges = [&](std::size_t ei) -> bool {
                if (ei == ledges.size()) {
                    // free ports: tags must agree
                    std::map<PortRef, PortRef> img = port_image;
                    for (const auto& [name, lp] : left.tags()) {
                        auto rt = right.tags().find(name);
                        if (rt == right.tags().end()) return false;
                        if (left.node(lp.node).is_var) continue;
                        if (block_of[rt->second.node] != lidx[lp.node] || rt->second.dir != lp.dir) return false;
                        img[lp] = rt->second;
                    }
                    if (left.tags().size() != right.tags().size()) return false;
                    // build the table and check by application
                    HomTable h;
                    for (std::size_t j = 0; j < k; ++j) {
                        const Node& ln = left.node(lnodes[j]);
                        RawNet raw = induced_subnet(right, blocks[j], TagPolicy::None, false).raw();
                        raw.name.clear();
                        for (const auto& lp : left.ports(lnodes[j])) {
                            auto it = img.find(lp);
                            if (it == img.end()) continue;
                            raw.tags[std::string(lp.dir == Dir::In ? "i" : "o") + std::to_string(lp.index)] = it->second;
                        }
                        Net image;
                        try {
                            image = validate_net(std::move(raw));
                        } catch (const NetError&) {
                            return false;
                        }
                        auto [hit, fresh] = h.letters.emplace(ln.letter, HomImage{ln.in_rank, ln.out_rank, image});
                        if (!fresh && canonical_key(hit->second.image, true) != canonical_key(image, true))
                            return false;
                    }
                    try {
                        return nets_equal(apply_net_homomorphism(h, left), right);
                    } catch (const std::exception&) {
                        return false;
                    }
                }
                const Edge& le = ledges[ei];
                for (std::size_t c = 0; c < crossing.size(); ++c) {
                    if (taken[c]) continue;
                    const Edge& re = crossing[c];
                    if (!endpoint_ok(le.src, re.src) || !endpoint_ok(le.dst, re.dst)) continue;
                    taken[c] = true;
                    port_image[le.src_port()] = re.src_port();
                    port_image[le.dst_port()] = re.dst_port();
                    if (pair_edges(ei + 1)) return true;
                    port_image.erase(le.src_port());
                    port_image.erase(le.dst_port());
                    taken[c] = false;
                }
                return false;
            };
            found = pair_edges(0);
            return;
        }
        for (std::size_t b = 0; b < k; ++b) {
            assign[i] = b;
            go(i + 1);
            if (found) return;
        }
    };
    go(0);
    return found ? Verdict::Yes : Verdict::No;
}

}  // namespace

Classification classify_rule(const Rule& r, const ClassifyOptions& opts) {
    Classification out;
    auto& L = out.labels;
    bool all_m_inc = true, all_m_del = true, all_m_save = true, any_m_change = false, all_m_might = true;
    bool all_a_inc = true, all_a_del = true, all_a_save = true, all_a_might = true;
    bool all_l_inc = true, all_l_del = true, all_l_save = true, any_l_might_inc = false, all_l_count = true;
    bool all_x_inc = true, all_x_dec = true, all_x_save = true;
    bool left_linear = true, right_linear = true, identity = true;
    bool h_dim = true, h_inc = true, h_save = true;
    Verdict monadic = Verdict::Yes;

    for (const auto& p : r.preforms) {
        auto cl = var_counts(p.left), cr = var_counts(p.right);
        auto fl = key_set(cl), fr = key_set(cr);
        all_m_inc = all_m_inc && proper_subset(fl, fr);
        all_m_del = all_m_del && proper_subset(fr, fl);
        all_m_save = all_m_save && fl == fr;
        any_m_change = any_m_change || (!subset(fl, fr) && !subset(fr, fl));
        all_m_might = all_m_might && cl == cr;

        auto ul = tag_names(p.left), ur = tag_names(p.right);
        all_a_inc = all_a_inc && proper_subset(ul, ur);
        all_a_del = all_a_del && proper_subset(ur, ul);
        all_a_save = all_a_save && ul == ur;
        all_a_might = all_a_might && ul == ur && anonymous_ports(p.left) == anonymous_ports(p.right);

        auto ml = ranked_letters(p.left), mr = ranked_letters(p.right);
        std::set<std::string> ll(ml.begin(), ml.end()), lr(mr.begin(), mr.end());
        all_l_inc = all_l_inc && proper_subset(ll, lr);
        all_l_del = all_l_del && proper_subset(lr, ll);
        all_l_save = all_l_save && ll == lr;
        std::size_t nl = p.left.size(), nr = p.right.size();
        any_l_might_inc = any_l_might_inc || nl < nr;
        all_l_count = all_l_count && nl == nr;

        std::set<std::string> xs = fl;
        xs.insert(fr.begin(), fr.end());
        bool inc = !xs.empty(), dec = !xs.empty(), save = true;
        for (const auto& x : xs) {
            int a = cl.count(x) ? cl[x] : 0, b = cr.count(x) ? cr[x] : 0;
            inc = inc && a < b;
            dec = dec && a > b;
            save = save && a == b;
        }
        all_x_inc = all_x_inc && inc;
        all_x_dec = all_x_dec && dec;
        all_x_save = all_x_save && save;

        for (const auto& [x, c] : cl) left_linear = left_linear && c == 1;
        for (const auto& [x, c] : cr) right_linear = right_linear && c == 1;
        identity = identity && nets_equal_tagged(p.left, p.right);

        if (opts.heights) {
            int hl = height_of(p.left), hr = height_of(p.right);
            h_dim = h_dim && hl > hr;
            h_inc = h_inc && hl < hr;
            h_save = h_save && hl == hr;
        }
        if (opts.monadic && monadic != Verdict::No) {
            Verdict v = monadic_search(p.left, p.right, opts.monadic_bound);
            if (v == Verdict::No) monadic = Verdict::No;
            else if (v == Verdict::Unknown) monadic = Verdict::Unknown;
        }
    }
    auto put = [&](bool cond, const char* label) {
        if (cond) L.insert(label);
    };
    put(all_m_inc, "manoeuvre increasing");
    put(all_m_del, "manoeuvre deleting");
    put(all_m_save, "manoeuvre saving");
    put(any_m_change, "manoeuvre changing");
    put(all_m_might, "manoeuvre mightiness saving");
    put(all_a_inc, "arity increasing");
    put(all_a_del, "arity deleting");
    put(all_a_save, "arity saving");
    put(all_a_might, "arity mightiness saving");
    put(all_l_inc, "letter increasing");
    put(all_l_del, "letter deleting");
    put(all_l_save, "letter saving");
    put(any_l_might_inc, "letter mightiness increasing");
    put(all_l_count, "letter-count preserving");
    put(all_m_inc, "X-manoeuvre letter increasing");
    put(all_m_del, "X-manoeuvre letter decreasing");
    put(all_m_save, "X-manoeuvre letter saving");
    put(all_x_inc, "X-manoeuvre mightiness increasing");
    put(all_x_dec, "X-manoeuvre mightiness decreasing");
    put(all_x_save, "X-manoeuvre mightiness saving");
    put(left_linear, "left linear");
    put(right_linear, "right linear");
    put(left_linear && right_linear, "totally linear");
    put(identity, "identity");
    put(r.simultaneous(), "simultaneous");
    put(!r.simultaneous(), "single");
    if (opts.heights) {
        put(h_dim, "height diminishing");
        put(h_inc, "height increasing");
        put(h_save, "height saving");
    }
    if (opts.monadic) {
        out.monadic = monadic;
        put(monadic == Verdict::Yes, "monadic");
    }
    return out;
}

bool has_label(const Rule& r, const std::string& label) {
    ClassifyOptions o;
    o.heights = false;
    o.monadic = false;
    return classify_rule(r, o).labels.count(label) != 0;
}

Rule invert_rule(const Rule& r) {
    Rule out;
    out.name = r.name;
    for (const auto& p : r.preforms) out.preforms.push_back({p.right, p.left});
    return out;
}

Rns invert_rns(const Rns& r) {
    Rns out = r;
    for (auto& rule : out.rules) rule = invert_rule(rule);
    return out;
}

Net jungle_as_net(const Jungle& j, const std::string& name) {
    auto nets = j.nets();
    if (nets.size() == 1) return nets.front().renamed(name);
    RawNet r;
    r.name = name;
    for (std::size_t i = 0; i < nets.size(); ++i) {
        std::string pre = "g" + std::to_string(i) + "_";
        for (const auto& [id, n] : nets[i].nodes()) r.nodes[pre + id] = n;
        for (const auto& e : nets[i].edges()) r.edges.insert({pre + e.src, e.out, pre + e.dst, e.in});
        for (const auto& [t, p] : nets[i].tags()) r.tags[pre + t] = {pre + p.node, p.dir, p.index};
    }
    return validate_net(std::move(r));
}

Rns rns_of_relation(const std::vector<RelationPair>& pairs, const std::string& name) {
    Rns out;
    out.name = name;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        Rule rule;
        rule.name = "rel" + std::to_string(i);
        rule.preforms.push_back({pairs[i].source, jungle_as_net(pairs[i].targets)});
        out.rules.push_back(rule);
    }
    return out;
}

bool same_preforms(const Rns& a, const Rns& b) {
    auto keys = [](const Rns& r) {
        std::multiset<std::pair<std::string, std::string>> s;
        for (const auto& rule : r.rules)
            for (const auto& p : rule.preforms) s.insert({canonical_key(p.left, true), canonical_key(p.right, true)});
        return s;
    };
    return keys(a) == keys(b);
}

// ---------------------------------------------------------------- homomorphisms

namespace {

struct Placeholder {
    Dir dir;
    int index;
};

std::optional<Placeholder> parse_placeholder(const std::string& tag) {
    if (tag.size() < 2 || (tag[0] != 'i' && tag[0] != 'o')) return std::nullopt;
    std::size_t dot = tag.find('.');
    std::string num = tag.substr(1, dot == std::string::npos ? std::string::npos : dot - 1);
    if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) return std::nullopt;
    if (dot != std::string::npos) {
        std::string copy = tag.substr(dot + 1);
        if (copy.empty() || !std::all_of(copy.begin(), copy.end(), ::isdigit)) return std::nullopt;
    }
    return Placeholder{tag[0] == 'i' ? Dir::In : Dir::Out, std::stoi(num)};
}

std::map<std::pair<Dir, int>, int> family_sizes(const HomImage& img) {
    std::map<std::pair<Dir, int>, int> sizes;
    for (int k = 0; k < img.in_rank; ++k) sizes[{Dir::In, k}] = 0;
    for (int k = 0; k < img.out_rank; ++k) sizes[{Dir::Out, k}] = 0;
    for (const auto& [tag, p] : img.image.tags())
        if (auto ph = parse_placeholder(tag)) ++sizes[{ph->dir, ph->index}];
    return sizes;
}

}  // namespace

Net apply_net_homomorphism(const HomTable& h, const Net& t) {
    RawNet r;
    r.name = t.name();
    std::set<std::string> used;
    std::map<PortRef, std::vector<PortRef>> family;
    for (const auto& [id, node] : t.nodes()) {
        auto it = h.letters.find(node.letter);
        if (it == h.letters.end()) {
            std::string nid = fresh_id(id, used);
            used.insert(nid);
            r.nodes[nid] = node;
            for (const auto& p : t.ports(id)) family[p] = {{nid, p.dir, p.index}};
            continue;
        }
        const HomImage& img = it->second;
        if (img.in_rank != node.in_rank || img.out_rank != node.out_rank)
            throw RewriteError(RewriteErrorKind::PlaceholderArityMismatch,
                               "image of " + node.letter + " declared for a different rank");
        std::map<std::string, std::string> ids;
        for (const auto& [iid, inode] : img.image.nodes()) {
            std::string nid = fresh_id(img.image.size() == 1 ? id : id + "." + iid, used);
            used.insert(nid);
            ids[iid] = nid;
            r.nodes[nid] = inode;
        }
        for (const auto& e : img.image.edges()) r.edges.insert({ids[e.src], e.out, ids[e.dst], e.in});
        for (const auto& [tag, p] : img.image.tags()) {
            auto ph = parse_placeholder(tag);
            if (!ph) continue;
            if (ph->index >= node.rank(ph->dir))
                throw RewriteError(RewriteErrorKind::PlaceholderArityMismatch, "placeholder " + tag + " out of range");
            if (p.dir != ph->dir)
                throw RewriteError(RewriteErrorKind::PlaceholderArityMismatch, "placeholder " + tag + " on wrong direction");
            family[{id, ph->dir, ph->index}].push_back({ids[p.node], p.dir, p.index});
        }
    }
    for (const auto& e : t.edges()) {
        const auto& a = family[e.src_port()];
        const auto& b = family[e.dst_port()];
        if (h.preserving && (a.size() != b.size() || a.empty()))
            throw RewriteError(RewriteErrorKind::PlaceholderArityMismatch,
                               "edge " + to_string(e.src_port()) + " -- " + to_string(e.dst_port()) + " loses a placeholder");
        for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i)
            r.edges.insert({a[i].node, a[i].index, b[i].node, b[i].index});
    }
    for (const auto& [tag, p] : t.tags()) {
        const auto& f = family[p];
        if (!f.empty()) r.tags[tag] = f.front();
    }
    return validate_net(std::move(r));
}

std::set<std::string> classify_homomorphism(const HomTable& h) {
    bool down_linear = true, up_linear = true, down_pres = true, up_pres = true, down_del = false, up_del = false;
    bool alphabetic = true;
    for (const auto& [letter, img] : h.letters) {
        for (const auto& [key, n] : family_sizes(img)) {
            bool down = key.first == Dir::In;
            (down ? down_linear : up_linear) &= n <= 1;
            (down ? down_pres : up_pres) &= n >= 1;
            (down ? down_del : up_del) |= n == 0;
        }
        alphabetic = alphabetic && img.image.size() == 1;
    }
    std::set<std::string> out;
    if (down_linear) out.insert("down linear");
    if (up_linear) out.insert("up linear");
    if (down_pres) out.insert("down preserving");
    if (up_pres) out.insert("up preserving");
    if (down_del) out.insert("down deleting");
    if (up_del) out.insert("up deleting");
    if (alphabetic) out.insert("down alphabetic");
    return out;
}

// ---------------------------------------------------------------- transducers

Jungle apply_transducer(const Transducer& td, const Jungle& start) {
    Jungle cur = start;
    for (std::size_t i = 0; i < td.stages.size(); ++i) {
        const Stage& s = td.stages[i];
        std::string sid = s.id.empty() ? "stage" + std::to_string(i) : s.id;
        if (s.normal_form) {
            try {
                cur = normal_forms(s.rnss, cur, s.budget);
            } catch (const RewriteError& e) {
                if (e.kind() != RewriteErrorKind::BudgetExhausted) throw;
                throw RewriteError(RewriteErrorKind::StageBudgetExhausted, sid + ": " + e.what(), sid);
            }
        } else {
            for (int k = 0; k < s.budget; ++k) cur = netrw::apply(s.rnss, cur);
        }
    }
    return cur;
}

Transducer normal_form_td(const Transducer& td) {
    Transducer out = td;
    for (auto& s : out.stages) s.normal_form = true;
    return out;
}

Transducer single_stage(const Rns& r, int budget, const std::string& name) {
    Transducer td;
    td.name = name.empty() ? r.name : name;
    td.stages.push_back({"s0", {r}, budget, false});
    return td;
}

}  // namespace netrw
