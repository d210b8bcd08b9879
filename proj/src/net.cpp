#include "netrw/net.hpp"

#include <algorithm>
#include <deque>
#include <numeric>

namespace netrw {

std::string to_string(const PortRef& p) {
    return p.node + ":" + to_string(p.dir) + ":" + std::to_string(p.index);
}

const char* to_string(NetErrorKind k) {
    switch (k) {
        case NetErrorKind::UnknownLetter: return "UnknownLetter";
        case NetErrorKind::PortIndexOutOfRange: return "PortIndexOutOfRange";
        case NetErrorKind::PortDoubleOccupied: return "PortDoubleOccupied";
        case NetErrorKind::DuplicateTag: return "DuplicateTag";
        case NetErrorKind::TagOnOccupiedPort: return "TagOnOccupiedPort";
        case NetErrorKind::RankConflict: return "RankConflict";
        case NetErrorKind::UnknownNode: return "UnknownNode";
        case NetErrorKind::Disconnected: return "Disconnected";
        case NetErrorKind::BoundTooSmall: return "BoundTooSmall";
        case NetErrorKind::SearchExhausted: return "SearchExhausted";
    }
    return "?";
}

NetError::NetError(NetErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

bool Alphabet::is_ground(const std::string& letter) const {
    auto it = ranked.find(letter);
    return it != ranked.end() && it->second == std::make_pair(0, 1);
}

bool Alphabet::knows(const Node& n) const {
    if (n.is_var) return frontier.count(n.letter) != 0;
    auto it = ranked.find(n.letter);
    return it != ranked.end() && it->second == std::make_pair(n.in_rank, n.out_rank);
}

// ---------------------------------------------------------------- Net

const Node& Net::node(const std::string& id) const {
    auto it = raw_.nodes.find(id);
    if (it == raw_.nodes.end()) throw NetError(NetErrorKind::UnknownNode, id);
    return it->second;
}

std::optional<PortRef> Net::partner(const PortRef& p) const {
    auto it = occupancy_.find(p);
    if (it == occupancy_.end()) return std::nullopt;
    return it->second;
}

std::vector<PortRef> Net::ports(const std::string& id) const {
    const Node& n = node(id);
    std::vector<PortRef> out;
    for (int i = 0; i < n.in_rank; ++i) out.push_back({id, Dir::In, i});
    for (int i = 0; i < n.out_rank; ++i) out.push_back({id, Dir::Out, i});
    return out;
}

std::vector<PortRef> Net::unoccupied_ports() const {
    std::vector<PortRef> out;
    for (const auto& [id, n] : raw_.nodes)
        for (const auto& p : ports(id))
            if (!occupied(p)) out.push_back(p);
    return out;
}

std::optional<std::string> Net::tag_at(const PortRef& p) const {
    for (const auto& [name, q] : raw_.tags)
        if (q == p) return name;
    return std::nullopt;
}

std::set<std::string> Net::letters() const {
    std::set<std::string> out;
    for (const auto& [id, n] : raw_.nodes)
        if (!n.is_var) out.insert(n.letter);
    return out;
}

std::set<std::string> Net::var_names() const {
    std::set<std::string> out;
    for (const auto& [id, n] : raw_.nodes)
        if (n.is_var) out.insert(n.letter);
    return out;
}

Net Net::renamed(const std::string& new_name) const {
    Net copy = *this;
    copy.raw_.name = new_name;
    return copy;
}

Net validate_net(RawNet raw, const ValidateOptions& opts) {
    Net net;
    std::map<std::string, std::pair<int, int>> seen_ranks;
    for (auto& [id, n] : raw.nodes) {
        if (n.is_var) {
            n.in_rank = 1;
            n.out_rank = 1;
        }
        if (n.in_rank < 0 || n.out_rank < 0)
            throw NetError(NetErrorKind::PortIndexOutOfRange, "negative rank on node " + id);
        if (opts.alphabet && !opts.alphabet->knows(n))
            throw NetError(NetErrorKind::UnknownLetter, n.letter + " on node " + id);
        if (!n.is_var) {
            auto [it, fresh] = seen_ranks.emplace(n.letter, std::make_pair(n.in_rank, n.out_rank));
            if (!fresh && it->second != std::make_pair(n.in_rank, n.out_rank))
                throw NetError(NetErrorKind::RankConflict, "letter " + n.letter + " used with two ranks");
        }
    }
    auto check_port = [&](const PortRef& p) {
        auto it = raw.nodes.find(p.node);
        if (it == raw.nodes.end()) throw NetError(NetErrorKind::UnknownNode, to_string(p));
        if (p.index < 0 || p.index >= it->second.rank(p.dir))
            throw NetError(NetErrorKind::PortIndexOutOfRange, to_string(p));
    };
    for (const auto& e : raw.edges) {
        PortRef s = e.src_port(), d = e.dst_port();
        check_port(s);
        check_port(d);
        if (!net.occupancy_.emplace(s, d).second)
            throw NetError(NetErrorKind::PortDoubleOccupied, to_string(s));
        if (!net.occupancy_.emplace(d, s).second)
            throw NetError(NetErrorKind::PortDoubleOccupied, to_string(d));
    }
    std::set<PortRef> tagged;
    for (const auto& [name, p] : raw.tags) {
        check_port(p);
        if (net.occupancy_.count(p)) throw NetError(NetErrorKind::TagOnOccupiedPort, name + " at " + to_string(p));
        if (!tagged.insert(p).second) throw NetError(NetErrorKind::DuplicateTag, "second tag on " + to_string(p));
    }
    net.raw_ = std::move(raw);
    if (opts.require_connected && component_count(net) > 1)
        throw NetError(NetErrorKind::Disconnected, net.raw_.name);
    return net;
}

// ---------------------------------------------------------------- Jungle

Jungle::Jungle(std::initializer_list<Net> nets) {
    for (const auto& n : nets) insert(n);
}

Jungle::Jungle(const std::vector<Net>& nets) {
    for (const auto& n : nets) insert(n);
}

bool Jungle::insert(const Net& n) { return nets_.emplace(canonical_key(n), n).second; }

bool Jungle::contains(const Net& n) const { return nets_.count(canonical_key(n)) != 0; }

void Jungle::merge(const Jungle& other) {
    for (const auto& [k, n] : other.nets_) nets_.emplace(k, n);
}

std::vector<Net> Jungle::nets() const {
    std::vector<Net> out;
    out.reserve(nets_.size());
    for (const auto& [k, n] : nets_) out.push_back(n);
    return out;
}

std::vector<std::string> Jungle::keys() const {
    std::vector<std::string> out;
    for (const auto& [k, n] : nets_) out.push_back(k);
    return out;
}

bool Jungle::operator==(const Jungle& o) const {
    if (nets_.size() != o.nets_.size()) return false;
    return std::equal(nets_.begin(), nets_.end(), o.nets_.begin(),
                      [](const auto& a, const auto& b) { return a.first == b.first; });
}

bool Jungle::includes(const Jungle& o) const {
    for (const auto& [k, n] : o.nets_)
        if (!nets_.count(k)) return false;
    return true;
}

// ---------------------------------------------------------------- equality

namespace {

std::string enc_str(const std::string& s) { return std::to_string(s.size()) + ":" + s; }

std::vector<std::set<std::string>> components_impl(const Net& t) {
    std::map<std::string, std::string> parent;
    for (const auto& [id, n] : t.nodes()) parent[id] = id;
    std::function<std::string(const std::string&)> find = [&](const std::string& x) {
        std::string r = x;
        while (parent[r] != r) r = parent[r];
        std::string y = x;
        while (parent[y] != r) {
            std::string nx = parent[y];
            parent[y] = r;
            y = nx;
        }
        return r;
    };
    for (const auto& e : t.edges()) {
        auto a = find(e.src), b = find(e.dst);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
    std::map<std::string, std::set<std::string>> groups;
    for (const auto& [id, n] : t.nodes()) groups[find(id)].insert(id);
    std::vector<std::set<std::string>> out;
    for (auto& [r, g] : groups) out.push_back(std::move(g));
    return out;
}

std::string component_key(const Net& t, const std::set<std::string>& comp, bool with_tags) {
    std::map<PortRef, std::string> tag_of;
    if (with_tags)
        for (const auto& [name, p] : t.tags()) tag_of[p] = name;
    std::string best;
    bool have = false;
    for (const auto& start : comp) {
        std::map<std::string, int> num;
        std::vector<std::string> order;
        std::deque<std::string> queue;
        num[start] = 0;
        order.push_back(start);
        queue.push_back(start);
        while (!queue.empty()) {
            std::string u = queue.front();
            queue.pop_front();
            for (const auto& p : t.ports(u)) {
                auto q = t.partner(p);
                if (q && !num.count(q->node)) {
                    num[q->node] = static_cast<int>(order.size());
                    order.push_back(q->node);
                    queue.push_back(q->node);
                }
            }
        }
        std::string s;
        for (const auto& u : order) {
            const Node& n = t.node(u);
            s += '(';
            s += n.is_var ? 'v' : 'l';
            s += enc_str(n.letter);
            s += ',' + std::to_string(n.in_rank) + ',' + std::to_string(n.out_rank);
            for (const auto& p : t.ports(u)) {
                auto q = t.partner(p);
                s += ' ';
                if (q)
                    s += std::to_string(num[q->node]) + '.' + std::to_string(q->index);
                else
                    s += '-';
                if (with_tags) {
                    auto it = tag_of.find(p);
                    if (it != tag_of.end()) s += '#' + enc_str(it->second);
                }
            }
            s += ')';
            if (have && s > best) break;  // already worse than the best prefix
        }
        if (!have || s < best) {
            best = s;
            have = true;
        }
    }
    return best;
}

struct MultiGraph {
    std::vector<std::string> ids;
    std::vector<std::string> sig;
    std::vector<std::vector<int>> count;
};

MultiGraph multigraph_of(const Net& t) {
    MultiGraph g;
    std::map<std::string, int> idx;
    for (const auto& [id, n] : t.nodes()) {
        idx[id] = static_cast<int>(g.ids.size());
        g.ids.push_back(id);
        g.sig.push_back(std::string(n.is_var ? "v" : "l") + enc_str(n.letter) + "," +
                        std::to_string(n.in_rank) + "," + std::to_string(n.out_rank));
    }
    g.count.assign(g.ids.size(), std::vector<int>(g.ids.size(), 0));
    for (const auto& e : t.edges()) g.count[idx[e.src]][idx[e.dst]]++;
    return g;
}

bool permuting_iso(const MultiGraph& a, const MultiGraph& b) {
    const std::size_t n = a.ids.size();
    if (n != b.ids.size()) return false;
    {
        auto sa = a.sig, sb = b.sig;
        std::sort(sa.begin(), sa.end());
        std::sort(sb.begin(), sb.end());
        if (sa != sb) return false;
    }
    std::vector<int> map(n, -1);
    std::vector<bool> used(n, false);
    std::function<bool(std::size_t)> go = [&](std::size_t i) -> bool {
        if (i == n) return true;
        for (std::size_t j = 0; j < n; ++j) {
            if (used[j] || a.sig[i] != b.sig[j]) continue;
            if (a.count[i][i] != b.count[j][j]) continue;
            bool ok = true;
            for (std::size_t k = 0; k < i && ok; ++k) {
                int mk = map[k];
                ok = a.count[i][k] == b.count[j][mk] && a.count[k][i] == b.count[mk][j];
            }
            if (!ok) continue;
            map[i] = static_cast<int>(j);
            used[j] = true;
            if (go(i + 1)) return true;
            used[j] = false;
        }
        map[i] = -1;
        return false;
    };
    return go(0);
}

}  // namespace

std::vector<std::set<std::string>> components(const Net& t) { return components_impl(t); }

int component_count(const Net& t) { return static_cast<int>(components_impl(t).size()); }

std::string canonical_key(const Net& n, bool with_tags) {
    std::vector<std::string> parts;
    for (const auto& comp : components_impl(n)) parts.push_back(component_key(n, comp, with_tags));
    std::sort(parts.begin(), parts.end());
    std::string out = std::to_string(parts.size()) + "[";
    for (const auto& p : parts) out += p + "|";
    out += "]";
    return out;
}

bool nets_equal(const Net& p, const Net& q, EqMode mode) {
    if (p.size() != q.size() || p.edges().size() != q.edges().size()) return false;
    if (mode == EqMode::Strict) return canonical_key(p) == canonical_key(q);
    return permuting_iso(multigraph_of(p), multigraph_of(q));
}

bool nets_equal_tagged(const Net& p, const Net& q) {
    if (p.size() != q.size() || p.tags().size() != q.tags().size()) return false;
    return canonical_key(p, true) == canonical_key(q, true);
}

// ---------------------------------------------------------------- counts

std::string to_string(const Delta& d) {
    return std::to_string(d.total) + " (in=" + std::to_string(d.in) + ",out=" + std::to_string(d.out) + ")";
}

Delta delta_d(const Net& n) {
    Delta d;
    for (const auto& p : n.unoccupied_ports()) {
        ++d.total;
        (p.dir == Dir::In ? d.in : d.out)++;
    }
    return d;
}

Delta delta_d(const Jungle& j) {
    Delta d;
    for (const auto& [k, n] : j.by_key()) {
        Delta e = delta_d(n);
        d.total += e.total;
        d.in += e.in;
        d.out += e.out;
    }
    return d;
}

// ---------------------------------------------------------------- subnets

std::string port_tag_name(const PortRef& p) {
    return p.node + (p.dir == Dir::In ? ".i" : ".o") + std::to_string(p.index);
}

Net induced_subnet(const Net& t, const std::set<std::string>& keep, TagPolicy policy, bool keep_existing_tags) {
    RawNet raw;
    raw.name = t.name();
    for (const auto& id : keep) raw.nodes[id] = t.node(id);
    for (const auto& e : t.edges())
        if (keep.count(e.src) && keep.count(e.dst)) raw.edges.insert(e);
    std::set<PortRef> tagged;
    if (keep_existing_tags)
        for (const auto& [name, p] : t.tags())
            if (keep.count(p.node)) {
                raw.tags[name] = p;
                tagged.insert(p);
            }
    if (policy != TagPolicy::None) {
        for (const auto& id : keep)
            for (const auto& p : t.ports(id)) {
                if (tagged.count(p)) continue;
                auto q = t.partner(p);
                bool severed = q && !keep.count(q->node);
                bool free = !q;
                if (severed || (free && policy == TagPolicy::AllBoundary)) {
                    std::string name = port_tag_name(p);
                    while (raw.tags.count(name)) name += "'";
                    raw.tags[name] = p;
                }
            }
    }
    return validate_net(std::move(raw));
}

namespace {

std::map<std::string, std::set<std::string>> undirected_adjacency(const Net& t) {
    std::map<std::string, std::set<std::string>> adj;
    for (const auto& [id, n] : t.nodes()) adj[id];
    for (const auto& e : t.edges()) {
        adj[e.src].insert(e.dst);
        adj[e.dst].insert(e.src);
    }
    return adj;
}

}  // namespace

std::vector<std::set<std::string>> connected_subsets(const Net& t, std::size_t max_nodes) {
    if (max_nodes < 1) throw NetError(NetErrorKind::BoundTooSmall, "bound must be >= 1");
    auto adj = undirected_adjacency(t);
    std::set<std::set<std::string>> seen;
    std::vector<std::set<std::string>> layer;
    for (const auto& [id, n] : t.nodes()) {
        std::set<std::string> s{id};
        seen.insert(s);
        layer.push_back(s);
    }
    for (std::size_t size = 1; size < max_nodes && !layer.empty(); ++size) {
        std::vector<std::set<std::string>> next;
        for (const auto& s : layer)
            for (const auto& u : s)
                for (const auto& v : adj[u]) {
                    if (s.count(v)) continue;
                    auto grown = s;
                    grown.insert(v);
                    if (seen.insert(grown).second) next.push_back(std::move(grown));
                }
        layer = std::move(next);
    }
    std::vector<std::set<std::string>> out(seen.begin(), seen.end());
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.size() < b.size(); });
    return out;
}

std::vector<Net> enclosures(const Net& t, std::size_t max_nodes) {
    std::vector<Net> out;
    for (const auto& s : connected_subsets(t, max_nodes)) out.push_back(induced_subnet(t, s, TagPolicy::Severed));
    return out;
}

// ---------------------------------------------------------------- embedding

void for_each_embedding(const Net& pattern, const Net& host, const EmbedOptions& opts,
                        const std::function<bool(const NodeMap&)>& cb) {
    std::vector<std::string> order;
    {
        std::set<std::string> placed;
        for (const auto& [root, rn] : pattern.nodes()) {
            if (placed.count(root) || (opts.skip_vars && rn.is_var)) continue;
            std::deque<std::string> queue{root};
            placed.insert(root);
            while (!queue.empty()) {
                std::string u = queue.front();
                queue.pop_front();
                order.push_back(u);
                for (const auto& p : pattern.ports(u)) {
                    auto q = pattern.partner(p);
                    if (!q || placed.count(q->node)) continue;
                    if (opts.skip_vars && pattern.node(q->node).is_var) continue;
                    placed.insert(q->node);
                    queue.push_back(q->node);
                }
            }
        }
    }
    std::set<PortRef> pattern_tagged;
    for (const auto& [name, p] : pattern.tags()) pattern_tagged.insert(p);

    NodeMap map;
    std::map<std::string, std::string> inverse;
    std::size_t found = 0;
    bool stop = false;

    auto skipped = [&](const std::string& pid) { return opts.skip_vars && pattern.node(pid).is_var; };

    auto consistent = [&](const std::string& u, const std::string& h) {
        const Node& pn = pattern.node(u);
        const Node& hn = host.node(h);
        if (!(pn == hn)) return false;
        for (const auto& p : pattern.ports(u)) {
            PortRef hp{h, p.dir, p.index};
            auto pq = pattern.partner(p);
            auto hq = host.partner(hp);
            if (pq && !skipped(pq->node)) {
                if (!hq) return false;
                auto it = map.find(pq->node);
                if (it != map.end()) {
                    if (hq->node != it->second || hq->index != pq->index) return false;
                } else if (pq->node == u) {
                    if (hq->node != h || hq->index != pq->index) return false;
                }
            } else if (!pq && opts.untagged_free_must_be_free && !pattern_tagged.count(p) && hq) {
                return false;
            }
            if (opts.induced && hq) {
                auto inv = inverse.find(hq->node);
                std::optional<std::string> img_owner;
                if (inv != inverse.end()) img_owner = inv->second;
                else if (hq->node == h) img_owner = u;
                if (img_owner) {
                    if (!pq || skipped(pq->node) || pq->node != *img_owner || pq->index != hq->index) return false;
                }
            }
        }
        return true;
    };

    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (stop) return;
        if (i == order.size()) {
            ++found;
            if (!cb(map) || (opts.limit && found >= opts.limit)) stop = true;
            return;
        }
        const std::string& u = order[i];
        std::vector<std::string> candidates;
        if (opts.anchored) {
            if (host.has_node(u)) candidates.push_back(u);
        }
        bool anchored = opts.anchored;
        for (const auto& p : pattern.ports(u)) {
            auto pq = pattern.partner(p);
            if (!pq) continue;
            auto it = map.find(pq->node);
            if (it == map.end()) continue;
            auto hq = host.partner({it->second, pq->dir, pq->index});
            anchored = true;
            if (hq && hq->dir == p.dir && hq->index == p.index) candidates.push_back(hq->node);
            break;
        }
        if (!anchored)
            for (const auto& [hid, hn] : host.nodes()) candidates.push_back(hid);
        for (const auto& h : candidates) {
            if (inverse.count(h) || !consistent(u, h)) continue;
            map[u] = h;
            inverse[h] = u;
            go(i + 1);
            map.erase(u);
            inverse.erase(h);
            if (stop) return;
        }
    };
    go(0);
}

bool is_enclosure(const Net& s, const Net& t) {
    if (s.size() > t.size()) return false;
    bool found = false;
    EmbedOptions opts;
    opts.induced = true;
    opts.limit = 1;
    for_each_embedding(s, t, opts, [&](const NodeMap&) {
        found = true;
        return false;
    });
    return found;
}

// ---------------------------------------------------------------- partitions

std::string to_string(const PartitionSpec& p) {
    std::string out;
    for (std::size_t i = 0; i < p.blocks.size(); ++i) {
        if (i) out += "|";
        bool first = true;
        for (const auto& n : p.blocks[i]) {
            if (!first) out += ",";
            out += n;
            first = false;
        }
    }
    return out;
}

bool is_connected_set(const Net& t, const std::set<std::string>& nodes) {
    if (nodes.empty()) return false;
    std::set<std::string> seen{*nodes.begin()};
    std::deque<std::string> queue{*nodes.begin()};
    while (!queue.empty()) {
        std::string u = queue.front();
        queue.pop_front();
        for (const auto& p : t.ports(u)) {
            auto q = t.partner(p);
            if (q && nodes.count(q->node) && seen.insert(q->node).second) queue.push_back(q->node);
        }
    }
    return seen.size() == nodes.size();
}

bool is_partition(const Net& t, const PartitionSpec& p, bool require_connected) {
    std::set<std::string> covered;
    for (const auto& b : p.blocks) {
        if (b.empty()) return false;
        for (const auto& n : b) {
            if (!t.has_node(n)) return false;
            if (!covered.insert(n).second) return false;
        }
        if (require_connected && !is_connected_set(t, b)) return false;
    }
    return covered.size() == t.size();
}

PartitionReport partition_ops(const Net& t, const std::vector<Net>& elements) {
    PartitionReport r;
    std::map<std::string, std::set<std::size_t>> containing;
    bool all_inside = true;
    bool disjoint = true;
    r.is_saturating = true;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        const Net& e = elements[i];
        bool embeds = true;
        for (const auto& [id, n] : e.nodes()) {
            if (!t.has_node(id) || !(t.node(id) == n)) {
                embeds = false;
                all_inside = false;
                continue;
            }
            if (!containing[id].empty()) disjoint = false;
            containing[id].insert(i);
        }
        if (embeds) {
            std::set<std::string> ids;
            for (const auto& [id, n] : e.nodes()) ids.insert(id);
            std::set<Edge> inner;
            for (const auto& ed : t.edges())
                if (ids.count(ed.src) && ids.count(ed.dst)) inner.insert(ed);
            embeds = inner == e.edges();
        }
        if (!embeds) r.is_saturating = false;
    }
    r.is_cover = true;
    for (const auto& [id, n] : t.nodes())
        if (!containing.count(id)) r.is_cover = false;
    r.is_saturating = r.is_saturating && r.is_cover;
    r.is_partition = r.is_cover && all_inside && disjoint;

    std::map<std::set<std::size_t>, std::set<std::string>> groups;
    for (const auto& [id, s] : containing) groups[s].insert(id);
    for (const auto& [sig, ids] : groups) {
        Net sub = induced_subnet(t, ids, TagPolicy::None, false);
        for (const auto& comp : components(sub)) r.induced.blocks.push_back(comp);
    }
    std::sort(r.induced.blocks.begin(), r.induced.blocks.end());
    r.induced_is_partition = is_partition(t, r.induced, true);
    return r;
}

// ---------------------------------------------------------------- structure

Structure structure(const Net& t) {
    Structure s;
    s.components = component_count(t);
    // state: 0 unvisited, 1 on stack, 2 done
    std::map<std::string, int> state;
    std::map<std::string, int> height;
    std::map<std::string, std::vector<std::string>> feeders;
    for (const auto& e : t.edges()) feeders[e.dst].push_back(e.src);
    std::function<void(const std::string&)> visit = [&](const std::string& u) {
        state[u] = 1;
        int h = 0;
        for (const auto& f : feeders[u]) {
            if (state[f] == 1) {
                s.has_directed_loop = true;
                continue;
            }
            if (state[f] == 0) visit(f);
            h = std::max(h, height[f]);
        }
        height[u] = t.node(u).is_var ? 0 : 1 + h;
        state[u] = 2;
    };
    for (const auto& [id, n] : t.nodes())
        if (state[id] == 0) visit(id);
    if (!s.has_directed_loop) {
        if (t.size() == 1) {
            const Node& n = t.nodes().begin()->second;
            if (n.is_var || (n.in_rank == 0 && n.out_rank == 1)) {
                s.height = 0;
                return s;
            }
        }
        int h = 0;
        for (const auto& [id, v] : height) h = std::max(h, v);
        s.height = h;
    }
    return s;
}

Structure structure(const Jungle& j) {
    Structure s;
    s.height = 0;
    for (const auto& [k, n] : j.by_key()) {
        Structure e = structure(n);
        s.components += e.components;
        s.has_directed_loop = s.has_directed_loop || e.has_directed_loop;
        if (!e.height) s.height.reset();
        else if (s.height) s.height = std::max(*s.height, *e.height);
    }
    if (s.has_directed_loop) s.height.reset();
    return s;
}

OverlapResult overlaps(const Net& p, const Net& q, std::size_t bound) {
    if (bound < 1) throw NetError(NetErrorKind::BoundTooSmall, "bound must be >= 1");
    OverlapResult r;
    r.exhausted = bound < std::min(p.size(), q.size());
    auto subsets = connected_subsets(p, bound);
    std::stable_sort(subsets.begin(), subsets.end(), [](const auto& a, const auto& b) { return a.size() > b.size(); });
    std::size_t best_size = 0;
    std::string best_key;
    for (const auto& s : subsets) {
        if (r.shared && s.size() < best_size) break;
        Net sub = induced_subnet(p, s, TagPolicy::Severed, false);
        if (!is_enclosure(sub, q)) continue;
        std::string key = canonical_key(sub);
        if (!r.shared || key < best_key) {
            r.shared = sub;
            best_key = key;
            best_size = s.size();
        }
    }
    r.overlap = r.shared.has_value();
    return r;
}

// ---------------------------------------------------------------- fresh names

void FreshMinter::avoid(const Net& n) {
    for (const auto& l : n.letters()) avoid_.insert(l);
    for (const auto& v : n.var_names()) avoid_.insert(v);
}

void FreshMinter::avoid(const Jungle& j) {
    for (const auto& [k, n] : j.by_key()) avoid(n);
}

std::string FreshMinter::mint() {
    for (;;) {
        std::string cand = prefix_ + std::to_string(counter_++);
        if (avoid_.insert(cand).second) return cand;
    }
}

std::string fresh_id(const std::string& base, const std::set<std::string>& used) {
    if (!used.count(base)) return base;
    for (int k = 1;; ++k) {
        std::string cand = base + "_" + std::to_string(k);
        if (!used.count(cand)) return cand;
    }
}

}  // namespace netrw
