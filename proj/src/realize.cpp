#include "netrw/realize.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <sstream>

#include "json.hpp"

namespace netrw {

const char* to_string(RealizeErrorKind k) {
    switch (k) {
        case RealizeErrorKind::MissingInput: return "MissingInput";
        case RealizeErrorKind::NoFixpointWithinBudget: return "NoFixpointWithinBudget";
        case RealizeErrorKind::GeneratorUnmapped: return "GeneratorUnmapped";
        case RealizeErrorKind::MissingTable: return "MissingTable";
        case RealizeErrorKind::BadAlgebra: return "BadAlgebra";
        case RealizeErrorKind::Cyclic: return "Cyclic";
    }
    return "?";
}

RealizeError::RealizeError(RealizeErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

std::vector<UpEntry> up_context(const Net& t, const std::string& node) {
    std::vector<UpEntry> out;
    for (const auto& e : t.edges())
        if (e.dst == node) out.push_back({t.node(e.src).letter, e.out});
    std::sort(out.begin(), out.end());
    return out;
}

bool AlgebraSpec::in_carrier(const Value& v) const {
    return std::find(carrier.begin(), carrier.end(), v) != carrier.end();
}

std::vector<ValueSet> AlgebraSpec::apply(const Node& n, const std::vector<Value>& in, const std::vector<UpEntry>& up) const {
    std::vector<ValueSet> out(static_cast<std::size_t>(n.out_rank));
    if (n.is_var) {
        if (in.at(0) != kAny)
            for (auto& s : out) s.insert(in.at(0));
        return out;
    }
    auto it = tables.find(n.letter);
    if (it == tables.end()) throw RealizeError(RealizeErrorKind::MissingTable, "no table for letter " + n.letter);
    for (const auto& row : it->second) {
        if (row.in.size() != in.size() || row.out.size() != out.size())
            throw RealizeError(RealizeErrorKind::BadAlgebra, "a row of " + n.letter + " does not fit its rank");
        bool match = true;
        for (std::size_t k = 0; k < in.size() && match; ++k) match = row.in[k] == kAny || row.in[k] == in[k];
        if (match && row.up) {
            auto want = *row.up;
            std::sort(want.begin(), want.end());
            match = want == up;
        }
        if (!match) continue;
        for (std::size_t k = 0; k < out.size(); ++k) out[k].insert(row.out[k].begin(), row.out[k].end());
    }
    return out;
}

// ------------------------------------------------------------ JSON

namespace {

using nlohmann::json;

Value value_of(const json& j) {
    if (j.is_string()) return j.get<std::string>();
    if (j.is_boolean()) return j.get<bool>() ? "1" : "0";
    return j.dump();
}

}  // namespace

AlgebraSpec parse_algebra_json(const std::string& text) {
    AlgebraSpec a;
    json doc;
    try {
        doc = json::parse(text);
        for (const auto& v : doc.at("carrier")) a.carrier.push_back(value_of(v));
        for (const auto& [letter, tab] : doc.at("tables").items()) {
            auto& rows = a.tables[letter];
            for (const auto& e : tab.at("entries")) {
                TableRow row;
                for (const auto& v : e.value("in", json::array())) row.in.push_back(value_of(v));
                if (e.contains("up")) {
                    row.up.emplace();
                    for (const auto& u : e.at("up")) row.up->push_back({u.at(0).get<std::string>(), u.at(1).get<int>()});
                }
                for (const auto& o : e.at("out")) {
                    ValueSet s;
                    if (o.is_array())
                        for (const auto& v : o) s.insert(value_of(v));
                    else
                        s.insert(value_of(o));
                    row.out.push_back(std::move(s));
                }
                rows.push_back(std::move(row));
            }
        }
    } catch (const json::exception& e) {
        throw RealizeError(RealizeErrorKind::BadAlgebra, e.what());
    }
    for (const auto& [letter, rows] : a.tables)
        for (const auto& row : rows) {
            for (const auto& v : row.in)
                if (v != kAny && !a.in_carrier(v))
                    throw RealizeError(RealizeErrorKind::BadAlgebra, letter + ": input " + v + " outside the carrier");
            for (const auto& s : row.out)
                for (const auto& v : s)
                    if (!a.in_carrier(v))
                        throw RealizeError(RealizeErrorKind::BadAlgebra, letter + ": output " + v + " outside the carrier");
        }
    return a;
}

AlgebraSpec load_algebra(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw RealizeError(RealizeErrorKind::BadAlgebra, "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_algebra_json(ss.str());
}

std::string algebra_to_json(const AlgebraSpec& a) {
    json doc;
    doc["carrier"] = a.carrier;
    doc["tables"] = json::object();
    for (const auto& [letter, rows] : a.tables) {
        json entries = json::array();
        for (const auto& row : rows) {
            json e;
            e["in"] = row.in;
            if (row.up) {
                json up = json::array();
                for (const auto& u : *row.up) up.push_back({u.letter, u.port});
                e["up"] = up;
            }
            json out = json::array();
            for (const auto& s : row.out) out.push_back(s.size() == 1 ? json(*s.begin()) : json(s));
            e["out"] = out;
            entries.push_back(e);
        }
        doc["tables"][letter]["entries"] = entries;
    }
    return doc.dump(2);
}

std::set<std::string> missing_tables(const AlgebraSpec& a, const Net& t) {
    std::set<std::string> out;
    for (const auto& [id, n] : t.nodes())
        if (!n.is_var && !a.tables.count(n.letter)) out.insert(n.letter);
    return out;
}

// ------------------------------------------------------------ evaluation

namespace {

// Every tuple of the cartesian product. A factor with no value yet stands as
// the wildcard, which only wildcard rows accept.
void for_each_tuple(const std::vector<ValueSet>& sets, const std::function<void(const std::vector<Value>&)>& f) {
    static const ValueSet unknown{kAny};
    std::vector<Value> cur(sets.size());
    std::function<void(std::size_t)> go = [&](std::size_t i) {
        if (i == sets.size()) return f(cur);
        for (const auto& v : sets[i].empty() ? unknown : sets[i]) {
            cur[i] = v;
            go(i + 1);
        }
    };
    go(0);
}

}  // namespace

int default_fixpoint_budget(const Net& t, const AlgebraSpec& a) {
    std::size_t outs = 0;
    for (const auto& [id, n] : t.nodes()) outs += static_cast<std::size_t>(n.out_rank);
    return static_cast<int>(std::max<std::size_t>(1, a.carrier.size()) * std::max(t.size(), outs)) + 1;
}

Evaluation evaluate_sets(const Net& t, const AlgebraSpec& a, const PortValues& inputs, int budget) {
    auto miss = missing_tables(a, t);
    if (!miss.empty()) throw RealizeError(RealizeErrorKind::MissingTable, "no table for letter " + *miss.begin());
    for (const auto& p : t.unoccupied_ports())
        if (p.dir == Dir::In && !inputs.count(p)) throw RealizeError(RealizeErrorKind::MissingInput, "no value for " + to_string(p));
    if (budget <= 0) budget = default_fixpoint_budget(t, a);

    Evaluation ev;
    ev.acyclic = !structure(t).has_directed_loop;
    std::map<std::string, std::vector<UpEntry>> ups;
    for (const auto& [id, n] : t.nodes()) {
        ups[id] = up_context(t, id);
        for (int k = 0; k < n.out_rank; ++k) ev.all_out[{id, Dir::Out, k}];
    }
    auto in_set = [&](const PortRef& p) -> const ValueSet& {
        if (auto q = t.partner(p)) return ev.all_out.at(*q);
        return inputs.at(p);
    };
    for (;;) {
        if (ev.iterations >= budget)
            throw RealizeError(RealizeErrorKind::NoFixpointWithinBudget, "still growing after " + std::to_string(budget) + " sweeps");
        ++ev.iterations;
        PortValues next = ev.all_out;
        for (const auto& [id, n] : t.nodes()) {
            std::vector<ValueSet> ins;
            for (int k = 0; k < n.in_rank; ++k) ins.push_back(in_set({id, Dir::In, k}));
            for_each_tuple(ins, [&](const std::vector<Value>& tuple) {
                auto outs = a.apply(n, tuple, ups[id]);
                for (int k = 0; k < n.out_rank; ++k) next[{id, Dir::Out, k}].insert(outs[k].begin(), outs[k].end());
            });
        }
        if (next == ev.all_out) break;
        ev.all_out = std::move(next);
    }
    for (const auto& p : t.unoccupied_ports())
        if (p.dir == Dir::Out) ev.outputs[p] = ev.all_out.at(p);
    return ev;
}

Evaluation evaluate(const Net& t, const AlgebraSpec& a, const std::map<PortRef, Value>& inputs, int budget) {
    PortValues sets;
    for (const auto& [p, v] : inputs) sets[p] = {v};
    return evaluate_sets(t, a, sets, budget);
}

PortValues hom_extend(const Generators& phi, const Net& t, const AlgebraSpec& a) {
    if (structure(t).has_directed_loop) throw RealizeError(RealizeErrorKind::Cyclic, "homomorphic extension needs an acyclic net");
    std::map<std::string, std::vector<ValueSet>> memo;
    std::function<const std::vector<ValueSet>&(const std::string&)> image = [&](const std::string& id)
        -> const std::vector<ValueSet>& {
        auto it = memo.find(id);
        if (it != memo.end()) return it->second;
        const Node& n = t.node(id);
        std::vector<ValueSet> out;
        auto generator = [&](const std::string& g) -> Value {
            auto gi = phi.find(g);
            if (gi == phi.end()) throw RealizeError(RealizeErrorKind::GeneratorUnmapped, "no image for generator " + g);
            return gi->second;
        };
        if (n.in_rank == 0 && phi.count(n.letter)) {
            out.assign(static_cast<std::size_t>(n.out_rank), ValueSet{generator(n.letter)});
        } else if (n.is_var && !t.partner({id, Dir::In, 0})) {
            out.assign(static_cast<std::size_t>(n.out_rank), ValueSet{generator(n.letter)});
        } else {
            std::vector<ValueSet> ins;
            for (int k = 0; k < n.in_rank; ++k) {
                PortRef p{id, Dir::In, k};
                if (auto q = t.partner(p)) ins.push_back(image(q->node).at(static_cast<std::size_t>(q->index)));
                else ins.push_back({generator(port_tag_name(p))});
            }
            out.assign(static_cast<std::size_t>(n.out_rank), ValueSet{});
            auto up = up_context(t, id);
            for_each_tuple(ins, [&](const std::vector<Value>& tuple) {
                auto o = a.apply(n, tuple, up);
                for (std::size_t k = 0; k < out.size(); ++k) out[k].insert(o[k].begin(), o[k].end());
            });
        }
        return memo[id] = std::move(out);
    };
    PortValues res;
    for (const auto& p : t.unoccupied_ports())
        if (p.dir == Dir::Out) res[p] = image(p.node).at(static_cast<std::size_t>(p.index));
    return res;
}

// ------------------------------------------------------------ free generation

namespace {

Net renumbered(const RawNet& raw) {
    std::map<std::string, std::string> id;
    std::size_t k = 0;
    for (const auto& [old, n] : raw.nodes) id[old] = "n" + std::to_string(k++);
    RawNet out;
    for (const auto& [old, n] : raw.nodes) out.nodes[id[old]] = n;
    for (const auto& e : raw.edges) out.edges.insert({id[e.src], e.out, id[e.dst], e.in});
    return validate_net(std::move(out));
}

}  // namespace

Generation generated_closure(const std::vector<Net>& q, const Alphabet& alphabet, int depth, std::size_t max_nodes) {
    Generation gen;
    gen.node_cap = max_nodes;
    Jungle cur{q};
    for (int d = 0; d < depth; ++d) {
        auto elems = cur.nets();
        struct Option {
            const Net* net = nullptr;
            PortRef port;
        };
        std::vector<Option> options{{}};
        for (const auto& e : elems)
            for (const auto& p : e.unoccupied_ports())
                if (p.dir == Dir::Out) options.push_back({&e, p});
        Jungle next = cur;
        for (const auto& [letter, rank] : alphabet.ranked) {
            std::size_t k = static_cast<std::size_t>(rank.first);
            std::vector<std::size_t> pick(k, 0);
            for (;;) {
                std::size_t size = 1;
                for (auto i : pick) size += i ? options[i].net->size() : 0;
                if (size > max_nodes) {
                    gen.capped = true;
                } else {
                    RawNet raw;
                    raw.nodes["s"] = Node{letter, rank.first, rank.second, false};
                    for (std::size_t port = 0; port < k; ++port) {
                        if (!pick[port]) continue;
                        const Option& o = options[pick[port]];
                        std::string pre = "c" + std::to_string(port) + "_";
                        for (const auto& [id, n] : o.net->nodes()) raw.nodes[pre + id] = n;
                        for (const auto& e : o.net->edges()) raw.edges.insert({pre + e.src, e.out, pre + e.dst, e.in});
                        raw.edges.insert({pre + o.port.node, o.port.index, "s", static_cast<int>(port)});
                    }
                    next.insert(renumbered(raw));
                }
                std::size_t i = 0;
                while (i < k && ++pick[i] == options.size()) pick[i++] = 0;
                if (i == k) break;
            }
        }
        cur = std::move(next);
    }
    gen.nets = cur.nets();
    return gen;
}

}  // namespace netrw
