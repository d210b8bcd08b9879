// Acceptance run: one PASS/FAIL line per criterion, exit status 1 on any failure.
// usage: acceptance CLI

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "netrw/abstraction.hpp"
#include "netrw/macro.hpp"
#include "netrw/net.hpp"
#include "netrw/netf.hpp"
#include "netrw/realize.hpp"
#include "netrw/rewrite.hpp"
#include "netrw/solver.hpp"
#include "oracle.hpp"

using namespace netrw;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
    void fail(const std::string& why) {
        if (pass) detail = why;
        pass = false;
    }
};

const std::vector<oracle::Letter> kLetters{{"a", 0, 1}, {"f", 2, 1}, {"g", 1, 1}, {"h", 1, 2}, {"k", 1, 0}};
const std::vector<oracle::Letter> kSisterLetters{{"p", 1, 1}, {"q", 2, 1}, {"s", 0, 1}, {"u", 1, 0}, {"v", 1, 2}};

std::string fixture(const std::string& f) { return std::string(NETRW_FIXTURES) + "/" + f; }

Rns rns_of(const Rule& r) {
    Rns out;
    out.name = r.name;
    out.rules.push_back(r);
    return out;
}

Net piece(std::mt19937& rng, const Net& t) {
    return induced_subnet(t, oracle::random_connected_subset(rng, t, 3), TagPolicy::AllBoundary).renamed("");
}

Rule make_rule(const std::string& name, const Net& left, RawNet right) {
    Rule r;
    r.name = name;
    r.preforms.push_back({left, validate_net(std::move(right))});
    return r;
}

// Same shape, letters renamed.
Rule relabel_piece(std::mt19937& rng, const Net& t, const std::string& name) {
    Net left = piece(rng, t);
    RawNet right = left.raw();
    for (auto& [id, n] : right.nodes) n.letter = "r_" + n.letter;
    return make_rule(name, left, right);
}

// One node carrying every tag.
Rule squash_piece(std::mt19937& rng, const Net& t, const std::string& name) {
    Net left = piece(rng, t);
    RawNet right;
    int in = 0, out = 0;
    for (const auto& [tag, p] : left.tags()) (p.dir == Dir::In ? in : out)++;
    right.nodes["x"] = Node{"sq", in, out, false};
    int i = 0, o = 0;
    for (const auto& [tag, p] : left.tags()) right.tags[tag] = {"x", p.dir, p.dir == Dir::In ? i++ : o++};
    return make_rule(name, left, right);
}

// Two chained nodes: the first takes the in-tags, the second the out-tags.
Rule split_piece(std::mt19937& rng, const Net& t, const std::string& name) {
    Net left = piece(rng, t);
    RawNet right;
    int in = 0, out = 0;
    for (const auto& [tag, p] : left.tags()) (p.dir == Dir::In ? in : out)++;
    right.nodes["x"] = Node{"sp", in, 1, false};
    right.nodes["y"] = Node{"sq", 1, out, false};
    right.edges.insert({"x", 0, "y", 0});
    int i = 0, o = 0;
    for (const auto& [tag, p] : left.tags())
        right.tags[tag] = p.dir == Dir::In ? PortRef{"x", Dir::In, i++} : PortRef{"y", Dir::Out, o++};
    return make_rule(name, left, right);
}

Net only(const Jungle& j) {
    if (j.size() != 1) throw std::runtime_error("expected one net, got " + std::to_string(j.size()));
    return j.nets().front();
}

bool free_ports_match(const Jungle& a, const Jungle& b) {
    std::set<std::tuple<int, int, int>> fa, fb;
    for (const auto& n : a.nets()) fa.insert(oracle::free_ports(n));
    for (const auto& n : b.nets()) fb.insert(oracle::free_ports(n));
    return fa == fb;
}

std::vector<std::set<std::string>> oracle_components(const Net& t, const std::set<std::string>& ids) {
    std::vector<std::set<std::string>> out;
    std::set<std::string> left = ids;
    while (!left.empty()) {
        std::set<std::string> comp{*left.begin()};
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& e : t.edges()) {
                if (!ids.count(e.src) || !ids.count(e.dst)) continue;
                if (comp.count(e.src) && comp.insert(e.dst).second) grew = true;
                if (comp.count(e.dst) && comp.insert(e.src).second) grew = true;
            }
        }
        for (const auto& x : comp) left.erase(x);
        out.push_back(comp);
    }
    return out;
}

bool truth(const Net& t, const PortRef& out, const std::map<PortRef, bool>& in) {
    const Node& n = t.node(out.node);
    std::vector<bool> args;
    for (int k = 0; k < n.in_rank; ++k) {
        PortRef p{out.node, Dir::In, k};
        const Edge* feed = nullptr;
        for (const auto& e : t.edges())
            if (e.dst == p.node && e.in == k) feed = &e;
        args.push_back(feed ? truth(t, feed->src_port(), in) : in.at(p));
    }
    return oracle::bool_gate(n.letter, args);
}

// ---------------------------------------------------------------- criteria

Outcome one_step_oracle() {
    Outcome o;
    std::mt19937 rng(101);
    int matched = 0;
    for (int i = 0; i < 300; ++i) {
        Net host = oracle::random_net(rng, kLetters, 5);
        Net source = i % 3 == 2 ? oracle::random_net(rng, kLetters, 4) : host;
        Rule r = i % 3 == 0 ? relabel_piece(rng, source, "R") : i % 3 == 1 ? squash_piece(rng, source, "R")
                                                                          : split_piece(rng, source, "R");
        Jungle got = apply(r, Jungle{host});
        auto want = oracle::one_step(r, host);
        bool ok = want.empty() ? got == Jungle{host} : oracle::same_set(got.nets(), want);
        matched += !want.empty();
        if (!ok) o.fail("case " + std::to_string(i) + ":\n" + print_net(host) + print_rule(r));
    }
    if (matched < 150) o.fail("only " + std::to_string(matched) + " cases had a redex");
    o.detail += (o.detail.empty() ? "" : "\n") + std::to_string(matched) + "/300 with a redex";
    return o;
}

Outcome roundtrip_recovers() {
    Outcome o;
    std::mt19937 rng(202);
    for (int i = 0; i < 200; ++i) {
        Net t = oracle::random_net(rng, kLetters, 8);
        auto part = oracle::random_partition(rng, t);
        Prns w = synthesize_prns(t, part);
        Net back = only(roundtrip(Jungle{t}, w.rns));
        if (!oracle::iso(back, t) || !nets_equal(back, t))
            o.fail("case " + std::to_string(i) + ": " + to_string(part) + "\n" + print_net(t));
    }
    return o;
}

// Injective but overlapping right sides: g -> c and the chain m-m -> c-c.
Rns shared_right(const std::string& c) {
    auto d = parse_document(
        "rule G { preform { left { node x g in=1 out=1\n tag i x:in:0\n tag o x:out:0 }\n"
        " right { node x " + c + " in=1 out=1\n tag i x:in:0\n tag o x:out:0 } } }\n"
        "rule H { preform { left { node x m in=1 out=1\n node y m in=1 out=1\n edge x:out:0 -- y:in:0\n"
        " tag i x:in:0\n tag o y:out:0 }\n"
        " right { node x " + c + " in=1 out=1\n node y " + c + " in=1 out=1\n edge x:out:0 -- y:in:0\n"
        " tag i x:in:0\n tag o y:out:0 } } }\n"
        "rns C {\n condition fresh-letters\n rule G\n rule H\n}\n");
    return d.rns("C");
}

// A chain of g nodes and m-m pairs holding at least one of each.
Net gm_chain(std::mt19937& rng, int units) {
    std::vector<std::string> letters{"g", "m", "m"};
    for (int k = 2; k < units; ++k) {
        if (rng() % 2) letters.push_back("g");
        else {
            letters.push_back("m");
            letters.push_back("m");
        }
    }
    std::shuffle(letters.begin(), letters.end(), rng);
    // keep m nodes in adjacent pairs
    std::vector<std::string> fixed;
    int ms = 0;
    for (const auto& l : letters) (l == "m" ? ms : (fixed.push_back(l), ms));
    for (int k = 0; k < ms / 2; ++k) {
        auto at = fixed.begin() + static_cast<long>(rng() % (fixed.size() + 1));
        at = fixed.insert(at, "m");
        fixed.insert(at, "m");
    }
    RawNet r;
    for (std::size_t k = 0; k < fixed.size(); ++k) {
        r.nodes["n" + std::to_string(k)] = Node{fixed[k], 1, 1, false};
        if (k) r.edges.insert({"n" + std::to_string(k - 1), 0, "n" + std::to_string(k), 0});
    }
    return validate_net(std::move(r));
}

Outcome delta_invariance() {
    Outcome o;
    std::mt19937 rng(303);
    int applications = 0;
    for (int i = 0; applications < 500; ++i) {
        if (i % 5 == 4) {
            Net t = gm_chain(rng, 2 + static_cast<int>(rng() % 3));
            Rns c = shared_right("_c");
            if (!validate_rns_type(c, RnsType::CRNS, Jungle{t}).valid()) {
                o.fail("shared-right system does not validate as a cover system");
                return o;
            }
            Jungle out = apply(c, Jungle{t});
            ++applications;
            for (const auto& n : out.nets())
                if (oracle::free_ports(n) != oracle::free_ports(t)) o.fail("cover step on\n" + print_net(t));
            continue;
        }
        Net t = oracle::random_net(rng, kLetters, 6);
        auto part = oracle::random_partition(rng, t);
        Prns w = synthesize_prns(t, part);
        if (!validate_rns_type(w.rns, RnsType::PRNS, Jungle{t}).valid()) {
            o.fail("synthesized system does not validate: " + to_string(part));
            continue;
        }
        Jungle step = apply(w.rns, Jungle{t});
        ++applications;
        if (!free_ports_match(step, Jungle{t})) o.fail("partition step on\n" + print_net(t));
        Jungle con = concept_of(Jungle{t}, w.rns);
        Prns inv = invert_prns(w);
        Jungle back = apply(inv.rns, con);
        ++applications;
        if (!free_ports_match(back, con)) o.fail("inverse step on\n" + print_net(only(con)));
    }
    o.detail += (o.detail.empty() ? "" : "\n") + std::to_string(applications) + " applications";
    return o;
}

Outcome unequal_delta_not_sisters() {
    Outcome o;
    std::mt19937 rng(404);
    int pairs = 0, searched = 0;
    long layouts = 0;
    while (pairs < 50) {
        Net a = oracle::random_net(rng, kLetters, 3);
        Net b = oracle::random_net(rng, kSisterLetters, 3);
        if (delta_d(a) == delta_d(b) || oracle::free_ports(a) == oracle::free_ports(b)) continue;
        ++pairs;
        if (abstract_sisters(a, b, SisterMode::Split) || abstract_sisters(a, b, SisterMode::Total) !=
                                                             (std::get<0>(oracle::free_ports(a)) ==
                                                              std::get<0>(oracle::free_ports(b))))
            o.fail("sisters claimed:\n" + print_net(a) + print_net(b));
        if (searched < 10 && a.size() + b.size() >= 4) {
            ++searched;
            OriginSearchOptions opts;
            opts.precheck = false;
            opts.max_origin_nodes = 5;
            auto r = search_common_origin(a, b, opts);
            layouts += static_cast<long>(r.candidates);
            if (r.witness) o.fail("origin found for\n" + print_net(a) + print_net(b));
        }
    }
    o.detail += (o.detail.empty() ? "" : "\n") + std::to_string(pairs) + " pairs, " + std::to_string(searched) +
                " searched to 5 nodes over " +
                std::to_string(layouts) + " layouts";
    return o;
}

struct SisterInstance {
    Net a, b;
    OriginWitness witness;
};

std::vector<SisterInstance> g_instances;  // witnesses from the backward direction, reused for parallel checks

Outcome sisters_have_origins() {
    Outcome o;
    g_instances.clear();
    const std::vector<std::string> names{"p", "q", "r", "s"};
    int single = 0;
    for (int in = 0; in <= 2; ++in)
        for (int out = 0; out <= 2; ++out)
            for (const auto& x : names)
                for (const auto& y : names) {
                    Net a = parse_net("net a { node n " + x + " in=" + std::to_string(in) + " out=" +
                                      std::to_string(out) + " }");
                    Net b = parse_net("net b { node m " + y + " in=" + std::to_string(in) + " out=" +
                                      std::to_string(out) + " }");
                    ++single;
                    auto r = search_common_origin(a, b);
                    if (!r.witness || r.witness->origin.size() != 1 || !verify_origin(*r.witness, a, b)) {
                        o.fail("single-node pair without a verified witness: " + x + "/" + y);
                        continue;
                    }
                    g_instances.push_back({a, b, *r.witness});
                }

    std::mt19937 rng(505);
    int multi = 0, found = 0, exhausted = 0;
    while (multi < 25) {
        Net a = oracle::random_net(rng, kLetters, 3);
        auto [t, in, out] = oracle::free_ports(a);
        if (t > 4) continue;
        int n = 1 + static_cast<int>(rng() % 3);
        if (a.size() == 1 && n == 1) n = 2;
        Net b = oracle::random_net_with_split(rng, kSisterLetters, n, in, out);
        if (b.empty()) continue;
        ++multi;
        OriginSearchOptions opts;
        opts.max_origin_nodes = 6;
        auto r = search_common_origin(a, b, opts);
        if (!r.witness) {
            ++exhausted;
            continue;
        }
        ++found;
        if (!verify_origin(*r.witness, a, b)) o.fail("witness fails verification:\n" + print_net(a) + print_net(b));
        g_instances.push_back({a, b, *r.witness});
    }
    std::ostringstream d;
    d << single << " single-node pairs verified; multi-node found " << found << "/" << multi << ", exhausted "
      << exhausted;
    o.detail += (o.detail.empty() ? "" : "\n") + d.str();
    return o;
}

Outcome macro_equation() {
    Outcome o;
    std::mt19937 rng(606);
    int built = 0, attempts = 0, same_step = 0;
    while (built < 100 && attempts < 1000) {
        ++attempts;
        Net t = oracle::random_net(rng, kLetters, 6);
        Prns w = synthesize_prns(t, oracle::random_partition(rng, t));
        Rule r = attempts % 2 ? squash_piece(rng, t, "R") : relabel_piece(rng, t, "R");
        Rns micro = rns_of(r);
        MacroResult m;
        try {
            m = build_macro(micro, w, t);
        } catch (const MacroError&) {
            continue;
        }
        ++built;
        if (verify_macro_equation(w.rns, m.macro, m.post.rns, micro, Jungle{t}).verdict != Verdict::Yes)
            o.fail("equation fails:\n" + print_net(t) + print_rule(r));
        Rns solved = solve_micro(m.macro, w, m.post);
        Jungle want = normal_forms(micro, Jungle{t}, 8);
        if (normal_forms(solved, Jungle{t}, 8) != want)
            o.fail("micro normal forms not recovered:\n" + print_net(t) + print_rule(r));
        // a block holding several redexes is rewritten at once, so single steps may differ
        same_step += apply(solved, Jungle{t}) == apply(micro, Jungle{t});
    }
    if (built < 100) o.fail("only " + std::to_string(built) + " macros built in " + std::to_string(attempts));
    o.detail += (o.detail.empty() ? "" : "\n") + std::to_string(built) + " built in " + std::to_string(attempts) +
                " attempts, " + std::to_string(same_step) + " also equal after one step";
    return o;
}

Outcome parallel_preservation() {
    Outcome o;
    if (g_instances.empty()) {
        o.fail("no sister instances");
        return o;
    }
    std::mt19937 rng(707);
    int checked = 0;
    for (const auto& inst : g_instances) {
        Rule r = relabel_piece(rng, inst.a, "R");
        ParallelPair pair = parallel_td(single_stage(rns_of(r), 1), inst.witness);
        auto rep = verify_parallel(pair);
        ++checked;
        if (!rep.holds() || !abstract_sisters(rep.a_results, rep.b_results, SisterMode::Split))
            o.fail("not parallel:\n" + print_net(inst.a) + print_net(inst.b) + print_rule(r));
    }
    o.detail += (o.detail.empty() ? "" : "\n") + std::to_string(checked) + " instances";
    return o;
}

// All connected nets up to four nodes over {a 0/1, g 1/1, f 2/1}, deduplicated.
std::vector<Net> all_small_nets() {
    const std::vector<oracle::Letter> letters{{"a", 0, 1}, {"g", 1, 1}, {"f", 2, 1}};
    std::map<std::string, Net> seen;
    std::function<void(std::vector<int>&, int)> pick = [&](std::vector<int>& seq, int n) {
        if (static_cast<int>(seq.size()) == n) {
            RawNet base;
            std::vector<PortRef> outs, ins;
            for (std::size_t k = 0; k < seq.size(); ++k) {
                const auto& l = letters[seq[k]];
                std::string id = "n" + std::to_string(k + 1);
                base.nodes[id] = Node{l.name, l.in, l.out, false};
                for (int i = 0; i < l.in; ++i) ins.push_back({id, Dir::In, i});
                for (int i = 0; i < l.out; ++i) outs.push_back({id, Dir::Out, i});
            }
            std::vector<bool> used(ins.size(), false);
            std::function<void(std::size_t, RawNet&)> wire = [&](std::size_t oi, RawNet& r) {
                if (oi == outs.size()) {
                    Net net = validate_net(r);
                    std::set<std::string> ids;
                    for (const auto& [id, x] : net.nodes()) ids.insert(id);
                    if (oracle::connected(net, ids)) seen.emplace(canonical_key(net), net);
                    return;
                }
                wire(oi + 1, r);
                for (std::size_t ii = 0; ii < ins.size(); ++ii) {
                    if (used[ii]) continue;
                    used[ii] = true;
                    Edge e{outs[oi].node, outs[oi].index, ins[ii].node, ins[ii].index};
                    r.edges.insert(e);
                    wire(oi + 1, r);
                    r.edges.erase(e);
                    used[ii] = false;
                }
            };
            wire(0, base);
            return;
        }
        for (int l = seq.empty() ? 0 : seq.back(); l < static_cast<int>(letters.size()); ++l) {
            seq.push_back(l);
            pick(seq, n);
            seq.pop_back();
        }
    };
    for (int n = 1; n <= 4; ++n) {
        std::vector<int> seq;
        pick(seq, n);
    }
    std::vector<Net> out;
    for (auto& [k, n] : seen) out.push_back(n);
    return out;
}

Outcome cover_correlation() {
    Outcome o;
    auto nets = all_small_nets();
    long families = 0, covers = 0;
    for (const auto& t : nets) {
        std::vector<std::string> ids;
        for (const auto& [id, x] : t.nodes()) ids.push_back(id);
        std::vector<std::set<std::string>> subsets;
        for (unsigned m = 1; m < (1u << ids.size()); ++m) {
            std::set<std::string> s;
            for (std::size_t k = 0; k < ids.size(); ++k)
                if ((m >> k) & 1u) s.insert(ids[k]);
            if (oracle::connected(t, s)) subsets.push_back(s);
        }
        std::vector<Net> elements;
        for (const auto& s : subsets) elements.push_back(induced_subnet(t, s, TagPolicy::Severed));
        for (unsigned long fam = 0; fam < (1ul << subsets.size()); ++fam) {
            std::vector<Net> chosen;
            std::map<std::string, std::set<std::size_t>> member;
            for (std::size_t k = 0; k < subsets.size(); ++k) {
                if (!((fam >> k) & 1ul)) continue;
                chosen.push_back(elements[k]);
                for (const auto& id : subsets[k]) member[id].insert(chosen.size() - 1);
            }
            bool cover = member.size() == ids.size();
            std::map<std::set<std::size_t>, std::set<std::string>> groups;
            for (const auto& [id, sig] : member) groups[sig].insert(id);
            std::vector<std::set<std::string>> refined;
            for (const auto& [sig, g] : groups)
                for (auto& c : oracle_components(t, g)) refined.push_back(c);
            std::sort(refined.begin(), refined.end());

            auto rep = partition_ops(t, chosen);
            ++families;
            covers += cover;
            if (rep.is_cover != cover || rep.induced.blocks != refined || rep.is_cover != rep.induced_is_partition) {
                o.fail("exception on family " + std::to_string(fam) + " of\n" + print_net(t));
                return o;
            }
        }
    }
    std::ostringstream d;
    d << nets.size() << " nets, " << families << " families, " << covers << " covers";
    o.detail = d.str();
    return o;
}

Outcome distinct_round_trips() {
    Outcome o;
    std::mt19937 rng(909);
    for (int i = 0; i < 100; ++i) {
        Net t = oracle::random_net(rng, kLetters, 6);
        Prns w = synthesize_prns(t, oracle::random_partition(rng, t));
        if (!validate_rns_type(w.rns, RnsType::GCdRNS, Jungle{t}).valid()) {
            o.fail("not a distinct system:\n" + print_net(t));
            continue;
        }
        int budget = concept_budget(w.rns, Jungle{t});
        Jungle c = normal_forms(w.rns, Jungle{t}, budget);
        Jungle back = normal_forms(invert_rns(w.rns), c, budget);
        if (back.size() != 1 || !oracle::iso(back.nets().front(), t)) o.fail("not recovered:\n" + print_net(t));
    }
    for (int i = 0; i < 20; ++i) {
        Net t = gm_chain(rng, 2 + i % 4);
        Rns c = shared_right("_c" + std::to_string(i));
        Jungle s{t};
        if (!validate_rns_type(c, RnsType::GCRNS, s).valid()) o.fail("shared-right system not a cover system");
        if (validate_rns_type(c, RnsType::GCdRNS, s).valid()) o.fail("shared-right system passes distinctness");
        Jungle back = normal_forms(invert_rns(c), normal_forms(c, s, 8), 8);
        bool contains = false;
        for (const auto& n : back.nets()) contains = contains || oracle::iso(n, t);
        if (!contains) o.fail("superset fails:\n" + print_net(t));
    }
    return o;
}

Outcome realization_differential() {
    Outcome o;
    AlgebraSpec b = load_algebra(fixture("bool.json"));
    std::mt19937 rng(1010);
    const std::vector<oracle::Letter> gates{{"and", 2, 1}, {"or", 2, 1}, {"xor", 2, 1},
                                            {"nand", 2, 1}, {"not", 1, 1}, {"one", 0, 1}};
    int nets = 0;
    long assignments = 0;
    while (nets < 150) {
        Net t = oracle::random_net(rng, gates, 6);
        if (oracle::height(t) < 0) continue;
        ++nets;
        std::vector<PortRef> ins;
        for (const auto& p : t.unoccupied_ports())
            if (p.dir == Dir::In) ins.push_back(p);
        for (unsigned mask = 0; mask < (1u << ins.size()); ++mask) {
            std::map<PortRef, Value> values;
            std::map<PortRef, bool> bits;
            for (std::size_t i = 0; i < ins.size(); ++i) {
                bool bit = (mask >> i) & 1u;
                bits[ins[i]] = bit;
                values[ins[i]] = bit ? "1" : "0";
            }
            ++assignments;
            auto ev = evaluate(t, b, values);
            for (const auto& [p, s] : ev.outputs)
                if (s != ValueSet{truth(t, p, bits) ? "1" : "0"}) o.fail("mismatch on\n" + print_net(t));
        }
    }
    std::vector<Net> cyclic{
        parse_net("net c { node n1 and in=2 out=1\n node n2 and in=2 out=1\n"
                  " edge n1:out:0 -- n2:in:0\n edge n2:out:0 -- n1:in:0 }"),
        parse_net("net c { node a or in=2 out=1\n node i id in=1 out=1\n edge a:out:0 -- i:in:0\n edge i:out:0 -- a:in:1 }"),
        parse_net("net c { node a or in=2 out=1\n node n not in=1 out=1\n node o one in=0 out=1\n"
                  " edge o:out:0 -- a:in:0\n edge a:out:0 -- n:in:0\n edge n:out:0 -- a:in:1 }"),
        parse_net("net c { node a or in=2 out=1\n node n not in=1 out=1\n edge a:out:0 -- n:in:0\n edge n:out:0 -- a:in:1 }"),
        parse_net("net c { node a and in=2 out=1\n node x xor in=2 out=1\n node n not in=1 out=1\n"
                  " edge a:out:0 -- x:in:0\n edge x:out:0 -- n:in:0\n edge n:out:0 -- a:in:1 }"),
    };
    int loops = 0;
    for (const auto& t : cyclic) {
        if (oracle::height(t) >= 0) continue;
        std::vector<PortRef> ins;
        for (const auto& p : t.unoccupied_ports())
            if (p.dir == Dir::In) ins.push_back(p);
        for (unsigned mask = 0; mask < (1u << ins.size()); ++mask) {
            std::map<PortRef, Value> values;
            for (std::size_t i = 0; i < ins.size(); ++i) values[ins[i]] = (mask >> i) & 1u ? "1" : "0";
            auto ev = evaluate(t, b, values, static_cast<int>(b.carrier.size() * t.size()) + 1);
            ++loops;
            if (ev.acyclic || ev.iterations - 1 > static_cast<int>(b.carrier.size() * t.size()))
                o.fail("fixpoint over the bound on\n" + print_net(t));
        }
    }
    std::ostringstream d;
    d << nets << " acyclic nets, " << assignments << " assignments, " << loops << " cyclic runs";
    o.detail += (o.detail.empty() ? "" : "\n") + d.str();
    return o;
}

std::string run_capture(const std::string& cmd, int* status) {
    std::string out;
    FILE* p = popen(cmd.c_str(), "r");
    if (!p) {
        *status = -1;
        return out;
    }
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
    *status = pclose(p);
    return out;
}

std::string g_cli;

Outcome solver_end_to_end() {
    Outcome o;
    RefResolver res{NETRW_FIXTURES};
    std::ifstream is(fixture("td_relabel.json"));
    Transducer td = transducer_from_json(nlohmann::json::parse(is), res);
    Problem stored = load_problem(fixture("problem_c1.json"));
    MemoryBank bank;
    bank.add(make_entry(stored.subject, stored.recognizer, td));
    Problem p = load_problem(fixture("problem_chain.json"));

    SolveReport rep = solve(p, bank);
    if (rep.status != SolveStatus::Solved || !rep.solution || !rep.witness) {
        o.fail("not solved: " + report_to_json(rep).dump());
        return o;
    }
    Net mother = only(p.subject);
    if (!verify_origin(*rep.witness, only(stored.subject), mother)) o.fail("witness does not verify");
    Problem fresh = load_problem(fixture("problem_chain.json"));
    auto check = check_solution(*rep.solution, fresh);
    if (!check.solution || check.product != rep.product) o.fail("check_solution rejects the product");
    // independent look at the product: each net holds a 1/1 node with the minted letter
    for (const auto& n : rep.product.nets()) {
        bool has = false;
        for (const auto& [id, x] : n.nodes()) has = has || (x.letter == "_m0" && x.in_rank == 1 && x.out_rank == 1);
        if (!has) o.fail("product lacks the recognized node:\n" + print_net(n));
        if (oracle::free_ports(n) != oracle::free_ports(mother)) o.fail("product changed the unoccupied ports");
    }
    auto first = report_to_json(rep);
    for (int i = 0; i < 5; ++i)
        if (report_to_json(solve(p, bank)) != first) o.fail("library run " + std::to_string(i) + " differs");

    fs::path mem = fs::temp_directory_path() / "netrw_acceptance_memory";
    fs::remove_all(mem);
    std::string cd = "cd '" + std::string(NETRW_FIXTURES) + "' && '" + g_cli + "' --seed 7 ";
    int st = 0;
    run_capture(cd + "memory add --problem problem_c1.json --td td_relabel.json --memory '" + mem.string() + "'", &st);
    if (st != 0) o.fail("cli memory add failed");
    std::string ref;
    for (int i = 0; i < 5; ++i) {
        std::string out = run_capture(cd + "--json solve run --problem problem_chain.json --memory '" + mem.string() + "'",
                                      &st);
        if (st != 0) o.fail("cli solve run exit " + std::to_string(st));
        if (i == 0) ref = out;
        else if (out != ref) o.fail("cli run " + std::to_string(i) + " differs");
    }
    fs::remove_all(mem);
    o.detail += (o.detail.empty() ? "" : "\n") + std::string("via ") + rep.via;
    return o;
}

Outcome cli_contract() {
    Outcome o;
    std::string cmd = std::string("'") + NETRW_PYTHON + "' '" + NETRW_CLI_CHECK + "' '" + g_cli + "' '" +
                      NETRW_FIXTURES + "' '" + NETRW_SCHEMAS + "'";
    int st = 0;
    std::string out = run_capture(cmd + " 2>&1", &st);
    std::string last;
    std::istringstream lines(out);
    for (std::string l; std::getline(lines, l);) {
        if (l.rfind("FAIL", 0) == 0) o.fail(l);
        last = l;
    }
    if (st != 0) o.fail("cli_check exit " + std::to_string(st) + ": " + last);
    if (o.pass) o.detail = last;
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance CLI\n";
        return 3;
    }
    g_cli = fs::absolute(argv[1]).string();
    struct Criterion {
        int id;
        std::string name;
        double limit_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> all{
        {1, "one-step application equals the splice oracle (300 cases)", 60, one_step_oracle},
        {2, "contraction round trip recovers the substance (200 cases)", 60, roundtrip_recovers},
        {3, "partition and cover steps keep unoccupied port counts (500 steps)", 0, delta_invariance},
        {4, "unequal port counts: not sisters, no origin up to 5 nodes", 0, unequal_delta_not_sisters},
        {5, "sister pairs yield verified common origins", 0, sisters_have_origins},
        {6, "macro equation and micro recovery (100 built macros)", 120, macro_equation},
        {7, "parallel transducers keep results sisters", 0, parallel_preservation},
        {8, "cover iff induced refinement is a partition (exhaustive, 4 nodes)", 0, cover_correlation},
        {9, "distinct systems invert exactly, shared right sides give supersets", 0, distinct_round_trips},
        {10, "boolean evaluation equals truth tables, cyclic fixpoints bounded", 0, realization_differential},
        {11, "memory transfer solve passes an independent check, deterministic", 0, solver_end_to_end},
        {12, "CLI print stability, JSON schemas and exit codes", 0, cli_contract},
    };
    int failed = 0;
    for (const auto& c : all) {
        auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        double s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (c.limit_s > 0 && s >= c.limit_s) o.fail("took " + std::to_string(s) + " s");
        failed += !o.pass;
        std::printf("%s %2d %s (%.2f s)%s%s\n", o.pass ? "PASS" : "FAIL", c.id, c.name.c_str(), s,
                    o.detail.empty() ? "" : ": ", o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("acceptance: %d/%zu passed\n", static_cast<int>(all.size()) - failed, all.size());
    return failed ? 1 : 0;
}
