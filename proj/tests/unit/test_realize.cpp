#include <functional>
#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "netrw/netf.hpp"
#include "netrw/realize.hpp"
#include "oracle.hpp"

using namespace netrw;

namespace {

AlgebraSpec boolean() { return load_algebra(std::string(NETRW_FIXTURES) + "/bool.json"); }

// Truth-table reference: recursive gate evaluation straight from the edges.
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

}  // namespace

TEST_CASE("boolean gates and projection") {
    AlgebraSpec b = boolean();
    Net and_net = fx::parse("net t { var x1 x\n var x2 y\n node g and in=2 out=1\n edge x1:out:0 -- g:in:0\n edge x2:out:0 -- g:in:1 }");
    auto ev = evaluate(and_net, b, {{{"x1", Dir::In, 0}, "1"}, {{"x2", Dir::In, 0}, "0"}});
    CHECK(ev.outputs.at({"g", Dir::Out, 0}) == ValueSet{"0"});

    Net v = fx::parse("net v { var x x }");
    auto pv = evaluate(v, b, {{{"x", Dir::In, 0}, "1"}});
    CHECK(pv.outputs.at({"x", Dir::Out, 0}) == ValueSet{"1"});

    auto loop = evaluate(fx::d2(), b, {});
    CHECK_FALSE(loop.acyclic);
    CHECK(loop.iterations == 1);
    for (const auto& [p, s] : loop.all_out) CHECK(s.empty());

    try {
        evaluate(and_net, b, {{{"x1", Dir::In, 0}, "1"}});
        FAIL("expected MissingInput");
    } catch (const RealizeError& e) {
        CHECK(e.kind() == RealizeErrorKind::MissingInput);
    }
    CHECK_THROWS_AS(evaluate(fx::d1(), b, {{{"n1", Dir::In, 1}, "1"}}), RealizeError);
}

TEST_CASE("evaluation against truth tables") {
    AlgebraSpec b = boolean();
    std::mt19937 rng(17);
    std::vector<oracle::Letter> gates{{"and", 2, 1}, {"or", 2, 1}, {"xor", 2, 1}, {"nand", 2, 1}, {"not", 1, 1}, {"one", 0, 1}};
    int tested = 0;
    while (tested < 60) {
        Net t = oracle::random_net(rng, gates, 6);
        if (oracle::height(t) < 0) continue;
        ++tested;
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
            auto ev = evaluate(t, b, values);
            for (const auto& [p, s] : ev.outputs) CHECK(s == ValueSet{truth(t, p, bits) ? "1" : "0"});
        }
    }
}

TEST_CASE("cyclic fixpoints stay within the iteration bound") {
    AlgebraSpec b = boolean();
    std::vector<Net> cyclic{
        fx::d2(),
        fx::parse("net c { node a or in=2 out=1\n node i id in=1 out=1\n edge a:out:0 -- i:in:0\n edge i:out:0 -- a:in:1 }"),
        fx::parse("net c { node a or in=2 out=1\n node n not in=1 out=1\n node o one in=0 out=1\n"
                  " edge o:out:0 -- a:in:0\n edge a:out:0 -- n:in:0\n edge n:out:0 -- a:in:1 }"),
        fx::parse("net c { node a or in=2 out=1\n node n not in=1 out=1\n edge a:out:0 -- n:in:0\n edge n:out:0 -- a:in:1 }"),
    };
    for (const auto& t : cyclic) {
        std::map<PortRef, Value> in;
        for (const auto& p : t.unoccupied_ports())
            if (p.dir == Dir::In) in[p] = "1";
        auto ev = evaluate(t, b, in);
        CHECK_FALSE(ev.acyclic);
        CHECK(ev.iterations - 1 <= static_cast<int>(b.carrier.size() * t.size()));
    }
    auto seeded = evaluate(cyclic[2], b, {});
    CHECK(seeded.all_out.at({"a", Dir::Out, 0}) == ValueSet{"1"});
    CHECK(seeded.all_out.at({"n", Dir::Out, 0}) == ValueSet{"0"});
    CHECK_THROWS_AS(evaluate(cyclic[2], b, {}, 1), RealizeError);
    // both input values accumulate around the loop
    auto both = evaluate_sets(cyclic[3], b, {{{"a", Dir::In, 0}, {"0", "1"}}});
    CHECK(both.all_out.at({"a", Dir::Out, 0}) == ValueSet{"0", "1"});
    CHECK(both.all_out.at({"n", Dir::Out, 0}) == ValueSet{"0", "1"});
}

TEST_CASE("up-context rows and set-valued tables") {
    AlgebraSpec a = parse_algebra_json(R"({
      "carrier": ["0", "1", "2"],
      "tables": {
        "s": {"entries": [{"in": [], "out": ["1"]}]},
        "t": {"entries": [{"in": [], "out": ["2"]}]},
        "m": {"entries": [{"in": ["*"], "up": [["s", 0]], "out": [["0", "1"]]},
                          {"in": ["*"], "up": [["t", 0]], "out": ["2"]}]}
      }})");
    Net from_s = fx::parse("net x { node a s in=0 out=1\n node b m in=1 out=1\n edge a:out:0 -- b:in:0 }");
    Net from_t = fx::parse("net x { node a t in=0 out=1\n node b m in=1 out=1\n edge a:out:0 -- b:in:0 }");
    CHECK(evaluate(from_s, a, {}).outputs.at({"b", Dir::Out, 0}) == ValueSet{"0", "1"});
    CHECK(evaluate(from_t, a, {}).outputs.at({"b", Dir::Out, 0}) == ValueSet{"2"});
    AlgebraSpec again = parse_algebra_json(algebra_to_json(a));
    CHECK(algebra_to_json(again) == algebra_to_json(a));
    CHECK_THROWS_AS(parse_algebra_json(R"({"carrier":["0"],"tables":{"s":{"entries":[{"in":[],"out":["7"]}]}}})"),
                    RealizeError);
}

TEST_CASE("homomorphic extension") {
    AlgebraSpec b = boolean();
    Net and_net = fx::parse("net t { var x1 x\n var x2 y\n node g and in=2 out=1\n edge x1:out:0 -- g:in:0\n edge x2:out:0 -- g:in:1 }");
    auto h = hom_extend({{"x", "1"}, {"y", "1"}}, and_net, b);
    auto ev = evaluate(and_net, b, {{{"x1", Dir::In, 0}, "1"}, {{"x2", Dir::In, 0}, "1"}});
    CHECK(h == ev.outputs);
    Net ground = fx::parse("net g { node c one in=0 out=1 }");
    CHECK(hom_extend({{"one", "0"}}, ground, b).at({"c", Dir::Out, 0}) == ValueSet{"0"});
    try {
        hom_extend({{"x", "1"}}, and_net, b);
        FAIL("expected GeneratorUnmapped");
    } catch (const RealizeError& e) {
        CHECK(e.kind() == RealizeErrorKind::GeneratorUnmapped);
    }

    // a value bijection between two presentations of the boolean algebra
    std::map<Value, Value> flip{{"0", "F"}, {"1", "T"}};
    AlgebraSpec named = b;
    named.carrier = {"F", "T"};
    for (auto& [letter, rows] : named.tables)
        for (auto& row : rows) {
            for (auto& v : row.in)
                if (v != kAny) v = flip.at(v);
            for (auto& s : row.out) {
                ValueSet m;
                for (const auto& v : s) m.insert(flip.at(v));
                s = m;
            }
        }
    std::mt19937 rng(2);
    std::vector<oracle::Letter> gates{{"and", 2, 1}, {"xor", 2, 1}, {"not", 1, 1}, {"one", 0, 1}};
    for (int i = 0; i < 30; ++i) {
        Net t = oracle::random_net(rng, gates, 5);
        if (oracle::height(t) < 0) continue;
        Generators g0, g1;
        for (const auto& p : t.unoccupied_ports())
            if (p.dir == Dir::In) {
                Value v = (i + p.index) % 2 ? "1" : "0";
                g0[port_tag_name(p)] = v;
                g1[port_tag_name(p)] = flip.at(v);
            }
        auto x = hom_extend(g0, t, b), y = hom_extend(g1, t, named);
        for (const auto& [p, s] : x) {
            ValueSet m;
            for (const auto& v : s) m.insert(flip.at(v));
            CHECK(y.at(p) == m);
        }
        std::map<PortRef, Value> in;
        for (const auto& p : t.unoccupied_ports())
            if (p.dir == Dir::In) in[p] = g0.at(port_tag_name(p));
        CHECK(evaluate(t, b, in).outputs == x);
    }
}

TEST_CASE("free generation") {
    Alphabet sigma;
    sigma.ranked["f"] = {2, 1};
    sigma.ranked["a"] = {0, 1};
    Net a = fx::parse("net a { node x a in=0 out=1 }");
    auto g0 = generated_closure({a}, sigma, 0);
    CHECK(g0.nets.size() == 1);
    auto g1 = generated_closure({a}, sigma, 1);
    // a, f, f(a,_), f(_,a), f(a,a)
    CHECK(g1.nets.size() == 5);
    std::size_t prev = 0;
    for (int d = 0; d <= 3; ++d) {
        auto g = generated_closure({a}, sigma, d, 9);
        Jungle j(g.nets);
        if (d > 0) CHECK(j.includes(Jungle(generated_closure({a}, sigma, d - 1, 9).nets)));
        CHECK(g.nets.size() >= prev);
        prev = g.nets.size();
        for (const auto& n : g.nets) CHECK(nets_equal(parse_net(print_net(n.renamed("g"))), n));
    }
}
