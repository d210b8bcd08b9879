#include <random>

#include "doctest.h"
#include "fixtures.hpp"
#include "netrw/abstraction.hpp"
#include "netrw/netf.hpp"
#include "oracle.hpp"

using namespace netrw;

namespace {

Net only(const Jungle& j) {
    REQUIRE(j.size() == 1);
    return j.nets().front();
}

const std::vector<oracle::Letter> kLetters{{"a", 0, 1}, {"f", 2, 1}, {"g", 1, 1}, {"h", 1, 2}, {"k", 1, 0}};

}  // namespace

TEST_CASE("two-block and one-block contraction of D1") {
    Net d1 = fx::d1();
    Prns two = synthesize_prns(d1, PartitionSpec{{{"n1"}, {"n2"}}});
    CHECK(two.rns.rules.size() == 2);
    CHECK(validate_rns_type(two.rns, RnsType::PRNS, Jungle{d1}).valid());
    Net c2 = only(concept_of(Jungle{d1}, two.rns));
    CHECK(c2.size() == 2);
    CHECK(c2.edges().size() == 1);
    auto [t2, i2, o2] = oracle::free_ports(c2);
    CHECK(t2 == 2);
    for (const auto& [id, n] : c2.nodes()) CHECK(n.letter.rfind("_w", 0) == 0);

    Prns one = synthesize_prns(d1, PartitionSpec{{{"n1", "n2"}}});
    CHECK(one.rns.rules.size() == 1);
    Net c1 = only(concept_of(Jungle{d1}, one.rns));
    CHECK(c1.size() == 1);
    auto [t1, i1, o1] = oracle::free_ports(c1);
    CHECK(i1 == 1);
    CHECK(o1 == 1);

    try {
        synthesize_prns(d1, PartitionSpec{{{"n1"}, {"n1"}}});
        FAIL("expected NotAPartition");
    } catch (const AbstractionError& e) {
        CHECK(e.kind() == AbstractionErrorKind::NotAPartition);
    }
    Net gap = fx::parse("net g { node x a in=0 out=1\n node y k in=1 out=0\n node z g in=1 out=1\n edge x:out:0 -- z:in:0\n edge z:out:0 -- y:in:0 }");
    try {
        synthesize_prns(gap, PartitionSpec{{{"x", "y"}, {"z"}}});
        FAIL("expected DisconnectedBlock");
    } catch (const AbstractionError& e) {
        CHECK(e.kind() == AbstractionErrorKind::DisconnectedBlock);
    }
}

TEST_CASE("roundtrip recovers the substance") {
    Net d1 = fx::d1();
    Prns two = synthesize_prns(d1, PartitionSpec{{{"n1"}, {"n2"}}});
    CHECK(oracle::iso(only(roundtrip(Jungle{d1}, two.rns)), d1));
    CHECK(concept_of(Jungle{}, two.rns).empty());

    Net d2 = fx::d2();
    Prns whole = synthesize_prns(d2, PartitionSpec{{{"n1", "n2"}}});
    Net c = only(concept_of(Jungle{d2}, whole.rns));
    CHECK(c.size() == 1);
    CHECK(c.edges().empty());
    CHECK(delta_d(c) == delta_d(d2));
    CHECK(oracle::iso(only(roundtrip(Jungle{d2}, whole.rns)), d2));

    std::mt19937 rng(7);
    for (int i = 0; i < 40; ++i) {
        Net t = oracle::random_net(rng, kLetters, 6);
        auto p = oracle::random_partition(rng, t);
        Prns w = synthesize_prns(t, p);
        INFO(print_net(t), to_string(p));
        CHECK(validate_rns_type(w.rns, RnsType::PRNS, Jungle{t}).valid());
        Net cn = only(concept_of(Jungle{t}, w.rns));
        CHECK(oracle::free_ports(cn) == oracle::free_ports(t));
        CHECK(cn.size() == p.blocks.size());
        CHECK(oracle::iso(only(roundtrip(Jungle{t}, w.rns)), t));
    }
}

TEST_CASE("validation reports failing conditions") {
    auto rep = validate_rns_type(fx::r1_rns(), RnsType::PRNS, Jungle{fx::d1()});
    CHECK_FALSE(rep.valid());
    bool fresh_failed = false;
    for (const auto& c : rep.checks)
        if (c.condition.find("fresh-letters") != std::string::npos) fresh_failed = !c.pass;
    CHECK(fresh_failed);

    // two preforms sharing one right side
    Rns dup = parse_document(R"(
rns dup {
  condition fresh-letters
  rule A { preform { left { node x a in=0 out=1
 tag o x:out:0 } right { node y b in=0 out=1
 tag o y:out:0 } } }
  rule B { preform { left { node x c in=0 out=1
 tag o x:out:0 } right { node y b in=0 out=1
 tag o y:out:0 } } }
}
)").rns("dup");
    Net host = fx::parse("net h { node p a in=0 out=1\n node q c in=0 out=1 }");
    auto gcd = validate_rns_type(dup, RnsType::GCdRNS, Jungle{host});
    CHECK_FALSE(gcd.valid());
    CHECK(gcd.checks.back().counterexamples == std::vector<std::string>{"A", "B"});
    CHECK(validate_rns_type(dup, RnsType::GCRNS, Jungle{host}).checks.back().pass);
}

TEST_CASE("characterization against an exhaustive partition scan") {
    Net d1 = fx::d1();
    Prns two = synthesize_prns(d1, PartitionSpec{{{"n1"}, {"n2"}}});
    auto yes = characterization_check(d1, only(concept_of(Jungle{d1}, two.rns)));
    CHECK(yes.holds);
    REQUIRE(yes.witness);
    CHECK(yes.witness->blocks.size() == 2);

    CHECK_FALSE(characterization_check(d1, fx::parse("net b { node z q in=2 out=1 }")).holds);
    CHECK_FALSE(characterization_check(d1, fx::parse("net b { node z f in=1 out=1 }")).holds);

    // oracle: some connected partition has exactly the node profile multiset of b
    std::mt19937 rng(11);
    for (int i = 0; i < 30; ++i) {
        Net a = oracle::random_net(rng, kLetters, 5);
        Net b = oracle::random_net(rng, {{"_p", 1, 1}, {"_q", 0, 2}, {"_r", 2, 0}, {"_s", 1, 2}}, 3);
        std::vector<std::pair<int, int>> want;
        for (const auto& [id, n] : b.nodes()) want.push_back({n.in_rank, n.out_rank});
        std::sort(want.begin(), want.end());
        std::vector<std::string> items;
        for (const auto& [id, n] : a.nodes()) items.push_back(id);
        bool expect = false;
        for (const auto& part : oracle::set_partitions(items)) {
            std::vector<std::pair<int, int>> got;
            bool ok = part.size() == want.size();
            for (const auto& blk : part) {
                std::set<std::string> s(blk.begin(), blk.end());
                ok = ok && oracle::connected(a, s);
                int in = 0, out = 0;
                for (const auto& id : s) {
                    const Node& n = a.node(id);
                    for (int k = 0; k < n.in_rank; ++k) {
                        auto q = a.partner({id, Dir::In, k});
                        in += !q || !s.count(q->node);
                    }
                    for (int k = 0; k < n.out_rank; ++k) {
                        auto q = a.partner({id, Dir::Out, k});
                        out += !q || !s.count(q->node);
                    }
                }
                got.push_back({in, out});
            }
            std::sort(got.begin(), got.end());
            expect = expect || (ok && got == want);
        }
        INFO(print_net(a), print_net(b));
        CHECK(characterization_check(a, b).holds == expect);
    }

    RawNet big;
    for (int i = 0; i < 13; ++i) big.nodes["v" + std::to_string(i)] = Node{"g", 1, 1, false};
    CHECK_THROWS_AS(characterization_check(validate_net(big), fx::c1()), AbstractionError);
}

TEST_CASE("abstract sisters") {
    Net d1 = fx::d1(), d2 = fx::d2(), c1 = fx::c1();
    CHECK(abstract_sisters(d1, c1, SisterMode::Total));
    CHECK(abstract_sisters(d1, c1, SisterMode::Split));
    CHECK_FALSE(abstract_sisters(d1, d2, SisterMode::Total));
    CHECK(abstract_sisters(d1, d1, SisterMode::Split));
    Net two_in = fx::parse("net s { node x m in=2 out=0 }");
    CHECK(abstract_sisters(d1, two_in, SisterMode::Total));
    CHECK_FALSE(abstract_sisters(d1, two_in, SisterMode::Split));
}

TEST_CASE("common origin search") {
    Net c1 = fx::c1();
    Net single = fx::parse("net b { node y _z in=1 out=1 }");
    auto r1 = search_common_origin(c1, single);
    REQUIRE(r1.witness);
    CHECK(r1.witness->origin.size() == 1);
    CHECK(verify_origin(*r1.witness, c1, single));

    Net chain = fx::parse("net b { node p u in=1 out=1\n node q v in=1 out=1\n edge p:out:0 -- q:in:0 }");
    auto r2 = search_common_origin(c1, chain);
    REQUIRE(r2.witness);
    CHECK(r2.witness->origin.size() == 2);
    CHECK(r2.witness->origin.edges().size() == 1);
    CHECK(r2.witness->w_a.rns.rules.size() == 1);
    CHECK(r2.witness->w_b.rns.rules.size() == 2);
    CHECK(verify_origin(*r2.witness, c1, chain));
    CHECK(nets_equal(only(concept_of(Jungle{r2.witness->origin}, r2.witness->w_b.rns)), chain));

    try {
        search_common_origin(fx::d1(), fx::d2());
        FAIL("expected NotSisters");
    } catch (const AbstractionError& e) {
        CHECK(e.kind() == AbstractionErrorKind::NotSisters);
    }
    OriginSearchOptions no_pre;
    no_pre.precheck = false;
    no_pre.max_origin_nodes = 4;
    CHECK(search_common_origin(fx::d1(), fx::d2(), no_pre).exhausted());

    std::mt19937 rng(3);
    int found = 0;
    for (int i = 0; i < 12; ++i) {
        Net a = oracle::random_net(rng, kLetters, 3);
        auto [t, in, out] = oracle::free_ports(a);
        Net b = oracle::random_net_with_split(rng, {{"p", 1, 1}, {"q", 2, 1}, {"s", 0, 1}, {"u", 1, 0}, {"v", 1, 2}}, 2,
                                              in, out);
        if (b.empty()) continue;
        auto r = search_common_origin(a, b);
        if (!r.witness) continue;
        ++found;
        INFO(print_net(a), print_net(b));
        CHECK(verify_origin(*r.witness, a, b));
        CHECK(oracle::iso(only(concept_of(Jungle{r.witness->origin}, r.witness->w_a.rns)), a));
        CHECK(oracle::iso(only(concept_of(Jungle{r.witness->origin}, r.witness->w_b.rns)), b));
    }
    CHECK(found > 0);
}

TEST_CASE("cover systems convert to partition systems") {
    Net d1 = fx::d1();
    auto doc = parse_document(R"(
rns cover {
  condition fresh-letters
  rule C { preform {
    left { node n1 f in=2 out=1
 node n2 a in=0 out=1
 edge n2:out:0 -- n1:in:0 }
    right { node m _c in=1 out=1 } } }
}
rns wide {
  condition fresh-letters
  rule C { preform {
    left { node n1 f in=2 out=1
 node n2 a in=0 out=1
 edge n2:out:0 -- n1:in:0 }
    right { node m _c in=1 out=0
 node k _d in=0 out=1 } } }
}
rns shared {
  rule C { preform {
    left { node n1 f in=2 out=1
 node n2 a in=0 out=1
 edge n2:out:0 -- n1:in:0 }
    right { node m f in=1 out=1 } } }
}
)");
    auto ok = crns_to_prns(Crns{doc.rns("cover"), std::nullopt}, Jungle{d1});
    REQUIRE(std::holds_alternative<Prns>(ok));
    const Prns& w = std::get<Prns>(ok);
    CHECK(w.rns.rules.size() == 1);
    CHECK(normal_forms(w.rns, Jungle{d1}, 4) == normal_forms(doc.rns("cover"), Jungle{d1}, 4));

    auto wide = crns_to_prns(Crns{doc.rns("wide"), std::nullopt}, Jungle{d1});
    CHECK(std::holds_alternative<NotConvertible>(wide));
    auto shared = crns_to_prns(Crns{doc.rns("shared"), std::nullopt}, Jungle{d1});
    REQUIRE(std::holds_alternative<NotConvertible>(shared));
    CHECK(std::get<NotConvertible>(shared).rule == "C");
}

TEST_CASE("colouring overlaps") {
    Net d1 = fx::d1();
    Prns whole = synthesize_prns(d1, PartitionSpec{{{"n1", "n2"}}});
    Rns w;
    w.name = "w";
    Rule rule;
    rule.name = "R";
    Net contracted = only(concept_of(Jungle{d1}, whole.rns));
    rule.preforms.push_back({d1, fx::parse("net r { node s " + contracted.nodes().begin()->second.letter +
                                           " in=1 out=1\n node t g in=1 out=1\n edge s:out:0 -- t:in:0 }")});
    w.rules.push_back(rule);
    auto res = colouring_overlaps(w, {{"R", whole.rns}}, d1);
    REQUIRE(res.coloured.count("R"));
    CHECK(oracle::iso(only(res.coloured.at("R")), contracted));
    CHECK(res.cross_colouring);

    auto none = colouring_overlaps(w, {{"R", whole.rns}}, fx::d2());
    CHECK(none.coloured.empty());
    CHECK(none.cross_colouring);

    w.rules[0].preforms[0].right = fx::parse("net r { node s g in=1 out=1 }");
    auto bad = colouring_overlaps(w, {{"R", whole.rns}}, d1);
    CHECK_FALSE(bad.cross_colouring);
    CHECK(bad.failing == std::vector<std::string>{"R"});
}

TEST_CASE("partition systems read back from text keep their blocks") {
    std::mt19937 rng(44);
    for (int i = 0; i < 30; ++i) {
        Net t = oracle::random_net(rng, kLetters, 6);
        if (t.size() == 0) continue;
        Prns w = synthesize_prns(t, oracle::random_partition(rng, t));
        Document d = parse_document(print_rns(w.rns));
        REQUIRE(d.rnss.count(w.rns.name) == 1);
        Prns back = prns_from_rns(d.rnss.at(w.rns.name));
        REQUIRE(back.blocks.size() == w.blocks.size());
        for (const BlockInfo& b : w.blocks) {
            const BlockInfo* r = back.block_of_rule(b.rule);
            REQUIRE(r != nullptr);
            CHECK(r->nodes == b.nodes);
            CHECK(r->concept_id == b.concept_id);
            CHECK(r->concept_node.letter == b.concept_node.letter);
            CHECK(r->in_ports.size() == b.in_ports.size());
            CHECK(r->out_ports.size() == b.out_ports.size());
        }
        CHECK(concept_of(Jungle{t}, back.rns) == concept_of(Jungle{t}, w.rns));
    }
}

TEST_CASE("a rule with two right nodes is not a contraction") {
    Document d = parse_document(
        "rule X {\n preform {\n left {\n node x f in=0 out=0\n }\n right {\n node y g in=0 out=0\n"
        " node z g in=0 out=0\n }\n }\n}\n");
    CHECK_THROWS_AS(prns_from_rns(d.rns("X")), AbstractionError);
}

TEST_CASE("distinct right sides means no overlap") {
    Net t = fx::parse("net t { node a g in=1 out=1\n node b m in=1 out=1\n node c m in=1 out=1\n"
                      " edge a:out:0 -- b:in:0\n edge b:out:0 -- c:in:0 }");
    auto sys = [](const std::string& c1, const std::string& c2) {
        return parse_document(
                   "rule G { preform { left { node x g in=1 out=1\n tag i x:in:0\n tag o x:out:0 }\n"
                   " right { node x " + c1 + " in=1 out=1\n tag i x:in:0\n tag o x:out:0 } } }\n"
                   "rule H { preform { left { node x m in=1 out=1\n node y m in=1 out=1\n edge x:out:0 -- y:in:0\n"
                   " tag i x:in:0\n tag o y:out:0 }\n"
                   " right { node x " + c2 + " in=1 out=1\n node y " + c2 + " in=1 out=1\n edge x:out:0 -- y:in:0\n"
                   " tag i x:in:0\n tag o y:out:0 } } }\n"
                   "rns C {\n condition fresh-letters\n rule G\n rule H\n}\n")
            .rns("C");
    };
    CHECK(validate_rns_type(sys("_c", "_d"), RnsType::GCdRNS, Jungle{t}).valid());
    auto shared = validate_rns_type(sys("_c", "_c"), RnsType::GCdRNS, Jungle{t});
    CHECK_FALSE(shared.valid());
    CHECK(validate_rns_type(sys("_c", "_c"), RnsType::GCRNS, Jungle{t}).valid());
}
