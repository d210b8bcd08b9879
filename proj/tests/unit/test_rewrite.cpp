#include "doctest.h"
#include "fixtures.hpp"
#include "netrw/rewrite.hpp"
#include "oracle.hpp"

using namespace netrw;

namespace {

Net d1h() {
    return parse_net("net D1h { node n1 h in=2 out=1\n node n2 a in=0 out=1\n edge n2:out:0 -- n1:in:0 }");
}

Net f_of_x() {
    return parse_net("net fx { node n1 f in=2 out=1\n var v x\n edge v:out:0 -- n1:in:0 }");
}

Net a_node() { return parse_net("net a { node m a in=0 out=1 }"); }

std::vector<Net> nets_of(const Jungle& j) { return j.nets(); }

}  // namespace

TEST_CASE("substitution and instances") {
    Binding b;
    b["x"] = TiedNet{a_node(), PortRef{"m", Dir::Out, 0}};
    CHECK(nets_equal(apply_substitution(b, f_of_x()), fx::d1()));

    Binding empty;
    empty["x"] = TiedNet{};
    Net bare = apply_substitution(empty, f_of_x());
    CHECK(bare.size() == 1);
    CHECK_FALSE(bare.occupied({"n1", Dir::In, 0}));

    Binding wrong;
    wrong["x"] = TiedNet{parse_net("net s { node m s in=1 out=0 }"), PortRef{"m", Dir::In, 0}};
    try {
        apply_substitution(wrong, f_of_x());
        FAIL("expected DirectionMismatch");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::DirectionMismatch);
    }
    Binding noport;
    noport["x"] = TiedNet{a_node(), std::nullopt};
    try {
        apply_substitution(noport, f_of_x());
        FAIL("expected NoFreePortOnImage");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::NoFreePortOnImage);
    }

    auto inst = is_instance(fx::d1(), f_of_x(), 1);
    CHECK(inst.instance);
    REQUIRE(inst.binding.count("x"));
    CHECK(nets_equal(inst.binding["x"].net, a_node()));
    CHECK_FALSE(is_instance(fx::d2(), f_of_x(), 3).instance);
}

TEST_CASE("find_matches examples") {
    auto m = find_matches(fx::r1(), Jungle{fx::d1()});
    REQUIRE(m.size() == 1);
    CHECK(m[0].redex == std::set<std::string>{"n1"});
    CHECK(find_matches(fx::r1(), Jungle{fx::d2()}).empty());

    auto doc = parse_document(R"(
rule P { preform { left { node x p in=1 out=1
  tag i x:in:0
  tag o x:out:0 } right { node x p in=1 out=1
  tag i x:in:0
  tag o x:out:0 } } }
)");
    auto pm = find_matches(doc.rules.at("P"), Jungle{fx::d2()});
    REQUIRE(pm.size() == 1);
    CHECK(pm[0].redex == std::set<std::string>{"n1"});
}

TEST_CASE("apply examples agree with the splice oracle") {
    Jungle r = apply(fx::r1(), Jungle{fx::d1()});
    REQUIRE(r.size() == 1);
    CHECK(nets_equal(r.nets()[0], d1h()));
    CHECK(oracle::same_set(nets_of(r), oracle::one_step(fx::r1(), fx::d1())));
    CHECK(delta_d(r) == delta_d(fx::d1()));

    CHECK(apply(fx::r1(), Jungle{fx::d2()}) == Jungle{fx::d2()});
    Rule id = fx::relabel("I", "f", "f", 2, 1);
    CHECK(apply(id, Jungle{fx::d1()}) == Jungle{fx::d1()});
}

TEST_CASE("variables bind whole hanging subnets and outside loops block matches") {
    auto doc = parse_document(R"(
rule G { preform {
  left { node x g in=1 out=1
    var v y
    edge v:out:0 -- x:in:0
    tag o x:out:0 }
  right { node x k in=1 out=1
    var v y
    edge v:out:0 -- x:in:0
    tag o x:out:0 } } }
net chain { node a a in=0 out=1
  node b b in=1 out=1
  node c g in=1 out=1
  edge a:out:0 -- b:in:0
  edge b:out:0 -- c:in:0 }
net looped { node b b in=2 out=1
  node c g in=1 out=2
  edge b:out:0 -- c:in:0
  edge c:out:1 -- b:in:1 }
)");
    Rule g = doc.rules.at("G");
    auto m = find_matches(g, Jungle{doc.net("chain")});
    REQUIRE(m.size() == 1);
    CHECK(m[0].bound_nodes.at("y") == std::set<std::string>{"a", "b"});
    Jungle out = apply(g, Jungle{doc.net("chain")});
    CHECK(oracle::same_set(out.nets(), oracle::one_step(g, doc.net("chain"))));
    CHECK(out.nets()[0].size() == 3);
    CHECK(find_matches(g, Jungle{doc.net("looped")}).empty());
}

TEST_CASE("derive and normal forms") {
    Rns fh = fx::rns_of(fx::relabel("FH", "f", "h", 2, 1));
    Rns hf = fx::rns_of(fx::relabel("HF", "h", "f", 2, 1));
    auto d = derive({fh}, Jungle{fx::d1()}, 1);
    CHECK(d.reachable == (Jungle{fx::d1(), d1h()}));
    CHECK_FALSE(d.budget_exhausted);

    CHECK(derive({}, Jungle{fx::d1()}, 5).reachable == Jungle{fx::d1()});

    auto c = derive({fh, hf}, Jungle{fx::d1()}, 2);
    CHECK(c.reachable == (Jungle{fx::d1(), d1h()}));
    CHECK(c.cycle);

    // associativity of deriving sequences
    Rns hk = fx::rns_of(fx::relabel("HK", "h", "k", 2, 1));
    auto two = derive({fh, hk}, Jungle{fx::d1()}, 2).reachable;
    auto one_one = derive({fh, hk}, derive({fh, hk}, Jungle{fx::d1()}, 1).reachable, 1).reachable;
    CHECK(two == one_one);

    CHECK(normal_forms(fh, Jungle{fx::d1()}, 10) == Jungle{d1h()});
    CHECK(normal_forms(fh, Jungle{fx::d2()}, 10) == Jungle{fx::d2()});
    CHECK(is_irreducible(fh, fx::d2()));

    auto grow = parse_document(R"(
rule Grow { preform {
  left { node x p in=1 out=1
    tag i x:in:0
    tag o x:out:0 }
  right { node x p in=1 out=1
    node y e in=1 out=1
    edge x:out:0 -- y:in:0
    tag i x:in:0
    tag o y:out:0 } } }
)");
    try {
        normal_forms(fx::rns_of(grow.rules.at("Grow")), Jungle{fx::d2()}, 3);
        FAIL("expected BudgetExhausted");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::BudgetExhausted);
    }
    CHECK(derive({fx::rns_of(grow.rules.at("Grow"))}, Jungle{fx::d2()}, 2).budget_exhausted);
}

TEST_CASE("conditions") {
    Rns both = fx::rns_of(fx::relabel("FH", "f", "h", 2, 1));
    both.rules.push_back(fx::relabel("AB", "a", "b", 0, 1));
    CHECK(apply(both, Jungle{fx::d1()}).size() == 2);

    Rns ordered = both;
    ordered.conditions.push_back({ConditionKind::ApplyOrder, {"AB", "FH"}});
    Jungle o = apply(ordered, Jungle{fx::d1()});
    REQUIRE(o.size() == 1);
    CHECK(o.nets()[0].letters() == std::set<std::string>{"b", "f"});

    Rns guarded = both;
    guarded.conditions.push_back({ConditionKind::LettersOutside, {"a"}});
    try {
        apply(guarded, Jungle{fx::d1()});
        FAIL("expected ConditionViolated");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::ConditionViolated);
    }

    Rns fresh = fx::rns_of(fx::relabel("I", "f", "f", 2, 1));
    fresh.conditions.push_back({ConditionKind::FreshLetters, {}});
    CHECK_THROWS_AS(apply(fresh, Jungle{fx::d1()}), RewriteError);

    // two p-matches on a p-chain overlap through a two-node pattern; disjointness drops both
    auto doc = parse_document(R"(
rule PP { preform {
  left { node x p in=1 out=1
    node y p in=1 out=1
    edge x:out:0 -- y:in:0
    tag i x:in:0
    tag o y:out:0 }
  right { node x q in=1 out=1
    node y q in=1 out=1
    edge x:out:0 -- y:in:0
    tag i x:in:0
    tag o y:out:0 } } }
net ppp { node a p in=1 out=1
  node b p in=1 out=1
  node c p in=1 out=1
  edge a:out:0 -- b:in:0
  edge b:out:0 -- c:in:0 }
)");
    Rns pp = fx::rns_of(doc.rules.at("PP"));
    CHECK(find_matches(pp, Jungle{doc.net("ppp")}).size() == 2);
    pp.conditions.push_back({ConditionKind::RedexDisjoint, {}});
    CHECK(find_matches(pp, Jungle{doc.net("ppp")}).empty());

    Rns rb = fx::rns_of(fx::relabel("R", "f", "h", 2, 1));
    rb.rules[0].preforms[0].right = parse_net("net r { node x h in=2 out=1\n tag zz x:in:0 }");
    try {
        apply(rb, Jungle{fx::d1()});
        FAIL("expected BoundaryMismatch");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::BoundaryMismatch);
    }
}

TEST_CASE("rule typology") {
    auto c = classify_rule(fx::r1());
    for (const char* l : {"manoeuvre saving", "arity saving", "arity mightiness saving", "letter-count preserving",
                          "height saving", "totally linear", "manoeuvre mightiness saving"})
        CHECK_MESSAGE(c.labels.count(l), l);
    CHECK_FALSE(c.labels.count("identity"));
    CHECK_FALSE(c.labels.count("letter saving"));
    CHECK(c.monadic == Verdict::Yes);

    auto dup = parse_document(R"(
rule Dup { preform {
  left { node x f in=1 out=1
    var v x
    edge v:out:0 -- x:in:0
    tag o x:out:0 }
  right { node x h in=2 out=1
    var v x
    var w x
    edge v:out:0 -- x:in:0
    edge w:out:0 -- x:in:1
    tag o x:out:0 } } }
)");
    auto cd = classify_rule(dup.rules.at("Dup"));
    CHECK_FALSE(cd.labels.count("manoeuvre mightiness saving"));
    CHECK(cd.labels.count("X-manoeuvre mightiness increasing"));
    CHECK_FALSE(cd.labels.count("right linear"));
    CHECK(cd.labels.count("left linear"));

    auto ci = classify_rule(fx::relabel("I", "f", "f", 2, 1));
    for (const char* l : {"identity", "manoeuvre saving", "arity saving", "letter saving", "height saving",
                          "arity mightiness saving", "manoeuvre mightiness saving", "monadic"})
        CHECK_MESSAGE(ci.labels.count(l), l);

    Rule loop;
    loop.name = "L";
    loop.preforms.push_back({fx::d2(), fx::d2()});
    CHECK_THROWS_AS(classify_rule(loop), RewriteError);
    ClassifyOptions no_h;
    no_h.heights = false;
    CHECK(classify_rule(loop, no_h).labels.count("identity"));
}

TEST_CASE("inversion and relation systems") {
    Jungle fwd = apply(fx::r1(), Jungle{fx::d1()});
    CHECK(apply(invert_rule(fx::r1()), fwd) == Jungle{fx::d1()});
    CHECK(same_preforms(invert_rns(invert_rns(fx::r1_rns())), fx::r1_rns()));

    Rns a = rns_of_relation({{fx::d1(), Jungle{fx::d2()}}});
    Rns b = rns_of_relation({{fx::d2(), Jungle{fx::d1()}}});
    CHECK(same_preforms(invert_rns(a), b));
}

TEST_CASE("net homomorphisms") {
    CHECK(nets_equal(apply_net_homomorphism(HomTable{}, fx::d1()), fx::d1()));

    HomTable h;
    h.letters["f"] = HomImage{2, 1, parse_net(R"(net img { node g g in=2 out=1
      node k k in=1 out=1
      edge g:out:0 -- k:in:0
      tag i0 g:in:0
      tag i1 g:in:1
      tag o0 k:out:0 })")};
    Net out = apply_net_homomorphism(h, fx::d1());
    CHECK(out.size() == 3);
    CHECK(out.edges().size() == 2);
    auto labels = classify_homomorphism(h);
    CHECK(labels.count("down preserving"));
    CHECK(labels.count("down linear"));

    HomTable del;
    del.letters["f"] = HomImage{2, 1, parse_net("net img { node g g in=1 out=1\n tag i0 g:in:0\n tag o0 g:out:0 }")};
    CHECK(classify_homomorphism(del).count("down deleting"));
    HomTable del2 = del;
    del2.letters["f"].image = parse_net("net img { node g g in=1 out=1\n tag i1 g:in:0\n tag o0 g:out:0 }");
    del2.preserving = true;
    try {
        apply_net_homomorphism(del2, fx::d1());
        FAIL("expected PlaceholderArityMismatch");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::PlaceholderArityMismatch);
    }
}

TEST_CASE("transducers") {
    CHECK(apply_transducer(single_stage(fx::r1_rns()), Jungle{fx::d1()}) == Jungle{d1h()});
    CHECK(apply_transducer(Transducer{}, Jungle{fx::d1(), fx::d2()}) == (Jungle{fx::d1(), fx::d2()}));

    Transducer two;
    two.stages.push_back({"fh", {fx::rns_of(fx::relabel("FH", "f", "h", 2, 1))}, 1, false});
    two.stages.push_back({"hk", {fx::rns_of(fx::relabel("HK", "h", "k", 2, 1))}, 1, false});
    Jungle k = apply_transducer(two, Jungle{fx::d1()});
    REQUIRE(k.size() == 1);
    CHECK(k.nets()[0].letters() == std::set<std::string>{"a", "k"});
    CHECK(apply_transducer(normal_form_td(two), Jungle{fx::d1()}) == k);

    auto grow = parse_document(R"(
rule Grow { preform {
  left { node x p in=1 out=1
    tag i x:in:0
    tag o x:out:0 }
  right { node x p in=1 out=1
    node y e in=1 out=1
    edge x:out:0 -- y:in:0
    tag i x:in:0
    tag o y:out:0 } } }
)");
    Transducer g;
    g.stages.push_back({"grow", {fx::rns_of(grow.rules.at("Grow"))}, 2, true});
    try {
        apply_transducer(g, Jungle{fx::d2()});
        FAIL("expected StageBudgetExhausted");
    } catch (const RewriteError& e) {
        CHECK(e.kind() == RewriteErrorKind::StageBudgetExhausted);
        CHECK(e.stage() == "grow");
    }
}
