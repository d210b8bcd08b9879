#include "netrw/macro.hpp"

#include <algorithm>

namespace netrw {

const char* to_string(MacroErrorKind k) {
    switch (k) {
        case MacroErrorKind::RedexStraddlesUnsupported: return "RedexStraddlesUnsupported";
        case MacroErrorKind::ConstructionUnsupported: return "ConstructionUnsupported";
        case MacroErrorKind::NotInConceptAlphabet: return "NotInConceptAlphabet";
        case MacroErrorKind::ClosureViolation: return "ClosureViolation";
    }
    return "?";
}

MacroError::MacroError(MacroErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

namespace {

std::set<Edge> incident(const Net& n, const std::string& id) {
    std::set<Edge> out;
    for (const auto& e : n.edges())
        if (e.src == id || e.dst == id) out.insert(e);
    return out;
}

Net single(const Jungle& j, const std::string& what) {
    if (j.size() != 1)
        throw MacroError(MacroErrorKind::ConstructionUnsupported,
                         what + " has " + std::to_string(j.size()) + " nets where one was expected");
    return j.nets().front();
}

PortRef boundary_port(const BlockInfo& b, Dir d, int idx) {
    const auto& v = d == Dir::In ? b.in_ports : b.out_ports;
    return v.at(static_cast<std::size_t>(idx));
}

int index_in(const std::vector<PortRef>& v, const PortRef& p) {
    auto it = std::find(v.begin(), v.end(), p);
    return it == v.end() ? -1 : static_cast<int>(it - v.begin());
}

Rns one_rule(const Rns& r, const Rule& rule) {
    Rns out;
    out.name = r.name;
    out.rules.push_back(rule);
    out.conditions = r.conditions;
    return out;
}

Rule contraction_rule(const std::string& name, const Net& host, const std::set<std::string>& nodes,
                      const std::string& cid, const std::string& letter, BlockInfo& info) {
    info.rule = name;
    info.nodes = nodes;
    info.concept_id = cid;
    info.in_ports = block_boundary(host, nodes, Dir::In);
    info.out_ports = block_boundary(host, nodes, Dir::Out);
    info.concept_node = Node{letter, static_cast<int>(info.in_ports.size()), static_cast<int>(info.out_ports.size()), false};
    Net left = induced_subnet(host, nodes, TagPolicy::AllBoundary, false).renamed("");
    RawNet right;
    right.nodes[cid] = info.concept_node;
    for (std::size_t k = 0; k < info.in_ports.size(); ++k)
        right.tags[*left.tag_at(info.in_ports[k])] = {cid, Dir::In, static_cast<int>(k)};
    for (std::size_t k = 0; k < info.out_ports.size(); ++k)
        right.tags[*left.tag_at(info.out_ports[k])] = {cid, Dir::Out, static_cast<int>(k)};
    Rule r;
    r.name = name;
    r.preforms.push_back({left, validate_net(std::move(right))});
    return r;
}

}  // namespace

std::set<std::string> untouched_nodes(const Net& t, const Jungle& results) {
    std::set<std::string> out;
    auto nets = results.nets();
    for (const auto& [id, node] : t.nodes()) {
        bool same = true;
        auto inc = incident(t, id);
        for (const auto& u : nets) {
            same = same && u.has_node(id) && u.node(id) == node && incident(u, id) == inc;
            if (!same) break;
        }
        if (same) out.insert(id);
    }
    return out;
}

MacroResult build_macro(const Rns& micro, const Prns& w, const Net& t, const MacroOptions& opts) {
    MacroResult res;
    res.macro.name = micro.name + "_macro";
    res.macro.conditions.push_back({ConditionKind::RedexAnchored, {}});
    res.concept_net = single(concept_of(Jungle{t}, w.rns), "concept of the substance");
    for (const auto& b : w.blocks)
        if (!res.concept_net.has_node(b.concept_id))
            throw MacroError(MacroErrorKind::ConstructionUnsupported, "concept node " + b.concept_id + " moved");
    res.micro_results = normal_forms(micro, Jungle{t}, opts.budget);

    auto same = untouched_nodes(t, res.micro_results);
    std::set<std::string> kept_nodes, changed_concepts;
    std::vector<const BlockInfo*> kept;
    bool straddles = false;
    for (const auto& b : w.blocks) {
        bool untouched = std::all_of(b.nodes.begin(), b.nodes.end(), [&](const std::string& n) { return same.count(n); });
        if (untouched) {
            kept.push_back(&b);
            kept_nodes.insert(b.nodes.begin(), b.nodes.end());
        } else {
            changed_concepts.insert(b.concept_id);
            straddles = straddles || std::any_of(b.nodes.begin(), b.nodes.end(), [&](const std::string& n) { return same.count(n); });
        }
    }

    res.post.rns.name = w.rns.name + "0";
    res.post.rns.conditions = w.rns.conditions;
    for (const auto* b : kept) {
        res.post.rns.rules.push_back(*w.rns.rule(b->rule));
        res.post.blocks.push_back(*b);
    }
    if (changed_concepts.empty()) {
        res.post = w;
        return res;
    }

    FreshMinter fm(opts.letter_prefix);
    fm.avoid(t);
    fm.avoid(res.micro_results);
    fm.avoid(res.concept_net);
    for (const auto& l : w.concept_letters()) fm.avoid(l);

    Net left = induced_subnet(res.concept_net, changed_concepts, TagPolicy::Severed, false).renamed("");
    std::map<std::string, std::pair<std::string, BlockInfo>> made;  // content key -> (rule name, block)
    std::size_t j = 0;
    for (const auto& u : res.micro_results.nets()) {
        std::set<std::string> region;
        for (const auto& [id, n] : u.nodes())
            if (!kept_nodes.count(id)) region.insert(id);
        Net region_net = induced_subnet(u, region, TagPolicy::None, false);
        std::map<std::string, std::string> comp_of;  // region node -> component concept id
        std::map<std::string, const BlockInfo*> comp_block;
        for (const auto& comp : components(region_net)) {
            std::string cid = *comp.begin();
            Net content = induced_subnet(u, comp, TagPolicy::AllBoundary, false);
            std::string key = to_string(PartitionSpec{{comp}}) + "|" + canonical_key(content, true);
            auto it = made.find(key);
            if (it == made.end()) {
                BlockInfo info;
                std::string name = w.rns.name + "0_" + std::to_string(made.size());
                Rule r = contraction_rule(name, u, comp, cid, fm.mint(), info);
                res.post.rns.rules.push_back(r);
                it = made.emplace(key, std::make_pair(name, info)).first;
            }
            for (const auto& n : comp) comp_of[n] = cid;
            comp_block[cid] = &it->second.second;
        }

        RawNet right;
        for (const auto& [cid, info] : comp_block) right.nodes[cid] = info->concept_node;
        for (const auto& [tag, p] : left.tags()) {
            auto q = res.concept_net.partner(p);
            const BlockInfo* outside = q ? w.block_of_concept(q->node) : nullptr;
            if (!outside)
                throw MacroError(MacroErrorKind::ConstructionUnsupported, "severed tag " + tag + " has no outside partner");
            auto there = u.partner(boundary_port(*outside, q->dir, q->index));
            if (!there || !comp_of.count(there->node)) {
                if (!there) continue;  // the result freed the port; the left tag then detaches
                throw MacroError(MacroErrorKind::ConstructionUnsupported, "tag " + tag + " lands outside the rewritten region");
            }
            const BlockInfo* blk = comp_block.at(comp_of.at(there->node));
            int k = index_in(there->dir == Dir::In ? blk->in_ports : blk->out_ports, *there);
            right.tags[tag] = {blk->concept_id, there->dir, k};
        }
        Rule mr;
        mr.name = opts.rule_prefix + std::to_string(j++);
        mr.preforms.push_back({left, validate_net(std::move(right))});
        res.macro.rules.push_back(mr);
        res.provenance[mr.name] = {canonical_key(u), changed_concepts};
    }
    for (const auto& [k, v] : made) res.post.blocks.push_back(v.second);

    // the concept of each result under post must be the macro image of the concept
    auto results = res.micro_results.nets();
    for (std::size_t i = 0; i < results.size(); ++i) {
        Jungle expected = apply(one_rule(res.macro, res.macro.rules[i]), Jungle{res.concept_net});
        Jungle got;
        try {
            got = concept_of(Jungle{results[i]}, res.post.rns);
        } catch (const RewriteError&) {
        }
        if (!(got == expected))
            throw MacroError(straddles ? MacroErrorKind::RedexStraddlesUnsupported : MacroErrorKind::ConstructionUnsupported,
                             "contraction of result " + std::to_string(i) + " does not match the macro image");
    }
    return res;
}

Rns solve_micro(const Rns& macro, const Prns& w, const Prns& w0, int budget) {
    Rns out;
    out.name = macro.name + "_micro";
    if (macro.rules.empty()) return out;
    out.conditions.push_back({ConditionKind::RedexAnchored, {}});
    Rns wi = invert_rns(w.rns), w0i = invert_rns(w0.rns);
    auto in_letters = w.concept_letters(), out_letters = w0.concept_letters();
    for (const auto& rule : macro.rules) {
        Rule mr;
        mr.name = rule.name;
        for (const auto& p : rule.preforms) {
            for (const auto& l : p.left.letters())
                if (!in_letters.count(l))
                    throw MacroError(MacroErrorKind::NotInConceptAlphabet, "left letter " + l + " of " + rule.name);
            for (const auto& l : p.right.letters())
                if (!out_letters.count(l))
                    throw MacroError(MacroErrorKind::NotInConceptAlphabet, "right letter " + l + " of " + rule.name);
            Net l = single(normal_forms(wi, Jungle{p.left}, budget), "substance of a macro left side");
            Net r = p.right.empty() ? p.right : single(normal_forms(w0i, Jungle{p.right}, budget), "substance of a macro right side");
            mr.preforms.push_back({l.renamed(""), r.renamed("")});
        }
        out.rules.push_back(std::move(mr));
    }
    return out;
}

MacroEquation verify_macro_equation(const Rns& w, const Rns& macro, const Rns& w0, const Rns& micro, const Jungle& t,
                                    int budget) {
    MacroEquation eq;
    try {
        Jungle image = normal_forms(w, t, budget);
        eq.left = normal_forms(invert_rns(w0), normal_forms(macro, image, budget), budget);
        eq.right = normal_forms(micro, t, budget);
    } catch (const RewriteError& e) {
        if (e.kind() != RewriteErrorKind::BudgetExhausted) throw;
        eq.verdict = Verdict::Unknown;
        eq.note = e.what();
        return eq;
    }
    eq.verdict = eq.left == eq.right ? Verdict::Yes : Verdict::No;
    return eq;
}

// ------------------------------------------------------------ parallel transducers

namespace {

struct Lifted {
    Rns rules;
    std::vector<Net> c_results;
    std::vector<Prns> wa_after;
};

// Moves the change a -> each result onto the origin c: the touched a-nodes'
// blocks are replaced by a copy of the new material under fresh letters.
Lifted lift_to_origin(const Net& a, const Jungle& results, const Net& c, const Prns& wa, FreshMinter& fm,
                      const std::string& name) {
    Lifted out;
    out.rules.name = name;
    out.rules.conditions.push_back({ConditionKind::RedexAnchored, {}});
    auto same = untouched_nodes(a, results);
    std::set<std::string> region_c;
    std::vector<const BlockInfo*> kept;
    for (const auto& b : wa.blocks) {
        if (same.count(b.concept_id)) kept.push_back(&b);
        else region_c.insert(b.nodes.begin(), b.nodes.end());
    }
    Net left = induced_subnet(c, region_c, TagPolicy::Severed, false).renamed("");

    std::set<std::string> used;
    for (const auto& [id, n] : c.nodes()) used.insert(id);
    for (const auto& [k, u] : results.by_key())
        for (const auto& [id, n] : u.nodes()) used.insert(id);

    std::size_t j = 0;
    for (const auto& u : results.nets()) {
        std::map<std::string, std::string> shadow;
        RawNet right;
        for (const auto& [id, n] : u.nodes()) {
            if (same.count(id)) continue;
            std::string sid = fresh_id("s" + id, used);
            used.insert(sid);
            shadow[id] = sid;
            right.nodes[sid] = Node{fm.mint(), n.in_rank, n.out_rank, false};
        }
        for (const auto& e : u.edges())
            if (shadow.count(e.src) && shadow.count(e.dst)) right.edges.insert({shadow[e.src], e.out, shadow[e.dst], e.in});
        for (const auto& [tag, p] : left.tags()) {
            auto q = c.partner(p);
            const BlockInfo* outside = nullptr;
            for (const auto* b : kept)
                if (q && b->nodes.count(q->node)) outside = b;
            if (!outside) throw MacroError(MacroErrorKind::ConstructionUnsupported, "severed tag " + tag + " has no kept partner");
            int k = index_in(q->dir == Dir::In ? outside->in_ports : outside->out_ports, *q);
            auto there = u.partner({outside->concept_id, q->dir, k});
            if (!there) continue;
            right.tags[tag] = {shadow.at(there->node), there->dir, there->index};
        }
        Net rnet = validate_net(std::move(right));
        Rule r;
        r.name = name + "_" + std::to_string(j++);
        r.preforms.push_back({left, rnet});
        Net cj = single(apply(one_rule(out.rules, r), Jungle{c}), "lifted result");
        out.rules.rules.push_back(r);

        std::vector<BlockTarget> targets;
        for (const auto* b : kept) targets.push_back({b->nodes, b->concept_id, b->concept_node.letter, b->in_ports, b->out_ports});
        for (const auto& [orig, sid] : shadow) {
            BlockTarget t;
            t.nodes = {sid};
            t.concept_id = orig;
            t.letter = u.node(orig).letter;
            for (int k = 0; k < u.node(orig).in_rank; ++k) t.in_ports.push_back({sid, Dir::In, k});
            for (int k = 0; k < u.node(orig).out_rank; ++k) t.out_ports.push_back({sid, Dir::Out, k});
            targets.push_back(std::move(t));
        }
        Prns wa_j;
        try {
            wa_j = contraction_prns(cj, targets, nullptr, wa.rns.name);
        } catch (const AbstractionError& e) {
            throw MacroError(MacroErrorKind::ConstructionUnsupported, std::string("origin contraction: ") + e.what());
        }
        Net back = single(concept_of(Jungle{cj}, wa_j.rns), "lifted concept");
        if (!nets_equal(back, u))
            throw MacroError(MacroErrorKind::ConstructionUnsupported, "lifted origin does not contract to the stage result");
        out.c_results.push_back(cj);
        out.wa_after.push_back(std::move(wa_j));
    }
    return out;
}

Transducer one_stage(const Stage& s) {
    Transducer td;
    td.stages.push_back(s);
    return td;
}

Net concept_single(const Net& c, const Prns& w) { return single(concept_of(Jungle{c}, w.rns), "concept"); }

}  // namespace

ParallelPair parallel_td(const Transducer& r, const OriginWitness& witness, const MacroOptions& opts) {
    ParallelPair pair;
    pair.micro = r;
    pair.witness = witness;
    pair.parallel.name = r.name + "_parallel";

    Net c = witness.origin;
    Prns wa = witness.w_a, wb = witness.w_b;
    Net a = concept_single(c, wa), b = concept_single(c, wb);
    FreshMinter fm("_s");
    for (std::size_t i = 0; i < r.stages.size(); ++i) {
        const Stage& s = r.stages[i];
        std::string sid = s.id.empty() ? "stage" + std::to_string(i) : s.id;
        ParallelStage rec{sid, a, b, c, wa, wb, {}, {}, false};
        Jungle results = apply_transducer(one_stage(s), Jungle{a});
        if (results == Jungle{a}) {
            rec.trivial = true;
            pair.stages.push_back(rec);
            continue;
        }
        if (results.contains(a))
            throw MacroError(MacroErrorKind::ConstructionUnsupported, sid + " may leave its input unchanged");
        fm.avoid(a);
        fm.avoid(b);
        fm.avoid(c);
        fm.avoid(results);
        Lifted lifted = lift_to_origin(a, results, c, wa, fm, "L" + std::to_string(i));
        MacroResult over_b = build_macro(lifted.rules, wb, c, opts);
        rec.lifted = lifted.rules;
        rec.over_b = over_b.macro;
        pair.stages.push_back(rec);
        pair.parallel.stages.push_back({sid, {over_b.macro}, 2, true});

        if (results.size() > 1) {
            if (i + 1 != r.stages.size())
                throw MacroError(MacroErrorKind::ConstructionUnsupported, sid + " branches before the last stage");
            break;
        }
        c = lifted.c_results.front();
        wa = lifted.wa_after.front();
        wb = over_b.post;
        a = results.nets().front();
        b = concept_single(c, wb);
    }
    return pair;
}

ParallelReport verify_parallel(const ParallelPair& pair, const MacroOptions& opts) {
    ParallelReport rep;
    Net a = concept_single(pair.witness.origin, pair.witness.w_a);
    Net b = concept_single(pair.witness.origin, pair.witness.w_b);
    rep.a_results = apply_transducer(pair.micro, Jungle{a});
    rep.b_results = apply_transducer(pair.parallel, Jungle{b});
    rep.results_sisters = abstract_sisters(rep.a_results, rep.b_results, SisterMode::Split);

    rep.class_preserved = true;
    for (const auto& n : rep.a_results.nets())
        if (delta_d(n) != delta_d(a)) {
            rep.class_preserved = false;
            rep.notes.push_back("micro result " + canonical_key(n) + " leaves the class " + to_string(delta_d(a)));
        }

    rep.macro_sisters = true;
    for (const auto& st : pair.stages) {
        if (st.trivial) continue;
        try {
            MacroResult over_a = build_macro(st.lifted, st.wa, st.c, opts);
            Jungle ja = normal_forms(over_a.macro, Jungle{st.a}, opts.budget);
            Jungle jb = normal_forms(st.over_b, Jungle{st.b}, opts.budget);
            if (!abstract_sisters(ja, jb, SisterMode::Split)) {
                rep.macro_sisters = false;
                rep.notes.push_back(st.stage + ": macro forms differ in unoccupied ports");
            }
        } catch (const MacroError& e) {
            rep.macro_sisters = false;
            rep.notes.push_back(st.stage + ": " + e.what());
        }
    }
    return rep;
}

// ------------------------------------------------------------ class algebra

ClassAlgebra::ClassAlgebra() { ops["I"] = ClassOp{"I", std::nullopt, {}}; }

std::string class_key_string(const Delta& d) {
    return std::to_string(d.total) + ":" + std::to_string(d.in) + ":" + std::to_string(d.out);
}

void ClassAlgebra::add_class(const Net& centre, const std::vector<Prns>& prnss) {
    NetClass k;
    k.key = delta_d(centre);
    k.centre = centre;
    k.prnss = prnss;
    k.members.push_back(centre);
    for (const auto& w : prnss)
        for (const auto& n : concept_of(Jungle{centre}, w.rns).nets()) k.members.push_back(n);
    classes[k.key] = std::move(k);
}

void ClassAlgebra::add_op(const std::string& name, const Rns& micro, const MacroOptions& opts) {
    ClassOp op{name, micro, {}};
    for (const auto& [key, k] : classes) {
        std::vector<Rns> bundle;
        bool ok = true;
        for (const auto& w : k.prnss) {
            try {
                bundle.push_back(build_macro(micro, w, k.centre, opts).macro);
            } catch (const MacroError&) {
                ok = false;
            }
        }
        if (ok) op.bundle[class_key_string(key)] = std::move(bundle);
    }
    ops[name] = std::move(op);
}

namespace {

const NetClass& class_at(const ClassAlgebra& alg, const Delta& key) {
    auto it = alg.classes.find(key);
    if (it == alg.classes.end()) throw std::out_of_range("no class with signature " + class_key_string(key));
    return it->second;
}

const ClassOp& op_at(const ClassAlgebra& alg, const std::string& name) {
    auto it = alg.ops.find(name);
    if (it == alg.ops.end()) throw std::out_of_range("no operation " + name);
    return it->second;
}

std::set<Delta> bundle_signatures(const ClassAlgebra& alg, const NetClass& k, const ClassOp& op, int budget) {
    // results are taken together with the identity image
    std::set<Delta> sigs;
    for (const auto& m : k.members) sigs.insert(delta_d(m));
    if (!op.micro) return sigs;
    // the centre itself is rewritten by the micro; every concept member by the macros
    for (const auto& n : normal_forms(*op.micro, Jungle{k.centre}, budget).nets()) sigs.insert(delta_d(n));
    auto bit = op.bundle.find(class_key_string(k.key));
    if (bit == op.bundle.end())
        throw MacroError(MacroErrorKind::ConstructionUnsupported, op.name + " has no macros for class " + class_key_string(k.key));
    for (const auto& macro : bit->second)
        for (std::size_t i = 1; i < k.members.size(); ++i)
            for (const auto& n : normal_forms(macro, Jungle{k.members[i]}, budget).nets()) sigs.insert(delta_d(n));
    (void)alg;
    return sigs;
}

}  // namespace

Delta class_apply(const ClassAlgebra& alg, const Delta& key, const std::string& op, int budget) {
    const NetClass& k = class_at(alg, key);
    auto sigs = bundle_signatures(alg, k, op_at(alg, op), budget);
    if (sigs.size() != 1) {
        std::string list;
        for (const auto& s : sigs) list += (list.empty() ? "" : ", ") + class_key_string(s);
        throw MacroError(MacroErrorKind::ClosureViolation, op + " sends class " + class_key_string(key) + " to " + list);
    }
    return *sigs.begin();
}

ClosureReport check_closure(const ClassAlgebra& alg, const std::vector<Delta>& samples, int budget) {
    ClosureReport rep;
    for (const auto& key : samples) {
        const NetClass& k = class_at(alg, key);
        bool distinctive = true;
        for (std::size_t i = 0; i < k.members.size() && distinctive; ++i)
            for (std::size_t j = i + 1; j < k.members.size() && distinctive; ++j)
                distinctive = !overlaps(k.members[i], k.members[j], 1).overlap;
        for (const auto& [name, op] : alg.ops) {
            ClosureSample s;
            s.key = key;
            s.op = name;
            try {
                s.via_macros = bundle_signatures(alg, k, op, budget);
            } catch (const MacroError& e) {
                s.note = e.what();
                rep.samples.push_back(s);
                continue;
            }
            s.via_centre.insert(key);
            if (op.micro)
                for (const auto& n : normal_forms(*op.micro, Jungle{k.centre}, budget).nets()) s.via_centre.insert(delta_d(n));
            if (!distinctive) {
                s.note = "class members share letters; skipped";
                s.agrees = true;
            } else {
                s.agrees = s.via_macros == s.via_centre;
            }
            if (s.via_macros.size() > 1) {
                rep.closed = false;
                rep.violations.push_back(name + " on " + class_key_string(key));
            }
            if (!s.agrees) rep.closed = false;
            rep.samples.push_back(s);
        }
    }
    return rep;
}

}  // namespace netrw
