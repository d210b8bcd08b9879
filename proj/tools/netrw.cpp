#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "netrw/abstraction.hpp"
#include "netrw/macro.hpp"
#include "netrw/netf.hpp"
#include "netrw/realize.hpp"
#include "netrw/rewrite.hpp"
#include "netrw/solver.hpp"

using namespace netrw;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kNegative = 1, kUnknown = 2, kInputError = 3 };

const char* status_name(int code) {
    switch (code) {
        case kOk: return "ok";
        case kNegative: return "negative";
        case kUnknown: return "unknown";
        default: return "error";
    }
}

// A usage problem found after parsing: exits 3.
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Outcome {
    int code = kOk;
    json j = json::object();
    std::string text;
};

// ------------------------------------------------------------ workspace

// netrw.json at the workspace root holds default budgets and the fresh-letter
// counter; the root is $NETRW_WORKSPACE or the current directory.
struct Workspace {
    fs::path root;
    fs::path config;
    json cfg = json::object();

    Workspace() {
        const char* env = std::getenv("NETRW_WORKSPACE");
        root = env && *env ? fs::path(env) : fs::current_path();
        config = root / "netrw.json";
        if (fs::exists(config)) {
            std::ifstream is(config);
            try {
                cfg = json::parse(is);
            } catch (const json::exception& e) {
                throw InputError(config.string() + ": " + e.what());
            }
        }
    }
    int budget() const { return cfg.value("budget", 16); }
    int max_nodes() const { return cfg.value("max_nodes", 6); }
    std::string memory() const { return (root / cfg.value("memory", "memory")).string(); }
    std::size_t fresh_counter() const { return cfg.value("fresh_counter", std::size_t{0}); }
    void store_counter(std::size_t c) {
        if (!fs::exists(config) || c <= fresh_counter()) return;
        cfg["fresh_counter"] = c;
        std::ofstream(config) << cfg.dump(2) << "\n";
    }
};

struct Globals {
    bool json = false;
    std::optional<int> budget;
    std::optional<int> max_nodes;
    std::string mode;
    std::uint64_t seed = 0;
    std::vector<std::string> libs;
};

class Env {
public:
    Env(const Globals& g, Workspace& ws) : g_(g), ws_(ws) {}

    int budget() const {
        int b = g_.budget.value_or(ws_.budget());
        if (b < 0) throw InputError("--budget must be non-negative");
        return b;
    }
    int budget_or(int fallback) const { return g_.budget.value_or(fallback); }
    std::size_t max_nodes_or(std::size_t fallback) const {
        return g_.max_nodes ? static_cast<std::size_t>(std::max(1, *g_.max_nodes)) : fallback;
    }
    std::size_t max_nodes() const {
        int m = g_.max_nodes.value_or(ws_.max_nodes());
        if (m < 1) throw InputError("--max-nodes must be positive");
        return static_cast<std::size_t>(m);
    }
    std::string mode(const std::vector<std::string>& allowed, const std::string& fallback) const {
        if (g_.mode.empty()) return fallback;
        if (std::find(allowed.begin(), allowed.end(), g_.mode) == allowed.end())
            throw InputError("--mode " + g_.mode + " does not apply here");
        return g_.mode;
    }
    Workspace& ws() { return ws_; }

    Net net(const std::string& ref) {
        auto [path, name] = split(ref);
        if (fs::is_regular_file(path)) {
            const Document& d = doc(path);
            if (!name.empty()) return d.net(name);
            if (d.net_order.empty()) throw InputError(path + " holds no net");
            return d.nets.at(d.net_order.front());
        }
        for (const auto& d : library())
            if (d->nets.count(ref)) return d->nets.at(ref);
        throw InputError("no net file or net named " + ref);
    }

    std::vector<Net> nets(const std::string& ref) {
        auto [path, name] = split(ref);
        if (!name.empty() || !fs::is_regular_file(path)) return {net(ref)};
        const Document& d = doc(path);
        std::vector<Net> out;
        for (const auto& n : d.net_order) out.push_back(d.nets.at(n));
        if (out.empty()) throw InputError(path + " holds no net");
        return out;
    }

    Rns rns(const std::string& ref) {
        auto [path, name] = split(ref);
        if (fs::is_regular_file(path)) {
            const Document& d = doc(path);
            if (!name.empty()) return d.rns(name);
            if (d.rnss.size() == 1) return d.rnss.begin()->second;
            if (d.rnss.empty() && d.rules.size() == 1) return d.rns(d.rules.begin()->first);
            throw InputError(path + " holds several systems; use " + path + "#name");
        }
        for (const auto& d : library())
            if (d->rnss.count(ref) || d->rules.count(ref)) return d->rns(ref);
        throw InputError("no rns file or system named " + ref);
    }

    const Document& doc(const std::string& path) {
        auto key = fs::absolute(path).lexically_normal().string();
        auto it = docs_.find(key);
        if (it == docs_.end()) it = docs_.emplace(key, load_document(path)).first;
        return it->second;
    }

    // A transducer manifest (JSON) or any rns reference as a one-stage pipeline.
    Transducer transducer(const std::string& ref) {
        if (fs::is_regular_file(ref) && fs::path(ref).extension() == ".json") {
            RefResolver res;
            res.base_dir = fs::path(ref).parent_path().string();
            if (res.base_dir.empty()) res.base_dir = ".";
            return transducer_from_json(read_json(ref), res);
        }
        return single_stage(rns(ref), 1);
    }

    OriginWitness witness(const std::string& path) {
        const Document& d = doc(path);
        OriginWitness w;
        w.origin = d.nets.count("origin") ? d.nets.at("origin") : net(path);
        w.w_a = prns_from_rns(d.rns("Wa"));
        w.w_b = prns_from_rns(d.rns("Wb"));
        return w;
    }

    static json read_json(const std::string& path) {
        std::ifstream is(path);
        if (!is) throw InputError("cannot read " + path);
        try {
            return json::parse(is);
        } catch (const json::exception& e) {
            throw InputError(path + ": " + e.what());
        }
    }

private:
    static std::pair<std::string, std::string> split(const std::string& ref) {
        auto h = ref.find('#');
        if (h == std::string::npos) return {ref, ""};
        return {ref.substr(0, h), ref.substr(h + 1)};
    }

    std::vector<const Document*> library() {
        if (!lib_loaded_) {
            lib_loaded_ = true;
            std::vector<std::string> files = g_.libs;
            std::vector<std::string> found;
            if (fs::is_directory(ws_.root))
                for (const auto& e : fs::directory_iterator(ws_.root))
                    if (e.is_regular_file() && e.path().extension() == ".netf") found.push_back(e.path().string());
            std::sort(found.begin(), found.end());
            files.insert(files.end(), found.begin(), found.end());
            for (const auto& f : files) {
                try {
                    lib_.push_back(&doc(f));
                } catch (const ParseError&) {
                    if (std::find(g_.libs.begin(), g_.libs.end(), f) != g_.libs.end()) throw;
                }
            }
        }
        return lib_;
    }

    const Globals& g_;
    Workspace& ws_;
    std::map<std::string, Document> docs_;
    std::vector<const Document*> lib_;
    bool lib_loaded_ = false;
};

// ------------------------------------------------------------ output helpers

json delta_json(const Delta& d) { return {{"total", d.total}, {"in", d.in}, {"out", d.out}}; }

std::string delta_text(const Delta& d) {
    return std::to_string(d.total) + " (in=" + std::to_string(d.in) + ",out=" + std::to_string(d.out) + ")";
}

json net_summary(const Net& n) {
    return {{"name", n.name()}, {"nodes", n.size()}, {"edges", n.edges().size()}, {"delta", delta_json(delta_d(n))}};
}

json jungle_json(const Jungle& j) {
    json a = json::array();
    for (const auto& n : j.nets()) a.push_back(net_summary(n));
    return {{"size", j.size()}, {"delta", delta_json(delta_d(j))}, {"nets", a}, {"netf", print_jungle(j, "n")}};
}

std::string named_rns(Rns r, const std::string& name) {
    r.name = name;
    return print_rns(r);
}

Outcome verdict_outcome(Verdict v, json j, const std::string& text) {
    Outcome o;
    o.code = v == Verdict::Yes ? kOk : v == Verdict::No ? kNegative : kUnknown;
    o.j = std::move(j);
    o.j["verdict"] = to_string(v);
    o.text = text;
    return o;
}

PartitionSpec parse_blocks(const std::string& spec) {
    PartitionSpec p;
    std::stringstream blocks(spec);
    std::string block;
    while (std::getline(blocks, block, ';')) {
        std::set<std::string> ids;
        std::stringstream items(block);
        std::string id;
        while (std::getline(items, id, ','))
            if (!id.empty()) ids.insert(id);
        if (ids.empty()) throw InputError("empty block in --blocks " + spec);
        p.blocks.push_back(ids);
    }
    if (p.blocks.empty()) throw InputError("--blocks is empty");
    return p;
}

Delta parse_key(const std::string& s) {
    Delta d;
    char c1 = 0, c2 = 0;
    std::stringstream ss(s);
    if (!(ss >> d.total >> c1 >> d.in >> c2 >> d.out) || c1 != ':' || c2 != ':')
        throw InputError("class key must look like total:in:out, got " + s);
    return d;
}

// ------------------------------------------------------------ commands

struct Args {
    std::vector<std::string> files;
    std::string rns, input, prns, macro, post, micro, td, witness, type, blocks, algebra, alphabet, problem, memory, id,
        key, op_name, name;
    std::vector<std::string> sets, centres, ops;
    int depth = 1;
    bool auto_insert = false;
};

Outcome net_parse(Env& env, const Args& a) {
    const Document& d = env.doc(a.files.at(0));
    Outcome o;
    json nets = json::array();
    for (const auto& n : d.net_order) nets.push_back(net_summary(d.nets.at(n)));
    json rules = json::array(), rnss = json::array();
    for (const auto& [k, r] : d.rules) rules.push_back(k);
    for (const auto& [k, r] : d.rnss) rnss.push_back(k);
    o.j = {{"nets", nets}, {"rules", rules}, {"rnss", rnss}, {"alphabet", d.alphabet.has_value()}};
    o.text = "ok: " + std::to_string(d.nets.size()) + " nets, " + std::to_string(d.rules.size()) + " rules, " +
             std::to_string(d.rnss.size()) + " rnss\n";
    return o;
}

Outcome net_print(Env& env, const Args& a) {
    Outcome o;
    const std::string& ref = a.files.at(0);
    if (ref.find('#') != std::string::npos || !fs::is_regular_file(ref)) {
        o.text = print_net(env.net(ref));
    } else {
        o.text = print_document(env.doc(ref));
    }
    o.j = {{"netf", o.text}};
    return o;
}

Outcome net_eq(Env& env, const Args& a) {
    std::string mode = env.mode({"strict", "permuting"}, "strict");
    Net p = env.net(a.files.at(0)), q = env.net(a.files.at(1));
    bool eq = nets_equal(p, q, mode == "strict" ? EqMode::Strict : EqMode::Permuting);
    Outcome o;
    o.code = eq ? kOk : kNegative;
    o.j = {{"equal", eq}, {"mode", mode}};
    o.text = eq ? "equal\n" : "not equal\n";
    return o;
}

Outcome net_delta(Env& env, const Args& a) {
    Delta d = delta_d(Jungle(env.nets(a.files.at(0))));
    Outcome o;
    o.j = delta_json(d);
    o.text = delta_text(d) + "\n";
    return o;
}

Outcome net_dot(Env& env, const Args& a) {
    Outcome o;
    o.text = to_dot(env.net(a.files.at(0)));
    o.j = {{"dot", o.text}};
    return o;
}

Outcome rw_matches(Env& env, const Args& a) {
    Jungle host(env.nets(a.input));
    auto ms = find_matches(env.rns(a.rns), host);
    Outcome o;
    json arr = json::array();
    std::ostringstream os;
    for (const auto& m : ms) {
        json nm = json::object();
        for (const auto& [k, v] : m.node_map) nm[k] = v;
        arr.push_back({{"host", m.host}, {"rule", m.rule}, {"preform", m.preform}, {"node_map", nm}, {"redex", m.redex}});
        os << m.rule << "#" << m.preform << " on net " << m.host << ":";
        for (const auto& [k, v] : m.node_map) os << " " << k << "->" << v;
        os << "\n";
    }
    os << ms.size() << " matches\n";
    o.j = {{"count", ms.size()}, {"matches", arr}};
    o.text = os.str();
    return o;
}

Outcome rw_apply(Env& env, const Args& a) {
    Jungle r = apply(env.rns(a.rns), Jungle(env.nets(a.input)));
    Outcome o;
    o.j = jungle_json(r);
    o.text = print_jungle(r, "n");
    return o;
}

Outcome rw_derive(Env& env, const Args& a) {
    DeriveResult d = derive({env.rns(a.rns)}, Jungle(env.nets(a.input)), env.budget());
    Outcome o;
    o.code = d.budget_exhausted ? kUnknown : kOk;
    o.j = jungle_json(d.reachable);
    o.j["budget_exhausted"] = d.budget_exhausted;
    o.j["cycle"] = d.cycle;
    o.text = print_jungle(d.reachable, "n");
    if (d.budget_exhausted) o.text += "# budget exhausted\n";
    return o;
}

Outcome rw_normalize(Env& env, const Args& a) {
    Jungle r = normal_forms(env.rns(a.rns), Jungle(env.nets(a.input)), env.budget());
    Outcome o;
    o.j = jungle_json(r);
    o.text = print_jungle(r, "n");
    return o;
}

Outcome prns_synth(Env& env, const Args& a) {
    Net c = env.net(a.input);
    FreshMinter fm("_w");
    fm.set_counter(env.ws().fresh_counter());
    Prns w = synthesize_prns(c, parse_blocks(a.blocks), &fm, a.name.empty() ? "W" : a.name);
    env.ws().store_counter(fm.counter());
    Outcome o;
    o.text = print_rns(w.rns);
    o.j = {{"rns", o.text}, {"blocks", w.blocks.size()}, {"fresh_counter", fm.counter()}};
    return o;
}

Outcome prns_validate(Env& env, const Args& a) {
    auto type = parse_rns_type(a.type.empty() ? "PRNS" : a.type);
    if (!type) throw InputError("unknown type " + a.type);
    ValidationReport rep = validate_rns_type(env.rns(a.rns), *type, Jungle(env.nets(a.input)));
    Outcome o;
    o.code = rep.valid() ? kOk : kNegative;
    json checks = json::array();
    std::ostringstream os;
    for (const auto& c : rep.checks) {
        checks.push_back({{"condition", c.condition}, {"pass", c.pass}, {"counterexamples", c.counterexamples}, {"note", c.note}});
        os << (c.pass ? "pass " : "FAIL ") << c.condition;
        if (!c.counterexamples.empty()) {
            os << " [";
            for (std::size_t i = 0; i < c.counterexamples.size(); ++i) os << (i ? "," : "") << c.counterexamples[i];
            os << "]";
        }
        if (!c.note.empty()) os << " (" << c.note << ")";
        os << "\n";
    }
    os << to_string(*type) << (rep.valid() ? " valid\n" : " invalid\n");
    o.j = {{"type", to_string(*type)}, {"valid", rep.valid()}, {"checks", checks}};
    o.text = os.str();
    return o;
}

Outcome prns_concept(Env& env, const Args& a) {
    Jungle c = concept_of(Jungle(env.nets(a.input)), env.rns(a.rns));
    Outcome o;
    o.j = jungle_json(c);
    o.text = print_jungle(c, "n");
    return o;
}

Outcome prns_roundtrip(Env& env, const Args& a) {
    Jungle c(env.nets(a.input));
    Jungle back = roundtrip(c, env.rns(a.rns));
    bool same = back == c;
    Outcome o;
    o.code = same ? kOk : kNegative;
    o.j = jungle_json(back);
    o.j["recovered"] = same;
    o.text = print_jungle(back, "n") + (same ? "# recovered\n" : "# differs from the substance\n");
    return o;
}

Outcome abs_sisters(Env& env, const Args& a) {
    std::string mode = env.mode({"total", "split"}, "total");
    Jungle p(env.nets(a.files.at(0))), q(env.nets(a.files.at(1)));
    bool s = abstract_sisters(p, q, mode == "total" ? SisterMode::Total : SisterMode::Split);
    Outcome o;
    o.code = s ? kOk : kNegative;
    o.j = {{"sisters", s}, {"mode", mode}, {"a", delta_json(delta_d(p))}, {"b", delta_json(delta_d(q))}};
    o.text = std::string(s ? "sisters" : "not sisters") + ": " + delta_text(delta_d(p)) + " vs " + delta_text(delta_d(q)) + "\n";
    return o;
}

std::string witness_text(const OriginWitness& w) {
    return print_net(w.origin.renamed("origin")) + named_rns(w.w_a.rns, "Wa") + named_rns(w.w_b.rns, "Wb");
}

Outcome abs_origin(Env& env, const Args& a) {
    Net p = env.net(a.files.at(0)), q = env.net(a.files.at(1));
    OriginSearchOptions opts;
    opts.max_origin_nodes = env.max_nodes();
    Outcome o;
    if (!abstract_sisters(p, q, SisterMode::Split)) {
        o.code = kNegative;
        o.j = {{"found", false}, {"sisters", false}};
        o.text = "not sisters\n";
        return o;
    }
    OriginSearchResult r = search_common_origin(p, q, opts);
    o.j = {{"found", r.witness.has_value()}, {"sisters", true}, {"candidates", r.candidates}, {"max_nodes", opts.max_origin_nodes}};
    if (!r.witness) {
        o.code = kUnknown;
        o.text = "no origin within " + std::to_string(opts.max_origin_nodes) + " nodes\n";
        return o;
    }
    o.text = witness_text(*r.witness);
    o.j["witness"] = o.text;
    o.j["origin_nodes"] = r.witness->origin.size();
    return o;
}

Outcome abs_verify(Env& env, const Args& a) {
    OriginWitness w = env.witness(a.witness);
    bool ok = verify_origin(w, env.net(a.files.at(0)), env.net(a.files.at(1)));
    Outcome o;
    o.code = ok ? kOk : kNegative;
    o.j = {{"verified", ok}};
    o.text = ok ? "verified\n" : "witness does not reproduce both nets\n";
    return o;
}

MacroOptions macro_opts(Env& env) {
    MacroOptions m;
    m.budget = std::max(1, env.budget());
    return m;
}

Outcome macro_build(Env& env, const Args& a) {
    Net t = env.net(a.input);
    MacroResult m = build_macro(env.rns(a.micro), prns_from_rns(env.rns(a.prns)), t, macro_opts(env));
    Outcome o;
    o.text = named_rns(m.macro, "macro") + named_rns(m.post.rns, "post");
    o.j = {{"macro", named_rns(m.macro, "macro")}, {"post", named_rns(m.post.rns, "post")}, {"rules", m.macro.rules.size()}};
    return o;
}

Outcome macro_solve_micro(Env& env, const Args& a) {
    Rns micro = solve_micro(env.rns(a.macro), prns_from_rns(env.rns(a.prns)), prns_from_rns(env.rns(a.post)),
                            std::max(1, env.budget()));
    Outcome o;
    o.text = named_rns(micro, "micro");
    o.j = {{"micro", o.text}, {"rules", micro.rules.size()}};
    return o;
}

Outcome macro_verify(Env& env, const Args& a) {
    MacroEquation eq = verify_macro_equation(env.rns(a.prns), env.rns(a.macro), env.rns(a.post), env.rns(a.micro),
                                             Jungle(env.nets(a.input)), std::max(1, env.budget()));
    return verdict_outcome(eq.verdict, {{"left", jungle_json(eq.left)}, {"right", jungle_json(eq.right)}, {"note", eq.note}},
                           std::string("macro equation: ") + to_string(eq.verdict) + (eq.note.empty() ? "" : " (" + eq.note + ")") + "\n");
}

Outcome parallel_build(Env& env, const Args& a) {
    ParallelPair pair = parallel_td(env.transducer(a.td), env.witness(a.witness), macro_opts(env));
    Outcome o;
    json td = transducer_to_json(pair.parallel);
    o.j = {{"transducer", td}, {"stages", pair.parallel.stages.size()}};
    o.text = td.dump(2) + "\n";
    return o;
}

Outcome parallel_verify(Env& env, const Args& a) {
    ParallelPair pair = parallel_td(env.transducer(a.td), env.witness(a.witness), macro_opts(env));
    ParallelReport rep = verify_parallel(pair, macro_opts(env));
    Outcome o;
    o.code = rep.holds() ? kOk : kNegative;
    o.j = {{"holds", rep.holds()},
           {"results_sisters", rep.results_sisters},
           {"macro_sisters", rep.macro_sisters},
           {"class_preserved", rep.class_preserved},
           {"notes", rep.notes}};
    std::ostringstream os;
    os << "results sisters: " << (rep.results_sisters ? "yes" : "no") << "\nmacro sisters: " << (rep.macro_sisters ? "yes" : "no")
       << "\nclass preserved: " << (rep.class_preserved ? "yes" : "no") << "\n";
    for (const auto& n : rep.notes) os << "note: " << n << "\n";
    o.text = os.str();
    return o;
}

// Each centre gets its singleton partition and, when connected, the one-block partition.
ClassAlgebra build_algebra(Env& env, const Args& a) {
    if (a.centres.empty()) throw InputError("class commands need at least one --centre");
    ClassAlgebra alg;
    FreshMinter fm("_k");
    for (const auto& ref : a.centres) {
        Net c = env.net(ref);
        PartitionSpec singles, whole;
        std::set<std::string> all;
        for (const auto& [id, n] : c.nodes()) {
            singles.blocks.push_back({id});
            all.insert(id);
        }
        whole.blocks.push_back(all);
        std::vector<Prns> ps{synthesize_prns(c, singles, &fm)};
        if (c.size() > 1 && is_connected_set(c, all)) ps.push_back(synthesize_prns(c, whole, &fm));
        alg.add_class(c, ps);
    }
    for (const auto& op : a.ops) {
        auto eq = op.find('=');
        if (eq == std::string::npos) throw InputError("--op takes NAME=RNS, got " + op);
        alg.add_op(op.substr(0, eq), env.rns(op.substr(eq + 1)), macro_opts(env));
    }
    return alg;
}

Outcome class_apply_cmd(Env& env, const Args& a) {
    ClassAlgebra alg = build_algebra(env, a);
    Delta key = parse_key(a.key);
    Outcome o;
    try {
        Delta out = class_apply(alg, key, a.op_name.empty() ? "I" : a.op_name, std::max(1, env.budget()));
        o.j = {{"key", class_key_string(key)}, {"result", class_key_string(out)}};
        o.text = class_key_string(out) + "\n";
    } catch (const MacroError& e) {
        if (e.kind() != MacroErrorKind::ClosureViolation) throw;
        o.code = kNegative;
        o.j = {{"key", class_key_string(key)}, {"violation", e.what()}};
        o.text = std::string(e.what()) + "\n";
    }
    return o;
}

Outcome class_closure(Env& env, const Args& a) {
    ClassAlgebra alg = build_algebra(env, a);
    std::vector<Delta> keys;
    if (!a.key.empty()) keys.push_back(parse_key(a.key));
    else
        for (const auto& [k, c] : alg.classes) keys.push_back(k);
    ClosureReport rep = check_closure(alg, keys, std::max(1, env.budget()));
    Outcome o;
    o.code = rep.closed ? kOk : kNegative;
    json samples = json::array();
    for (const auto& s : rep.samples) samples.push_back({{"key", class_key_string(s.key)}, {"op", s.op}, {"agrees", s.agrees}, {"note", s.note}});
    o.j = {{"closed", rep.closed}, {"violations", rep.violations}, {"samples", samples}};
    std::ostringstream os;
    for (const auto& v : rep.violations) os << "violation: " << v << "\n";
    os << (rep.closed ? "closed\n" : "not closed\n");
    o.text = os.str();
    return o;
}

Outcome realize_eval(Env& env, const Args& a) {
    AlgebraSpec alg = load_algebra(a.algebra);
    Net t = env.net(a.input);
    std::map<std::string, Value> given;
    for (const auto& s : a.sets) {
        auto eq = s.find('=');
        if (eq == std::string::npos) throw InputError("--set takes PORT=VALUE, got " + s);
        given[s.substr(0, eq)] = s.substr(eq + 1);
    }
    std::map<PortRef, Value> in;
    for (const auto& p : t.unoccupied_ports()) {
        if (p.dir != Dir::In) continue;
        auto it = given.find(port_tag_name(p));
        if (it == given.end())
            if (auto tag = t.tag_at(p)) it = given.find(*tag);
        if (it != given.end()) in[p] = it->second;
    }
    Evaluation ev;
    Outcome o;
    try {
        ev = evaluate(t, alg, in, env.budget_or(0));
    } catch (const RealizeError& e) {
        if (e.kind() != RealizeErrorKind::NoFixpointWithinBudget) throw;
        o.code = kUnknown;
        o.j = {{"fixpoint", false}, {"reason", e.what()}};
        o.text = std::string(e.what()) + "\n";
        return o;
    }
    json outs = json::object();
    std::ostringstream os;
    for (const auto& [p, s] : ev.outputs) {
        outs[port_tag_name(p)] = s;
        os << port_tag_name(p) << " = {";
        bool first = true;
        for (const auto& v : s) {
            os << (first ? "" : ",") << v;
            first = false;
        }
        os << "}\n";
    }
    o.j = {{"fixpoint", true}, {"outputs", outs}, {"iterations", ev.iterations}, {"acyclic", ev.acyclic}};
    o.text = os.str();
    return o;
}

Outcome realize_closure(Env& env, const Args& a) {
    const Document& d = env.doc(a.alphabet);
    if (!d.alphabet) throw InputError(a.alphabet + " has no alphabet block");
    std::vector<Net> q;
    for (const auto& f : a.files)
        for (const auto& n : env.nets(f)) q.push_back(n);
    if (a.depth < 0) throw InputError("--depth must be non-negative");
    Generation g = generated_closure(q, *d.alphabet, a.depth, env.max_nodes_or(12));
    Outcome o;
    Jungle j(g.nets);
    o.j = {{"count", g.nets.size()}, {"node_cap", g.node_cap}, {"capped", g.capped}, {"netf", print_jungle(j, "g")}};
    o.text = print_jungle(j, "g") + "# " + std::to_string(g.nets.size()) + " nets, node cap " + std::to_string(g.node_cap) +
             (g.capped ? ", capped" : "") + "\n";
    return o;
}

std::string memory_dir(Env& env, const Args& a) { return a.memory.empty() ? env.ws().memory() : a.memory; }

MemoryBank open_bank(const std::string& dir) {
    if (!fs::exists(fs::path(dir) / "manifest.json")) return MemoryBank{};
    return load_bank(dir);
}

Outcome solve_run(Env& env, const Args& a) {
    Problem p = load_problem(a.problem);
    std::string dir = memory_dir(env, a);
    MemoryBank bank = open_bank(dir);
    std::size_t before = bank.entries.size();
    SolveReport rep = solve(p, bank, SolveOptions{a.auto_insert});
    if (bank.entries.size() != before) save_bank(bank, dir);
    Outcome o;
    o.code = rep.status == SolveStatus::Solved ? kOk : rep.any_unknown() ? kUnknown : kNegative;
    o.j = {{"report", report_to_json(rep)}, {"quarantined", bank.quarantined.size()}};
    std::ostringstream os;
    os << to_string(rep.status);
    if (!rep.via.empty()) os << " via " << rep.via;
    os << "\n";
    for (const auto& t : rep.trace) os << "trace: " << t << "\n";
    for (const auto& f : rep.failures)
        os << "failed " << (f.entry.empty() ? "-" : f.entry) << " " << f.attempt << " (" << to_string(f.verdict) << "): " << f.reason << "\n";
    if (rep.status == SolveStatus::Solved) os << print_jungle(rep.product, "p");
    o.text = os.str();
    return o;
}

Outcome memory_add(Env& env, const Args& a) {
    Problem p = load_problem(a.problem);
    std::string dir = memory_dir(env, a);
    MemoryBank bank = open_bank(dir);
    Outcome o;
    try {
        const auto& e = bank.add(make_entry(p.subject, p.recognizer, env.transducer(a.td), a.id));
        o.j = {{"added", e.id}, {"entries", bank.entries.size()}};
        o.text = "added " + e.id + "\n";
    } catch (const SolverError& e) {
        if (e.kind() != SolverErrorKind::NotAPresolution) throw;
        o.code = kNegative;
        o.j = {{"added", nullptr}, {"entries", bank.entries.size()}, {"reason", e.what()}};
        o.text = std::string(e.what()) + "\n";
        return o;
    }
    save_bank(bank, dir);
    return o;
}

Outcome memory_list(Env& env, const Args& a) {
    std::string dir = memory_dir(env, a);
    MemoryBank bank = open_bank(dir);
    Outcome o;
    json entries = json::array(), quarantined = json::array();
    std::ostringstream os;
    for (const auto& e : bank.entries) {
        entries.push_back({{"id", e.id},
                           {"signature", delta_json(e.signature)},
                           {"stages", e.solution.stages.size()},
                           {"recognizer", to_string(e.recognizer.kind)}});
        os << e.id << " " << delta_text(e.signature) << " stages=" << e.solution.stages.size() << " recognizer="
           << to_string(e.recognizer.kind) << "\n";
    }
    for (const auto& q : bank.quarantined) {
        quarantined.push_back({{"id", q.id}, {"reason", q.reason}});
        os << "quarantined " << q.id << ": " << q.reason << "\n";
    }
    o.j = {{"entries", entries}, {"quarantined", quarantined}};
    o.text = os.str();
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"netrw: port-net rewriting, abstraction and transfer solving"};
    app.require_subcommand(1);
    app.fallthrough();
    Globals g;
    Args a;
    app.add_flag("--json", g.json, "machine-readable output");
    app.add_option("--budget", g.budget, "step / fixpoint budget");
    app.add_option("--max-nodes", g.max_nodes, "origin-search or generation node cap");
    app.add_option("--mode", g.mode, "strict|permuting|total|split");
    app.add_option("--seed", g.seed, "seed echoed into reports; every verb is deterministic");
    app.add_option("--lib", g.libs, "extra NETF files searched for named nets and systems");

    std::function<Outcome(Env&, const Args&)> run;
    std::string command;
    auto verb = [&](CLI::App* noun, const std::string& name, const std::string& help, Outcome (*fn)(Env&, const Args&)) {
        CLI::App* v = noun->add_subcommand(name, help);
        v->callback([&, fn, v] {
            run = fn;
            command = v->get_parent()->get_name() + " " + v->get_name();
            if (v->get_parent()->get_parent() && v->get_parent()->get_parent() != &app)
                command = v->get_parent()->get_parent()->get_name() + " " + command;
        });
        return v;
    };
    auto files = [&](CLI::App* v, std::size_t n) { v->add_option("files", a.files, "inputs")->required()->expected(static_cast<int>(n)); };

    CLI::App* net = app.add_subcommand("net", "nets and documents");
    net->require_subcommand(1);
    files(verb(net, "parse", "parse and summarise a NETF file", net_parse), 1);
    files(verb(net, "print", "canonical NETF of a file or FILE#net", net_print), 1);
    files(verb(net, "eq", "strict or permuting equality", net_eq), 2);
    files(verb(net, "delta", "unoccupied-port signature", net_delta), 1);
    files(verb(net, "dot", "Graphviz output", net_dot), 1);

    CLI::App* rw = app.add_subcommand("rw", "rewriting");
    rw->require_subcommand(1);
    for (auto [name, fn] : std::vector<std::pair<const char*, Outcome (*)(Env&, const Args&)>>{
             {"matches", rw_matches}, {"apply", rw_apply}, {"derive", rw_derive}, {"normalize", rw_normalize}}) {
        CLI::App* v = verb(rw, name, std::string(name) + " an RNS on a net file", fn);
        v->add_option("--rns", a.rns, "RNS reference")->required();
        v->add_option("--input", a.input, "net reference")->required();
    }

    CLI::App* prns = app.add_subcommand("prns", "partition systems");
    prns->require_subcommand(1);
    {
        CLI::App* v = verb(prns, "synth", "contraction system for a partition", prns_synth);
        v->add_option("--input", a.input)->required();
        v->add_option("--blocks", a.blocks, "n1,n2;n3")->required();
        v->add_option("--name", a.name);
        v = verb(prns, "validate", "type conditions of an RNS over a subject", prns_validate);
        v->add_option("--rns", a.rns)->required();
        v->add_option("--input", a.input)->required();
        v->add_option("--type", a.type, "PRNS|GPRNS|CRNS|GCRNS|GCdRNS");
        v = verb(prns, "concept", "concept of a substance", prns_concept);
        v->add_option("--rns", a.rns)->required();
        v->add_option("--input", a.input)->required();
        v = verb(prns, "roundtrip", "contract then expand", prns_roundtrip);
        v->add_option("--rns", a.rns)->required();
        v->add_option("--input", a.input)->required();
    }

    CLI::App* abs = app.add_subcommand("abs", "abstract sisters and common origins");
    abs->require_subcommand(1);
    files(verb(abs, "sisters", "compare signatures", abs_sisters), 2);
    files(verb(abs, "origin", "search a common origin", abs_origin), 2);
    {
        CLI::App* v = verb(abs, "verify", "check a witness file against two nets", abs_verify);
        files(v, 2);
        v->add_option("--witness", a.witness)->required();
    }

    CLI::App* mac = app.add_subcommand("macro", "macro systems");
    mac->require_subcommand(1);
    {
        CLI::App* v = verb(mac, "build", "macro of a micro RNS over a partition system", macro_build);
        v->add_option("--micro", a.micro)->required();
        v->add_option("--prns", a.prns)->required();
        v->add_option("--input", a.input)->required();
        v = verb(mac, "solve-micro", "recover the micro from a macro", macro_solve_micro);
        v->add_option("--macro", a.macro)->required();
        v->add_option("--prns", a.prns)->required();
        v->add_option("--post", a.post)->required();
        v = verb(mac, "verify", "check the macro equation on a net", macro_verify);
        v->add_option("--prns", a.prns)->required();
        v->add_option("--macro", a.macro)->required();
        v->add_option("--post", a.post)->required();
        v->add_option("--micro", a.micro)->required();
        v->add_option("--input", a.input)->required();
    }

    CLI::App* par = app.add_subcommand("parallel", "parallel transducers");
    par->require_subcommand(1);
    for (auto [name, fn] : std::vector<std::pair<const char*, Outcome (*)(Env&, const Args&)>>{
             {"build", parallel_build}, {"verify", parallel_verify}}) {
        CLI::App* v = verb(par, name, std::string(name) + " the parallel of a transducer", fn);
        v->add_option("--td", a.td, "transducer manifest or RNS reference")->required();
        v->add_option("--witness", a.witness)->required();
    }

    CLI::App* cls = app.add_subcommand("class", "net-class algebra");
    cls->require_subcommand(1);
    for (auto [name, fn] : std::vector<std::pair<const char*, Outcome (*)(Env&, const Args&)>>{
             {"apply", class_apply_cmd}, {"closure", class_closure}}) {
        CLI::App* v = verb(cls, name, std::string("class ") + name, fn);
        v->add_option("--centre", a.centres, "class centre net")->required();
        v->add_option("--op", a.ops, "NAME=RNS");
        v->add_option("--key", a.key, "total:in:out");
        if (std::string(name) == "apply") v->add_option("--name", a.op_name, "operation to apply")->required();
    }

    CLI::App* rea = app.add_subcommand("realize", "realizations");
    rea->require_subcommand(1);
    {
        CLI::App* v = verb(rea, "eval", "evaluate a net in an algebra", realize_eval);
        v->add_option("--algebra", a.algebra)->required()->check(CLI::ExistingFile);
        v->add_option("--input", a.input)->required();
        v->add_option("--set", a.sets, "PORT=VALUE");
        v = verb(rea, "closure", "free generation from nets", realize_closure);
        v->add_option("--alphabet", a.alphabet)->required()->check(CLI::ExistingFile);
        v->add_option("--depth", a.depth);
        v->add_option("files", a.files)->required();
    }

    auto memory_verbs = [&](CLI::App* parent) {
        CLI::App* mem = parent->add_subcommand("memory", "solution memory");
        mem->require_subcommand(1);
        CLI::App* v = verb(mem, "add", "verify and store a solved problem", memory_add);
        v->add_option("--problem", a.problem)->required()->check(CLI::ExistingFile);
        v->add_option("--td", a.td)->required();
        v->add_option("--memory", a.memory);
        v->add_option("--id", a.id);
        v = verb(mem, "list", "entries and quarantined directories", memory_list);
        v->add_option("--memory", a.memory);
    };
    CLI::App* sol = app.add_subcommand("solve", "problems and memory");
    sol->require_subcommand(1);
    {
        CLI::App* v = verb(sol, "run", "solve a problem manifest", solve_run);
        v->add_option("--problem", a.problem)->required()->check(CLI::ExistingFile);
        v->add_option("--memory", a.memory);
        v->add_flag("--auto-insert", a.auto_insert, "store solved problems");
        memory_verbs(sol);
    }
    memory_verbs(&app);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        if (g.json)
            std::cout << json{{"command", command}, {"status", "error"}, {"exit", kInputError},
                              {"error", {{"kind", "Usage"}, {"message", e.what()}}}}
                             .dump(2)
                      << "\n";
        return kInputError;
    }

    Outcome o;
    std::string kind;
    std::string message;
    try {
        Workspace ws;
        Env env(g, ws);
        o = run(env, a);
    } catch (const RewriteError& e) {
        o.code = (e.kind() == RewriteErrorKind::BudgetExhausted || e.kind() == RewriteErrorKind::StageBudgetExhausted)
                     ? kUnknown
                     : kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const MacroError& e) {
        o.code = (e.kind() == MacroErrorKind::RedexStraddlesUnsupported || e.kind() == MacroErrorKind::ConstructionUnsupported)
                     ? kUnknown
                     : kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const RealizeError& e) {
        o.code = kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const AbstractionError& e) {
        o.code = e.kind() == AbstractionErrorKind::SearchExhausted ? kUnknown : kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const SolverError& e) {
        o.code = kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const ParseError& e) {
        o.code = kInputError;
        kind = "ParseError";
        message = e.what();
    } catch (const NetError& e) {
        o.code = kInputError;
        kind = to_string(e.kind());
        message = e.what();
    } catch (const std::exception& e) {
        o.code = kInputError;
        kind = "InputError";
        message = e.what();
    }

    if (!message.empty()) {
        std::cerr << command << ": " << message << "\n";
        if (g.json)
            std::cout << json{{"command", command}, {"status", status_name(o.code)}, {"exit", o.code},
                              {"error", {{"kind", kind}, {"message", message}}}}
                             .dump(2)
                      << "\n";
        return o.code;
    }
    if (g.json) {
        o.j["command"] = command;
        o.j["status"] = status_name(o.code);
        o.j["exit"] = o.code;
        o.j["seed"] = g.seed;
        std::cout << o.j.dump(2) << "\n";
    } else {
        std::cout << o.text;
    }
    return o.code;
}
