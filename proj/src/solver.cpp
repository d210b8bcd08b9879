#include "netrw/solver.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "netrw/macro.hpp"
#include "netrw/netf.hpp"

namespace netrw {

using nlohmann::json;
namespace fs = std::filesystem;

const char* to_string(SolverErrorKind k) {
    switch (k) {
        case SolverErrorKind::CorruptEntry: return "CorruptEntry";
        case SolverErrorKind::BadManifest: return "BadManifest";
        case SolverErrorKind::NotAPresolution: return "NotAPresolution";
    }
    return "?";
}

SolverError::SolverError(SolverErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

const char* to_string(RecognizerKind k) {
    switch (k) {
        case RecognizerKind::NormalForm: return "normal-form";
        case RecognizerKind::Pattern: return "pattern";
        case RecognizerKind::Delta: return "delta";
        case RecognizerKind::Realization: return "realization";
        case RecognizerKind::Conjunction: return "all";
    }
    return "?";
}

const char* to_string(SolveStatus s) {
    return s == SolveStatus::Solved ? "solved" : "no-solution-within-budget";
}

// ------------------------------------------------------------ recognizers

Recognizer Recognizer::normal_form(const Rns& r, LetterPredicate p, int budget) {
    Recognizer out;
    out.kind = RecognizerKind::NormalForm;
    out.rns = r;
    out.letters = std::move(p);
    out.budget = budget;
    return out;
}

Recognizer Recognizer::contains(const Net& pattern) {
    Recognizer out;
    out.kind = RecognizerKind::Pattern;
    out.pattern = pattern;
    return out;
}

Recognizer Recognizer::signature(const Delta& d) {
    Recognizer out;
    out.kind = RecognizerKind::Delta;
    out.target = d;
    return out;
}

Recognizer Recognizer::realization(const AlgebraSpec& a, Generators inputs, std::map<std::string, ValueSet> expected,
                                   int budget) {
    Recognizer out;
    out.kind = RecognizerKind::Realization;
    out.algebra = std::make_shared<const AlgebraSpec>(a);
    out.inputs = std::move(inputs);
    out.expected = std::move(expected);
    out.budget = budget;
    return out;
}

Recognizer Recognizer::all(std::vector<Recognizer> parts) {
    Recognizer out;
    out.kind = RecognizerKind::Conjunction;
    out.parts = std::move(parts);
    return out;
}

namespace {

std::string port_name(const Net& n, const PortRef& p) {
    if (auto t = n.tag_at(p)) return *t;
    return port_tag_name(p);
}

Verdict realizes(const Recognizer& rec, const Net& n, int budget) {
    std::map<PortRef, Value> in;
    for (const auto& p : n.unoccupied_ports()) {
        if (p.dir != Dir::In) continue;
        auto it = rec.inputs.find(port_name(n, p));
        if (it == rec.inputs.end()) it = rec.inputs.find(port_tag_name(p));
        if (it == rec.inputs.end()) return Verdict::No;
        in[p] = it->second;
    }
    Evaluation ev;
    try {
        ev = evaluate(n, *rec.algebra, in, budget);
    } catch (const RealizeError& e) {
        if (e.kind() == RealizeErrorKind::NoFixpointWithinBudget) return Verdict::Unknown;
        return Verdict::No;
    }
    std::map<std::string, ValueSet> got;
    for (const auto& [p, s] : ev.outputs) {
        got[port_tag_name(p)] = s;
        got[port_name(n, p)] = s;
    }
    for (const auto& [name, want] : rec.expected) {
        auto it = got.find(name);
        if (it == got.end() || it->second != want) return Verdict::No;
    }
    return Verdict::Yes;
}

}  // namespace

Verdict recognize(const Recognizer& rec, const Jungle& j, int budget) {
    int b = budget > 0 ? budget : rec.budget;
    if (rec.kind == RecognizerKind::Conjunction) {
        bool unknown = false;
        for (const auto& part : rec.parts) {
            Verdict v = recognize(part, j, budget);
            if (v == Verdict::No) return Verdict::No;
            if (v == Verdict::Unknown) unknown = true;
        }
        return unknown ? Verdict::Unknown : Verdict::Yes;
    }
    if (j.empty()) return Verdict::No;
    switch (rec.kind) {
        case RecognizerKind::Delta:
            return delta_d(j) == rec.target ? Verdict::Yes : Verdict::No;
        case RecognizerKind::Pattern:
            for (const auto& n : j.nets())
                if (!is_enclosure(rec.pattern, n)) return Verdict::No;
            return Verdict::Yes;
        case RecognizerKind::NormalForm: {
            Jungle nf;
            try {
                nf = normal_forms(rec.rns, j, b);
            } catch (const RewriteError& e) {
                if (e.kind() == RewriteErrorKind::BudgetExhausted) return Verdict::Unknown;
                return Verdict::No;
            }
            if (nf.empty()) return Verdict::No;
            for (const auto& n : nf.nets()) {
                auto ls = n.letters();
                for (const auto& l : rec.letters.require)
                    if (!ls.count(l)) return Verdict::No;
                for (const auto& l : rec.letters.forbid)
                    if (ls.count(l)) return Verdict::No;
            }
            return Verdict::Yes;
        }
        case RecognizerKind::Realization: {
            if (!rec.algebra) return Verdict::No;
            bool unknown = false;
            for (const auto& n : j.nets()) {
                Verdict v = realizes(rec, n, budget > 0 ? budget : rec.budget);
                if (v == Verdict::No) return Verdict::No;
                if (v == Verdict::Unknown) unknown = true;
            }
            return unknown ? Verdict::Unknown : Verdict::Yes;
        }
        case RecognizerKind::Conjunction: break;
    }
    return Verdict::No;
}

Verdict models(const Transducer& r, const Jungle& s, const Jungle& t, int budget) {
    Jungle reach = s, cur = s;
    int left = budget;
    bool cut = false;
    auto done = [&] { return reach.includes(t); };
    for (const auto& st : r.stages) {
        if (done()) return Verdict::Yes;
        if (left <= 0) {
            cut = true;
            break;
        }
        if (st.normal_form) {
            int steps = std::min(st.budget, left);
            DeriveResult d = derive(st.rnss, cur, steps);
            reach.merge(d.reachable);
            left -= steps;
            try {
                cur = normal_forms(st.rnss, cur, steps);
            } catch (const RewriteError&) {
                cut = true;
                break;
            }
        } else {
            for (int k = 0; k < st.budget; ++k) {
                if (left-- <= 0) {
                    cut = true;
                    break;
                }
                cur = netrw::apply(st.rnss, cur);
                reach.merge(cur);
            }
            if (cut) break;
        }
    }
    if (done()) return Verdict::Yes;
    return cut ? Verdict::Unknown : Verdict::No;
}

bool associated_member(const std::vector<Jungle>& tuple, SisterMode mode,
                       const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
    for (const auto& [i, k] : pairs) {
        if (i >= tuple.size() || k >= tuple.size()) throw std::out_of_range("index pair outside the tuple");
        if (!abstract_sisters(tuple[i], tuple[k], mode)) return false;
    }
    return true;
}

// ------------------------------------------------------------ problems

SolutionCheck check_solution(const Transducer& td, const Problem& p) {
    SolutionCheck c;
    bool within = true;
    if (static_cast<int>(td.stages.size()) > p.limits.max_td_stages) {
        within = false;
        c.notes.push_back(std::to_string(td.stages.size()) + " stages exceed the limit " +
                          std::to_string(p.limits.max_td_stages));
    }
    for (const auto& s : td.stages)
        if (s.budget > p.limits.max_derivation_steps) {
            within = false;
            c.notes.push_back("stage " + s.id + " budget " + std::to_string(s.budget) + " exceeds " +
                              std::to_string(p.limits.max_derivation_steps));
        }
    try {
        c.product = apply_transducer(td, p.subject);
    } catch (const RewriteError& e) {
        c.notes.push_back(e.what());
        c.presolution = e.kind() == RewriteErrorKind::StageBudgetExhausted ? Verdict::Unknown : Verdict::No;
        return c;
    }
    c.presolution = recognize(p.recognizer, c.product);
    c.solution = c.presolution == Verdict::Yes && within;
    return c;
}

// ------------------------------------------------------------ memory

namespace {

bool safe_id(const std::string& id) {
    if (id.empty() || id[0] == '.') return false;
    return std::all_of(id.begin(), id.end(),
                       [](char ch) { return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.'; });
}

// Verification uses limits generous enough that only the recognizer decides.
Problem verification_problem(const MemoryEntry& e) {
    Problem p;
    p.subject = e.subject;
    p.recognizer = e.recognizer;
    p.limits.max_td_stages = static_cast<int>(e.solution.stages.size());
    p.limits.max_derivation_steps = 1;
    for (const auto& s : e.solution.stages) p.limits.max_derivation_steps = std::max(p.limits.max_derivation_steps, s.budget);
    return p;
}

}  // namespace

MemoryEntry make_entry(const Jungle& subject, const Recognizer& rec, const Transducer& solution, const std::string& id) {
    MemoryEntry e;
    e.id = id;
    e.subject = subject;
    e.recognizer = rec;
    e.solution = solution;
    e.signature = delta_d(subject);
    return e;
}

const MemoryEntry& MemoryBank::add(MemoryEntry e) {
    if (e.id.empty()) {
        for (std::size_t k = entries.size() + 1;; ++k)
            if (!find("e" + std::to_string(k))) {
                e.id = "e" + std::to_string(k);
                break;
            }
    }
    if (!safe_id(e.id)) throw SolverError(SolverErrorKind::BadManifest, "entry id '" + e.id + "' is not a plain name");
    if (find(e.id)) throw SolverError(SolverErrorKind::BadManifest, "duplicate entry id " + e.id);
    e.signature = delta_d(e.subject);
    SolutionCheck c = check_solution(e.solution, verification_problem(e));
    if (c.presolution != Verdict::Yes)
        throw SolverError(SolverErrorKind::NotAPresolution,
                          e.id + ": stored solution gives " + to_string(c.presolution) + " under its recognizer");
    entries.push_back(std::move(e));
    return entries.back();
}

const MemoryEntry* MemoryBank::find(const std::string& id) const {
    for (const auto& e : entries)
        if (e.id == id) return &e;
    return nullptr;
}

namespace {

void write_file(const fs::path& p, const std::string& text) {
    std::ofstream os(p, std::ios::binary);
    if (!os) throw SolverError(SolverErrorKind::BadManifest, "cannot write " + p.string());
    os << text;
}

std::string read_file(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    if (!is) throw SolverError(SolverErrorKind::CorruptEntry, "cannot read " + p.string());
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

json delta_json(const Delta& d) { return json::array({d.total, d.in, d.out}); }

Delta delta_from(const json& j) {
    if (!j.is_array() || j.size() != 3) throw SolverError(SolverErrorKind::BadManifest, "signature must be [total,in,out]");
    return {j[0].get<int>(), j[1].get<int>(), j[2].get<int>()};
}

Jungle parse_jungle(const std::string& text, const std::string& source) {
    Document d = parse_document(text, source);
    Jungle j;
    for (const auto& name : d.net_order) j.insert(d.nets.at(name));
    return j;
}

}  // namespace

std::string print_jungle(const Jungle& j, const std::string& prefix) {
    std::string out;
    std::size_t k = 0;
    for (const auto& n : j.nets()) out += print_net(n.renamed(prefix + std::to_string(k++)));
    return out;
}

void save_bank(const MemoryBank& bank, const std::string& dir) {
    fs::create_directories(dir);
    json manifest{{"format", "netrw-memory"}, {"version", 1}, {"entries", json::array()}};
    for (const auto& e : bank.entries) {
        if (!safe_id(e.id)) throw SolverError(SolverErrorKind::BadManifest, "entry id '" + e.id + "' is not a plain name");
        fs::path d = fs::path(dir) / e.id;
        fs::create_directories(d);
        write_file(d / "subject.netf", print_jungle(e.subject, "s"));
        write_file(d / "solution.json", transducer_to_json(e.solution).dump(2) + "\n");
        json meta{{"id", e.id},
                  {"signature", delta_json(e.signature)},
                  {"recognizer", recognizer_to_json(e.recognizer)},
                  {"metadata", e.metadata}};
        write_file(d / "meta.json", meta.dump(2) + "\n");
        manifest["entries"].push_back(e.id);
    }
    write_file(fs::path(dir) / "manifest.json", manifest.dump(2) + "\n");
}

MemoryBank load_bank(const std::string& dir) {
    json manifest;
    try {
        manifest = json::parse(read_file(fs::path(dir) / "manifest.json"));
    } catch (const std::exception& e) {
        throw SolverError(SolverErrorKind::BadManifest, dir + ": " + e.what());
    }
    if (!manifest.contains("entries") || !manifest["entries"].is_array())
        throw SolverError(SolverErrorKind::BadManifest, dir + ": manifest lacks an entries array");
    MemoryBank bank;
    for (const auto& idj : manifest["entries"]) {
        std::string id = idj.is_string() ? idj.get<std::string>() : idj.dump();
        try {
            if (!safe_id(id)) throw SolverError(SolverErrorKind::CorruptEntry, "bad entry id");
            fs::path d = fs::path(dir) / id;
            MemoryEntry e;
            e.id = id;
            e.subject = parse_jungle(read_file(d / "subject.netf"), (d / "subject.netf").string());
            e.solution = transducer_from_json(json::parse(read_file(d / "solution.json")));
            json meta = json::parse(read_file(d / "meta.json"));
            e.recognizer = recognizer_from_json(meta.at("recognizer"));
            e.signature = delta_from(meta.at("signature"));
            if (meta.contains("metadata")) e.metadata = meta["metadata"].get<std::map<std::string, std::string>>();
            if (e.signature != delta_d(e.subject))
                throw SolverError(SolverErrorKind::CorruptEntry, "recorded signature " + to_string(e.signature) +
                                                                     " differs from the subject's " +
                                                                     to_string(delta_d(e.subject)));
            if (bank.find(id)) throw SolverError(SolverErrorKind::CorruptEntry, "duplicate id");
            bank.add(std::move(e));
        } catch (const std::exception& ex) {
            bank.quarantined.push_back({id, std::string(to_string(SolverErrorKind::CorruptEntry)) + ": " + ex.what()});
        }
    }
    return bank;
}

bool banks_equal(const MemoryBank& a, const MemoryBank& b) {
    if (a.entries.size() != b.entries.size() || a.quarantined.size() != b.quarantined.size()) return false;
    for (std::size_t i = 0; i < a.entries.size(); ++i) {
        const auto &x = a.entries[i], &y = b.entries[i];
        if (x.id != y.id || !(x.subject == y.subject) || x.signature != y.signature || x.metadata != y.metadata ||
            recognizer_to_json(x.recognizer) != recognizer_to_json(y.recognizer) ||
            transducer_to_json(x.solution) != transducer_to_json(y.solution))
            return false;
    }
    for (std::size_t i = 0; i < a.quarantined.size(); ++i)
        if (a.quarantined[i].id != b.quarantined[i].id) return false;
    return true;
}

// ------------------------------------------------------------ solving

bool SolveReport::any_unknown() const {
    return std::any_of(failures.begin(), failures.end(), [](const auto& f) { return f.verdict == Verdict::Unknown; });
}

namespace {

int distance(const Delta& a, const Delta& b) {
    return std::abs(a.total - b.total) + std::abs(a.in - b.in) + std::abs(a.out - b.out);
}

std::string describe(const SolutionCheck& c) {
    std::string s = std::string("presolution ") + to_string(c.presolution) + ", solution " + (c.solution ? "yes" : "no");
    for (const auto& n : c.notes) s += "; " + n;
    return s;
}

}  // namespace

SolveReport solve(const Problem& p, const MemoryBank& mem) {
    using clock = std::chrono::steady_clock;
    const auto start = clock::now();
    auto out_of_time = [&] {
        return std::chrono::duration_cast<std::chrono::milliseconds>(clock::now() - start).count() >
               p.limits.wall_budget_ms;
    };

    SolveReport rep;
    auto accept = [&](const Transducer& td, const SolutionCheck& c, const std::string& via) {
        rep.status = SolveStatus::Solved;
        rep.solution = td;
        rep.product = c.product;
        rep.via = via;
        rep.trace.push_back("accepted " + via);
        return rep;
    };

    Transducer identity;
    identity.name = "identity";
    SolutionCheck c0 = check_solution(identity, p);
    rep.trace.push_back("identity: " + describe(c0));
    if (c0.solution) return accept(identity, c0, "identity");
    if (c0.presolution == Verdict::Unknown) rep.failures.push_back({"", "identity", Verdict::Unknown, describe(c0)});

    for (const auto& e : mem.entries) {
        if (out_of_time()) {
            rep.failures.push_back({e.id, "direct", Verdict::Unknown, "wall budget spent"});
            continue;
        }
        SolutionCheck c = check_solution(e.solution, p);
        rep.trace.push_back("direct " + e.id + ": " + describe(c));
        if (c.solution) return accept(e.solution, c, "direct:" + e.id);
        rep.failures.push_back({e.id, "direct", c.presolution == Verdict::Unknown ? Verdict::Unknown : Verdict::No,
                                describe(c)});
    }

    if (p.subject.size() != 1) {
        rep.trace.push_back("transfer skipped: the subject holds " + std::to_string(p.subject.size()) +
                            " nets, transfer needs one mother net");
    } else {
        const Net mother = p.subject.nets().front();
        const Delta md = delta_d(mother);
        std::vector<std::pair<int, std::size_t>> order;
        for (std::size_t i = 0; i < mem.entries.size(); ++i) {
            const auto& e = mem.entries[i];
            if (e.subject.size() != 1) {
                rep.failures.push_back({e.id, "transfer", Verdict::No, "stored subject is not a single net"});
            } else if (!abstract_sisters(p.subject, e.subject, SisterMode::Split)) {
                rep.failures.push_back({e.id, "transfer", Verdict::No,
                                        "not a sister: " + to_string(e.signature) + " vs " + to_string(md)});
            } else {
                order.push_back({distance(md, e.signature), i});
            }
        }
        std::stable_sort(order.begin(), order.end());
        OriginSearchOptions so;
        so.max_origin_nodes = p.limits.max_origin_nodes;
        for (const auto& [dist, i] : order) {
            const auto& e = mem.entries[i];
            if (out_of_time()) {
                rep.failures.push_back({e.id, "transfer", Verdict::Unknown, "wall budget spent"});
                continue;
            }
            const Net stored = e.subject.nets().front();
            OriginSearchResult found;
            try {
                found = search_common_origin(stored, mother, so);
            } catch (const std::exception& ex) {
                rep.failures.push_back({e.id, "transfer", Verdict::No, std::string("origin search: ") + ex.what()});
                continue;
            }
            if (!found.witness) {
                rep.trace.push_back("transfer " + e.id + ": no origin within " + std::to_string(so.max_origin_nodes) +
                                    " nodes");
                rep.failures.push_back({e.id, "transfer", Verdict::Unknown,
                                        "origin search exhausted after " + std::to_string(found.candidates) + " layouts"});
                continue;
            }
            if (!verify_origin(*found.witness, stored, mother)) {
                rep.failures.push_back({e.id, "transfer", Verdict::No, "origin witness failed verification"});
                continue;
            }
            rep.trace.push_back("transfer " + e.id + ": origin with " + std::to_string(found.witness->origin.size()) +
                                " nodes");
            Transducer td;
            try {
                ParallelPair pair = parallel_td(e.solution, *found.witness);
                td = pair.parallel;
            } catch (const std::exception& ex) {
                rep.failures.push_back({e.id, "transfer", Verdict::No, std::string("parallel construction: ") + ex.what()});
                continue;
            }
            td.name = e.id + "_transfer";
            SolutionCheck c = check_solution(td, p);
            rep.trace.push_back("transfer " + e.id + ": " + describe(c));
            if (c.solution) {
                rep.witness = found.witness;
                return accept(td, c, "transfer:" + e.id);
            }
            rep.failures.push_back({e.id, "transfer", c.presolution == Verdict::Unknown ? Verdict::Unknown : Verdict::No,
                                    describe(c)});
        }
    }
    rep.trace.push_back("concept-routed transfer through colouring systems: unattempted");
    return rep;
}

SolveReport solve(const Problem& p, MemoryBank& mem, const SolveOptions& opts) {
    SolveReport rep = solve(p, static_cast<const MemoryBank&>(mem));
    if (opts.auto_insert && rep.status == SolveStatus::Solved && !rep.solution->trivial()) {
        try {
            const auto& e = mem.add(make_entry(p.subject, p.recognizer, *rep.solution));
            rep.trace.push_back("inserted into memory as " + e.id);
        } catch (const SolverError& ex) {
            rep.trace.push_back(std::string("not inserted: ") + ex.what());
        }
    }
    return rep;
}

// ------------------------------------------------------------ JSON forms

namespace {

std::pair<std::string, std::string> split_ref(const std::string& ref) {
    auto hash = ref.find('#');
    if (hash == std::string::npos) return {ref, ""};
    return {ref.substr(0, hash), ref.substr(hash + 1)};
}

bool inline_text(const std::string& s) { return s.find('{') != std::string::npos; }

std::string printable_rns(const Rns& r) {
    if (!r.name.empty()) return print_rns(r);
    Rns named = r;
    named.name = "r";
    return print_rns(named);
}

}  // namespace

Net RefResolver::net(const json& ref) const {
    std::string s = ref.get<std::string>();
    if (inline_text(s)) {
        Document d = parse_document(s, "<inline>");
        if (d.net_order.empty()) throw SolverError(SolverErrorKind::BadManifest, "inline text holds no net");
        return d.nets.at(d.net_order.front());
    }
    auto [path, name] = split_ref(s);
    Document d = load_document((fs::path(base_dir) / path).string());
    if (!name.empty()) return d.net(name);
    if (d.net_order.empty()) throw SolverError(SolverErrorKind::BadManifest, path + " holds no net");
    return d.nets.at(d.net_order.front());
}

Rns RefResolver::rns(const json& ref) const {
    std::string s = ref.get<std::string>();
    Document d;
    std::string name;
    if (inline_text(s)) {
        d = parse_document(s, "<inline>");
    } else {
        auto [path, n] = split_ref(s);
        name = n;
        d = load_document((fs::path(base_dir) / path).string());
    }
    if (!name.empty()) return d.rns(name);
    if (d.rnss.size() == 1) return d.rnss.begin()->second;
    if (d.rnss.empty() && d.rules.size() == 1) return d.rns(d.rules.begin()->first);
    throw SolverError(SolverErrorKind::BadManifest, "rns reference must name one of several systems");
}

AlgebraSpec RefResolver::algebra(const json& ref) const {
    if (ref.is_object()) return parse_algebra_json(ref.dump());
    return load_algebra((fs::path(base_dir) / ref.get<std::string>()).string());
}

json recognizer_to_json(const Recognizer& r) {
    json j{{"kind", to_string(r.kind)}};
    switch (r.kind) {
        case RecognizerKind::NormalForm:
            j["budget"] = r.budget;
            j["rns"] = printable_rns(r.rns);
            j["require"] = r.letters.require;
            j["forbid"] = r.letters.forbid;
            break;
        case RecognizerKind::Pattern:
            j["pattern"] = print_net(r.pattern.renamed("pattern"));
            break;
        case RecognizerKind::Delta:
            j["target"] = delta_json(r.target);
            break;
        case RecognizerKind::Realization: {
            j["budget"] = r.budget;
            j["algebra"] = r.algebra ? json::parse(algebra_to_json(*r.algebra)) : json::object();
            j["inputs"] = r.inputs;
            json ex = json::object();
            for (const auto& [k, v] : r.expected) ex[k] = v;
            j["expected"] = ex;
            break;
        }
        case RecognizerKind::Conjunction:
            j["parts"] = json::array();
            for (const auto& p : r.parts) j["parts"].push_back(recognizer_to_json(p));
            break;
    }
    return j;
}

Recognizer recognizer_from_json(const json& j, const RefResolver& res) {
    try {
        std::string kind = j.at("kind").get<std::string>();
        Recognizer r;
        if (kind == "normal-form") {
            LetterPredicate p;
            if (j.contains("require")) p.require = j["require"].get<std::set<std::string>>();
            if (j.contains("forbid")) p.forbid = j["forbid"].get<std::set<std::string>>();
            r = Recognizer::normal_form(res.rns(j.at("rns")), p, j.value("budget", 16));
        } else if (kind == "pattern") {
            r = Recognizer::contains(res.net(j.at("pattern")));
        } else if (kind == "delta") {
            r = Recognizer::signature(delta_from(j.at("target")));
        } else if (kind == "realization") {
            std::map<std::string, ValueSet> ex;
            for (const auto& [k, v] : j.at("expected").items())
                ex[k] = v.is_array() ? v.get<ValueSet>() : ValueSet{v.get<std::string>()};
            Generators in;
            if (j.contains("inputs")) in = j["inputs"].get<Generators>();
            r = Recognizer::realization(res.algebra(j.at("algebra")), in, ex, j.value("budget", 0));
        } else if (kind == "all") {
            std::vector<Recognizer> parts;
            for (const auto& p : j.at("parts")) parts.push_back(recognizer_from_json(p, res));
            r = Recognizer::all(std::move(parts));
        } else {
            throw SolverError(SolverErrorKind::BadManifest, "unknown recognizer kind " + kind);
        }
        return r;
    } catch (const json::exception& e) {
        throw SolverError(SolverErrorKind::BadManifest, std::string("recognizer: ") + e.what());
    }
}

json transducer_to_json(const Transducer& td) {
    json j{{"name", td.name}, {"stages", json::array()}};
    for (const auto& s : td.stages) {
        json st{{"id", s.id}, {"budget", s.budget}, {"normal_form", s.normal_form}, {"rnss", json::array()}};
        for (const auto& r : s.rnss) st["rnss"].push_back(printable_rns(r));
        j["stages"].push_back(st);
    }
    return j;
}

Transducer transducer_from_json(const json& j, const RefResolver& res) {
    try {
        Transducer td;
        td.name = j.value("name", "");
        for (const auto& st : j.at("stages")) {
            Stage s;
            s.id = st.value("id", "");
            s.budget = st.value("budget", 1);
            s.normal_form = st.value("normal_form", false);
            if (s.budget < 1) throw SolverError(SolverErrorKind::BadManifest, "stage budget must be positive");
            for (const auto& r : st.at("rnss")) s.rnss.push_back(res.rns(r));
            td.stages.push_back(std::move(s));
        }
        return td;
    } catch (const json::exception& e) {
        throw SolverError(SolverErrorKind::BadManifest, std::string("transducer: ") + e.what());
    }
}

json limits_to_json(const Limits& l) {
    return {{"max_derivation_steps", l.max_derivation_steps},
            {"max_td_stages", l.max_td_stages},
            {"max_origin_nodes", l.max_origin_nodes},
            {"wall_budget_ms", l.wall_budget_ms}};
}

Limits limits_from_json(const json& j) {
    Limits l;
    l.max_derivation_steps = j.value("max_derivation_steps", l.max_derivation_steps);
    l.max_td_stages = j.value("max_td_stages", l.max_td_stages);
    l.max_origin_nodes = j.value("max_origin_nodes", l.max_origin_nodes);
    l.wall_budget_ms = j.value("wall_budget_ms", l.wall_budget_ms);
    if (l.max_derivation_steps < 1 || l.max_td_stages < 0 || l.max_origin_nodes < 1 || l.wall_budget_ms < 1)
        throw SolverError(SolverErrorKind::BadManifest, "limits out of range");
    return l;
}

Problem problem_from_json(const json& j, const RefResolver& res) {
    try {
        Problem p;
        for (const auto& ref : j.at("subject")) p.subject.insert(res.net(ref));
        p.recognizer = recognizer_from_json(j.at("recognizer"), res);
        if (j.contains("limits")) p.limits = limits_from_json(j["limits"]);
        return p;
    } catch (const json::exception& e) {
        throw SolverError(SolverErrorKind::BadManifest, std::string("problem: ") + e.what());
    }
}

Problem load_problem(const std::string& path) {
    json j;
    try {
        j = json::parse(read_file(path));
    } catch (const json::exception& e) {
        throw SolverError(SolverErrorKind::BadManifest, path + ": " + e.what());
    }
    RefResolver res;
    res.base_dir = fs::path(path).parent_path().string();
    if (res.base_dir.empty()) res.base_dir = ".";
    return problem_from_json(j, res);
}

json witness_to_json(const OriginWitness& w) {
    return {{"origin", print_net(w.origin.renamed("origin"))},
            {"w_a", printable_rns(w.w_a.rns)},
            {"w_b", printable_rns(w.w_b.rns)}};
}

json report_to_json(const SolveReport& r) {
    json j{{"status", to_string(r.status)}, {"trace", r.trace}, {"failures", json::array()}};
    if (!r.via.empty()) j["via"] = r.via;
    if (r.solution) j["solution"] = transducer_to_json(*r.solution);
    if (r.status == SolveStatus::Solved) j["product"] = print_jungle(r.product, "p");
    if (r.witness) j["witness"] = witness_to_json(*r.witness);
    for (const auto& f : r.failures)
        j["failures"].push_back(
            {{"entry", f.entry}, {"attempt", f.attempt}, {"verdict", to_string(f.verdict)}, {"reason", f.reason}});
    return j;
}

}  // namespace netrw
