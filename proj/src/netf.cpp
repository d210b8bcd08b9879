#include "netrw/netf.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace netrw {

ParseError::ParseError(const std::string& source, int line, int column, const std::string& msg)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" + std::to_string(column) + ": " + msg),
      line_(line),
      column_(column) {}

void Document::merge(const Document& other) {
    if (other.alphabet) alphabet = other.alphabet;
    for (const auto& name : other.net_order)
        if (!nets.count(name)) net_order.push_back(name);
    for (const auto& [k, v] : other.nets) nets.insert_or_assign(k, v);
    for (const auto& [k, v] : other.rules) rules.insert_or_assign(k, v);
    for (const auto& [k, v] : other.rnss) rnss.insert_or_assign(k, v);
}

const Net& Document::net(const std::string& name) const {
    auto it = nets.find(name);
    if (it == nets.end()) throw std::out_of_range("no net named " + name);
    return it->second;
}

const Rns& Document::rns(const std::string& name) const {
    auto it = rnss.find(name);
    if (it != rnss.end()) return it->second;
    auto rt = rules.find(name);
    if (rt == rules.end()) throw std::out_of_range("no rns or rule named " + name);
    static thread_local std::map<std::string, Rns> promoted;
    Rns r;
    r.name = name;
    r.rules.push_back(rt->second);
    return promoted.insert_or_assign(name, r).first->second;
}

namespace {

struct Token {
    enum Kind { Word, String, LBrace, RBrace, End } kind = End;
    std::string text;
    int line = 1;
    int col = 1;
};

class Lexer {
public:
    Lexer(std::string_view text, std::string source) : text_(text), source_(std::move(source)) {}

    std::vector<Token> run() {
        std::vector<Token> out;
        while (true) {
            skip();
            Token t;
            t.line = line_;
            t.col = col_;
            if (pos_ >= text_.size()) {
                t.kind = Token::End;
                out.push_back(t);
                return out;
            }
            char c = text_[pos_];
            if (c == '{' || c == '}') {
                t.kind = c == '{' ? Token::LBrace : Token::RBrace;
                t.text = std::string(1, c);
                advance();
            } else if (c == '"') {
                t.kind = Token::String;
                advance();
                while (pos_ < text_.size() && text_[pos_] != '"') {
                    if (text_[pos_] == '\n') throw ParseError(source_, t.line, t.col, "unterminated string");
                    t.text += text_[pos_];
                    advance();
                }
                if (pos_ >= text_.size()) throw ParseError(source_, t.line, t.col, "unterminated string");
                advance();
            } else {
                t.kind = Token::Word;
                while (pos_ < text_.size()) {
                    char d = text_[pos_];
                    if (std::isspace(static_cast<unsigned char>(d)) || d == '{' || d == '}' || d == '"' || d == '#')
                        break;
                    t.text += d;
                    advance();
                }
            }
            out.push_back(t);
        }
    }

private:
    void advance() {
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }
    void skip() {
        while (pos_ < text_.size()) {
            char c = text_[pos_];
            if (c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                advance();
            } else {
                break;
            }
        }
    }

    std::string_view text_;
    std::string source_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

struct PendingSide {
    bool is_ref = false;
    std::string ref;
    Token at;
    RawNet raw;
};

class Parser {
public:
    Parser(std::vector<Token> toks, std::string source) : toks_(std::move(toks)), source_(std::move(source)) {}

    Document run() {
        while (peek().kind != Token::End) {
            Token kw = expect_word();
            if (kw.text == "net") {
                Token name = expect_word();
                expect(Token::LBrace);
                RawNet raw = net_body(name.text);
                Net n = finish_net(std::move(raw), name);
                if (doc_.nets.count(name.text)) fail(name, "duplicate net " + name.text);
                doc_.nets.emplace(name.text, n);
                doc_.net_order.push_back(name.text);
            } else if (kw.text == "rule") {
                Rule r = rule_decl(false);
                if (!top_rules_.insert(r.name).second) fail(kw, "duplicate rule " + r.name);
            } else if (kw.text == "rns") {
                rns_decl();
            } else if (kw.text == "alphabet") {
                alphabet_decl();
            } else {
                fail(kw, "expected net, rule, rns or alphabet, got '" + kw.text + "'");
            }
        }
        resolve();
        return std::move(doc_);
    }

private:
    const Token& peek() const { return toks_[pos_]; }
    Token next() { return toks_[pos_ < toks_.size() - 1 ? pos_++ : pos_]; }

    [[noreturn]] void fail(const Token& t, const std::string& msg) const {
        throw ParseError(source_, t.line, t.col, msg);
    }

    Token expect(Token::Kind k) {
        Token t = next();
        if (t.kind != k) {
            const char* want = k == Token::LBrace ? "'{'" : k == Token::RBrace ? "'}'" : k == Token::String ? "string" : "word";
            fail(t, std::string("expected ") + want + (t.kind == Token::End ? ", got end of input" : ", got '" + t.text + "'"));
        }
        return t;
    }
    Token expect_word() { return expect(Token::Word); }

    int rank_field(const std::string& key) {
        Token t = expect_word();
        std::string prefix = key + "=";
        if (t.text.rfind(prefix, 0) != 0) fail(t, "expected " + prefix + "N");
        std::string num = t.text.substr(prefix.size());
        if (num.empty() || !std::all_of(num.begin(), num.end(), ::isdigit)) fail(t, "bad number in " + t.text);
        return std::stoi(num);
    }

    PortRef port(const Token& t, std::optional<Dir> want) {
        auto last = t.text.rfind(':');
        if (last == std::string::npos || last == 0) fail(t, "expected NODE:DIR:INDEX, got '" + t.text + "'");
        auto mid = t.text.rfind(':', last - 1);
        if (mid == std::string::npos || mid == 0) fail(t, "expected NODE:DIR:INDEX, got '" + t.text + "'");
        PortRef p;
        p.node = t.text.substr(0, mid);
        std::string dir = t.text.substr(mid + 1, last - mid - 1);
        std::string idx = t.text.substr(last + 1);
        if (dir == "in") p.dir = Dir::In;
        else if (dir == "out") p.dir = Dir::Out;
        else fail(t, "port direction must be in or out, got '" + dir + "'");
        if (want && p.dir != *want) fail(t, std::string("expected an ") + to_string(*want) + " port");
        if (idx.empty() || !std::all_of(idx.begin(), idx.end(), ::isdigit)) fail(t, "bad port index '" + idx + "'");
        p.index = std::stoi(idx);
        return p;
    }

    RawNet net_body(const std::string& name) {
        RawNet raw;
        raw.name = name;
        for (;;) {
            Token t = next();
            if (t.kind == Token::RBrace) return raw;
            if (t.kind != Token::Word) fail(t, "expected a net statement");
            if (t.text == "node") {
                Token id = expect_word();
                Token label = expect_word();
                Node n;
                n.letter = label.text;
                n.in_rank = rank_field("in");
                n.out_rank = rank_field("out");
                if (!raw.nodes.emplace(id.text, n).second) fail(id, "duplicate node " + id.text);
            } else if (t.text == "var") {
                Token id = expect_word();
                Token label = expect_word();
                Node n;
                n.letter = label.text;
                n.is_var = true;
                n.in_rank = n.out_rank = 1;
                if (!raw.nodes.emplace(id.text, n).second) fail(id, "duplicate node " + id.text);
            } else if (t.text == "edge") {
                Token a = expect_word();
                Token dash = expect_word();
                if (dash.text != "--") fail(dash, "expected '--'");
                Token b = expect_word();
                PortRef s = port(a, Dir::Out), d = port(b, Dir::In);
                Edge e{s.node, s.index, d.node, d.index};
                if (!raw.edges.insert(e).second) fail(a, "duplicate edge");
            } else if (t.text == "tag") {
                Token name = expect_word();
                Token at = expect_word();
                if (!raw.tags.emplace(name.text, port(at, std::nullopt)).second)
                    fail(name, "DuplicateTag: " + name.text);
            } else {
                fail(t, "unknown net statement '" + t.text + "'");
            }
        }
    }

    Net finish_net(RawNet raw, const Token& at) {
        try {
            ValidateOptions opts;
            if (doc_.alphabet) opts.alphabet = &*doc_.alphabet;
            return validate_net(std::move(raw), opts);
        } catch (const NetError& e) {
            fail(at, e.what());
        }
    }

    PendingSide side() {
        PendingSide s;
        s.at = peek();
        Token t = next();
        if (t.kind == Token::LBrace) {
            s.raw = net_body("");
        } else if (t.kind == Token::Word && t.text.size() > 1 && t.text[0] == '@') {
            s.is_ref = true;
            s.ref = t.text.substr(1);
        } else {
            fail(t, "expected '{' or @NET");
        }
        return s;
    }

    Rule rule_decl(bool inline_decl) {
        Token name = expect_word();
        expect(Token::LBrace);
        Rule r;
        r.name = name.text;
        std::vector<std::pair<PendingSide, PendingSide>> sides;
        for (;;) {
            Token t = next();
            if (t.kind == Token::RBrace) break;
            if (t.kind != Token::Word || t.text != "preform") fail(t, "expected preform");
            expect(Token::LBrace);
            Token l = expect_word();
            if (l.text != "left") fail(l, "expected left");
            PendingSide left = side();
            Token rt = expect_word();
            if (rt.text != "right") fail(rt, "expected right");
            PendingSide right = side();
            expect(Token::RBrace);
            sides.emplace_back(std::move(left), std::move(right));
        }
        if (sides.empty()) fail(name, "rule " + name.text + " has no preform");
        pending_rules_.push_back({name, r.name, std::move(sides), inline_decl});
        return r;
    }

    void rns_decl() {
        Token name = expect_word();
        expect(Token::LBrace);
        PendingRns pr;
        pr.at = name;
        pr.rns.name = name.text;
        for (;;) {
            Token t = next();
            if (t.kind == Token::RBrace) break;
            if (t.kind != Token::Word) fail(t, "expected rule or condition");
            if (t.text == "rule") {
                if (toks_[pos_ + 1].kind == Token::LBrace) {
                    Rule inline_rule = rule_decl(true);
                    pr.rule_refs.push_back({t, inline_rule.name, pending_rules_.size() - 1});
                } else {
                    Token ref = expect_word();
                    pr.rule_refs.push_back({ref, ref.text, std::nullopt});
                }
            } else if (t.text == "condition") {
                Token kind = expect_word();
                Condition c;
                if (kind.text == "fresh-letters") {
                    c.kind = ConditionKind::FreshLetters;
                } else if (kind.text == "redex-disjoint") {
                    c.kind = ConditionKind::RedexDisjoint;
                } else if (kind.text == "redex-anchored") {
                    c.kind = ConditionKind::RedexAnchored;
                } else if (kind.text == "order" || kind.text == "letters-outside") {
                    c.kind = kind.text == "order" ? ConditionKind::ApplyOrder : ConditionKind::LettersOutside;
                    Token arg = expect(Token::String);
                    std::stringstream ss(arg.text);
                    std::string item;
                    while (std::getline(ss, item, ','))
                        if (!item.empty()) c.args.push_back(item);
                } else {
                    fail(kind, "unknown condition '" + kind.text + "'");
                }
                pr.rns.conditions.push_back(c);
            } else {
                fail(t, "expected rule or condition");
            }
        }
        if (doc_.rnss.count(name.text)) fail(name, "duplicate rns " + name.text);
        pending_rns_.push_back(std::move(pr));
    }

    void alphabet_decl() {
        expect(Token::LBrace);
        Alphabet a;
        for (;;) {
            Token t = next();
            if (t.kind == Token::RBrace) break;
            if (t.kind != Token::Word) fail(t, "expected alphabet statement");
            if (t.text == "letter") {
                Token l = expect_word();
                int in = rank_field("in");
                int out = rank_field("out");
                a.ranked[l.text] = {in, out};
            } else if (t.text == "frontier") {
                a.frontier.insert(expect_word().text);
            } else if (t.text == "fresh-prefix") {
                a.fresh_prefix = expect_word().text;
            } else {
                fail(t, "unknown alphabet statement '" + t.text + "'");
            }
        }
        for (const auto& f : a.frontier)
            if (a.ranked.count(f)) throw ParseError(source_, 0, 0, "letter " + f + " is both ranked and frontier");
        doc_.alphabet = a;
    }

    Net resolve_side(PendingSide& s) {
        if (s.is_ref) {
            auto it = doc_.nets.find(s.ref);
            if (it == doc_.nets.end()) fail(s.at, "unknown net @" + s.ref);
            return it->second;
        }
        return finish_net(std::move(s.raw), s.at);
    }

    void resolve() {
        std::vector<Rule> resolved;
        for (auto& pr : pending_rules_) {
            Rule r;
            r.name = pr.name;
            for (auto& [l, rt] : pr.sides) {
                Preform p{resolve_side(l), resolve_side(rt)};
                try {
                    check_preform(p);
                } catch (const RuleError& e) {
                    fail(pr.at, std::string("rule ") + pr.name + ": " + e.what());
                }
                r.preforms.push_back(std::move(p));
            }
            if (!pr.inline_decl) doc_.rules.insert_or_assign(r.name, r);
            resolved.push_back(std::move(r));
        }
        for (auto& pr : pending_rns_) {
            for (const auto& ref : pr.rule_refs) {
                if (ref.pending) {
                    pr.rns.rules.push_back(resolved[*ref.pending]);
                    continue;
                }
                auto it = doc_.rules.find(ref.name);
                if (it == doc_.rules.end()) fail(ref.at, "unknown rule " + ref.name);
                pr.rns.rules.push_back(it->second);
            }
            try {
                check_rns(pr.rns);
            } catch (const RuleError& e) {
                fail(pr.at, e.what());
            }
            doc_.rnss.emplace(pr.rns.name, pr.rns);
        }
    }

    struct PendingRule {
        Token at;
        std::string name;
        std::vector<std::pair<PendingSide, PendingSide>> sides;
        bool inline_decl = false;
    };
    struct RuleRef {
        Token at;
        std::string name;
        std::optional<std::size_t> pending;  // inline declaration
    };
    struct PendingRns {
        Token at;
        Rns rns;
        std::vector<RuleRef> rule_refs;
    };

    std::vector<Token> toks_;
    std::string source_;
    std::size_t pos_ = 0;
    Document doc_;
    std::vector<PendingRule> pending_rules_;
    std::vector<PendingRns> pending_rns_;
    std::set<std::string> top_rules_;
};

void print_body(std::ostringstream& os, const Net& n, const std::string& indent) {
    for (const auto& [id, node] : n.nodes()) {
        if (node.is_var)
            os << indent << "var " << id << " " << node.letter << "\n";
        else
            os << indent << "node " << id << " " << node.letter << " in=" << node.in_rank << " out=" << node.out_rank
               << "\n";
    }
    for (const auto& e : n.edges())
        os << indent << "edge " << to_string(e.src_port()) << " -- " << to_string(e.dst_port()) << "\n";
    for (const auto& [name, p] : n.tags()) os << indent << "tag " << name << " " << to_string(p) << "\n";
}

void print_rule_into(std::ostringstream& os, const Rule& r, const std::string& indent) {
    os << indent << "rule " << r.name << " {\n";
    for (const auto& p : r.preforms) {
        os << indent << "  preform {\n";
        os << indent << "    left {\n";
        print_body(os, p.left, indent + "      ");
        os << indent << "    }\n";
        os << indent << "    right {\n";
        print_body(os, p.right, indent + "      ");
        os << indent << "    }\n";
        os << indent << "  }\n";
    }
    os << indent << "}\n";
}

std::string join(const std::vector<std::string>& v, const std::string& sep) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? sep : "") + v[i];
    return out;
}

}  // namespace

Document parse_document(std::string_view text, const std::string& source) {
    Lexer lex(text, source);
    Parser parser(lex.run(), source);
    return parser.run();
}

Document load_document(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError(path, 0, 0, "cannot open file");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_document(ss.str(), path);
}

Net parse_net(std::string_view text, const std::string& source) {
    Document d = parse_document(text, source);
    if (d.net_order.empty()) throw ParseError(source, 1, 1, "no net declared");
    return d.nets.at(d.net_order.front());
}

std::string print_net(const Net& n) {
    std::ostringstream os;
    os << "net " << (n.name().empty() ? "anon" : n.name()) << " {\n";
    print_body(os, n, "  ");
    os << "}\n";
    return os.str();
}

std::string print_rule(const Rule& r) {
    std::ostringstream os;
    print_rule_into(os, r, "");
    return os.str();
}

std::string print_rns_with(const Rns& r, const std::map<std::string, Rule>* known) {
    std::ostringstream os;
    os << "rns " << r.name << " {\n";
    for (const auto& rule : r.rules) {
        auto it = known ? known->find(rule.name) : std::map<std::string, Rule>::const_iterator{};
        if (known && it != known->end() && print_rule(it->second) == print_rule(rule))
            os << "  rule " << rule.name << "\n";
        else
            print_rule_into(os, rule, "  ");
    }
    for (const auto& c : r.conditions) {
        os << "  condition " << to_string(c.kind);
        if (c.kind == ConditionKind::ApplyOrder || c.kind == ConditionKind::LettersOutside)
            os << " \"" << join(c.args, ",") << "\"";
        os << "\n";
    }
    os << "}\n";
    return os.str();
}

std::string print_rns(const Rns& r) { return print_rns_with(r, nullptr); }

std::string print_alphabet(const Alphabet& a) {
    std::ostringstream os;
    os << "alphabet {\n";
    for (const auto& [l, r] : a.ranked) os << "  letter " << l << " in=" << r.first << " out=" << r.second << "\n";
    for (const auto& f : a.frontier) os << "  frontier " << f << "\n";
    os << "  fresh-prefix " << a.fresh_prefix << "\n";
    os << "}\n";
    return os.str();
}

std::string print_document(const Document& d) {
    std::string out;
    if (d.alphabet) out += print_alphabet(*d.alphabet);
    std::vector<std::string> names = d.net_order;
    std::sort(names.begin(), names.end());
    for (const auto& n : names) out += print_net(d.nets.at(n));
    for (const auto& [k, r] : d.rules) out += print_rule(r);
    for (const auto& [k, r] : d.rnss) out += print_rns_with(r, &d.rules);
    return out;
}

std::string to_dot(const Net& n) {
    std::ostringstream os;
    auto q = [](const std::string& s) {
        std::string out = "\"";
        for (char c : s) {
            if (c == '"' || c == '\\') out += '\\';
            out += c;
        }
        return out + "\"";
    };
    os << "digraph " << q(n.name().empty() ? "net" : n.name()) << " {\n";
    for (const auto& [id, node] : n.nodes())
        os << "  " << q(id) << " [label=" << q(id + ":" + node.letter) << (node.is_var ? ", shape=diamond" : "")
           << "];\n";
    for (const auto& e : n.edges())
        os << "  " << q(e.src) << " -> " << q(e.dst) << " [label="
           << q("out" + std::to_string(e.out) + "→in" + std::to_string(e.in)) << "];\n";
    for (const auto& p : n.unoccupied_ports()) {
        std::string stub = "free:" + to_string(p);
        auto tag = n.tag_at(p);
        os << "  " << q(stub) << " [shape=point];\n";
        std::string label = (p.dir == Dir::In ? "in" : "out") + std::to_string(p.index) + (tag ? " " + *tag : "");
        if (p.dir == Dir::In)
            os << "  " << q(stub) << " -> " << q(p.node) << " [style=dashed, label=" << q(label) << "];\n";
        else
            os << "  " << q(p.node) << " -> " << q(stub) << " [style=dashed, label=" << q(label) << "];\n";
    }
    os << "}\n";
    return os.str();
}

}  // namespace netrw
