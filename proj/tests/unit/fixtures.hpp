#pragma once

#include <string>

#include "netrw/netf.hpp"

namespace fx {

inline netrw::Document load(const std::string& file) {
    return netrw::load_document(std::string(NETRW_FIXTURES) + "/" + file);
}

inline netrw::Net net(const std::string& file) {
    auto d = load(file);
    return d.nets.at(d.net_order.front());
}

inline netrw::Net d1() { return net("d1.netf"); }
inline netrw::Net d2() { return net("d2.netf"); }
inline netrw::Net c1() { return net("c1.netf"); }
inline netrw::Rule r1() { return load("r1.netf").rules.at("R1"); }
inline netrw::Rns r1_rns() { return load("r1.netf").rns("r1"); }

inline netrw::Net parse(const std::string& text) { return netrw::parse_net(text); }

// Single-node relabel rule between two letters of the same rank, all ports tagged.
inline netrw::Rule relabel(const std::string& name, const std::string& from, const std::string& to, int in, int out) {
    std::string l = "node x " + from + " in=" + std::to_string(in) + " out=" + std::to_string(out) + "\n";
    std::string r = "node x " + to + " in=" + std::to_string(in) + " out=" + std::to_string(out) + "\n";
    std::string tags;
    for (int i = 0; i < in; ++i) tags += "tag i" + std::to_string(i) + " x:in:" + std::to_string(i) + "\n";
    for (int i = 0; i < out; ++i) tags += "tag o" + std::to_string(i) + " x:out:" + std::to_string(i) + "\n";
    auto d = netrw::parse_document("rule " + name + " { preform { left {\n" + l + tags + "} right {\n" + r + tags + "} } }");
    return d.rules.at(name);
}

inline netrw::Rns rns_of(const netrw::Rule& r) {
    netrw::Rns out;
    out.name = r.name;
    out.rules.push_back(r);
    return out;
}

}  // namespace fx
