#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "netrw/net.hpp"
#include "netrw/rns.hpp"

namespace netrw {

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& source, int line, int column, const std::string& msg);
    int line() const { return line_; }
    int column() const { return column_; }

private:
    int line_;
    int column_;
};

struct Document {
    std::optional<Alphabet> alphabet;
    std::map<std::string, Net> nets;
    std::vector<std::string> net_order;
    std::map<std::string, Rule> rules;
    std::map<std::string, Rns> rnss;

    void merge(const Document& other);
    const Net& net(const std::string& name) const;
    const Rns& rns(const std::string& name) const;  // a bare rule is promoted to a one-rule RNS
};

Document parse_document(std::string_view text, const std::string& source = "<input>");
Document load_document(const std::string& path);
Net parse_net(std::string_view text, const std::string& source = "<input>");

std::string print_net(const Net& n);
std::string print_rule(const Rule& r);
std::string print_rns(const Rns& r);
std::string print_alphabet(const Alphabet& a);
std::string print_document(const Document& d);
std::string to_dot(const Net& n);

}  // namespace netrw
