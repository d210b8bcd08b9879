#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace netrw {

enum class Dir : std::uint8_t { In, Out };

inline const char* to_string(Dir d) { return d == Dir::In ? "in" : "out"; }
inline Dir opposite(Dir d) { return d == Dir::In ? Dir::Out : Dir::In; }

struct PortRef {
    std::string node;
    Dir dir = Dir::In;
    int index = 0;
    auto operator<=>(const PortRef&) const = default;
};

std::string to_string(const PortRef& p);

struct Edge {
    std::string src;
    int out = 0;
    std::string dst;
    int in = 0;
    auto operator<=>(const Edge&) const = default;
    PortRef src_port() const { return {src, Dir::Out, out}; }
    PortRef dst_port() const { return {dst, Dir::In, in}; }
};

struct Node {
    std::string letter;
    int in_rank = 0;
    int out_rank = 0;
    bool is_var = false;  // frontier letter; letter holds the variable name
    bool operator==(const Node&) const = default;
    int rank(Dir d) const { return d == Dir::In ? in_rank : out_rank; }
};

enum class NetErrorKind {
    UnknownLetter,
    PortIndexOutOfRange,
    PortDoubleOccupied,
    DuplicateTag,
    TagOnOccupiedPort,
    RankConflict,
    UnknownNode,
    Disconnected,
    BoundTooSmall,
    SearchExhausted,
};

const char* to_string(NetErrorKind k);

class NetError : public std::runtime_error {
public:
    NetError(NetErrorKind kind, const std::string& what);
    NetErrorKind kind() const { return kind_; }

private:
    NetErrorKind kind_;
};

// Ranked, frontier and arity namespaces are kept apart; letters minted by
// FreshMinter start with fresh_prefix and never collide with user letters.
struct Alphabet {
    std::map<std::string, std::pair<int, int>> ranked;
    std::set<std::string> frontier;
    std::string fresh_prefix = "_w";

    bool is_ground(const std::string& letter) const;
    bool knows(const Node& n) const;
};

// Unvalidated description; the only way to obtain a Net is validate_net.
struct RawNet {
    std::string name;
    std::map<std::string, Node> nodes;
    std::set<Edge> edges;
    std::map<std::string, PortRef> tags;
};

struct ValidateOptions {
    const Alphabet* alphabet = nullptr;
    bool require_connected = false;
};

class Net {
public:
    Net() = default;

    const std::string& name() const { return raw_.name; }
    const std::map<std::string, Node>& nodes() const { return raw_.nodes; }
    const std::set<Edge>& edges() const { return raw_.edges; }
    const std::map<std::string, PortRef>& tags() const { return raw_.tags; }
    const RawNet& raw() const { return raw_; }

    std::size_t size() const { return raw_.nodes.size(); }
    bool empty() const { return raw_.nodes.empty(); }
    bool has_node(const std::string& id) const { return raw_.nodes.count(id) != 0; }
    const Node& node(const std::string& id) const;

    std::optional<PortRef> partner(const PortRef& p) const;
    bool occupied(const PortRef& p) const { return occupancy_.count(p) != 0; }
    std::vector<PortRef> ports(const std::string& id) const;
    std::vector<PortRef> unoccupied_ports() const;
    std::optional<std::string> tag_at(const PortRef& p) const;

    // Non-variable letters.
    std::set<std::string> letters() const;
    std::set<std::string> var_names() const;

    Net renamed(const std::string& new_name) const;

private:
    friend Net validate_net(RawNet raw, const ValidateOptions& opts);
    RawNet raw_;
    std::map<PortRef, PortRef> occupancy_;
};

Net validate_net(RawNet raw, const ValidateOptions& opts = {});

// A set of nets, deduplicated by strict equality and ordered by canonical key.
class Jungle {
public:
    Jungle() = default;
    Jungle(std::initializer_list<Net> nets);
    explicit Jungle(const std::vector<Net>& nets);

    bool insert(const Net& n);  // false if an equal net is present
    bool contains(const Net& n) const;
    void merge(const Jungle& other);
    std::size_t size() const { return nets_.size(); }
    bool empty() const { return nets_.empty(); }
    std::vector<Net> nets() const;
    std::vector<std::string> keys() const;
    const std::map<std::string, Net>& by_key() const { return nets_; }

    bool operator==(const Jungle& o) const;
    bool includes(const Jungle& o) const;  // o is a subset of *this

private:
    std::map<std::string, Net> nets_;
};

enum class EqMode { Strict, Permuting };

// Canonical form under strict equality (tags ignored unless with_tags).
std::string canonical_key(const Net& n, bool with_tags = false);
bool nets_equal(const Net& p, const Net& q, EqMode mode = EqMode::Strict);
// Strict equality that must also carry every tag name to the same port.
bool nets_equal_tagged(const Net& p, const Net& q);

struct Delta {
    int total = 0;
    int in = 0;
    int out = 0;
    auto operator<=>(const Delta&) const = default;
};

std::string to_string(const Delta& d);
Delta delta_d(const Net& n);
Delta delta_d(const Jungle& j);

enum class TagPolicy { None, Severed, AllBoundary };

// Default tag name for a port: "<node>.i<k>" / "<node>.o<k>".
std::string port_tag_name(const PortRef& p);

Net induced_subnet(const Net& t, const std::set<std::string>& keep, TagPolicy policy,
                   bool keep_existing_tags = true);

std::vector<std::set<std::string>> connected_subsets(const Net& t, std::size_t max_nodes);
std::vector<Net> enclosures(const Net& t, std::size_t max_nodes);

struct EmbedOptions {
    bool induced = true;
    bool skip_vars = false;            // variable nodes of the pattern are left unmapped
    bool untagged_free_must_be_free = false;
    bool anchored = false;             // pattern node ids map to the same host ids
    std::size_t limit = 0;             // 0 = unlimited
};

using NodeMap = std::map<std::string, std::string>;

// Enumerates injective letter/rank/edge-preserving maps of pattern nodes into
// host nodes; the callback returns false to stop.
void for_each_embedding(const Net& pattern, const Net& host, const EmbedOptions& opts,
                        const std::function<bool(const NodeMap&)>& cb);
bool is_enclosure(const Net& s, const Net& t);

struct PartitionSpec {
    std::vector<std::set<std::string>> blocks;
};

std::string to_string(const PartitionSpec& p);
bool is_connected_set(const Net& t, const std::set<std::string>& nodes);
bool is_partition(const Net& t, const PartitionSpec& p, bool require_connected = true);

struct PartitionReport {
    bool is_cover = false;
    bool is_saturating = false;
    bool is_partition = false;
    PartitionSpec induced;  // PI(A) restricted to t
    bool induced_is_partition = false;
};

// Elements are positioned in t by node id.
PartitionReport partition_ops(const Net& t, const std::vector<Net>& elements);

struct Structure {
    int components = 0;
    bool has_directed_loop = false;
    std::optional<int> height;
};

Structure structure(const Net& t);
Structure structure(const Jungle& j);
int component_count(const Net& t);
std::vector<std::set<std::string>> components(const Net& t);

struct OverlapResult {
    bool overlap = false;
    std::optional<Net> shared;
    bool exhausted = false;  // bound truncated the search
};

OverlapResult overlaps(const Net& p, const Net& q, std::size_t bound);

// Mints letters outside every letter it has been told to avoid.
class FreshMinter {
public:
    explicit FreshMinter(std::string prefix = "_w") : prefix_(std::move(prefix)) {}
    void avoid(const std::string& letter) { avoid_.insert(letter); }
    void avoid(const Net& n);
    void avoid(const Jungle& j);
    std::string mint();
    const std::string& prefix() const { return prefix_; }
    std::size_t counter() const { return counter_; }
    void set_counter(std::size_t c) { counter_ = c; }

private:
    std::string prefix_;
    std::size_t counter_ = 0;
    std::set<std::string> avoid_;
};

// Picks an id not present in `used`, starting from `base`.
std::string fresh_id(const std::string& base, const std::set<std::string>& used);

}  // namespace netrw
