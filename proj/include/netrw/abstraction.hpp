#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "netrw/net.hpp"
#include "netrw/rewrite.hpp"
#include "netrw/rns.hpp"

namespace netrw {

enum class AbstractionErrorKind {
    DisconnectedBlock,
    NotAPartition,
    SearchExhausted,
    NotSisters,
    NonTerminatingColouring,
    InvalidTarget,
};

const char* to_string(AbstractionErrorKind k);

class AbstractionError : public std::runtime_error {
public:
    AbstractionError(AbstractionErrorKind kind, const std::string& what);
    AbstractionErrorKind kind() const { return kind_; }

private:
    AbstractionErrorKind kind_;
};

// One contraction rule: a block of the substance and the node it becomes.
// in_ports[k] / out_ports[k] is the substance port that turns into the
// concept node's k-th in / out port.
struct BlockInfo {
    std::string rule;
    std::set<std::string> nodes;
    std::string concept_id;
    Node concept_node;
    std::vector<PortRef> in_ports;
    std::vector<PortRef> out_ports;
};

struct Prns {
    Rns rns;
    std::vector<BlockInfo> blocks;

    const BlockInfo* block_of_rule(const std::string& rule) const;
    const BlockInfo* block_of_concept(const std::string& concept_id) const;
    std::set<std::string> concept_letters() const;
};

// How a block should be contracted. Empty fields take defaults: the smallest
// block node id, a minted fresh letter, boundary ports in sorted order.
struct BlockTarget {
    std::set<std::string> nodes;
    std::string concept_id;
    std::string letter;
    std::vector<PortRef> in_ports;
    std::vector<PortRef> out_ports;
};

// Boundary ports of a block: severed edge endpoints and unoccupied ports, sorted.
std::vector<PortRef> block_boundary(const Net& c, const std::set<std::string>& block, Dir d);

Prns contraction_prns(const Net& c, const std::vector<BlockTarget>& targets, FreshMinter* minter = nullptr,
                      const std::string& name = "W");
Prns synthesize_prns(const Net& c, const PartitionSpec& blocks, FreshMinter* minter = nullptr,
                     const std::string& name = "W");
Prns invert_prns(const Prns& w);
// Recovers block bookkeeping from a contraction system read back from text:
// one preform per rule, a single right node, every boundary port tagged.
Prns prns_from_rns(const Rns& r);

// ------------------------------------------------------------ validation

enum class RnsType { PRNS, GPRNS, CRNS, GCRNS, GCdRNS };
const char* to_string(RnsType t);
std::optional<RnsType> parse_rns_type(const std::string& s);

struct ConditionCheck {
    std::string condition;
    bool pass = true;
    std::vector<std::string> counterexamples;  // rule names
    std::string note;
};

struct ValidationReport {
    RnsType type = RnsType::PRNS;
    std::vector<ConditionCheck> checks;
    bool valid() const;
};

ValidationReport validate_rns_type(const Rns& r, RnsType type, const Jungle& subject, std::size_t search_bound = 16,
                                   const std::optional<Net>& witness_host = std::nullopt);

// ------------------------------------------------------------ concept

int concept_budget(const Rns& w, const Jungle& c);
Jungle concept_of(const Jungle& c, const Rns& w);
Jungle roundtrip(const Jungle& c, const Rns& w);

// ------------------------------------------------------------ characterization

struct Characterization {
    bool holds = false;
    std::optional<PartitionSpec> witness;
    std::string reason;
};

inline constexpr std::size_t kCharacterizationBound = 12;

Characterization characterization_check(const Net& a, const Net& b);

// ------------------------------------------------------------ sisters and origins

enum class SisterMode { Total, Split };
const char* to_string(SisterMode m);

bool abstract_sisters(const Jungle& a, const Jungle& b, SisterMode mode);
bool abstract_sisters(const Net& a, const Net& b, SisterMode mode);

struct OriginWitness {
    Net origin;
    Prns w_a;
    Prns w_b;
};

struct OriginSearchOptions {
    std::size_t max_origin_nodes = 6;
    bool precheck = true;  // reject non-sisters before enumerating
    std::string letter_prefix = "_o";
};

struct OriginSearchResult {
    std::optional<OriginWitness> witness;
    std::size_t candidates = 0;  // cell layouts examined
    bool exhausted() const { return !witness; }
};

OriginSearchResult search_common_origin(const Net& a, const Net& b, const OriginSearchOptions& opts = {});
bool verify_origin(const OriginWitness& w, const Net& a, const Net& b);

// ------------------------------------------------------------ cover systems

struct Crns {
    Rns rns;
    std::optional<Net> witness_host;
};

struct NotConvertible {
    std::string rule;
    std::string reason;
};

std::variant<Prns, NotConvertible> crns_to_prns(const Crns& r, const Jungle& t, FreshMinter* minter = nullptr);

// ------------------------------------------------------------ colouring

struct ColouringRule {
    std::string rule;   // rule of the coloured system
    Rns colouring;      // its colouring system
};

struct ColouringResult {
    std::map<std::string, Jungle> coloured;  // rule -> coloured jungle
    bool cross_colouring = true;
    std::vector<std::string> failing;
};

ColouringResult colouring_overlaps(const Rns& w, const std::vector<ColouringRule>& colourings, const Net& r,
                                   int budget = 16);
bool is_cross_colouring(const Rns& w, const std::vector<ColouringRule>& colourings, const Net& r, int budget = 16);

}  // namespace netrw
