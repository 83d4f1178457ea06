#pragma once

// Multi-parent classification hierarchies (active principles, indications,
// trial types, ADE categories) with subsumption queries.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace ade {

enum class NodeKind { active_principle, indication, trial_type, ade_category };

inline constexpr std::array<NodeKind, 4> all_node_kinds = {
    NodeKind::active_principle, NodeKind::indication, NodeKind::trial_type,
    NodeKind::ade_category};

std::string_view to_string(NodeKind kind);
std::optional<NodeKind> parse_node_kind(std::string_view s);

struct TaxonomyNode {
    std::string id;
    std::map<std::string, std::string> labels; // language code -> label; "en" required
    std::vector<std::string> parents;          // sorted, unique
    NodeKind kind = NodeKind::active_principle;

    // Label in `lang`, falling back to English.
    const std::string& label(std::string_view lang = "en") const;

    bool operator==(const TaxonomyNode&) const = default;
};

// Immutable after construction. The ancestor closure is precomputed, so
// subsumption tests are a binary search.
class Taxonomy {
public:
    Taxonomy() = default;

    // Validates every invariant: unique ids, "en" labels, parents resolving
    // to nodes of the same kind, acyclicity. Throws ValidationError or
    // CycleError.
    static Taxonomy build(std::vector<TaxonomyNode> nodes);

    std::size_t size() const noexcept { return nodes_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }
    bool contains(std::string_view id) const;
    bool contains(std::string_view id, NodeKind kind) const;

    // Throws UnknownIdError.
    const TaxonomyNode& node(std::string_view id) const;
    const TaxonomyNode* find(std::string_view id) const;

    // Nodes in load order.
    const std::vector<TaxonomyNode>& nodes() const noexcept { return nodes_; }
    // Ids of one kind, sorted.
    const std::vector<std::string>& ids(NodeKind kind) const;

    // True iff `ancestor` is reachable from `node` through zero or more
    // parent edges. Both ids must exist and share a kind.
    bool is_descendant_or_self(std::string_view node, std::string_view ancestor) const;
    bool is_strict_descendant(std::string_view node, std::string_view ancestor) const;

    // Sorted id sets.
    std::vector<std::string> descendants_or_self(std::string_view id) const;
    std::vector<std::string> ancestors_or_self(std::string_view id) const;
    std::vector<std::string> children(std::string_view id) const;

    // Resolves an id or a label (any language, case-insensitive,
    // whitespace-normalized) to an id of the given kind.
    std::optional<std::string> resolve(NodeKind kind, std::string_view text) const;

    bool operator==(const Taxonomy& other) const { return nodes_ == other.nodes_; }

private:
    std::size_t index_of(std::string_view id) const;

    std::vector<TaxonomyNode> nodes_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<std::vector<std::size_t>> children_;
    std::vector<std::vector<std::size_t>> ancestors_; // sorted, includes self
    std::array<std::vector<std::string>, all_node_kinds.size()> by_kind_;
    // (kind, normalized label) -> id
    std::map<std::pair<int, std::string>, std::string, std::less<>> label_index_;
};

// Line format: id|kind|label_en|label_fr|parent;parent;...
// Blank lines and lines starting with '#' are skipped.
Taxonomy load_taxonomy(std::string_view document);
std::string write_taxonomy(const Taxonomy& t);

struct Suggestion {
    std::string id;
    std::string label;

    bool operator==(const Suggestion&) const = default;
};

// Case-insensitive substring search over labels of one kind, ordered by
// (match position, label length, label). An empty fragment lists labels
// alphabetically.
std::vector<Suggestion> autocomplete(const Taxonomy& t, std::string_view fragment,
                                     NodeKind kind, std::string_view lang,
                                     std::size_t limit);

} // namespace ade
