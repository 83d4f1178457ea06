#include "ademiner/taxonomy.hpp"

#include "ademiner/error.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <tuple>

namespace ade {

std::string_view to_string(NodeKind kind) {
    switch (kind) {
    case NodeKind::active_principle: return "active_principle";
    case NodeKind::indication: return "indication";
    case NodeKind::trial_type: return "trial_type";
    case NodeKind::ade_category: return "ade_category";
    }
    return "?";
}

std::optional<NodeKind> parse_node_kind(std::string_view s) {
    for (auto k : all_node_kinds)
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

const std::string& TaxonomyNode::label(std::string_view lang) const {
    if (auto it = labels.find(std::string(lang)); it != labels.end() && !it->second.empty())
        return it->second;
    return labels.at("en");
}

namespace {

// Iterative three-colour DFS over parent edges. Returns the first cycle found
// as the list of node ids along it, or an empty vector.
std::vector<std::string> find_cycle(const std::vector<TaxonomyNode>& nodes,
                                    const std::vector<std::vector<std::size_t>>& parents) {
    enum : char { white, grey, black };
    std::vector<char> colour(nodes.size(), white);
    std::vector<std::size_t> path;

    for (std::size_t root = 0; root < nodes.size(); ++root) {
        if (colour[root] != white)
            continue;
        std::vector<std::pair<std::size_t, std::size_t>> stack{{root, 0}};
        colour[root] = grey;
        path.assign(1, root);
        while (!stack.empty()) {
            auto& [v, next] = stack.back();
            if (next < parents[v].size()) {
                std::size_t p = parents[v][next++];
                if (colour[p] == grey) {
                    auto it = std::find(path.begin(), path.end(), p);
                    std::vector<std::string> cycle;
                    for (; it != path.end(); ++it)
                        cycle.push_back(nodes[*it].id);
                    return cycle;
                }
                if (colour[p] == white) {
                    colour[p] = grey;
                    path.push_back(p);
                    stack.emplace_back(p, 0);
                }
            } else {
                colour[v] = black;
                path.pop_back();
                stack.pop_back();
            }
        }
    }
    return {};
}

} // namespace

Taxonomy Taxonomy::build(std::vector<TaxonomyNode> nodes) {
    Taxonomy t;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        auto& n = nodes[i];
        if (n.id.empty())
            throw ValidationError("node with empty id");
        if (n.id.find_first_of("|;, \t\r\n") != std::string::npos)
            throw ValidationError("node id '" + n.id + "' contains a reserved character");
        if (auto it = n.labels.find("en"); it == n.labels.end() || it->second.empty())
            throw ValidationError("node '" + n.id + "' has no English label");
        std::sort(n.parents.begin(), n.parents.end());
        n.parents.erase(std::unique(n.parents.begin(), n.parents.end()), n.parents.end());
        if (!t.index_.emplace(n.id, i).second)
            throw ValidationError("duplicate id '" + n.id + "'");
    }

    std::vector<std::vector<std::size_t>> parent_idx(nodes.size());
    t.children_.assign(nodes.size(), {});
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        for (const auto& p : nodes[i].parents) {
            auto it = t.index_.find(p);
            if (it == t.index_.end())
                throw ValidationError("node '" + nodes[i].id + "' references unknown parent '" + p + "'");
            if (nodes[it->second].kind != nodes[i].kind)
                throw ValidationError("node '" + nodes[i].id + "' has parent '" + p +
                                      "' of a different kind");
            parent_idx[i].push_back(it->second);
            t.children_[it->second].push_back(i);
        }
    }

    if (auto cycle = find_cycle(nodes, parent_idx); !cycle.empty())
        throw CycleError(std::move(cycle));

    // Ancestor closure in topological order (parents before children).
    std::vector<std::size_t> pending(nodes.size());
    std::vector<std::size_t> order;
    order.reserve(nodes.size());
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        pending[i] = parent_idx[i].size();
        if (pending[i] == 0)
            order.push_back(i);
    }
    for (std::size_t k = 0; k < order.size(); ++k)
        for (auto c : t.children_[order[k]])
            if (--pending[c] == 0)
                order.push_back(c);

    t.ancestors_.assign(nodes.size(), {});
    for (auto v : order) {
        auto& anc = t.ancestors_[v];
        anc.push_back(v);
        for (auto p : parent_idx[v])
            anc.insert(anc.end(), t.ancestors_[p].begin(), t.ancestors_[p].end());
        std::sort(anc.begin(), anc.end());
        anc.erase(std::unique(anc.begin(), anc.end()), anc.end());
    }

    for (std::size_t i = 0; i < nodes.size(); ++i) {
        const auto& n = nodes[i];
        t.by_kind_[static_cast<std::size_t>(n.kind)].push_back(n.id);
        for (const auto& [lang, label] : n.labels)
            if (!label.empty())
                t.label_index_.emplace(std::pair{static_cast<int>(n.kind), text::normalize_label(label)}, n.id);
    }
    for (auto& ids : t.by_kind_)
        std::sort(ids.begin(), ids.end());

    t.nodes_ = std::move(nodes);
    return t;
}

std::size_t Taxonomy::index_of(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end())
        throw UnknownIdError(std::string(id));
    return it->second;
}

bool Taxonomy::contains(std::string_view id) const {
    return index_.count(std::string(id)) != 0;
}

bool Taxonomy::contains(std::string_view id, NodeKind kind) const {
    const auto* n = find(id);
    return n && n->kind == kind;
}

const TaxonomyNode& Taxonomy::node(std::string_view id) const {
    return nodes_[index_of(id)];
}

const TaxonomyNode* Taxonomy::find(std::string_view id) const {
    auto it = index_.find(std::string(id));
    return it == index_.end() ? nullptr : &nodes_[it->second];
}

const std::vector<std::string>& Taxonomy::ids(NodeKind kind) const {
    return by_kind_[static_cast<std::size_t>(kind)];
}

bool Taxonomy::is_descendant_or_self(std::string_view node, std::string_view ancestor) const {
    auto n = index_of(node);
    auto a = index_of(ancestor);
    if (nodes_[n].kind != nodes_[a].kind)
        throw ValidationError("cross-kind subsumption query: '" + std::string(node) + "' (" +
                              std::string(to_string(nodes_[n].kind)) + ") vs '" +
                              std::string(ancestor) + "' (" +
                              std::string(to_string(nodes_[a].kind)) + ")");
    return std::binary_search(ancestors_[n].begin(), ancestors_[n].end(), a);
}

bool Taxonomy::is_strict_descendant(std::string_view node, std::string_view ancestor) const {
    return node != ancestor && is_descendant_or_self(node, ancestor);
}

std::vector<std::string> Taxonomy::descendants_or_self(std::string_view id) const {
    auto root = index_of(id);
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{root};
    seen[root] = 1;
    std::vector<std::string> out;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        out.push_back(nodes_[v].id);
        for (auto c : children_[v])
            if (!seen[c]) {
                seen[c] = 1;
                stack.push_back(c);
            }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Taxonomy::ancestors_or_self(std::string_view id) const {
    std::vector<std::string> out;
    for (auto a : ancestors_[index_of(id)])
        out.push_back(nodes_[a].id);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<std::string> Taxonomy::children(std::string_view id) const {
    std::vector<std::string> out;
    for (auto c : children_[index_of(id)])
        out.push_back(nodes_[c].id);
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<std::string> Taxonomy::resolve(NodeKind kind, std::string_view txt) const {
    auto trimmed = text::trim(txt);
    if (contains(trimmed, kind))
        return std::string(trimmed);
    auto it = label_index_.find(std::pair{static_cast<int>(kind), text::normalize_label(trimmed)});
    if (it != label_index_.end())
        return it->second;
    return std::nullopt;
}

Taxonomy load_taxonomy(std::string_view document) {
    std::vector<TaxonomyNode> nodes;
    std::unordered_map<std::string, std::size_t> line_of;

    text::for_each_line(document, [&](std::size_t line_no, std::string_view line) {
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#')
            return;
        auto fields = text::split(body, '|');
        if (fields.size() != 5)
            throw ParseError("expected 5 '|'-separated fields, got " + std::to_string(fields.size()), line_no);
        TaxonomyNode n;
        n.id = std::string(text::trim(fields[0]));
        if (n.id.empty())
            throw ParseError("empty id", line_no);
        auto kind = parse_node_kind(text::trim(fields[1]));
        if (!kind)
            throw ParseError("unknown kind '" + std::string(text::trim(fields[1])) + "'", line_no);
        n.kind = *kind;
        auto en = text::trim(fields[2]);
        if (en.empty())
            throw ParseError("empty English label for '" + n.id + "'", line_no);
        n.labels["en"] = std::string(en);
        if (auto fr = text::trim(fields[3]); !fr.empty())
            n.labels["fr"] = std::string(fr);
        if (auto parents = text::trim(fields[4]); !parents.empty()) {
            for (auto& p : text::split(parents, ';')) {
                auto pid = text::trim(p);
                if (pid.empty())
                    throw ParseError("empty parent id", line_no);
                n.parents.emplace_back(pid);
            }
        }
        if (!line_of.emplace(n.id, line_no).second)
            throw ParseError("duplicate id '" + n.id + "' (first defined on line " +
                                 std::to_string(line_of[n.id]) + ")",
                             line_no);
        nodes.push_back(std::move(n));
    });

    return Taxonomy::build(std::move(nodes));
}

std::string write_taxonomy(const Taxonomy& t) {
    std::string out;
    for (const auto& n : t.nodes()) {
        out += n.id;
        out += '|';
        out += to_string(n.kind);
        out += '|';
        out += n.labels.at("en");
        out += '|';
        if (auto it = n.labels.find("fr"); it != n.labels.end())
            out += it->second;
        out += '|';
        out += text::join(n.parents, ";");
        out += '\n';
    }
    return out;
}

std::vector<Suggestion> autocomplete(const Taxonomy& t, std::string_view fragment,
                                     NodeKind kind, std::string_view lang,
                                     std::size_t limit) {
    if (limit == 0)
        throw ValidationError("autocomplete limit must be at least 1");

    struct Candidate {
        std::size_t pos;
        std::string label;
        std::string id;
    };
    std::vector<Candidate> found;
    auto needle = text::to_lower(text::trim(fragment));
    for (const auto& id : t.ids(kind)) {
        const auto& label = t.node(id).label(lang);
        auto pos = needle.empty() ? 0 : text::to_lower(label).find(needle);
        if (pos != std::string::npos)
            found.push_back({pos, label, id});
    }

    auto key = [&](const Candidate& c) {
        auto lower = text::to_lower(c.label);
        return needle.empty() ? std::tuple(std::size_t{0}, std::size_t{0}, lower, c.id)
                              : std::tuple(c.pos, c.label.size(), lower, c.id);
    };
    std::sort(found.begin(), found.end(),
              [&](const Candidate& a, const Candidate& b) { return key(a) < key(b); });

    std::vector<Suggestion> out;
    for (std::size_t i = 0; i < found.size() && i < limit; ++i)
        out.push_back({found[i].id, found[i].label});
    return out;
}

} // namespace ade
