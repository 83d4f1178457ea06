#include "ademiner/service.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <cctype>
#include <map>

namespace ade {

namespace {

int hex_value(char c) {
    if (c >= '0' && c <= '9')
        return c - '0';
    c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (c >= 'a' && c <= 'f')
        return c - 'a' + 10;
    return -1;
}

std::string url_decode(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '+') {
            out.push_back(' ');
        } else if (s[i] == '%' && i + 2 < s.size() && hex_value(s[i + 1]) >= 0 &&
                   hex_value(s[i + 2]) >= 0) {
            out.push_back(static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2])));
            i += 2;
        } else {
            out.push_back(s[i]);
        }
    }
    return out;
}

const std::vector<std::string> group_fields = {"ap",    "indication", "trialtype", "release",
                                               "route", "dose",       "unit",      "intakes"};

struct RawGroup {
    std::map<std::string, std::string> fields;
};

std::vector<std::string> items(std::string_view v) {
    std::vector<std::string> out;
    for (const auto& s : text::split(v, ','))
        out.emplace_back(text::trim(s));
    return out;
}

std::optional<Range> parse_range(const std::string& s) {
    // "10", "5-10", "5 - 10"; a leading '-' is not a negative sign here.
    auto dash = s.find('-', 1);
    auto lo = text::parse_double(text::trim(std::string_view(s).substr(0, dash)));
    if (!lo)
        return std::nullopt;
    std::optional<double> hi = lo;
    if (dash != std::string::npos)
        hi = text::parse_double(text::trim(std::string_view(s).substr(dash + 1)));
    if (!hi || *lo < 0 || *lo > *hi)
        return std::nullopt;
    return Range{*lo, *hi};
}

std::string format_range(const Range& r) {
    if (r.min == r.max)
        return text::format_double(r.min);
    return text::format_double(r.min) + "-" + text::format_double(r.max);
}

bool parse_bool(const std::string& v, const std::string& param) {
    auto l = text::to_lower(v);
    if (l == "1" || l == "true" || l == "yes" || l == "on")
        return true;
    if (l == "0" || l == "false" || l == "no" || l == "off" || l.empty())
        return false;
    throw ParamError(param, "expected a boolean, got '" + v + "'");
}

std::set<std::string> resolve_list(const std::string& value, NodeKind kind, const Taxonomy& t,
                                   const std::string& param) {
    std::set<std::string> ids;
    for (const auto& item : items(value)) {
        if (item.empty())
            continue;
        auto id = t.resolve(kind, item);
        if (!id)
            throw ParamError(param, "unknown " + std::string(to_string(kind)) + " '" + item + "'");
        ids.insert(*id);
    }
    return ids;
}

GroupQuery parse_group(std::size_t n, const RawGroup& raw, const Taxonomy& t) {
    const std::string prefix = "group_" + std::to_string(n) + "_";
    auto get = [&](const std::string& f) -> std::optional<std::string> {
        auto it = raw.fields.find(f);
        if (it == raw.fields.end())
            return std::nullopt;
        return it->second;
    };
    GroupQuery gq;
    if (auto v = get("trialtype"))
        gq.trial_type_ids = resolve_list(*v, NodeKind::trial_type, t, prefix + "trialtype");
    if (auto v = get("indication"))
        gq.indication_ids = resolve_list(*v, NodeKind::indication, t, prefix + "indication");

    std::vector<std::string> aps;
    if (auto v = get("ap")) {
        auto list = items(*v);
        list.erase(std::remove(list.begin(), list.end(), std::string()), list.end());
        if (!list.empty() && text::iequals(list.back(), "etc")) {
            gq.open_list = true;
            list.pop_back();
        }
        for (const auto& item : list) {
            if (text::iequals(item, "etc"))
                throw ParamError(prefix + "ap", "'etc' must close the list");
            auto id = t.resolve(NodeKind::active_principle, item);
            if (!id)
                throw ParamError(prefix + "ap", "unknown active principle '" + item + "'");
            aps.push_back(*id);
        }
    }
    for (const auto& id : aps)
        gq.ap_specs.push_back({id, {}, {}, {}, {}});

    // Positional subfields.
    auto aligned = [&](const std::string& f) -> std::vector<std::string> {
        auto v = get(f);
        if (!v)
            return {};
        auto list = items(*v);
        if (std::all_of(list.begin(), list.end(), [](const std::string& s) { return s.empty(); }))
            return {};
        if (aps.empty())
            throw ParamError(prefix + f, "given without an active principle");
        if (list.size() == 1)
            list.assign(aps.size(), list.front());
        if (list.size() != aps.size())
            throw ParamError(prefix + f, std::to_string(list.size()) + " values for " + std::to_string(aps.size()) +
                                             " active principles");
        return list;
    };
    auto releases = aligned("release");
    auto routes = aligned("route");
    auto doses = aligned("dose");
    auto units = aligned("unit");
    auto intakes = aligned("intakes");
    for (std::size_t i = 0; i < aps.size(); ++i) {
        auto& spec = gq.ap_specs[i];
        if (!releases.empty() && !releases[i].empty()) {
            auto r = parse_release(text::to_lower(releases[i]));
            if (!r || *r == Release::unspecified)
                throw ParamError(prefix + "release", "unknown release '" + releases[i] + "'");
            spec.release = r;
        }
        if (!routes.empty() && !routes[i].empty()) {
            auto r = parse_route(text::to_lower(routes[i]));
            if (!r || *r == Route::unspecified)
                throw ParamError(prefix + "route", "unknown route '" + routes[i] + "'");
            spec.route = r;
        }
        if (!doses.empty() && !doses[i].empty()) {
            auto r = parse_range(doses[i]);
            if (!r)
                throw ParamError(prefix + "dose", "malformed range '" + doses[i] + "'");
            if (units.empty() || units[i].empty())
                throw ParamError(prefix + "unit", "dose given without a unit");
            spec.dose = DoseRange{*r, units[i]};
        }
        if (!intakes.empty() && !intakes[i].empty()) {
            auto r = parse_range(intakes[i]);
            if (!r)
                throw ParamError(prefix + "intakes", "malformed range '" + intakes[i] + "'");
            spec.intakes_per_day = r;
        }
    }
    return gq;
}

bool is_empty(const GroupQuery& g) {
    return g.trial_type_ids.empty() && g.indication_ids.empty() && g.ap_specs.empty() && !g.open_list;
}

} // namespace

Params parse_query_string(std::string_view query) {
    if (auto q = query.find('?'); q != std::string_view::npos)
        query = query.substr(q + 1);
    if (auto h = query.find('#'); h != std::string_view::npos)
        query = query.substr(0, h);
    Params out;
    for (const auto& part : text::split(query, '&')) {
        if (part.empty())
            continue;
        auto eq = part.find('=');
        auto key = url_decode(std::string_view(part).substr(0, eq));
        auto value = eq == std::string::npos ? std::string() : url_decode(std::string_view(part).substr(eq + 1));
        out.emplace_back(std::move(key), std::move(value));
    }
    return out;
}

std::string url_encode(std::string_view s) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == ',') {
            out.push_back(static_cast<char>(c));
        } else {
            out.push_back('%');
            out.push_back(hex[c >> 4]);
            out.push_back(hex[c & 15]);
        }
    }
    return out;
}

SearchRequest parse_search_params(const Params& params, const Taxonomy& t) {
    SearchRequest req;
    std::map<std::size_t, RawGroup> raw;
    for (const auto& [key, value] : params) {
        if (key.rfind("group_", 0) == 0) {
            auto rest = std::string_view(key).substr(6);
            auto us = rest.find('_');
            auto n = text::parse_int(rest.substr(0, us));
            if (us == std::string_view::npos || !n || *n < 1 || *n > 1000)
                throw ParamError(key, "expected group_N_field");
            auto field = std::string(rest.substr(us + 1));
            if (std::find(group_fields.begin(), group_fields.end(), field) == group_fields.end())
                throw ParamError(key, "unknown group field '" + field + "'");
            auto& slot = raw[static_cast<std::size_t>(*n)].fields[field];
            if (!slot.empty() && !value.empty())
                slot += ",";
            slot += value;
        } else if (key == "exclude_trials") {
            for (const auto& id : items(value))
                if (!id.empty())
                    req.spec.excluded_trial_ids.insert(id);
        } else if (key == "tab") {
            auto v = text::parse_int(text::trim(value));
            if (!v || *v < 0 || *v > 100)
                throw ParamError(key, "expected a tab number, got '" + value + "'");
            req.tab = static_cast<int>(*v);
        } else if (key == "lang") {
            if (value != "en" && value != "fr")
                throw ParamError(key, "expected en or fr, got '" + value + "'");
            req.lang = value;
        } else if (key == "set") {
            auto k = parse_result_set_kind(text::to_lower(value));
            if (!k)
                throw ParamError(key, "expected direct, mixed or absolute, got '" + value + "'");
            req.kind = *k;
        } else if (key == "include_titration") {
            req.include_titration = parse_bool(value, key);
        } else if (key == "overlay") {
            auto v = text::parse_int(text::trim(value));
            if (!v || *v < 1)
                throw ParamError(key, "expected a group number, got '" + value + "'");
            req.overlay = static_cast<std::size_t>(*v - 1);
        }
    }
    for (const auto& [n, g] : raw) {
        auto gq = parse_group(n, g, t);
        if (!is_empty(gq))
            req.spec.groups.push_back(std::move(gq));
    }
    if (req.spec.groups.empty())
        throw ParamError("group_1_ap", "at least one group with a criterion is required");
    if (req.overlay && *req.overlay >= req.spec.groups.size())
        throw ParamError("overlay", "no group " + std::to_string(*req.overlay + 1));
    req.spec = compute_exclusions(std::move(req.spec), t);
    return req;
}

SearchRequest parse_search_params(std::string_view query, const Taxonomy& t) {
    return parse_search_params(parse_query_string(query), t);
}

std::string serialize_search_params(const SearchRequest& req) {
    std::vector<std::string> parts;
    auto add = [&](const std::string& k, const std::string& v) { parts.push_back(k + "=" + url_encode(v)); };
    for (std::size_t i = 0; i < req.spec.groups.size(); ++i) {
        const auto& g = req.spec.groups[i];
        const std::string prefix = "group_" + std::to_string(i + 1) + "_";
        if (!g.trial_type_ids.empty())
            add(prefix + "trialtype", text::join({g.trial_type_ids.begin(), g.trial_type_ids.end()}, ","));
        if (!g.indication_ids.empty())
            add(prefix + "indication", text::join({g.indication_ids.begin(), g.indication_ids.end()}, ","));
        std::vector<std::string> aps;
        for (const auto& s : g.ap_specs)
            aps.push_back(s.ap_id);
        if (g.open_list)
            aps.emplace_back("etc");
        if (!aps.empty())
            add(prefix + "ap", text::join(aps, ","));
        auto field = [&](const std::string& name, auto&& value_of) {
            std::vector<std::string> vals;
            bool any = false;
            for (const auto& s : g.ap_specs) {
                vals.push_back(value_of(s));
                any = any || !vals.back().empty();
            }
            if (any)
                add(prefix + name, text::join(vals, ","));
        };
        field("release", [](const APSpec& s) { return s.release ? std::string(to_string(*s.release)) : ""; });
        field("route", [](const APSpec& s) { return s.route ? std::string(to_string(*s.route)) : ""; });
        field("dose", [](const APSpec& s) { return s.dose ? format_range(s.dose->range) : ""; });
        field("unit", [](const APSpec& s) { return s.dose ? s.dose->unit : ""; });
        field("intakes", [](const APSpec& s) { return s.intakes_per_day ? format_range(*s.intakes_per_day) : ""; });
    }
    if (!req.spec.excluded_trial_ids.empty())
        add("exclude_trials", text::join({req.spec.excluded_trial_ids.begin(), req.spec.excluded_trial_ids.end()}, ","));
    if (req.kind != ResultSetKind::direct)
        add("set", std::string(to_string(req.kind)));
    if (req.lang != "en")
        add("lang", req.lang);
    if (req.tab != 0)
        add("tab", std::to_string(req.tab));
    if (req.include_titration)
        add("include_titration", "1");
    if (req.overlay)
        add("overlay", std::to_string(*req.overlay + 1));
    return text::join(parts, "&");
}

std::string describe_group(const GroupQuery& gq, const Taxonomy& t, std::string_view lang) {
    std::vector<std::string> drugs;
    for (const auto& s : gq.ap_specs) {
        std::string d;
        if (s.release)
            d += std::string(to_string(*s.release)) + "-release ";
        if (s.route)
            d += std::string(to_string(*s.route)) + " ";
        d += t.node(s.ap_id).label(lang);
        if (s.dose)
            d += " " + format_range(s.dose->range) + " " + s.dose->unit;
        if (s.intakes_per_day)
            d += " " + format_range(*s.intakes_per_day) + "/day";
        drugs.push_back(d);
    }
    std::string out = text::join(drugs, " + ");
    if (gq.open_list)
        out += out.empty() ? "any treatment" : ", etc";
    std::vector<std::string> others;
    for (const auto& id : gq.excluded_ap_ids)
        others.push_back(t.node(id).label(lang));
    if (!others.empty())
        out += " (other than " + text::join(others, ", ") + ")";
    std::vector<std::string> ctx;
    for (const auto& id : gq.indication_ids)
        ctx.push_back(t.node(id).label(lang));
    for (const auto& id : gq.trial_type_ids)
        ctx.push_back(t.node(id).label(lang));
    if (!ctx.empty())
        out += out.empty() ? text::join(ctx, ", ") : " in " + text::join(ctx, ", ");
    return out.empty() ? "all groups" : out;
}

} // namespace ade
