#include "ademiner/service.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <filesystem>
#include <functional>
#include <map>
#include <set>

namespace ade {

using nlohmann::json;

namespace {

struct Entry {
    std::string trial_id;
    std::size_t period_index;
};

// (trial, period) pairs selected by a result-set kind, in dataset order.
std::vector<Entry> selected_entries(const ResultSets& rs, ResultSetKind kind) {
    std::set<std::pair<std::string, std::size_t>> seen;
    if (kind == ResultSetKind::absolute) {
        for (const auto& m : rs.absolute)
            seen.insert({m.trial_id, m.period_index});
    } else {
        for (const auto& e : kind == ResultSetKind::direct ? rs.direct : rs.direct_indirect)
            seen.insert({e.trial_id, e.period_index});
    }
    std::vector<Entry> out;
    for (const auto& [t, p] : seen)
        out.push_back({t, p});
    return out;
}

std::vector<MatchedGroup> matches_of(const ResultSets& rs, ResultSetKind kind) {
    if (kind == ResultSetKind::absolute)
        return rs.absolute;
    std::vector<MatchedGroup> out;
    for (const auto& e : kind == ResultSetKind::direct ? rs.direct : rs.direct_indirect)
        out.insert(out.end(), e.matches.begin(), e.matches.end());
    return out;
}

std::string treatment_key(const PatientGroup& g) {
    std::vector<std::string> ids;
    for (const auto& tr : g.treatments)
        ids.push_back(tr.active_principle_id);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    return text::join(ids, "+");
}

json frequency_table(const std::map<std::string, std::set<std::string>>& trials_by_key,
                     const std::function<json(const std::string&)>& describe) {
    std::vector<std::pair<std::string, std::size_t>> rows;
    for (const auto& [k, trials] : trials_by_key)
        rows.emplace_back(k, trials.size());
    std::stable_sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
    json out = json::array();
    for (const auto& [k, n] : rows) {
        auto row = describe(k);
        row["trials"] = n;
        out.push_back(std::move(row));
    }
    return out;
}

std::string correction_summary(const ProfileSet& ps, std::size_t q) {
    const auto& profile = ps.profiles[q];
    if (!profile)
        return "No matching group.";
    std::size_t direct_trials = 0;
    std::size_t indirect_trials = 0;
    std::set<std::string> seen;
    for (const auto& w : ps.weights) {
        if (w.query_index != q || !seen.insert(w.trial_id + "\n" + std::to_string(w.period_index)).second)
            continue;
        (w.source == WeightSource::direct ? direct_trials : indirect_trials)++;
    }
    const std::string patients = text::format_fixed(profile->effective_patients, 1);
    switch (ps.kind) {
    case ResultSetKind::absolute:
        return "Absolute values over " + std::to_string(profile->n_trials) + " trial(s); no correction applied.";
    case ResultSetKind::direct:
        return "Direct comparison over " + std::to_string(direct_trials) +
               " trial(s); group sizes balanced within each trial (" + patients + " effective patients).";
    case ResultSetKind::direct_indirect: {
        std::string s = std::to_string(direct_trials) + " direct trial(s) balanced by group size";
        if (indirect_trials > 0) {
            s += "; " + std::to_string(indirect_trials) + " indirect trial(s) corrected through placebo";
            if (ps.mixing && ps.mixing->r > 0) {
                const auto& k = ps.mixing->k[q];
                s += "; indirect/direct ratio r = " + text::format_fixed(ps.mixing->r, 3) +
                     ", k_dir = " + text::format_fixed(k.k_dir, 3) + ", k_ind = " + text::format_fixed(k.k_ind, 3);
            }
        }
        return s + " (" + patients + " effective patients).";
    }
    }
    return {};
}

json category_json(std::size_t c, const Taxonomy& t, std::string_view lang) {
    const std::string id(ade_category_ids[c]);
    const auto* n = t.find(id);
    return {{"id", id}, {"label", n ? n->label(lang) : id}};
}

json events_tab(const std::vector<AdeProfile>& profiles, const Dataset& ds, std::string_view lang, bool serious) {
    const auto& t = ds.taxonomy();
    struct Row {
        std::size_t category;
        std::string term;
        std::vector<double> rates;
        double max_rate;
    };
    std::vector<Row> rows;
    std::set<std::string> terms;
    for (const auto& p : profiles)
        for (const auto& [term, r] : p.terms)
            terms.insert(term);
    for (const auto& term : terms) {
        std::vector<double> rates;
        for (const auto& p : profiles) {
            auto it = p.terms.find(term);
            double v = it == p.terms.end() ? 0 : (serious ? it->second.serious_rate : it->second.rate);
            rates.push_back(std::max(0.0, v));
        }
        double mx = *std::max_element(rates.begin(), rates.end());
        if (mx <= 0)
            continue;
        auto cats = term_categories(ds.term(term), t);
        std::sort(cats.begin(), cats.end());
        cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
        for (auto c : cats)
            rows.push_back({c, term, rates, mx});
    }
    std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) {
        if (a.category != b.category)
            return a.category < b.category;
        if (a.max_rate != b.max_rate)
            return a.max_rate > b.max_rate;
        return a.term < b.term;
    });
    json out = json::array();
    for (const auto& r : rows) {
        json values = json::array();
        for (double v : r.rates)
            values.push_back({{"rate", v}, {"color", table_color(v)}});
        const auto& term = ds.term(r.term);
        out.push_back({{"category", category_json(r.category, t, lang)},
                       {"term", r.term},
                       {"soc", term.soc},
                       {"values", values}});
    }
    return out;
}

json id_label(const Taxonomy& t, const std::string& id, std::string_view lang) {
    return {{"id", id}, {"label", t.node(id).label(lang)}};
}

} // namespace

json search(const Dataset& ds, const SearchRequest& req) {
    const auto& t = ds.taxonomy();
    const auto& lang = req.lang;
    const auto n = req.spec.groups.size();
    ExecuteOptions opts{req.include_titration};
    const auto rs = execute(ds, req.spec, opts);
    const auto ps = compute_profiles(ds, rs, req.kind, n);

    std::vector<AdeProfile> profiles;
    bool empty = true;
    for (const auto& p : ps.profiles) {
        profiles.push_back(p.value_or(AdeProfile{}));
        empty = empty && !p;
    }
    std::vector<const AdeProfile*> ptrs;
    for (const auto& p : profiles)
        ptrs.push_back(&p);
    const double reference = shared_reference_rate(ptrs);
    const int canvas = canvas_px_for(n);

    json groups = json::array();
    for (std::size_t q = 0; q < n; ++q) {
        const std::string caption = describe_group(req.spec.groups[q], t, lang);
        GlyphSpec spec{profiles[q], reference, canvas, caption};
        std::set<GroupRef> unique;
        for (const auto& w : ps.weights)
            if (w.query_index == q)
                unique.insert({w.trial_id, w.period_index, w.group_id});
        long patients = 0;
        for (const auto& ref : unique)
            patients += ds.group(ref).n_patients;
        json g = {{"index", q + 1},
                  {"label", caption},
                  {"empty", !ps.profiles[q].has_value()},
                  {"n_trials", profiles[q].n_trials},
                  {"n_groups", unique.size()},
                  {"patients", patients},
                  {"profile", profile_to_json(profiles[q])},
                  {"correction_summary", correction_summary(ps, q)},
                  {"glyph_svg", render_flower_svg(spec)}};
        for (auto& c : g["profile"]["categories"])
            c["label"] = category_json(*category_index(c["id"].get<std::string>()), t, lang)["label"];
        if (req.overlay && *req.overlay != q) {
            GlyphSpec sel{profiles[*req.overlay], reference, canvas, caption};
            g["overlay_svg"] = render_overlay_svg(sel, spec);
        }
        groups.push_back(std::move(g));
    }

    // Information tabs over the selected trials.
    const auto entries = selected_entries(rs, req.kind);
    const auto matched = matches_of(rs, req.kind);
    std::set<GroupRef> matched_refs;
    for (const auto& m : matched)
        matched_refs.insert(m.ref());
    std::map<std::string, std::set<std::string>> by_indication;
    std::map<std::string, std::set<std::string>> by_treatment;
    std::map<std::string, std::set<std::string>> comparable;
    for (const auto& e : entries) {
        const auto& period = ds.find_trial(e.trial_id)->periods[e.period_index];
        for (const auto& g : period.groups) {
            for (const auto& ind : g.indication_ids)
                by_indication[ind].insert(e.trial_id);
            by_treatment[treatment_key(g)].insert(e.trial_id);
            if (!matched_refs.count({e.trial_id, e.period_index, g.id}))
                comparable[treatment_key(g)].insert(e.trial_id);
        }
    }
    auto describe_treatment = [&](const std::string& key) {
        json ids = json::array();
        std::vector<std::string> labels;
        for (const auto& id : text::split(key, '+')) {
            ids.push_back(id);
            labels.push_back(t.node(id).label(lang));
        }
        return json{{"ap_ids", ids}, {"label", text::join(labels, " + ")}};
    };
    const bool ap_queried = std::any_of(req.spec.groups.begin(), req.spec.groups.end(),
                                        [](const GroupQuery& g) { return !g.ap_specs.empty(); });

    json tabs;
    tabs["all_events"] = events_tab(profiles, ds, lang, false);
    tabs["serious_events"] = events_tab(profiles, ds, lang, true);
    tabs["indication_summary"] =
        frequency_table(by_indication, [&](const std::string& id) { return id_label(t, id, lang); });
    if (ap_queried)
        tabs["comparable_treatments"] = frequency_table(comparable, describe_treatment);
    else
        tabs["treatment_summary"] = frequency_table(by_treatment, describe_treatment);

    // Trial list: rerun without exclusions so excluded trials stay listed.
    auto all_spec = req.spec;
    all_spec.excluded_trial_ids.clear();
    const auto all_rs = execute(ds, all_spec, opts);
    std::map<std::string, std::vector<std::pair<double, double>>> per_trial; // events, patients per query
    std::set<std::string> counted;
    for (const auto& m : matches_of(all_rs, req.kind)) {
        auto& acc = per_trial[m.trial_id];
        acc.resize(n);
        if (!counted.insert(m.trial_id + "\n" + std::to_string(m.period_index) + "\n" + m.group_id + "\n" +
                            std::to_string(m.query_index))
                 .second)
            continue;
        for (const auto& [term, c] : group_counts(ds, m.ref()))
            acc[m.query_index].first += c.all;
        acc[m.query_index].second += static_cast<double>(ds.group(m.ref()).n_patients);
    }
    json trial_list = json::array();
    for (const auto& [id, acc] : per_trial) {
        json rates = json::array();
        for (const auto& [events, patients] : acc)
            rates.push_back(patients > 0 ? json(events / patients) : json(nullptr));
        trial_list.push_back({{"trial_id", id},
                              {"title", ds.find_trial(id)->title},
                              {"included", !req.spec.excluded_trial_ids.count(id)},
                              {"rates", rates}});
    }
    tabs["trial_list"] = trial_list;

    return {{"set", to_string(req.kind)},
            {"lang", lang},
            {"tab", req.tab},
            {"query", serialize_search_params(req)},
            {"empty", empty},
            {"reference_rate", reference},
            {"canvas_px", canvas},
            {"groups", groups},
            {"tabs", tabs}};
}

json trial_detail(const Dataset& ds, const ClinicalTrial& trial, std::string_view lang) {
    const auto& t = ds.taxonomy();
    json types = json::array();
    for (const auto& id : trial.trial_type_ids)
        types.push_back(id_label(t, id, lang));
    json periods = json::array();
    std::size_t n_groups = 0;
    std::size_t n_events = 0;
    for (std::size_t p = 0; p < trial.periods.size(); ++p) {
        json groups = json::array();
        for (const auto& g : trial.periods[p].groups) {
            ++n_groups;
            json inds = json::array();
            for (const auto& id : g.indication_ids)
                inds.push_back(id_label(t, id, lang));
            json treatments = json::array();
            for (const auto& tr : g.treatments) {
                json j = id_label(t, tr.active_principle_id, lang);
                j["release"] = tr.release == Release::unspecified ? json(nullptr) : json(to_string(tr.release));
                j["route"] = tr.route == Route::unspecified ? json(nullptr) : json(to_string(tr.route));
                j["dose"] = tr.dose ? json{{"min", tr.dose->range.min}, {"max", tr.dose->range.max},
                                           {"unit", tr.dose->unit}}
                                    : json(nullptr);
                j["intakes_per_day"] = tr.intakes_per_day
                                           ? json{{"min", tr.intakes_per_day->min}, {"max", tr.intakes_per_day->max}}
                                           : json(nullptr);
                treatments.push_back(std::move(j));
            }
            json events = json::array();
            for (const auto* o : ds.observations_of({trial.id, p, g.id})) {
                ++n_events;
                json cats = json::array();
                for (auto c : term_categories(ds.term(o->term_label), t))
                    cats.push_back(category_json(c, t, lang));
                events.push_back({{"term", o->term_label},
                                  {"soc", ds.term(o->term_label).soc},
                                  {"serious", o->serious},
                                  {"count", o->event_count},
                                  {"rate", static_cast<double>(o->event_count) / static_cast<double>(g.n_patients)},
                                  {"categories", cats}});
            }
            groups.push_back({{"id", g.id},
                              {"label", g.label},
                              {"n_patients", g.n_patients},
                              {"placebo", is_placebo_group(g, t)},
                              {"indications", inds},
                              {"treatments", treatments},
                              {"events", events}});
        }
        periods.push_back({{"index", p}, {"kind", to_string(trial.periods[p].kind)}, {"groups", groups}});
    }
    return {{"id", trial.id},
            {"title", trial.title},
            {"completion_date", trial.completion_date ? json(to_string(*trial.completion_date)) : json(nullptr)},
            {"trial_types", types},
            {"n_groups", n_groups},
            {"n_events", n_events},
            {"periods", periods}};
}

Service::Service(std::shared_ptr<const Dataset> dataset, std::string assets_dir)
    : dataset_(std::move(dataset)), assets_dir_(std::move(assets_dir)) {}

std::shared_ptr<const Dataset> Service::snapshot() const {
    std::lock_guard lock(mutex_);
    return dataset_;
}

void Service::swap_dataset(std::shared_ptr<const Dataset> dataset) {
    std::lock_guard lock(mutex_);
    dataset_ = std::move(dataset);
}

namespace {

HttpResponse json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpResponse error_response(int status, const std::string& message, const std::string& param = {}) {
    json body = {{"error", message}};
    if (!param.empty())
        body["param"] = param;
    return json_response(status, body);
}

std::optional<std::string> param(const Params& params, std::string_view key) {
    for (const auto& [k, v] : params)
        if (k == key)
            return v;
    return std::nullopt;
}

std::string lang_param(const Params& params) {
    auto lang = param(params, "lang").value_or("en");
    if (lang != "en" && lang != "fr")
        throw ParamError("lang", "expected en or fr, got '" + lang + "'");
    return lang;
}

NodeKind kind_param(const Params& params) {
    auto v = param(params, "kind");
    if (!v)
        throw ParamError("kind", "missing");
    auto k = parse_node_kind(*v);
    if (!k)
        throw ParamError("kind", "unknown node kind '" + *v + "'");
    return *k;
}

std::string content_type_for(const std::filesystem::path& p) {
    static const std::map<std::string, std::string> types = {
        {".html", "text/html; charset=utf-8"}, {".js", "text/javascript"}, {".mjs", "text/javascript"},
        {".css", "text/css"},                   {".svg", "image/svg+xml"},   {".json", "application/json"},
        {".png", "image/png"},                  {".ico", "image/x-icon"},    {".txt", "text/plain; charset=utf-8"},
    };
    auto it = types.find(p.extension().string());
    return it == types.end() ? "application/octet-stream" : it->second;
}

} // namespace

HttpResponse Service::handle(std::string_view method, std::string_view path, const Params& params) const {
    if (method != "GET" && method != "HEAD")
        return error_response(405, "method not allowed");
    auto ds = snapshot();
    try {
        return route(*ds, path, params);
    } catch (const ParamError& e) {
        return error_response(400, e.what(), e.param());
    } catch (const std::exception&) {
        return error_response(500, "internal error");
    }
}

HttpResponse Service::route(const Dataset& ds, std::string_view path, const Params& params) const {
    const auto& t = ds.taxonomy();
    if (path == "/healthz")
        return {200, "text/plain", "ok"};
    if (path == "/api/search") {
        auto req = parse_search_params(params, t);
        return json_response(200, search(ds, req));
    }
    if (path == "/api/autocomplete") {
        auto kind = kind_param(params);
        auto lang = lang_param(params);
        std::size_t limit = 10;
        if (auto l = param(params, "limit")) {
            auto v = text::parse_int(*l);
            if (!v || *v < 1 || *v > 100)
                throw ParamError("limit", "expected 1-100, got '" + *l + "'");
            limit = static_cast<std::size_t>(*v);
        }
        json out = json::array();
        for (const auto& s : autocomplete(t, param(params, "q").value_or(""), kind, lang, limit))
            out.push_back({{"id", s.id}, {"label", s.label}});
        return json_response(200, out);
    }
    if (path == "/api/taxonomy") {
        auto kind = kind_param(params);
        auto lang = lang_param(params);
        json nodes = json::array();
        json roots = json::array();
        for (const auto& id : t.ids(kind)) {
            const auto& node = t.node(id);
            if (node.parents.empty())
                roots.push_back(id);
            nodes.push_back({{"id", id},
                             {"label", node.label(lang)},
                             {"parents", node.parents},
                             {"children", t.children(id)}});
        }
        return json_response(200, {{"kind", to_string(kind)}, {"roots", roots}, {"nodes", nodes}});
    }
    if (path.rfind("/api/trials/", 0) == 0) {
        auto id = std::string(path.substr(12));
        const auto* trial = ds.find_trial(id);
        if (!trial)
            return error_response(404, "unknown trial '" + id + "'");
        return json_response(200, trial_detail(ds, *trial, lang_param(params)));
    }
    if (path.rfind("/api/", 0) == 0)
        return error_response(404, "unknown endpoint");
    return static_asset(path);
}

HttpResponse Service::static_asset(std::string_view path) const {
    namespace fs = std::filesystem;
    if (assets_dir_.empty())
        return error_response(404, "not found");
    std::string rel(path);
    if (rel.empty() || rel == "/")
        rel = "/index.html";
    if (rel.find("..") != std::string::npos || rel.find('\0') != std::string::npos)
        return error_response(404, "not found");
    fs::path file = fs::path(assets_dir_) / rel.substr(1);
    std::error_code ec;
    if (!fs::is_regular_file(file, ec))
        return error_response(404, "not found");
    return {200, content_type_for(file), text::read_file(file.string())};
}

} // namespace ade
