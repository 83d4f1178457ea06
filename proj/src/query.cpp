#include "ademiner/error.hpp"
#include "ademiner/query.hpp"

#include <algorithm>
#include <functional>
#include <map>

namespace ade {

namespace {

void require(const Taxonomy& t, const std::string& id, NodeKind kind) {
    const auto* n = t.find(id);
    if (!n)
        throw UnknownIdError(id);
    if (n->kind != kind)
        throw ValidationError("'" + id + "' is a " + std::string(to_string(n->kind)) + ", expected " +
                              std::string(to_string(kind)));
}

bool subsumes_any(const Taxonomy& t, const std::vector<std::string>& have, const std::string& wanted) {
    return std::any_of(have.begin(), have.end(),
                       [&](const std::string& h) { return t.is_descendant_or_self(h, wanted); });
}

// Kuhn's augmenting paths: size of a maximum matching of specs into treatments.
std::size_t max_matching(const std::vector<std::vector<bool>>& ok, std::size_t n_treatments) {
    std::vector<int> owner(n_treatments, -1);
    std::size_t matched = 0;
    for (std::size_t s = 0; s < ok.size(); ++s) {
        std::vector<bool> seen(n_treatments, false);
        std::function<bool(std::size_t)> augment = [&](std::size_t spec) {
            for (std::size_t tr = 0; tr < n_treatments; ++tr) {
                if (!ok[spec][tr] || seen[tr])
                    continue;
                seen[tr] = true;
                if (owner[tr] < 0 || augment(static_cast<std::size_t>(owner[tr]))) {
                    owner[tr] = static_cast<int>(spec);
                    return true;
                }
            }
            return false;
        };
        if (augment(s))
            ++matched;
    }
    return matched;
}

} // namespace

void validate_query(const QuerySpec& qs, const Taxonomy& t) {
    if (qs.groups.empty())
        throw ValidationError("query has no group");
    for (const auto& g : qs.groups) {
        for (const auto& id : g.trial_type_ids)
            require(t, id, NodeKind::trial_type);
        for (const auto& id : g.indication_ids)
            require(t, id, NodeKind::indication);
        for (const auto& id : g.excluded_ap_ids)
            require(t, id, NodeKind::active_principle);
        for (const auto& s : g.ap_specs) {
            require(t, s.ap_id, NodeKind::active_principle);
            if (s.dose && s.dose->unit.empty())
                throw ValidationError("dose range for '" + s.ap_id + "' has no unit");
            if (s.dose && !s.dose->range.well_ordered())
                throw ValidationError("malformed dose range for '" + s.ap_id + "'");
            if (s.intakes_per_day && !s.intakes_per_day->well_ordered())
                throw ValidationError("malformed intakes range for '" + s.ap_id + "'");
        }
    }
}

bool treatment_matches(const DrugTreatment& tr, const APSpec& spec, const Taxonomy& t) {
    if (!t.is_descendant_or_self(tr.active_principle_id, spec.ap_id))
        return false;
    if (spec.release && *spec.release != tr.release)
        return false;
    if (spec.route && *spec.route != tr.route)
        return false;
    if (spec.dose && tr.dose &&
        (spec.dose->unit != tr.dose->unit || !spec.dose->range.intersects(tr.dose->range)))
        return false;
    if (spec.intakes_per_day && tr.intakes_per_day && !spec.intakes_per_day->intersects(*tr.intakes_per_day))
        return false;
    return true;
}

bool match_group(const ClinicalTrial& trial, const PatientGroup& group, const GroupQuery& gq, const Taxonomy& t) {
    for (const auto& tt : gq.trial_type_ids)
        if (!subsumes_any(t, trial.trial_type_ids, tt))
            return false;
    for (const auto& ind : gq.indication_ids)
        if (!subsumes_any(t, group.indication_ids, ind))
            return false;
    for (const auto& tr : group.treatments)
        for (const auto& ex : gq.excluded_ap_ids)
            if (t.is_descendant_or_self(tr.active_principle_id, ex))
                return false;
    if (gq.ap_specs.empty())
        return true;

    const auto n = group.treatments.size();
    if (gq.ap_specs.size() > n || (!gq.open_list && gq.ap_specs.size() != n))
        return false;
    std::vector<std::vector<bool>> ok(gq.ap_specs.size(), std::vector<bool>(n));
    for (std::size_t s = 0; s < gq.ap_specs.size(); ++s)
        for (std::size_t i = 0; i < n; ++i)
            ok[s][i] = treatment_matches(group.treatments[i], gq.ap_specs[s], t);
    return max_matching(ok, n) == gq.ap_specs.size();
}

QuerySpec compute_exclusions(QuerySpec qs, const Taxonomy& t) {
    const auto& groups = qs.groups;
    std::vector<std::set<std::string>> added(groups.size());
    for (std::size_t i = 0; i < groups.size(); ++i) {
        for (std::size_t j = 0; j < groups.size(); ++j) {
            const auto& narrow = groups[i].ap_specs;
            const auto& broad = groups[j].ap_specs;
            if (i == j || narrow.empty() || narrow.size() != broad.size())
                continue;
            bool all = true;
            std::vector<std::string> strict;
            for (std::size_t p = 0; p < narrow.size() && all; ++p) {
                if (!t.is_descendant_or_self(narrow[p].ap_id, broad[p].ap_id))
                    all = false;
                else if (narrow[p].ap_id != broad[p].ap_id)
                    strict.push_back(narrow[p].ap_id);
            }
            if (all)
                added[j].insert(strict.begin(), strict.end());
        }
    }
    for (std::size_t j = 0; j < groups.size(); ++j)
        qs.groups[j].excluded_ap_ids.insert(added[j].begin(), added[j].end());
    return qs;
}

ResultSets execute(const Dataset& ds, const QuerySpec& qs, ExecuteOptions opts) {
    const auto& t = ds.taxonomy();
    validate_query(qs, t);
    const auto n_queries = qs.groups.size();
    ResultSets out;
    std::vector<TrialMatch> indirect;

    for (const auto& [trial_id, trial] : ds.trials()) {
        if (qs.excluded_trial_ids.count(trial_id))
            continue;
        for (std::size_t p = 0; p < trial.periods.size(); ++p) {
            const auto& period = trial.periods[p];
            const bool titration = period.kind == PeriodKind::titration;
            std::vector<MatchedGroup> matches;
            std::vector<bool> covered(n_queries, false);
            std::vector<std::string> placebo;
            for (const auto& g : period.groups) {
                for (std::size_t q = 0; q < n_queries; ++q) {
                    if (match_group(trial, g, qs.groups[q], t)) {
                        matches.push_back({trial_id, p, g.id, q});
                        covered[q] = true;
                    }
                }
                if (is_placebo_group(g, t))
                    placebo.push_back(g.id);
            }
            if (!titration || opts.include_titration)
                out.absolute.insert(out.absolute.end(), matches.begin(), matches.end());
            if (titration || matches.empty())
                continue;
            std::sort(matches.begin(), matches.end());
            auto n_covered = static_cast<std::size_t>(std::count(covered.begin(), covered.end(), true));
            if (n_covered == n_queries)
                out.direct.push_back({trial_id, p, true, matches, {}});
            else if (!placebo.empty())
                indirect.push_back({trial_id, p, false, matches, placebo});
        }
    }
    std::sort(out.absolute.begin(), out.absolute.end());
    out.direct_indirect = out.direct;
    out.direct_indirect.insert(out.direct_indirect.end(), indirect.begin(), indirect.end());
    return out;
}

} // namespace ade
