#include "ademiner/model.hpp"

#include "ademiner/error.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <set>

namespace ade {

namespace {

constexpr std::array period_names = {"single", "titration", "maintenance", "continuation"};
constexpr std::array release_names = {"unspecified", "immediate", "modified"};
constexpr std::array route_names = {"unspecified", "oral",          "intravenous",
                                    "subcutaneous", "transdermal",  "topical",
                                    "intramuscular", "rectal",      "nasal"};

template <typename Enum, std::size_t N>
std::optional<Enum> parse_enum(const std::array<const char*, N>& names, std::string_view s) {
    auto v = text::to_lower(text::trim(s));
    for (std::size_t i = 0; i < N; ++i)
        if (v == names[i])
            return static_cast<Enum>(i);
    return std::nullopt;
}

constexpr std::array month_names = {"january", "february", "march",     "april",
                                    "may",     "june",     "july",      "august",
                                    "september", "october", "november", "december"};

bool valid_day(int y, unsigned m, unsigned d) {
    static constexpr unsigned days[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    if (m < 1 || m > 12 || d < 1)
        return false;
    bool leap = (y % 4 == 0 && y % 100 != 0) || y % 400 == 0;
    return d <= days[m - 1] + (m == 2 && leap ? 1u : 0u);
}

} // namespace

std::string_view to_string(PeriodKind k) { return period_names[static_cast<std::size_t>(k)]; }
std::string_view to_string(Release r) { return release_names[static_cast<std::size_t>(r)]; }
std::string_view to_string(Route r) { return route_names[static_cast<std::size_t>(r)]; }

std::optional<PeriodKind> parse_period_kind(std::string_view s) {
    return parse_enum<PeriodKind>(period_names, s);
}

std::optional<Release> parse_release(std::string_view s) {
    if (text::trim(s).empty())
        return Release::unspecified;
    return parse_enum<Release>(release_names, s);
}

std::optional<Route> parse_route(std::string_view s) {
    if (text::trim(s).empty())
        return Route::unspecified;
    return parse_enum<Route>(route_names, s);
}

std::optional<Date> parse_date(std::string_view s) {
    s = text::trim(s);
    if (s.empty())
        return std::nullopt;
    Date d;
    if (std::isdigit(static_cast<unsigned char>(s.front()))) {
        auto parts = text::split(s, '-');
        if (parts.size() < 2 || parts.size() > 3)
            return std::nullopt;
        auto y = text::parse_int(parts[0]);
        auto m = text::parse_int(parts[1]);
        auto day = parts.size() == 3 ? text::parse_int(parts[2]) : std::optional<long long>(1);
        if (!y || !m || !day || parts[0].size() != 4)
            return std::nullopt;
        d = {static_cast<int>(*y), static_cast<unsigned>(*m), static_cast<unsigned>(*day)};
    } else {
        // "Month YYYY" or "Month D, YYYY"
        auto sp = s.find(' ');
        if (sp == std::string_view::npos)
            return std::nullopt;
        auto month = text::to_lower(s.substr(0, sp));
        auto it = std::find(month_names.begin(), month_names.end(), month);
        if (it == month_names.end())
            return std::nullopt;
        d.month = static_cast<unsigned>(it - month_names.begin()) + 1;
        auto rest = text::trim(s.substr(sp + 1));
        if (auto comma = rest.find(','); comma != std::string_view::npos) {
            auto day = text::parse_int(rest.substr(0, comma));
            auto y = text::parse_int(rest.substr(comma + 1));
            if (!day || !y)
                return std::nullopt;
            d.day = static_cast<unsigned>(*day);
            d.year = static_cast<int>(*y);
        } else {
            auto y = text::parse_int(rest);
            if (!y)
                return std::nullopt;
            d.year = static_cast<int>(*y);
        }
    }
    if (!valid_day(d.year, d.month, d.day))
        return std::nullopt;
    return d;
}

std::string to_string(const Date& d) {
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", d.year, d.month, d.day);
    return buf;
}

const ClinicalTrial* Dataset::find_trial(std::string_view id) const {
    auto it = trials_.find(std::string(id));
    return it == trials_.end() ? nullptr : &it->second;
}

const AdeTerm& Dataset::term(std::string_view label) const {
    auto it = terms_.find(std::string(label));
    if (it == terms_.end())
        throw UnknownIdError(std::string(label));
    return it->second;
}

const PatientGroup& Dataset::group(const GroupRef& ref) const {
    const auto* trial = find_trial(ref.trial_id);
    if (!trial)
        throw UnknownIdError(ref.trial_id);
    if (ref.period_index >= trial->periods.size())
        throw UnknownIdError(ref.trial_id + "/period " + std::to_string(ref.period_index));
    for (const auto& g : trial->periods[ref.period_index].groups)
        if (g.id == ref.group_id)
            return g;
    throw UnknownIdError(ref.group_id);
}

std::vector<const AdeObservation*> Dataset::observations_of(const GroupRef& ref) const {
    std::vector<const AdeObservation*> out;
    if (auto it = obs_index_.find(ref); it != obs_index_.end())
        for (auto i = it->second.first; i < it->second.second; ++i)
            out.push_back(&observations_[i]);
    return out;
}

struct DatasetBuilder {
    static Dataset make(Taxonomy t, std::map<std::string, ClinicalTrial> trials,
                        std::vector<AdeObservation> obs, std::map<std::string, AdeTerm> terms) {
        Dataset ds;
        ds.taxonomy_ = std::move(t);
        ds.trials_ = std::move(trials);
        ds.observations_ = std::move(obs);
        ds.terms_ = std::move(terms);
        for (std::size_t i = 0; i < ds.observations_.size(); ++i) {
            const auto& o = ds.observations_[i];
            auto [it, inserted] =
                ds.obs_index_.try_emplace(GroupRef{o.trial_id, o.period_index, o.group_id}, i, i + 1);
            if (!inserted)
                it->second.second = i + 1;
        }
        return ds;
    }
};

namespace {

void require_kind(const Taxonomy& t, const std::string& id, NodeKind kind, const std::string& where) {
    const auto* n = t.find(id);
    if (!n)
        throw ValidationError(where + ": unknown taxonomy id '" + id + "'");
    if (n->kind != kind)
        throw ValidationError(where + ": '" + id + "' is not a " + std::string(to_string(kind)));
}

void validate_range(const Range& r, const std::string& what, const std::string& where) {
    if (!r.well_ordered())
        throw ValidationError(where + ": " + what + " range min > max");
}

} // namespace

AssemblyResult assemble_dataset(Taxonomy taxonomy, std::vector<ClinicalTrial> trials,
                                std::vector<AdeObservation> observations,
                                std::vector<AdeTerm> terms) {
    AssemblyResult result;

    std::map<std::string, AdeTerm> term_map;
    for (auto& term : terms) {
        if (term.label.empty())
            throw ValidationError("term with empty label");
        std::sort(term.category_ids.begin(), term.category_ids.end());
        term.category_ids.erase(std::unique(term.category_ids.begin(), term.category_ids.end()),
                                term.category_ids.end());
        if (term.category_ids.empty() || term.category_ids.size() > 2)
            throw ValidationError("term '" + term.label + "' has " +
                                  std::to_string(term.category_ids.size()) +
                                  " categories (expected 1 or 2)");
        for (const auto& c : term.category_ids)
            require_kind(taxonomy, c, NodeKind::ade_category, "term '" + term.label + "'");
        auto label = term.label;
        if (auto [it, inserted] = term_map.emplace(label, std::move(term)); !inserted)
            throw ValidationError("duplicate term '" + label + "'");
    }

    std::map<std::string, ClinicalTrial> trial_map;
    for (auto& trial : trials) {
        const std::string where = "trial '" + trial.id + "'";
        if (trial.id.empty())
            throw ValidationError("trial with empty id");
        if (trial.periods.empty())
            throw ValidationError(where + " has no period");
        std::sort(trial.trial_type_ids.begin(), trial.trial_type_ids.end());
        trial.trial_type_ids.erase(std::unique(trial.trial_type_ids.begin(), trial.trial_type_ids.end()),
                                   trial.trial_type_ids.end());
        for (const auto& tt : trial.trial_type_ids)
            require_kind(taxonomy, tt, NodeKind::trial_type, where);

        std::set<std::string> group_ids;
        for (std::size_t p = 0; p < trial.periods.size(); ++p) {
            auto& period = trial.periods[p];
            if (period.groups.empty())
                throw ValidationError(where + " period " + std::to_string(p) + " has no group");
            for (auto& g : period.groups) {
                const std::string gwhere = where + " group '" + g.id + "'";
                if (g.id.empty())
                    throw ValidationError(where + " has a group with empty id");
                if (!group_ids.insert(g.id).second)
                    throw ValidationError(where + " has duplicate group id '" + g.id + "'");
                if (g.n_patients < 1)
                    throw ValidationError(gwhere + " has n_patients < 1");
                if (g.treatments.empty())
                    throw ValidationError(gwhere + " has no treatment");
                std::sort(g.indication_ids.begin(), g.indication_ids.end());
                g.indication_ids.erase(std::unique(g.indication_ids.begin(), g.indication_ids.end()),
                                       g.indication_ids.end());
                if (g.indication_ids.empty())
                    throw ValidationError(gwhere + " has no indication");
                for (const auto& ind : g.indication_ids)
                    require_kind(taxonomy, ind, NodeKind::indication, gwhere);
                for (const auto& tr : g.treatments) {
                    require_kind(taxonomy, tr.active_principle_id, NodeKind::active_principle, gwhere);
                    if (tr.dose) {
                        if (tr.dose->unit.empty())
                            throw ValidationError(gwhere + ": dose without unit");
                        validate_range(tr.dose->range, "dose", gwhere);
                    }
                    if (tr.intakes_per_day)
                        validate_range(*tr.intakes_per_day, "intakes", gwhere);
                }
            }
        }
        auto id = trial.id;
        if (!trial_map.emplace(id, std::move(trial)).second)
            throw ValidationError("duplicate trial id '" + id + "'");
    }

    for (const auto& o : observations) {
        auto it = trial_map.find(o.trial_id);
        if (it == trial_map.end())
            throw ValidationError("observation references unknown trial '" + o.trial_id + "'");
        const auto& periods = it->second.periods;
        if (o.period_index >= periods.size())
            throw ValidationError("observation references unknown period " +
                                  std::to_string(o.period_index) + " of trial '" + o.trial_id + "'");
        const auto& groups = periods[o.period_index].groups;
        if (std::none_of(groups.begin(), groups.end(), [&](const auto& g) { return g.id == o.group_id; }))
            throw ValidationError("observation references unknown group '" + o.group_id + "' in trial '" +
                                  o.trial_id + "'");
        if (!term_map.count(o.term_label))
            throw ValidationError("observation references unknown term '" + o.term_label + "'");
        if (o.event_count < 0)
            throw ValidationError("negative event count for '" + o.term_label + "' in group '" +
                                  o.group_id + "'");
    }

    auto key = [](const AdeObservation& o) {
        return std::tie(o.trial_id, o.period_index, o.group_id, o.term_label, o.serious);
    };
    std::stable_sort(observations.begin(), observations.end(),
                     [&](const auto& a, const auto& b) { return key(a) < key(b); });
    std::vector<AdeObservation> merged;
    merged.reserve(observations.size());
    for (auto& o : observations) {
        if (!merged.empty() && key(merged.back()) == key(o)) {
            result.warnings.push_back("merged duplicate observation (" + o.trial_id + ", " + o.group_id +
                                      ", " + o.term_label + ", " + (o.serious ? "serious" : "non-serious") +
                                      "): " + std::to_string(merged.back().event_count) + " + " +
                                      std::to_string(o.event_count));
            merged.back().event_count += o.event_count;
        } else {
            merged.push_back(std::move(o));
        }
    }

    result.dataset = DatasetBuilder::make(std::move(taxonomy), std::move(trial_map), std::move(merged),
                                          std::move(term_map));
    return result;
}

DatasetSummary dataset_summary(const Dataset& ds) {
    DatasetSummary s;
    s.trials = ds.trials().size();
    for (const auto& [id, trial] : ds.trials())
        for (const auto& period : trial.periods)
            for (const auto& g : period.groups) {
                ++s.groups;
                (period.kind == PeriodKind::titration ? s.titration_patients : s.patients) += g.n_patients;
            }
    s.observations = ds.observations().size();
    std::set<std::string> used;
    for (const auto& o : ds.observations()) {
        s.events += o.event_count;
        used.insert(o.term_label);
    }
    s.distinct_terms = used.size();
    for (const auto& label : used)
        if (ds.term(label).meddra_code)
            ++s.mapped_terms;
    s.mapped_fraction = s.distinct_terms ? double(s.mapped_terms) / double(s.distinct_terms) : 0.0;
    return s;
}

bool is_placebo_group(const PatientGroup& g, const Taxonomy& t) {
    if (!t.contains(placebo_id, NodeKind::active_principle) || g.treatments.empty())
        return false;
    return std::all_of(g.treatments.begin(), g.treatments.end(), [&](const DrugTreatment& tr) {
        return t.is_descendant_or_self(tr.active_principle_id, placebo_id);
    });
}

} // namespace ade
