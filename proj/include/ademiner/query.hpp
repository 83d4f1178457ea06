#pragma once

// Group queries at any taxonomy granularity and the three result sets built
// from them: direct, direct + indirect (through placebo), absolute.

#include "ademiner/model.hpp"

#include <compare>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace ade {

struct APSpec {
    std::string ap_id;
    std::optional<Release> release;
    std::optional<Route> route;
    std::optional<DoseRange> dose;
    std::optional<Range> intakes_per_day;

    bool operator==(const APSpec&) const = default;
};

struct GroupQuery {
    std::set<std::string> trial_type_ids; // conjunctive
    std::set<std::string> indication_ids; // conjunctive
    std::vector<APSpec> ap_specs;
    bool open_list = false; // extra, unqueried treatments allowed
    std::set<std::string> excluded_ap_ids;

    bool operator==(const GroupQuery&) const = default;
};

struct QuerySpec {
    std::vector<GroupQuery> groups;
    std::set<std::string> excluded_trial_ids;

    bool operator==(const QuerySpec&) const = default;
};

// Throws UnknownIdError / ValidationError for ids that are missing or of the
// wrong kind, and ValidationError for an empty spec or a dose without unit.
void validate_query(const QuerySpec& qs, const Taxonomy& t);

bool treatment_matches(const DrugTreatment& tr, const APSpec& spec, const Taxonomy& t);

bool match_group(const ClinicalTrial& trial, const PatientGroup& group, const GroupQuery& gq,
                 const Taxonomy& t);

// For every pair of single-principle queries where one principle strictly
// descends from the other, the broader query excludes the narrower principle.
// Equal-length multi-principle lists are compared position by position.
QuerySpec compute_exclusions(QuerySpec qs, const Taxonomy& t);

struct MatchedGroup {
    std::string trial_id;
    std::size_t period_index = 0;
    std::string group_id;
    std::size_t query_index = 0;

    GroupRef ref() const { return {trial_id, period_index, group_id}; }
    auto operator<=>(const MatchedGroup&) const = default;
};

// One (trial, period) of a comparison set.
struct TrialMatch {
    std::string trial_id;
    std::size_t period_index = 0;
    bool direct = true;
    std::vector<MatchedGroup> matches;          // sorted
    std::vector<std::string> placebo_group_ids; // indirect entries only

    bool operator==(const TrialMatch&) const = default;
};

struct ResultSets {
    std::vector<TrialMatch> direct;
    std::vector<TrialMatch> direct_indirect; // direct entries followed by indirect ones
    std::vector<MatchedGroup> absolute;      // sorted

    bool operator==(const ResultSets&) const = default;
};

struct ExecuteOptions {
    bool include_titration = false; // absolute set only
};

ResultSets execute(const Dataset& ds, const QuerySpec& qs, ExecuteOptions opts = {});

} // namespace ade
