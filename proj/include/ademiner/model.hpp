#pragma once

// Registry data model: trials, periods, patient groups, drug treatments and
// aggregated ADE observations, plus validated dataset assembly.

#include "ademiner/taxonomy.hpp"

#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

namespace ade {

enum class PeriodKind { single, titration, maintenance, continuation };
enum class Release { unspecified, immediate, modified };
enum class Route {
    unspecified,
    oral,
    intravenous,
    subcutaneous,
    transdermal,
    topical,
    intramuscular,
    rectal,
    nasal
};

std::string_view to_string(PeriodKind k);
std::string_view to_string(Release r);
std::string_view to_string(Route r);
std::optional<PeriodKind> parse_period_kind(std::string_view s);
// Empty text parses as `unspecified`.
std::optional<Release> parse_release(std::string_view s);
std::optional<Route> parse_route(std::string_view s);

// Closed interval [min, max].
struct Range {
    double min = 0;
    double max = 0;

    bool well_ordered() const { return min <= max; }
    bool intersects(const Range& o) const { return min <= o.max && o.min <= max; }
    bool operator==(const Range&) const = default;
};

struct DoseRange {
    Range range;
    std::string unit;

    bool operator==(const DoseRange&) const = default;
};

struct Date {
    int year = 0;
    unsigned month = 1;
    unsigned day = 1;

    auto operator<=>(const Date&) const = default;
};

// Accepts "YYYY-MM-DD", "YYYY-MM", "Month YYYY" and "Month D, YYYY".
std::optional<Date> parse_date(std::string_view s);
std::string to_string(const Date& d);

struct DrugTreatment {
    std::string active_principle_id;
    Release release = Release::unspecified;
    Route route = Route::unspecified;
    std::optional<DoseRange> dose;
    std::optional<Range> intakes_per_day;

    bool operator==(const DrugTreatment&) const = default;
};

struct PatientGroup {
    std::string id; // unique within its trial
    std::string label;
    long n_patients = 0;
    std::vector<DrugTreatment> treatments;
    std::vector<std::string> indication_ids; // sorted

    bool operator==(const PatientGroup&) const = default;
};

struct Period {
    PeriodKind kind = PeriodKind::single;
    std::vector<PatientGroup> groups;

    bool operator==(const Period&) const = default;
};

struct ClinicalTrial {
    std::string id;
    std::string title;
    std::optional<Date> completion_date;
    std::vector<std::string> trial_type_ids; // sorted
    std::vector<Period> periods;

    bool operator==(const ClinicalTrial&) const = default;
};

struct AdeTerm {
    std::string label;
    std::optional<std::string> meddra_code;
    std::string soc;
    std::vector<std::string> category_ids; // 1 or 2, sorted

    bool operator==(const AdeTerm&) const = default;
};

struct AdeObservation {
    std::string trial_id;
    std::size_t period_index = 0;
    std::string group_id;
    std::string term_label;
    bool serious = false;
    long event_count = 0;

    bool operator==(const AdeObservation&) const = default;
};

// Locates a group inside a dataset.
struct GroupRef {
    std::string trial_id;
    std::size_t period_index = 0;
    std::string group_id;

    auto operator<=>(const GroupRef&) const = default;
};

class Dataset {
public:
    Dataset() = default;

    const Taxonomy& taxonomy() const noexcept { return taxonomy_; }
    // Sorted by id.
    const std::map<std::string, ClinicalTrial>& trials() const noexcept { return trials_; }
    // Sorted by (trial, period, group, term, serious).
    const std::vector<AdeObservation>& observations() const noexcept { return observations_; }
    const std::map<std::string, AdeTerm>& terms() const noexcept { return terms_; }

    const ClinicalTrial* find_trial(std::string_view id) const;
    const AdeTerm& term(std::string_view label) const;
    const PatientGroup& group(const GroupRef& ref) const;

    // Observations recorded for one group (contiguous slice).
    std::vector<const AdeObservation*> observations_of(const GroupRef& ref) const;

    bool operator==(const Dataset& o) const {
        return taxonomy_ == o.taxonomy_ && trials_ == o.trials_ &&
               observations_ == o.observations_ && terms_ == o.terms_;
    }

private:
    friend struct DatasetBuilder;

    Taxonomy taxonomy_;
    std::map<std::string, ClinicalTrial> trials_;
    std::vector<AdeObservation> observations_;
    std::map<std::string, AdeTerm> terms_;
    std::map<GroupRef, std::pair<std::size_t, std::size_t>> obs_index_; // [begin, end)
};

struct AssemblyResult {
    Dataset dataset;
    std::vector<std::string> warnings;
};

// Validates referential integrity and every model invariant; merges duplicate
// (group, term, serious) observations by summing their counts. Terms not
// referenced by any observation are kept. Throws ValidationError.
AssemblyResult assemble_dataset(Taxonomy taxonomy, std::vector<ClinicalTrial> trials,
                                std::vector<AdeObservation> observations,
                                std::vector<AdeTerm> terms);

struct DatasetSummary {
    std::size_t trials = 0;
    std::size_t groups = 0;
    long patients = 0;           // groups outside titration periods
    long titration_patients = 0; // groups inside titration periods
    std::size_t observations = 0;
    long events = 0;
    std::size_t distinct_terms = 0;
    std::size_t mapped_terms = 0;
    double mapped_fraction = 0; // mapped_terms / distinct_terms, 0 when empty

    bool operator==(const DatasetSummary&) const = default;
};

DatasetSummary dataset_summary(const Dataset& ds);

// True when every treatment of the group is the placebo principle (or one of
// its descendants).
bool is_placebo_group(const PatientGroup& g, const Taxonomy& t);

inline constexpr std::string_view placebo_id = "placebo";

} // namespace ade
