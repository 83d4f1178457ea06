#pragma once

// Group-size weights, placebo correction, direct/indirect mixing and the
// aggregation of weighted observations into 13-category ADE profiles.

#include "ademiner/query.hpp"

#include <json.hpp>

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace ade {

inline constexpr std::array<std::string_view, 13> ade_category_ids = {
    "nervous",
    "psychological",
    "eye_ear",
    "respiratory",
    "cardiovascular",
    "digestive",
    "urinary",
    "genital_reproductive",
    "endocrine_metabolic_nutritional",
    "blood_immune",
    "skin_subcutaneous",
    "musculoskeletal",
    "unclassified",
};

std::optional<std::size_t> category_index(std::string_view id);

enum class ResultSetKind { direct, direct_indirect, absolute };

// "direct", "mixed", "absolute" (the URL spelling).
std::string_view to_string(ResultSetKind k);
std::optional<ResultSetKind> parse_result_set_kind(std::string_view s);

// w_x = min(sizes) / size_x. Throws ValidationError on an empty list or a
// size below 1.
std::vector<double> per_trial_weights(const std::vector<double>& sizes);

struct ArmCount {
    double events = 0;
    double patients = 0;
};

struct PlaceboTrial {
    ArmCount placebo;
    std::vector<ArmCount> arms;
};

struct PlaceboCorrection {
    double global_placebo_rate = 0;
    std::vector<std::vector<double>> corrected; // per trial, per arm
};

// E_c = E + (global placebo rate - trial placebo rate) * |arm|.
PlaceboCorrection placebo_correct(const std::vector<PlaceboTrial>& trials);

struct MixInput {
    double direct_patients = 0;
    double indirect_patients = 0;
};

struct MixFactors {
    double k_dir = 1;
    double k_ind = 1;

    bool operator==(const MixFactors&) const = default;
};

struct Mixing {
    double r = 0; // 0 when either side is empty overall
    std::vector<MixFactors> k;
};

Mixing mix_weights(const std::vector<MixInput>& groups);

struct TermCount {
    double all = 0;
    double serious = 0;
};

// One group of a result-set slice with its final weight and (possibly
// corrected) counts.
struct WeightedGroup {
    GroupRef ref;
    double n_patients = 0;
    double weight = 1;
    std::map<std::string, TermCount> counts;
};

struct TermRate {
    double rate = 0;
    double serious_rate = 0;

    bool operator==(const TermRate&) const = default;
};

struct AdeProfile {
    std::array<double, 13> total_rate{};   // clamped to >= 0
    std::array<double, 13> serious_rate{}; // clamped to [0, total]
    std::map<std::string, TermRate> terms; // unclamped
    std::size_t n_trials = 0;
    double effective_patients = 0;
    double overall_rate = 0;
    double overall_serious_rate = 0;

    bool operator==(const AdeProfile&) const = default;
};

// Categories of a term folded onto the 13 profile categories (through
// taxonomy ancestors; unknown ones land in unclassified).
std::vector<std::size_t> term_categories(const AdeTerm& term, const Taxonomy& t);

// Throws ValidationError when the slice has no effective patient.
AdeProfile aggregate_profile(const std::vector<WeightedGroup>& slice, const Dataset& ds);

enum class WeightSource { direct, indirect };

struct GroupWeight {
    std::string trial_id;
    std::size_t period_index = 0;
    std::string group_id;
    std::size_t query_index = 0;
    double w = 1;
    double k_dir = 1;
    double k_ind = 1;
    WeightSource source = WeightSource::direct;

    double effective() const { return w * (source == WeightSource::direct ? k_dir : k_ind); }
};

struct CorrectedCount {
    std::string trial_id;
    std::size_t period_index = 0;
    std::string group_id;
    std::string term;
    bool serious = false;
    double raw = 0;
    double corrected = 0;
};

struct ProfileSet {
    ResultSetKind kind = ResultSetKind::direct;
    std::vector<std::optional<AdeProfile>> profiles; // per query index; empty slices are nullopt
    std::vector<GroupWeight> weights;
    std::vector<CorrectedCount> corrections;
    std::optional<Mixing> mixing;
    bool size_weighting = false;
    bool placebo_correction = false;
};

// Raw event counts of one group, per term.
std::map<std::string, TermCount> group_counts(const Dataset& ds, const GroupRef& ref);

ProfileSet compute_profiles(const Dataset& ds, const ResultSets& rs, ResultSetKind kind, std::size_t n_queries);

nlohmann::json profile_to_json(const AdeProfile& p);
AdeProfile profile_from_json(const nlohmann::json& j);

} // namespace ade
