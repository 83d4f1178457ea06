#pragma once

// Registry XML parsing, free-text regimen extraction, ADE term mapping and
// the curation CSV round trip.

#include "ademiner/model.hpp"
#include "ademiner/taxonomy.hpp"

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ade {

// ---------------------------------------------------------------------------
// Registry XML

struct GroupText {
    std::string title;
    std::string description;
};

// One counts element of an event row. The SOC is the enclosing category title.
struct RawObservation {
    AdeObservation observation; // period_index is 0 until curation places the group
    std::string soc;
};

struct RegistryRecord {
    // One period of kind `single` listing the declared groups; treatments and
    // indications are left empty for curation. n_patients is the largest
    // subjects_at_risk seen for the group (0 when never reported).
    ClinicalTrial trial;
    std::vector<RawObservation> observations;
    std::map<std::string, GroupText> group_text;
    // Optional design hints: study_type, study_design_info/allocation, phase.
    std::vector<std::string> design_hints;
};

// Event counts prefer @events and fall back to @subjects_affected; counts of
// zero yield no observation. Rows under a category titled "Total" are
// registry summaries and are skipped. Throws ParseError naming the element
// path on schema violations, negative counts, or undeclared group ids.
RegistryRecord parse_registry_xml(std::string_view document);

// Every *.xml file of a directory, in file-name order. Parse errors name the
// file.
std::vector<RegistryRecord> load_registry_dir(const std::string& dir);

// ---------------------------------------------------------------------------
// Regimen extraction

struct Span {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive

    bool operator==(const Span&) const = default;
};

struct LabelMatch {
    std::string id;
    Span span;

    bool operator==(const LabelMatch&) const = default;
};

struct NumericCapture {
    Span span;
    double value = 0;
};

struct RegimenExtraction {
    std::vector<LabelMatch> active_principle_candidates;
    std::optional<DoseRange> dose;
    std::optional<Span> dose_span;
    std::optional<Range> intakes_per_day;
    std::optional<Span> intakes_span;
    std::optional<Route> route;
    std::optional<Release> release;
    // Every digit run the patterns consumed, with its parsed value.
    std::vector<NumericCapture> numbers;
};

// Case-insensitive longest-match scan for taxonomy labels of one kind at word
// boundaries. Matches do not overlap.
std::vector<LabelMatch> detect_labels(std::string_view text, const Taxonomy& t, NodeKind kind);

// Never fails; unrecognized text leaves fields empty. Pattern table:
//   dose     "<n> <unit>", "<n>-<n> <unit>", "<n> to <n> <unit>"
//   intakes  bid=2, tid=3, qid=4, qd / once daily = 1, twice daily = 2,
//            "<n> times per day", "<n>-<m> times per day" (also "a day",
//            "daily"; n may be a number word), "every <n>[-<m>] hours" and
//            "q<n>h" = 24/n
//   route    oral, iv, subcutaneous, transdermal, topical, intramuscular,
//            rectal, nasal and their common synonyms
//   release  immediate / extended / modified / sustained / controlled /
//            prolonged release and IR, ER, XR, SR, CR
RegimenExtraction extract_regimen(std::string_view text, const Taxonomy& t);

// ---------------------------------------------------------------------------
// ADE terms

// The 27 MedDRA System Organ Classes.
extern const std::array<std::string_view, 27> meddra_socs;
bool is_meddra_soc(std::string_view soc);

// label|meddra_code|soc|category_id[;category_id]
class TermDictionary {
public:
    TermDictionary() = default;
    static TermDictionary load(std::string_view document);

    // Exact match after lowercasing and whitespace normalization.
    const AdeTerm* lookup(std::string_view label) const;
    std::size_t size() const noexcept { return terms_.size(); }

private:
    std::map<std::string, AdeTerm> terms_; // normalized label -> term
};

// soc_name|category_id[;category_id]
class SocCategoryTable {
public:
    SocCategoryTable() = default;
    static SocCategoryTable load(std::string_view document);
    static const SocCategoryTable& defaults();

    const std::vector<std::string>* categories(std::string_view soc) const;

private:
    std::map<std::string, std::vector<std::string>> table_; // normalized SOC -> categories
};

// Dictionary hit: the dictionary term. Miss: a SOC-level term keeping the
// source label, no MedDRA code, categories from the SOC table. Throws
// ValidationError when the label is unmatched and the SOC is empty or unknown.
AdeTerm map_ade_term(std::string_view label, std::string_view soc, const TermDictionary& dictionary,
                     const SocCategoryTable& socs);

// ---------------------------------------------------------------------------
// Curation CSV

inline const std::vector<std::string> curation_columns = {
    "trial_id", "period_kind", "group_id",  "group_label", "n_patients",
    "indication_ids", "ap_id",   "release",   "route",       "dose_min",
    "dose_max", "dose_unit",   "intakes_min", "intakes_max", "phase"};

// One row per (group, treatment).
struct CurationRow {
    std::string trial_id;
    PeriodKind period_kind = PeriodKind::single;
    std::string group_id;
    std::string group_label;
    std::optional<long> n_patients;
    std::vector<std::string> indication_ids;
    std::string ap_id; // empty in uncurated drafts
    Release release = Release::unspecified;
    Route route = Route::unspecified;
    std::optional<DoseRange> dose;
    std::optional<Range> intakes_per_day;
    std::string phase; // empty means maintenance

    bool operator==(const CurationRow&) const = default;
};

// Throws ParseError with the row's line on unknown taxonomy ids, unordered
// ranges, bad enums or a missing column.
std::vector<CurationRow> load_curation_csv(std::string_view document, const Taxonomy& t);
std::string write_curation_csv(const std::vector<CurationRow>& rows);

// Pre-curation rows: one per detected active principle (one empty row when
// none), filled from extract_regimen over the group title and description;
// indications detected the same way.
std::vector<CurationRow> draft_curation(const std::vector<RegistryRecord>& records, const Taxonomy& t);

inline std::string export_curation_csv(const std::vector<RegistryRecord>& records, const Taxonomy& t) {
    return write_curation_csv(draft_curation(records, t));
}

// Agreement between automatic drafts and curated rows, per field.
struct FieldScore {
    std::size_t compared = 0;
    std::size_t correct = 0;
    double accuracy() const { return compared ? double(correct) / double(compared) : 0.0; }
};

struct ExtractionScore {
    FieldScore indication;
    FieldScore active_principle;
    FieldScore release;
    FieldScore route;
    FieldScore dose;
    FieldScore dose_unit;
    FieldScore intakes;
};

ExtractionScore score_extraction(const std::vector<CurationRow>& draft,
                                 const std::vector<CurationRow>& curated);

// ---------------------------------------------------------------------------
// Pipeline

struct IngestInputs {
    std::vector<RegistryRecord> records;
    std::vector<CurationRow> curation;
    Taxonomy taxonomy;
    TermDictionary dictionary;
    SocCategoryTable socs = SocCategoryTable::defaults();
};

// Builds the dataset from curated rows. Registry groups absent from the
// curation are dropped together with their events. For each (group, active
// principle) with a maintenance-phase row, other phases' rows are ignored;
// with none, the treatment is kept without dose.
AssemblyResult ingest(IngestInputs inputs);

} // namespace ade
