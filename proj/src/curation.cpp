#include "ademiner/error.hpp"
#include "ademiner/ingest.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <set>

namespace ade {

namespace {

const std::set<std::string> known_phases = {"", "maintenance", "titration", "loading", "withdrawal"};

std::string num(double v) { return text::format_double(v); }

} // namespace

std::vector<CurationRow> load_curation_csv(std::string_view document, const Taxonomy& t) {
    csv::Table table(document, curation_columns);
    std::vector<CurationRow> rows;
    for (const auto& rec : table.rows()) {
        auto cell = [&](std::string_view col) { return std::string(text::trim(table.get(rec, col))); };
        auto fail = [&](const std::string& what) -> void { throw ParseError("curation: " + what, rec.line); };
        auto number = [&](std::string_view col) -> std::optional<double> {
            auto c = cell(col);
            if (c.empty())
                return std::nullopt;
            auto v = text::parse_double(c);
            if (!v)
                fail("bad number '" + c + "' in column " + std::string(col));
            return v;
        };
        auto range = [&](std::string_view lo, std::string_view hi, const char* what) -> std::optional<Range> {
            auto a = number(lo);
            auto b = number(hi);
            if (!a && !b)
                return std::nullopt;
            // A single bound means a point value.
            Range r{a.value_or(*b), b.value_or(*a)};
            if (!r.well_ordered())
                fail(std::string("malformed ") + what + " range: min " + num(r.min) + " > max " + num(r.max));
            return r;
        };

        CurationRow row;
        row.trial_id = cell("trial_id");
        if (row.trial_id.empty())
            fail("empty trial_id");
        auto pk = parse_period_kind(cell("period_kind").empty() ? "single" : cell("period_kind"));
        if (!pk)
            fail("unknown period_kind '" + cell("period_kind") + "'");
        row.period_kind = *pk;
        row.group_id = cell("group_id");
        if (row.group_id.empty())
            fail("empty group_id");
        row.group_label = cell("group_label");
        if (auto n = cell("n_patients"); !n.empty()) {
            auto v = text::parse_int(n);
            if (!v || *v < 1)
                fail("n_patients must be a positive integer, got '" + n + "'");
            row.n_patients = static_cast<long>(*v);
        }
        for (auto& item : text::split(cell("indication_ids"), ';')) {
            auto id = std::string(text::trim(item));
            if (id.empty())
                continue;
            if (!t.contains(id, NodeKind::indication))
                fail("unknown indication id '" + id + "'");
            row.indication_ids.push_back(id);
        }
        std::sort(row.indication_ids.begin(), row.indication_ids.end());
        row.ap_id = cell("ap_id");
        if (!row.ap_id.empty() && !t.contains(row.ap_id, NodeKind::active_principle))
            fail("unknown active principle id '" + row.ap_id + "'");
        auto rel = parse_release(cell("release"));
        if (!rel)
            fail("unknown release '" + cell("release") + "'");
        row.release = *rel;
        auto route = parse_route(cell("route"));
        if (!route)
            fail("unknown route '" + cell("route") + "'");
        row.route = *route;
        if (auto dose = range("dose_min", "dose_max", "dose")) {
            auto unit = cell("dose_unit");
            if (unit.empty())
                fail("dose without dose_unit");
            row.dose = DoseRange{*dose, unit};
        }
        row.intakes_per_day = range("intakes_min", "intakes_max", "intakes");
        row.phase = text::to_lower(cell("phase"));
        if (!known_phases.count(row.phase))
            fail("unknown phase '" + row.phase + "'");
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string write_curation_csv(const std::vector<CurationRow>& rows) {
    std::string out = csv::write_row(curation_columns);
    for (const auto& r : rows) {
        out += csv::write_row({
            r.trial_id,
            std::string(to_string(r.period_kind)),
            r.group_id,
            r.group_label,
            r.n_patients ? std::to_string(*r.n_patients) : "",
            text::join(r.indication_ids, ";"),
            r.ap_id,
            r.release == Release::unspecified ? "" : std::string(to_string(r.release)),
            r.route == Route::unspecified ? "" : std::string(to_string(r.route)),
            r.dose ? num(r.dose->range.min) : "",
            r.dose ? num(r.dose->range.max) : "",
            r.dose ? r.dose->unit : "",
            r.intakes_per_day ? num(r.intakes_per_day->min) : "",
            r.intakes_per_day ? num(r.intakes_per_day->max) : "",
            r.phase,
        });
    }
    return out;
}

std::vector<CurationRow> draft_curation(const std::vector<RegistryRecord>& records, const Taxonomy& t) {
    std::vector<CurationRow> rows;
    for (const auto& rec : records) {
        for (const auto& period : rec.trial.periods) {
            for (const auto& g : period.groups) {
                const auto& gt = rec.group_text.at(g.id);
                const std::string free_text = gt.title + ". " + gt.description;
                auto regimen = extract_regimen(free_text, t);

                CurationRow base;
                base.trial_id = rec.trial.id;
                base.period_kind = period.kind;
                base.group_id = g.id;
                base.group_label = g.label;
                if (g.n_patients > 0)
                    base.n_patients = g.n_patients;
                std::set<std::string> inds;
                for (const auto& m : detect_labels(free_text, t, NodeKind::indication))
                    inds.insert(m.id);
                // Fall back to the trial title when the group text names no indication.
                if (inds.empty())
                    for (const auto& m : detect_labels(rec.trial.title, t, NodeKind::indication))
                        inds.insert(m.id);
                base.indication_ids.assign(inds.begin(), inds.end());
                base.release = regimen.release.value_or(Release::unspecified);
                base.route = regimen.route.value_or(Route::unspecified);
                base.dose = regimen.dose;
                base.intakes_per_day = regimen.intakes_per_day;

                // Distinct candidates, dropping classes subsuming another candidate.
                std::vector<std::string> aps;
                for (const auto& c : regimen.active_principle_candidates)
                    if (std::find(aps.begin(), aps.end(), c.id) == aps.end())
                        aps.push_back(c.id);
                std::vector<std::string> kept;
                for (const auto& a : aps)
                    if (std::none_of(aps.begin(), aps.end(),
                                     [&](const std::string& b) { return t.is_strict_descendant(b, a); }))
                        kept.push_back(a);
                if (kept.empty())
                    kept.emplace_back();
                for (std::size_t i = 0; i < kept.size(); ++i) {
                    auto row = base;
                    row.ap_id = kept[i];
                    // Dose and intakes describe the first principle only.
                    if (i > 0) {
                        row.dose.reset();
                        row.intakes_per_day.reset();
                    }
                    rows.push_back(std::move(row));
                }
            }
        }
    }
    return rows;
}

ExtractionScore score_extraction(const std::vector<CurationRow>& draft, const std::vector<CurationRow>& curated) {
    using Key = std::pair<std::string, std::string>;
    std::map<Key, std::vector<const CurationRow*>> by_group;
    for (const auto& r : draft)
        by_group[{r.trial_id, r.group_id}].push_back(&r);

    ExtractionScore s;
    std::map<Key, std::size_t> position;
    std::set<Key> indication_scored;
    auto tally = [](FieldScore& f, bool ok) {
        ++f.compared;
        if (ok)
            ++f.correct;
    };
    for (const auto& c : curated) {
        Key key{c.trial_id, c.group_id};
        auto it = by_group.find(key);
        const auto& candidates = it == by_group.end() ? std::vector<const CurationRow*>{} : it->second;
        if (indication_scored.insert(key).second)
            tally(s.indication, !candidates.empty() && candidates.front()->indication_ids == c.indication_ids);
        auto pos = position[key]++;
        const CurationRow* d = pos < candidates.size() ? candidates[pos] : nullptr;
        tally(s.active_principle, d && d->ap_id == c.ap_id);
        tally(s.release, d && d->release == c.release);
        tally(s.route, d && d->route == c.route);
        tally(s.dose, d && ((!d->dose && !c.dose) || (d->dose && c.dose && d->dose->range == c.dose->range)));
        tally(s.dose_unit, d && ((!d->dose && !c.dose) || (d->dose && c.dose && d->dose->unit == c.dose->unit)));
        tally(s.intakes, d && d->intakes_per_day == c.intakes_per_day);
    }
    return s;
}

} // namespace ade
