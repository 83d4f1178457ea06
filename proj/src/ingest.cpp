#include "ademiner/error.hpp"
#include "ademiner/ingest.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <set>

namespace ade {

namespace {

// "Phase 3" -> "phase_3", "Randomized" -> "randomized".
std::string hint_to_id(std::string_view hint) {
    std::string id;
    for (char c : text::to_lower(hint)) {
        if (std::isalnum(static_cast<unsigned char>(c)))
            id.push_back(c);
        else if (!id.empty() && id.back() != '_')
            id.push_back('_');
    }
    while (!id.empty() && id.back() == '_')
        id.pop_back();
    return id;
}

struct GroupDraft {
    PeriodKind period_kind = PeriodKind::single;
    std::string label;
    std::optional<long> n_patients;
    std::set<std::string> indications;
    std::vector<const CurationRow*> rows; // file order
};

} // namespace

std::vector<RegistryRecord> load_registry_dir(const std::string& dir) {
    namespace fs = std::filesystem;
    std::error_code ec;
    if (!fs::is_directory(dir, ec))
        throw Error("not a directory: " + dir);
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".xml")
            files.push_back(e.path());
    std::sort(files.begin(), files.end());
    std::vector<RegistryRecord> out;
    for (const auto& f : files) {
        try {
            out.push_back(parse_registry_xml(text::read_file(f.string())));
        } catch (const ParseError& e) {
            throw ParseError(f.filename().string() + ": " + e.what());
        }
    }
    return out;
}

AssemblyResult ingest(IngestInputs in) {
    const auto& t = in.taxonomy;
    std::vector<std::string> warnings;

    std::map<std::string, const RegistryRecord*> records;
    for (const auto& r : in.records)
        if (!records.emplace(r.trial.id, &r).second)
            throw ValidationError("duplicate registry file for trial '" + r.trial.id + "'");

    // trial -> ordered group ids, group -> draft
    std::map<std::string, std::vector<std::string>> group_order;
    std::map<std::pair<std::string, std::string>, GroupDraft> drafts;
    for (std::size_t i = 0; i < in.curation.size(); ++i) {
        const auto& row = in.curation[i];
        const std::string where = "curation row " + std::to_string(i + 1);
        auto rec = records.find(row.trial_id);
        if (rec == records.end())
            throw ValidationError(where + ": no registry file for trial '" + row.trial_id + "'");
        if (!rec->second->group_text.count(row.group_id))
            throw ValidationError(where + ": group '" + row.group_id + "' is not declared in trial '" +
                                  row.trial_id + "'");
        if (row.ap_id.empty())
            throw ValidationError(where + ": missing ap_id for group '" + row.group_id + "'");
        auto [it, fresh] = drafts.try_emplace({row.trial_id, row.group_id});
        auto& d = it->second;
        if (fresh) {
            d.period_kind = row.period_kind;
            group_order[row.trial_id].push_back(row.group_id);
        } else if (d.period_kind != row.period_kind) {
            throw ValidationError(where + ": group '" + row.group_id + "' placed in two periods");
        }
        if (d.label.empty())
            d.label = row.group_label;
        if (row.n_patients) {
            if (d.n_patients && *d.n_patients != *row.n_patients)
                throw ValidationError(where + ": conflicting n_patients for group '" + row.group_id + "'");
            d.n_patients = row.n_patients;
        }
        d.indications.insert(row.indication_ids.begin(), row.indication_ids.end());
        d.rows.push_back(&row);
    }

    std::vector<ClinicalTrial> trials;
    std::vector<AdeObservation> observations;
    std::map<std::string, AdeTerm> terms;

    for (const auto& rec : in.records) {
        auto order = group_order.find(rec.trial.id);
        if (order == group_order.end()) {
            warnings.push_back("trial '" + rec.trial.id + "' has no curation rows; skipped");
            continue;
        }
        ClinicalTrial trial;
        trial.id = rec.trial.id;
        trial.title = rec.trial.title;
        trial.completion_date = rec.trial.completion_date;
        for (const auto& hint : rec.design_hints) {
            if (auto id = t.resolve(NodeKind::trial_type, hint_to_id(hint)))
                trial.trial_type_ids.push_back(*id);
            else if (auto byLabel = t.resolve(NodeKind::trial_type, hint))
                trial.trial_type_ids.push_back(*byLabel);
        }
        std::sort(trial.trial_type_ids.begin(), trial.trial_type_ids.end());
        trial.trial_type_ids.erase(std::unique(trial.trial_type_ids.begin(), trial.trial_type_ids.end()),
                                   trial.trial_type_ids.end());

        std::map<std::string, long> registry_size;
        for (const auto& p : rec.trial.periods)
            for (const auto& g : p.groups)
                registry_size[g.id] = g.n_patients;

        // Periods in order of first appearance in the curation file.
        std::map<std::string, std::size_t> period_of_group;
        std::vector<PeriodKind> period_kinds;
        for (const auto& gid : order->second) {
            auto& d = drafts.at({rec.trial.id, gid});
            auto pk = std::find(period_kinds.begin(), period_kinds.end(), d.period_kind);
            if (pk == period_kinds.end()) {
                period_kinds.push_back(d.period_kind);
                trial.periods.push_back({d.period_kind, {}});
                pk = period_kinds.end() - 1;
            }
            auto p = static_cast<std::size_t>(pk - period_kinds.begin());
            period_of_group[gid] = p;

            PatientGroup g;
            g.id = gid;
            g.label = d.label.empty() ? rec.group_text.at(gid).title : d.label;
            g.n_patients = d.n_patients.value_or(registry_size[gid]);
            if (g.n_patients < 1)
                throw ValidationError("group '" + gid + "' of trial '" + rec.trial.id +
                                      "' has no patient count in curation or registry");
            g.indication_ids.assign(d.indications.begin(), d.indications.end());

            // Maintenance dose wins; non-maintenance rows only stand in (without
            // dose) for principles that have no maintenance row.
            std::vector<std::string> ap_order;
            std::map<std::string, std::vector<const CurationRow*>> by_ap;
            for (const auto* row : d.rows) {
                if (!by_ap.count(row->ap_id))
                    ap_order.push_back(row->ap_id);
                by_ap[row->ap_id].push_back(row);
            }
            for (const auto& ap : ap_order) {
                const auto& rows = by_ap[ap];
                auto is_maint = [](const CurationRow* r) { return r->phase.empty() || r->phase == "maintenance"; };
                std::size_t maint = static_cast<std::size_t>(std::count_if(rows.begin(), rows.end(), is_maint));
                if (maint > 0) {
                    for (const auto* r : rows)
                        if (is_maint(r))
                            g.treatments.push_back({r->ap_id, r->release, r->route, r->dose, r->intakes_per_day});
                    if (maint < rows.size())
                        warnings.push_back("trial '" + rec.trial.id + "' group '" + gid + "': kept only the maintenance dose of '" + ap + "'");
                } else {
                    const auto* r = rows.front();
                    g.treatments.push_back({r->ap_id, r->release, r->route, std::nullopt, std::nullopt});
                    warnings.push_back("trial '" + rec.trial.id + "' group '" + gid + "': no maintenance dose for '" + ap + "'");
                }
            }
            trial.periods[p].groups.push_back(std::move(g));
        }

        for (const auto& raw : rec.observations) {
            auto p = period_of_group.find(raw.observation.group_id);
            if (p == period_of_group.end())
                continue; // group excluded at curation
            auto term = map_ade_term(raw.observation.term_label, raw.soc, in.dictionary, in.socs);
            auto obs = raw.observation;
            obs.period_index = p->second;
            obs.term_label = term.label;
            if (auto existing = terms.find(term.label); existing != terms.end()) {
                if (existing->second != term)
                    warnings.push_back("term '" + term.label + "' seen with differing SOC mappings; keeping the first");
            } else {
                terms.emplace(term.label, std::move(term));
            }
            observations.push_back(std::move(obs));
        }
        trials.push_back(std::move(trial));
    }

    std::vector<AdeTerm> term_list;
    for (auto& [label, term] : terms)
        term_list.push_back(std::move(term));
    auto result = assemble_dataset(std::move(in.taxonomy), std::move(trials), std::move(observations),
                                   std::move(term_list));
    warnings.insert(warnings.end(), result.warnings.begin(), result.warnings.end());
    result.warnings = std::move(warnings);
    return result;
}

} // namespace ade
