#include "ademiner/dataset_io.hpp"

#include "ademiner/error.hpp"
#include "ademiner/text.hpp"

#include <filesystem>
#include <unordered_map>

namespace ade {

namespace {

const std::vector<std::string> trial_cols = {"trial_id", "title", "completion_date", "trial_type_ids",
                                             "period_kinds"};
const std::vector<std::string> group_cols = {"trial_id",    "period_index", "group_id",
                                             "group_label", "n_patients",   "indication_ids"};
const std::vector<std::string> treatment_cols = {"trial_id", "group_id",  "ap_id",       "release",
                                                 "route",    "dose_min",  "dose_max",    "dose_unit",
                                                 "intakes_min", "intakes_max"};
const std::vector<std::string> observation_cols = {"trial_id",   "period_index", "group_id",
                                                   "term_label", "serious",      "event_count"};
const std::vector<std::string> term_cols = {"label", "meddra_code", "soc", "category_ids"};

const std::vector<std::string> file_names = {"taxonomy.txt", "trials.csv", "groups.csv",
                                             "treatments.csv", "observations.csv", "terms.csv"};

std::string opt_num(const std::optional<double>& v) { return v ? text::format_double(*v) : ""; }

std::vector<std::string> split_list(std::string_view cell) {
    std::vector<std::string> out;
    if (text::trim(cell).empty())
        return out;
    for (auto& item : text::split(cell, ';'))
        if (auto t = text::trim(item); !t.empty())
            out.emplace_back(t);
    return out;
}

struct CellReader {
    const csv::Table& table;
    const csv::Record& row;
    const std::string& file;

    std::string str(std::string_view col) const { return std::string(text::trim(table.get(row, col))); }

    [[noreturn]] void fail(const std::string& what) const {
        throw ParseError(file + ": " + what, row.line);
    }

    long long integer(std::string_view col) const {
        auto v = text::parse_int(table.get(row, col));
        if (!v)
            fail("bad integer in column '" + std::string(col) + "'");
        return *v;
    }

    std::optional<double> number(std::string_view col) const {
        auto cell = text::trim(table.get(row, col));
        if (cell.empty())
            return std::nullopt;
        auto v = text::parse_double(cell);
        if (!v)
            fail("bad number in column '" + std::string(col) + "'");
        return v;
    }

    std::optional<Range> range(std::string_view lo, std::string_view hi) const {
        auto a = number(lo);
        auto b = number(hi);
        if (!a && !b)
            return std::nullopt;
        if (!a || !b)
            fail("incomplete range '" + std::string(lo) + "'/'" + std::string(hi) + "'");
        return Range{*a, *b};
    }
};

const std::string& file_of(const DatasetFiles& files, const std::string& name) {
    auto it = files.find(name);
    if (it == files.end())
        throw Error("dataset is missing '" + name + "'");
    return it->second;
}

} // namespace

DatasetFiles export_dataset(const Dataset& ds) {
    DatasetFiles files;
    files["taxonomy.txt"] = write_taxonomy(ds.taxonomy());

    std::string trials = csv::write_row(trial_cols);
    std::string groups = csv::write_row(group_cols);
    std::string treatments = csv::write_row(treatment_cols);
    for (const auto& [id, t] : ds.trials()) {
        std::vector<std::string> kinds;
        for (const auto& p : t.periods)
            kinds.emplace_back(to_string(p.kind));
        trials += csv::write_row({t.id, t.title, t.completion_date ? to_string(*t.completion_date) : "",
                                  text::join(t.trial_type_ids, ";"), text::join(kinds, ";")});
        for (std::size_t p = 0; p < t.periods.size(); ++p) {
            for (const auto& g : t.periods[p].groups) {
                groups += csv::write_row({t.id, std::to_string(p), g.id, g.label, std::to_string(g.n_patients),
                                          text::join(g.indication_ids, ";")});
                for (const auto& tr : g.treatments) {
                    treatments += csv::write_row(
                        {t.id, g.id, tr.active_principle_id, std::string(to_string(tr.release)),
                         std::string(to_string(tr.route)),
                         opt_num(tr.dose ? std::optional(tr.dose->range.min) : std::nullopt),
                         opt_num(tr.dose ? std::optional(tr.dose->range.max) : std::nullopt),
                         tr.dose ? tr.dose->unit : "",
                         opt_num(tr.intakes_per_day ? std::optional(tr.intakes_per_day->min) : std::nullopt),
                         opt_num(tr.intakes_per_day ? std::optional(tr.intakes_per_day->max) : std::nullopt)});
                }
            }
        }
    }
    files["trials.csv"] = std::move(trials);
    files["groups.csv"] = std::move(groups);
    files["treatments.csv"] = std::move(treatments);

    std::string obs = csv::write_row(observation_cols);
    for (const auto& o : ds.observations())
        obs += csv::write_row({o.trial_id, std::to_string(o.period_index), o.group_id, o.term_label,
                               o.serious ? "1" : "0", std::to_string(o.event_count)});
    files["observations.csv"] = std::move(obs);

    std::string terms = csv::write_row(term_cols);
    for (const auto& [label, term] : ds.terms())
        terms += csv::write_row({term.label, term.meddra_code.value_or(""), term.soc,
                                 text::join(term.category_ids, ";")});
    files["terms.csv"] = std::move(terms);
    return files;
}

AssemblyResult import_dataset(const DatasetFiles& files) {
    auto taxonomy = load_taxonomy(file_of(files, "taxonomy.txt"));

    std::vector<ClinicalTrial> trials;
    std::unordered_map<std::string, std::size_t> trial_pos;
    {
        const std::string name = "trials.csv";
        csv::Table table(file_of(files, name), trial_cols);
        for (const auto& row : table.rows()) {
            CellReader r{table, row, name};
            ClinicalTrial t;
            t.id = r.str("trial_id");
            t.title = r.str("title");
            if (auto d = r.str("completion_date"); !d.empty()) {
                t.completion_date = parse_date(d);
                if (!t.completion_date)
                    r.fail("bad completion_date '" + d + "'");
            }
            t.trial_type_ids = split_list(r.str("trial_type_ids"));
            for (const auto& k : split_list(r.str("period_kinds"))) {
                auto kind = parse_period_kind(k);
                if (!kind)
                    r.fail("unknown period kind '" + k + "'");
                t.periods.push_back({*kind, {}});
            }
            if (!trial_pos.emplace(t.id, trials.size()).second)
                r.fail("duplicate trial id '" + t.id + "'");
            trials.push_back(std::move(t));
        }
    }

    // (trial, group) -> group pointer; stable because groups are only
    // appended before treatments are read.
    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> group_pos;
    {
        const std::string name = "groups.csv";
        csv::Table table(file_of(files, name), group_cols);
        for (const auto& row : table.rows()) {
            CellReader r{table, row, name};
            auto tid = r.str("trial_id");
            auto it = trial_pos.find(tid);
            if (it == trial_pos.end())
                r.fail("unknown trial '" + tid + "'");
            auto& trial = trials[it->second];
            auto p = r.integer("period_index");
            if (p < 0 || static_cast<std::size_t>(p) >= trial.periods.size())
                r.fail("period index out of range");
            PatientGroup g;
            g.id = r.str("group_id");
            g.label = r.str("group_label");
            g.n_patients = static_cast<long>(r.integer("n_patients"));
            g.indication_ids = split_list(r.str("indication_ids"));
            auto& groups = trial.periods[static_cast<std::size_t>(p)].groups;
            group_pos[{tid, g.id}] = {static_cast<std::size_t>(p), groups.size()};
            groups.push_back(std::move(g));
        }
    }
    {
        const std::string name = "treatments.csv";
        csv::Table table(file_of(files, name), treatment_cols);
        for (const auto& row : table.rows()) {
            CellReader r{table, row, name};
            auto tid = r.str("trial_id");
            auto gid = r.str("group_id");
            auto it = group_pos.find({tid, gid});
            if (it == group_pos.end())
                r.fail("unknown group '" + gid + "' in trial '" + tid + "'");
            DrugTreatment tr;
            tr.active_principle_id = r.str("ap_id");
            auto rel = parse_release(r.str("release"));
            auto route = parse_route(r.str("route"));
            if (!rel || !route)
                r.fail("bad release or route");
            tr.release = *rel;
            tr.route = *route;
            if (auto dose = r.range("dose_min", "dose_max"))
                tr.dose = DoseRange{*dose, r.str("dose_unit")};
            tr.intakes_per_day = r.range("intakes_min", "intakes_max");
            auto [p, gi] = it->second;
            trials[trial_pos[tid]].periods[p].groups[gi].treatments.push_back(std::move(tr));
        }
    }

    std::vector<AdeObservation> observations;
    {
        const std::string name = "observations.csv";
        csv::Table table(file_of(files, name), observation_cols);
        for (const auto& row : table.rows()) {
            CellReader r{table, row, name};
            AdeObservation o;
            o.trial_id = r.str("trial_id");
            auto p = r.integer("period_index");
            if (p < 0)
                r.fail("negative period index");
            o.period_index = static_cast<std::size_t>(p);
            o.group_id = r.str("group_id");
            o.term_label = r.str("term_label");
            o.serious = r.integer("serious") != 0;
            o.event_count = static_cast<long>(r.integer("event_count"));
            observations.push_back(std::move(o));
        }
    }

    std::vector<AdeTerm> terms;
    {
        const std::string name = "terms.csv";
        csv::Table table(file_of(files, name), term_cols);
        for (const auto& row : table.rows()) {
            CellReader r{table, row, name};
            AdeTerm t;
            t.label = r.str("label");
            if (auto code = r.str("meddra_code"); !code.empty())
                t.meddra_code = code;
            t.soc = r.str("soc");
            t.category_ids = split_list(r.str("category_ids"));
            terms.push_back(std::move(t));
        }
    }

    return assemble_dataset(std::move(taxonomy), std::move(trials), std::move(observations),
                            std::move(terms));
}

void save_dataset(const Dataset& ds, const std::string& dir) {
    std::filesystem::create_directories(dir);
    for (const auto& [name, content] : export_dataset(ds))
        text::write_file((std::filesystem::path(dir) / name).string(), content);
}

AssemblyResult load_dataset(const std::string& dir) {
    DatasetFiles files;
    for (const auto& name : file_names)
        files[name] = text::read_file((std::filesystem::path(dir) / name).string());
    return import_dataset(files);
}

} // namespace ade
