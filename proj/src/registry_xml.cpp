#include "ademiner/error.hpp"
#include "ademiner/ingest.hpp"
#include "ademiner/text.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <set>
#include <sstream>

namespace ade {

namespace pt = boost::property_tree;

namespace {

[[noreturn]] void schema_error(const std::string& path, const std::string& what) {
    throw ParseError("schema violation at " + path + ": " + what);
}

const pt::ptree& child(const pt::ptree& node, const std::string& name, const std::string& path) {
    auto c = node.get_child_optional(name);
    if (!c)
        schema_error(path + "/" + name, "missing element");
    return *c;
}

std::string text_of(const pt::ptree& node) { return std::string(text::trim(node.data())); }

std::optional<std::string> attr(const pt::ptree& node, const std::string& name) {
    if (auto v = node.get_optional<std::string>("<xmlattr>." + name))
        return std::string(text::trim(*v));
    return std::nullopt;
}

std::optional<long> int_attr(const pt::ptree& node, const std::string& name, const std::string& path) {
    auto v = attr(node, name);
    if (!v || v->empty())
        return std::nullopt;
    auto n = text::parse_int(*v);
    if (!n)
        schema_error(path + "/@" + name, "not an integer: '" + *v + "'");
    if (*n < 0)
        throw ParseError("negative count at " + path + "/@" + name + ": " + *v);
    return static_cast<long>(*n);
}

} // namespace

RegistryRecord parse_registry_xml(std::string_view document) {
    pt::ptree doc;
    try {
        std::istringstream in{std::string(document)};
        pt::read_xml(in, doc, pt::xml_parser::trim_whitespace);
    } catch (const pt::xml_parser_error& e) {
        throw ParseError("malformed XML: " + e.message(), e.line());
    }

    const std::string root = "clinical_study";
    const auto& study = child(doc, root, "");
    RegistryRecord rec;
    auto& trial = rec.trial;

    trial.id = text_of(child(child(study, "id_info", "/" + root), "nct_id", "/" + root + "/id_info"));
    if (trial.id.empty())
        schema_error("/" + root + "/id_info/nct_id", "empty");
    trial.title = text_of(child(study, "official_title", "/" + root));
    if (auto d = study.get_optional<std::string>("completion_date")) {
        trial.completion_date = parse_date(*d);
        if (!trial.completion_date)
            schema_error("/" + root + "/completion_date", "unrecognized date '" + *d + "'");
    }
    for (const char* hint : {"study_type", "study_design_info.allocation", "phase"})
        if (auto v = study.get_optional<std::string>(hint); v && !text::trim(*v).empty())
            rec.design_hints.emplace_back(text::trim(*v));

    const std::string events_path = "/" + root + "/clinical_results/reported_events";
    const auto& results = child(study, "clinical_results", "/" + root);
    const auto& events = child(results, "reported_events", "/" + root + "/clinical_results");

    Period period{PeriodKind::single, {}};
    std::set<std::string> declared;
    if (auto groups = events.get_child_optional("group_list")) {
        for (const auto& [name, g] : *groups) {
            if (name != "group")
                continue;
            const auto gpath = events_path + "/group_list/group";
            auto gid = attr(g, "group_id");
            if (!gid || gid->empty())
                schema_error(gpath + "/@group_id", "missing attribute");
            if (!declared.insert(*gid).second)
                schema_error(gpath + "/@group_id", "duplicate group id '" + *gid + "'");
            PatientGroup pg;
            pg.id = *gid;
            pg.label = text_of(child(g, "title", gpath));
            period.groups.push_back(pg);
            rec.group_text[*gid] = {pg.label, g.get<std::string>("description", "")};
        }
    }

    std::map<std::string, long> at_risk;
    for (const auto& [section, serious] : {std::pair{"serious_events", true}, {"other_events", false}}) {
        auto sec = events.get_child_optional(section);
        if (!sec)
            continue;
        const auto spath = events_path + "/" + section;
        auto cats = sec->get_child_optional("category_list");
        if (!cats)
            continue;
        for (const auto& [cname, cat] : *cats) {
            if (cname != "category")
                continue;
            const auto cpath = spath + "/category_list/category";
            auto soc = text_of(child(cat, "title", cpath));
            auto list = cat.get_child_optional("event_list");
            if (!list)
                continue;
            for (const auto& [ename, ev] : *list) {
                if (ename != "event")
                    continue;
                const auto epath = cpath + "/event_list/event";
                auto term = text_of(child(ev, "sub_title", epath));
                if (term.empty())
                    schema_error(epath + "/sub_title", "empty term label");
                for (const auto& [kname, counts] : ev) {
                    if (kname != "counts")
                        continue;
                    const auto kpath = epath + "/counts";
                    auto gid = attr(counts, "group_id");
                    if (!gid || gid->empty())
                        schema_error(kpath + "/@group_id", "missing attribute");
                    if (!declared.count(*gid))
                        throw ParseError("event '" + term + "' at " + kpath +
                                         " references undeclared group '" + *gid + "'");
                    auto n_events = int_attr(counts, "events", kpath);
                    auto affected = int_attr(counts, "subjects_affected", kpath);
                    if (auto risk = int_attr(counts, "subjects_at_risk", kpath))
                        at_risk[*gid] = std::max(at_risk[*gid], *risk);
                    if (!n_events && !affected)
                        schema_error(kpath, "neither @events nor @subjects_affected present");
                    if (soc == "Total")
                        continue;
                    long count = n_events ? *n_events : *affected;
                    if (count == 0)
                        continue;
                    rec.observations.push_back({{trial.id, 0, *gid, term, serious, count}, soc});
                }
            }
        }
    }

    for (auto& g : period.groups)
        g.n_patients = at_risk.count(g.id) ? at_risk[g.id] : 0;
    if (!period.groups.empty())
        trial.periods.push_back(std::move(period));
    return rec;
}

} // namespace ade
