#include "ademiner/dataset_io.hpp"
#include "ademiner/error.hpp"
#include "ademiner/glyph.hpp"
#include "ademiner/ingest.hpp"
#include "ademiner/normalization.hpp"
#include "ademiner/service.hpp"
#include "ademiner/text.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <iostream>

using namespace ade;

namespace {

std::string env_or(const char* name, std::string fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void print_warnings(const std::vector<std::string>& warnings) {
    for (const auto& w : warnings)
        std::cerr << "warning: " << w << '\n';
}

std::string explain_csv(const ProfileSet& ps) {
    std::string out = csv::write_row({"record", "trial_id", "period_index", "group_id", "query_index", "source", "w",
                                      "k_dir", "k_ind", "term", "serious", "raw", "corrected"});
    for (const auto& w : ps.weights)
        out += csv::write_row({"weight", w.trial_id, std::to_string(w.period_index), w.group_id,
                               std::to_string(w.query_index + 1), w.source == WeightSource::direct ? "direct" : "indirect",
                               text::format_double(w.w), text::format_double(w.k_dir), text::format_double(w.k_ind), "",
                               "", "", ""});
    for (const auto& c : ps.corrections)
        out += csv::write_row({"correction", c.trial_id, std::to_string(c.period_index), c.group_id, "", "indirect", "",
                               "", "", c.term, c.serious ? "1" : "0", text::format_double(c.raw),
                               text::format_double(c.corrected)});
    return out;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Mine adverse drug events from clinical-trial registry results"};
    app.require_subcommand(1);

    std::string xml_dir, curation, taxonomy, terms, out, soc_map;
    auto* ingest_cmd = app.add_subcommand("ingest", "Build a dataset from registry XML and a curation CSV");
    ingest_cmd->add_option("--xml-dir", xml_dir, "Directory of registry results XML files")->required();
    ingest_cmd->add_option("--curation", curation, "Curation CSV")->required();
    ingest_cmd->add_option("--taxonomy", taxonomy, "Taxonomy file")->required();
    ingest_cmd->add_option("--terms", terms, "ADE term dictionary")->required();
    ingest_cmd->add_option("--soc-map", soc_map, "SOC to category table (defaults built in)");
    ingest_cmd->add_option("--out", out, "Output dataset directory")->required();

    auto* draft_cmd = app.add_subcommand("draft-curation", "Pre-fill a curation CSV from registry text");
    draft_cmd->add_option("--xml-dir", xml_dir)->required();
    draft_cmd->add_option("--taxonomy", taxonomy)->required();
    draft_cmd->add_option("--out", out, "Output CSV (stdout when omitted)");

    std::string draft_csv;
    auto* score_cmd = app.add_subcommand("score", "Per-field agreement between a draft and a curated CSV");
    score_cmd->add_option("--draft", draft_csv)->required();
    score_cmd->add_option("--curated", curation)->required();
    score_cmd->add_option("--taxonomy", taxonomy)->required();

    std::string dataset = env_or("ADE_DATASET", "");
    bool as_json = false;
    auto* summary_cmd = app.add_subcommand("summary", "Dataset counts");
    summary_cmd->add_option("--dataset", dataset)->required(dataset.empty());
    summary_cmd->add_flag("--json", as_json);

    std::string params, set = "direct";
    bool explain = false, include_titration = false;
    auto* query_cmd = app.add_subcommand("query", "Run a search given in the URL scheme");
    query_cmd->add_option("--dataset", dataset)->required(dataset.empty());
    query_cmd->add_option("--params", params, "Query string, e.g. group_1_ap=morphine&group_2_ap=placebo")->required();
    query_cmd->add_option("--set", set, "direct, mixed or absolute");
    query_cmd->add_flag("--include-titration", include_titration);
    query_cmd->add_flag("--explain", explain, "Print every weight and corrected count as CSV");

    std::string profile, styles;
    double reference = 0;
    int canvas = 260;
    std::string caption;
    auto* render_cmd = app.add_subcommand("render", "Render a profile JSON as a flower glyph SVG");
    render_cmd->add_option("--profile", profile)->required();
    render_cmd->add_option("--out", out)->required();
    render_cmd->add_option("--reference", reference, "Rate mapped to full petal size (default: largest rate)");
    render_cmd->add_option("--styles", styles, "Style file");
    render_cmd->add_option("--canvas", canvas)->check(CLI::PositiveNumber);
    render_cmd->add_option("--caption", caption);

    std::string bind = env_or("ADE_BIND", "127.0.0.1:8080"), assets;
    auto* serve_cmd = app.add_subcommand("serve", "Serve the JSON API and web assets");
    serve_cmd->add_option("--dataset", dataset)->required(dataset.empty());
    serve_cmd->add_option("--bind", bind, "HOST:PORT");
    serve_cmd->add_option("--assets", assets, "Static asset directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*ingest_cmd) {
            auto tax = load_taxonomy(text::read_file(taxonomy));
            IngestInputs in{load_registry_dir(xml_dir), load_curation_csv(text::read_file(curation), tax), tax,
                            TermDictionary::load(text::read_file(terms)),
                            soc_map.empty() ? SocCategoryTable::defaults()
                                            : SocCategoryTable::load(text::read_file(soc_map))};
            auto result = ingest(std::move(in));
            print_warnings(result.warnings);
            save_dataset(result.dataset, out);
            auto s = dataset_summary(result.dataset);
            std::cout << s.trials << " trials, " << s.groups << " groups, " << s.patients << " patients ("
                      << s.titration_patients << " in titration), " << s.observations << " observations\n";
        } else if (*draft_cmd) {
            auto tax = load_taxonomy(text::read_file(taxonomy));
            auto csv_text = export_curation_csv(load_registry_dir(xml_dir), tax);
            if (out.empty())
                std::cout << csv_text;
            else
                text::write_file(out, csv_text);
        } else if (*score_cmd) {
            auto tax = load_taxonomy(text::read_file(taxonomy));
            auto s = score_extraction(load_curation_csv(text::read_file(draft_csv), tax),
                                      load_curation_csv(text::read_file(curation), tax));
            std::cout << "field,compared,correct,accuracy\n";
            for (const auto& [name, f] : {std::pair{"indication", s.indication}, {"active_principle", s.active_principle},
                                          {"release", s.release}, {"route", s.route}, {"dose", s.dose},
                                          {"dose_unit", s.dose_unit}, {"intakes", s.intakes}})
                std::cout << name << ',' << f.compared << ',' << f.correct << ',' << text::format_fixed(f.accuracy(), 3)
                          << '\n';
        } else if (*summary_cmd) {
            auto loaded = load_dataset(dataset);
            auto s = dataset_summary(loaded.dataset);
            if (as_json) {
                nlohmann::json j = {{"trials", s.trials},
                                    {"groups", s.groups},
                                    {"patients", s.patients},
                                    {"titration_patients", s.titration_patients},
                                    {"observations", s.observations},
                                    {"events", s.events},
                                    {"distinct_terms", s.distinct_terms},
                                    {"mapped_terms", s.mapped_terms},
                                    {"mapped_fraction", s.mapped_fraction}};
                std::cout << j.dump(2) << '\n';
            } else {
                std::cout << "trials             " << s.trials << "\n"
                          << "groups             " << s.groups << "\n"
                          << "patients           " << s.patients << "\n"
                          << "titration patients " << s.titration_patients << "\n"
                          << "observations       " << s.observations << "\n"
                          << "events             " << s.events << "\n"
                          << "distinct terms     " << s.distinct_terms << "\n"
                          << "mapped to MedDRA   " << text::format_fixed(100 * s.mapped_fraction, 1) << "%\n";
            }
        } else if (*query_cmd) {
            auto loaded = load_dataset(dataset);
            const auto& ds = loaded.dataset;
            auto p = parse_query_string(params);
            if (query_cmd->count("--set"))
                p.emplace_back("set", set);
            if (include_titration)
                p.emplace_back("include_titration", "1");
            auto req = parse_search_params(p, ds.taxonomy());
            if (explain) {
                auto rs = execute(ds, req.spec, {req.include_titration});
                std::cout << explain_csv(compute_profiles(ds, rs, req.kind, req.spec.groups.size()));
            } else {
                std::cout << search(ds, req).dump(2) << '\n';
            }
        } else if (*render_cmd) {
            auto prof = profile_from_json(nlohmann::json::parse(text::read_file(profile)));
            GlyphStyles custom;
            const GlyphStyles* st = &GlyphStyles::defaults();
            if (!styles.empty()) {
                custom = GlyphStyles::load(text::read_file(styles));
                st = &custom;
            }
            double ref = reference > 0 ? reference : shared_reference_rate({&prof});
            text::write_file(out, render_flower_svg({prof, ref, canvas, caption}, *st));
        } else if (*serve_cmd) {
            auto colon = bind.rfind(':');
            auto port = colon == std::string::npos ? std::nullopt : text::parse_int(bind.substr(colon + 1));
            if (!port || *port <= 0 || *port > 65535)
                throw Error("--bind must be HOST:PORT, got '" + bind + "'");
            auto loaded = load_dataset(dataset);
            print_warnings(loaded.warnings);
            Service service(std::make_shared<const Dataset>(std::move(loaded.dataset)), assets);
            std::cerr << "listening on " << bind << '\n';
            serve_http(service, bind.substr(0, colon), static_cast<int>(*port));
        }
    } catch (const ParamError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
