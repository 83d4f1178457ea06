#include "ademiner/error.hpp"
#include "ademiner/ingest.hpp"
#include "ademiner/text.hpp"

#include <algorithm>

namespace ade {

const std::array<std::string_view, 27> meddra_socs = {
    "Blood and lymphatic system disorders",
    "Cardiac disorders",
    "Congenital, familial and genetic disorders",
    "Ear and labyrinth disorders",
    "Endocrine disorders",
    "Eye disorders",
    "Gastrointestinal disorders",
    "General disorders and administration site conditions",
    "Hepatobiliary disorders",
    "Immune system disorders",
    "Infections and infestations",
    "Injury, poisoning and procedural complications",
    "Investigations",
    "Metabolism and nutrition disorders",
    "Musculoskeletal and connective tissue disorders",
    "Neoplasms benign, malignant and unspecified (incl cysts and polyps)",
    "Nervous system disorders",
    "Pregnancy, puerperium and perinatal conditions",
    "Psychiatric disorders",
    "Renal and urinary disorders",
    "Reproductive system and breast disorders",
    "Respiratory, thoracic and mediastinal disorders",
    "Skin and subcutaneous tissue disorders",
    "Social circumstances",
    "Surgical and medical procedures",
    "Vascular disorders",
    "Product issues",
};

bool is_meddra_soc(std::string_view soc) {
    auto n = text::normalize_label(soc);
    return std::any_of(meddra_socs.begin(), meddra_socs.end(),
                       [&](std::string_view s) { return text::normalize_label(s) == n; });
}

namespace {

// Built-in SOC -> category table; "Investigations" defaults to unclassified.
constexpr std::string_view default_soc_table = R"(# soc_name|category_id[;category_id]
Blood and lymphatic system disorders|blood_immune
Cardiac disorders|cardiovascular
Congenital, familial and genetic disorders|unclassified
Ear and labyrinth disorders|eye_ear
Endocrine disorders|endocrine_metabolic_nutritional
Eye disorders|eye_ear
Gastrointestinal disorders|digestive
General disorders and administration site conditions|unclassified
Hepatobiliary disorders|digestive
Immune system disorders|blood_immune
Infections and infestations|unclassified
Injury, poisoning and procedural complications|unclassified
Investigations|unclassified
Metabolism and nutrition disorders|endocrine_metabolic_nutritional
Musculoskeletal and connective tissue disorders|musculoskeletal
Neoplasms benign, malignant and unspecified (incl cysts and polyps)|unclassified
Nervous system disorders|nervous
Pregnancy, puerperium and perinatal conditions|genital_reproductive
Psychiatric disorders|psychological
Renal and urinary disorders|urinary
Reproductive system and breast disorders|genital_reproductive
Respiratory, thoracic and mediastinal disorders|respiratory
Skin and subcutaneous tissue disorders|skin_subcutaneous
Social circumstances|unclassified
Surgical and medical procedures|unclassified
Vascular disorders|cardiovascular
Product issues|unclassified
)";

std::vector<std::string> parse_categories(std::string_view cell, std::size_t line) {
    std::vector<std::string> cats;
    for (auto& c : text::split(cell, ';'))
        if (auto t = text::trim(c); !t.empty())
            cats.emplace_back(t);
    std::sort(cats.begin(), cats.end());
    cats.erase(std::unique(cats.begin(), cats.end()), cats.end());
    if (cats.empty() || cats.size() > 2)
        throw ParseError("expected 1 or 2 categories, got " + std::to_string(cats.size()), line);
    return cats;
}

} // namespace

TermDictionary TermDictionary::load(std::string_view document) {
    TermDictionary d;
    text::for_each_line(document, [&](std::size_t line_no, std::string_view line) {
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#')
            return;
        auto f = text::split(body, '|');
        if (f.size() != 4)
            throw ParseError("expected 4 '|'-separated fields", line_no);
        AdeTerm t;
        t.label = std::string(text::trim(f[0]));
        if (t.label.empty())
            throw ParseError("empty term label", line_no);
        if (auto code = text::trim(f[1]); !code.empty())
            t.meddra_code = std::string(code);
        t.soc = std::string(text::trim(f[2]));
        if (!t.soc.empty() && !is_meddra_soc(t.soc))
            throw ParseError("unknown SOC '" + t.soc + "'", line_no);
        t.category_ids = parse_categories(f[3], line_no);
        auto key = text::normalize_label(t.label);
        if (!d.terms_.emplace(key, std::move(t)).second)
            throw ParseError("duplicate term '" + std::string(text::trim(f[0])) + "'", line_no);
    });
    return d;
}

const AdeTerm* TermDictionary::lookup(std::string_view label) const {
    auto it = terms_.find(text::normalize_label(label));
    return it == terms_.end() ? nullptr : &it->second;
}

SocCategoryTable SocCategoryTable::load(std::string_view document) {
    SocCategoryTable t;
    text::for_each_line(document, [&](std::size_t line_no, std::string_view line) {
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#')
            return;
        auto bar = body.rfind('|');
        if (bar == std::string_view::npos)
            throw ParseError("expected 'soc_name|category_id[;category_id]'", line_no);
        auto soc = text::trim(body.substr(0, bar));
        if (!is_meddra_soc(soc))
            throw ParseError("unknown SOC '" + std::string(soc) + "'", line_no);
        if (!t.table_.emplace(text::normalize_label(soc), parse_categories(body.substr(bar + 1), line_no)).second)
            throw ParseError("duplicate SOC '" + std::string(soc) + "'", line_no);
    });
    return t;
}

const SocCategoryTable& SocCategoryTable::defaults() {
    static const SocCategoryTable table = load(default_soc_table);
    return table;
}

const std::vector<std::string>* SocCategoryTable::categories(std::string_view soc) const {
    auto it = table_.find(text::normalize_label(soc));
    return it == table_.end() ? nullptr : &it->second;
}

AdeTerm map_ade_term(std::string_view label, std::string_view soc, const TermDictionary& dictionary,
                     const SocCategoryTable& socs) {
    if (const auto* hit = dictionary.lookup(label))
        return *hit;
    auto trimmed_soc = text::trim(soc);
    if (trimmed_soc.empty())
        throw ValidationError("term '" + std::string(label) + "' is not in the dictionary and has no SOC");
    if (!is_meddra_soc(trimmed_soc))
        throw ValidationError("unknown SOC '" + std::string(trimmed_soc) + "' for unmapped term '" +
                              std::string(label) + "'");
    const auto* cats = socs.categories(trimmed_soc);
    if (!cats)
        throw ValidationError("no category mapping for SOC '" + std::string(trimmed_soc) + "'");
    AdeTerm t;
    t.label = std::string(text::trim(label));
    t.soc = std::string(trimmed_soc);
    t.category_ids = *cats;
    return t;
}

} // namespace ade
