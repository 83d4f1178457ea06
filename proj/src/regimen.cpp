#include "ademiner/ingest.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <cctype>
#include <regex>

namespace ade {

namespace {

bool is_word_char(char c) {
    // Bytes >= 0x80 belong to UTF-8 letters (é, µ...).
    return std::isalnum(static_cast<unsigned char>(c)) || static_cast<unsigned char>(c) >= 0x80;
}

bool at_word_start(std::string_view s, std::size_t i) { return i == 0 || !is_word_char(s[i - 1]); }

bool at_word_end(std::string_view s, std::size_t i) { return i >= s.size() || !is_word_char(s[i]); }

const char* const number = R"((\d+(?:\.\d+)?))";

// Longest spelling first so "mg/kg" wins over "mg".
const std::vector<std::pair<std::string, std::string>>& unit_table() {
    static const std::vector<std::pair<std::string, std::string>> units = {
        {"mg/kg/day", "mg/kg/day"}, {"mg/kg", "mg/kg"}, {"mcg/kg", "µg/kg"}, {"µg/kg", "µg/kg"},
        {"mg/day", "mg/day"},       {"mg/ml", "mg/mL"}, {"mcg/h", "µg/h"},   {"µg/h", "µg/h"},
        {"ug/h", "µg/h"},           {"mcg", "µg"},      {"µg", "µg"},        {"ug", "µg"},
        {"mg", "mg"},               {"ml", "mL"},       {"iu", "IU"},        {"g", "g"},
        {"%", "%"}};
    return units;
}

std::string regex_escape(const std::string& s) {
    static const std::string special = R"(\^$.|?*+()[]{}/)";
    std::string out;
    for (char c : s) {
        if (special.find(c) != std::string::npos)
            out.push_back('\\');
        out.push_back(c);
    }
    return out;
}

const std::regex& dose_regex() {
    static const std::regex re = [] {
        std::string units;
        for (const auto& [spelling, canon] : unit_table()) {
            if (!units.empty())
                units += '|';
            units += regex_escape(spelling);
        }
        std::string pat = std::string(R"((?:^|[^a-z0-9.]))") + number + R"(\s*(?:(?:-|–|to)\s*)" + number +
                          R"(\s*)?()" + units + R"()(?![a-z]))";
        return std::regex(pat, std::regex::ECMAScript | std::regex::optimize);
    }();
    return re;
}

std::optional<double> word_number(const std::string& w) {
    static const std::vector<std::string> words = {"one", "two", "three", "four", "five", "six"};
    auto it = std::find(words.begin(), words.end(), w);
    if (it != words.end())
        return double(it - words.begin() + 1);
    return text::parse_double(w);
}

// Leftmost match of `re` in `s`.
std::optional<std::smatch> first_match(const std::string& s, const std::regex& re) {
    std::smatch m;
    if (std::regex_search(s, m, re))
        return m;
    return std::nullopt;
}

struct IntakeRule {
    std::regex re;
    // Fixed intake count, or 0 to read numbers from the capture groups.
    double fixed;
    bool per_hours;
};

const std::vector<IntakeRule>& intake_rules() {
    static const std::string n = R"((\d+|one|two|three|four|five|six))";
    static const std::string per_day = R"(\s*times?\s*(?:(?:per|a|/)\s*day|daily))";
    static const std::vector<IntakeRule> rules = [] {
        std::vector<IntakeRule> r;
        auto add = [&](const std::string& pat, double fixed, bool per_hours = false) {
            r.push_back({std::regex(R"((?:^|[^a-z0-9]))" + pat + R"((?![a-z0-9]))", std::regex::ECMAScript),
                         fixed, per_hours});
        };
        add(n + R"(\s*(?:-|–|to)\s*)" + n + per_day, 0);
        add(n + per_day, 0);
        add(R"(b\.?i\.?d\.?)", 2);
        add(R"(t\.?i\.?d\.?)", 3);
        add(R"(q\.?i\.?d\.?)", 4);
        add(R"(q\.?d\.?|once\s+(?:daily|a\s+day|per\s+day))", 1);
        add(R"(twice\s+(?:daily|a\s+day|per\s+day))", 2);
        add(R"(every\s+(\d+)\s*(?:-|–|to)\s*(\d+)\s*h(?:ours?|rs?)?)", 0, true);
        add(R"(every\s+(\d+)\s*h(?:ours?|rs?)?|q(\d+)h)", 0, true);
        return r;
    }();
    return rules;
}

template <typename Enum>
std::optional<std::pair<Enum, std::size_t>> first_keyword(const std::string& lower,
                                                          const std::vector<std::pair<std::string, Enum>>& table) {
    std::optional<std::pair<Enum, std::size_t>> best;
    std::size_t best_len = 0;
    for (const auto& [phrase, value] : table) {
        for (auto pos = lower.find(phrase); pos != std::string::npos; pos = lower.find(phrase, pos + 1)) {
            if (!at_word_start(lower, pos) || !at_word_end(lower, pos + phrase.size()))
                continue;
            if (!best || pos < best->second || (pos == best->second && phrase.size() > best_len)) {
                best = std::pair{value, pos};
                best_len = phrase.size();
            }
            break;
        }
    }
    return best;
}

const std::vector<std::pair<std::string, Route>>& route_table() {
    static const std::vector<std::pair<std::string, Route>> t = {
        {"oral", Route::oral},
        {"orally", Route::oral},
        {"po", Route::oral},
        {"p.o", Route::oral},
        {"by mouth", Route::oral},
        {"tablet", Route::oral},
        {"tablets", Route::oral},
        {"capsule", Route::oral},
        {"capsules", Route::oral},
        {"intravenous", Route::intravenous},
        {"intravenously", Route::intravenous},
        {"iv", Route::intravenous},
        {"i.v", Route::intravenous},
        {"infusion", Route::intravenous},
        {"subcutaneous", Route::subcutaneous},
        {"subcutaneously", Route::subcutaneous},
        {"sc", Route::subcutaneous},
        {"s.c", Route::subcutaneous},
        {"transdermal", Route::transdermal},
        {"patch", Route::transdermal},
        {"topical", Route::topical},
        {"topically", Route::topical},
        {"cream", Route::topical},
        {"gel", Route::topical},
        {"intramuscular", Route::intramuscular},
        {"intramuscularly", Route::intramuscular},
        {"im", Route::intramuscular},
        {"i.m", Route::intramuscular},
        {"rectal", Route::rectal},
        {"suppository", Route::rectal},
        {"nasal", Route::nasal},
        {"intranasal", Route::nasal},
    };
    return t;
}

const std::vector<std::pair<std::string, Release>>& release_table() {
    static const std::vector<std::pair<std::string, Release>> t = {
        {"immediate release", Release::immediate}, {"immediate-release", Release::immediate},
        {"ir", Release::immediate},                {"extended release", Release::modified},
        {"extended-release", Release::modified},   {"prolonged release", Release::modified},
        {"prolonged-release", Release::modified},  {"sustained release", Release::modified},
        {"sustained-release", Release::modified},  {"controlled release", Release::modified},
        {"controlled-release", Release::modified}, {"modified release", Release::modified},
        {"modified-release", Release::modified},   {"er", Release::modified},
        {"xr", Release::modified},                 {"sr", Release::modified},
        {"cr", Release::modified},
    };
    return t;
}

} // namespace

std::vector<LabelMatch> detect_labels(std::string_view input, const Taxonomy& t, NodeKind kind) {
    struct Label {
        std::string text;
        std::string id;
    };
    std::vector<Label> labels;
    for (const auto& id : t.ids(kind))
        for (const auto& [lang, label] : t.node(id).labels)
            if (!label.empty())
                labels.push_back({text::to_lower(label), id});

    const auto lower = text::to_lower(input);
    std::vector<LabelMatch> out;
    std::size_t i = 0;
    while (i < lower.size()) {
        if (!at_word_start(lower, i) || !is_word_char(lower[i])) {
            ++i;
            continue;
        }
        const Label* best = nullptr;
        for (const auto& l : labels) {
            if (l.text.size() <= (best ? best->text.size() : 0))
                continue;
            if (lower.compare(i, l.text.size(), l.text) == 0 && at_word_end(lower, i + l.text.size()))
                best = &l;
        }
        if (best) {
            out.push_back({best->id, {i, i + best->text.size()}});
            i += best->text.size();
        } else {
            ++i;
        }
    }
    return out;
}

RegimenExtraction extract_regimen(std::string_view input, const Taxonomy& t) {
    RegimenExtraction out;
    out.active_principle_candidates = detect_labels(input, t, NodeKind::active_principle);

    const std::string lower = text::to_lower(input);
    auto span_of = [](const std::smatch& m, int g) {
        auto b = static_cast<std::size_t>(m.position(g));
        return Span{b, b + static_cast<std::size_t>(m.length(g))};
    };
    auto capture = [&](const std::smatch& m, int g) {
        auto v = text::parse_double(m.str(g));
        if (v)
            out.numbers.push_back({span_of(m, g), *v});
        return v;
    };

    if (auto m = first_match(lower, dose_regex())) {
        auto lo = capture(*m, 1);
        auto hi = (*m)[2].matched ? capture(*m, 2) : lo;
        std::string unit;
        for (const auto& [spelling, canon] : unit_table())
            if (spelling == m->str(3)) {
                unit = canon;
                break;
            }
        if (lo && hi && *lo <= *hi) {
            out.dose = DoseRange{{*lo, *hi}, unit};
            out.dose_span = Span{span_of(*m, 1).begin, span_of(*m, 3).end};
        } else {
            out.numbers.clear();
        }
    }

    // Leftmost intake expression across all rules.
    std::optional<std::pair<const IntakeRule*, std::smatch>> best;
    for (const auto& rule : intake_rules()) {
        std::smatch m;
        if (!std::regex_search(lower, m, rule.re))
            continue;
        if (!best || m.position(0) < best->second.position(0))
            best = std::pair{&rule, m};
    }
    if (best) {
        const auto& [rule, m] = *best;
        std::vector<std::pair<double, int>> values; // (value, group)
        for (int g = 1; g < static_cast<int>(m.size()); ++g)
            if (m[g].matched)
                if (auto v = word_number(m.str(g)))
                    values.emplace_back(*v, g);
        std::optional<Range> range;
        if (rule->fixed > 0) {
            range = Range{rule->fixed, rule->fixed};
        } else if (!values.empty()) {
            double a = values.front().first;
            double b = values.back().first;
            if (rule->per_hours) {
                if (a > 0 && b > 0)
                    range = Range{24.0 / std::max(a, b), 24.0 / std::min(a, b)};
            } else if (a <= b) {
                range = Range{a, b};
            }
        }
        if (range) {
            out.intakes_per_day = range;
            // Span without the leading boundary character.
            auto b = static_cast<std::size_t>(m.position(0));
            auto e = b + static_cast<std::size_t>(m.length(0));
            while (b < e && !is_word_char(lower[b]))
                ++b;
            out.intakes_span = Span{b, e};
            for (const auto& [v, g] : values)
                if (std::isdigit(static_cast<unsigned char>(m.str(g).front())))
                    out.numbers.push_back({span_of(m, g), v});
        }
    }

    if (auto r = first_keyword(lower, route_table()))
        out.route = r->first;
    if (auto r = first_keyword(lower, release_table()))
        out.release = r->first;
    return out;
}

} // namespace ade
