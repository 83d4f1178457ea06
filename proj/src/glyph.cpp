#include "ademiner/error.hpp"
#include "ademiner/glyph.hpp"
#include "ademiner/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <set>

namespace ade {

namespace {

constexpr std::string_view default_styles = R"(# category_id|petal_index_or_center|fill_hex|serious_hex
petal_path|M 0,0 Q 0.42,-0.7 0,-1 Q -0.42,-0.7 0,0 Z
nervous|0|#9E9E9E|
psychological|1|#B39DDB|
eye_ear|2|#81D4FA|
respiratory|3|#80CBC4|
cardiovascular|4|#E53935|
digestive|5|#FFB74D|
urinary|6|#FDD835|
genital_reproductive|7|#43A047|
endocrine_metabolic_nutritional|8|#A1887F|
blood_immune|9|#F06292|
skin_subcutaneous|10|#FFAB91|
musculoskeletal|11|#7986CB|
unclassified|center|#FFFFFF|
)";

constexpr double serious_darkening = 0.45;
constexpr const char* outline_color = "#555555";
constexpr const char* hairline_color = "#999999";

double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }

bool is_hex_color(std::string_view s) {
    return s.size() == 7 && s[0] == '#' &&
           std::all_of(s.begin() + 1, s.end(), [](char c) { return std::isxdigit(static_cast<unsigned char>(c)); });
}

std::string upper(std::string_view s) {
    std::string out(s);
    for (auto& c : out)
        c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
}

std::string fmt(double v) { return text::format_fixed(v, 3); }

std::string xml_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        default: out.push_back(c);
        }
    }
    return out;
}

struct Frame {
    double cx;
    double cy;
    double length;
};

// Petal k scaled by s: rotated k*30 degrees clockwise around the glyph center.
std::string petal_d(const std::vector<PathCommand>& petal, const Frame& f, int k, double s) {
    const double a = k * std::numbers::pi / 6;
    const double c = std::cos(a);
    const double sn = std::sin(a);
    std::string d;
    for (const auto& cmd : petal) {
        if (!d.empty())
            d += ' ';
        d += cmd.op;
        for (const auto& p : cmd.points) {
            double x = f.cx + f.length * s * (p.x * c - p.y * sn);
            double y = f.cy + f.length * s * (p.x * sn + p.y * c);
            d += ' ' + fmt(x) + ',' + fmt(y);
        }
    }
    return d;
}

Frame frame_of(int canvas_px) {
    return {canvas_px / 2.0, canvas_px / 2.0, petal_length_px(canvas_px)};
}

void check_spec(const GlyphSpec& spec) {
    if (spec.canvas_px <= 0)
        throw ValidationError("canvas size must be positive");
    if (!(spec.reference_rate > 0) || !std::isfinite(spec.reference_rate))
        throw ValidationError("reference rate must be positive");
    for (double r : spec.profile.total_rate)
        if (r > spec.reference_rate)
            throw ValidationError("reference rate " + text::format_double(spec.reference_rate) +
                                  " is below category rate " + text::format_double(r));
}

std::string open_svg(const GlyphSpec& spec) {
    auto n = std::to_string(spec.canvas_px);
    std::string out = "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + n + "\" height=\"" + n +
                      "\" viewBox=\"0 0 " + n + " " + n + "\">\n";
    out += "<title>" + xml_escape(spec.caption) + "</title>\n";
    return out;
}

// Style of petal index k (0..11).
const CategoryStyle& petal_style(const GlyphStyles& styles, int k, std::size_t& category) {
    const auto& cats = styles.categories();
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (cats[i].petal_index == k) {
            category = i;
            return cats[i];
        }
    throw ValidationError("no category at petal " + std::to_string(k));
}

std::size_t center_category(const GlyphStyles& styles) {
    const auto& cats = styles.categories();
    for (std::size_t i = 0; i < cats.size(); ++i)
        if (!cats[i].petal_index)
            return i;
    throw ValidationError("no center category");
}

std::string body(const GlyphSpec& spec, const GlyphStyles& styles) {
    const auto f = frame_of(spec.canvas_px);
    const auto& p = spec.profile;
    std::string out = "<g class=\"glyph\">\n";
    for (int k = 0; k < 12; ++k) {
        std::size_t c = 0;
        const auto& st = petal_style(styles, k, c);
        const auto id = std::string(ade_category_ids[c]);
        const double rate = p.total_rate[c];
        if (rate <= 0) {
            out += "<path class=\"petal empty\" data-category=\"" + id + "\" data-rate=\"0\" d=\"" +
                   petal_d(styles.petal(), f, k, 1.0) + "\" fill=\"none\" stroke=\"" + hairline_color +
                   "\" stroke-width=\"0.25\"/>\n";
            continue;
        }
        const double s = std::sqrt(rate / spec.reference_rate);
        out += "<path class=\"petal\" data-category=\"" + id + "\" data-rate=\"" + text::format_double(rate) +
               "\" data-serious-rate=\"" + text::format_double(p.serious_rate[c]) + "\" d=\"" +
               petal_d(styles.petal(), f, k, s) + "\" fill=\"" + st.fill + "\" stroke=\"" + outline_color +
               "\" stroke-width=\"0.5\"/>\n";
        if (p.serious_rate[c] > 0)
            out += "<path class=\"serious\" data-category=\"" + id + "\" d=\"" +
                   petal_d(styles.petal(), f, k, s * std::sqrt(p.serious_rate[c] / rate)) + "\" fill=\"" +
                   st.serious_fill + "\"/>\n";
    }
    const auto c = center_category(styles);
    const auto& st = styles.categories()[c];
    const auto id = std::string(ade_category_ids[c]);
    const double r_max = max_center_radius(styles, spec.canvas_px);
    const double rate = p.total_rate[c];
    const std::string at = "cx=\"" + fmt(f.cx) + "\" cy=\"" + fmt(f.cy) + "\"";
    if (rate <= 0) {
        out += "<circle class=\"center empty\" data-category=\"" + id + "\" data-rate=\"0\" " + at + " r=\"" +
               fmt(r_max) + "\" fill=\"none\" stroke=\"" + hairline_color + "\" stroke-width=\"0.25\"/>\n";
    } else {
        const double r = r_max * std::sqrt(rate / spec.reference_rate);
        out += "<circle class=\"center\" data-category=\"" + id + "\" data-rate=\"" + text::format_double(rate) +
               "\" data-serious-rate=\"" + text::format_double(p.serious_rate[c]) + "\" " + at + " r=\"" + fmt(r) +
               "\" fill=\"" + st.fill + "\" stroke=\"" + outline_color + "\" stroke-width=\"0.5\"/>\n";
        if (p.serious_rate[c] > 0)
            out += "<circle class=\"serious\" data-category=\"" + id + "\" " + at + " r=\"" +
                   fmt(r * std::sqrt(p.serious_rate[c] / rate)) + "\" fill=\"" + st.serious_fill + "\"/>\n";
    }
    out += "</g>\n";
    return out;
}

std::string wireframe(const GlyphSpec& spec, const GlyphStyles& styles) {
    const auto f = frame_of(spec.canvas_px);
    const auto& p = spec.profile;
    std::string out = "<g class=\"overlay\">\n";
    for (int k = 0; k < 12; ++k) {
        std::size_t c = 0;
        petal_style(styles, k, c);
        const double rate = p.total_rate[c];
        const bool empty = rate <= 0;
        const double s = empty ? 1.0 : std::sqrt(rate / spec.reference_rate);
        out += std::string("<path class=\"wire") + (empty ? " empty" : "") + "\" data-category=\"" +
               std::string(ade_category_ids[c]) + "\" d=\"" + petal_d(styles.petal(), f, k, s) +
               "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"" + (empty ? "0.25" : "1") + "\"/>\n";
    }
    const auto c = center_category(styles);
    const double rate = p.total_rate[c];
    const bool empty = rate <= 0;
    const double r_max = max_center_radius(styles, spec.canvas_px);
    out += std::string("<circle class=\"wire") + (empty ? " empty" : "") + "\" data-category=\"" +
           std::string(ade_category_ids[c]) + "\" cx=\"" + fmt(f.cx) + "\" cy=\"" + fmt(f.cy) + "\" r=\"" +
           fmt(empty ? r_max : r_max * std::sqrt(rate / spec.reference_rate)) +
           "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"" + (empty ? "0.25" : "1") + "\"/>\n";
    out += "</g>\n";
    return out;
}

} // namespace

std::vector<PathCommand> parse_path(std::string_view d) {
    std::vector<PathCommand> out;
    std::vector<double> numbers;
    auto flush = [&]() {
        if (out.empty()) {
            if (!numbers.empty())
                throw ParseError("path data must start with a command");
            return;
        }
        auto& cmd = out.back();
        std::size_t want = cmd.op == 'Q' ? 4 : (cmd.op == 'Z' ? 0 : 2);
        if (numbers.size() != want)
            throw ParseError(std::string("path command ") + cmd.op + " expects " + std::to_string(want) +
                             " numbers, got " + std::to_string(numbers.size()));
        for (std::size_t i = 0; i < numbers.size(); i += 2)
            cmd.points.push_back({numbers[i], numbers[i + 1]});
        numbers.clear();
    };
    std::size_t i = 0;
    while (i < d.size()) {
        char c = d[i];
        if (std::isspace(static_cast<unsigned char>(c)) || c == ',') {
            ++i;
        } else if (std::isalpha(static_cast<unsigned char>(c))) {
            flush();
            char op = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
            if (op != 'M' && op != 'L' && op != 'Q' && op != 'Z')
                throw ParseError(std::string("unsupported path command '") + c + "'");
            if (c != op && op != 'Z')
                throw ParseError("relative path commands are not supported");
            out.push_back({op, {}});
            ++i;
        } else {
            std::size_t j = i;
            while (j < d.size() && (std::isdigit(static_cast<unsigned char>(d[j])) || d[j] == '.' || d[j] == '-' ||
                                    d[j] == '+' || d[j] == 'e' || d[j] == 'E'))
                ++j;
            auto v = text::parse_double(d.substr(i, j - i));
            if (j == i || !v)
                throw ParseError("bad number in path data near '" + std::string(d.substr(i, 12)) + "'");
            numbers.push_back(*v);
            i = j;
        }
    }
    flush();
    if (out.empty() || out.front().op != 'M')
        throw ParseError("path data must start with M");
    return out;
}

double path_area(const std::vector<PathCommand>& path) {
    double twice = 0;
    Point start{};
    Point cur{};
    for (const auto& cmd : path) {
        switch (cmd.op) {
        case 'M':
            twice += cross(cur, start); // close the previous subpath
            start = cur = cmd.points[0];
            break;
        case 'L':
            twice += cross(cur, cmd.points[0]);
            cur = cmd.points[0];
            break;
        case 'Q': {
            Point c = cmd.points[0];
            Point e = cmd.points[1];
            Point u{c.x - cur.x, c.y - cur.y};
            Point v{e.x - cur.x, e.y - cur.y};
            twice += cross(cur, e) + 2.0 / 3.0 * cross(u, v);
            cur = e;
            break;
        }
        case 'Z':
            twice += cross(cur, start);
            cur = start;
            break;
        }
    }
    twice += cross(cur, start);
    return twice / 2;
}

std::string darken(std::string_view hex, double amount) {
    if (!is_hex_color(hex))
        throw ValidationError("not a #RRGGBB color: '" + std::string(hex) + "'");
    std::string out = "#";
    for (int i = 0; i < 3; ++i) {
        int v = std::stoi(std::string(hex.substr(1 + 2 * i, 2)), nullptr, 16);
        char buf[3];
        std::snprintf(buf, sizeof buf, "%02X", static_cast<int>(std::lround(v * (1 - amount))));
        out += buf;
    }
    return out;
}

GlyphStyles GlyphStyles::load(std::string_view document) {
    GlyphStyles s;
    std::array<bool, 13> seen{};
    std::set<int> petals;
    int centers = 0;
    std::string path(canonical_petal_path);
    text::for_each_line(document, [&](std::size_t line_no, std::string_view line) {
        auto body = text::trim(line);
        if (body.empty() || body.front() == '#')
            return;
        auto f = text::split(body, '|');
        if (f.size() == 2 && text::trim(f[0]) == "petal_path") {
            path = std::string(text::trim(f[1]));
            return;
        }
        if (f.size() != 4)
            throw ParseError("expected 'category_id|petal_index_or_center|fill_hex|serious_hex'", line_no);
        auto id = std::string(text::trim(f[0]));
        auto idx = category_index(id);
        if (!idx)
            throw ParseError("unknown category '" + id + "'", line_no);
        if (seen[*idx])
            throw ParseError("duplicate category '" + id + "'", line_no);
        seen[*idx] = true;
        CategoryStyle st;
        st.category_id = id;
        auto pos = text::trim(f[1]);
        if (pos == "center") {
            ++centers;
        } else {
            auto k = text::parse_int(pos);
            if (!k || *k < 0 || *k > 11)
                throw ParseError("petal index must be 0-11 or 'center', got '" + std::string(pos) + "'", line_no);
            if (!petals.insert(static_cast<int>(*k)).second)
                throw ParseError("petal index " + std::string(pos) + " used twice", line_no);
            st.petal_index = static_cast<int>(*k);
        }
        auto fill = text::trim(f[2]);
        if (!is_hex_color(fill))
            throw ParseError("fill must be #RRGGBB, got '" + std::string(fill) + "'", line_no);
        st.fill = upper(fill);
        auto serious = text::trim(f[3]);
        if (serious.empty())
            st.serious_fill = darken(st.fill, serious_darkening);
        else if (is_hex_color(serious))
            st.serious_fill = upper(serious);
        else
            throw ParseError("serious fill must be #RRGGBB, got '" + std::string(serious) + "'", line_no);
        s.styles_[*idx] = std::move(st);
    });
    for (std::size_t i = 0; i < seen.size(); ++i)
        if (!seen[i])
            throw ParseError("missing style for category '" + std::string(ade_category_ids[i]) + "'");
    if (centers != 1 || petals.size() != 12)
        throw ParseError("styles need 12 petals and exactly one center");
    s.petal_ = parse_path(path);
    s.petal_area_ = std::abs(path_area(s.petal_));
    if (!(s.petal_area_ > 0))
        throw ParseError("petal path encloses no area");
    return s;
}

const GlyphStyles& GlyphStyles::defaults() {
    static const GlyphStyles s = load(default_styles);
    return s;
}

std::string write_styles(const GlyphStyles& s) {
    std::string out = "# category_id|petal_index_or_center|fill_hex|serious_hex\npetal_path|";
    for (std::size_t i = 0; i < s.petal().size(); ++i) {
        const auto& cmd = s.petal()[i];
        if (i)
            out += ' ';
        out += cmd.op;
        for (const auto& p : cmd.points)
            out += ' ' + text::format_double(p.x) + ',' + text::format_double(p.y);
    }
    out += '\n';
    for (const auto& st : s.categories())
        out += st.category_id + '|' + (st.petal_index ? std::to_string(*st.petal_index) : "center") + '|' + st.fill +
               '|' + st.serious_fill + '\n';
    return out;
}

double petal_length_px(int canvas_px) { return canvas_px * 0.46; }

double max_center_radius(const GlyphStyles& styles, int canvas_px) {
    const double l = petal_length_px(canvas_px);
    return l * std::sqrt(styles.petal_area() / std::numbers::pi);
}

std::string render_flower_svg(const GlyphSpec& spec, const GlyphStyles& styles) {
    check_spec(spec);
    return open_svg(spec) + body(spec, styles) + "</svg>\n";
}

std::string render_overlay_svg(const GlyphSpec& selected, const GlyphSpec& target, const GlyphStyles& styles) {
    check_spec(selected);
    check_spec(target);
    if (selected.reference_rate != target.reference_rate)
        throw ValidationError("overlay glyphs must share a reference rate");
    if (selected.canvas_px != target.canvas_px)
        throw ValidationError("overlay glyphs must share a canvas size");
    return open_svg(target) + body(target, styles) + wireframe(selected, styles) + "</svg>\n";
}

double shared_reference_rate(const std::vector<const AdeProfile*>& profiles) {
    double ref = 0;
    for (const auto* p : profiles)
        for (double r : p->total_rate)
            ref = std::max(ref, r);
    return ref > 0 ? ref : 1.0;
}

int canvas_px_for(std::size_t n_glyphs) {
    const auto side = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(std::max<std::size_t>(n_glyphs, 1)))));
    return std::max(140, 520 / side);
}

std::string table_color(double rate) {
    if (rate < 0 || std::isnan(rate))
        throw ValidationError("rate must be non-negative");
    constexpr double lo = 0.0005;
    constexpr double hi = 0.05;
    double t = 0;
    if (rate >= hi)
        t = 1;
    else if (rate > lo)
        t = (std::log10(rate) - std::log10(lo)) / (std::log10(hi) - std::log10(lo));
    const auto gb = static_cast<int>(std::lround(255 * (1 - t)));
    char buf[8];
    std::snprintf(buf, sizeof buf, "#FF%02X%02X", gb, gb);
    return buf;
}

} // namespace ade
