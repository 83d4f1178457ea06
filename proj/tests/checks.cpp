#include "checks.hpp"

#include "support.hpp"

#include "ademiner/dataset_io.hpp"
#include "ademiner/error.hpp"
#include "ademiner/glyph.hpp"
#include "ademiner/service.hpp"
#include "ademiner/text.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <numbers>
#include <regex>
#include <sstream>

using namespace ade;
using namespace testkit;
using nlohmann::json;

namespace checks {

void Result::fail(std::string what) {
    ok = false;
    if (failures.size() < 20)
        failures.push_back(std::move(what));
}

namespace {

using Clock = std::chrono::steady_clock;

Result timed(const std::function<void(Result&)>& body) {
    Result r;
    auto start = Clock::now();
    try {
        body(r);
    } catch (const std::exception& e) {
        r.fail(std::string("exception: ") + e.what());
    }
    r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
    return r;
}

std::string num(double v) { return text::format_double(v); }

#define EXPECT(r, cond, what)                                                                                          \
    do {                                                                                                               \
        if (!(cond))                                                                                                   \
            (r).fail(what);                                                                                            \
    } while (0)

} // namespace

// ---------------------------------------------------------------------------
// Golden formula examples

Result per_trial_weights_golden() {
    return timed([](Result& r) {
        auto start = Clock::now();
        auto t1 = per_trial_weights({100, 100});
        auto t2 = per_trial_weights({100, 200});
        double us = std::chrono::duration<double, std::micro>(Clock::now() - start).count();
        std::vector<double> got = {t1[0], t1[1], t2[0], t2[1]};
        std::vector<double> want = {1.0, 1.0, 1.0, 0.5};
        EXPECT(r, got == want, "weights were (" + num(got[0]) + ", " + num(got[1]) + ", " + num(got[2]) + ", " +
                                   num(got[3]) + ")");
        EXPECT(r, us < 1000, "took " + num(us) + " us");
        r.detail = "(" + num(got[0]) + ", " + num(got[1]) + ", " + num(got[2]) + ", " + num(got[3]) + ") in " +
                   text::format_fixed(us, 1) + " us";
    });
}

Result placebo_correction_golden() {
    return timed([](Result& r) {
        // T1: D1 20/100 vs placebo 10/100; T2: D2 30/100 vs placebo 30/100.
        auto pc = placebo_correct({{{10, 100}, {{20, 100}}}, {{30, 100}, {{30, 100}}}});
        EXPECT(r, pc.corrected[0][0] == 30.0, "D1 corrected to " + num(pc.corrected[0][0]));
        EXPECT(r, pc.corrected[1][0] == 20.0, "D2 corrected to " + num(pc.corrected[1][0]));
        EXPECT(r, pc.global_placebo_rate == 0.20, "average placebo rate " + num(pc.global_placebo_rate));
        r.detail = "E_c = " + num(pc.corrected[0][0]) + ", " + num(pc.corrected[1][0]) + "; placebo rate " +
                   text::format_fixed(pc.global_placebo_rate, 2);
    });
}

namespace {

// The mixed-comparison example as a dataset: T1 direct, T2 and T3 indirect
// through placebo arms with equal placebo rates (so correction is a no-op).
Dataset mixing_example_dataset() {
    auto t = load_taxonomy("d1|active_principle|D1||\nd2|active_principle|D2||\nplacebo|active_principle|placebo||\n"
                           "x|indication|x||\nnervous|ade_category|nervous||\n");
    auto group = [](std::string id, std::string ap, long n) {
        return PatientGroup{std::move(id), ap, n, {{ap}}, {"x"}};
    };
    std::vector<ClinicalTrial> trials = {
        {"T1", "", {}, {}, {{PeriodKind::single, {group("A", "d1", 100), group("B", "d2", 100)}}}},
        {"T2", "", {}, {}, {{PeriodKind::single, {group("A", "d1", 100), group("P", "placebo", 100)}}}},
        {"T3", "", {}, {}, {{PeriodKind::single, {group("A", "d2", 200), group("P", "placebo", 100)}}}},
    };
    std::vector<AdeObservation> obs = {{"T1", 0, "A", "E", false, 40}, {"T1", 0, "B", "E", false, 50},
                                       {"T2", 0, "A", "E", false, 10}, {"T2", 0, "P", "E", false, 5},
                                       {"T3", 0, "A", "E", false, 22}, {"T3", 0, "P", "E", false, 5}};
    return assemble_dataset(std::move(t), std::move(trials), std::move(obs), {{"E", {}, "", {"nervous"}}}).dataset;
}

} // namespace

Result mixing_golden() {
    return timed([](Result& r) {
        auto m = mix_weights({{100, 100}, {100, 200}});
        EXPECT(r, m.r == 1.5, "r = " + num(m.r));
        EXPECT(r, std::fabs(m.k[0].k_dir - 2.0 / 3.0) <= 1e-9, "k_dir(D1) = " + num(m.k[0].k_dir));
        EXPECT(r, m.k[0].k_ind == 1.0, "k_ind(D1) = " + num(m.k[0].k_ind));
        EXPECT(r, m.k[1].k_dir == 1.0, "k_dir(D2) = " + num(m.k[1].k_dir));
        EXPECT(r, std::fabs(m.k[1].k_ind - 0.75) <= 1e-9, "k_ind(D2) = " + num(m.k[1].k_ind));
        const std::vector<MixInput> in = {{100, 100}, {100, 200}};
        for (std::size_t i = 0; i < 2; ++i) {
            double ratio = (m.k[i].k_ind * in[i].indirect_patients) / (m.k[i].k_dir * in[i].direct_patients);
            EXPECT(r, std::fabs(ratio - m.r) <= 1e-9, "balance for D" + std::to_string(i + 1) + " = " + num(ratio));
        }

        // Same example end to end through the result-set pipeline.
        auto ds = mixing_example_dataset();
        QuerySpec qs;
        for (auto ap : {"d1", "d2"}) {
            GroupQuery g;
            g.ap_specs.push_back({ap, {}, {}, {}, {}});
            qs.groups.push_back(g);
        }
        auto ps = compute_profiles(ds, execute(ds, qs), ResultSetKind::direct_indirect, 2);
        EXPECT(r, ps.mixing && ps.mixing->r == 1.5, "pipeline r differs");
        double d1 = ps.profiles[0] ? ps.profiles[0]->terms.at("E").rate : -1;
        double d2 = ps.profiles[1] ? ps.profiles[1]->terms.at("E").rate : -1;
        // (40*2/3 + 10) / (100*2/3 + 100) and (50 + 22*0.75) / (100 + 200*0.75)
        EXPECT(r, std::fabs(d1 - 0.22) <= 1e-9, "pipeline D1 rate " + num(d1));
        EXPECT(r, std::fabs(d2 - 0.266) <= 1e-9, "pipeline D2 rate " + num(d2));
        r.detail = "r = " + num(m.r) + ", k_dir(D1) = " + text::format_fixed(m.k[0].k_dir, 4) +
                   ", k_ind(D2) = " + num(m.k[1].k_ind) + "; pipeline rates " + text::format_fixed(d1, 3) + " vs " +
                   text::format_fixed(d2, 3);
    });
}

// ---------------------------------------------------------------------------
// Property suites over random fixtures

Result invariant_suite(int fixtures, unsigned long long seed) {
    return timed([&](Result& r) {
        Rng rng(seed);
        long checked_profiles = 0, mixed_balanced = 0, single_trial_paths = 0;
        for (int iter = 0; iter < fixtures; ++iter) {
            auto ds = random_dataset(rng, 20);
            const auto& t = ds.taxonomy();
            const std::string at = "fixture " + std::to_string(iter) + ": ";

            // taxonomy oracle equivalence
            for (auto kind : all_node_kinds)
                for (const auto& a : t.ids(kind)) {
                    std::vector<std::string> expect;
                    for (const auto& x : t.ids(kind))
                        if (ancestors_bfs(t, x).count(a))
                            expect.push_back(x);
                    EXPECT(r, t.descendants_or_self(a) == expect, at + "descendants of " + a);
                }

            // placebo no-op
            {
                std::vector<PlaceboTrial> pts;
                const double rate = uniform(rng, 0, 40) / 100.0;
                for (int k = uniform(rng, 1, 6); k > 0; --k) {
                    double n = uniform(rng, 1, 300);
                    PlaceboTrial pt{{rate * n, n}, {}};
                    for (int a = uniform(rng, 1, 3); a > 0; --a)
                        pt.arms.push_back({double(uniform(rng, 0, 100)), double(uniform(rng, 1, 300))});
                    pts.push_back(pt);
                }
                auto pc = placebo_correct(pts);
                for (std::size_t i = 0; i < pts.size(); ++i)
                    for (std::size_t a = 0; a < pts[i].arms.size(); ++a)
                        EXPECT(r, std::fabs(pc.corrected[i][a] - pts[i].arms[a].events) <= 1e-12,
                               at + "placebo correction not identity");
            }

            auto qs = random_query(rng, ds);
            auto rs = execute(ds, qs);

            // monotonicity of the three result sets
            long p_dir = patients_of(ds, flatten(rs.direct));
            long p_mix = patients_of(ds, flatten(rs.direct_indirect));
            long p_abs = patients_of(ds, rs.absolute);
            EXPECT(r, p_dir <= p_mix && p_mix <= p_abs,
                   at + "patients " + std::to_string(p_dir) + " / " + std::to_string(p_mix) + " / " +
                       std::to_string(p_abs));

            // exclusion soundness
            for (const auto& m : rs.absolute)
                for (const auto& tr : ds.group(m.ref()).treatments)
                    for (const auto& ex : qs.groups[m.query_index].excluded_ap_ids)
                        EXPECT(r, !t.is_descendant_or_self(tr.active_principle_id, ex),
                               at + "excluded principle " + tr.active_principle_id + " matched");

            const long factor = uniform(rng, 2, 7);
            auto big = scaled(ds, factor);
            auto big_rs = execute(big, qs);

            for (auto kind : {ResultSetKind::direct, ResultSetKind::direct_indirect, ResultSetKind::absolute}) {
                const std::string k = at + std::string(to_string(kind)) + ": ";
                auto ps = compute_profiles(ds, rs, kind, qs.groups.size());

                // effective-size equality within each direct trial
                std::map<std::pair<std::string, std::size_t>, std::vector<double>> eff;
                std::map<std::pair<std::string, std::size_t>, double> smallest;
                for (const auto& w : ps.weights)
                    if (w.source == WeightSource::direct && kind != ResultSetKind::absolute) {
                        const double n = double(ds.group({w.trial_id, w.period_index, w.group_id}).n_patients);
                        eff[{w.trial_id, w.period_index}].push_back(w.w * n);
                        auto [it, fresh] = smallest.try_emplace({w.trial_id, w.period_index}, n);
                        if (!fresh)
                            it->second = std::min(it->second, n);
                    }
                for (const auto& [key, values] : eff)
                    for (double v : values)
                        EXPECT(r, close_rel(v, smallest[key], 1e-12), k + "w*|TD| " + num(v) + " != min size");

                // mixing balance
                if (ps.mixing && ps.mixing->r > 0) {
                    std::vector<double> dir(qs.groups.size()), ind(qs.groups.size());
                    for (const auto& w : ps.weights) {
                        const double n = double(ds.group({w.trial_id, w.period_index, w.group_id}).n_patients);
                        (w.source == WeightSource::direct ? dir : ind)[w.query_index] +=
                            (w.source == WeightSource::direct ? w.w : 1.0) * n;
                    }
                    for (std::size_t q = 0; q < qs.groups.size(); ++q) {
                        const auto& f = ps.mixing->k[q];
                        EXPECT(r, std::max(f.k_dir, f.k_ind) == 1.0, k + "max(k) != 1");
                        if (dir[q] > 0 && ind[q] > 0) {
                            ++mixed_balanced;
                            EXPECT(r, close_rel((f.k_ind * ind[q]) / (f.k_dir * dir[q]), ps.mixing->r),
                                   k + "mixing balance broken");
                        }
                    }
                }

                // category-split conservation
                for (const auto& p : ps.profiles) {
                    if (!p)
                        continue;
                    ++checked_profiles;
                    bool non_negative = true;
                    double term_sum = 0;
                    for (const auto& [label, tr] : p->terms) {
                        non_negative = non_negative && tr.rate >= 0;
                        term_sum += tr.rate;
                        double parts = 0;
                        auto cats = term_categories(ds.term(label), t);
                        for (std::size_t c = 0; c < cats.size(); ++c)
                            parts += tr.rate / double(cats.size());
                        EXPECT(r, close_rel(parts, tr.rate, 1e-12), k + "term split loses mass");
                    }
                    if (non_negative) {
                        double cat_sum = 0;
                        for (double v : p->total_rate)
                            cat_sum += v;
                        EXPECT(r, close_rel(cat_sum, term_sum, 1e-12), k + "category sum " + num(cat_sum) +
                                                                           " != term sum " + num(term_sum));
                    }
                }

                // scale invariance
                auto big_ps = compute_profiles(big, big_rs, kind, qs.groups.size());
                for (std::size_t q = 0; q < ps.profiles.size(); ++q) {
                    const auto& a = ps.profiles[q];
                    const auto& b = big_ps.profiles[q];
                    EXPECT(r, a.has_value() == b.has_value(), k + "scaling changed emptiness");
                    if (!a || !b)
                        continue;
                    for (std::size_t c = 0; c < 13; ++c) {
                        EXPECT(r, close_rel(a->total_rate[c], b->total_rate[c]),
                               k + "scale x" + std::to_string(factor) + " changed " +
                                   std::string(ade_category_ids[c]) + ": " + num(a->total_rate[c]) + " vs " +
                                   num(b->total_rate[c]));
                        EXPECT(r, close_rel(a->serious_rate[c], b->serious_rate[c]), k + "scale changed serious");
                    }
                }

                // pure-direct single-trial path
                if (kind == ResultSetKind::direct && rs.direct.size() == 1) {
                    const auto& e = rs.direct.front();
                    std::map<std::size_t, std::vector<std::string>> by_q;
                    for (const auto& m : e.matches)
                        by_q[m.query_index].push_back(m.group_id);
                    bool one_each = std::all_of(by_q.begin(), by_q.end(), [](auto& kv) { return kv.second.size() == 1; });
                    if (one_each) {
                        ++single_trial_paths;
                        for (const auto& [q, gids] : by_q) {
                            GroupRef ref{e.trial_id, e.period_index, gids[0]};
                            const double n = double(ds.group(ref).n_patients);
                            for (const auto& [term, c] : group_counts(ds, ref))
                                EXPECT(r, close_rel(ps.profiles[q]->terms.at(term).rate, c.all / n),
                                       k + "single-trial rate differs from raw events / patients");
                        }
                    }
                }
            }
        }
        r.detail = std::to_string(fixtures) + " fixtures, " + std::to_string(checked_profiles) + " profiles, " +
                   std::to_string(mixed_balanced) + " mixed groups balanced, " + std::to_string(single_trial_paths) +
                   " single-trial paths";
    });
}

Result aggregation_oracle(int fixtures, unsigned long long seed) {
    return timed([&](Result& r) {
        Rng rng(seed);
        long compared = 0;
        double worst = 0;
        auto cmp = [&](double a, double b, const std::string& what) {
            const double scale = std::max(std::fabs(a), std::fabs(b));
            if (scale > 0)
                worst = std::max(worst, std::fabs(a - b) / scale);
            EXPECT(r, close_rel(a, b), what + ": engine " + num(a) + " vs oracle " + num(b));
        };
        for (int iter = 0; iter < fixtures; ++iter) {
            auto ds = random_dataset(rng, 20);
            auto qs = random_query(rng, ds);
            auto rs = execute(ds, qs);
            for (auto kind : {ResultSetKind::direct, ResultSetKind::direct_indirect, ResultSetKind::absolute}) {
                const std::string at = "fixture " + std::to_string(iter) + " " + std::string(to_string(kind));
                auto ps = compute_profiles(ds, rs, kind, qs.groups.size());
                auto oracle = oracle_profiles(ds, rs, kind, qs.groups.size());
                for (std::size_t q = 0; q < qs.groups.size(); ++q) {
                    const auto& e = ps.profiles[q];
                    const auto& o = oracle[q];
                    EXPECT(r, e.has_value() == o.has_value(), at + ": presence differs");
                    if (!e || !o)
                        continue;
                    ++compared;
                    cmp(e->effective_patients, o->effective_patients, at + " effective patients");
                    for (std::size_t c = 0; c < 13; ++c) {
                        cmp(e->total_rate[c], o->total[c], at + " " + std::string(ade_category_ids[c]));
                        cmp(e->serious_rate[c], o->serious[c], at + " serious " + std::string(ade_category_ids[c]));
                    }
                    for (const auto& [label, rate] : o->term_rate) {
                        auto it = e->terms.find(label);
                        cmp(it == e->terms.end() ? 0.0 : it->second.rate, rate, at + " term " + label);
                        cmp(it == e->terms.end() ? 0.0 : it->second.serious_rate, o->term_serious.at(label),
                            at + " serious term " + label);
                    }
                }
            }
        }
        std::ostringstream os;
        os << compared << " profiles on " << fixtures << " fixtures, worst relative error " << worst;
        r.detail = os.str();
    });
}

// ---------------------------------------------------------------------------
// Glyph geometry

namespace {

struct Element {
    std::string tag;
    std::map<std::string, std::string> attrs;
};

std::vector<Element> svg_elements(const std::string& svg) {
    static const std::regex el(R"(<(path|circle)\s([^>]*)/>)");
    static const std::regex attr(R"(([a-z-]+)="([^"]*)\")");
    std::vector<Element> out;
    for (auto it = std::sregex_iterator(svg.begin(), svg.end(), el); it != std::sregex_iterator(); ++it) {
        Element e{(*it)[1], {}};
        const std::string body = (*it)[2];
        for (auto a = std::sregex_iterator(body.begin(), body.end(), attr); a != std::sregex_iterator(); ++a)
            e.attrs[(*a)[1]] = (*a)[2];
        out.push_back(std::move(e));
    }
    return out;
}

// Polyline approximation: 256 segments per quadratic curve.
std::vector<Point> flatten_path(const std::vector<PathCommand>& cmds) {
    std::vector<Point> pts;
    Point cur{};
    for (const auto& c : cmds) {
        if (c.op == 'M' || c.op == 'L') {
            cur = c.points.at(0);
            pts.push_back(cur);
        } else if (c.op == 'Q') {
            const Point p0 = cur, c1 = c.points.at(0), e = c.points.at(1);
            for (int i = 1; i <= 256; ++i) {
                const double t = i / 256.0, u = 1 - t;
                pts.push_back({u * u * p0.x + 2 * u * t * c1.x + t * t * e.x, u * u * p0.y + 2 * u * t * c1.y + t * t * e.y});
            }
            cur = e;
        }
    }
    return pts;
}

double shoelace(const std::vector<Point>& p) {
    double a = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const auto& u = p[i];
        const auto& v = p[(i + 1) % p.size()];
        a += u.x * v.y - v.x * u.y;
    }
    return std::fabs(a) / 2;
}

double segment_distance(Point p, Point a, Point b) {
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = dx * dx + dy * dy;
    double t = len2 > 0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0;
    t = std::clamp(t, 0.0, 1.0);
    return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

bool inside_or_on(const std::vector<Point>& poly, Point p, double tol) {
    bool in = false;
    for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
        if (segment_distance(p, poly[j], poly[i]) <= tol)
            return true;
        if ((poly[i].y > p.y) != (poly[j].y > p.y) &&
            p.x < (poly[j].x - poly[i].x) * (p.y - poly[i].y) / (poly[j].y - poly[i].y) + poly[i].x)
            in = !in;
    }
    return in;
}

AdeProfile random_profile(Rng& rng) {
    AdeProfile p;
    for (std::size_t c = 0; c < 13; ++c) {
        if (chance(rng, 0.15))
            continue; // zero-rate category
        p.total_rate[c] = uniform(rng, 1, 100000) / 100000.0 * 2.5;
        if (chance(rng, 0.6))
            p.serious_rate[c] = p.total_rate[c] * uniform(rng, 1, 1000) / 1000.0;
    }
    return p;
}

} // namespace

Result glyph_geometry(int profiles, unsigned long long seed) {
    return timed([&](Result& r) {
        Rng rng(seed);
        const auto& styles = GlyphStyles::defaults();
        const auto reloaded = GlyphStyles::load(write_styles(styles));
        double worst_area = 0, worst_serious = 0, worst_angle = 0;
        long petals = 0;
        for (int i = 0; i < profiles; ++i) {
            const std::string at = "profile " + std::to_string(i) + ": ";
            auto prof = random_profile(rng);
            const double ref = shared_reference_rate({&prof});
            const int canvas = chance(rng, 0.5) ? 260 : canvas_px_for(static_cast<std::size_t>(uniform(rng, 1, 12)));
            GlyphSpec spec{prof, ref, canvas, "glyph " + std::to_string(i)};
            const auto svg = render_flower_svg(spec, styles);
            EXPECT(r, svg == render_flower_svg(spec, styles), at + "repeated render differs");
            EXPECT(r, svg == render_flower_svg(spec, reloaded), at + "render with reloaded styles differs");

            const double L = petal_length_px(canvas);
            auto unit = parse_path(canonical_petal_path);
            for (auto& c : unit)
                for (auto& p : c.points)
                    p = {p.x * L, p.y * L};
            const double ref_area = shoelace(flatten_path(unit));
            const double cx = canvas / 2.0, cy = canvas / 2.0;

            std::map<std::string, std::vector<Point>> petal_poly;
            std::map<std::string, double> petal_area, serious_area;
            std::vector<std::pair<double, double>> rate_area;
            double center_r = 0;
            for (const auto& e : svg_elements(svg)) {
                const auto cls = e.attrs.count("class") ? e.attrs.at("class") : "";
                const auto cat = e.attrs.count("data-category") ? e.attrs.at("data-category") : "";
                const auto ci = category_index(cat);
                if (!ci) {
                    r.fail(at + "element without a known category");
                    continue;
                }
                const double rate = prof.total_rate[*ci];
                if (e.tag == "path") {
                    auto cmds = parse_path(e.attrs.at("d"));
                    auto poly = flatten_path(cmds);
                    const double area = shoelace(poly);
                    if (cls == "petal") {
                        ++petals;
                        const double ratio = area / ref_area;
                        const double want = rate / ref;
                        worst_area = std::max(worst_area, std::fabs(ratio - want) / want);
                        EXPECT(r, std::fabs(ratio - want) <= 0.01 * want,
                               at + cat + " area ratio " + num(ratio) + " vs rate ratio " + num(want));
                        petal_poly[cat] = poly;
                        petal_area[cat] = area;
                        rate_area.emplace_back(rate, area);
                        // orientation: apex is the end point of the first curve
                        const auto apex = cmds.at(1).points.at(1);
                        double angle = std::atan2(apex.x - cx, -(apex.y - cy)) * 180 / std::numbers::pi;
                        if (angle < -1e-6)
                            angle += 360;
                        const int k = *styles.categories()[*ci].petal_index;
                        double err = std::fabs(angle - 30.0 * k);
                        err = std::min(err, 360 - err);
                        worst_angle = std::max(worst_angle, err);
                        EXPECT(r, err < 0.05, at + cat + " axis at " + num(angle) + " deg, petal " + std::to_string(k));
                    } else if (cls == "serious") {
                        serious_area[cat] = area;
                        auto it = petal_poly.find(cat);
                        if (it == petal_poly.end()) {
                            r.fail(at + "serious shape before its petal");
                            continue;
                        }
                        for (const auto& p : poly)
                            if (!inside_or_on(it->second, p, 2e-3)) {
                                r.fail(at + cat + " serious shape leaves its petal");
                                break;
                            }
                    } else if (cls == "petal empty") {
                        EXPECT(r, rate == 0, at + cat + " drawn empty with a positive rate");
                    }
                } else if (cls == "serious") {
                    const double scale = std::stod(e.attrs.at("r")) / center_r;
                    const double want = std::sqrt(prof.serious_rate[*ci] / rate);
                    worst_serious = std::max(worst_serious, std::fabs(scale - want));
                    EXPECT(r, std::fabs(scale - want) <= 1e-3, at + "serious center scale " + num(scale));
                } else if (cls == "center") {
                    const double rr = std::stod(e.attrs.at("r"));
                    center_r = rr;
                    const double rmax = max_center_radius(styles, canvas);
                    const double ratio = (rr * rr) / (rmax * rmax);
                    EXPECT(r, std::fabs(ratio - rate / ref) <= 0.01 * rate / ref, at + "center area ratio " + num(ratio));
                    EXPECT(r, std::fabs(std::numbers::pi * rmax * rmax - ref_area) <= 0.01 * ref_area,
                           at + "full center and full petal areas differ");
                }
            }
            for (const auto& [cat, sa] : serious_area) {
                const auto c = *category_index(cat);
                const double scale = std::sqrt(sa / petal_area.at(cat));
                const double want = std::sqrt(prof.serious_rate[c] / prof.total_rate[c]);
                worst_serious = std::max(worst_serious, std::fabs(scale - want));
                EXPECT(r, std::fabs(scale - want) <= 1e-3, at + cat + " serious scale " + num(scale) + " vs " + num(want));
            }
            std::sort(rate_area.begin(), rate_area.end());
            for (std::size_t k = 1; k < rate_area.size(); ++k)
                if (rate_area[k].first > rate_area[k - 1].first)
                    EXPECT(r, rate_area[k].second > rate_area[k - 1].second, at + "petal size not monotone in rate");
        }
        std::ostringstream os;
        os << profiles << " profiles, " << petals << " petals; worst area error " << worst_area * 100
           << "%, worst serious scale error " << worst_serious << ", worst axis error " << worst_angle << " deg";
        r.detail = os.str();
    });
}

// ---------------------------------------------------------------------------
// Ingestion

const std::vector<RegimenCase>& regimen_table() {
    using R = Route;
    using L = Release;
    auto d = [](double lo, double hi, std::string unit = "mg") { return DoseRange{{lo, hi}, std::move(unit)}; };
    static const std::vector<RegimenCase> cases = {
        {"5-10 mg", "", d(5, 10), {}, {}, {}},
        {"bid", "", {}, Range{2, 2}, {}, {}},
        {"1-2 times per day", "", {}, Range{1, 2}, {}, {}},
        {"Tapentadol IR 50 mg orally every 4-6 hours", "tapentadol", d(50, 50), Range{4, 6}, R::oral, L::immediate},
        {"Oxycodone 10 mg q6h", "oxycodone", d(10, 10), Range{4, 4}, {}, {}},
        {"Pregabalin 150 mg twice daily", "pregabalin", d(150, 150), Range{2, 2}, {}, {}},
        {"gabapentin 300 to 600 mg tid", "gabapentin", d(300, 600), Range{3, 3}, {}, {}},
        {"Morphine sulfate 15 mg every 4 hours", "morphine", d(15, 15), Range{6, 6}, {}, {}},
        {"ibuprofen 400 mg qid", "ibuprofen", d(400, 400), Range{4, 4}, {}, {}},
        {"acetaminophen 1 g every 6 hours", "acetaminophen", d(1, 1, "g"), Range{4, 4}, {}, {}},
        {"Elagolix 150 mg once daily", "elagolix", d(150, 150), Range{1, 1}, {}, {}},
        {"Matching placebo tablets", "placebo", {}, {}, R::oral, {}},
        {"Tramadol ER 100 mg qd", "tramadol", d(100, 100), Range{1, 1}, {}, L::modified},
        {"fentanyl patch 25 mcg/h", "", d(25, 25, "µg/h"), {}, R::transdermal, {}},
        {"10 mg/kg IV infusion", "", d(10, 10, "mg/kg"), {}, R::intravenous, {}},
        {"three times a day", "", {}, Range{3, 3}, {}, {}},
        {"2 times daily", "", {}, Range{2, 2}, {}, {}},
        {"duloxetine 60 mg once a day", "duloxetine", d(60, 60), Range{1, 1}, {}, {}},
        {"tapentadol extended-release 100-250 mg b.i.d.", "tapentadol", d(100, 250), Range{2, 2}, {}, L::modified},
        {"morphine 5 mg subcutaneously", "morphine", d(5, 5), {}, R::subcutaneous, {}},
        {"lidocaine 5% topical", "", d(5, 5, "%"), {}, R::topical, {}},
        {"ketorolac 30 mg IM", "", d(30, 30), {}, R::intramuscular, {}},
        {"sustained release oxycodone 20 mg every 12 hours", "oxycodone", d(20, 20), Range{2, 2}, {}, L::modified},
        {"controlled-release morphine 30 mg q12h", "morphine", d(30, 30), Range{2, 2}, {}, L::modified},
        {"one to two times per day", "", {}, Range{1, 2}, {}, {}},
        {"paracétamol 500mg", "acetaminophen", d(500, 500), {}, {}, {}},
        {"prégabaline 75 mg deux fois par jour", "pregabalin", d(75, 75), {}, {}, {}},
        {"0.5 mg/kg/day", "", d(0.5, 0.5, "mg/kg/day"), {}, {}, {}},
        {"no dosing information", "", {}, {}, {}, {}},
        {"morphine 10-20 mg every 4 to 6 hours by mouth", "morphine", d(10, 20), Range{4, 6}, R::oral, {}},
    };
    return cases;
}

Result ingestion() {
    return timed([](Result& r) {
        auto manifest = json::parse(text::read_file(fixture_path("manifest.json")));
        auto result = ingest(fixture_inputs());
        const auto& ds = result.dataset;
        auto s = dataset_summary(ds);
        auto same = [&](const char* key, long long got) {
            EXPECT(r, got == manifest[key].get<long long>(),
                   std::string(key) + " " + std::to_string(got) + " != " + manifest[key].dump());
        };
        same("trials", static_cast<long long>(s.trials));
        same("groups", static_cast<long long>(s.groups));
        same("patients", s.patients);
        same("titration_patients", s.titration_patients);
        same("observations", static_cast<long long>(s.observations));
        same("events", s.events);
        same("distinct_terms", static_cast<long long>(s.distinct_terms));
        same("mapped_terms", static_cast<long long>(s.mapped_terms));
        for (const auto& [id, expect] : manifest["per_trial"].items()) {
            const auto* trial = ds.find_trial(id);
            if (!trial) {
                r.fail("missing trial " + id);
                continue;
            }
            std::size_t groups = 0, obs = 0;
            long events = 0;
            for (const auto& p : trial->periods)
                groups += p.groups.size();
            for (const auto& o : ds.observations())
                if (o.trial_id == id) {
                    ++obs;
                    events += o.event_count;
                }
            EXPECT(r, groups == expect["groups"].get<std::size_t>(), id + " groups");
            EXPECT(r, obs == expect["observations"].get<std::size_t>(), id + " observations");
            EXPECT(r, events == expect["events"].get<long>(), id + " events");
        }
        // exported and re-imported dataset is identical
        EXPECT(r, import_dataset(export_dataset(ds)).dataset == ds, "dataset export round trip differs");

        int passed = 0;
        const auto& t = ds.taxonomy();
        for (const auto& c : regimen_table()) {
            auto x = extract_regimen(c.text, t);
            bool ok = x.dose == c.dose && x.intakes_per_day == c.intakes;
            ok = ok && (c.ap.empty() ? x.active_principle_candidates.empty()
                                     : !x.active_principle_candidates.empty() &&
                                           x.active_principle_candidates[0].id == c.ap);
            ok = ok && (!c.route || x.route == c.route) && (!c.release || x.release == c.release);
            if (ok)
                ++passed;
            else
                r.fail("regimen case '" + c.text + "'");
        }
        r.detail = std::to_string(s.trials) + " trials, " + std::to_string(s.groups) + " groups, " +
                   std::to_string(s.patients) + " patients, " + std::to_string(s.observations) +
                   " observations; regimen table " + std::to_string(passed) + "/" +
                   std::to_string(regimen_table().size());
    });
}

// ---------------------------------------------------------------------------
// URL scheme

namespace {

GroupQuery gq(std::vector<std::string> aps, std::optional<Route> route = {}, std::set<std::string> inds = {},
              std::set<std::string> excluded = {}) {
    GroupQuery g;
    for (auto& a : aps)
        g.ap_specs.push_back({a, {}, route, {}, {}});
    g.indication_ids = std::move(inds);
    g.excluded_ap_ids = std::move(excluded);
    return g;
}

} // namespace

Result url_scheme() {
    return timed([](Result& r) {
        const auto& t = fixture_dataset().taxonomy();
        const std::string base = "http://localhost:8080/pain";
        const std::set<std::string> pnp = {"peripheral_neuropathic_pain"};
        struct Case {
            std::string url;
            QuerySpec spec;
            int tab;
        };
        const std::vector<Case> cases = {
            {base + "?group_1_ap=acetaminophen&group_1_route=oral&group_2_ap=ibuprofen&group_2_route=oral",
             {{gq({"acetaminophen"}, Route::oral), gq({"ibuprofen"}, Route::oral)}, {}}, 0},
            {base + "?group_1_ap=elagolix&group_2_ap=placebo", {{gq({"elagolix"}), gq({"placebo"})}, {}}, 0},
            {base + "?group_1_indication=acute%20pain&group_1_ap=tapentadol&group_1_route=oral&group_2_indication="
                    "acute%20pain&group_2_ap=opioid&group_2_route=oral",
             {{gq({"tapentadol"}, Route::oral, {"acute_pain"}),
               gq({"opioid"}, Route::oral, {"acute_pain"}, {"tapentadol"})},
              {}},
             0},
            {base + "/?group_1_ap=tramadol&group_1_route=oral&group_2_ap=opioid&group_2_route=oral",
             {{gq({"tramadol"}, Route::oral), gq({"opioid"}, Route::oral, {}, {"tramadol"})}, {}}, 0},
            {base + "?group_1_indication=peripheral%20neuropathic%20pain", {{gq({}, {}, pnp)}, {}}, 0},
            {base + "?group_1_indication=peripheral%20neuropathic%20pain,&group_1_ap=pregabalin&group_2_indication="
                    "peripheral%20neuropathic%20pain,&group_2_ap=duloxetine&group_3_indication=peripheral%20neuropathic"
                    "%20pain,&group_3_ap=tapentadol&group_4_indication=peripheral%20neuropathic%20pain,&group_4_ap="
                    "gabapentin",
             {{gq({"pregabalin"}, {}, pnp), gq({"duloxetine"}, {}, pnp), gq({"tapentadol"}, {}, pnp),
               gq({"gabapentin"}, {}, pnp)},
              {}},
             0},
            {base + "?group_1_indication=peripheral%20neuropathic%20pain&group_1_ap=pregabalin&group_2_indication="
                    "peripheral%20neuropathic%20pain&group_2_ap=gabapentin&tab=1",
             {{gq({"pregabalin"}, {}, pnp), gq({"gabapentin"}, {}, pnp)}, {}}, 1},
        };
        int passed = 0;
        for (std::size_t i = 0; i < cases.size(); ++i) {
            const auto& c = cases[i];
            try {
                auto req = parse_search_params(c.url, t);
                bool ok = req.spec == c.spec && req.tab == c.tab && req.kind == ResultSetKind::direct;
                // serialized form parses back to the same request
                ok = ok && parse_search_params(serialize_search_params(req), t) == req;
                if (ok)
                    ++passed;
                else
                    r.fail("URL " + std::to_string(i + 1) + " parsed to " + serialize_search_params(req));
            } catch (const std::exception& e) {
                r.fail("URL " + std::to_string(i + 1) + ": " + e.what());
            }
        }
        // "morphine, etc" opens the list; an unknown label names its parameter
        try {
            auto req = parse_search_params("group_1_ap=morphine,%20etc", t);
            EXPECT(r, req.spec.groups.size() == 1 && req.spec.groups[0].open_list, "'morphine, etc' not open");
        } catch (const std::exception& e) {
            r.fail(std::string("'morphine, etc': ") + e.what());
        }
        try {
            parse_search_params("group_1_ap=notadrug", t);
            r.fail("unknown label accepted");
        } catch (const ParamError& e) {
            EXPECT(r, e.param() == "group_1_ap", "error names " + e.param());
        }
        r.detail = std::to_string(passed) + "/" + std::to_string(cases.size()) +
                   " use-case URLs parsed and round-tripped, other-opioid exclusion applied";
    });
}

// ---------------------------------------------------------------------------
// Service contract

Result service_contract() {
    return timed([](Result& r) {
        auto assets = std::filesystem::temp_directory_path() / "ademiner_contract_assets";
        std::filesystem::create_directories(assets);
        text::write_file((assets / "index.html").string(), "<!doctype html><title>ADE</title>");
        Service svc(std::make_shared<const Dataset>(fixture_dataset()), assets.string());
        auto get = [&](const std::string& path, const std::string& query = "") {
            return svc.handle("GET", path, parse_query_string(query));
        };
        int checks = 0;
        auto expect_status = [&](const HttpResponse& res, int status, const std::string& what) {
            ++checks;
            EXPECT(r, res.status == status, what + ": status " + std::to_string(res.status));
        };

        auto health = get("/healthz");
        expect_status(health, 200, "healthz");
        EXPECT(r, health.body == "ok", "healthz body");

        // search with principles: ComparableTreatments present, TreatmentSummary absent
        auto s = get("/api/search", "group_1_indication=acute%20pain&group_1_ap=tapentadol&group_1_route=oral&"
                                    "group_2_indication=acute%20pain&group_2_ap=opioid&group_2_route=oral");
        expect_status(s, 200, "search");
        auto j = json::parse(s.body);
        const auto& tabs = j["tabs"];
        for (auto key : {"all_events", "serious_events", "indication_summary", "comparable_treatments", "trial_list"})
            EXPECT(r, tabs.contains(key), std::string("missing tab ") + key);
        EXPECT(r, !tabs.contains("treatment_summary"), "treatment_summary present with principles queried");
        EXPECT(r, j["groups"].size() == 2, "two groups expected");
        const auto digestive = *category_index("digestive");
        double tap = j["groups"][0]["profile"]["categories"][digestive]["total_rate"].get<double>();
        double opi = j["groups"][1]["profile"]["categories"][digestive]["total_rate"].get<double>();
        EXPECT(r, tap < opi, "digestive rate tapentadol " + num(tap) + " not below opioid " + num(opi));
        EXPECT(r, j["groups"][0]["glyph_svg"].get<std::string>().rfind("<svg", 0) == 0, "glyph is not SVG");
        EXPECT(r, !j["groups"][0]["correction_summary"].get<std::string>().empty(), "no correction summary");

        // indication only: TreatmentSummary present, ComparableTreatments absent
        auto ind = json::parse(get("/api/search", "group_1_indication=peripheral%20neuropathic%20pain").body);
        EXPECT(r, ind["tabs"].contains("treatment_summary") && !ind["tabs"].contains("comparable_treatments"),
               "tab presence rule for indication-only search");

        // all-events rows sorted by category then rate descending
        {
            int last_cat = -1;
            double last_rate = 1e300;
            for (const auto& row : tabs["all_events"]) {
                int c = static_cast<int>(*category_index(row["category"]["id"].get<std::string>()));
                double m = 0;
                for (const auto& v : row["values"])
                    if (!v.is_null())
                        m = std::max(m, v["rate"].get<double>());
                if (c != last_cat) {
                    EXPECT(r, c > last_cat, "all_events not sorted by category");
                    last_cat = c;
                    last_rate = 1e300;
                }
                EXPECT(r, m <= last_rate + 1e-15, "all_events not sorted by rate within a category");
                last_rate = m;
            }
        }

        // language toggle changes no number
        auto fr = json::parse(get("/api/search", "group_1_indication=acute%20pain&group_1_ap=tapentadol&group_1_route="
                                                 "oral&group_2_indication=acute%20pain&group_2_ap=opioid&group_2_route="
                                                 "oral&lang=fr")
                                  .body);
        std::function<void(const json&, std::vector<std::string>&)> numbers = [&](const json& v,
                                                                                   std::vector<std::string>& out) {
            if (v.is_number())
                out.push_back(v.dump());
            else if (v.is_array() || v.is_object())
                for (const auto& x : v)
                    numbers(x, out);
        };
        std::vector<std::string> n_en, n_fr;
        numbers(j, n_en);
        numbers(fr, n_fr);
        EXPECT(r, !n_en.empty() && n_en == n_fr, "numbers differ between en and fr");

        // excluding every matching trial yields an empty-result response
        auto empty = get("/api/search", "group_1_ap=elagolix&exclude_trials=NCT00000003");
        expect_status(empty, 200, "fully excluded search");
        auto ej = json::parse(empty.body);
        EXPECT(r, ej["empty"].get<bool>() && ej["groups"][0]["empty"].get<bool>(), "empty marker missing");

        // 400 paths
        auto none = get("/api/search");
        expect_status(none, 400, "search without groups");
        auto bad = get("/api/search", "group_1_ap=notadrug");
        expect_status(bad, 400, "unknown label");
        EXPECT(r, json::parse(bad.body).value("param", "") == "group_1_ap", "400 does not name group_1_ap");
        expect_status(get("/api/search", "group_1_ap=morphine&group_1_dose=10-5&group_1_unit=mg"), 400,
                      "malformed dose range");
        expect_status(get("/api/search", "group_1_ap=morphine&set=sideways"), 400, "bad set");

        // autocomplete and taxonomy
        auto ac = get("/api/autocomplete", "kind=active_principle&q=tap");
        expect_status(ac, 200, "autocomplete");
        auto acj = json::parse(ac.body);
        EXPECT(r, acj.is_array() && !acj.empty() && acj[0]["id"] == "tapentadol", "autocomplete result");
        expect_status(get("/api/autocomplete", "q=tap"), 400, "autocomplete without kind");
        auto tax = get("/api/taxonomy", "kind=indication");
        expect_status(tax, 200, "taxonomy");
        EXPECT(r, json::parse(tax.body)["nodes"].size() == fixture_dataset().taxonomy().ids(NodeKind::indication).size(),
               "taxonomy node count");

        // trial detail and 404 paths
        auto tr = get("/api/trials/NCT00000001");
        expect_status(tr, 200, "trial detail");
        auto tj = json::parse(tr.body);
        EXPECT(r, tj["n_groups"] == 2 && tj["n_events"] == 8,
               "NCT00000001 detail: " + tj["n_groups"].dump() + " groups, " + tj["n_events"].dump() + " events");
        expect_status(get("/api/trials/NCT99999999"), 404, "unknown trial");
        expect_status(get("/api/nothing"), 404, "unknown endpoint");
        expect_status(svc.handle("DELETE", "/api/search", {}), 405, "method");

        // static assets
        auto idx = get("/");
        expect_status(idx, 200, "index");
        EXPECT(r, idx.content_type.find("text/html") == 0, "index content type " + idx.content_type);
        expect_status(get("/../secret"), 404, "path traversal");
        expect_status(get("/missing.js"), 404, "missing asset");

        // determinism
        EXPECT(r, get("/api/search", "group_1_ap=elagolix&group_2_ap=placebo&set=mixed").body ==
                      get("/api/search", "group_1_ap=elagolix&group_2_ap=placebo&set=mixed").body,
               "search not deterministic");
        std::filesystem::remove_all(assets);
        r.detail = std::to_string(checks) + " endpoint checks; digestive " + text::format_fixed(100 * tap, 1) +
                   "% (tapentadol) vs " + text::format_fixed(100 * opi, 1) + "% (other opioids)";
    });
}

} // namespace checks
