#include "support.hpp"

#include "ademiner/text.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numeric>
#include <tuple>

using namespace ade;

namespace testkit {

std::string fixture_path(const std::string& rel) { return std::string(ADE_FIXTURE_DIR) + "/" + rel; }
std::string data_path(const std::string& rel) { return std::string(ADE_DATA_DIR) + "/" + rel; }

IngestInputs fixture_inputs() {
    auto tax = load_taxonomy(text::read_file(fixture_path("taxonomy.txt")));
    IngestInputs in;
    in.records = load_registry_dir(fixture_path("xml"));
    in.curation = load_curation_csv(text::read_file(fixture_path("curation.csv")), tax);
    in.dictionary = TermDictionary::load(text::read_file(fixture_path("terms.txt")));
    in.socs = SocCategoryTable::load(text::read_file(data_path("soc_categories.txt")));
    in.taxonomy = std::move(tax);
    return in;
}

const Dataset& fixture_dataset() {
    static const Dataset ds = ingest(fixture_inputs()).dataset;
    return ds;
}

int uniform(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
bool chance(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

namespace {

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& v) {
    return v[static_cast<std::size_t>(uniform(rng, 0, static_cast<int>(v.size()) - 1))];
}

TaxonomyNode node(std::string id, NodeKind kind, std::vector<std::string> parents = {}) {
    TaxonomyNode n;
    n.labels = {{"en", id + " en"}, {"fr", id + " fr"}};
    n.id = std::move(id);
    n.kind = kind;
    n.parents = std::move(parents);
    return n;
}

std::vector<std::string> ids_of(const std::vector<TaxonomyNode>& nodes) {
    std::vector<std::string> out;
    for (const auto& n : nodes)
        out.push_back(n.id);
    std::sort(out.begin(), out.end());
    return out;
}

Range random_range(Rng& rng, int lo, int hi) {
    int a = uniform(rng, lo, hi);
    int b = uniform(rng, lo, hi);
    return {double(std::min(a, b)), double(std::max(a, b))};
}

} // namespace

std::vector<TaxonomyNode> random_dag(Rng& rng, int n, NodeKind kind, const std::string& prefix, double edge_p) {
    std::vector<TaxonomyNode> nodes;
    for (int i = 0; i < n; ++i) {
        std::vector<std::string> parents;
        for (int j = 0; j < i; ++j)
            if (chance(rng, edge_p))
                parents.push_back(prefix + std::to_string(j));
        nodes.push_back(node(prefix + std::to_string(i), kind, parents));
    }
    std::shuffle(nodes.begin(), nodes.end(), rng);
    return nodes;
}

Dataset random_dataset(Rng& rng, int max_trials) {
    std::vector<TaxonomyNode> nodes;
    auto aps = random_dag(rng, uniform(rng, 3, 9), NodeKind::active_principle, "ap", 0.25);
    auto inds = random_dag(rng, uniform(rng, 2, 6), NodeKind::indication, "ind", 0.3);
    auto tts = random_dag(rng, uniform(rng, 1, 4), NodeKind::trial_type, "tt", 0.3);
    const auto ap_ids = ids_of(aps);
    const auto ind_ids = ids_of(inds);
    const auto tt_ids = ids_of(tts);
    nodes.insert(nodes.end(), aps.begin(), aps.end());
    nodes.insert(nodes.end(), inds.begin(), inds.end());
    nodes.insert(nodes.end(), tts.begin(), tts.end());
    nodes.push_back(node("placebo", NodeKind::active_principle));
    nodes.push_back(node("saline", NodeKind::active_principle, {"placebo"}));
    std::vector<std::string> cats;
    for (auto c : ade_category_ids) {
        nodes.push_back(node(std::string(c), NodeKind::ade_category));
        cats.emplace_back(c);
    }
    // A finer category folded onto its profile ancestor.
    nodes.push_back(node("gastric", NodeKind::ade_category, {"digestive"}));
    cats.push_back("gastric");
    auto taxonomy = Taxonomy::build(std::move(nodes));

    std::vector<AdeTerm> terms;
    const int n_terms = uniform(rng, 1, 10);
    for (int i = 0; i < n_terms; ++i) {
        AdeTerm term;
        term.label = "term " + std::to_string(i);
        term.soc = "Investigations";
        term.category_ids.push_back(pick(rng, cats));
        if (chance(rng, 0.3))
            term.category_ids.push_back(pick(rng, cats));
        terms.push_back(term);
    }

    const std::vector<std::string> units = {"mg", "mg/kg"};
    auto random_treatment = [&](bool placebo) {
        DrugTreatment tr;
        tr.active_principle_id = placebo ? (chance(rng, 0.8) ? "placebo" : "saline") : pick(rng, ap_ids);
        tr.release = static_cast<Release>(uniform(rng, 0, 2));
        tr.route = chance(rng, 0.7) ? Route::oral : static_cast<Route>(uniform(rng, 0, 3));
        if (chance(rng, 0.6))
            tr.dose = DoseRange{random_range(rng, 1, 8), pick(rng, units)};
        if (chance(rng, 0.5))
            tr.intakes_per_day = random_range(rng, 1, 4);
        return tr;
    };

    std::vector<ClinicalTrial> trials;
    std::vector<AdeObservation> observations;
    const int n_trials = uniform(rng, 1, max_trials);
    for (int i = 0; i < n_trials; ++i) {
        ClinicalTrial trial;
        trial.id = "T" + std::to_string(i);
        trial.title = "Trial " + std::to_string(i);
        for (const auto& tt : tt_ids)
            if (chance(rng, 0.4))
                trial.trial_type_ids.push_back(tt);
        std::vector<PeriodKind> kinds = {PeriodKind::single};
        if (chance(rng, 0.2))
            kinds = {PeriodKind::titration, PeriodKind::maintenance};
        int gid = 0;
        for (std::size_t p = 0; p < kinds.size(); ++p) {
            Period period{kinds[p], {}};
            const int n_groups = uniform(rng, 1, 4);
            for (int g = 0; g < n_groups; ++g) {
                PatientGroup group;
                group.id = "G" + std::to_string(gid++);
                group.label = group.id;
                group.n_patients = uniform(rng, 1, 300);
                group.indication_ids.push_back(pick(rng, ind_ids));
                if (chance(rng, 0.2))
                    group.indication_ids.push_back(pick(rng, ind_ids));
                if (chance(rng, 0.3)) {
                    group.treatments.push_back(random_treatment(true));
                } else {
                    group.treatments.push_back(random_treatment(false));
                    if (chance(rng, 0.3)) {
                        auto extra = random_treatment(false);
                        if (extra.active_principle_id != group.treatments[0].active_principle_id)
                            group.treatments.push_back(extra);
                    }
                }
                for (const auto& term : terms)
                    for (bool serious : {false, true})
                        if (chance(rng, serious ? 0.15 : 0.5))
                            observations.push_back({trial.id, p, group.id, term.label, serious,
                                                    uniform(rng, 1, static_cast<int>(group.n_patients))});
                period.groups.push_back(std::move(group));
            }
            trial.periods.push_back(std::move(period));
        }
        trials.push_back(std::move(trial));
    }
    return assemble_dataset(std::move(taxonomy), std::move(trials), std::move(observations), std::move(terms))
        .dataset;
}

Dataset scaled(const Dataset& ds, long factor) {
    std::vector<ClinicalTrial> trials;
    for (auto trial : ds.trials()) {
        for (auto& p : trial.second.periods)
            for (auto& g : p.groups)
                g.n_patients *= factor;
        trials.push_back(std::move(trial.second));
    }
    auto observations = ds.observations();
    for (auto& o : observations)
        o.event_count *= factor;
    std::vector<AdeTerm> terms;
    for (const auto& [label, term] : ds.terms())
        terms.push_back(term);
    return assemble_dataset(ds.taxonomy(), std::move(trials), std::move(observations), std::move(terms)).dataset;
}

QuerySpec random_query(Rng& rng, const Dataset& ds) {
    const auto& t = ds.taxonomy();
    const auto& aps = t.ids(NodeKind::active_principle);
    const auto& inds = t.ids(NodeKind::indication);
    const auto& tts = t.ids(NodeKind::trial_type);
    QuerySpec qs;
    const int n = uniform(rng, 1, 3);
    for (int i = 0; i < n; ++i) {
        GroupQuery gq;
        const int n_specs = uniform(rng, 0, 2);
        for (int s = 0; s < n_specs; ++s) {
            APSpec spec;
            spec.ap_id = pick(rng, aps);
            if (chance(rng, 0.2))
                spec.release = static_cast<Release>(uniform(rng, 0, 2));
            if (chance(rng, 0.3))
                spec.route = Route::oral;
            if (chance(rng, 0.2))
                spec.dose = DoseRange{random_range(rng, 1, 8), chance(rng, 0.8) ? "mg" : "mg/kg"};
            if (chance(rng, 0.2))
                spec.intakes_per_day = random_range(rng, 1, 4);
            gq.ap_specs.push_back(spec);
        }
        gq.open_list = n_specs > 0 && chance(rng, 0.3);
        if (chance(rng, 0.3) || n_specs == 0)
            gq.indication_ids.insert(pick(rng, inds));
        if (chance(rng, 0.15))
            gq.trial_type_ids.insert(pick(rng, tts));
        qs.groups.push_back(gq);
    }
    if (chance(rng, 0.1) && !ds.trials().empty())
        qs.excluded_trial_ids.insert(ds.trials().begin()->first);
    if (chance(rng, 0.7))
        qs = compute_exclusions(qs, t);
    return qs;
}

std::set<std::string> ancestors_bfs(const Taxonomy& t, const std::string& id) {
    std::set<std::string> seen{id};
    std::deque<std::string> todo{id};
    while (!todo.empty()) {
        auto cur = todo.front();
        todo.pop_front();
        for (const auto& p : t.node(cur).parents)
            if (seen.insert(p).second)
                todo.push_back(p);
    }
    return seen;
}

namespace {

bool under(const Taxonomy& t, const std::string& node, const std::string& ancestor) {
    return ancestors_bfs(t, node).count(ancestor) > 0;
}

bool oracle_treatment(const Taxonomy& t, const DrugTreatment& tr, const APSpec& s) {
    if (!under(t, tr.active_principle_id, s.ap_id))
        return false;
    if (s.release && *s.release != tr.release)
        return false;
    if (s.route && *s.route != tr.route)
        return false;
    if (s.dose && tr.dose) {
        if (s.dose->unit != tr.dose->unit)
            return false;
        if (s.dose->range.max < tr.dose->range.min || tr.dose->range.max < s.dose->range.min)
            return false;
    }
    if (s.intakes_per_day && tr.intakes_per_day) {
        if (s.intakes_per_day->max < tr.intakes_per_day->min || tr.intakes_per_day->max < s.intakes_per_day->min)
            return false;
    }
    return true;
}

bool oracle_group(const Taxonomy& t, const ClinicalTrial& trial, const PatientGroup& g, const GroupQuery& q) {
    for (const auto& tt : q.trial_type_ids)
        if (std::none_of(trial.trial_type_ids.begin(), trial.trial_type_ids.end(),
                         [&](const std::string& x) { return under(t, x, tt); }))
            return false;
    for (const auto& ind : q.indication_ids)
        if (std::none_of(g.indication_ids.begin(), g.indication_ids.end(),
                         [&](const std::string& x) { return under(t, x, ind); }))
            return false;
    for (const auto& tr : g.treatments)
        for (const auto& ex : q.excluded_ap_ids)
            if (under(t, tr.active_principle_id, ex))
                return false;
    if (q.ap_specs.empty())
        return true;
    if (q.ap_specs.size() > g.treatments.size())
        return false;
    if (!q.open_list && q.ap_specs.size() != g.treatments.size())
        return false;
    // Try every ordering of the treatments; spec i takes position i.
    std::vector<std::size_t> order(g.treatments.size());
    std::iota(order.begin(), order.end(), 0);
    do {
        bool all = true;
        for (std::size_t i = 0; i < q.ap_specs.size() && all; ++i)
            all = oracle_treatment(t, g.treatments[order[i]], q.ap_specs[i]);
        if (all)
            return true;
    } while (std::next_permutation(order.begin(), order.end()));
    return false;
}

bool oracle_placebo(const Taxonomy& t, const PatientGroup& g) {
    return !g.treatments.empty() && std::all_of(g.treatments.begin(), g.treatments.end(), [&](const DrugTreatment& tr) {
               return under(t, tr.active_principle_id, "placebo");
           });
}

} // namespace

ResultSets oracle_execute(const Dataset& ds, const QuerySpec& qs, ExecuteOptions opts) {
    const auto& t = ds.taxonomy();
    ResultSets out;
    std::vector<TrialMatch> indirect;
    for (const auto& [id, trial] : ds.trials()) {
        if (qs.excluded_trial_ids.count(id))
            continue;
        for (std::size_t p = 0; p < trial.periods.size(); ++p) {
            const auto& period = trial.periods[p];
            std::vector<MatchedGroup> m;
            std::set<std::size_t> covered;
            for (const auto& g : period.groups)
                for (std::size_t q = 0; q < qs.groups.size(); ++q)
                    if (oracle_group(t, trial, g, qs.groups[q])) {
                        m.push_back({id, p, g.id, q});
                        covered.insert(q);
                    }
            std::sort(m.begin(), m.end());
            const bool titration = period.kind == PeriodKind::titration;
            if (!titration || opts.include_titration)
                out.absolute.insert(out.absolute.end(), m.begin(), m.end());
            if (titration || m.empty())
                continue;
            std::vector<std::string> placebo;
            for (const auto& g : period.groups)
                if (oracle_placebo(t, g))
                    placebo.push_back(g.id);
            if (covered.size() == qs.groups.size())
                out.direct.push_back({id, p, true, m, {}});
            else if (!placebo.empty())
                indirect.push_back({id, p, false, m, placebo});
        }
    }
    std::sort(out.absolute.begin(), out.absolute.end());
    out.direct_indirect = out.direct;
    out.direct_indirect.insert(out.direct_indirect.end(), indirect.begin(), indirect.end());
    return out;
}

namespace {

// (group, term, serious) -> events
using CountIndex = std::map<std::tuple<GroupRef, std::string, bool>, double>;

CountIndex index_counts(const Dataset& ds) {
    CountIndex idx;
    for (const auto& o : ds.observations())
        idx[{GroupRef{o.trial_id, o.period_index, o.group_id}, o.term_label, o.serious}] += double(o.event_count);
    return idx;
}

// Raw count of one term at one seriousness level (nullopt: both levels).
double raw_count(const CountIndex& idx, const GroupRef& ref, const std::string& term, std::optional<bool> serious) {
    double sum = 0;
    for (bool s : {false, true}) {
        if (serious && *serious != s)
            continue;
        if (auto it = idx.find({ref, term, s}); it != idx.end())
            sum += it->second;
    }
    return sum;
}

std::vector<std::size_t> oracle_categories(const Dataset& ds, const std::string& term) {
    std::vector<std::size_t> out;
    for (const auto& c : ds.term(term).category_ids) {
        std::size_t best = 12;
        for (const auto& a : ancestors_bfs(ds.taxonomy(), c))
            for (std::size_t i = 0; i < ade_category_ids.size(); ++i)
                if (ade_category_ids[i] == a)
                    best = std::min(best, i);
        out.push_back(best);
    }
    return out;
}

struct Contribution {
    GroupRef ref;
    std::size_t query = 0;
    double weight = 1;
    bool corrected = false;
};

} // namespace

std::vector<std::optional<OracleProfile>> oracle_profiles(const Dataset& ds, const ResultSets& rs,
                                                          ResultSetKind kind, std::size_t n_queries) {
    const auto idx = index_counts(ds);
    std::vector<Contribution> contribs;
    auto size = [&](const GroupRef& r) { return double(ds.group(r).n_patients); };

    // (trial, group) -> term -> {serious, non-serious} corrected counts
    std::map<GroupRef, std::map<std::string, std::pair<double, double>>> corrected;

    if (kind == ResultSetKind::absolute) {
        std::set<MatchedGroup> uniq(rs.absolute.begin(), rs.absolute.end());
        for (const auto& m : uniq)
            contribs.push_back({m.ref(), m.query_index, 1.0, false});
    } else {
        const auto& entries = kind == ResultSetKind::direct ? rs.direct : rs.direct_indirect;
        std::vector<const TrialMatch*> ind;
        for (const auto& e : entries) {
            if (e.direct) {
                double smallest = 1e300;
                for (const auto& m : e.matches)
                    smallest = std::min(smallest, size(m.ref()));
                for (const auto& m : e.matches)
                    contribs.push_back({m.ref(), m.query_index, smallest / size(m.ref()), false});
            } else {
                ind.push_back(&e);
                for (const auto& m : e.matches)
                    contribs.push_back({m.ref(), m.query_index, 1.0, true});
            }
        }
        if (!ind.empty()) {
            std::set<std::string> all_terms;
            for (const auto& [label, term] : ds.terms())
                all_terms.insert(label);
            for (const auto& term : all_terms) {
                for (bool serious : {true, false}) {
                    double pe = 0, pn = 0;
                    for (const auto* e : ind)
                        for (const auto& pid : e->placebo_group_ids) {
                            GroupRef r{e->trial_id, e->period_index, pid};
                            pe += raw_count(idx, r, term, serious);
                            pn += size(r);
                        }
                    const double global = pe / pn;
                    for (const auto* e : ind) {
                        double te = 0, tn = 0;
                        for (const auto& pid : e->placebo_group_ids) {
                            GroupRef r{e->trial_id, e->period_index, pid};
                            te += raw_count(idx, r, term, serious);
                            tn += size(r);
                        }
                        for (const auto& m : e->matches) {
                            double c = raw_count(idx, m.ref(), term, serious) + (global - te / tn) * size(m.ref());
                            auto& slot = corrected[m.ref()][term];
                            (serious ? slot.first : slot.second) = c;
                        }
                    }
                }
            }
            // Mixing factors.
            std::vector<double> dir(n_queries, 0), indp(n_queries, 0);
            for (const auto& c : contribs)
                (c.corrected ? indp : dir)[c.query] += c.weight * size(c.ref);
            double sd = std::accumulate(dir.begin(), dir.end(), 0.0);
            double si = std::accumulate(indp.begin(), indp.end(), 0.0);
            if (sd > 0 && si > 0) {
                const double r = si / sd;
                for (auto& c : contribs) {
                    const auto q = c.query;
                    if (dir[q] <= 0 || indp[q] <= 0)
                        continue;
                    c.weight *= c.corrected ? std::min(1.0, dir[q] * r / indp[q]) : std::min(1.0, indp[q] / (dir[q] * r));
                }
            }
        }
    }

    std::vector<std::optional<OracleProfile>> out(n_queries);
    for (std::size_t q = 0; q < n_queries; ++q) {
        double eff = 0;
        std::map<std::string, double> num_all, num_serious;
        bool any = false;
        for (const auto& c : contribs) {
            if (c.query != q)
                continue;
            any = true;
            eff += c.weight * size(c.ref);
            for (const auto& [label, term] : ds.terms()) {
                double all, ser;
                if (c.corrected) {
                    auto it = corrected.find(c.ref);
                    std::pair<double, double> v{0, 0};
                    if (it != corrected.end() && it->second.count(label))
                        v = it->second.at(label);
                    ser = v.first;
                    all = v.first + v.second;
                } else {
                    all = raw_count(idx, c.ref, label, std::nullopt);
                    ser = raw_count(idx, c.ref, label, true);
                }
                num_all[label] += c.weight * all;
                num_serious[label] += c.weight * ser;
            }
        }
        if (!any)
            continue;
        OracleProfile p;
        p.effective_patients = eff;
        std::array<double, 13> tot{}, ser{};
        for (const auto& [label, v] : num_all) {
            const double rate = v / eff;
            const double srate = num_serious[label] / eff;
            p.term_rate[label] = rate;
            p.term_serious[label] = srate;
            auto cats = oracle_categories(ds, label);
            for (auto i : cats) {
                tot[i] += rate / double(cats.size());
                ser[i] += srate / double(cats.size());
            }
        }
        for (std::size_t i = 0; i < 13; ++i) {
            p.total[i] = std::max(0.0, tot[i]);
            p.serious[i] = std::min(std::max(0.0, ser[i]), p.total[i]);
        }
        out[q] = p;
    }
    return out;
}

bool close_rel(double a, double b, double rel, double abs_floor) {
    return std::fabs(a - b) <= std::max(abs_floor, rel * std::max(std::fabs(a), std::fabs(b)));
}

long patients_of(const Dataset& ds, const std::vector<MatchedGroup>& groups) {
    std::set<GroupRef> refs;
    for (const auto& m : groups)
        refs.insert(m.ref());
    long n = 0;
    for (const auto& r : refs)
        n += ds.group(r).n_patients;
    return n;
}

std::vector<MatchedGroup> flatten(const std::vector<TrialMatch>& entries) {
    std::vector<MatchedGroup> out;
    for (const auto& e : entries)
        out.insert(out.end(), e.matches.begin(), e.matches.end());
    return out;
}

} // namespace testkit
