#include "ademiner/error.hpp"
#include "ademiner/normalization.hpp"

#include <algorithm>
#include <set>

namespace ade {

std::optional<std::size_t> category_index(std::string_view id) {
    auto it = std::find(ade_category_ids.begin(), ade_category_ids.end(), id);
    if (it == ade_category_ids.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - ade_category_ids.begin());
}

std::string_view to_string(ResultSetKind k) {
    switch (k) {
    case ResultSetKind::direct: return "direct";
    case ResultSetKind::direct_indirect: return "mixed";
    case ResultSetKind::absolute: return "absolute";
    }
    return "direct";
}

std::optional<ResultSetKind> parse_result_set_kind(std::string_view s) {
    for (auto k : {ResultSetKind::direct, ResultSetKind::direct_indirect, ResultSetKind::absolute})
        if (to_string(k) == s)
            return k;
    return std::nullopt;
}

std::vector<double> per_trial_weights(const std::vector<double>& sizes) {
    if (sizes.empty())
        throw ValidationError("per-trial weights need at least one group");
    for (double s : sizes)
        if (!(s >= 1))
            throw ValidationError("group size must be at least 1");
    const double smallest = *std::min_element(sizes.begin(), sizes.end());
    std::vector<double> w;
    w.reserve(sizes.size());
    for (double s : sizes)
        w.push_back(smallest / s);
    return w;
}

PlaceboCorrection placebo_correct(const std::vector<PlaceboTrial>& trials) {
    PlaceboCorrection out;
    double events = 0;
    double patients = 0;
    for (const auto& t : trials) {
        if (!(t.placebo.patients >= 1))
            throw ValidationError("placebo correction needs a placebo group with at least one patient");
        events += t.placebo.events;
        patients += t.placebo.patients;
    }
    out.global_placebo_rate = patients > 0 ? events / patients : 0;
    for (const auto& t : trials) {
        const double delta = out.global_placebo_rate - t.placebo.events / t.placebo.patients;
        auto& row = out.corrected.emplace_back();
        for (const auto& arm : t.arms)
            row.push_back(arm.events + delta * arm.patients);
    }
    return out;
}

Mixing mix_weights(const std::vector<MixInput>& groups) {
    Mixing m;
    double dir = 0;
    double ind = 0;
    for (const auto& g : groups) {
        dir += g.direct_patients;
        ind += g.indirect_patients;
    }
    m.k.assign(groups.size(), MixFactors{});
    if (dir <= 0 || ind <= 0)
        return m;
    m.r = ind / dir;
    for (std::size_t i = 0; i < groups.size(); ++i) {
        const auto& g = groups[i];
        // One side empty: the populated side keeps k = 1.
        if (g.direct_patients <= 0 || g.indirect_patients <= 0)
            continue;
        m.k[i].k_dir = std::min(1.0, g.indirect_patients / (g.direct_patients * m.r));
        m.k[i].k_ind = std::min(1.0, g.direct_patients * m.r / g.indirect_patients);
    }
    return m;
}

std::vector<std::size_t> term_categories(const AdeTerm& term, const Taxonomy& t) {
    const std::size_t unclassified = ade_category_ids.size() - 1;
    std::vector<std::size_t> out;
    for (const auto& c : term.category_ids) {
        if (auto i = category_index(c)) {
            out.push_back(*i);
            continue;
        }
        std::optional<std::size_t> found;
        if (t.contains(c))
            for (const auto& a : t.ancestors_or_self(c))
                if (auto i = category_index(a); i && (!found || *i < *found))
                    found = i;
        out.push_back(found.value_or(unclassified));
    }
    if (out.empty())
        out.push_back(unclassified);
    return out;
}

AdeProfile aggregate_profile(const std::vector<WeightedGroup>& slice, const Dataset& ds) {
    AdeProfile p;
    std::set<std::string> trials;
    std::map<std::string, TermCount> weighted;
    for (const auto& g : slice) {
        p.effective_patients += g.weight * g.n_patients;
        trials.insert(g.ref.trial_id);
        for (const auto& [term, c] : g.counts) {
            auto& acc = weighted[term];
            acc.all += g.weight * c.all;
            acc.serious += g.weight * c.serious;
        }
    }
    if (!(p.effective_patients > 0))
        throw ValidationError("cannot aggregate a slice without patients");
    p.n_trials = trials.size();

    std::array<double, 13> total{};
    std::array<double, 13> serious{};
    for (const auto& [term, c] : weighted) {
        TermRate r{c.all / p.effective_patients, c.serious / p.effective_patients};
        p.terms[term] = r;
        p.overall_rate += r.rate;
        p.overall_serious_rate += r.serious_rate;
        auto cats = term_categories(ds.term(term), ds.taxonomy());
        const double share = 1.0 / static_cast<double>(cats.size());
        for (auto i : cats) {
            total[i] += r.rate * share;
            serious[i] += r.serious_rate * share;
        }
    }
    for (std::size_t i = 0; i < total.size(); ++i) {
        p.total_rate[i] = std::max(0.0, total[i]);
        p.serious_rate[i] = std::clamp(serious[i], 0.0, p.total_rate[i]);
    }
    return p;
}

std::map<std::string, TermCount> group_counts(const Dataset& ds, const GroupRef& ref) {
    std::map<std::string, TermCount> out;
    for (const auto* o : ds.observations_of(ref)) {
        auto& c = out[o->term_label];
        c.all += static_cast<double>(o->event_count);
        if (o->serious)
            c.serious += static_cast<double>(o->event_count);
    }
    return out;
}

namespace {

// Matched groups of one entry, each listed once, in entry order.
std::vector<std::string> unique_groups(const TrialMatch& e) {
    std::vector<std::string> ids;
    for (const auto& m : e.matches)
        if (std::find(ids.begin(), ids.end(), m.group_id) == ids.end())
            ids.push_back(m.group_id);
    return ids;
}

struct IndirectEntry {
    const TrialMatch* entry;
    std::vector<std::string> groups;
    ArmCount placebo_total;                    // patients only; events per term below
    std::map<std::string, TermCount> placebo;  // summed over placebo groups
    std::map<std::string, std::map<std::string, TermCount>> arms; // group -> term -> counts
};

} // namespace

ProfileSet compute_profiles(const Dataset& ds, const ResultSets& rs, ResultSetKind kind, std::size_t n_queries) {
    ProfileSet out;
    out.kind = kind;
    std::vector<std::vector<WeightedGroup>> slices(n_queries);
    std::map<GroupRef, std::map<std::string, TermCount>> counts_cache;
    auto counts_of = [&](const GroupRef& ref) -> const std::map<std::string, TermCount>& {
        auto it = counts_cache.find(ref);
        if (it == counts_cache.end())
            it = counts_cache.emplace(ref, group_counts(ds, ref)).first;
        return it->second;
    };
    auto size_of = [&](const GroupRef& ref) { return static_cast<double>(ds.group(ref).n_patients); };

    if (kind == ResultSetKind::absolute) {
        std::set<MatchedGroup> seen(rs.absolute.begin(), rs.absolute.end());
        for (const auto& m : seen) {
            out.weights.push_back({m.trial_id, m.period_index, m.group_id, m.query_index});
            slices[m.query_index].push_back({m.ref(), size_of(m.ref()), 1.0, counts_of(m.ref())});
        }
    } else {
        const auto& entries = kind == ResultSetKind::direct ? rs.direct : rs.direct_indirect;
        std::vector<IndirectEntry> indirect;
        for (const auto& e : entries) {
            if (e.direct) {
                auto ids = unique_groups(e);
                std::vector<double> sizes;
                for (const auto& id : ids)
                    sizes.push_back(size_of({e.trial_id, e.period_index, id}));
                auto w = per_trial_weights(sizes);
                out.size_weighting = true;
                for (const auto& m : e.matches) {
                    auto idx = static_cast<std::size_t>(std::find(ids.begin(), ids.end(), m.group_id) - ids.begin());
                    out.weights.push_back({m.trial_id, m.period_index, m.group_id, m.query_index, w[idx]});
                }
            } else {
                IndirectEntry ie{&e, unique_groups(e), {}, {}, {}};
                for (const auto& pid : e.placebo_group_ids) {
                    GroupRef ref{e.trial_id, e.period_index, pid};
                    ie.placebo_total.patients += size_of(ref);
                    for (const auto& [term, c] : counts_of(ref)) {
                        ie.placebo[term].all += c.all;
                        ie.placebo[term].serious += c.serious;
                    }
                }
                for (const auto& gid : ie.groups)
                    ie.arms[gid] = counts_of({e.trial_id, e.period_index, gid});
                indirect.push_back(std::move(ie));
                for (const auto& m : e.matches) {
                    GroupWeight gw{m.trial_id, m.period_index, m.group_id, m.query_index};
                    gw.source = WeightSource::indirect;
                    out.weights.push_back(gw);
                }
            }
        }

        // Placebo correction per term and seriousness level.
        std::map<std::pair<std::string, std::string>, std::map<std::string, TermCount>> corrected; // (trial, group)
        if (!indirect.empty()) {
            out.placebo_correction = true;
            std::set<std::string> universe;
            for (const auto& ie : indirect) {
                for (const auto& [term, c] : ie.placebo)
                    universe.insert(term);
                for (const auto& [gid, counts] : ie.arms)
                    for (const auto& [term, c] : counts)
                        universe.insert(term);
            }
            for (const auto& term : universe) {
                for (bool serious : {true, false}) {
                    auto level = [&](const std::map<std::string, TermCount>& m) {
                        auto it = m.find(term);
                        if (it == m.end())
                            return 0.0;
                        return serious ? it->second.serious : it->second.all - it->second.serious;
                    };
                    std::vector<PlaceboTrial> input;
                    for (const auto& ie : indirect) {
                        PlaceboTrial pt{{level(ie.placebo), ie.placebo_total.patients}, {}};
                        for (const auto& gid : ie.groups)
                            pt.arms.push_back({level(ie.arms.at(gid)),
                                               size_of({ie.entry->trial_id, ie.entry->period_index, gid})});
                        input.push_back(std::move(pt));
                    }
                    auto pc = placebo_correct(input);
                    for (std::size_t i = 0; i < indirect.size(); ++i) {
                        const auto& ie = indirect[i];
                        for (std::size_t a = 0; a < ie.groups.size(); ++a) {
                            double raw = input[i].arms[a].events;
                            double c = pc.corrected[i][a];
                            auto& tc = corrected[{ie.entry->trial_id, ie.groups[a]}][term];
                            tc.all += c;
                            if (serious)
                                tc.serious += c;
                            if (raw != 0 || c != 0)
                                out.corrections.push_back({ie.entry->trial_id, ie.entry->period_index, ie.groups[a],
                                                           term, serious, raw, c});
                        }
                    }
                }
            }

            std::vector<MixInput> mix(n_queries);
            for (const auto& gw : out.weights) {
                double n = size_of({gw.trial_id, gw.period_index, gw.group_id});
                if (gw.source == WeightSource::direct)
                    mix[gw.query_index].direct_patients += gw.w * n;
                else
                    mix[gw.query_index].indirect_patients += n;
            }
            out.mixing = mix_weights(mix);
            for (auto& gw : out.weights) {
                gw.k_dir = out.mixing->k[gw.query_index].k_dir;
                gw.k_ind = out.mixing->k[gw.query_index].k_ind;
            }
        }

        for (const auto& gw : out.weights) {
            GroupRef ref{gw.trial_id, gw.period_index, gw.group_id};
            const auto& counts = gw.source == WeightSource::direct
                                     ? counts_of(ref)
                                     : corrected[{gw.trial_id, gw.group_id}];
            slices[gw.query_index].push_back({ref, size_of(ref), gw.effective(), counts});
        }
    }

    for (auto& slice : slices) {
        if (slice.empty())
            out.profiles.emplace_back();
        else
            out.profiles.push_back(aggregate_profile(slice, ds));
    }
    return out;
}

nlohmann::json profile_to_json(const AdeProfile& p) {
    nlohmann::json cats = nlohmann::json::array();
    for (std::size_t i = 0; i < ade_category_ids.size(); ++i)
        cats.push_back({{"id", ade_category_ids[i]}, {"total_rate", p.total_rate[i]}, {"serious_rate", p.serious_rate[i]}});
    nlohmann::json terms = nlohmann::json::array();
    for (const auto& [label, r] : p.terms)
        terms.push_back({{"label", label}, {"rate", r.rate}, {"serious_rate", r.serious_rate}});
    return {{"categories", cats},
            {"terms", terms},
            {"n_trials", p.n_trials},
            {"effective_patients", p.effective_patients},
            {"overall_rate", p.overall_rate},
            {"overall_serious_rate", p.overall_serious_rate}};
}

AdeProfile profile_from_json(const nlohmann::json& j) {
    try {
        AdeProfile p;
        std::set<std::size_t> seen;
        for (const auto& c : j.at("categories")) {
            auto id = c.at("id").get<std::string>();
            auto i = category_index(id);
            if (!i)
                throw ParseError("unknown category '" + id + "'");
            if (!seen.insert(*i).second)
                throw ParseError("duplicate category '" + id + "'");
            p.total_rate[*i] = c.at("total_rate").get<double>();
            p.serious_rate[*i] = c.at("serious_rate").get<double>();
            if (p.total_rate[*i] < 0 || p.serious_rate[*i] < 0 || p.serious_rate[*i] > p.total_rate[*i])
                throw ParseError("inconsistent rates for category '" + id + "'");
        }
        if (seen.size() != ade_category_ids.size())
            throw ParseError("profile must list all 13 categories");
        if (j.contains("terms"))
            for (const auto& t : j.at("terms"))
                p.terms[t.at("label").get<std::string>()] = {t.at("rate").get<double>(),
                                                             t.at("serious_rate").get<double>()};
        p.n_trials = j.value("n_trials", std::size_t{0});
        p.effective_patients = j.value("effective_patients", 0.0);
        p.overall_rate = j.value("overall_rate", 0.0);
        p.overall_serious_rate = j.value("overall_serious_rate", 0.0);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("malformed profile JSON: ") + e.what());
    }
}

} // namespace ade
