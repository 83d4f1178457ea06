#pragma once

// Fixture loading, random world generators and brute-force oracles shared by
// the unit, property and acceptance tests.

#include "ademiner/ingest.hpp"
#include "ademiner/model.hpp"
#include "ademiner/normalization.hpp"
#include "ademiner/query.hpp"
#include "ademiner/taxonomy.hpp"

#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

namespace testkit {

using Rng = std::mt19937_64;

std::string fixture_path(const std::string& rel);
std::string data_path(const std::string& rel);

ade::IngestInputs fixture_inputs();
// Ingested once per process.
const ade::Dataset& fixture_dataset();

// ---------------------------------------------------------------------------
// Generators

int uniform(Rng& rng, int lo, int hi); // inclusive
bool chance(Rng& rng, double p);

// Random multi-parent DAG of one kind: node i may only have parents j < i,
// and the returned list is shuffled so load order is not topological.
std::vector<ade::TaxonomyNode> random_dag(Rng& rng, int n, ade::NodeKind kind, const std::string& prefix,
                                          double edge_p);

// Random dataset with at most `max_trials` trials over a random taxonomy.
ade::Dataset random_dataset(Rng& rng, int max_trials = 20);

// Every group size and event count multiplied by `factor`.
ade::Dataset scaled(const ade::Dataset& ds, long factor);

// Random valid spec (exclusions computed with probability 0.7).
ade::QuerySpec random_query(Rng& rng, const ade::Dataset& ds);

// ---------------------------------------------------------------------------
// Oracles (written from the definitions, sharing no code with the engine)

// Ancestor closure by breadth-first search over parent lists.
std::set<std::string> ancestors_bfs(const ade::Taxonomy& t, const std::string& id);

ade::ResultSets oracle_execute(const ade::Dataset& ds, const ade::QuerySpec& qs, ade::ExecuteOptions opts = {});

// Per query index: category rates, serious rates, term rates and the
// effective patient count, recomputed by explicit weighted sums.
struct OracleProfile {
    std::array<double, 13> total{};
    std::array<double, 13> serious{};
    std::map<std::string, double> term_rate;
    std::map<std::string, double> term_serious;
    double effective_patients = 0;
};
std::vector<std::optional<OracleProfile>> oracle_profiles(const ade::Dataset& ds, const ade::ResultSets& rs,
                                                          ade::ResultSetKind kind, std::size_t n_queries);

bool close_rel(double a, double b, double rel = 1e-9, double abs_floor = 1e-12);

// Distinct matched groups and their patient total.
long patients_of(const ade::Dataset& ds, const std::vector<ade::MatchedGroup>& groups);
std::vector<ade::MatchedGroup> flatten(const std::vector<ade::TrialMatch>& entries);

} // namespace testkit
