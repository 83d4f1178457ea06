#pragma once

// HTTP facade: the search URL scheme, search responses with tab data and
// glyphs, autocomplete, taxonomy browsing, trial detail and static assets.

#include "ademiner/error.hpp"
#include "ademiner/glyph.hpp"
#include "ademiner/normalization.hpp"

#include <json.hpp>

#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace ade {

// Bad request parameter; reported as HTTP 400 naming the parameter.
class ParamError : public ValidationError {
public:
    ParamError(std::string param, const std::string& what)
        : ValidationError(param + ": " + what), param_(std::move(param)) {}
    const std::string& param() const noexcept { return param_; }

private:
    std::string param_;
};

using Params = std::vector<std::pair<std::string, std::string>>;

// Percent-decodes a query string ('+' is a space). A full URL is accepted:
// everything up to the first '?' is dropped.
Params parse_query_string(std::string_view query);
std::string url_encode(std::string_view s);

struct SearchRequest {
    QuerySpec spec; // exclusions already computed
    ResultSetKind kind = ResultSetKind::direct;
    std::string lang = "en";
    int tab = 0;
    bool include_titration = false;
    std::optional<std::size_t> overlay; // 0-based query index drawn as wireframe

    bool operator==(const SearchRequest&) const = default;
};

// `group_N_ap` takes comma-separated labels or ids, a trailing "etc" making
// the list open; `group_N_release|route|dose|unit|intakes` align with it by
// position (a single value applies to every principle). Throws ParamError.
SearchRequest parse_search_params(const Params& params, const Taxonomy& t);
SearchRequest parse_search_params(std::string_view query, const Taxonomy& t);
std::string serialize_search_params(const SearchRequest& req);

// Human-readable description of one query group ("oral tapentadol").
std::string describe_group(const GroupQuery& gq, const Taxonomy& t, std::string_view lang);

nlohmann::json search(const Dataset& ds, const SearchRequest& req);
nlohmann::json trial_detail(const Dataset& ds, const ClinicalTrial& trial, std::string_view lang);

struct HttpResponse {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

class Service {
public:
    explicit Service(std::shared_ptr<const Dataset> dataset, std::string assets_dir = {});

    HttpResponse handle(std::string_view method, std::string_view path, const Params& params) const;

    std::shared_ptr<const Dataset> snapshot() const;
    void swap_dataset(std::shared_ptr<const Dataset> dataset);

private:
    HttpResponse route(const Dataset& ds, std::string_view path, const Params& params) const;
    HttpResponse static_asset(std::string_view path) const;

    mutable std::mutex mutex_;
    std::shared_ptr<const Dataset> dataset_;
    std::string assets_dir_;
};

// Blocks serving `service` over HTTP until the process is stopped.
void serve_http(const Service& service, const std::string& host, int port);

} // namespace ade
