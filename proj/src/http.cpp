#include "ademiner/service.hpp"

#include <httplib.h>

namespace ade {

void serve_http(const Service& service, const std::string& host, int port) {
    httplib::Server server;
    auto handler = [&](const httplib::Request& req, httplib::Response& res) {
        Params params(req.params.begin(), req.params.end());
        auto out = service.handle(req.method, req.path, params);
        res.status = out.status;
        res.set_content(out.body, out.content_type);
    };
    server.Get(".*", handler);
    server.Post(".*", handler);
    if (!server.listen(host, port))
        throw Error("cannot listen on " + host + ":" + std::to_string(port));
}

} // namespace ade
