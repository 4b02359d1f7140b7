#pragma once

#include <memory>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "becaptcha/bundle.hpp"

namespace becaptcha {

// Thin HTTP shell over verify(): POST /verify scores one request, GET
// /healthz answers liveness probes. The bundle is immutable and shared by
// every worker thread.
inline void attach_verify_routes(httplib::Server& server,
                                 std::shared_ptr<const ModelBundle> bundle) {
  server.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    res.set_content("{\"status\":\"ok\"}", "application/json");
  });

  server.Post("/verify", [bundle](const httplib::Request& req, httplib::Response& res) {
    try {
      nlohmann::json body;
      try {
        body = nlohmann::json::parse(req.body);
      } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::MalformedRequest, std::string("invalid JSON body: ") + e.what());
      }
      const VerifyRequest request = parse_verify_request(body);
      const VerifyResponse response = verify(*bundle, request);
      res.set_content(response.to_json().dump(), "application/json");
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(nlohmann::json{{"error", e.what()}}.dump(), "application/json");
    }
  });
}

inline int run_service(std::shared_ptr<const ModelBundle> bundle, const std::string& host,
                       int port) {
  httplib::Server server;
  attach_verify_routes(server, std::move(bundle));
  return server.listen(host, port) ? 0 : 1;
}

}  // namespace becaptcha
