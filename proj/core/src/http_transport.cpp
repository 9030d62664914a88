#include <memory>
#include <string>

#include "httplib.h"
#include "pmeval/error.hpp"
#include "pmeval/ingest.hpp"

namespace pmeval {
namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(std::string scheme_host_port, std::string path_prefix)
      : origin_(std::move(scheme_host_port)), prefix_(std::move(path_prefix)) {}

  HttpResponse get(const std::string& target, const HttpHeaders& headers) override {
    // One client per call: httplib clients are not safe to share across threads.
    httplib::Client client(origin_);
    client.set_connection_timeout(10);
    client.set_read_timeout(60);
    client.set_follow_location(true);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    auto res = client.Get(prefix_ + target, h);
    if (!res) {
      throw Error(ErrorCode::HttpError, "request to " + origin_ + prefix_ + target +
                                            " failed: " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
  }

 private:
  std::string origin_;
  std::string prefix_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_http_transport(const std::string& base_url) {
  const auto scheme_end = base_url.find("://");
  if (base_url.empty() || scheme_end == std::string::npos) {
    throw Error(ErrorCode::ConfigError, "API base URL must look like https://host[/prefix], got '" + base_url + "'");
  }
  const auto path_start = base_url.find('/', scheme_end + 3);
  std::string origin = base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? std::string() : base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return std::make_shared<HttplibTransport>(std::move(origin), std::move(prefix));
}

}  // namespace pmeval
