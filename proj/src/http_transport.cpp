#include <httplib.h>

#include "alignkit/gateway.hpp"

namespace alignkit {

TransportReply HttpTransport::post(const EndpointConfig& cfg, const std::string& body) {
  httplib::Client client(cfg.base_url);
  const auto timeout = std::chrono::milliseconds(cfg.timeout_ms);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  if (!cfg.api_key.empty()) client.set_bearer_token_auth(cfg.api_key);

  auto res = client.Post(cfg.chat_path, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
    throw TransportError("POST " + cfg.base_url + cfg.chat_path + ": " + httplib::to_string(err), timed_out);
  }
  return {res->status, res->body};
}

}  // namespace alignkit
