#pragma once

#include <memory>
#include <stdexcept>
#include <thread>

#include "httplib.h"

#include "teta/service.hpp"

namespace teta::testing {

// A prediction service listening on an ephemeral loopback port.
class ServiceUnderTest {
 public:
  explicit ServiceUnderTest(std::shared_ptr<const ModelBundle> bundle)
      : service_(std::move(bundle)) {
    register_routes(server_, service_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    if (port_ <= 0) throw std::runtime_error("cannot bind a test port");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~ServiceUnderTest() {
    server_.stop();
    thread_.join();
  }
  ServiceUnderTest(const ServiceUnderTest&) = delete;
  ServiceUnderTest& operator=(const ServiceUnderTest&) = delete;

  int port() const { return port_; }
  PredictionService& service() { return service_; }
  httplib::Client client() const {
    httplib::Client c("127.0.0.1", port_);
    c.set_tcp_nodelay(true);
    return c;
  }

 private:
  PredictionService service_;
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

}  // namespace teta::testing
