#pragma once

#include <deque>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>

namespace support {

struct Canned {
  int status = 200;
  std::string body;
};

struct Received {
  std::string method;
  std::string path;
  std::string body;
  std::string authorization;
};

// In-process server answering every request from a queue of canned
// responses; the last one repeats once the queue runs dry.
class StubServer {
 public:
  StubServer() {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
      std::lock_guard lock(mutex_);
      received_.push_back({req.method, req.path, req.body, req.get_header_value("Authorization")});
      Canned c = replies_.empty() ? Canned{404, "{}"} : replies_.front();
      if (replies_.size() > 1) replies_.pop_front();
      res.status = c.status;
      res.set_content(c.body, "application/json");
    };
    server_.Get(".*", handler);
    server_.Post(".*", handler);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~StubServer() {
    server_.stop();
    thread_.join();
  }

  void reply(std::vector<Canned> replies) {
    std::lock_guard lock(mutex_);
    replies_.assign(replies.begin(), replies.end());
    received_.clear();
  }
  std::vector<Received> received() const {
    std::lock_guard lock(mutex_);
    return received_;
  }
  std::string url(const std::string& base = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + base;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  mutable std::mutex mutex_;
  std::deque<Canned> replies_;
  std::vector<Received> received_;
};

}  // namespace support
