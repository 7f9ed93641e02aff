#pragma once

#include <memory>
#include <string>

#include "prunerank/config.hpp"
#include "prunerank/scorer.hpp"

namespace httplib {
class Server;
}

namespace prunerank {

// Stateless HTTP front end: GET /healthz, POST /v1/prune, POST /v1/score.
// Handlers share one immutable scorer, so identical requests always get
// identical replies regardless of order or interleaving.
class PruningService {
 public:
  explicit PruningService(ServiceConfig config);
  ~PruningService();

  // For remote backends, verifies the upstream scorer answers at all.
  // Throws RemoteUnavailable when it does not.
  void check_scorer() const;

  // Binds the configured listen address (port 0 picks a free one) and
  // returns the bound port. Throws BindError.
  int bind();

  // Serves until stop(); call after bind(). Returns true on clean shutdown.
  bool serve();

  // Blocks until the server accepts connections.
  void wait_ready() const;

  void stop();

 private:
  void setup_routes();

  ServiceConfig config_;
  std::unique_ptr<Scorer> scorer_;
  std::unique_ptr<httplib::Server> server_;
};

// Splits "host:port" (port may be 0). Throws ConfigError on nonsense.
std::pair<std::string, int> split_listen_address(const std::string& address);

}  // namespace prunerank
