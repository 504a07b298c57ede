#pragma once

#include <memory>
#include <string>

#include "kgx/error.hpp"
#include "kgx/store.hpp"

namespace kgx {

// HTTP status used for an error code: 400 for bad input, 404 for unknown
// ids, 409 for comparability errors, 500 otherwise.
int http_status_for(ErrorCode code);

// {"error":{"code":..., "message":...}}
std::string error_body(ErrorCode code, const std::string& message);

// JSON object describing one stored system.
std::string system_entry_json(const SystemEntry& e);

// REST front end over a Store:
//   POST   /api/systems                               native system output -> {id, created}
//   GET    /api/systems                               {systems: [...]}
//   GET    /api/systems/{id}                          entry
//   GET    /api/systems/{id}/analysis                 ?metric=&feature=&ci=&ci_level=&ci_seed=&ci_resamples=
//   GET    /api/compare                               ?ids=a,b&metric=&feature=
//   GET    /api/systems/{id}/buckets/{feature}/{label}/examples   ?offset=&limit=
//   DELETE /api/systems/{id}
class ApiServer {
public:
    explicit ApiServer(Store& store);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    // Binds to host:port (port 0 picks a free one) and returns the port.
    // Throws Error(Storage) if binding fails.
    int bind(const std::string& host, int port);
    void run();    // serve until stop()
    void start();  // serve on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace kgx
